//! Multi-dimensional FFTs on row-major arrays and wavenumber bookkeeping.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{Domain, Grid};

/// FFT plans and wavenumbers for a periodic box.
pub(crate) struct Fourier {
    shape: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Angular wavenumber per axis per index.
    k: Vec<Vec<f64>>,
}

/// Signed frequency index for position `j` of an `n`-point transform.
pub(crate) fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl Fourier {
    pub fn new(shape: &[usize], extents: &[f64]) -> Fourier {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let mut strides = vec![1; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        let k = shape
            .iter()
            .zip(extents)
            .map(|(&n, &ext)| (0..n).map(|j| 2.0 * PI / ext * signed_index(j, n) as f64).collect())
            .collect();
        Fourier {
            shape: shape.to_vec(),
            strides,
            len: shape.iter().product(),
            forward,
            inverse,
            k,
        }
    }

    pub fn for_grid(grid: &Grid) -> Result<Fourier> {
        match grid.domain() {
            Domain::Periodic { extents, .. } => Ok(Fourier::new(grid.points(), extents)),
            Domain::Interval { .. } => Err(Error::NotPeriodic),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.k[axis]
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        debug_assert_eq!(data.len(), self.len);
        for (a, plan) in plans.iter().enumerate() {
            let n = self.shape[a];
            let stride = self.strides[a];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in 0..self.len / block {
                let base = outer * block;
                for inner in 0..stride {
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = data[base + j * stride + inner];
                    }
                    plan.process(&mut line);
                    for (j, z) in line.iter().enumerate() {
                        data[base + j * stride + inner] = *z;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, normalized so that it undoes `forward`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.len as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut data = spectrum.to_vec();
        self.inverse(&mut data);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Calls `f(flat, wavevector, nyquist_flags)` for each mode.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, &[f64], &[bool])) {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        let mut xi = vec![0.0; d];
        let mut nyq = vec![false; d];
        for flat in 0..self.len {
            for a in 0..d {
                xi[a] = self.k[a][idx[a]];
                nyq[a] = 2 * idx[a] == self.shape[a];
            }
            f(flat, &xi, &nyq);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// |ξ|² for every mode.
    pub fn k_squared(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        self.for_each_mode(|i, xi, _| out[i] = xi.iter().map(|k| k * k).sum());
        out
    }

    /// Two-thirds rule: keep modes with |j| < n/3 along every axis.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let mut out = vec![true; self.len];
        let d = self.dim();
        let mut idx = vec![0usize; d];
        for keep in out.iter_mut() {
            *keep = (0..d).all(|a| 3 * signed_index(idx[a], self.shape[a]).unsigned_abs() < self.shape[a] as u64);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.shape[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// Multiplier for ∂^order along `axis`; Nyquist is dropped for odd orders.
    pub fn derivative_multiplier(&self, axis: usize, order: u32) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len];
        self.for_each_mode(|i, xi, nyq| {
            if order % 2 == 1 && nyq[axis] {
                return;
            }
            out[i] = Complex64::new(0.0, xi[axis]).powu(order);
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let f = Fourier::new(&[8, 16], &[1.0, 2.0]);
        let v: Vec<f64> = (0..128).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let back = f.inverse_real(&f.forward_real(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_wavenumber() {
        let n = 16;
        let f = Fourier::new(&[n], &[2.0 * PI]);
        let v: Vec<f64> = (0..n).map(|j| (3.0 * 2.0 * PI * j as f64 / n as f64).cos()).collect();
        let s = f.forward_real(&v);
        assert!((s[3].re - n as f64 / 2.0).abs() < 1e-12);
        assert!((s[n - 3].re - n as f64 / 2.0).abs() < 1e-12);
        assert_eq!(f.wavenumbers(0)[3], 3.0);
        assert_eq!(f.wavenumbers(0)[n - 3], -3.0);
    }

    #[test]
    fn mask_keeps_below_one_third() {
        let f = Fourier::new(&[12], &[1.0]);
        let m = f.dealias_mask();
        let kept: Vec<i64> = (0..12).filter(|&j| m[j]).map(|j| signed_index(j, 12)).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, -3, -2, -1]);
    }
}
