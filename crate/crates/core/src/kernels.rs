//! The polyharmonic heat kernel b(x,t) = t^{-N/2m} F(x/t^{1/2m}).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::spectral::Fourier;
use crate::field::{Domain, Field, Grid};

/// Symbol of b(t): exp(-|ξ|^{2m} t) at |ξ|² = `k2`.
pub fn heat_multiplier(m: u32, t: f64, k2: f64) -> f64 {
    (-k2.powi(m as i32) * t).exp()
}

/// b(t) * v on a periodic grid.
pub fn heat_semigroup_apply(m: u32, t: f64, v: &Field) -> Result<Field> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param("t", "must be nonnegative"));
    }
    if t == 0.0 {
        return Ok(v.clone());
    }
    let f = Fourier::for_grid(v.grid())?;
    let k2 = f.k_squared();
    let mut s = f.forward_real(v.values());
    s.iter_mut().zip(&k2).for_each(|(z, &q)| *z *= heat_multiplier(m, t, q));
    Field::new(v.grid().clone(), f.inverse_real(&s))
}

/// Parameters of the envelope |F(y)| ≈ D y^{-(m-1)/(2m-1)} e^{-d y^α}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub alpha: f64,
    /// Samples used by the fit.
    pub samples: usize,
}

/// Rescaled kernel profile F on a centred periodic box.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub m: u32,
    pub profile: Field,
    /// Quadrature of ∫F.
    pub mass: f64,
    pub decay: Option<DecayFit>,
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.profile.grid().dim()
    }

    /// ∫|F|.
    pub fn l1_norm(&self) -> f64 {
        self.profile.grid().cell_volume() * self.profile.values().iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Symbol level at the Nyquist frequency below which aliasing is negligible.
const TAIL_TOL: f64 = 1e-14;
/// Largest |F| near the box edge, relative to the peak, before the
/// periodization error is considered visible.
const EDGE_TOL: f64 = 1e-12;

/// Computes F as the inverse transform of exp(-|ξ|^{2m}) on a periodic grid.
/// The box must be wide enough for F to have decayed and fine enough that
/// the symbol is negligible at the Nyquist frequency.
pub fn fundamental_solution(m: u32, grid: &Arc<Grid>) -> Result<Kernel> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let Domain::Periodic { lower, .. } = grid.domain() else {
        return Err(Error::NotPeriodic);
    };
    let f = Fourier::for_grid(grid)?;
    for a in 0..grid.dim() {
        let nyq = PI / grid.spacing(a);
        if heat_multiplier(m, 1.0, nyq * nyq) > TAIL_TOL {
            return Err(Error::KernelDomain(format!(
                "axis {a}: spacing {} too coarse (symbol at Nyquist {:e})",
                grid.spacing(a),
                heat_multiplier(m, 1.0, nyq * nyq)
            )));
        }
    }
    let mut s = vec![Complex64::new(0.0, 0.0); f.len()];
    f.for_each_mode(|i, xi, _| {
        let k2: f64 = xi.iter().map(|k| k * k).sum();
        let phase: f64 = xi.iter().zip(lower).map(|(k, lo)| k * lo).sum();
        s[i] = Complex64::from_polar(heat_multiplier(m, 1.0, k2), phase);
    });
    let vol = grid.cell_volume();
    let values: Vec<f64> = f.inverse_real(&s).into_iter().map(|x| x / vol).collect();
    let profile = Field::new(grid.clone(), values)?;

    let peak = profile.sup_norm();
    let extents = grid.extents();
    let mut tail: f64 = 0.0;
    grid.for_each_point(|i, y| {
        let near_edge = y.iter().zip(lower.iter().zip(&extents)).any(|(&x, (&lo, &ext))| {
            let d = (x - lo).min(lo + ext - x);
            d < 0.05 * ext
        });
        if near_edge {
            tail = tail.max(profile.values()[i].abs());
        }
    });
    if tail > EDGE_TOL * peak {
        return Err(Error::KernelDomain(format!(
            "|F| reaches {tail:e} near the boundary; enlarge the box"
        )));
    }
    let mass = vol * profile.values().iter().sum::<f64>();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::KernelDomain(format!("mass {mass} differs from 1")));
    }
    Ok(Kernel {
        m,
        profile,
        mass,
        decay: None,
    })
}

/// Centred cube [-w, w)^dim with n points per axis.
pub fn kernel_grid(dim: usize, half_width: f64, n: usize) -> Result<Arc<Grid>> {
    Grid::periodic(vec![-half_width; dim], vec![2.0 * half_width; dim], vec![n; dim])
}

/// sup|BF| with BF = -(-Δ)^m F + (1/2m) y·∇F + (N/2m) F.
pub fn kernel_residual(kernel: &Kernel) -> Result<f64> {
    let grid = kernel.profile.grid();
    let f = Fourier::for_grid(grid)?;
    let m = kernel.m;
    let dim = grid.dim();
    let s = f.forward_real(kernel.profile.values());
    let k2 = f.k_squared();
    let lap: Vec<Complex64> = s.iter().zip(&k2).map(|(z, &q)| -z * q.powi(m as i32)).collect();
    let mut out = f.inverse_real(&lap);
    let two_m = 2.0 * m as f64;
    for a in 0..dim {
        let mult = f.derivative_multiplier(a, 1);
        let d: Vec<Complex64> = s.iter().zip(&mult).map(|(z, k)| z * k).collect();
        let grad = f.inverse_real(&d);
        grid.for_each_point(|i, y| out[i] += y[a] * grad[i] / two_m);
    }
    let c = dim as f64 / two_m;
    Ok(out
        .iter()
        .zip(kernel.profile.values())
        .fold(0.0f64, |r, (b, f)| r.max((b + c * f).abs())))
}

/// Smallest y used by the decay fit.
pub const FIT_Y_MIN: f64 = 3.0;
/// Fraction of the half-width used by the decay fit.
pub const FIT_Y_FRACTION: f64 = 0.8;
const FIT_FLOOR: f64 = 1e-13;
const FIT_MIN_SAMPLES: usize = 4;

/// Least-squares fit of ln|F| + c ln y = ln D - d y^α with c = (m-1)/(2m-1),
/// over the local maxima of |F| (all samples for m = 1) on the positive
/// half-line. α is found by a coarse scan followed by golden-section
/// refinement. The triple is also stored on the kernel.
pub fn fit_decay(kernel: &mut Kernel) -> Result<DecayFit> {
    let grid = kernel.profile.grid().clone();
    if grid.dim() != 1 {
        return Err(Error::param("kernel", "decay fit needs a one-dimensional profile"));
    }
    let y = grid.coordinates(0);
    let a: Vec<f64> = kernel.profile.values().iter().map(|v| v.abs()).collect();
    let y_max = grid.lower()[0] + grid.extents()[0];
    let floor = FIT_FLOOR * kernel.profile.sup_norm();
    let m = kernel.m;
    let idx: Vec<usize> = (1..a.len() - 1)
        .filter(|&j| y[j] >= FIT_Y_MIN && y[j] <= FIT_Y_FRACTION * y_max && a[j] > floor)
        .filter(|&j| m == 1 || (a[j] >= a[j - 1] && a[j] >= a[j + 1]))
        .collect();
    if idx.len() < FIT_MIN_SAMPLES {
        return Err(Error::TooFewPeaks {
            found: idx.len(),
            needed: FIT_MIN_SAMPLES,
        });
    }
    let c = (m as f64 - 1.0) / (2.0 * m as f64 - 1.0);
    let ys: Vec<f64> = idx.iter().map(|&j| y[j]).collect();
    let zs: Vec<f64> = idx.iter().map(|&j| a[j].ln() + c * y[j].ln()).collect();

    // Linear least squares of z = c0 - d·y^α for fixed α; returns (ssr, c0, d).
    let solve = |alpha: f64| {
        let n = ys.len() as f64;
        let u: Vec<f64> = ys.iter().map(|y| y.powf(alpha)).collect();
        let su: f64 = u.iter().sum();
        let suu: f64 = u.iter().map(|x| x * x).sum();
        let sz: f64 = zs.iter().sum();
        let suz: f64 = u.iter().zip(&zs).map(|(a, b)| a * b).sum();
        let det = n * suu - su * su;
        let slope = (n * suz - su * sz) / det;
        let c0 = (sz - slope * su) / n;
        let ssr: f64 = u.iter().zip(&zs).map(|(x, z)| (c0 + slope * x - z).powi(2)).sum();
        (ssr, c0, -slope)
    };
    let (lo, hi, step) = (0.8, 3.0, 0.01);
    let mut best = lo;
    let mut best_ssr = f64::INFINITY;
    let mut alpha = lo;
    while alpha <= hi {
        let r = solve(alpha).0;
        if r < best_ssr {
            best_ssr = r;
            best = alpha;
        }
        alpha += step;
    }
    let (mut a_lo, mut a_hi) = ((best - step).max(lo), (best + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while a_hi - a_lo > 1e-10 {
        let x1 = a_hi - g * (a_hi - a_lo);
        let x2 = a_lo + g * (a_hi - a_lo);
        if solve(x1).0 < solve(x2).0 {
            a_hi = x2;
        } else {
            a_lo = x1;
        }
    }
    let alpha = 0.5 * (a_lo + a_hi);
    let (_, c0, d) = solve(alpha);
    let fit = DecayFit {
        amplitude: c0.exp(),
        rate: d,
        alpha,
        samples: ys.len(),
    };
    kernel.decay = Some(fit);
    Ok(fit)
}
