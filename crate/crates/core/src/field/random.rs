use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::norms::lp_norm;
use super::spectral::{signed_index, Fourier};
use super::{BoundaryKind, Domain, Field, Grid};
use crate::error::{Error, Result};

/// Seeded band-limited random data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    pub seed: u64,
    /// Highest mode index used per axis.
    pub kmax: usize,
    /// Rescale to this L² norm when set.
    pub l2_norm: Option<f64>,
    /// Drop the mean (periodic grids only).
    pub zero_mean: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            seed: 0,
            kmax: 8,
            l2_norm: Some(1.0),
            zero_mean: true,
        }
    }
}

/// Random field compatible with the grid's boundary conditions. Periodic
/// data keeps the mode box |j| ≤ kmax; interval data is a sine series
/// (multiplied by a clamped bump for Dirichlet ends).
pub fn random_field(grid: &Arc<Grid>, spec: &RandomSpec) -> Result<Field> {
    if spec.kmax == 0 {
        return Err(Error::param("kmax", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = match grid.domain() {
        Domain::Periodic { .. } => {
            let f = Fourier::for_grid(grid)?;
            if f.shape().iter().any(|&n| 3 * spec.kmax >= n) {
                return Err(Error::param("kmax", "band must lie inside the dealiased range"));
            }
            let mut s = vec![Complex64::new(0.0, 0.0); f.len()];
            let shape = f.shape().to_vec();
            let mut idx = vec![0usize; shape.len()];
            for z in s.iter_mut() {
                let ks: Vec<i64> = idx.iter().zip(&shape).map(|(&j, &n)| signed_index(j, n)).collect();
                let inside = ks.iter().all(|k| k.unsigned_abs() as usize <= spec.kmax);
                let is_mean = ks.iter().all(|&k| k == 0);
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                if inside && !(is_mean && spec.zero_mean) {
                    *z = Complex64::new(re, im);
                }
                for a in (0..shape.len()).rev() {
                    idx[a] += 1;
                    if idx[a] < shape[a] {
                        break;
                    }
                    idx[a] = 0;
                }
            }
            f.inverse_real(&s)
        }
        Domain::Interval { half_length, bc } => {
            let l = *half_length;
            let coeffs: Vec<f64> = (1..=spec.kmax)
                .map(|k| rng.gen_range(-1.0..1.0) / k as f64)
                .collect();
            grid.coordinates(0)
                .iter()
                .map(|&x| {
                    let s: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| c * ((i + 1) as f64 * PI * (x + l) / (2.0 * l)).sin())
                        .sum();
                    match bc {
                        BoundaryKind::Navier => s,
                        BoundaryKind::Dirichlet => s * (1.0 - (x / l).powi(2)).powi(2),
                    }
                })
                .collect()
        }
    };
    let mut field = Field::new(grid.clone(), values)?;
    if let Domain::Interval { .. } = grid.domain() {
        let mut v = field.into_values();
        let last = v.len() - 1;
        v[0] = 0.0;
        v[last] = 0.0;
        field = Field::new(grid.clone(), v)?;
    }
    if let Some(target) = spec.l2_norm {
        let n = lp_norm(&field, 2.0)?;
        if n > 0.0 {
            field = field.map(|x| x * target / n)?;
        }
    }
    Ok(field)
}
