use num_complex::Complex64;

use super::spectral::Fourier;
use super::stencil::{clamped_derivative, odd_extend, restrict};
use super::{BoundaryKind, Domain, Field, VectorField};
use crate::error::{Error, Result};

/// Relative tolerance under which a field counts as mean-free.
pub(crate) const MEAN_TOL: f64 = 1e-10;

/// ∂^order v along `axis`, for `order` in 1..=4.
///
/// Periodic grids differentiate spectrally (Nyquist mode dropped for odd
/// orders). Navier intervals differentiate the odd extension, which assumes
/// data compatible with v = D²v = 0 at the ends. Clamped intervals use
/// second-order central differences.
pub fn derivative(v: &Field, axis: usize, order: u32) -> Result<Field> {
    if !(1..=4).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let grid = v.grid();
    grid.check_axis(axis)?;
    let values = match grid.domain() {
        Domain::Periodic { .. } => {
            let f = Fourier::for_grid(grid)?;
            let mult = f.derivative_multiplier(axis, order);
            let mut s = f.forward_real(v.values());
            s.iter_mut().zip(&mult).for_each(|(z, m)| *z *= m);
            f.inverse_real(&s)
        }
        Domain::Interval { half_length, bc: BoundaryKind::Navier } => {
            let w = odd_extend(v.values());
            let f = Fourier::new(&[w.len()], &[4.0 * half_length]);
            let mult = f.derivative_multiplier(0, order);
            let mut s = f.forward_real(&w);
            s.iter_mut().zip(&mult).for_each(|(z, m)| *z *= m);
            restrict(&f.inverse_real(&s))
        }
        Domain::Interval { bc: BoundaryKind::Dirichlet, .. } => {
            clamped_derivative(v.values(), grid.spacing(0), order)
        }
    };
    Field::new(grid.clone(), values)
}

/// First derivatives along every axis.
pub fn gradient(v: &Field) -> Result<VectorField> {
    let comps = (0..v.grid().dim())
        .map(|a| derivative(v, a, 1).map(Field::into_values))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(v.grid().clone(), comps)
}

/// (-Δ)^l v on a periodic grid via the multiplier |ξ|^{2l}.
///
/// For l < 0 the zero mode must vanish (relative to max(1, sup|v|)); it is
/// then mapped to zero.
pub fn neg_laplacian_power(v: &Field, l: f64) -> Result<Field> {
    if !l.is_finite() {
        return Err(Error::param("l", "power must be finite"));
    }
    let grid = v.grid();
    let f = Fourier::for_grid(grid)?;
    let mut s = f.forward_real(v.values());
    let n = f.len() as f64;
    if l < 0.0 {
        let mean = s[0].re / n;
        if mean.abs() > MEAN_TOL * v.sup_norm().max(1.0) {
            return Err(Error::NonzeroMean { mean });
        }
    }
    if l == 0.0 {
        return Ok(v.clone());
    }
    let k2 = f.k_squared();
    for (z, &q) in s.iter_mut().zip(&k2) {
        *z = if q == 0.0 { Complex64::new(0.0, 0.0) } else { *z * q.powf(l) };
    }
    Field::new(grid.clone(), f.inverse_real(&s))
}
