use super::calculus::MEAN_TOL;
use super::spectral::Fourier;
use super::{Domain, Field, Grid};
use crate::error::{Error, Result};

/// Norms of a scalar field. `mean` is the signed average ∫v / |Ω|.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    /// `(p, ‖v‖_p)` for each requested exponent.
    pub lp: Vec<(f64, f64)>,
    pub linf: f64,
    /// Present on periodic grids when the mean vanishes.
    pub hminus1: Option<f64>,
    pub mean: f64,
}

impl NormReport {
    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// Quadrature weights: rectangle rule on periodic grids, trapezoid on intervals.
pub(crate) fn quadrature_weights(grid: &Grid) -> Vec<f64> {
    let mut w = vec![grid.cell_volume(); grid.len()];
    if let Domain::Interval { .. } = grid.domain() {
        w[0] *= 0.5;
        let last = w.len() - 1;
        w[last] *= 0.5;
    }
    w
}

pub(crate) fn integrate(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    quadrature_weights(grid).iter().enumerate().map(|(i, w)| w * f(i)).sum()
}

pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if p.fract() == 0.0 && p.abs() <= 16.0 {
        a.powi(p as i32)
    } else {
        (p * a.ln()).exp()
    }
}

/// ‖v‖_p by quadrature; `p = ∞` gives the sup norm.
pub fn lp_norm(v: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(v.sup_norm());
    }
    let vals = v.values();
    let s = integrate(v.grid(), |i| abs_pow(vals[i], p));
    Ok(if p == 2.0 { s.sqrt() } else { s.powf(1.0 / p) })
}

pub(crate) fn hminus1(v: &Field) -> Option<f64> {
    let grid = v.grid();
    let f = Fourier::for_grid(grid).ok()?;
    let s = f.forward_real(v.values());
    let n = f.len() as f64;
    if (s[0].re / n).abs() > MEAN_TOL * v.sup_norm().max(1.0) {
        return None;
    }
    let k2 = f.k_squared();
    let sum: f64 = s
        .iter()
        .zip(&k2)
        .filter(|(_, &q)| q > 0.0)
        .map(|(z, q)| z.norm_sqr() / q)
        .sum();
    Some((grid.volume() / (n * n) * sum).sqrt())
}

/// L², the requested L^p norms, sup norm, H⁻¹ (periodic, mean-free) and mean.
pub fn norms(v: &Field, ps: &[f64]) -> Result<NormReport> {
    let lp = ps
        .iter()
        .map(|&p| lp_norm(v, p).map(|n| (p, n)))
        .collect::<Result<Vec<_>>>()?;
    let vals = v.values();
    Ok(NormReport {
        l2: lp_norm(v, 2.0)?,
        lp,
        linf: v.sup_norm(),
        hminus1: hminus1(v),
        mean: integrate(v.grid(), |i| vals[i]) / v.grid().volume(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::BoundaryKind;

    #[test]
    fn sine_norms() {
        let g = Grid::periodic_1d(0.0, 2.0 * PI, 64).unwrap();
        let v = Field::from_fn(g, |x| x[0].sin()).unwrap();
        let r = norms(&v, &[4.0]).unwrap();
        assert!((r.l2 - PI.sqrt()).abs() < 1e-13);
        assert!((r.hminus1.unwrap() - PI.sqrt()).abs() < 1e-13);
        // ∫ sin⁴ = 3π/4
        assert!((r.lp(4.0).unwrap() - (0.75 * PI).powf(0.25)).abs() < 1e-13);
        assert!(r.mean.abs() < 1e-15);
    }

    #[test]
    fn p_below_one_is_rejected() {
        let g = Grid::periodic_1d(0.0, 1.0, 8).unwrap();
        assert!(matches!(lp_norm(&Field::zeros(g), 0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn constant_has_no_hminus1() {
        let g = Grid::periodic_1d(0.0, 1.0, 8).unwrap();
        let v = Field::new(g, vec![2.0; 8]).unwrap();
        let r = norms(&v, &[]).unwrap();
        assert_eq!(r.hminus1, None);
        assert_eq!(r.mean, 2.0);
    }

    #[test]
    fn trapezoid_on_interval() {
        let g = Grid::interval(1.0, 65, BoundaryKind::Dirichlet).unwrap();
        let v = Field::new(g, vec![1.0; 65]).unwrap();
        assert!((lp_norm(&v, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }
}
