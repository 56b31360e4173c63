use super::spectral::Fourier;
use super::stencil::odd_extend;
use super::{BoundaryKind, Domain, Field};
use crate::error::{Error, Result};

/// One side-by-side evaluation of an inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            lhs,
            rhs,
            satisfied: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
        }
    }
}

/// The two one-dimensional interpolation facts used by the energy estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationReport {
    /// ∫|Dv|² ≤ (∫v²)^{1/2} (∫|D²v|²)^{1/2}
    pub gagliardo: InequalityCheck,
    /// sup|v|² ≤ c∞ ∫|Dv|² with c∞ half the domain length.
    pub embedding: InequalityCheck,
    pub c_inf: f64,
    /// sup|v|² / ∫|Dv|², reported so the constant can be compared directly.
    pub embedding_ratio: f64,
}

/// Returns (∫v², ∫|Dv|², ∫|D²v|²) with discretizations for which the
/// interpolation inequality holds exactly.
fn energies(v: &Field) -> Result<(f64, f64, f64)> {
    let grid = v.grid();
    let vals = v.values();
    let spectral = |f: &Fourier, w: &[f64], scale: f64| {
        let s = f.forward_real(w);
        let k = f.wavenumbers(0);
        let mut e = [0.0; 3];
        for (z, &xi) in s.iter().zip(k).skip(1) {
            let a = z.norm_sqr();
            e[0] += a;
            e[1] += xi * xi * a;
            e[2] += xi.powi(4) * a;
        }
        (e[0] * scale, e[1] * scale, e[2] * scale)
    };
    let boundary_ok = |tol: f64| vals[0].abs() <= tol && vals[vals.len() - 1].abs() <= tol;
    let tol = 1e-12 * v.sup_norm().max(1.0);
    match grid.domain() {
        Domain::Periodic { extents, .. } => {
            let f = Fourier::new(grid.points(), extents);
            let n = f.len() as f64;
            Ok(spectral(&f, vals, extents[0] / (n * n)))
        }
        Domain::Interval { half_length, bc } => {
            if !boundary_ok(tol) {
                return Err(Error::param("v", "interval data must vanish at both ends"));
            }
            let m = vals.len() - 1;
            match bc {
                BoundaryKind::Navier => {
                    let w = odd_extend(vals);
                    let f = Fourier::new(&[w.len()], &[4.0 * half_length]);
                    Ok(spectral(&f, &w, half_length / (2.0 * (m * m) as f64)))
                }
                BoundaryKind::Dirichlet => {
                    let h = grid.spacing(0);
                    let e0 = h * vals.iter().map(|x| x * x).sum::<f64>();
                    let e1 = vals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
                    let e2 = vals
                        .windows(3)
                        .map(|w| (w[2] - 2.0 * w[1] + w[0]).powi(2))
                        .sum::<f64>()
                        / (h * h * h);
                    Ok((e0, e1, e2))
                }
            }
        }
    }
}

/// Evaluates both inequalities for a one-dimensional field: zero-mean
/// periodic data or interval data vanishing at the ends. The periodic mean is
/// discarded before evaluation.
pub fn interpolation_check(v: &Field) -> Result<InterpolationReport> {
    let grid = v.grid();
    if grid.dim() != 1 {
        return Err(Error::param("v", "interpolation check is one-dimensional"));
    }
    let (e0, e1, e2) = energies(v)?;
    let c_inf = 0.5 * grid.extents()[0];
    let sup = if grid.is_periodic() {
        let mean = v.values().iter().sum::<f64>() / v.len() as f64;
        v.values().iter().fold(0.0f64, |m, x| m.max((x - mean).abs()))
    } else {
        v.sup_norm()
    };
    let sup2 = sup * sup;
    Ok(InterpolationReport {
        gagliardo: InequalityCheck::new(e1, (e0 * e2).sqrt()),
        embedding: InequalityCheck::new(sup2, c_inf * e1),
        c_inf,
        embedding_ratio: if e1 > 0.0 { sup2 / e1 } else { 0.0 },
    })
}
