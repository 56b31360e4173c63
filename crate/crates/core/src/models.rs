//! Model families, their right-hand sides and critical exponents.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::norms::abs_pow;
use crate::field::spectral::Fourier;
use crate::field::stencil::{clamped_kse_matrix, odd_extend, restrict};
use crate::field::{BoundaryKind, Domain, Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// v_t = -D⁴v - D²v + ½D(v²) on (-L, L).
    KseIbvp,
    /// v_t = -(-Δ)^{2l} v + (-Δ)^l v + B₁|v|^p with m = 2l.
    Mkse,
    /// v_t = -(-Δ)^m v + v/4 + B₁|v|^p.
    MkseZeroOrder,
    /// v_t = -(-Δ)^m v - |v|^{p-1} v.
    NonDivergent,
    /// v_t = -(-Δ)^m v + B₁|v|^p.
    PureDivergent,
    /// v_t = -(-Δ)^m v - Δ B₁|v|^p.
    Dispersion3,
    /// u_t = -Δ²u - Δ(|u|^{p-1} u).
    CahnHilliard,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::KseIbvp,
        Family::Mkse,
        Family::MkseZeroOrder,
        Family::NonDivergent,
        Family::PureDivergent,
        Family::Dispersion3,
        Family::CahnHilliard,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::KseIbvp => "kse_ibvp",
            Family::Mkse => "mkse",
            Family::MkseZeroOrder => "mkse_zero_order",
            Family::NonDivergent => "non_divergent",
            Family::PureDivergent => "pure_divergent",
            Family::Dispersion3 => "dispersion3",
            Family::CahnHilliard => "cahn_hilliard",
        }
    }

    /// Families whose linear part has a quadratic form the energy monitor can use.
    pub fn has_energy_identity(self) -> bool {
        matches!(
            self,
            Family::KseIbvp | Family::Mkse | Family::MkseZeroOrder | Family::PureDivergent
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
                format!("unknown family `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A model instance. Boundary conditions come from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    /// Order of the leading operator (-Δ)^m.
    pub m: u32,
    /// Order of the destabilizing operator for `Mkse`.
    pub l: u32,
    pub p: f64,
    /// Coefficients d_k of B₁ = (1/p) Σ d_k D_k, one per axis.
    pub drift: Vec<f64>,
}

impl ModelSpec {
    pub fn kse_ibvp() -> ModelSpec {
        ModelSpec {
            family: Family::KseIbvp,
            m: 2,
            l: 1,
            p: 2.0,
            drift: vec![1.0],
        }
    }

    pub fn mkse(l: u32, p: f64, dim: usize) -> ModelSpec {
        ModelSpec {
            family: Family::Mkse,
            m: 2 * l,
            l,
            p,
            drift: vec![1.0; dim],
        }
    }

    pub fn new(family: Family, m: u32, p: f64, dim: usize) -> ModelSpec {
        ModelSpec {
            family,
            m,
            l: (m / 2).max(1),
            p,
            drift: vec![1.0; dim],
        }
    }

    pub fn with_drift(mut self, drift: Vec<f64>) -> ModelSpec {
        self.drift = drift;
        self
    }

    /// Checks internal consistency and compatibility with `grid`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return bad(format!("p must exceed 1 (got {})", self.p));
        }
        if self.drift.iter().any(|d| !d.is_finite()) {
            return bad("drift coefficients must be finite".into());
        }
        match self.family {
            Family::Mkse if self.m != 2 * self.l => {
                return bad(format!("mkse needs m = 2l (got m = {}, l = {})", self.m, self.l));
            }
            Family::CahnHilliard if self.m != 2 => {
                return bad(format!("cahn_hilliard needs m = 2 (got {})", self.m));
            }
            Family::KseIbvp if self.m != 2 || self.p != 2.0 => {
                return bad("kse_ibvp is fixed at m = 2, p = 2".into());
            }
            _ => {}
        }
        if self.drift.len() != grid.dim() {
            return Err(Error::IncompatibleGrid(format!(
                "{} drift coefficients for a {}-dimensional grid",
                self.drift.len(),
                grid.dim()
            )));
        }
        match (self.family, grid.is_periodic()) {
            (Family::KseIbvp, true) => Err(Error::IncompatibleGrid("kse_ibvp lives on an interval".into())),
            (Family::KseIbvp, false) => Ok(()),
            (_, false) => Err(Error::IncompatibleGrid(format!("{} needs a periodic grid", self.family))),
            (_, true) => Ok(()),
        }
    }

    /// Symbol of the linear part at |ξ|² = `k2`.
    pub fn linear_symbol(&self, k2: f64) -> f64 {
        match self.family {
            Family::KseIbvp => -k2 * k2 + k2,
            Family::Mkse => -k2.powi(2 * self.l as i32) + k2.powi(self.l as i32),
            Family::MkseZeroOrder => -k2.powi(self.m as i32) + 0.25,
            _ => -k2.powi(self.m as i32),
        }
    }
}

/// Spectral coordinates of a state.
pub(crate) enum Basis {
    Fourier(Fourier),
    /// Odd extension of interval data to a 4L-periodic box of 2M points.
    Sine { fourier: Fourier },
    /// Eigenvectors of the clamped finite-difference operator (columns).
    Clamped { q: DMatrix<f64>, m: usize, h: f64 },
}

#[derive(Clone, Copy)]
enum Pointwise {
    AbsPow,
    SignedPow,
    Square,
}

/// Precomputed linear symbol and nonlinear multipliers for one model on one grid.
pub struct ModelOperator {
    spec: ModelSpec,
    grid: Arc<Grid>,
    pub(crate) basis: Basis,
    /// Linear eigenvalue per spectral coordinate.
    pub(crate) symbol: Vec<f64>,
    nl_factor: Vec<Complex64>,
    pointwise: Pointwise,
    /// ∫ u·w = norm_factor · Σ conj(û)·ŵ
    norm_factor: f64,
}

impl ModelOperator {
    pub fn new(spec: &ModelSpec, grid: &Arc<Grid>) -> Result<ModelOperator> {
        spec.validate(grid)?;
        let p = spec.p;
        let pointwise = match spec.family {
            Family::KseIbvp => Pointwise::Square,
            Family::NonDivergent | Family::CahnHilliard => Pointwise::SignedPow,
            _ => Pointwise::AbsPow,
        };
        match grid.domain() {
            Domain::Periodic { .. } => {
                let f = Fourier::for_grid(grid)?;
                let k2 = f.k_squared();
                let mask = f.dealias_mask();
                let symbol = k2.iter().map(|&q| spec.linear_symbol(q)).collect();
                let mut nl = vec![Complex64::new(0.0, 0.0); f.len()];
                f.for_each_mode(|i, xi, _| {
                    if !mask[i] {
                        return;
                    }
                    let drift: f64 = xi.iter().zip(&spec.drift).map(|(k, d)| k * d).sum::<f64>() / p;
                    nl[i] = match spec.family {
                        Family::NonDivergent => Complex64::new(-1.0, 0.0),
                        Family::CahnHilliard => Complex64::new(k2[i], 0.0),
                        Family::Dispersion3 => Complex64::new(0.0, k2[i] * drift),
                        _ => Complex64::new(0.0, drift),
                    };
                });
                let n = f.len() as f64;
                Ok(ModelOperator {
                    spec: spec.clone(),
                    grid: grid.clone(),
                    norm_factor: grid.volume() / (n * n),
                    basis: Basis::Fourier(f),
                    symbol,
                    nl_factor: nl,
                    pointwise,
                })
            }
            Domain::Interval { half_length, bc: BoundaryKind::Navier } => {
                let m = grid.points()[0] - 1;
                let f = Fourier::new(&[2 * m], &[4.0 * half_length]);
                let mask = f.dealias_mask();
                let k = f.wavenumbers(0);
                let symbol = k.iter().map(|&x| spec.linear_symbol(x * x)).collect();
                let nl = (0..f.len())
                    .map(|i| {
                        if mask[i] && 2 * i != f.len() {
                            Complex64::new(0.0, 0.5 * k[i])
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                Ok(ModelOperator {
                    spec: spec.clone(),
                    grid: grid.clone(),
                    norm_factor: half_length / (2.0 * (m * m) as f64),
                    basis: Basis::Sine { fourier: f },
                    symbol,
                    nl_factor: nl,
                    pointwise,
                })
            }
            Domain::Interval { bc: BoundaryKind::Dirichlet, .. } => {
                let m = grid.points()[0] - 1;
                let h = grid.spacing(0);
                let eig = SymmetricEigen::new(clamped_kse_matrix(m, h));
                Ok(ModelOperator {
                    spec: spec.clone(),
                    grid: grid.clone(),
                    norm_factor: h,
                    symbol: eig.eigenvalues.iter().copied().collect(),
                    basis: Basis::Clamped { q: eig.eigenvectors, m, h },
                    nl_factor: Vec::new(),
                    pointwise,
                })
            }
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub(crate) fn forward(&self, phys: &[f64]) -> Vec<Complex64> {
        match &self.basis {
            Basis::Fourier(f) => f.forward_real(phys),
            Basis::Sine { fourier, .. } => fourier.forward_real(&odd_extend(phys)),
            Basis::Clamped { q, m, .. } => {
                let v = DVector::from_column_slice(&phys[1..*m]);
                (q.transpose() * v).iter().map(|&c| Complex64::new(c, 0.0)).collect()
            }
        }
    }

    pub(crate) fn inverse(&self, s: &[Complex64]) -> Vec<f64> {
        match &self.basis {
            Basis::Fourier(f) => f.inverse_real(s),
            Basis::Sine { fourier, .. } => restrict(&fourier.inverse_real(s)),
            Basis::Clamped { q, m, .. } => {
                let c = DVector::from_iterator(s.len(), s.iter().map(|z| z.re));
                let v = q * c;
                let mut out = vec![0.0; m + 1];
                out[1..*m].copy_from_slice(v.as_slice());
                out
            }
        }
    }

    /// Spectral coefficients of the nonlinear term.
    pub(crate) fn nonlinear(&self, s: &[Complex64]) -> Vec<Complex64> {
        let p = self.spec.p;
        let apply = |u: f64| match self.pointwise {
            Pointwise::AbsPow => abs_pow(u, p),
            Pointwise::SignedPow => abs_pow(u, p - 1.0) * u,
            Pointwise::Square => u * u,
        };
        match &self.basis {
            Basis::Fourier(f) | Basis::Sine { fourier: f, .. } => {
                let mut buf = s.to_vec();
                f.inverse(&mut buf);
                for z in buf.iter_mut() {
                    *z = Complex64::new(apply(z.re), 0.0);
                }
                f.forward(&mut buf);
                buf.iter_mut().zip(&self.nl_factor).for_each(|(z, c)| *z *= c);
                buf
            }
            Basis::Clamped { m, h, .. } => {
                let u = self.inverse(s);
                let mut n = vec![0.0; m + 1];
                for j in 1..*m {
                    n[j] = (apply(u[j + 1]) - apply(u[j - 1])) / (4.0 * h);
                }
                self.forward(&n)
            }
        }
    }

    /// ∫ v·Lv for the linear operator L.
    pub(crate) fn linear_form(&self, s: &[Complex64]) -> f64 {
        self.norm_factor * s.iter().zip(&self.symbol).map(|(z, l)| l * z.norm_sqr()).sum::<f64>()
    }

    /// Drops the modes removed by dealiasing (Fourier and sine bases).
    pub(crate) fn truncate(&self, s: &mut [Complex64]) {
        let mask = match &self.basis {
            Basis::Fourier(f) | Basis::Sine { fourier: f, .. } => f.dealias_mask(),
            Basis::Clamped { .. } => return,
        };
        for (z, keep) in s.iter_mut().zip(mask) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Linear plus nonlinear right-hand side.
    pub fn rhs(&self, v: &Field) -> Result<Field> {
        if v.grid() != &self.grid {
            return Err(Error::IncompatibleGrid("field and operator grids differ".into()));
        }
        let s = self.forward(v.values());
        let mut out = self.nonlinear(&s);
        out.iter_mut().zip(s.iter().zip(&self.symbol)).for_each(|(n, (z, l))| *n += z * l);
        Field::new(self.grid.clone(), self.inverse(&out))
    }
}

/// Right-hand side of the model at `v`.
pub fn rhs(spec: &ModelSpec, v: &Field) -> Result<Field> {
    ModelOperator::new(spec, v.grid())?.rhs(v)
}

/// Enforces interval boundary conditions; periodic data is returned as is.
///
/// Navier: the end values are zeroed (the sine representation then has
/// D²v = 0 too). Dirichlet: end values are zeroed and the neighbours set to
/// a quarter of the next node, so the one-sided second-order first
/// derivative vanishes.
pub fn apply_bcs(v: &Field) -> Result<Field> {
    let mut vals = v.values().to_vec();
    let m = vals.len() - 1;
    match v.grid().bc() {
        None => return Ok(v.clone()),
        Some(BoundaryKind::Navier) => {
            vals[0] = 0.0;
            vals[m] = 0.0;
        }
        Some(BoundaryKind::Dirichlet) => {
            vals[0] = 0.0;
            vals[m] = 0.0;
            vals[1] = vals[2] / 4.0;
            vals[m - 1] = vals[m - 2] / 4.0;
        }
    }
    Field::new(v.grid().clone(), vals)
}

/// Where the Burnett-type model sits relative to its global-existence range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurnettRegime {
    /// N < 2(2m-1).
    Subcritical,
    /// N = 2(2m-1); global existence still holds.
    Critical,
    /// N > 2(2m-1).
    Open,
}

/// Critical exponents as exact rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentReport {
    pub m: u32,
    pub n: u32,
    /// 1 + 2(2m-1)/N.
    pub p0_mkse: Rational64,
    /// (N+2m)/(N-2m), only for N > 2m.
    pub p_sobolev: Option<Rational64>,
    /// 1 + 2(2m-3)/(N+2), only for 2m > 3.
    pub p0_hminus1: Option<Rational64>,
    /// N/(2m-1).
    pub p0_burnett: Rational64,
    pub burnett_regime: BurnettRegime,
    /// (2m-1)/(2N(p0-p)), for a supplied 1 < p < p0.
    pub gamma0: Option<Rational64>,
}

impl ExponentReport {
    /// True when p lies strictly below the mKSE critical exponent.
    pub fn mkse_subcritical(&self, p: Rational64) -> bool {
        p < self.p0_mkse
    }
}

pub fn critical_exponents(m: u32, n: u32, p: Option<Rational64>) -> Result<ExponentReport> {
    if m == 0 || n == 0 {
        return Err(Error::param("m, N", "must be positive"));
    }
    let mi = m as i64;
    let ni = n as i64;
    let r = Rational64::new;
    let one = Rational64::from_integer(1);
    let p0 = one + r(2 * (2 * mi - 1), ni);
    let gamma0 = match p {
        Some(p) if p <= one => return Err(Error::param("p", "p must exceed 1")),
        Some(p) if p < p0 => Some(r(2 * mi - 1, 2 * ni) / (p0 - p)),
        _ => None,
    };
    let crit = 2 * (2 * mi - 1);
    Ok(ExponentReport {
        m,
        n,
        p0_mkse: p0,
        p_sobolev: (ni > 2 * mi).then(|| r(ni + 2 * mi, ni - 2 * mi)),
        p0_hminus1: (2 * mi > 3).then(|| one + r(2 * (2 * mi - 3), ni + 2)),
        p0_burnett: r(ni, 2 * mi - 1),
        burnett_regime: match ni.cmp(&crit) {
            std::cmp::Ordering::Less => BurnettRegime::Subcritical,
            std::cmp::Ordering::Equal => BurnettRegime::Critical,
            std::cmp::Ordering::Greater => BurnettRegime::Open,
        },
        gamma0,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn mkse_rhs_of_sine() {
        let g = Grid::periodic_1d(0.0, 2.0 * PI, 64).unwrap();
        let v = Field::from_fn(g.clone(), |x| x[0].sin()).unwrap();
        let r = rhs(&ModelSpec::mkse(1, 2.0, 1), &v).unwrap();
        for (j, x) in g.coordinates(0).iter().enumerate() {
            assert!((r.values()[j] - 0.5 * (2.0 * x).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn non_divergent_constant() {
        let g = Grid::periodic_1d(0.0, 1.0, 16).unwrap();
        let v = Field::new(g, vec![1.5; 16]).unwrap();
        let r = rhs(&ModelSpec::new(Family::NonDivergent, 1, 3.0, 1), &v).unwrap();
        assert!(r.values().iter().all(|x| (x + 1.5f64.powi(3)).abs() < 1e-12));
    }

    #[test]
    fn validation() {
        let g = Grid::periodic_1d(0.0, 1.0, 16).unwrap();
        let mut s = ModelSpec::mkse(1, 1.0, 1);
        assert!(matches!(s.validate(&g), Err(Error::InvalidModel(_))));
        s.p = 2.0;
        s.m = 3;
        assert!(s.validate(&g).is_err());
        assert!(ModelSpec::kse_ibvp().validate(&g).is_err());
        assert!(ModelSpec::new(Family::CahnHilliard, 1, 3.0, 1).validate(&g).is_err());
    }

    #[test]
    fn exponents_exact() {
        let r = critical_exponents(2, 1, Some(Rational64::from_integer(2))).unwrap();
        assert_eq!(r.p0_mkse, Rational64::from_integer(7));
        assert_eq!(r.gamma0, Some(Rational64::new(3, 10)));
        assert_eq!(r.p_sobolev, None);
        assert_eq!(critical_exponents(1, 2, None).unwrap().burnett_regime, BurnettRegime::Critical);
    }

    #[test]
    fn clamped_bcs() {
        let g = Grid::interval(1.0, 33, BoundaryKind::Dirichlet).unwrap();
        let v = Field::from_fn(g.clone(), |x| 1.0 + x[0]).unwrap();
        let w = apply_bcs(&v).unwrap();
        let vals = w.values();
        assert_eq!(vals[0], 0.0);
        assert!((-3.0 * vals[0] + 4.0 * vals[1] - vals[2]).abs() < 1e-15);
    }
}
