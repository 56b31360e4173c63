//! Scaling laws near blow-up: C_k rescalings, (T-t) self-similar variables
//! and the spectra of the rescaled linear operators.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::norms::hminus1;
use crate::field::spectral::signed_index;
use crate::field::{lp_norm, Domain, Field, Grid};

/// Exponents within this distance of zero count as critical.
pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    /// Keeps ‖v‖₂.
    CkL2,
    /// Keeps ‖v‖_p with the law's p.
    CkLp,
    /// Keeps ‖v‖_{H⁻¹}.
    CkHminus1,
    /// v = (T-t)^{-α} w(x/(T-t)^{1/2m}).
    TminusT,
    /// The flow scaling with α = (2m-1)/2m.
    Leray,
}

impl ScalingKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalingKind::CkL2 => "ck_l2",
            ScalingKind::CkLp => "ck_lp",
            ScalingKind::CkHminus1 => "ck_hminus1",
            ScalingKind::TminusT => "t_minus_t",
            ScalingKind::Leray => "leray",
        }
    }
}

impl fmt::Display for ScalingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            ScalingKind::CkL2,
            ScalingKind::CkLp,
            ScalingKind::CkHminus1,
            ScalingKind::TminusT,
            ScalingKind::Leray,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| format!("unknown scaling kind `{s}`"))
    }
}

/// Behaviour of ν_k as C_k → ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    Subcritical,
    Critical,
    Supercritical,
}

impl Limit {
    pub fn classify(exponent: f64) -> Limit {
        if exponent.abs() <= CRITICAL_TOL {
            Limit::Critical
        } else if exponent < 0.0 {
            Limit::Subcritical
        } else {
            Limit::Supercritical
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub kind: ScalingKind,
    pub m: u32,
    pub dim: u32,
    pub p: f64,
    pub ck: f64,
    /// Named closed-form values (a_k, b_k, mu_k, nu_k, D_k, alpha, gamma0, ...).
    pub coefficients: BTreeMap<String, f64>,
    /// Exponent of C_k in ν_k, for the C_k kinds.
    pub nu_exponent: Option<f64>,
    pub limit: Option<Limit>,
}

impl ScalingLaw {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.coefficients.get(name).copied()
    }

    fn a(&self) -> f64 {
        self.coefficients["a_k"]
    }
}

pub fn scaling_coefficients(kind: ScalingKind, m: u32, dim: u32, p: f64, ck: f64) -> Result<ScalingLaw> {
    if m == 0 || dim == 0 {
        return Err(Error::param("m, N", "must be positive"));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::param("p", "p must exceed 1"));
    }
    if !(ck.is_finite() && ck > 0.0) {
        return Err(Error::param("C_k", "must be finite and positive"));
    }
    let (mf, n) = (m as f64, dim as f64);
    let mut c = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        c.insert(k.to_string(), v);
    };
    let nu_exponent = match kind {
        ScalingKind::CkL2 => {
            let a = ck.powf(-2.0 / n);
            let e = p - 1.0 - 2.0 * (2.0 * mf - 1.0) / n;
            put("a_k", a);
            put("b_k", a.powf(2.0 * mf));
            put("mu_k", ck.powf(-2.0 * mf / n));
            put("nu_k", ck.powf(e));
            let p0 = 1.0 + 2.0 * (2.0 * mf - 1.0) / n;
            if p < p0 {
                put("gamma0", (2.0 * mf - 1.0) / (2.0 * n * (p0 - p)));
            }
            Some(e)
        }
        ScalingKind::CkHminus1 => {
            if m < 2 {
                return Err(Error::param("m", "the H⁻¹ scaling needs 2m > 3"));
            }
            let a = ck.powf(-2.0 / (n + 2.0));
            let e = p - 1.0 - 2.0 * (2.0 * mf - 3.0) / (n + 2.0);
            put("a_k", a);
            put("b_k", a.powf(2.0 * mf));
            put("mu_k", 0.0);
            put("nu_k", ck.powf(e));
            Some(e)
        }
        ScalingKind::CkLp => {
            let a = ck.powf(-p / n);
            let e = 1.0 - p * (2.0 * mf - 1.0) / n;
            put("a_k", a);
            put("b_k", a.powf(2.0 * mf));
            put("D_k", ck.powf(1.0 + p * (2.0 * mf - 1.0) / n));
            put("nu_k", ck.powf(e));
            Some(e)
        }
        ScalingKind::TminusT => {
            put("alpha", (2.0 * mf - 1.0) / (2.0 * mf * (p - 1.0)));
            put("space_exponent", 1.0 / (2.0 * mf));
            None
        }
        ScalingKind::Leray => {
            put("alpha", (2.0 * mf - 1.0) / (2.0 * mf));
            put("space_exponent", 1.0 / (2.0 * mf));
            None
        }
    };
    Ok(ScalingLaw {
        kind,
        m,
        dim,
        p,
        ck,
        coefficients: c,
        nu_exponent,
        limit: nu_exponent.map(Limit::classify),
    })
}

/// The norm a C_k kind keeps fixed.
pub fn designated_norm(v: &Field, kind: ScalingKind, p: f64) -> Result<f64> {
    match kind {
        ScalingKind::CkL2 => lp_norm(v, 2.0),
        ScalingKind::CkLp => lp_norm(v, p),
        ScalingKind::CkHminus1 => hminus1(v).ok_or(Error::NonzeroMean {
            mean: v.values().iter().sum::<f64>() / v.len() as f64,
        }),
        _ => Err(Error::param("kind", "only the C_k kinds have a designated norm")),
    }
}

/// Location of max |v|.
pub fn argmax_point(v: &Field) -> Vec<f64> {
    let k = v
        .values()
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
        .0;
    let mut out = Vec::new();
    v.grid().for_each_point(|i, x| {
        if i == k {
            out = x.to_vec();
        }
    });
    out
}

/// w(y) = v(x_k + a_k y)/C_k, sampled exactly on the rescaled grid.
///
/// `center` defaults to the argmax of |v|. The law's m, N and p are used for
/// a_k; N must match the grid.
pub fn ck_rescale(v: &Field, law: &ScalingLaw, center: Option<&[f64]>) -> Result<Field> {
    let grid = v.grid();
    if law.nu_exponent.is_none() {
        return Err(Error::param("kind", "ck_rescale needs a C_k kind"));
    }
    if law.dim as usize != grid.dim() {
        return Err(Error::IncompatibleGrid(format!(
            "law is for N = {} but the grid has {} axes",
            law.dim,
            grid.dim()
        )));
    }
    if law.kind == ScalingKind::CkHminus1 {
        designated_norm(v, law.kind, law.p)?;
    }
    let Domain::Periodic { lower, extents } = grid.domain() else {
        return Err(Error::NotPeriodic);
    };
    let center = match center {
        Some(c) if c.len() == grid.dim() => c.to_vec(),
        Some(c) => return Err(Error::LengthMismatch { expected: grid.dim(), got: c.len() }),
        None => argmax_point(v),
    };
    let a = law.a();
    let new_lower = lower.iter().zip(&center).map(|(l, x)| (l - x) / a).collect();
    let new_ext = extents.iter().map(|e| e / a).collect();
    let g = Grid::periodic(new_lower, new_ext, grid.points().to_vec())?;
    Field::new(g, v.values().iter().map(|x| x / law.ck).collect())
}

/// Band-limited evaluation of periodic row-major data on a tensor grid of
/// target coordinates, one axis at a time.
pub(crate) fn resample(values: &[f64], shape: &[usize], lower: &[f64], extents: &[f64], targets: &[Vec<f64>]) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    let mut data = values.to_vec();
    let mut cur = shape.to_vec();
    for a in 0..shape.len() {
        let n = cur[a];
        let stride: usize = cur[a + 1..].iter().product();
        let outer: usize = cur[..a].iter().product();
        let m = targets[a].len();
        let fft = planner.plan_fft_forward(n);
        // e^{iξ(x - lower)} table, Nyquist replaced by its cosine
        let table: Vec<Vec<Complex64>> = targets[a]
            .iter()
            .map(|&x| {
                (0..n)
                    .map(|j| {
                        let k = signed_index(j, n);
                        let theta = 2.0 * PI * k as f64 * (x - lower[a]) / extents[a];
                        if 2 * k.unsigned_abs() as usize == n {
                            Complex64::new(theta.cos(), 0.0)
                        } else {
                            Complex64::from_polar(1.0, theta)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; outer * m * stride];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for o in 0..outer {
            for s in 0..stride {
                for (j, z) in line.iter_mut().enumerate() {
                    *z = Complex64::new(data[(o * n + j) * stride + s], 0.0);
                }
                fft.process(&mut line);
                for (i, row) in table.iter().enumerate() {
                    let sum: Complex64 = row.iter().zip(&line).map(|(e, c)| e * c).sum();
                    out[(o * m + i) * stride + s] = sum.re / n as f64;
                }
            }
        }
        data = out;
        cur[a] = m;
    }
    data
}

fn periodic_parts(grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    match grid.domain() {
        Domain::Periodic { lower, extents } => Ok((lower.clone(), extents.clone())),
        Domain::Interval { .. } => Err(Error::NotPeriodic),
    }
}

/// v(x) = (T-t)^{-α} w(x/(T-t)^{1/2m}), α = (2m-1)/(2m(p-1)), τ = -ln(T-t).
/// Returns (w, τ). Without a target the y-grid is the x-grid stretched by
/// (T-t)^{-1/2m}, which needs no interpolation; a periodic target grid is
/// filled by band-limited interpolation of v.
pub fn to_selfsimilar(v: &Field, big_t: f64, t: f64, m: u32, p: f64, target: Option<&Arc<Grid>>) -> Result<(Field, f64)> {
    let (alpha, c) = selfsimilar_factors(big_t, t, m, p)?;
    let w = transform(v, c, c.powf(2.0 * m as f64 * alpha), target)?;
    Ok((w, -(big_t - t).ln()))
}

/// Inverse of [`to_selfsimilar`].
pub fn from_selfsimilar(w: &Field, big_t: f64, t: f64, m: u32, p: f64, target: Option<&Arc<Grid>>) -> Result<Field> {
    let (alpha, c) = selfsimilar_factors(big_t, t, m, p)?;
    transform(w, 1.0 / c, c.powf(-2.0 * m as f64 * alpha), target)
}

/// (α, (T-t)^{1/2m})
fn selfsimilar_factors(big_t: f64, t: f64, m: u32, p: f64) -> Result<(f64, f64)> {
    if !(big_t.is_finite() && t.is_finite() && t < big_t) {
        return Err(Error::param("t", "need t < T"));
    }
    if m == 0 || !(p.is_finite() && p > 1.0) {
        return Err(Error::param("m, p", "need m ≥ 1 and p > 1"));
    }
    let mf = m as f64;
    Ok(((2.0 * mf - 1.0) / (2.0 * mf * (p - 1.0)), (big_t - t).powf(1.0 / (2.0 * mf))))
}

/// u(y) = scale · v(c y).
fn transform(v: &Field, c: f64, scale: f64, target: Option<&Arc<Grid>>) -> Result<Field> {
    let grid = v.grid();
    match target {
        None => {
            let g = match grid.domain() {
                Domain::Periodic { lower, extents } => Grid::periodic(
                    lower.iter().map(|l| l / c).collect(),
                    extents.iter().map(|e| e / c).collect(),
                    grid.points().to_vec(),
                )?,
                Domain::Interval { half_length, bc } => Arc::new(grid.with_domain(Domain::Interval {
                    half_length: half_length / c,
                    bc: *bc,
                })),
            };
            Field::new(g, v.values().iter().map(|x| x * scale).collect())
        }
        Some(tg) => {
            if tg.dim() != grid.dim() {
                return Err(Error::IncompatibleGrid("target dimension differs".into()));
            }
            let (lower, extents) = periodic_parts(grid)?;
            periodic_parts(tg)?;
            let targets: Vec<Vec<f64>> = (0..tg.dim())
                .map(|a| tg.coordinates(a).iter().map(|y| c * y).collect())
                .collect();
            let vals = resample(v.values(), grid.points(), &lower, &extents, &targets);
            Field::new(tg.clone(), vals.into_iter().map(|x| x * scale).collect())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumCase {
    /// λ_l = -α - l/2m
    Generic { alpha: f64 },
    /// λ_k = -1/2 - k/2
    Nse,
    /// λ_k = -(2m-1)/2m - k/2m
    Burnett,
}

pub fn reference_spectrum(case: SpectrumCase, m: u32, k_max: usize) -> Vec<f64> {
    let mf = m.max(1) as f64;
    let (start, step) = match case {
        SpectrumCase::Generic { alpha } => (-alpha, 1.0 / (2.0 * mf)),
        SpectrumCase::Nse => (-0.5, 0.5),
        SpectrumCase::Burnett => (-(2.0 * mf - 1.0) / (2.0 * mf), 1.0 / (2.0 * mf)),
    };
    (0..=k_max).map(|k| start - k as f64 * step).collect()
}
