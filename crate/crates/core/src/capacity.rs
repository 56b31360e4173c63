//! Nonlinear capacity estimates for the KSE on (0, L): the weighted moment
//! J(t) = ∫₀^L v(x,t)(L-x)^λ dx satisfies J' ≥ κ²J² + B₀ - C_λ, which
//! yields explicit blow-up certificates.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values of v, Dv, D²v, D³v at x = 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTraces {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
    pub d3v: f64,
}

/// Initial data on (0, L).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// c·x^μ
    Power { coefficient: f64, exponent: f64 },
    /// Uniform samples on [0, x_max], linearly interpolated.
    Samples { x_max: f64, values: Vec<f64> },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Power { coefficient, exponent } => coefficient * x.max(0.0).powf(*exponent),
            Profile::Samples { x_max, values } => {
                let n = values.len() - 1;
                let s = (x / x_max * n as f64).clamp(0.0, n as f64);
                let j = (s.floor() as usize).min(n - 1);
                let w = s - j as f64;
                values[j] * (1.0 - w) + values[j + 1] * w
            }
        }
    }

    fn reach(&self) -> f64 {
        match self {
            Profile::Samples { x_max, .. } => *x_max,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityData {
    pub boundary: BoundaryTraces,
    pub interior: Profile,
}

/// κ = (λ(λ+2)/4 · L^{-(2+λ)})^{1/2}
pub fn kappa(lambda: f64, length: f64) -> f64 {
    (lambda * (lambda + 2.0) / 4.0 * length.powf(-(2.0 + lambda))).sqrt()
}

fn check(lambda: f64, length: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 6.0) {
        return Err(Error::param("lambda", "must exceed 6"));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::param("length", "must be positive"));
    }
    Ok(())
}

/// C_λ(L) = λ(λ-1)L^{λ-6}[(λ-2)²(λ-3)²/(λ-6) + 2(λ-2)(λ-3)L²/(λ-4) + L⁴/(λ-2)]
pub fn c_lambda(lambda: f64, length: f64) -> Result<f64> {
    check(lambda, length)?;
    let (l, len2) = (lambda, length * length);
    let a = (l - 2.0).powi(2) * (l - 3.0).powi(2) / (l - 6.0);
    let b = 2.0 * (l - 2.0) * (l - 3.0) / (l - 4.0) * len2;
    let c = len2 * len2 / (l - 2.0);
    Ok(l * (l - 1.0) * length.powf(l - 6.0) * (a + b + c))
}

/// Boundary contribution B₀ at x = 0.
pub fn boundary_term(t: &BoundaryTraces, lambda: f64, length: f64) -> f64 {
    let l = lambda;
    let ll = length.powf(l);
    let ll1 = length.powf(l - 1.0);
    -0.5 * ll * t.v * t.v
        + l * ll1 * (l - 1.0) * (l - 2.0) / (length * length) * t.v
        + ll * (1.0 + l * (l - 1.0) / (length * length)) * t.dv
        + l * ll1 * t.d2v
        + ll * t.d3v
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// J = ∫₀^L v(x)(L-x)^λ dx by composite 8-point Gauss–Legendre.
pub fn weighted_moment(profile: &Profile, lambda: f64, length: f64) -> Result<f64> {
    if length > profile.reach() * (1.0 + 1e-12) {
        return Err(Error::param("length", "exceeds the sampled profile"));
    }
    let panels = 256;
    let h = length / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for (x, w) in GAUSS8 {
            let y = mid + 0.5 * h * x;
            sum += w * profile.eval(y) * (length - y).powf(lambda);
        }
    }
    Ok(0.5 * h * sum)
}

/// All terms of the differential inequality for one (λ, L).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub lambda: f64,
    pub length: f64,
    pub j: f64,
    pub b0: f64,
    pub c_lambda: f64,
    /// H = B₀ - C_λ
    pub h: f64,
    pub kappa: f64,
}

pub fn capacity_functional(data: &CapacityData, lambda: f64, length: f64) -> Result<Capacity> {
    check(lambda, length)?;
    let c = c_lambda(lambda, length)?;
    let b0 = boundary_term(&data.boundary, lambda, length);
    Ok(Capacity {
        lambda,
        length,
        j: weighted_moment(&data.interior, lambda, length)?,
        b0,
        c_lambda: c,
        h: b0 - c,
        kappa: kappa(lambda, length),
    })
}

/// Sign of H = B₀ - C_λ, with a = |H|^{1/2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupCase {
    Strict { a: f64 },
    Zero,
    Negative { a: f64 },
}

impl BlowupCase {
    /// Classifies H; |H| ≤ 1e-12·scale counts as zero.
    pub fn from_h(h: f64, scale: f64) -> BlowupCase {
        if h.abs() <= 1e-12 * scale.abs().max(1.0) {
            BlowupCase::Zero
        } else if h > 0.0 {
            BlowupCase::Strict { a: h.sqrt() }
        } else {
            BlowupCase::Negative { a: (-h).sqrt() }
        }
    }

    /// The constant term H of the Riccati equation.
    pub fn h(&self) -> f64 {
        match *self {
            BlowupCase::Strict { a } => a * a,
            BlowupCase::Zero => 0.0,
            BlowupCase::Negative { a } => -a * a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlowupCase::Strict { .. } => "strict",
            BlowupCase::Zero => "zero",
            BlowupCase::Negative { .. } => "negative",
        }
    }
}

fn check_case(case: &BlowupCase, kappa: f64, j0: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param("kappa", "must be positive"));
    }
    if !j0.is_finite() {
        return Err(Error::param("j0", "must be finite"));
    }
    match *case {
        BlowupCase::Strict { a } | BlowupCase::Negative { a } if !(a.is_finite() && a > 0.0) => {
            Err(Error::param("a", "must be positive"))
        }
        BlowupCase::Zero if j0 <= 0.0 => Err(Error::param("j0", "zero case needs J0 > 0")),
        BlowupCase::Negative { a } if kappa * j0 <= a => {
            Err(Error::param("j0", "negative case needs J0 > a/kappa"))
        }
        _ => Ok(()),
    }
}

/// Upper bound on the blow-up time.
pub fn t_infinity_bound(case: &BlowupCase, kappa: f64, j0: f64) -> Result<f64> {
    check_case(case, kappa, j0)?;
    Ok(match *case {
        BlowupCase::Strict { a } => (FRAC_PI_2 - (kappa * j0 / a).atan()) / (a * kappa),
        BlowupCase::Zero => 1.0 / (kappa * kappa * j0),
        BlowupCase::Negative { a } => ((kappa * j0 + a) / (kappa * j0 - a)).ln() / (2.0 * a * kappa),
    })
}

/// Explicit lower bound for J(t), valid before the blow-up bound.
pub fn j_lower_bound(case: &BlowupCase, kappa: f64, j0: f64, t: f64) -> Result<f64> {
    check_case(case, kappa, j0)?;
    Ok(match *case {
        BlowupCase::Strict { a } => a / kappa * (a * kappa * t + (kappa * j0 / a).atan()).tan(),
        BlowupCase::Zero => j0 / (1.0 - j0 * kappa * kappa * t),
        BlowupCase::Negative { a } => {
            let c0 = (kappa * j0 - a) / (kappa * j0 + a);
            let e = c0 * (2.0 * a * kappa * t).exp();
            a / kappa * (1.0 + e) / (1.0 - e)
        }
    })
}

/// A verified blow-up certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub capacity: Capacity,
    pub case: BlowupCase,
    pub t_infinity: f64,
}

/// Lattice searched by `certify_blowup`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRanges {
    /// λ in (lo, hi]; lo must be at least 6.
    pub lambda: (f64, f64),
    /// L in [lo, hi], log-spaced.
    pub length: (f64, f64),
    pub cells: usize,
}

impl Default for SearchRanges {
    fn default() -> Self {
        SearchRanges {
            lambda: (6.0, 30.0),
            length: (0.5, 4.0),
            cells: 64,
        }
    }
}

fn certificate_at(data: &CapacityData, lambda: f64, length: f64) -> Option<BlowupCertificate> {
    let cap = capacity_functional(data, lambda, length).ok()?;
    let case = BlowupCase::from_h(cap.h, cap.c_lambda);
    let t = t_infinity_bound(&case, cap.kappa, cap.j).ok()?;
    (t.is_finite() && t > 0.0).then_some(BlowupCertificate {
        capacity: cap,
        case,
        t_infinity: t,
    })
}

fn best_on(data: &CapacityData, lambdas: &[f64], lengths: &[f64]) -> Option<BlowupCertificate> {
    lambdas
        .par_iter()
        .flat_map_iter(|&lam| lengths.iter().filter_map(move |&len| certificate_at(data, lam, len)))
        .min_by(|a, b| a.t_infinity.total_cmp(&b.t_infinity))
}

fn lattice_lambda(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn lattice_length(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Searches (λ, L) for the certificate with the smallest blow-up bound, then
/// refines once around the best lattice cell. `None` means no admissible case.
pub fn certify_blowup(data: &CapacityData, ranges: &SearchRanges) -> Result<Option<BlowupCertificate>> {
    let (l0, l1) = ranges.lambda;
    let (s0, s1) = ranges.length;
    if !(l0 >= 6.0 && l1 > l0 && l1.is_finite()) {
        return Err(Error::param("lambda range", "need 6 <= lo < hi"));
    }
    if !(s0 > 0.0 && s1 >= s0 && s1.is_finite()) {
        return Err(Error::param("length range", "need 0 < lo <= hi"));
    }
    if ranges.cells < 2 {
        return Err(Error::param("cells", "need at least 2"));
    }
    let lambdas = lattice_lambda(l0, l1, ranges.cells);
    let lengths = lattice_length(s0, s1, ranges.cells);
    let Some(coarse) = best_on(data, &lambdas, &lengths) else {
        return Ok(None);
    };
    let dl = (l1 - l0) / ranges.cells as f64;
    let lam = coarse.capacity.lambda;
    let len = coarse.capacity.length;
    let ratio = if ranges.cells > 1 && s1 > s0 {
        (s1 / s0).powf(1.0 / (ranges.cells - 1) as f64)
    } else {
        1.0
    };
    let fine_l: Vec<f64> = lattice_lambda((lam - dl).max(l0), (lam + dl).min(l1), 16);
    let fine_s = lattice_length((len / ratio).max(s0), (len * ratio).min(s1), 16);
    let fine = best_on(data, &fine_l, &fine_s);
    Ok(Some(match fine {
        Some(f) if f.t_infinity < coarse.t_infinity => f,
        _ => coarse,
    }))
}

/// Numerical solution of J' = κ²J² + H sampled at requested times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiccatiSeries {
    /// Requested times reached before divergence.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Step across which J exceeded the divergence cap.
    pub divergence: Option<(f64, f64)>,
}

/// RK4 reference for the Riccati comparison equation. Steps start at
/// 1e-5 of the expected horizon and shrink so that κ²|J|h stays below
/// 2e-3 as J grows; divergence is declared once the remaining time 1/(κ²J)
/// falls below 1e-12 of the horizon.
pub fn riccati_oracle(case: &BlowupCase, kappa: f64, j0: f64, t_grid: &[f64]) -> Result<RiccatiSeries> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::param("kappa", "must be positive"));
    }
    if !j0.is_finite() {
        return Err(Error::param("j0", "must be finite"));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("t_grid", "must be nonnegative and sorted"));
    }
    let t_last = t_grid.last().copied().unwrap_or(0.0);
    let horizon = t_infinity_bound(case, kappa, j0)
        .unwrap_or(t_last)
        .max(f64::MIN_POSITIVE);
    let h_rate = case.h();
    let k2 = kappa * kappa;
    let rhs = |j: f64| k2 * j * j + h_rate;
    let h0 = 1e-5 * horizon;
    let z = 2e-3;
    let a = h_rate.abs().sqrt();
    let cap = (1.0 / (k2 * 1e-12 * horizon)).max(1e12 * j0.abs().max(a / kappa).max(1.0));

    let mut out = RiccatiSeries {
        times: Vec::new(),
        values: Vec::new(),
        divergence: None,
    };
    let (mut t, mut j) = (0.0f64, j0);
    for &target in t_grid {
        while t < target {
            let mut h = h0.min(target - t);
            if k2 * j.abs() * h > z {
                h = z / (k2 * j.abs());
            }
            let k1 = rhs(j);
            let k2_ = rhs(j + 0.5 * h * k1);
            let k3 = rhs(j + 0.5 * h * k2_);
            let k4 = rhs(j + h * k3);
            let next = j + h / 6.0 * (k1 + 2.0 * k2_ + 2.0 * k3 + k4);
            let t_next = if target - t <= h { target } else { t + h };
            if !next.is_finite() || next > cap {
                out.divergence = Some((t, t_next));
                return Ok(out);
            }
            t = t_next;
            j = next;
        }
        out.times.push(target);
        out.values.push(j);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_lambda_reference_value() {
        assert!((c_lambda(7.0, 1.0).unwrap() - 17368.4).abs() < 1e-9);
        assert!(c_lambda(6.0, 1.0).is_err());
    }

    #[test]
    fn strict_unit_case() {
        let t = t_infinity_bound(&BlowupCase::Strict { a: 1.0 }, 1.0, 0.0).unwrap();
        assert!((t - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn gauss_rule_integrates_polynomials() {
        // ∫₀¹ x²(1-x)^7 dx = 2!7!/10!
        let j = weighted_moment(&Profile::Power { coefficient: 1.0, exponent: 2.0 }, 7.0, 1.0).unwrap();
        assert!((j - 2.0 * 5040.0 / 3_628_800.0).abs() < 1e-15);
    }

    #[test]
    fn negative_case_needs_large_moment() {
        assert!(t_infinity_bound(&BlowupCase::Negative { a: 1.0 }, 1.0, 0.5).is_err());
        assert!(t_infinity_bound(&BlowupCase::Zero, 1.0, 0.0).is_err());
    }
}
