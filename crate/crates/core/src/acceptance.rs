//! The acceptance suite: thirteen numbered checks with fixed tolerances and
//! runtime budgets. Shared by `kslab check` and the `acceptance` test target.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use rayon::prelude::*;

use crate::capacity::{j_lower_bound, riccati_oracle, t_infinity_bound, BlowupCase};
use crate::error::Result;
use crate::evolve::{integrate, l2_growth_check, picard_local_solve, Monitor, Outcome, RunConfig, Stepper};
use crate::field::{derivative, random_field, BoundaryKind, Field, Grid, RandomSpec, VectorField};
use crate::flows::{integrate_flow, leray_project, taylor_green, FlowMonitor, FlowState};
use crate::kernels::{fit_decay, fundamental_solution, kernel_grid, kernel_residual};
use crate::models::{critical_exponents, BurnettRegime, Family, ModelSpec};
use crate::rescale::{ck_rescale, designated_norm, scaling_coefficients, Limit, ScalingKind};
use crate::volterra::volterra_bound;

pub const CRITERIA: usize = 13;

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] C{:02} {} ({:.2}s of {}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

/// Outcome of the numerical part of a check.
struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { ok, detail })
}

type Check = fn() -> Result<Verdict>;

const TABLE: [(&str, u64, Check); CRITERIA] = [
    ("energy identity", 30, energy_identity),
    ("exponential L2 bound", 120, l2_bound),
    ("fundamental solution", 60, fundamental_solution_check),
    ("blow-up closed forms", 10, blowup_closed_forms),
    ("Volterra bound", 10, volterra_check),
    ("critical exponents", 1, exponent_table),
    ("Leray projector", 10, leray_projector),
    ("Taylor-Green decay", 60, taylor_green_decay),
    ("subcritical uniform bound", 120, subcritical_bound),
    ("H^-1 monotonicity", 60, hminus1_monotone),
    ("Duhamel oracle", 30, duhamel_oracle),
    ("Cahn-Hilliard blow-up rate", 120, cahn_hilliard_rate),
    ("rescaling laws", 10, rescaling_laws),
];

pub fn name(id: usize) -> Option<&'static str> {
    TABLE.get(id.checked_sub(1)?).map(|t| t.0)
}

/// Runs criterion `id` (1-based). The check fails if its numerical test
/// fails, it errors, or it exceeds its runtime budget.
pub fn run_criterion(id: usize) -> Option<CriterionResult> {
    let (name, secs, check) = *TABLE.get(id.checked_sub(1)?)?;
    let budget = Duration::from_secs(secs);
    let start = Instant::now();
    let v = check();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match v {
        Ok(v) => (v.ok, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > budget {
        passed = false;
        detail.push_str("; over budget");
    }
    Some(CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed,
        budget,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=CRITERIA).filter_map(run_criterion).collect()
}

fn series_max(s: &[f64]) -> f64 {
    s.iter().copied().fold(0.0, f64::max)
}

fn kse_navier_run(dt: f64, t_end: f64, v0: Field, monitors: &[Monitor]) -> Result<crate::evolve::Trajectory> {
    let cfg = RunConfig::new(ModelSpec::kse_ibvp(), v0, dt, t_end).with_monitors(monitors);
    integrate(&cfg)
}

fn energy_identity() -> Result<Verdict> {
    let g = Grid::interval(4.0, 257, BoundaryKind::Navier)?;
    let v0 = Field::from_fn(g, |x| (PI * x[0] / 4.0).sin())?;
    let mon = [Monitor::L2, Monitor::EnergyResidual];
    let (a, b) = rayon::join(
        || kse_navier_run(1e-4, 1.0, v0.clone(), &mon),
        || kse_navier_run(5e-5, 1.0, v0.clone(), &mon),
    );
    let (a, b) = (a?, b?);
    let scaled = |t: &crate::evolve::Trajectory| -> Result<f64> {
        let l2 = t.require("l2")?;
        let r = t.require("energy_residual")?;
        Ok(r.iter().zip(l2).map(|(r, n)| r / (n * n).max(1.0)).fold(0.0, f64::max))
    };
    let (ra, rb) = (scaled(&a)?, scaled(&b)?);
    let ratio = rb / ra;
    verdict(
        a.outcome == Outcome::Completed && ra <= 1e-6 && ratio <= 0.5,
        format!("max residual {ra:.3e} at dt=1e-4, halving dt scales it by {ratio:.3}"),
    )
}

fn l2_bound() -> Result<Verdict> {
    let g = Grid::interval(4.0, 257, BoundaryKind::Navier)?;
    let worst = (0..20u64)
        .into_par_iter()
        .map(|seed| -> Result<f64> {
            let v0 = random_field(&g, &RandomSpec { seed, ..RandomSpec::default() })?;
            let t = kse_navier_run(1e-3, 5.0, v0, &[Monitor::L2BoundRatio])?;
            if t.outcome != Outcome::Completed {
                return Ok(f64::INFINITY);
            }
            Ok(l2_growth_check(&t, 1e-4)?.max_ratio)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    verdict(worst <= 1.0 + 1e-4, format!("max E(t)/(E(0)e^(t/2)) over 20 seeds = {worst:.8}"))
}

fn fundamental_solution_check() -> Result<Verdict> {
    // Gaussian
    let g = kernel_grid(1, 120.0, 2048)?;
    let k1 = fundamental_solution(1, &g)?;
    let ys = g.coordinates(0);
    let gauss_err = k1
        .profile
        .values()
        .iter()
        .zip(&ys)
        .map(|(f, y)| (f - (-y * y / 4.0).exp() / (4.0 * PI).sqrt()).abs())
        .fold(0.0, f64::max);
    let cases: Vec<(u32, usize)> = (1..=3).flat_map(|m| [(m, 1), (m, 2)]).collect();
    let stats = cases
        .par_iter()
        .map(|&(m, n)| -> Result<(f64, f64)> {
            let grid: Arc<Grid> = if n == 1 { kernel_grid(1, 120.0, 2048)? } else { kernel_grid(2, 80.0, 512)? };
            let k = fundamental_solution(m, &grid)?;
            Ok(((k.mass - 1.0).abs(), kernel_residual(&k)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mass_err = stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let residual = stats.iter().map(|s| s.1).fold(0.0, f64::max);
    let mut alpha_err: f64 = 0.0;
    let mut alphas = Vec::new();
    for m in [2u32, 3] {
        let mut k = fundamental_solution(m, &g)?;
        let fit = fit_decay(&mut k)?;
        let target = 2.0 * m as f64 / (2.0 * m as f64 - 1.0);
        alpha_err = alpha_err.max((fit.alpha - target).abs() / target);
        alphas.push(fit.alpha);
    }
    verdict(
        gauss_err <= 1e-10 && mass_err <= 1e-8 && residual <= 1e-6 && alpha_err <= 0.05,
        format!(
            "Gaussian error {gauss_err:.2e}, mass error {mass_err:.2e}, residual {residual:.2e}, \
             alpha {:.4}/{:.4} (worst {:.2}%)",
            alphas[0],
            alphas[1],
            100.0 * alpha_err
        ),
    )
}

fn blowup_closed_forms() -> Result<Verdict> {
    let cases = [
        (BlowupCase::Strict { a: 1.0 }, 1.0, 0.0, FRAC_PI_2),
        (BlowupCase::Zero, 2.0, 1.0, 0.25),
        (BlowupCase::Negative { a: 1.0 }, 1.0, 2.0, 0.5 * 3f64.ln()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, kappa, j0, expected) in cases {
        let t_inf = t_infinity_bound(&case, kappa, j0)?;
        let times: Vec<f64> = (0..=900).map(|i| 0.9 * t_inf * i as f64 / 900.0).chain([1.5 * t_inf]).collect();
        let oracle = riccati_oracle(&case, kappa, j0, &times)?;
        let mut worst: f64 = 0.0;
        for (t, j) in oracle.times.iter().zip(&oracle.values) {
            if *t <= 0.9 * t_inf {
                let b = j_lower_bound(&case, kappa, j0, *t)?;
                worst = worst.max((j - b).abs() / b.abs().max(1e-300));
            }
        }
        let diverged = oracle.divergence.is_some_and(|(lo, _)| lo <= t_inf);
        let reached = oracle.times.iter().filter(|&&t| t <= 0.9 * t_inf).count() == 901;
        let c_ok = (t_inf - expected).abs() <= 1e-12 * expected && worst <= 1e-8 && diverged && reached;
        ok &= c_ok;
        parts.push(format!("{} T={t_inf:.12} rel {worst:.1e}", case.name()));
    }
    verdict(ok, parts.join(", "))
}

fn volterra_check() -> Result<Verdict> {
    let r = volterra_bound(2.0, 2, 1, 3.0)?;
    let monotone = r.v.windows(2).all(|w| w[1] >= w[0]);
    verdict(
        r.beta == 0.625 && r.bounded && monotone,
        format!(
            "beta = {}, V(3) = {:.4e} <= V_hat(3) = {:.4e}, monotone {monotone}",
            r.beta,
            r.v.last().copied().unwrap_or(f64::NAN),
            r.v_hat.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn exponent_table() -> Result<Verdict> {
    let int = Rational64::from_integer;
    let p0 = critical_exponents(2, 1, None)?.p0_mkse;
    let mut subcritical_ok = true;
    for n in 1..=12 {
        let r = critical_exponents(2, n, None)?;
        subcritical_ok &= r.mkse_subcritical(int(2)) == (n < 6);
    }
    let ps = critical_exponents(2, 5, None)?.p_sobolev;
    let burnett = critical_exponents(1, 3, None)?.p0_burnett;
    let regime = critical_exponents(1, 2, None)?.burnett_regime;
    verdict(
        p0 == int(7) && subcritical_ok && ps == Some(int(9)) && burnett == int(3) && regime == BurnettRegime::Critical,
        format!("p0(2,1) = {p0}, p=2 subcritical iff N<6: {subcritical_ok}, p_S(2,5) = {}, Burnett p0(1,3) = {burnett}, N=2,m=1 {regime:?}", ps.map_or("none".into(), |r| r.to_string())),
    )
}

fn random_vector(grid: &Arc<Grid>, seed: u64) -> Result<VectorField> {
    let comps = (0..grid.dim())
        .map(|a| {
            let spec = RandomSpec {
                seed: 2 * seed + a as u64,
                kmax: 40,
                l2_norm: Some(2.0 * PI),
                zero_mean: false,
            };
            random_field(grid, &spec).map(Field::into_values)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(grid.clone(), comps)
}

fn sup_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.components()
        .iter()
        .flatten()
        .zip(b.components().iter().flatten())
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

fn leray_projector() -> Result<Verdict> {
    let g = Grid::periodic_cube(2, 2.0 * PI, 128)?;
    let worst = (0..100u64)
        .into_par_iter()
        .map(|seed| -> Result<(f64, f64)> {
            let u = random_vector(&g, seed)?;
            let pu = leray_project(&u)?;
            let idem = sup_diff(&leray_project(&pu)?, &pu);
            let phi = random_field(&g, &RandomSpec { seed: 1000 + seed, kmax: 40, l2_norm: Some(2.0 * PI), zero_mean: true })?;
            let grad = VectorField::from_fields(&[derivative(&phi, 0, 1)?, derivative(&phi, 1, 1)?])?;
            let annihilated = leray_project(&grad)?.sup_norm();
            Ok((idem, annihilated))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0.0f64), |(a, b), (x, y)| (a.max(x), b.max(y)));
    verdict(
        worst.0 <= 1e-13 && worst.1 <= 1e-13,
        format!("idempotence {:.2e}, gradient residue {:.2e}", worst.0, worst.1),
    )
}

fn taylor_green_decay() -> Result<Verdict> {
    let g = Grid::periodic_cube(2, 2.0 * PI, 64)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (m, rate) in [(1u32, 2.0), (2, 4.0)] {
        let v0 = taylor_green(&g, 1.0)?;
        let state = FlowState::new(v0.clone(), m)?;
        let (traj, fin) = integrate_flow(&state, 1e-3, 1.0, &[FlowMonitor::Energy, FlowMonitor::EnergyResidual], 0)?;
        let decay = (-rate * fin.time).exp();
        let exact = VectorField::new(
            g.clone(),
            v0.components().iter().map(|c| c.iter().map(|x| x * decay).collect()).collect(),
        )?;
        let err = sup_diff(&fin.velocity, &exact);
        let res = series_max(traj.require("energy_residual")?);
        let c_ok = (fin.time - 1.0).abs() < 1e-12 && err <= 1e-8 && res <= 1e-6;
        ok &= c_ok;
        parts.push(format!("m={m}: sup error {err:.2e}, residual {res:.2e}"));
    }
    verdict(ok, parts.join(", "))
}

fn subcritical_bound() -> Result<Verdict> {
    let g = Grid::periodic_1d(0.0, 32.0 * PI, 256)?;
    let spec = ModelSpec::mkse(1, 2.0, 1);
    let results = (0..5u64)
        .into_par_iter()
        .map(|seed| -> Result<(bool, f64)> {
            let v0 = random_field(&g, &RandomSpec { seed, ..RandomSpec::default() })?;
            let cfg = RunConfig::new(spec.clone(), v0, 0.01, 20.0).with_monitors(&[Monitor::SupNorm]);
            let t = integrate(&cfg)?;
            if t.outcome != Outcome::Completed {
                return Ok((false, f64::INFINITY));
            }
            let sup = t.require("sup_norm")?;
            let i1 = t.times.iter().position(|&x| x >= 1.0 - 1e-9).unwrap_or(0);
            let (t1, s1) = (t.times[i1], sup[i1]);
            let worst = t.times[i1..]
                .iter()
                .zip(&sup[i1..])
                .map(|(tt, s)| s / (s1 * (0.3 * (tt - t1)).exp()))
                .fold(0.0, f64::max);
            Ok((true, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let completed = results.iter().all(|r| r.0);
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    verdict(
        completed && worst <= 1.0,
        format!("5 seeds completed: {completed}, max sup/(C0 e^(0.3t)) on [1,20] = {worst:.4}"),
    )
}

fn hminus1_monotone() -> Result<Verdict> {
    let g = Grid::periodic_1d(0.0, 2.0 * PI, 128)?;
    let spec = ModelSpec::new(Family::Dispersion3, 2, 2.0, 1);
    let dt = 1e-3;
    let worst = (0..10u64)
        .into_par_iter()
        .map(|seed| -> Result<f64> {
            let v0 = random_field(&g, &RandomSpec { seed, ..RandomSpec::default() })?;
            let cfg = RunConfig::new(spec.clone(), v0, dt, 1.0).with_monitors(&[Monitor::HMinus1]);
            let t = integrate(&cfg)?;
            if t.outcome != Outcome::Completed {
                return Ok(f64::INFINITY);
            }
            let h = t.require("hminus1")?;
            Ok(h.windows(2).map(|w| (w[1] - w[0]) / dt).fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(worst <= 1e-8, format!("largest H^-1 increase rate over 10 seeds = {worst:.3e}"))
}

fn duhamel_oracle() -> Result<Verdict> {
    let g = Grid::periodic_1d(0.0, 2.0 * PI, 64)?;
    let v0 = Field::from_fn(g.clone(), |x| 0.01 * x[0].sin())?;
    let spec = ModelSpec::mkse(1, 2.0, 1);
    let picard = picard_local_solve(&spec, &v0, 0.01, 8)?;
    let mut stepper = Stepper::new(&spec, &g)?;
    let mut v = v0;
    for _ in 0..100 {
        v = stepper.step(&v, 1e-4)?;
    }
    let gap = v
        .values()
        .iter()
        .zip(picard.solution.values())
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()));
    let d = &picard.differences;
    // contraction until the iterates reach rounding level
    let contracting = d.windows(2).all(|w| w[1] < w[0] || w[1] <= 1e-15);
    verdict(
        gap <= 1e-5 && contracting,
        format!("sup gap {gap:.2e}, iterate differences {:.1e} -> {:.1e}", d[0], d[d.len() - 1]),
    )
}

fn cahn_hilliard_rate() -> Result<Verdict> {
    let g = Grid::periodic_1d(0.0, 2.0 * PI, 2048)?;
    let v0 = Field::from_fn(g, |x| 10.0 * x[0].sin())?;
    let spec = ModelSpec::new(Family::CahnHilliard, 2, 3.0, 1);
    let mut cfg = RunConfig::new(spec, v0, 2e-9, 1.0).with_monitors(&[Monitor::SupNorm]);
    cfg.blowup_threshold = 1e3;
    let t = integrate(&cfg)?;
    let Outcome::BlowUp { lower, upper } = t.outcome else {
        return verdict(false, format!("expected blow-up, got {:?}", t.outcome));
    };
    let big_t = 0.5 * (lower + upper);
    let sup = t.require("sup_norm")?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = t
        .times
        .iter()
        .zip(sup)
        .filter(|(tt, s)| (20.0..=100.0).contains(*s) && **tt < big_t)
        .map(|(tt, s)| ((big_t - tt).ln(), s.ln()))
        .unzip();
    let slope = ls_slope(&xs, &ys);
    let target = -1.0 / (2.0 * (3.0 - 1.0));
    verdict(
        (slope - target).abs() <= 0.2 * target.abs(),
        format!("blow-up near t = {big_t:.6e}, fitted exponent {slope:.4} vs {target} ({} samples)", xs.len()),
    )
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn rescaling_laws() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let g1 = Grid::periodic_1d(-PI, PI, 128)?;
    for seed in 0..10 {
        let v = random_field(&g1, &RandomSpec { seed, ..RandomSpec::default() })?;
        for (kind, m, p) in [(ScalingKind::CkL2, 2, 2.0), (ScalingKind::CkHminus1, 2, 2.0), (ScalingKind::CkLp, 1, 3.0)] {
            let law = scaling_coefficients(kind, m, 1, p, 3.7 + seed as f64)?;
            let w = ck_rescale(&v, &law, None)?;
            let (a, b) = (designated_norm(&v, kind, p)?, designated_norm(&w, kind, p)?);
            worst = worst.max((a - b).abs() / a);
        }
    }
    let g3 = Grid::periodic_cube(3, 2.0 * PI, 16)?;
    let v3 = Field::from_fn(g3, |x| x[0].sin() * (2.0 * x[1]).cos() + 0.3 * (x[2] + x[0]).sin())?;
    let law = scaling_coefficients(ScalingKind::CkLp, 1, 3, 3.0, 5.0)?;
    let w3 = ck_rescale(&v3, &law, None)?;
    let (a, b) = (designated_norm(&v3, ScalingKind::CkLp, 3.0)?, designated_norm(&w3, ScalingKind::CkLp, 3.0)?);
    worst = worst.max((a - b).abs() / a);
    let nu = scaling_coefficients(ScalingKind::CkL2, 2, 1, 2.0, 10.0)?.get("nu_k").unwrap_or(f64::NAN);
    let nu_ok = (nu - 1e-5).abs() <= 1e-12 * 1e-5;
    let critical = (2..=3).all(|n| {
        scaling_coefficients(ScalingKind::CkLp, 1, n, n as f64, 10.0)
            .is_ok_and(|l| l.limit == Some(Limit::Critical) && l.get("nu_k") == Some(1.0))
    });
    verdict(
        worst <= 1e-10 && nu_ok && critical,
        format!("worst norm drift {worst:.2e}, nu_k = {nu:e}, p = N critical: {critical}"),
    )
}
