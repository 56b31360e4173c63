//! Time integration: integrating-factor RK2, blow-up detection, monitors and
//! the Picard/Duhamel local solver.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::norms::{hminus1, integrate as quad};
use crate::field::{lp_norm, Domain, Field, Grid};
use crate::io::Checkpoint;
use crate::kernels::heat_multiplier;
use crate::models::{Family, ModelOperator, ModelSpec};

/// Quantities recorded after every step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Monitor {
    SupNorm,
    /// ‖v‖₂ (not squared).
    L2,
    /// ‖v(t)‖₂² / (‖v(0)‖₂² e^{t/2}).
    L2BoundRatio,
    Lp(f64),
    HMinus1,
    /// |ΔE/(2Δt) - (1/Δt)∫⟨Lv,v⟩| with E = ‖v‖₂², Simpson in time.
    EnergyResidual,
    /// ⟨Lv,v⟩ for the linear operator L.
    EnergyRate,
    Mean,
    /// ∫₀^L v(x)(L-x)^λ dx on the interval.
    JLambda,
}

impl Monitor {
    pub fn name(&self) -> String {
        match self {
            Monitor::SupNorm => "sup_norm".into(),
            Monitor::L2 => "l2".into(),
            Monitor::L2BoundRatio => "l2_bound_ratio".into(),
            Monitor::Lp(p) => format!("lp_{p}"),
            Monitor::HMinus1 => "hminus1".into(),
            Monitor::EnergyResidual => "energy_residual".into(),
            Monitor::EnergyRate => "energy_rate".into(),
            Monitor::Mean => "mean".into(),
            Monitor::JLambda => "J_lambda".into(),
        }
    }

    /// Column order used for output.
    fn rank(&self) -> u8 {
        match self {
            Monitor::SupNorm => 0,
            Monitor::L2 => 1,
            Monitor::L2BoundRatio => 2,
            Monitor::Lp(_) => 3,
            Monitor::HMinus1 => 4,
            Monitor::EnergyResidual => 5,
            Monitor::JLambda => 6,
            Monitor::EnergyRate => 7,
            Monitor::Mean => 8,
        }
    }

    /// Stable sort into output order, dropping duplicates.
    pub fn canonical(list: &[Monitor]) -> Vec<Monitor> {
        let mut out: Vec<Monitor> = Vec::new();
        for m in list {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out.sort_by_key(|m| m.rank());
        out
    }
}

impl fmt::Display for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Monitor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sup_norm" => Monitor::SupNorm,
            "l2" => Monitor::L2,
            "l2_bound_ratio" => Monitor::L2BoundRatio,
            "hminus1" => Monitor::HMinus1,
            "energy_residual" => Monitor::EnergyResidual,
            "energy_rate" => Monitor::EnergyRate,
            "mean" => Monitor::Mean,
            "J_lambda" => Monitor::JLambda,
            _ => match s.strip_prefix("lp_").map(str::parse::<f64>) {
                Some(Ok(p)) if p >= 1.0 => Monitor::Lp(p),
                _ => return Err(format!("unknown monitor `{s}`")),
            },
        })
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// The sup norm crossed the threshold between `lower` and `upper`.
    BlowUp { lower: f64, upper: f64 },
    /// A non-finite value appeared during the step ending at `time`.
    NumericalFailure { time: f64 },
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::BlowUp { .. } => 10,
            Outcome::NumericalFailure { .. } => 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: ModelSpec,
    pub v0: Field,
    pub dt: f64,
    pub t_end: f64,
    /// Store the state every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    pub blowup_threshold: f64,
    pub monitors: Vec<Monitor>,
    /// Weight exponent for `J_lambda`.
    pub lambda: f64,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(spec: ModelSpec, v0: Field, dt: f64, t_end: f64) -> RunConfig {
        RunConfig {
            spec,
            v0,
            dt,
            t_end,
            snapshot_every: 0,
            blowup_threshold: 1e6,
            monitors: vec![Monitor::SupNorm, Monitor::L2],
            lambda: 7.0,
            seed: None,
        }
    }

    pub fn with_monitors(mut self, monitors: &[Monitor]) -> RunConfig {
        self.monitors = monitors.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate(self.v0.grid())?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(Error::param("t_end", "must exceed dt"));
        }
        if !(self.blowup_threshold > self.v0.sup_norm()) {
            return Err(Error::param("blowup_threshold", "must exceed sup|v0|"));
        }
        let grid = self.v0.grid();
        for m in &self.monitors {
            match m {
                Monitor::EnergyResidual | Monitor::EnergyRate if !self.spec.family.has_energy_identity() => {
                    return Err(Error::param(
                        "monitors",
                        format!("{m} is not available for {}", self.spec.family),
                    ));
                }
                Monitor::HMinus1 if !grid.is_periodic() => {
                    return Err(Error::param("monitors", "hminus1 needs a periodic grid"));
                }
                Monitor::JLambda if grid.is_periodic() || (grid.points()[0] - 1) % 2 != 0 => {
                    return Err(Error::param(
                        "monitors",
                        "J_lambda needs an interval grid with a node at x = 0",
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> u64 {
        ((self.t_end / self.dt) - 1e-9).ceil() as u64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub step: u64,
    pub components: Vec<Field>,
}

/// Time series of monitors plus optional snapshots.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `(monitor name, values)` in output column order.
    pub series: Vec<(String, Vec<f64>)>,
    pub snapshots: Vec<Snapshot>,
    pub outcome: Outcome,
    pub seed: Option<u64>,
    pub dt: f64,
    /// Last finite state and its step index.
    pub final_state: Vec<Field>,
    pub final_step: u64,
    /// ‖v(0)‖₂² of the run (carried through checkpoints).
    pub initial_energy: f64,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub(crate) fn require(&self, name: &str) -> Result<&[f64]> {
        self.series(name).ok_or_else(|| Error::MissingMonitor(name.to_string()))
    }

    pub fn final_time(&self) -> f64 {
        self.final_step as f64 * self.dt
    }
}

/// Integrating-factor RK2 stepper with cached exponentials.
pub struct Stepper {
    op: ModelOperator,
    cached_dt: f64,
    e_full: Vec<f64>,
    e_half: Vec<f64>,
}

impl Stepper {
    pub fn new(spec: &ModelSpec, grid: &Arc<Grid>) -> Result<Stepper> {
        Ok(Stepper {
            op: ModelOperator::new(spec, grid)?,
            cached_dt: f64::NAN,
            e_full: Vec::new(),
            e_half: Vec::new(),
        })
    }

    pub fn operator(&self) -> &ModelOperator {
        &self.op
    }

    fn prepare(&mut self, dt: f64) {
        if self.cached_dt != dt {
            self.e_full = self.op.symbol.iter().map(|l| (l * dt).exp()).collect();
            self.e_half = self.op.symbol.iter().map(|l| (l * dt / 2.0).exp()).collect();
            self.cached_dt = dt;
        }
    }

    /// One step in spectral coordinates; returns the new state and the
    /// midpoint stage.
    pub(crate) fn advance(&mut self, s: &[Complex64], dt: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        self.prepare(dt);
        let n1 = self.op.nonlinear(s);
        let mid: Vec<Complex64> = s
            .iter()
            .zip(&n1)
            .zip(&self.e_half)
            .map(|((v, n), e)| (v + n * (dt / 2.0)) * e)
            .collect();
        let n2 = self.op.nonlinear(&mid);
        let new = s
            .iter()
            .zip(&n2)
            .zip(self.e_full.iter().zip(&self.e_half))
            .map(|((v, n), (ef, eh))| v * ef + n * (dt * eh))
            .collect();
        (new, mid)
    }

    /// Advances a physical state by `dt`.
    pub fn step(&mut self, v: &Field, dt: f64) -> Result<Field> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        if v.grid() != self.op.grid() {
            return Err(Error::IncompatibleGrid("field and stepper grids differ".into()));
        }
        let s = self.op.forward(v.values());
        let (new, _) = self.advance(&s, dt);
        Field::new(v.grid().clone(), self.op.inverse(&new))
    }
}

/// One integrating-factor RK2 step of `spec` from `v`.
pub fn step(spec: &ModelSpec, v: &Field, dt: f64) -> Result<Field> {
    Stepper::new(spec, v.grid())?.step(v, dt)
}

struct MonitorContext<'a> {
    monitors: &'a [Monitor],
    lambda: f64,
    e0: f64,
}

impl MonitorContext<'_> {
    fn row(&self, v: &Field, t: f64, residual: f64, rate: Option<f64>) -> Vec<f64> {
        let e = || lp_norm(v, 2.0).map(|n| n * n).unwrap_or(f64::NAN);
        self.monitors
            .iter()
            .map(|m| match m {
                Monitor::SupNorm => v.sup_norm(),
                Monitor::L2 => lp_norm(v, 2.0).unwrap_or(f64::NAN),
                Monitor::L2BoundRatio => {
                    if self.e0 > 0.0 {
                        e() / (self.e0 * (t / 2.0).exp())
                    } else {
                        0.0
                    }
                }
                Monitor::Lp(p) => lp_norm(v, *p).unwrap_or(f64::NAN),
                Monitor::HMinus1 => hminus1(v).unwrap_or(f64::NAN),
                Monitor::EnergyResidual => residual,
                Monitor::EnergyRate => rate.unwrap_or(f64::NAN),
                Monitor::Mean => {
                    let vals = v.values();
                    quad(v.grid(), |i| vals[i]) / v.grid().volume()
                }
                Monitor::JLambda => j_lambda(v, self.lambda),
            })
            .collect()
    }
}

/// ∫₀^L v(x)(L-x)^λ dx by the trapezoid rule on the nodes with x ≥ 0.
pub fn j_lambda(v: &Field, lambda: f64) -> f64 {
    let Domain::Interval { half_length, .. } = v.grid().domain() else {
        return f64::NAN;
    };
    let n = v.len();
    let mid = (n - 1) / 2;
    let h = v.grid().spacing(0);
    let xs = v.grid().coordinates(0);
    let vals = v.values();
    let f = |j: usize| vals[j] * (half_length - xs[j]).max(0.0).powf(lambda);
    let inner: f64 = ((mid + 1)..(n - 1)).map(f).sum();
    h * (0.5 * f(mid) + inner + 0.5 * f(n - 1))
}

/// Integrates `cfg` from its initial data.
pub fn integrate(cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut stepper = Stepper::new(&cfg.spec, cfg.v0.grid())?;
    let op = stepper.operator();
    let mut s = op.forward(cfg.v0.values());
    op.truncate(&mut s);
    let v = Field::new(cfg.v0.grid().clone(), op.inverse(&s))?;
    let e0 = lp_norm(&v, 2.0)?.powi(2);
    run_from(cfg, &mut stepper, v, 0, e0, true)
}

/// Continues `cfg` from a checkpoint; the result matches an uninterrupted run.
pub fn resume(cfg: &RunConfig, checkpoint: &Checkpoint) -> Result<Trajectory> {
    cfg.validate()?;
    if checkpoint.dt.to_bits() != cfg.dt.to_bits() {
        return Err(Error::CheckpointMismatch(format!(
            "dt {} differs from checkpoint dt {}",
            cfg.dt, checkpoint.dt
        )));
    }
    let v = checkpoint
        .components
        .first()
        .ok_or_else(|| Error::CheckpointMismatch("no state".into()))?;
    if v.grid() != cfg.v0.grid() {
        return Err(Error::CheckpointMismatch("grid differs".into()));
    }
    let mut stepper = Stepper::new(&cfg.spec, cfg.v0.grid())?;
    run_from(cfg, &mut stepper, v.clone(), checkpoint.step, checkpoint.initial_energy, false)
}

fn run_from(
    cfg: &RunConfig,
    stepper: &mut Stepper,
    mut v: Field,
    start: u64,
    e0: f64,
    record_start: bool,
) -> Result<Trajectory> {
    let monitors = Monitor::canonical(&cfg.monitors);
    let ctx = MonitorContext {
        monitors: &monitors,
        lambda: cfg.lambda,
        e0,
    };
    let wants_energy = monitors
        .iter()
        .any(|m| matches!(m, Monitor::EnergyResidual | Monitor::EnergyRate));
    let dt = cfg.dt;
    let grid = v.grid().clone();
    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut snapshots = Vec::new();
    let mut outcome = Outcome::Completed;

    let energy = |f: &Field| lp_norm(f, 2.0).map(|n| n * n);
    let t0 = start as f64 * dt;
    if record_start {
        let rate = wants_energy.then(|| stepper.op.linear_form(&stepper.op.forward(v.values())));
        times.push(t0);
        rows.push(ctx.row(&v, t0, 0.0, rate));
        if cfg.snapshot_every > 0 {
            snapshots.push(Snapshot {
                time: t0,
                step: start,
                components: vec![v.clone()],
            });
        }
    }
    let mut e_prev = if wants_energy { energy(&v)? } else { 0.0 };
    let mut n = start;
    let total = cfg.steps();
    while n < total {
        let s = stepper.op.forward(v.values());
        let (new, mid) = stepper.advance(&s, dt);
        let t = (n + 1) as f64 * dt;
        let next = match Field::new(grid.clone(), stepper.op.inverse(&new)) {
            Ok(f) => f,
            Err(_) => {
                outcome = Outcome::NumericalFailure { time: t };
                break;
            }
        };
        n += 1;
        let (residual, rate) = if wants_energy {
            let op = &stepper.op;
            let r0 = op.linear_form(&s);
            let rm = op.linear_form(&mid);
            let r1 = op.linear_form(&op.forward(next.values()));
            let e1 = energy(&next)?;
            let simpson = dt / 6.0 * (r0 + 4.0 * rm + r1);
            let res = ((e1 - e_prev) / (2.0 * dt) - simpson / dt).abs();
            e_prev = e1;
            (res, Some(r1))
        } else {
            (0.0, None)
        };
        times.push(t);
        rows.push(ctx.row(&next, t, residual, rate));
        v = next;
        if cfg.snapshot_every > 0 && n % cfg.snapshot_every as u64 == 0 {
            snapshots.push(Snapshot {
                time: t,
                step: n,
                components: vec![v.clone()],
            });
        }
        if v.sup_norm() >= cfg.blowup_threshold {
            outcome = Outcome::BlowUp {
                lower: (n - 1) as f64 * dt,
                upper: t,
            };
            break;
        }
    }

    let series = monitors
        .iter()
        .enumerate()
        .map(|(k, m)| (m.name(), rows.iter().map(|r| r[k]).collect()))
        .collect();
    Ok(Trajectory {
        times,
        series,
        snapshots,
        outcome,
        seed: cfg.seed,
        dt,
        final_state: vec![v],
        final_step: n,
        initial_energy: e0,
    })
}

/// Largest value of ‖v(t)‖²/(‖v(0)‖² e^{t/2}) along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2GrowthReport {
    pub max_ratio: f64,
    pub time_of_max: f64,
    pub within_bound: bool,
}

/// Checks the a priori L² bound using the `l2_bound_ratio` monitor, or the
/// `l2` monitor when the ratio was not recorded.
pub fn l2_growth_check(traj: &Trajectory, tolerance: f64) -> Result<L2GrowthReport> {
    let ratios: Vec<f64> = match traj.series("l2_bound_ratio") {
        Some(r) => r.to_vec(),
        None => {
            let l2 = traj.require("l2")?;
            let e0 = traj.initial_energy;
            l2.iter()
                .zip(&traj.times)
                .map(|(n, t)| if e0 > 0.0 { n * n / (e0 * (t / 2.0).exp()) } else { 0.0 })
                .collect()
        }
    };
    let (i, max_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bm), (i, r)| if r > bm { (i, r) } else { (bi, bm) });
    Ok(L2GrowthReport {
        max_ratio,
        time_of_max: traj.times.get(i).copied().unwrap_or(0.0),
        within_bound: max_ratio <= 1.0 + tolerance,
    })
}

/// Subintervals of the product-integration rule in `picard_local_solve`.
pub const PICARD_SUBINTERVALS: usize = 64;

#[derive(Clone, Debug)]
pub struct PicardReport {
    pub solution: Field,
    /// sup-norm difference between successive iterates at the final time.
    pub differences: Vec<f64>,
    /// Ratios of successive differences.
    pub contraction_ratios: Vec<f64>,
}

/// Fixed-point iteration of the Duhamel formula
/// v = b(t)*v0 + ∫ b(t-s) * [(-Δ)^l v + B₁|v|^p](s) ds
/// for `Mkse` (with the destabilizing term) and `PureDivergent` (without),
/// in Fourier space with exact exponential weights on each subinterval.
pub fn picard_local_solve(spec: &ModelSpec, v0: &Field, t: f64, iterations: usize) -> Result<PicardReport> {
    if !matches!(spec.family, Family::Mkse | Family::PureDivergent) {
        return Err(Error::InvalidModel(format!(
            "Picard solver supports mkse and pure_divergent, not {}",
            spec.family
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("t", "must be positive"));
    }
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    let op = ModelOperator::new(spec, v0.grid())?;
    let crate::models::Basis::Fourier(f) = &op.basis else {
        return Err(Error::NotPeriodic);
    };
    let k2 = f.k_squared();
    let m = spec.m;
    let l_mult: Vec<f64> = k2
        .iter()
        .map(|&q| if spec.family == Family::Mkse { q.powi(spec.l as i32) } else { 0.0 })
        .collect();
    let nm = PICARD_SUBINTERVALS;
    let ds = t / nm as f64;
    let a: Vec<f64> = k2.iter().map(|&q| q.powi(m as i32)).collect();
    // weights[d][k] = ∫ over a subinterval ending d intervals before s_i
    let weights: Vec<Vec<f64>> = (1..=nm)
        .map(|d| {
            a.iter()
                .map(|&ak| {
                    if ak == 0.0 {
                        ds
                    } else {
                        ((-ak * (d - 1) as f64 * ds).exp() - (-ak * d as f64 * ds).exp()) / ak
                    }
                })
                .collect()
        })
        .collect();
    let s0 = f.forward_real(v0.values());
    let free: Vec<Vec<Complex64>> = (0..=nm)
        .map(|i| {
            s0.iter()
                .zip(&k2)
                .map(|(z, &q)| z * heat_multiplier(m, i as f64 * ds, q))
                .collect()
        })
        .collect();
    let mut iterate = free.clone();
    let scale = v0.sup_norm().max(1.0);
    let mut differences = Vec::new();
    let mut last = f.inverse_real(&iterate[nm]);
    for it in 1..=iterations {
        let forcing: Vec<Vec<Complex64>> = iterate[..nm]
            .iter()
            .map(|s| {
                let mut g = op.nonlinear(s);
                g.iter_mut().zip(s.iter().zip(&l_mult)).for_each(|(g, (z, l))| *g += z * l);
                g
            })
            .collect();
        let mut next = free.clone();
        for i in 1..=nm {
            for j in 0..i {
                let w = &weights[i - j - 1];
                next[i]
                    .iter_mut()
                    .zip(forcing[j].iter().zip(w))
                    .for_each(|(acc, (g, wk))| *acc += g * wk);
            }
        }
        let phys = f.inverse_real(&next[nm]);
        let diff = phys.iter().zip(&last).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        if !diff.is_finite() || (it > 1 && diff > differences[it - 2] && diff > 1e-12 * scale) {
            return Err(Error::PicardDivergence {
                iteration: it,
                difference: diff,
            });
        }
        differences.push(diff);
        last = phys;
        iterate = next;
    }
    let contraction_ratios = differences
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    Ok(PicardReport {
        solution: Field::new(v0.grid().clone(), last)?,
        differences,
        contraction_ratios,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn monitor_names_round_trip() {
        for m in [Monitor::SupNorm, Monitor::Lp(3.0), Monitor::JLambda, Monitor::EnergyResidual] {
            assert_eq!(m.name().parse::<Monitor>().unwrap(), m);
        }
        assert!("lp_0.5".parse::<Monitor>().is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::periodic_1d(0.0, 2.0 * PI, 32).unwrap();
        let cfg = RunConfig::new(ModelSpec::mkse(1, 2.0, 1), Field::zeros(g), 0.01, 0.1);
        let traj = integrate(&cfg).unwrap();
        assert_eq!(traj.outcome, Outcome::Completed);
        assert!(traj.series("sup_norm").unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(traj.times.len(), 11);
    }

    #[test]
    fn single_linear_mode_decays_exactly() {
        let g = Grid::periodic_1d(0.0, 2.0 * PI, 32).unwrap();
        let v = Field::from_fn(g.clone(), |x| 1e-3 * (3.0 * x[0]).sin()).unwrap();
        let spec = ModelSpec::new(Family::PureDivergent, 1, 2.0, 1).with_drift(vec![0.0]);
        let w = step(&spec, &v, 0.1).unwrap();
        let decay = (-9.0f64 * 0.1).exp();
        for (a, b) in w.values().iter().zip(v.values()) {
            assert!((a - b * decay).abs() < 1e-15);
        }
    }
}
