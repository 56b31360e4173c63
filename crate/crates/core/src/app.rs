//! Runs configured jobs and writes their artifacts.
//!
//! Every run directory holds `config.txt` (the resolved configuration),
//! `report.json`, the job's CSV tables and `manifest.json`, which lists all of
//! them together with the configuration digest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::capacity::{certify_blowup, j_lower_bound, riccati_oracle, t_infinity_bound};
use crate::config::{Action, CertifyJob, Config, FlowJob, Job, KernelJob, RescaleJob, VolterraJob};
use crate::error::{Error, Result};
use crate::evolve::{integrate, l2_growth_check, resume, Outcome, RunConfig, Trajectory};
use crate::field::VectorField;
use crate::flows::{integrate_flow, regularity_monitor, FlowMonitor, FlowState};
use crate::io::{write_csv, write_json, write_snapshot, write_table, Checkpoint, RunManifest};
use crate::kernels::{fit_decay, fundamental_solution, kernel_grid, kernel_residual};
use crate::rescale::{ck_rescale, designated_norm, reference_spectrum};
use crate::volterra::volterra_bound_with;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "KSLAB_WORKERS";

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub action: Action,
    pub dir: PathBuf,
    pub exit_code: i32,
    pub outcome: Option<Outcome>,
    pub report: Value,
    /// File names relative to `dir`, manifest excluded.
    pub outputs: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    outputs: Vec<String>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.dir.join(name)
    }
}

/// Executes one (non-sweep) configuration into `dir`. `resume` names a
/// checkpoint for `run` and `flow` jobs.
pub fn execute(cfg: &Config, dir: &Path, resume_from: Option<&Path>) -> Result<RunSummary> {
    if cfg.is_sweep() {
        return Err(Error::param("config", "sweep configurations go through execute_sweep"));
    }
    let job = cfg.job()?;
    let action = cfg.action()?;
    if resume_from.is_some() && !matches!(action, Action::Run | Action::Flow) {
        return Err(Error::param("resume", "only run and flow jobs can resume"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = Writer { dir, outputs: Vec::new() };
    let canonical = cfg.canonical()?;
    let p = w.path("config.txt");
    fs::write(&p, &canonical).map_err(|e| Error::io(&p, e))?;
    let checkpoint = cfg.checkpoint_enabled()?;
    let (outcome, report) = match &job {
        Job::Run(rc) => run_job(rc, &mut w, resume_from, checkpoint)?,
        Job::Flow(fj) => flow_job(fj, &mut w, resume_from, checkpoint)?,
        Job::Kernel(kj) => (None, kernel_job(kj, &mut w)?),
        Job::Certify(cj) => (None, certify_job(cj, &mut w)?),
        Job::Volterra(vj) => (None, volterra_job(vj, &mut w)?),
        Job::Rescale(rj) => (None, rescale_job(rj, &mut w)?),
    };
    let exit_code = outcome.map_or(0, |o| o.exit_code());
    let report = json!({
        "action": action.name(),
        "exit_code": exit_code,
        "result": report,
    });
    let p = w.path("report.json");
    write_json(&p, &report)?;
    let manifest = RunManifest {
        config_digest: crate::io::digest(&canonical),
        seed: Some(cfg.seed()?),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        workers: rayon::current_num_threads(),
        fft_threads: 1,
        outcome,
        outputs: w.outputs.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunSummary {
        action,
        dir: dir.to_path_buf(),
        exit_code,
        outcome,
        report,
        outputs: w.outputs,
    })
}

fn series_summary(traj: &Trajectory) -> Value {
    let mut out = serde_json::Map::new();
    for (name, v) in &traj.series {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.insert(
            name.clone(),
            json!({ "initial": v.first(), "final": v.last(), "max": max }),
        );
    }
    Value::Object(out)
}

fn run_job(rc: &RunConfig, w: &mut Writer, from: Option<&Path>, checkpoint: bool) -> Result<(Option<Outcome>, Value)> {
    let traj = match from {
        Some(path) => resume(rc, &Checkpoint::load(path)?)?,
        None => integrate(rc)?,
    };
    write_csv(&w.path("monitors.csv"), &traj)?;
    for s in &traj.snapshots {
        write_snapshot(&w.path(&format!("snapshot_{:08}.ksb", s.step)), &s.components[0])?;
    }
    if checkpoint {
        Checkpoint::from_trajectory(&traj).save(&w.path("checkpoint.ksck"))?;
    }
    let growth = traj
        .series("l2_bound_ratio")
        .and_then(|_| l2_growth_check(&traj, 1e-4).ok());
    let report = json!({
        "family": rc.spec.family.name(),
        "outcome": traj.outcome,
        "final_time": traj.final_time(),
        "steps": traj.final_step,
        "monitors": series_summary(&traj),
        "l2_growth": growth,
    });
    Ok((Some(traj.outcome), report))
}

fn flow_job(fj: &FlowJob, w: &mut Writer, from: Option<&Path>, checkpoint: bool) -> Result<(Option<Outcome>, Value)> {
    let mut monitors = fj.monitors.clone();
    let lp = FlowMonitor::Lp(fj.regularity_p);
    if !monitors.contains(&lp) {
        monitors.push(lp);
    }
    let state = match from {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            if ck.dt.to_bits() != fj.dt.to_bits() {
                return Err(Error::CheckpointMismatch(format!("dt {} differs from {}", ck.dt, fj.dt)));
            }
            let grid = fj.state.velocity.grid();
            if ck.components.len() != grid.dim() || ck.components.iter().any(|c| c.grid() != grid) {
                return Err(Error::CheckpointMismatch("grid differs from the configured one".into()));
            }
            let velocity = VectorField::from_fields(&ck.components)?;
            FlowState {
                velocity,
                m: fj.state.m,
                time: ck.time(),
            }
        }
        None => fj.state.clone(),
    };
    let (mut traj, _) = integrate_flow(&state, fj.dt, fj.t_end, &monitors, fj.snapshot_every)?;
    traj.seed = Some(fj.seed);
    write_csv(&w.path("monitors.csv"), &traj)?;
    for s in &traj.snapshots {
        for (a, c) in s.components.iter().enumerate() {
            write_snapshot(&w.path(&format!("snapshot_{:08}_v{a}.ksb", s.step)), c)?;
        }
    }
    if checkpoint {
        Checkpoint::from_trajectory(&traj).save(&w.path("checkpoint.ksck"))?;
    }
    let grid = fj.state.velocity.grid();
    let regularity = regularity_monitor(&traj, fj.state.m, grid.dim(), fj.regularity_p, traj.final_time())?;
    let report = json!({
        "m": fj.state.m,
        "outcome": traj.outcome,
        "final_time": traj.final_time(),
        "steps": traj.final_step,
        "monitors": series_summary(&traj),
        "regularity": {
            "p": regularity.p,
            "p0": regularity.p0,
            "above_threshold": regularity.above_threshold,
            "critical": regularity.critical,
            "max_lp": regularity.max_lp,
            "serrin_initial": regularity.serrin.first().map(|x| x.1),
        },
    });
    Ok((Some(traj.outcome), report))
}

fn kernel_job(kj: &KernelJob, w: &mut Writer) -> Result<Value> {
    let grid = kernel_grid(kj.dim, kj.half_width, kj.points)?;
    let mut kernel = fundamental_solution(kj.m, &grid)?;
    let residual = kernel_residual(&kernel)?;
    let fit = if kj.fit {
        match fit_decay(&mut kernel) {
            Ok(f) => json!(f),
            Err(e) => json!({ "error": e.to_string() }),
        }
    } else {
        Value::Null
    };
    // line through the origin along the first axis
    let n = kj.points;
    let stride: usize = n.pow(kj.dim as u32 - 1);
    let offset = centre_offset(n, kj.dim);
    let ys = grid.coordinates(0);
    let f: Vec<f64> = (0..n).map(|j| kernel.profile.values()[j * stride + offset]).collect();
    write_table(&w.path("kernel.csv"), &["y", "F"], &[&ys, &f])?;
    let m = kj.m as f64;
    Ok(json!({
        "m": kj.m,
        "dim": kj.dim,
        "mass": kernel.mass,
        "l1_norm": kernel.l1_norm(),
        "residual": residual,
        "decay": fit,
        "expected_alpha": 2.0 * m / (2.0 * m - 1.0),
    }))
}

/// Flat offset of the origin in the trailing axes of a centred cube.
fn centre_offset(n: usize, dim: usize) -> usize {
    (1..dim).fold(0, |acc, _| acc * n + n / 2)
}

fn certify_job(cj: &CertifyJob, w: &mut Writer) -> Result<Value> {
    match cj {
        CertifyJob::ClosedForm { case, kappa, j0 } => {
            let t_inf = t_infinity_bound(case, *kappa, *j0)?;
            let times: Vec<f64> = (0..=200).map(|i| 2.0 * t_inf * i as f64 / 200.0).collect();
            let oracle = riccati_oracle(case, *kappa, *j0, &times)?;
            let mut agreement: f64 = 0.0;
            let mut bound = Vec::with_capacity(oracle.times.len());
            for (t, j) in oracle.times.iter().zip(&oracle.values) {
                let b = if *t < t_inf { j_lower_bound(case, *kappa, *j0, *t)? } else { f64::NAN };
                if *t <= 0.9 * t_inf {
                    agreement = agreement.max((j - b).abs() / b.abs().max(1e-300));
                }
                bound.push(b);
            }
            write_table(
                &w.path("riccati.csv"),
                &["t", "J_oracle", "J_closed_form"],
                &[&oracle.times, &oracle.values, &bound],
            )?;
            Ok(json!({
                "case": case,
                "kappa": kappa,
                "j0": j0,
                "t_infinity": t_inf,
                "oracle_divergence": oracle.divergence,
                "max_relative_disagreement": agreement,
                "diverges_before_bound": oracle.divergence.is_some_and(|(lo, _)| lo <= t_inf),
            }))
        }
        CertifyJob::Search { data, ranges } => {
            let cert = certify_blowup(data, ranges)?;
            Ok(json!({ "certificate": cert, "ranges": ranges }))
        }
    }
}

fn volterra_job(vj: &VolterraJob, w: &mut Writer) -> Result<Value> {
    let r = volterra_bound_with(vj.p, vj.m, vj.dim, vj.t_end, vj.steps, vj.epsilon)?;
    write_table(&w.path("volterra.csv"), &["t", "V", "V_hat"], &[&r.times, &r.v, &r.v_hat])?;
    Ok(json!({
        "beta": r.beta,
        "epsilon": r.epsilon,
        "bounded": r.bounded,
        "monotone": r.v.windows(2).all(|p| p[1] >= p[0]),
        "final_v": r.v.last(),
        "final_v_hat": r.v_hat.last(),
    }))
}

fn rescale_job(rj: &RescaleJob, w: &mut Writer) -> Result<Value> {
    let spectrum = reference_spectrum(rj.spectrum, rj.law.m, rj.k_max);
    let norms = match &rj.field {
        Some(v) => {
            let before = designated_norm(v, rj.law.kind, rj.law.p)?;
            let rescaled = ck_rescale(v, &rj.law, None)?;
            let after = designated_norm(&rescaled, rj.law.kind, rj.law.p)?;
            write_snapshot(&w.path("rescaled.ksb"), &rescaled)?;
            json!({ "before": before, "after": after, "relative_change": (after - before).abs() / before.max(1e-300) })
        }
        None => Value::Null,
    };
    Ok(json!({ "law": rj.law, "spectrum": spectrum, "norms": norms }))
}

/// Runs every sweep point in `dir/run_NNN` on a pool of `workers` threads
/// (default: one per run) and writes `sweep.json`.
pub fn execute_sweep(cfg: &Config, dir: &Path, workers: Option<usize>) -> Result<Vec<RunSummary>> {
    use rayon::prelude::*;
    let runs = cfg.expand();
    for r in &runs {
        r.job()?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let size = workers.unwrap_or(runs.len()).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(size)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    let results: Vec<Result<RunSummary>> = pool.install(|| {
        runs.par_iter()
            .enumerate()
            .map(|(i, r)| {
                let sub = dir.join(format!("run_{i:03}"));
                let res = execute(r, &sub, None);
                match &res {
                    Ok(s) => eprintln!("[run_{i:03}] {} finished with exit code {}", s.action, s.exit_code),
                    Err(e) => eprintln!("[run_{i:03}] failed: {e}"),
                }
                res
            })
            .collect()
    });
    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        summaries.push(r?);
    }
    let index: Vec<Value> = summaries
        .iter()
        .zip(&runs)
        .enumerate()
        .map(|(i, (s, c))| {
            json!({
                "index": i,
                "dir": format!("run_{i:03}"),
                "digest": c.digest().ok(),
                "exit_code": s.exit_code,
            })
        })
        .collect();
    write_json(&dir.join("sweep.json"), &json!({ "workers": size, "runs": index }))?;
    Ok(summaries)
}
