//! Hyperviscous incompressible flows v_t + P(v·∇)v = -(-Δ)^m v, div v = 0,
//! on periodic boxes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{Outcome, Snapshot, Trajectory};
use crate::field::spectral::Fourier;
use crate::field::{lp_norm, random_field, Field, Grid, RandomSpec, VectorField};

/// Relative divergence tolerance for accepted initial data.
pub const SOLENOIDAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub velocity: VectorField,
    /// Order of the dissipation (-Δ)^m.
    pub m: u32,
    pub time: f64,
}

impl FlowState {
    pub fn new(velocity: VectorField, m: u32) -> Result<FlowState> {
        if m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        if !velocity.grid().is_periodic() {
            return Err(Error::NotPeriodic);
        }
        let div = divergence(&velocity)?.sup_norm();
        if div > SOLENOIDAL_TOL * velocity.sup_norm().max(1.0) {
            return Err(Error::NotSolenoidal(div));
        }
        Ok(FlowState {
            velocity,
            m,
            time: 0.0,
        })
    }
}

struct FlowOperator {
    f: Fourier,
    k2: Vec<f64>,
    /// ξ per axis with unresolved (Nyquist) modes flagged.
    xi: Vec<Vec<f64>>,
    nyquist: Vec<bool>,
    mask: Vec<bool>,
    deriv: Vec<Vec<Complex64>>,
}

type Spectral = Vec<Vec<Complex64>>;

impl FlowOperator {
    fn new(grid: &Grid) -> Result<FlowOperator> {
        let f = Fourier::for_grid(grid)?;
        let dim = f.dim();
        let mut xi = vec![vec![0.0; f.len()]; dim];
        let mut nyquist = vec![false; f.len()];
        f.for_each_mode(|i, k, nyq| {
            for a in 0..dim {
                xi[a][i] = k[a];
            }
            nyquist[i] = nyq.iter().any(|&b| b);
        });
        let deriv = (0..dim).map(|a| f.derivative_multiplier(a, 1)).collect();
        Ok(FlowOperator {
            k2: f.k_squared(),
            mask: f.dealias_mask(),
            f,
            xi,
            nyquist,
            deriv,
        })
    }

    fn dim(&self) -> usize {
        self.xi.len()
    }

    fn forward(&self, u: &VectorField) -> Spectral {
        u.components().iter().map(|c| self.f.forward_real(c)).collect()
    }

    fn inverse(&self, s: &Spectral) -> Vec<Vec<f64>> {
        s.iter().map(|c| self.f.inverse_real(c)).collect()
    }

    /// û - ξ(ξ·û)/|ξ|²; Nyquist modes are dropped.
    fn project(&self, s: &mut Spectral) {
        let dim = self.dim();
        for i in 0..self.f.len() {
            if self.nyquist[i] {
                s.iter_mut().for_each(|c| c[i] = Complex64::new(0.0, 0.0));
                continue;
            }
            let q = self.k2[i];
            if q == 0.0 {
                continue;
            }
            let dot: Complex64 = (0..dim).map(|a| s[a][i] * self.xi[a][i]).sum();
            for a in 0..dim {
                s[a][i] -= dot * (self.xi[a][i] / q);
            }
        }
    }

    /// Dealiased (u·∇)u in spectral form.
    fn advection(&self, s: &Spectral) -> Spectral {
        let dim = self.dim();
        let u = self.inverse(s);
        (0..dim)
            .map(|i| {
                let mut acc = vec![0.0; self.f.len()];
                for a in 0..dim {
                    let d: Vec<Complex64> = s[i].iter().zip(&self.deriv[a]).map(|(z, k)| z * k).collect();
                    let g = self.f.inverse_real(&d);
                    acc.iter_mut().zip(u[a].iter().zip(&g)).for_each(|(x, (ua, gi))| *x += ua * gi);
                }
                let mut out = self.f.forward_real(&acc);
                out.iter_mut().zip(&self.mask).filter(|(_, &k)| !k).for_each(|(z, _)| *z = Complex64::new(0.0, 0.0));
                out
            })
            .collect()
    }

    fn nonlinear(&self, s: &Spectral) -> Spectral {
        let mut a = self.advection(s);
        self.project(&mut a);
        a.iter_mut().flatten().for_each(|z| *z = -*z);
        a
    }

    fn norm_factor(&self, grid: &Grid) -> f64 {
        let n = self.f.len() as f64;
        grid.volume() / (n * n)
    }
}

fn to_field(grid: &Arc<Grid>, comps: Vec<Vec<f64>>) -> Result<VectorField> {
    VectorField::new(grid.clone(), comps)
}

/// Leray projection onto divergence-free fields.
pub fn leray_project(u: &VectorField) -> Result<VectorField> {
    let op = FlowOperator::new(u.grid())?;
    let mut s = op.forward(u);
    op.project(&mut s);
    to_field(u.grid(), op.inverse(&s))
}

/// Spectral divergence.
pub fn divergence(u: &VectorField) -> Result<Field> {
    let op = FlowOperator::new(u.grid())?;
    let s = op.forward(u);
    let mut acc = vec![Complex64::new(0.0, 0.0); op.f.len()];
    for (a, c) in s.iter().enumerate() {
        acc.iter_mut().zip(c.iter().zip(&op.deriv[a])).for_each(|(x, (z, k))| *x += z * k);
    }
    Field::new(u.grid().clone(), op.f.inverse_real(&acc))
}

/// Dealiased advection term (u·∇)u, not projected.
pub fn advection(u: &VectorField) -> Result<VectorField> {
    let op = FlowOperator::new(u.grid())?;
    let a = op.advection(&op.forward(u));
    to_field(u.grid(), op.inverse(&a))
}

/// -(-Δ)^m v - P(v·∇)v.
pub fn rhs_flow(state: &FlowState) -> Result<VectorField> {
    let u = &state.velocity;
    let op = FlowOperator::new(u.grid())?;
    let s = op.forward(u);
    let mut n = op.nonlinear(&s);
    for (c, sc) in n.iter_mut().zip(&s) {
        for (i, z) in c.iter_mut().enumerate() {
            *z -= sc[i] * op.k2[i].powi(state.m as i32);
        }
    }
    to_field(u.grid(), op.inverse(&n))
}

/// Pressure from -Δp = div((v·∇)v), zero mean.
pub fn recover_pressure(state: &FlowState) -> Result<Field> {
    let u = &state.velocity;
    let op = FlowOperator::new(u.grid())?;
    let a = op.advection(&op.forward(u));
    let mut p = vec![Complex64::new(0.0, 0.0); op.f.len()];
    for i in 0..op.f.len() {
        let q = op.k2[i];
        if q == 0.0 {
            continue;
        }
        let div: Complex64 = (0..op.dim()).map(|c| a[c][i] * op.deriv[c][i]).sum();
        p[i] = div / q;
    }
    Field::new(u.grid().clone(), op.f.inverse_real(&p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowMonitor {
    SupNorm,
    /// ∫|v|²
    Energy,
    /// ∫|∇v|²
    Enstrophy,
    /// ⟨(-Δ)^m v, v⟩
    Dissipation,
    Lp(f64),
    EnergyResidual,
    /// sup|div v|
    Divergence,
    /// Largest |mean| over the components.
    Momentum,
}

impl FlowMonitor {
    pub fn name(&self) -> String {
        match self {
            FlowMonitor::SupNorm => "sup_norm".into(),
            FlowMonitor::Energy => "energy".into(),
            FlowMonitor::Enstrophy => "enstrophy".into(),
            FlowMonitor::Dissipation => "dissipation".into(),
            FlowMonitor::Lp(p) => format!("lp_{p}"),
            FlowMonitor::EnergyResidual => "energy_residual".into(),
            FlowMonitor::Divergence => "divergence".into(),
            FlowMonitor::Momentum => "momentum".into(),
        }
    }
}

impl fmt::Display for FlowMonitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FlowMonitor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sup_norm" => FlowMonitor::SupNorm,
            "energy" => FlowMonitor::Energy,
            "enstrophy" => FlowMonitor::Enstrophy,
            "dissipation" => FlowMonitor::Dissipation,
            "energy_residual" => FlowMonitor::EnergyResidual,
            "divergence" => FlowMonitor::Divergence,
            "momentum" => FlowMonitor::Momentum,
            _ => match s.strip_prefix("lp_").map(str::parse::<f64>) {
                Some(Ok(p)) if p >= 1.0 => FlowMonitor::Lp(p),
                _ => return Err(format!("unknown flow monitor `{s}`")),
            },
        })
    }
}

/// Integrating-factor RK2 for the flow; every evaluation is dealiased and
/// projected. Runs from `state.time` (a multiple of `dt`) to the absolute time
/// `t_end` and returns the trajectory and the final state.
pub fn integrate_flow(
    state: &FlowState,
    dt: f64,
    t_end: f64,
    monitors: &[FlowMonitor],
    snapshot_every: usize,
) -> Result<(Trajectory, FlowState)> {
    if !(dt.is_finite() && dt > 0.0 && t_end.is_finite() && t_end > state.time + dt / 2.0) {
        return Err(Error::param("dt, t_end", "need dt > 0 and t_end beyond the current time"));
    }
    let n0 = (state.time / dt).round() as u64;
    let grid = state.velocity.grid().clone();
    let op = FlowOperator::new(&grid)?;
    let m = state.m;
    let lin: Vec<f64> = op.k2.iter().map(|q| -q.powi(m as i32)).collect();
    let e_full: Vec<f64> = lin.iter().map(|l| (l * dt).exp()).collect();
    let e_half: Vec<f64> = lin.iter().map(|l| (l * dt / 2.0).exp()).collect();
    let nf = op.norm_factor(&grid);
    let dissipation = |s: &Spectral| -> f64 {
        nf * s
            .iter()
            .map(|c| c.iter().zip(&op.k2).map(|(z, q)| q.powi(m as i32) * z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
    };
    let energy = |u: &VectorField| -> f64 {
        let mag = u.magnitude();
        lp_norm(&mag, 2.0).map(|n| n * n).unwrap_or(f64::NAN)
    };
    let row = |u: &VectorField, s: &Spectral, residual: f64| -> Vec<f64> {
        monitors
            .iter()
            .map(|mon| match mon {
                FlowMonitor::SupNorm => u.sup_norm(),
                FlowMonitor::Energy => energy(u),
                FlowMonitor::Enstrophy => {
                    nf * s
                        .iter()
                        .map(|c| c.iter().zip(&op.k2).map(|(z, q)| q * z.norm_sqr()).sum::<f64>())
                        .sum::<f64>()
                }
                FlowMonitor::Dissipation => dissipation(s),
                FlowMonitor::Lp(p) => lp_norm(&u.magnitude(), *p).unwrap_or(f64::NAN),
                FlowMonitor::EnergyResidual => residual,
                FlowMonitor::Divergence => divergence(u).map(|d| d.sup_norm()).unwrap_or(f64::NAN),
                FlowMonitor::Momentum => s
                    .iter()
                    .map(|c| c[0].norm() / op.f.len() as f64)
                    .fold(0.0, f64::max),
            })
            .collect()
    };

    let steps = ((t_end / dt) - 1e-9).ceil() as u64 - n0;
    let mut u = state.velocity.clone();
    let mut s = op.forward(&u);
    let mut times = vec![n0 as f64 * dt];
    let mut rows = vec![row(&u, &s, 0.0)];
    let mut snapshots = Vec::new();
    let snap = |u: &VectorField, t: f64, n: u64| Snapshot {
        time: t,
        step: n,
        components: (0..u.grid().dim()).map(|a| u.component(a)).collect(),
    };
    if snapshot_every > 0 {
        snapshots.push(snap(&u, n0 as f64 * dt, n0));
    }
    let mut e_prev = energy(&u);
    let mut outcome = Outcome::Completed;
    let mut n = 0;
    while n < steps {
        let n1 = op.nonlinear(&s);
        let mid: Spectral = s
            .iter()
            .zip(&n1)
            .map(|(c, nc)| {
                c.iter()
                    .zip(nc)
                    .zip(&e_half)
                    .map(|((v, w), e)| (v + w * (dt / 2.0)) * e)
                    .collect()
            })
            .collect();
        let n2 = op.nonlinear(&mid);
        let new: Spectral = s
            .iter()
            .zip(&n2)
            .map(|(c, nc)| {
                c.iter()
                    .zip(nc)
                    .enumerate()
                    .map(|(i, (v, w))| v * e_full[i] + w * (dt * e_half[i]))
                    .collect()
            })
            .collect();
        let t = (n0 + n + 1) as f64 * dt;
        let next = match to_field(&grid, op.inverse(&new)) {
            Ok(v) => v,
            Err(_) => {
                outcome = Outcome::NumericalFailure { time: t };
                break;
            }
        };
        n += 1;
        let s_next = op.forward(&next);
        let e1 = energy(&next);
        let simpson = -dt / 6.0 * (dissipation(&s) + 4.0 * dissipation(&mid) + dissipation(&s_next));
        let residual = ((e1 - e_prev) / (2.0 * dt) - simpson / dt).abs();
        e_prev = e1;
        times.push(t);
        rows.push(row(&next, &s_next, residual));
        if snapshot_every > 0 && (n0 + n) % snapshot_every as u64 == 0 {
            snapshots.push(snap(&next, t, n0 + n));
        }
        u = next;
        s = s_next;
    }
    let series = monitors
        .iter()
        .enumerate()
        .map(|(k, mon)| (mon.name(), rows.iter().map(|r| r[k]).collect()))
        .collect();
    let final_state = FlowState {
        velocity: u.clone(),
        m,
        time: (n0 + n) as f64 * dt,
    };
    let traj = Trajectory {
        times,
        series,
        snapshots,
        outcome,
        seed: None,
        dt,
        final_state: (0..grid.dim()).map(|a| u.component(a)).collect(),
        final_step: n0 + n,
        initial_energy: energy(&state.velocity),
    };
    Ok((traj, final_state))
}

/// Summary of the L^p and Serrin-type criteria along a flow trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub p: f64,
    /// N/(2m-1)
    pub p0: f64,
    pub above_threshold: bool,
    pub critical: bool,
    pub max_lp: f64,
    /// `(t, (1/(T-t)) ∫_t^T ∫|v|³)` for sampled t < T; empty without `lp_3`.
    pub serrin: Vec<(f64, f64)>,
}

pub fn regularity_monitor(traj: &Trajectory, m: u32, dim: usize, p: f64, horizon: f64) -> Result<RegularityReport> {
    let p0 = dim as f64 / (2.0 * m as f64 - 1.0);
    let name = FlowMonitor::Lp(p).name();
    let lp = traj.require(&name)?;
    let max_lp = lp.iter().copied().fold(0.0, f64::max);
    let mut serrin = Vec::new();
    if let Some(l3) = traj.series("lp_3") {
        let cubes: Vec<f64> = l3.iter().map(|x| x * x * x).collect();
        let ts = &traj.times;
        let end = ts.iter().rposition(|&t| t <= horizon + 1e-12).unwrap_or(0);
        for i in 0..end {
            let integral: f64 = (i..end)
                .map(|k| 0.5 * (ts[k + 1] - ts[k]) * (cubes[k] + cubes[k + 1]))
                .sum();
            serrin.push((ts[i], integral / (horizon - ts[i])));
        }
    }
    Ok(RegularityReport {
        p,
        p0,
        above_threshold: p > p0 * (1.0 + 1e-12),
        critical: (p - p0).abs() <= 1e-12 * p0,
        max_lp,
        serrin,
    })
}

/// v = A (cos x sin y, -sin x cos y) on a 2D periodic grid.
pub fn taylor_green(grid: &Arc<Grid>, amplitude: f64) -> Result<VectorField> {
    if grid.dim() != 2 {
        return Err(Error::param("grid", "Taylor-Green data is two-dimensional"));
    }
    let u = Field::from_fn(grid.clone(), |x| amplitude * x[0].cos() * x[1].sin())?;
    let v = Field::from_fn(grid.clone(), |x| -amplitude * x[0].sin() * x[1].cos())?;
    VectorField::from_fields(&[u, v])
}

/// Projected band-limited random data rescaled to the given L² norm.
pub fn random_solenoidal(grid: &Arc<Grid>, seed: u64, kmax: usize, l2_norm: f64) -> Result<VectorField> {
    let comps = (0..grid.dim())
        .map(|a| {
            let spec = RandomSpec {
                seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(a as u64),
                kmax,
                l2_norm: None,
                zero_mean: true,
            };
            random_field(grid, &spec).map(Field::into_values)
        })
        .collect::<Result<Vec<_>>>()?;
    let u = leray_project(&VectorField::new(grid.clone(), comps)?)?;
    let norm = lp_norm(&u.magnitude(), 2.0)?;
    if norm == 0.0 {
        return Ok(u);
    }
    let scale = l2_norm / norm;
    VectorField::new(
        grid.clone(),
        u.components().iter().map(|c| c.iter().map(|x| x * scale).collect()).collect(),
    )
}
