//! Line-oriented `section.key = value` configuration.
//!
//! Every key has a default; `auto` defaults are filled from the rest of the
//! configuration when it is resolved. `sweep.<key> = a,b,c` lines turn a file
//! into the Cartesian product of the listed values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::capacity::{BlowupCase, BoundaryTraces, CapacityData, Profile, SearchRanges};
use crate::error::{Error, Result};
use crate::evolve::{Monitor, RunConfig};
use crate::field::{random_field, BoundaryKind, Field, Grid, RandomSpec};
use crate::flows::{random_solenoidal, taylor_green, FlowMonitor, FlowState};
use crate::io::{digest, read_snapshot};
use crate::models::{apply_bcs, Family, ModelSpec};
use crate::rescale::{scaling_coefficients, ScalingKind, ScalingLaw, SpectrumCase};

/// Known keys and their defaults, in canonical order.
const KEYS: &[(&str, &str)] = &[
    ("certify.a", "1"),
    ("certify.case", "strict"),
    ("certify.cells", "64"),
    ("certify.j0", "0"),
    ("certify.kappa", "1"),
    ("certify.lambda_range", "6,30"),
    ("certify.length_range", "0.5,4"),
    ("certify.mode", "closed_form"),
    ("certify.profile", "constant:1"),
    ("certify.traces", "0,0,0,0"),
    ("grid.bc", "navier"),
    ("grid.dim", "1"),
    ("grid.extent", "auto"),
    ("grid.half_length", "4"),
    ("grid.kind", "auto"),
    ("grid.lower", "0"),
    ("grid.points", "auto"),
    ("init.amplitude", "1"),
    ("init.file", ""),
    ("init.kmax", "8"),
    ("init.l2_norm", "1"),
    ("init.mode", "1"),
    ("init.preset", "auto"),
    ("init.width", "1"),
    ("kernel.fit", "true"),
    ("kernel.half_width", "120"),
    ("kernel.points", "2048"),
    ("model.drift", ""),
    ("model.family", "kse_ibvp"),
    ("model.l", "1"),
    ("model.m", "2"),
    ("model.p", "2"),
    ("monitor.lambda", "7"),
    ("monitor.list", "auto"),
    ("monitor.regularity_p", "3"),
    ("output.checkpoint", "true"),
    ("output.dir", "kslab-out"),
    ("rescale.alpha", "auto"),
    ("rescale.ck", "10"),
    ("rescale.k_max", "4"),
    ("rescale.kind", "ck_l2"),
    ("rescale.spectrum", "generic"),
    ("run.action", "run"),
    ("run.seed", "0"),
    ("time.dt", "1e-4"),
    ("time.snapshot_every", "0"),
    ("time.t_end", "1"),
    ("time.threshold", "1e6"),
    ("volterra.epsilon", "0.01"),
    ("volterra.steps", "2000"),
    ("volterra.t_end", "3"),
];

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Run,
    Flow,
    Kernel,
    Certify,
    Volterra,
    Rescale,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Run => "run",
            Action::Flow => "flow",
            Action::Kernel => "kernel",
            Action::Certify => "certify",
            Action::Volterra => "volterra",
            Action::Rescale => "rescale",
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            Action::Run,
            Action::Flow,
            Action::Kernel,
            Action::Certify,
            Action::Volterra,
            Action::Rescale,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowJob {
    pub state: FlowState,
    pub dt: f64,
    pub t_end: f64,
    pub monitors: Vec<FlowMonitor>,
    pub snapshot_every: usize,
    pub regularity_p: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelJob {
    pub m: u32,
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
    pub fit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertifyJob {
    /// Closed-form bound checked against the Riccati oracle.
    ClosedForm { case: BlowupCase, kappa: f64, j0: f64 },
    /// Search over (λ, L) for data given by boundary traces and a profile.
    Search { data: CapacityData, ranges: SearchRanges },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolterraJob {
    pub p: f64,
    pub m: u32,
    pub dim: u32,
    pub t_end: f64,
    pub steps: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescaleJob {
    pub law: ScalingLaw,
    /// Data to rescale for C_k kinds on periodic grids.
    pub field: Option<Field>,
    pub spectrum: SpectrumCase,
    pub k_max: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Run(RunConfig),
    Flow(FlowJob),
    Kernel(KernelJob),
    Certify(CertifyJob),
    Volterra(VolterraJob),
    Rescale(RescaleJob),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
    sweep: Vec<(String, Vec<String>)>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            sweep: Vec::new(),
        }
    }
}

fn value_err(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Re-labels library errors with the config key responsible for them.
fn under(key: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| {
        if e.is_config_error() {
            e
        } else {
            value_err(key, e.to_string())
        }
    }
}

/// Parses and validates a configuration (including every sweep point).
pub fn parse_config(text: &str) -> Result<Config> {
    let cfg = Config::from_text(text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    /// Syntax and key checks only.
    pub fn from_text(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::ConfigSyntax {
                    line,
                    message: format!("expected `section.key = value`, got `{body}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !k.contains('.') || k.contains(char::is_whitespace) {
                return Err(Error::ConfigSyntax {
                    line,
                    message: format!("malformed key `{k}`"),
                });
            }
            if let Some(first) = seen.insert(k.to_string(), line) {
                return Err(Error::ConfigSyntax {
                    line,
                    message: format!("`{k}` already set on line {first}"),
                });
            }
            match k.strip_prefix("sweep.") {
                Some(target) if known(target) => {
                    let vals: Vec<String> = v
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                    if vals.is_empty() {
                        return Err(value_err(k, "a sweep needs at least one value"));
                    }
                    cfg.sweep.push((target.to_string(), vals));
                }
                None if known(k) => {
                    cfg.values.insert(k.to_string(), v.to_string());
                }
                _ => {
                    return Err(Error::UnknownKey {
                        key: k.to_string(),
                        line,
                    })
                }
            }
        }
        Ok(cfg)
    }

    /// Command-line override; replaces any sweep over the same key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(target) = key.strip_prefix("sweep.") {
            if !known(target) {
                return Err(Error::UnknownKey {
                    key: key.to_string(),
                    line: 0,
                });
            }
            let vals: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
            self.sweep.retain(|(k, _)| k != target);
            self.sweep.push((target.to_string(), vals));
            return Ok(());
        }
        if !known(key) {
            return Err(Error::UnknownKey {
                key: key.to_string(),
                line: 0,
            });
        }
        self.sweep.retain(|(k, _)| k != key);
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn is_sweep(&self) -> bool {
        !self.sweep.is_empty()
    }

    /// Cartesian product over the sweep axes, first axis slowest.
    pub fn expand(&self) -> Vec<Config> {
        let mut out = vec![Config {
            values: self.values.clone(),
            sweep: Vec::new(),
        }];
        for (key, vals) in &self.sweep {
            out = out
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |v| {
                        let mut c = c.clone();
                        c.values.insert(key.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        out
    }

    /// Builds the job of every sweep point.
    pub fn validate(&self) -> Result<()> {
        for c in self.expand() {
            c.job()?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key);
        v.parse::<T>().map_err(|e| value_err(key, format!("cannot parse `{v}`: {e}")))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let x: f64 = self.parsed(key)?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(value_err(key, "must be finite"))
        }
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let x = self.f64(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(value_err(key, format!("must be positive, got {x}")))
        }
    }

    fn list_f64(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.raw(key);
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| value_err(key, format!("`{}` is not a finite number", s.trim())))
            })
            .collect()
    }

    fn per_axis(&self, key: &str, dim: usize) -> Result<Vec<f64>> {
        let v = self.list_f64(key)?;
        match v.len() {
            1 => Ok(vec![v[0]; dim]),
            n if n == dim => Ok(v),
            n => Err(value_err(key, format!("{n} values for {dim} axes"))),
        }
    }

    pub fn action(&self) -> Result<Action> {
        self.parsed("run.action")
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed("run.seed")
    }

    pub fn output_dir(&self) -> &str {
        self.raw("output.dir")
    }

    pub fn checkpoint_enabled(&self) -> Result<bool> {
        self.parsed("output.checkpoint")
    }

    fn family(&self) -> Result<Family> {
        self.parsed("model.family")
    }

    fn dim(&self) -> Result<usize> {
        let d: usize = self.parsed("grid.dim")?;
        if (1..=3).contains(&d) {
            Ok(d)
        } else {
            Err(value_err("grid.dim", "must be 1, 2 or 3"))
        }
    }

    fn m(&self) -> Result<u32> {
        let m: u32 = self.parsed("model.m")?;
        if m == 0 {
            return Err(value_err("model.m", "must be at least 1"));
        }
        Ok(m)
    }

    fn p(&self) -> Result<f64> {
        let p = self.f64("model.p")?;
        if p > 1.0 {
            Ok(p)
        } else {
            Err(value_err("model.p", "p must exceed 1"))
        }
    }

    /// Copy with every `auto` value filled in.
    pub fn resolved(&self) -> Result<Config> {
        let mut c = self.clone();
        let action = self.action()?;
        let family = self.family()?;
        let interval = match self.raw("grid.kind") {
            "auto" => action == Action::Run && family == Family::KseIbvp,
            "interval" => true,
            "periodic" => false,
            other => return Err(value_err("grid.kind", format!("expected interval or periodic, got `{other}`"))),
        };
        let mut put = |k: &str, v: String| {
            if c.values[k] == "auto" {
                c.values.insert(k.to_string(), v);
            }
        };
        put("grid.kind", if interval { "interval" } else { "periodic" }.into());
        let points = match (interval, action) {
            (true, _) => 257,
            (false, Action::Flow) => 64,
            _ => 128,
        };
        put("grid.points", points.to_string());
        put("grid.extent", (2.0 * PI).to_string());
        put(
            "init.preset",
            match action {
                Action::Flow => "taylor_green",
                _ if interval => "sine",
                _ => "random",
            }
            .into(),
        );
        let monitors = match action {
            Action::Flow => "sup_norm,energy,enstrophy,energy_residual,divergence,lp_3".to_string(),
            _ => {
                let mut v = vec!["sup_norm", "l2", "l2_bound_ratio"];
                if !interval {
                    v.push("hminus1");
                }
                if family.has_energy_identity() {
                    v.push("energy_residual");
                }
                v.join(",")
            }
        };
        put("monitor.list", monitors);
        let m = self.m()? as f64;
        let p = self.f64("model.p")?;
        put("rescale.alpha", ((2.0 * m - 1.0) / (2.0 * m * (p - 1.0))).to_string());
        Ok(c)
    }

    /// Sorted `key = value` lines of the resolved configuration.
    pub fn canonical(&self) -> Result<String> {
        let r = self.resolved()?;
        let mut out = String::new();
        for (k, v) in &r.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (k, vals) in &self.sweep {
            out.push_str(&format!("sweep.{k} = {}\n", vals.join(",")));
        }
        Ok(out)
    }

    pub fn digest(&self) -> Result<String> {
        Ok(digest(&self.canonical()?))
    }

    fn grid(&self) -> Result<Arc<Grid>> {
        let r = self.resolved()?;
        let dim = r.dim()?;
        if r.raw("grid.kind") == "interval" {
            if dim != 1 {
                return Err(value_err("grid.dim", "interval grids are one-dimensional"));
            }
            let bc = match r.raw("grid.bc") {
                "navier" => BoundaryKind::Navier,
                "dirichlet" => BoundaryKind::Dirichlet,
                other => return Err(value_err("grid.bc", format!("expected navier or dirichlet, got `{other}`"))),
            };
            let n: usize = r.parsed("grid.points")?;
            return Grid::interval(r.positive("grid.half_length")?, n, bc).map_err(under("grid.points"));
        }
        let points = r
            .per_axis("grid.points", dim)?
            .into_iter()
            .map(|x| {
                if x.fract() == 0.0 && x > 0.0 {
                    Ok(x as usize)
                } else {
                    Err(value_err("grid.points", format!("`{x}` is not a point count")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let extents = r.per_axis("grid.extent", dim)?;
        let lower = r.per_axis("grid.lower", dim)?;
        Grid::periodic(lower, extents, points).map_err(under("grid.points"))
    }

    fn scalar_init(&self, grid: &Arc<Grid>) -> Result<Field> {
        let r = self.resolved()?;
        let amp = r.f64("init.amplitude")?;
        let k = r.f64("init.mode")?;
        let field = match r.raw("init.preset") {
            "zero" => Field::zeros(grid.clone()),
            "sine" => match (grid.half_length(), grid.bc()) {
                (Some(l), Some(BoundaryKind::Dirichlet)) => Field::from_fn(grid.clone(), |x| {
                    amp * (k * PI * (x[0] + l) / (2.0 * l)).sin().powi(2)
                })?,
                (Some(l), _) => Field::from_fn(grid.clone(), |x| amp * (k * PI * x[0] / l).sin())?,
                _ => {
                    let (lo, ext) = (grid.lower()[0], grid.extents()[0]);
                    Field::from_fn(grid.clone(), |x| amp * (2.0 * PI * k * (x[0] - lo) / ext).sin())?
                }
            },
            "gaussian" => {
                let w = r.positive("init.width")?;
                let centre: Vec<f64> = match grid.half_length() {
                    Some(_) => vec![0.0],
                    None => grid.lower().iter().zip(grid.extents()).map(|(l, e)| l + e / 2.0).collect(),
                };
                Field::from_fn(grid.clone(), |x| {
                    let d2: f64 = x.iter().zip(&centre).map(|(a, c)| (a - c).powi(2)).sum();
                    amp * (-d2 / (w * w)).exp()
                })?
            }
            "random" => {
                let spec = RandomSpec {
                    seed: r.seed()?,
                    kmax: r.parsed("init.kmax")?,
                    l2_norm: Some(r.positive("init.l2_norm")?),
                    zero_mean: true,
                };
                random_field(grid, &spec).map_err(under("init.kmax"))?
            }
            "file" => {
                let path = r.raw("init.file");
                let f = read_snapshot(std::path::Path::new(path)).map_err(under("init.file"))?;
                if f.grid() != grid {
                    return Err(value_err("init.file", "snapshot grid differs from the configured grid"));
                }
                f
            }
            other => return Err(value_err("init.preset", format!("unknown preset `{other}`"))),
        };
        apply_bcs(&field)
    }

    fn time(&self) -> Result<(f64, f64)> {
        let dt = self.positive("time.dt")?;
        let t_end = self.positive("time.t_end")?;
        if t_end <= dt {
            return Err(value_err("time.t_end", "must exceed time.dt"));
        }
        Ok((dt, t_end))
    }

    /// Builds the typed job described by this (single, non-sweep) config.
    pub fn job(&self) -> Result<Job> {
        let r = self.resolved()?;
        match r.action()? {
            Action::Run => r.run_job().map(Job::Run),
            Action::Flow => r.flow_job().map(Job::Flow),
            Action::Kernel => Ok(Job::Kernel(KernelJob {
                m: r.m()?,
                dim: r.dim()?,
                half_width: r.positive("kernel.half_width")?,
                points: r.parsed("kernel.points")?,
                fit: r.parsed("kernel.fit")?,
            })),
            Action::Certify => r.certify_job().map(Job::Certify),
            Action::Volterra => {
                let steps: usize = r.parsed("volterra.steps")?;
                if steps < 2 {
                    return Err(value_err("volterra.steps", "need at least 2"));
                }
                Ok(Job::Volterra(VolterraJob {
                    p: r.p()?,
                    m: r.m()?,
                    dim: r.dim()? as u32,
                    t_end: r.positive("volterra.t_end")?,
                    steps,
                    epsilon: r.positive("volterra.epsilon")?,
                }))
            }
            Action::Rescale => r.rescale_job().map(Job::Rescale),
        }
    }

    fn run_job(&self) -> Result<RunConfig> {
        let family = self.family()?;
        let p = self.p()?;
        let dim = self.dim()?;
        let m = self.m()?;
        let l: u32 = self.parsed("model.l")?;
        let mut spec = match family {
            Family::KseIbvp => ModelSpec::kse_ibvp(),
            Family::Mkse => {
                if m != 2 * l {
                    return Err(value_err("model.l", format!("mkse needs m = 2l (m = {m}, l = {l})")));
                }
                ModelSpec::mkse(l, p, dim)
            }
            f => ModelSpec::new(f, m, p, dim),
        };
        let drift = self.list_f64("model.drift")?;
        if !drift.is_empty() {
            spec = spec.with_drift(drift);
        }
        let grid = self.grid()?;
        spec.validate(&grid).map_err(under("model.family"))?;
        let v0 = self.scalar_init(&grid)?;
        let (dt, t_end) = self.time()?;
        let monitors = self
            .raw("monitor.list")
            .split(',')
            .map(|s| s.trim().parse::<Monitor>().map_err(|e| value_err("monitor.list", e)))
            .collect::<Result<Vec<_>>>()?;
        let mut cfg = RunConfig::new(spec, v0, dt, t_end).with_monitors(&Monitor::canonical(&monitors));
        cfg.blowup_threshold = self.positive("time.threshold")?;
        cfg.snapshot_every = self.parsed("time.snapshot_every")?;
        cfg.lambda = self.positive("monitor.lambda")?;
        cfg.seed = Some(self.seed()?);
        cfg.validate().map_err(|e| match &e {
            Error::InvalidParameter { name, .. } if name == "monitors" => value_err("monitor.list", e.to_string()),
            Error::InvalidParameter { name, .. } if name == "blowup_threshold" => {
                value_err("time.threshold", e.to_string())
            }
            _ => under("model.family")(e),
        })?;
        Ok(cfg)
    }

    fn flow_job(&self) -> Result<FlowJob> {
        let grid = self.grid()?;
        if !grid.is_periodic() || grid.dim() < 2 {
            return Err(value_err("grid.dim", "flows need a periodic grid with 2 or 3 axes"));
        }
        let seed = self.seed()?;
        let amp = self.f64("init.amplitude")?;
        let velocity = match self.raw("init.preset") {
            "taylor_green" => taylor_green(&grid, amp).map_err(under("init.preset"))?,
            "random" => random_solenoidal(&grid, seed, self.parsed("init.kmax")?, self.positive("init.l2_norm")?)
                .map_err(under("init.kmax"))?,
            "zero" => crate::field::VectorField::new(grid.clone(), vec![vec![0.0; grid.len()]; grid.dim()])?,
            other => return Err(value_err("init.preset", format!("`{other}` is not a flow preset"))),
        };
        let state = FlowState::new(velocity, self.m()?).map_err(under("init.preset"))?;
        let (dt, t_end) = self.time()?;
        let monitors = self
            .raw("monitor.list")
            .split(',')
            .map(|s| s.trim().parse::<FlowMonitor>().map_err(|e| value_err("monitor.list", e)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FlowJob {
            state,
            dt,
            t_end,
            monitors,
            snapshot_every: self.parsed("time.snapshot_every")?,
            regularity_p: self.positive("monitor.regularity_p")?,
            seed,
        })
    }

    fn certify_job(&self) -> Result<CertifyJob> {
        match self.raw("certify.mode") {
            "closed_form" => {
                let a = self.f64("certify.a")?;
                let case = match self.raw("certify.case") {
                    "strict" => BlowupCase::Strict { a },
                    "zero" => BlowupCase::Zero,
                    "negative" => BlowupCase::Negative { a },
                    other => return Err(value_err("certify.case", format!("unknown case `{other}`"))),
                };
                let kappa = self.f64("certify.kappa")?;
                let j0 = self.f64("certify.j0")?;
                crate::capacity::t_infinity_bound(&case, kappa, j0).map_err(under("certify.case"))?;
                Ok(CertifyJob::ClosedForm { case, kappa, j0 })
            }
            "search" => {
                let t = self.list_f64("certify.traces")?;
                if t.len() != 4 {
                    return Err(value_err("certify.traces", "expected v,Dv,D2v,D3v"));
                }
                let interior = parse_profile(self.raw("certify.profile"))
                    .ok_or_else(|| value_err("certify.profile", "expected constant:c or power:c:mu"))?;
                let pair = |key: &str| -> Result<(f64, f64)> {
                    match self.list_f64(key)?.as_slice() {
                        [a, b] => Ok((*a, *b)),
                        _ => Err(value_err(key, "expected lo,hi")),
                    }
                };
                Ok(CertifyJob::Search {
                    data: CapacityData {
                        boundary: BoundaryTraces {
                            v: t[0],
                            dv: t[1],
                            d2v: t[2],
                            d3v: t[3],
                        },
                        interior,
                    },
                    ranges: SearchRanges {
                        lambda: pair("certify.lambda_range")?,
                        length: pair("certify.length_range")?,
                        cells: self.parsed("certify.cells")?,
                    },
                })
            }
            other => Err(value_err("certify.mode", format!("expected closed_form or search, got `{other}`"))),
        }
    }

    fn rescale_job(&self) -> Result<RescaleJob> {
        let kind: ScalingKind = self.parsed("rescale.kind")?;
        let m = self.m()?;
        let dim = self.dim()?;
        let law = scaling_coefficients(kind, m, dim as u32, self.p()?, self.positive("rescale.ck")?)
            .map_err(under("rescale.kind"))?;
        let field = if law.nu_exponent.is_some() && self.raw("grid.kind") == "periodic" {
            let grid = self.grid()?;
            Some(self.scalar_init(&grid)?)
        } else {
            None
        };
        let spectrum = match self.raw("rescale.spectrum") {
            "generic" => SpectrumCase::Generic {
                alpha: self.f64("rescale.alpha")?,
            },
            "nse" => SpectrumCase::Nse,
            "burnett" => SpectrumCase::Burnett,
            other => return Err(value_err("rescale.spectrum", format!("unknown spectrum `{other}`"))),
        };
        Ok(RescaleJob {
            law,
            field,
            spectrum,
            k_max: self.parsed("rescale.k_max")?,
        })
    }
}

fn parse_profile(s: &str) -> Option<Profile> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    match parts.as_slice() {
        ["constant", c] => Some(Profile::Constant { value: num(c)? }),
        ["power", c, mu] => Some(Profile::Power {
            coefficient: num(c)?,
            exponent: num(mu)?,
        }),
        _ => None,
    }
}
