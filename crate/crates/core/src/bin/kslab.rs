use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kslab::acceptance;
use kslab::app::{execute, execute_sweep, workers_from_env};
use kslab::config::Config;
use kslab::Error;

/// Numerical laboratory for higher-order Kuramoto–Sivashinsky-type equations.
#[derive(Parser)]
#[command(name = "kslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scalar model.
    Run(Common),
    /// Integrate a hyperviscous incompressible flow.
    Flow(Common),
    /// Compute the fundamental solution and its decay fit.
    Kernel(Common),
    /// Blow-up certificates from the capacity method.
    Certify(Common),
    /// Solve the Volterra inequality and compare with its bound.
    Volterra(Common),
    /// Scaling coefficients, C_k rescaling and reference spectra.
    Rescale(Common),
    /// Expand `sweep.*` keys and run every point.
    Sweep(Common),
    /// Run the acceptance suite.
    Check {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file (`section.key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set model.p=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from a checkpoint (run and flow only).
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Certificate case: strict, zero or negative.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    j0: Option<f64>,
    /// Scaling kind for `rescale`.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    ck: Option<f64>,
}

impl Common {
    fn config(&self, action: Option<&str>) -> Result<Config, Error> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?,
            None => String::new(),
        };
        let mut cfg = Config::from_text(&text)?;
        if let Some(a) = action {
            cfg.set("run.action", a)?;
        }
        let flags: [(&str, Option<String>); 14] = [
            ("model.family", self.family.clone()),
            ("model.m", self.m.map(|v| v.to_string())),
            ("grid.dim", self.dim.map(|v| v.to_string())),
            ("model.p", self.p.map(|v| v.to_string())),
            ("run.seed", self.seed.map(|v| v.to_string())),
            ("time.dt", self.dt.map(|v| v.to_string())),
            ("time.t_end", self.t_end.map(|v| v.to_string())),
            ("certify.case", self.case.clone()),
            ("certify.a", self.a.map(|v| v.to_string())),
            ("certify.kappa", self.kappa.map(|v| v.to_string())),
            ("certify.j0", self.j0.map(|v| v.to_string())),
            ("rescale.kind", self.kind.clone()),
            ("rescale.ck", self.ck.map(|v| v.to_string())),
            ("output.dir", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: 0,
                message: format!("--set expects KEY=VALUE, got `{kv}`"),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn single(common: &Common, action: &str) -> Result<i32, Error> {
    let cfg = common.config(Some(action))?;
    if cfg.is_sweep() {
        return sweep_with(&cfg);
    }
    let out = PathBuf::from(cfg.output_dir());
    let summary = execute(&cfg, &out, common.resume.as_deref())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary.report).unwrap_or_default()
    );
    eprintln!("outputs written to {}", out.display());
    Ok(summary.exit_code)
}

fn sweep_with(cfg: &Config) -> Result<i32, Error> {
    let out = PathBuf::from(cfg.output_dir());
    let summaries = execute_sweep(cfg, &out, workers_from_env())?;
    println!("{} runs written to {}", summaries.len(), out.display());
    Ok(summaries.iter().map(|s| s.exit_code).find(|&c| c != 0).unwrap_or(0))
}

fn check(only: &[usize]) -> i32 {
    let ids: Vec<usize> = if only.is_empty() {
        (1..=acceptance::CRITERIA).collect()
    } else {
        only.to_vec()
    };
    let mut failed = 0;
    for id in ids {
        match acceptance::run_criterion(id) {
            Some(r) => {
                println!("{r}");
                failed += usize::from(!r.passed);
            }
            None => {
                eprintln!("no criterion {id}");
                failed += 1;
            }
        }
    }
    i32::from(failed > 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => single(c, "run"),
        Command::Flow(c) => single(c, "flow"),
        Command::Kernel(c) => single(c, "kernel"),
        Command::Certify(c) => single(c, "certify"),
        Command::Volterra(c) => single(c, "volterra"),
        Command::Rescale(c) => single(c, "rescale"),
        Command::Sweep(c) => c.config(None).and_then(|cfg| sweep_with(&cfg)),
        Command::Check { only } => Ok(check(only)),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kslab: {e}");
            if e.is_config_error() {
                2
            } else {
                1
            }
        }
    };
    ExitCode::from(code as u8)
}
