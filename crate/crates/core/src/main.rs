use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermal_shadows::experiment::{run_to_bytes, Command, ExperimentConfig};
use thermal_shadows::shadow::{Bound, StateSource};
use thermal_shadows::Error;

#[derive(Parser)]
#[command(version, about = "Thermal shadow experiments: JSON config in, CSV out")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Per-observable errors against the number of shadows, for every source.
    ShadowsVsCount,
    /// Mean and maximum errors across system sizes.
    ErrorVsSize,
    /// Required shadow counts across system sizes.
    BudgetSweep,
    /// Minimax error and minimum degree across inverse temperatures.
    PolyfitSweep,
    /// Gate counts and depths per circuit section across system sizes.
    ResourcesSweep,
    /// Depth histograms of lowered random unitaries.
    RuStats,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::ShadowsVsCount => Command::ShadowsVsCount,
            Cmd::ErrorVsSize => Command::ErrorVsSize,
            Cmd::BudgetSweep => Command::BudgetSweep,
            Cmd::PolyfitSweep => Command::PolyfitSweep,
            Cmd::ResourcesSweep => Command::ResourcesSweep,
            Cmd::RuStats => Command::RuStats,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV destination (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    n_min: Option<usize>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    bound: Option<Bound>,
    #[arg(long, global = true)]
    degree: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    source: Option<StateSource>,
    /// Comma-separated shadow counts.
    #[arg(long, global = true, value_delimiter = ',')]
    shadow_counts: Option<Vec<usize>>,
    /// Comma-separated inverse temperatures for the polynomial sweep.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    betas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    rotation_eps: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    jx: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    jy: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    jz: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    hx: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    hy: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    hz: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_json(&fs::read_to_string(p)?)?,
            None => ExperimentConfig::default(),
        };
        set(&mut c.seed, self.seed);
        set(&mut c.n, self.n);
        if self.n_min.is_some() {
            c.n_min = self.n_min;
        }
        if self.n_max.is_some() {
            c.n_max = self.n_max;
        }
        set(&mut c.beta, self.beta);
        set(&mut c.epsilon, self.epsilon);
        set(&mut c.delta, self.delta);
        set(&mut c.bound, self.bound);
        set(&mut c.degree, self.degree);
        set(&mut c.samples, self.samples);
        set(&mut c.source, self.source);
        set(&mut c.shadow_counts, self.shadow_counts.clone());
        set(&mut c.betas, self.betas.clone());
        set(&mut c.threshold, self.threshold);
        set(&mut c.rotation_eps, self.rotation_eps);
        set(&mut c.couplings.jx, self.jx);
        set(&mut c.couplings.jy, self.jy);
        set(&mut c.couplings.jz, self.jz);
        set(&mut c.couplings.hx, self.hx);
        set(&mut c.couplings.hy, self.hy);
        set(&mut c.couplings.hz, self.hz);
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = Command::from(cli.cmd);
    let result = cli
        .common
        .config()
        .and_then(|cfg| {
            cfg.validate(cmd)?;
            run_to_bytes(cmd, &cfg)
        })
        .and_then(|bytes| {
            match &cli.common.out {
                Some(p) => fs::write(p, bytes)?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
            Ok(())
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(issues)) => {
            eprintln!("error: invalid configuration for {cmd}");
            for i in issues {
                eprintln!("  {i}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
