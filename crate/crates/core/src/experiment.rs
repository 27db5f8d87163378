//! Experiment drivers: a JSON configuration in, one plot-ready CSV out.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{expectation, GibbsState, DENSE_LIMIT};
use crate::error::{Error, FieldIssue, Result};
use crate::minimax::{min_degree_for, remez_fit, DEGREE_CAP};
use crate::pauli::{build_xxz, observable_set, Couplings, Hamiltonian, PauliString};
use crate::resources::lower::LoweringOptions;
use crate::resources::study::{random_unitary_stats, scaling_study, STUDY_MAX_QUBITS};
use crate::resources::Target;
use crate::shadow::{
    estimates_from_scores, sample_budget, snapshot_scores, tight_epsilon, Bound, SampleBudget,
    StateSource, ThermalSampler,
};

/// Locality of the observable set (all one- and two-qubit Paulis).
pub const OBSERVABLE_LOCALITY: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    ShadowsVsCount,
    ErrorVsSize,
    BudgetSweep,
    PolyfitSweep,
    ResourcesSweep,
    RuStats,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::ShadowsVsCount,
        Command::ErrorVsSize,
        Command::BudgetSweep,
        Command::PolyfitSweep,
        Command::ResourcesSweep,
        Command::RuStats,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::ShadowsVsCount => "shadows-vs-count",
            Command::ErrorVsSize => "error-vs-size",
            Command::BudgetSweep => "budget-sweep",
            Command::PolyfitSweep => "polyfit-sweep",
            Command::ResourcesSweep => "resources-sweep",
            Command::RuStats => "ru-stats",
        }
    }

    /// Inclusive system-size range used when the config gives none.
    fn default_range(self, n: usize) -> (usize, usize) {
        match self {
            Command::ErrorVsSize => (3, 10),
            Command::BudgetSweep | Command::ResourcesSweep => (3, 12),
            _ => (n, n),
        }
    }

    /// Inclusive bounds any requested range must respect.
    fn range_limits(self) -> (usize, usize) {
        match self {
            Command::ErrorVsSize => (3, 10),
            Command::BudgetSweep => (2, 64),
            Command::ResourcesSweep => (2, STUDY_MAX_QUBITS),
            Command::RuStats => (1, STUDY_MAX_QUBITS),
            Command::ShadowsVsCount | Command::PolyfitSweep => (2, DENSE_LIMIT),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| crate::error::invalid(format!("unknown command `{s}`")))
    }
}

/// Parameters shared by every subcommand. Defaults reproduce the 6-qubit
/// chain at `beta = 1.5` with `eps = 0.2`, `delta = 0.01` and `d = 24`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub beta: f64,
    pub couplings: Couplings,
    pub epsilon: f64,
    pub delta: f64,
    pub bound: Bound,
    pub degree: usize,
    pub seed: u64,
    pub samples: usize,
    pub source: StateSource,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    /// Shadow counts for `shadows-vs-count`.
    pub shadow_counts: Vec<usize>,
    /// Inverse temperatures for `polyfit-sweep`.
    pub betas: Vec<f64>,
    /// Target sup-norm error for the minimum-degree search.
    pub threshold: f64,
    pub rotation_eps: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 6,
            beta: 1.5,
            couplings: Couplings::default(),
            epsilon: 0.2,
            delta: 0.01,
            bound: Bound::Tight,
            degree: 24,
            seed: 0,
            samples: 1000,
            source: StateSource::QspTpq,
            n_min: None,
            n_max: None,
            shadow_counts: vec![500, 1000, 2000, 5000, 10_000, 20_000, 50_000],
            betas: (1..=26).map(|i| 0.4 + 0.1 * i as f64).map(round6).collect(),
            threshold: 1e-5,
            rotation_eps: 1e-10,
        }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| {
            Error::Config(vec![FieldIssue {
                field: "<document>".into(),
                message: e.to_string(),
            }])
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Inclusive system-size range a command iterates over.
    pub fn range_for(&self, cmd: Command) -> (usize, usize) {
        let (lo, hi) = cmd.default_range(self.n);
        (self.n_min.unwrap_or(lo), self.n_max.unwrap_or(hi))
    }

    pub fn hamiltonian(&self, n: usize) -> Result<Hamiltonian> {
        build_xxz(n, &self.couplings)
    }

    /// Every failed check for `cmd`; empty when the config is usable.
    pub fn issues(&self, cmd: Command) -> Vec<FieldIssue> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: String| {
            out.push(FieldIssue {
                field: field.into(),
                message,
            })
        };
        let uses_state = matches!(cmd, Command::ShadowsVsCount | Command::ErrorVsSize);
        let uses_range = !matches!(cmd, Command::ShadowsVsCount | Command::PolyfitSweep);

        if cmd == Command::ShadowsVsCount && !(2..=DENSE_LIMIT).contains(&self.n) {
            bad("n", format!("must lie in 2..={DENSE_LIMIT}, got {}", self.n));
        }
        if uses_state || cmd == Command::ResourcesSweep {
            let c = &self.couplings;
            let all = [c.jx, c.jy, c.jz, c.hx, c.hy, c.hz];
            if all.iter().any(|v| !v.is_finite()) {
                bad("couplings", "all couplings must be finite".into());
            } else if all.iter().all(|&v| v == 0.0) {
                bad("couplings", "at least one coupling must be nonzero".into());
            }
        }
        if uses_state && !(self.beta.is_finite() && self.beta >= 0.0) {
            bad("beta", format!("must be finite and non-negative, got {}", self.beta));
        }
        if matches!(cmd, Command::ShadowsVsCount | Command::ErrorVsSize | Command::BudgetSweep) {
            if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
                bad("epsilon", format!("must lie in (0, 1], got {}", self.epsilon));
            }
            if !(self.delta > 0.0 && self.delta < 1.0) {
                bad("delta", format!("must lie in (0, 1), got {}", self.delta));
            }
        }
        let needs_degree = matches!(cmd, Command::PolyfitSweep | Command::ResourcesSweep)
            || (uses_state && self.source == StateSource::QspTpq);
        if needs_degree && self.degree > DEGREE_CAP {
            bad("degree", format!("must be at most {DEGREE_CAP}, got {}", self.degree));
        }
        if cmd == Command::RuStats && self.samples == 0 {
            bad("samples", "must be at least 1".into());
        }
        if cmd == Command::ShadowsVsCount {
            if self.shadow_counts.is_empty() {
                bad("shadow_counts", "must list at least one count".into());
            } else if self.epsilon > 0.0 && self.delta > 0.0 && self.delta < 1.0 {
                let m = 3 * self.n + 9 * self.n * self.n.saturating_sub(1) / 2;
                let k = set_count(m, self.delta);
                if let Some(&c) = self.shadow_counts.iter().find(|&&c| c < k) {
                    bad("shadow_counts", format!("count {c} is below the set count K = {k}"));
                }
            }
        }
        if cmd == Command::PolyfitSweep {
            if self.betas.is_empty() {
                bad("betas", "must list at least one value".into());
            }
            if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
                bad("betas", format!("values must be finite and non-negative, got {b}"));
            }
            if !(self.threshold > 0.0 && self.threshold < 1.0) {
                bad("threshold", format!("must lie in (0, 1), got {}", self.threshold));
            }
        }
        if cmd == Command::ResourcesSweep && !(self.rotation_eps > 0.0 && self.rotation_eps < 1.0) {
            bad("rotation_eps", format!("must lie in (0, 1), got {}", self.rotation_eps));
        }
        if uses_range {
            let (lo, hi) = self.range_for(cmd);
            let (min, max) = cmd.range_limits();
            if lo > hi {
                bad("n_min", format!("{lo} exceeds n_max {hi}"));
            }
            if lo < min || hi > max {
                bad(
                    if lo < min { "n_min" } else { "n_max" },
                    format!("range {lo}..={hi} must lie within {min}..={max} for {cmd}"),
                );
            }
        }
        out
    }

    pub fn validate(&self, cmd: Command) -> Result<()> {
        let issues = self.issues(cmd);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

/// `K` of the tight bound, the set count used when sweeping shadow counts.
fn set_count(m: usize, delta: f64) -> usize {
    ((2.0 * (m as f64 / delta).ln()).ceil() as usize).max(1)
}

fn exact_values(h: &Hamiltonian, beta: f64, obs: &[PauliString]) -> Result<Vec<f64>> {
    let rho = GibbsState::new(h, beta)?.density();
    obs.iter().map(|o| expectation(&rho, o)).collect()
}

fn sampler(cfg: &ExperimentConfig, h: &Hamiltonian, source: StateSource) -> Result<ThermalSampler> {
    ThermalSampler::new(h, cfg.beta, source, Some(cfg.degree))
}

#[derive(Serialize)]
struct CountRow<'a> {
    source: &'a str,
    n_shadows: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "K")]
    k: usize,
    observable: String,
    estimate: f64,
    exact_value: f64,
    abs_error: f64,
    epsilon_bound: f64,
}

#[derive(Serialize)]
struct SizeRow<'a> {
    n: usize,
    m: usize,
    n_s: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "K")]
    k: usize,
    epsilon: f64,
    delta: f64,
    source: &'a str,
    mean_error: f64,
    max_error: f64,
}

#[derive(Serialize)]
struct BudgetRow {
    n: usize,
    m: usize,
    locality: usize,
    bound: String,
    epsilon: f64,
    delta: f64,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "K")]
    k: usize,
    n_s: usize,
}

#[derive(Serialize)]
struct PolyRow {
    beta: f64,
    degree: usize,
    linf_error: f64,
    threshold: f64,
    min_degree: usize,
}

#[derive(Serialize)]
struct RuRow<'a> {
    n: usize,
    target: &'a str,
    samples: usize,
    mean: f64,
    std: f64,
    depth: usize,
    count: usize,
}

/// Per-observable errors on a grid of shadow counts for all three sources.
///
/// Each source draws its largest count once; smaller counts use a prefix
/// split into the same number of sets.
pub fn shadows_vs_count<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate(Command::ShadowsVsCount)?;
    let h = cfg.hamiltonian(cfg.n)?;
    let obs = observable_set(cfg.n)?;
    let exact = exact_values(&h, cfg.beta, &obs)?;
    let k = set_count(obs.len(), cfg.delta);
    let mut counts = cfg.shadow_counts.clone();
    counts.sort_unstable();
    counts.dedup();
    let n_max = counts.last().copied().unwrap_or(0) / k * k;
    let sigma2 = 3f64.powi(OBSERVABLE_LOCALITY as i32);
    let mut out = csv::Writer::from_writer(w);
    for source in [StateSource::ExactGibbs, StateSource::ExactTpq, StateSource::QspTpq] {
        let scores = snapshot_scores(&sampler(cfg, &h, source)?, &obs, n_max, cfg.seed)?;
        let name = source.to_string();
        for &c in &counts {
            let s = c / k;
            let used = s * k;
            let est = estimates_from_scores(&obs, &scores[..used], k)?;
            let bound = tight_epsilon(used, obs.len(), sigma2, cfg.delta)?;
            for (e, &x) in est.iter().zip(&exact) {
                out.serialize(CountRow {
                    source: &name,
                    n_shadows: used,
                    s,
                    k,
                    observable: e.observable.to_string(),
                    estimate: e.value,
                    exact_value: x,
                    abs_error: (e.value - x).abs(),
                    epsilon_bound: bound,
                })?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Mean and maximum estimation error of the configured source per system size.
pub fn error_vs_size<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate(Command::ErrorVsSize)?;
    let (lo, hi) = cfg.range_for(Command::ErrorVsSize);
    let mut out = csv::Writer::from_writer(w);
    let name = cfg.source.to_string();
    for n in lo..=hi {
        let h = cfg.hamiltonian(n)?;
        let obs = observable_set(n)?;
        let exact = exact_values(&h, cfg.beta, &obs)?;
        let budget = sample_budget(obs.len(), OBSERVABLE_LOCALITY, cfg.epsilon, cfg.delta, cfg.bound)?;
        let scores = snapshot_scores(&sampler(cfg, &h, cfg.source)?, &obs, budget.n_s, cfg.seed)?;
        let est = estimates_from_scores(&obs, &scores, budget.k)?;
        let errs: Vec<f64> = est.iter().zip(&exact).map(|(e, x)| (e.value - x).abs()).collect();
        out.serialize(SizeRow {
            n,
            m: obs.len(),
            n_s: budget.n_s,
            s: budget.s,
            k: budget.k,
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            source: &name,
            mean_error: crate::stats::mean(&errs),
            max_error: errs.iter().copied().fold(0.0, f64::max),
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Required shadow counts per system size.
pub fn budget_sweep<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate(Command::BudgetSweep)?;
    let (lo, hi) = cfg.range_for(Command::BudgetSweep);
    let mut out = csv::Writer::from_writer(w);
    for n in lo..=hi {
        let m = 3 * n + 9 * n * (n - 1) / 2;
        let b: SampleBudget = sample_budget(m, OBSERVABLE_LOCALITY, cfg.epsilon, cfg.delta, cfg.bound)?;
        out.serialize(BudgetRow {
            n,
            m,
            locality: OBSERVABLE_LOCALITY,
            bound: cfg.bound.to_string(),
            epsilon: cfg.epsilon,
            delta: cfg.delta,
            s: b.s,
            k: b.k,
            n_s: b.n_s,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Sup-norm error at the configured degree and the minimum degree reaching
/// the threshold, per inverse temperature.
pub fn polyfit_sweep<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate(Command::PolyfitSweep)?;
    let rows: Vec<PolyRow> = cfg
        .betas
        .par_iter()
        .map(|&beta| {
            let p = remez_fit(beta, cfg.degree, (0.0, 1.0))?;
            Ok(PolyRow {
                beta,
                degree: cfg.degree,
                linf_error: p.achieved_error(),
                threshold: cfg.threshold,
                min_degree: min_degree_for(beta, cfg.threshold)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-tag counts and depths for both gate sets over the size range.
pub fn resources_sweep<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate(Command::ResourcesSweep)?;
    let (lo, hi) = cfg.range_for(Command::ResourcesSweep);
    let ns: Vec<usize> = (lo..=hi).collect();
    let opts = LoweringOptions {
        rotation_eps: cfg.rotation_eps,
    };
    let mut rows = Vec::new();
    for target in [Target::Nisq, Target::Ft] {
        rows.extend(scaling_study(&ns, cfg.degree, target, &cfg.couplings, &opts, cfg.seed)?);
    }
    crate::resources::study::write_scaling_csv(w, &rows)
}

/// Depth histograms of lowered random unitaries for both gate sets.
pub fn ru_stats<W: Write>(cfg: &ExperimentConfig, w: W) -> Result<()> {
    cfg.validate(Command::RuStats)?;
    let (lo, hi) = cfg.range_for(Command::RuStats);
    let mut out = csv::Writer::from_writer(w);
    for target in [Target::Nisq, Target::Ft] {
        let name = target.to_string();
        for n in lo..=hi {
            let st = random_unitary_stats(n, cfg.samples, target, cfg.seed)?;
            for (&depth, &count) in &st.histogram {
                out.serialize(RuRow {
                    n,
                    target: &name,
                    samples: st.samples,
                    mean: st.mean,
                    std: st.std,
                    depth,
                    count,
                })?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Runs `cmd` and writes its CSV to `w`.
pub fn run<W: Write>(cmd: Command, cfg: &ExperimentConfig, w: W) -> Result<()> {
    match cmd {
        Command::ShadowsVsCount => shadows_vs_count(cfg, w),
        Command::ErrorVsSize => error_vs_size(cfg, w),
        Command::BudgetSweep => budget_sweep(cfg, w),
        Command::PolyfitSweep => polyfit_sweep(cfg, w),
        Command::ResourcesSweep => resources_sweep(cfg, w),
        Command::RuStats => ru_stats(cfg, w),
    }
}

/// `run` into memory.
pub fn run_to_bytes(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    run(cmd, cfg, &mut buf)?;
    Ok(buf)
}
