//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for runtime or data errors, 2 for usage
//! errors. Parallel sweeps honour `CROWDBOUND_THREADS` (0 or unset = one
//! thread per core).

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::context::r_score;
use crate::distributions::{DistributionSpec, Family};
use crate::empirical::{
    analyze, generate_synthetic, load_trials, save_trials, AnalysisReport, SynthConfig,
};
use crate::error::{Error, Result};
use crate::heatmap::render_svg;
use crate::influence::Centralization;
use crate::omega::{
    estimate_omega, expected_loss_compare, lower_bound, phase_diagram, AxisRange, LossKind,
};

pub const THREADS_ENV: &str = "CROWDBOUND_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "crowdbound",
    version,
    about = "When does centralized influence improve collective estimates?"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of the centralization advantage plus its lower bound (JSON on stdout)
    Omega(OmegaArgs),
    /// Analytical lower bound on the centralization advantage (JSON on stdout)
    Bound(BoundArgs),
    /// Sweep a (mu, sigma) grid and write a CSV table and an SVG heatmap
    Phase(PhaseArgs),
    /// Compare expected losses of centralized and equal-weight estimates (JSON on stdout)
    Loss(LossArgs),
    /// Heavy-tailedness score R of a list of positive estimates (JSON on stdout)
    Rscore(RscoreArgs),
    /// Fit the improvement and error regressions to trial data and write a JSON report
    Analyze(AnalyzeArgs),
    /// Write a synthetic trial CSV
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Normal,
    Lognormal,
    Pareto,
    Loglaplace,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Normal => Family::Normal,
            FamilyArg::Lognormal => Family::LogNormal,
            FamilyArg::Pareto => Family::Pareto,
            FamilyArg::Loglaplace => Family::LogLaplace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Absolute,
    Squared,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Distribution family of the initial estimates
    #[arg(long, value_enum, default_value_t = FamilyArg::Lognormal)]
    pub family: FamilyArg,
    /// Location parameter: mean of ln X (lognormal, loglaplace), mean (normal) or scale x_m (pareto); same units as theta for normal/pareto, log units otherwise
    #[arg(long, default_value_t = std::f64::consts::LN_2, allow_negative_numbers = true)]
    pub mu: f64,
    /// Shape parameter: std. dev. of ln X (lognormal), scale of ln X (loglaplace), std. dev. (normal) or tail index alpha (pareto); must be > 0
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// True value being estimated (same units as the estimates; > 0)
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Group size (number of agents, >= 1)
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Influence centralization in [0, 1] (dimensionless)
    #[arg(long, default_value_t = 1.0 / 3.0, allow_negative_numbers = true)]
    pub omega: f64,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Monte Carlo replicates (simulated groups, >= 1)
    #[arg(long, default_value_t = 20_000)]
    pub reps: u64,
    /// Random seed (64-bit unsigned)
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OmegaArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    /// Distribution family swept over (mu, sigma) = (p1, p2)
    #[arg(long, value_enum, default_value_t = FamilyArg::Lognormal)]
    pub family: FamilyArg,
    /// Lowest mu on the grid (log units for lognormal)
    #[arg(long, default_value_t = std::f64::consts::LN_2 - 2.0, allow_negative_numbers = true)]
    pub mu_lo: f64,
    /// Highest mu on the grid
    #[arg(long, default_value_t = std::f64::consts::LN_2 + 2.0, allow_negative_numbers = true)]
    pub mu_hi: f64,
    /// Number of mu grid points (>= 2)
    #[arg(long, default_value_t = 21)]
    pub mu_steps: usize,
    /// Lowest sigma on the grid (> 0)
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub sigma_lo: f64,
    /// Highest sigma on the grid
    #[arg(long, default_value_t = 3.0)]
    pub sigma_hi: f64,
    /// Number of sigma grid points (>= 2)
    #[arg(long, default_value_t = 21)]
    pub sigma_steps: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
    /// Output path of the CSV table
    #[arg(long, default_value = "phase.csv")]
    pub out_csv: PathBuf,
    /// Output path of the SVG heatmap
    #[arg(long, default_value = "phase.svg")]
    pub out_svg: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub mc: McArgs,
    /// Loss applied to the collective error (estimate - theta)
    #[arg(long, value_enum, default_value_t = LossArg::Squared)]
    pub loss: LossArg,
}

#[derive(Debug, Clone, Args)]
pub struct RscoreArgs {
    /// File with positive numbers separated by whitespace or commas; `-` reads stdin
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// Number of synthetic tasks (>= 1)
    #[arg(long, default_value_t = 20)]
    pub tasks: usize,
    /// Groups (trials) per task (>= 1); even-numbered groups are social
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    /// Agents per group (>= 1)
    #[arg(long, default_value_t = 30)]
    pub group_size: usize,
    /// Lower end of the per-task log-scale dispersion range (> 0)
    #[arg(long, default_value_t = 0.1)]
    pub synth_sigma_lo: f64,
    /// Upper end of the per-task log-scale dispersion range
    #[arg(long, default_value_t = 2.5)]
    pub synth_sigma_hi: f64,
    /// True value of every synthetic task (> 0)
    #[arg(long, default_value_t = 100.0)]
    pub synth_theta: f64,
    /// Centralization of the social revision step, in [0, 1]
    #[arg(long, default_value_t = 0.4)]
    pub omega_social: f64,
    /// Random seed (64-bit unsigned)
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl GeneratorArgs {
    fn config(&self) -> CliResult<SynthConfig> {
        let cfg = SynthConfig {
            n_tasks: self.tasks,
            groups_per_task: self.groups,
            group_size: self.group_size,
            sigma_range: (self.synth_sigma_lo, self.synth_sigma_hi),
            theta: self.synth_theta,
            omega_social: self.omega_social,
            seed: self.seed,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Trial CSV in the canonical schema
    #[arg(
        long,
        required_unless_present = "synthetic",
        conflicts_with = "synthetic"
    )]
    pub input: Option<PathBuf>,
    /// Analyze freshly generated synthetic trials instead of a file
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Output path of the JSON report
    #[arg(long, default_value = "report.json")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Output path of the trial CSV
    #[arg(long, default_value = "trials.csv")]
    pub output: PathBuf,
}

fn usage(cond: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

impl DistArgs {
    fn spec(&self) -> CliResult<DistributionSpec> {
        DistributionSpec::new(self.family.into(), self.mu, self.sigma)
            .map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl ModelArgs {
    fn validate(&self) -> CliResult<Centralization> {
        usage(self.theta.is_finite() && self.theta > 0.0, || {
            format!("--theta must be positive, got {}", self.theta)
        })?;
        usage(self.n >= 1, || "--n must be at least 1".into())?;
        Centralization::new(self.omega)
            .map_err(|_| CliError::Usage(format!("--omega must lie in [0, 1], got {}", self.omega)))
    }
}

impl McArgs {
    fn validate(&self) -> CliResult<()> {
        usage(self.reps >= 1, || "--reps must be at least 1".into())
    }
}

/// Thread cap from `CROWDBOUND_THREADS`; `None` means one per core.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(k) => Ok(Some(k)),
            Err(_) => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a nonnegative integer, got `{v}`"
            ))),
        },
    }
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = thread_cap()? {
        builder = builder.num_threads(k);
    }
    builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn to_json(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values always serialize")
}

/// Runs a parsed command and returns what it prints on standard output.
pub fn run(cli: Cli) -> CliResult<String> {
    thread_pool()?.install(|| dispatch(cli))
}

fn dispatch(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Omega(a) => cmd_omega(&a),
        Command::Bound(a) => cmd_bound(&a),
        Command::Phase(a) => cmd_phase(&a),
        Command::Loss(a) => cmd_loss(&a),
        Command::Rscore(a) => cmd_rscore(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

pub fn cmd_omega(a: &OmegaArgs) -> CliResult<String> {
    let spec = a.dist.spec()?;
    let omega = a.model.validate()?;
    a.mc.validate()?;
    let est = estimate_omega(&spec, a.model.theta, a.model.n, omega, a.mc.reps, a.mc.seed)?;
    let bound = lower_bound(&spec, a.model.theta, a.model.n, omega)?;
    Ok(to_json(&json!({
        "omega_n": est.value,
        "std_error": est.std_error,
        "reps": est.reps,
        "lower_bound": bound.value,
        "beta_star": bound.beta_star,
    })))
}

pub fn cmd_bound(a: &BoundArgs) -> CliResult<String> {
    let spec = a.dist.spec()?;
    let omega = a.model.validate()?;
    let bound = lower_bound(&spec, a.model.theta, a.model.n, omega)?;
    Ok(to_json(&json!({
        "lower_bound": bound.value,
        "beta_star": bound.beta_star,
        "feasible_from": bound.feasible_from,
    })))
}

pub fn cmd_phase(a: &PhaseArgs) -> CliResult<String> {
    let omega = a.model.validate()?;
    a.mc.validate()?;
    usage(a.mu_steps >= 2 && a.sigma_steps >= 2, || {
        "grid axes need at least 2 steps".into()
    })?;
    usage(a.mu_hi > a.mu_lo, || "--mu-hi must exceed --mu-lo".into())?;
    usage(a.sigma_lo > 0.0 && a.sigma_hi > a.sigma_lo, || {
        "sigma range must satisfy 0 < --sigma-lo < --sigma-hi".into()
    })?;
    let family: Family = a.family.into();
    let grid = phase_diagram(
        family,
        AxisRange::new(a.mu_lo, a.mu_hi, a.mu_steps),
        AxisRange::new(a.sigma_lo, a.sigma_hi, a.sigma_steps),
        a.model.theta,
        a.model.n,
        omega,
        a.mc.reps,
        a.mc.seed,
    )?;
    let csv = grid.to_csv_string()?;
    write_atomic(&a.out_csv, csv.as_bytes())?;
    let title = format!(
        "{family}: n={}, theta={}, omega={:.4}, reps={}",
        a.model.n, a.model.theta, a.model.omega, a.mc.reps
    );
    write_atomic(&a.out_svg, render_svg(&grid, &title).as_bytes())?;
    Ok(to_json(&json!({
        "csv": a.out_csv.display().to_string(),
        "svg": a.out_svg.display().to_string(),
        "cells": grid.mu_axis.len() * grid.sigma_axis.len(),
    })))
}

pub fn cmd_loss(a: &LossArgs) -> CliResult<String> {
    let spec = a.dist.spec()?;
    let omega = a.model.validate()?;
    a.mc.validate()?;
    let kind = match a.loss {
        LossArg::Absolute => LossKind::Absolute,
        LossArg::Squared => LossKind::Squared,
    };
    let cmp = expected_loss_compare(
        &spec,
        a.model.theta,
        a.model.n,
        omega,
        kind,
        a.mc.reps,
        a.mc.seed,
    )?;
    Ok(to_json(&json!({
        "loss_centralized": cmp.loss_centralized,
        "loss_decentralized": cmp.loss_decentralized,
        "reps": cmp.reps,
    })))
}

/// Parses numbers separated by whitespace and/or commas.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v = tok.parse::<f64>().map_err(|_| Error::Parse {
                line: k as u64 + 1,
                message: format!("`{tok}` is not a number"),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn cmd_rscore(a: &RscoreArgs) -> CliResult<String> {
    let text = if a.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::io("<stdin>", e))?;
        s
    } else {
        std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?
    };
    let score = r_score(&parse_numbers(&text)?)?;
    Ok(to_json(
        &serde_json::to_value(score).expect("score serializes"),
    ))
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> CliResult<String> {
    let (trials, dropped, seed) = match (&a.input, a.synthetic) {
        (Some(path), false) => {
            let loaded = load_trials(path)?;
            (loaded.trials, loaded.dropped_subjects, None)
        }
        (None, true) => {
            let cfg = a.generator.config()?;
            (generate_synthetic(&cfg)?, 0, Some(cfg.seed))
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --input or --synthetic".into(),
            ))
        }
    };
    let mut report = analyze(&trials)?;
    report.meta.seed = seed;
    report.meta.dropped_subjects = dropped;
    write_atomic(&a.output, report.to_json()?.as_bytes())?;
    Ok(coefficient_table(&report, &a.output))
}

pub fn coefficient_table(report: &AnalysisReport, output: &Path) -> String {
    let mut s = String::new();
    let mut section = |title: &str, fit: &crate::empirical::RegressionResult, stat: &str| {
        let _ = writeln!(s, "{title} (n = {})", fit.n_obs);
        let _ = writeln!(
            s,
            "  {:<10} {:>12} {:>12} {:>9} {:>11}",
            "term", "estimate", "std.err", stat, "p"
        );
        for (name, b) in fit.coefficients.iter() {
            let _ = writeln!(
                s,
                "  {:<10} {:>12.5} {:>12.5} {:>9.3} {:>11.3e}",
                name, b, fit.std_errors[name], fit.wald_stats[name], fit.p_values[name]
            );
        }
    };
    section(
        "logistic: improved ~ R (social trials)",
        &report.logistic,
        "z",
    );
    section(
        "ols: z(abs error revised) ~ R + I + I:R (all trials)",
        &report.ols,
        "t",
    );
    let _ = writeln!(
        s,
        "tasks: {}, trials: {} ({} social, {} control)",
        report.meta.n_tasks, report.meta.n_trials, report.meta.n_social, report.meta.n_control
    );
    if let Some(c) = report.meta.crossover_r {
        let _ = writeln!(s, "social-minus-control error changes sign at R = {c:.3}");
    }
    let _ = writeln!(s, "note: {}", report.meta.model);
    let _ = writeln!(s, "report written to {}", output.display());
    s
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<String> {
    let cfg = a.generator.config()?;
    let trials = generate_synthetic(&cfg)?;
    save_trials(&trials, &a.output)?;
    Ok(to_json(&json!({
        "output": a.output.display().to_string(),
        "trials": trials.len(),
        "subjects": trials.iter().map(|t| t.initial_estimates.len()).sum::<usize>(),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators() {
        assert_eq!(
            parse_numbers("1, 2\n3.5 4e1\n\n").unwrap(),
            vec![1.0, 2.0, 3.5, 40.0]
        );
        assert!(matches!(
            parse_numbers("1\nx"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn invalid_flags_are_usage_errors() {
        let cli = Cli::try_parse_from(["crowdbound", "omega", "--sigma", "-1"]).unwrap();
        let err = run(cli).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let cli = Cli::try_parse_from(["crowdbound", "bound", "--omega", "1.5"]).unwrap();
        assert_eq!(run(cli).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn dictator_bound_is_a_runtime_error() {
        let cli = Cli::try_parse_from(["crowdbound", "bound", "--omega", "1"]).unwrap();
        let err = run(cli).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("infeasible"));
    }
}
