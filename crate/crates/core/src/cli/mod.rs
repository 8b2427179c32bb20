//! The `pshenv` command line.
//!
//! Exit codes: 0 success, 1 failed checks, 2 configuration or schema error (including
//! unsupported combinations), 3 solver failure, 4 missing artifact or checksum mismatch.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use serde::Serialize;

pub use config::{
    ConfigError, EnvelopeConfig, EnvelopeMethod, ExperimentConfig, GeometryConfig, ObstacleConfig,
    ScheduleConfig, VerifyConfig,
};

use crate::envelope::{self, envelope_beta_limit, envelope_psor, rooftop, EnvelopeOptions, EnvelopeResult};
use crate::error::Error;
use crate::newton::{continuation_sweep, read_sweep_dir, write_sweep_dir, SweepResult};
use crate::torus::{io, Grid};
use crate::verify::{
    digest_inputs, ma_mass_check, rate_fit, run_suite, write_rate_csv, CheckRecord, CheckStatus,
    RateReference, SuiteInputs,
};

/// Extra check added by `verify.refine`: mass error at `2N` over mass error at `N`.
pub const REFINEMENT_CHECK: &str = "ma-mass-refinement";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ARTIFACT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pshenv", version, about = "Plurisubharmonic envelopes on flat complex tori")]
pub struct Cli {
    /// Experiment config (TOML). Defaults apply to every missing key.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized obstacles (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one beta equation, warm-started along the schedule below it.
    Solve {
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Continuation sweep over the schedule.
    Sweep,
    /// Envelope of the obstacle by the configured method.
    Envelope {
        #[arg(long, value_enum)]
        method: Option<EnvelopeMethod>,
    },
    /// Envelope of the minimum of the rooftop obstacles.
    Rooftop,
    /// Run the verification suite, computing or reading the sweep and the reference envelope.
    Verify {
        /// Directory holding `sweep/` and `oracle/` (n = 1) or `envelope/` (n = 2).
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Complementarity oracle (complex dimension one).
    Oracle,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Lib(e) => lib_exit_code(e),
        }
    }
}

fn lib_exit_code(e: &Error) -> i32 {
    match e {
        Error::AtBeta { source, .. } => lib_exit_code(source),
        Error::MetricNotPositive { .. }
        | Error::MetricNotHermitian { .. }
        | Error::InvalidGeometry(_)
        | Error::GridMismatch { .. }
        | Error::InvalidArgument(_)
        | Error::Unsupported(_) => EXIT_CONFIG,
        Error::NotKahler { .. }
        | Error::Stagnation { .. }
        | Error::PsorNonConvergence { .. }
        | Error::EmptyContact => EXIT_SOLVER,
        Error::Format(_) | Error::Checksum { .. } | Error::MissingArtifact(_) => EXIT_ARTIFACT,
        Error::Io(_) | Error::Json(_) => EXIT_CHECKS_FAILED,
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECKS_FAILED,
        Err(e) => {
            eprintln!("pshenv: {e}");
            e.exit_code()
        }
    }
}

/// Resolve the config for `cli`: file (or defaults), then command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<ExperimentConfig>(&text)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.out = Some(cli.out.clone().or(cfg.out).unwrap_or_else(|| PathBuf::from("out")));
    match &cli.command {
        Command::Solve { beta: Some(b) } => cfg.schedule.beta = Some(*b),
        Command::Envelope { method: Some(m) } => cfg.envelope.method = *m,
        Command::Verify { artifacts: Some(a) } => cfg.verify.artifacts = Some(a.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run a parsed command. `Ok(false)` means the verification report has failed checks.
pub fn execute(cli: &Cli) -> Result<bool, CliError> {
    let cfg = resolve_config(cli)?;
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    let out = cfg.out.clone().expect("resolved");
    fs::create_dir_all(&out).map_err(Error::from)?;
    fs::write(out.join("config.resolved.toml"), cfg.to_toml()).map_err(Error::from)?;
    write_json(&out.join("versions.json"), &Versions::current())?;
    let grid = cfg.grid()?;
    info!("grid n = {}, N = {}, out = {}", grid.complex_dim(), grid.res(), out.display());
    match &cli.command {
        Command::Solve { .. } => solve(&cfg, &grid, &out),
        Command::Sweep => sweep(&cfg, &grid, &out),
        Command::Envelope { .. } => envelope_cmd(&cfg, &grid, &out),
        Command::Rooftop => rooftop_cmd(&cfg, &grid, &out),
        Command::Verify { .. } => verify(&cfg, &grid, &out),
        Command::Oracle => oracle(&cfg, &grid, &out),
    }
    .map_err(CliError::from)
}

#[derive(Debug, Serialize)]
struct Versions {
    pshenv: &'static str,
    field_format: u32,
    debug_build: bool,
    threads: usize,
}

impl Versions {
    fn current() -> Self {
        Versions {
            pshenv: env!("CARGO_PKG_VERSION"),
            field_format: io::FORMAT_VERSION,
            debug_build: cfg!(debug_assertions),
            threads: rayon::current_num_threads(),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    beta: f64,
    residual_sup: f64,
    newton_iters: usize,
    positivity_margin: f64,
    sup_u_beta: f64,
}

fn solve(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<bool, Error> {
    let beta = cfg
        .schedule
        .beta
        .ok_or_else(|| Error::InvalidArgument("schedule.beta (or --beta) is required by solve".into()))?;
    let v = cfg.obstacle(grid)?;
    let mut path: Vec<f64> = cfg.schedule_betas().into_iter().filter(|&b| b < beta).collect();
    path.push(beta);
    let full = continuation_sweep(&v, &path, &cfg.newton)?;
    let last = full.last().clone();
    let summary = SolveSummary {
        beta,
        residual_sup: last.residual_sup,
        newton_iters: last.newton_iters,
        positivity_margin: last.positivity_margin,
        sup_u_beta: last.u_beta.sup_norm(),
    };
    let single = SweepResult { solutions: vec![last], successive_distances: Vec::new() };
    write_sweep_dir(&single, &out.join("solution"))?;
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "beta {beta}: residual {:.3e} after {} Newton steps, margin {:.3e}",
        summary.residual_sup, summary.newton_iters, summary.positivity_margin
    );
    Ok(true)
}

fn sweep(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<bool, Error> {
    let v = cfg.obstacle(grid)?;
    let sweep = continuation_sweep(&v, &cfg.schedule_betas(), &cfg.newton)?;
    write_sweep_dir(&sweep, &out.join("sweep"))?;
    for s in &sweep.solutions {
        println!(
            "beta {:>8}: residual {:.3e}, {:>2} Newton steps, sup|u_beta| {:.4e}",
            s.beta,
            s.residual_sup,
            s.newton_iters,
            s.u_beta.sup_norm()
        );
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
struct EnvelopeSummary {
    method: envelope::MethodTag,
    contact_nodes: usize,
    contact_policy: String,
    psh_margin: f64,
    provenance: envelope::Provenance,
}

fn report_envelope(env: &EnvelopeResult, out: &Path, name: &str) -> Result<(), Error> {
    envelope::write_dir(env, &out.join(name))?;
    let summary = EnvelopeSummary {
        method: env.method,
        contact_nodes: env.contact_count(),
        contact_policy: env.contact_policy.describe(),
        psh_margin: envelope::psh_margin(&env.envelope),
        provenance: env.provenance.clone(),
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "{:?}: {} of {} nodes in contact ({}), psh margin {:.3e}",
        summary.method,
        summary.contact_nodes,
        env.contact_mask.len(),
        summary.contact_policy,
        summary.psh_margin
    );
    Ok(())
}

/// Contact constant: configured, else calibrated against the oracle when `n = 1`, else the default.
fn kappa_for(cfg: &ExperimentConfig, sweep: &SweepResult, oracle: Option<&EnvelopeResult>) -> Result<f64, Error> {
    if let Some(k) = cfg.envelope.kappa {
        return Ok(k);
    }
    match oracle {
        Some(env) => {
            let k = rate_fit(sweep, RateReference::Envelope(env))?.calibrated_kappa();
            info!("calibrated kappa = {k:.4}");
            Ok(k)
        }
        None => Ok(cfg.kappa_or_default()),
    }
}

fn envelope_cmd(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<bool, Error> {
    match cfg.envelope.method {
        EnvelopeMethod::Psor => {
            let env = envelope_psor(&cfg.obstacle(grid)?, &cfg.psor)?;
            report_envelope(&env, out, "envelope")?;
        }
        EnvelopeMethod::BetaLimit => {
            let v = cfg.obstacle(grid)?;
            let sweep = continuation_sweep(&v, &cfg.schedule_betas(), &cfg.newton)?;
            let oracle = if grid.complex_dim() == 1 && cfg.envelope.kappa.is_none() {
                Some(envelope_psor(&v, &cfg.psor)?)
            } else {
                None
            };
            let kappa = kappa_for(cfg, &sweep, oracle.as_ref())?;
            write_sweep_dir(&sweep, &out.join("sweep"))?;
            report_envelope(&envelope_beta_limit(&sweep, kappa)?, out, "envelope")?;
        }
        EnvelopeMethod::Rooftop => return rooftop_cmd(cfg, grid, out),
    }
    Ok(true)
}

fn rooftop_cmd(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<bool, Error> {
    let fields = cfg.rooftop_obstacles(grid)?;
    let opts = EnvelopeOptions {
        psor: cfg.psor.clone(),
        newton: cfg.newton.clone(),
        schedule: cfg.schedule_betas(),
        kappa: cfg.kappa_or_default(),
    };
    let env = rooftop(&fields, cfg.envelope.rooftop_path, cfg.envelope.epsilon, &opts)?;
    report_envelope(&env, out, "rooftop")?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct OracleSummary {
    sweeps: usize,
    residual: f64,
    complementarity: f64,
    obstacle_violation: f64,
    contact_nodes: usize,
}

fn oracle(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<bool, Error> {
    let v = cfg.obstacle(grid)?;
    let sol = envelope::psor_solve(&v, &cfg.psor)?;
    let summary = OracleSummary {
        sweeps: sol.sweeps,
        residual: sol.residual,
        complementarity: sol.complementarity,
        obstacle_violation: sol.obstacle_violation,
        contact_nodes: sol.active.iter().filter(|&&a| a).count(),
    };
    let env = envelope_psor(&v, &cfg.psor)?;
    envelope::write_dir(&env, &out.join("oracle"))?;
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "oracle: {} sweeps, residual {:.3e}, {} contact nodes",
        summary.sweeps, summary.residual, summary.contact_nodes
    );
    Ok(true)
}

/// Sweep and reference envelope for `verify`, read from `artifacts` when given.
fn verify_inputs(
    cfg: &ExperimentConfig,
    grid: &Grid,
    out: &Path,
) -> Result<(SweepResult, Option<EnvelopeResult>, EnvelopeResult), Error> {
    let n1 = grid.complex_dim() == 1;
    if let Some(dir) = &cfg.verify.artifacts {
        let sweep = read_sweep_dir(&dir.join("sweep"))?;
        if n1 {
            let oracle = envelope::read_dir(&dir.join("oracle"))?;
            if oracle.obstacle != *sweep.obstacle() {
                return Err(Error::Format("sweep and oracle were computed for different obstacles".into()));
            }
            let env = oracle.clone();
            return Ok((sweep, Some(oracle), env));
        }
        let env = envelope::read_dir(&dir.join("envelope"))?;
        if env.obstacle != *sweep.obstacle() {
            return Err(Error::Format("sweep and envelope were computed for different obstacles".into()));
        }
        return Ok((sweep, None, env));
    }
    let v = cfg.obstacle(grid)?;
    let sweep = continuation_sweep(&v, &cfg.schedule_betas(), &cfg.newton)?;
    write_sweep_dir(&sweep, &out.join("sweep"))?;
    if n1 {
        let oracle = envelope_psor(&v, &cfg.psor)?;
        envelope::write_dir(&oracle, &out.join("oracle"))?;
        let env = oracle.clone();
        Ok((sweep, Some(oracle), env))
    } else {
        let env = envelope_beta_limit(&sweep, kappa_for(cfg, &sweep, None)?)?;
        envelope::write_dir(&env, &out.join("envelope"))?;
        Ok((sweep, None, env))
    }
}

fn verify(cfg: &ExperimentConfig, grid: &Grid, out: &Path) -> Result<bool, Error> {
    let (sweep, oracle, env) = verify_inputs(cfg, grid, out)?;
    let inputs = SuiteInputs { sweep: &sweep, oracle: oracle.as_ref(), envelope: &env };
    let mut outcome = run_suite(&inputs, &cfg.verify.suite_options())?;
    if cfg.verify.refine {
        outcome.report.push(refinement_record(cfg, &env)?);
    }

    let file = fs::File::create(out.join("report.jsonl"))?;
    outcome.report.write_jsonl(BufWriter::new(file))?;
    let file = fs::File::create(out.join("rates.csv"))?;
    write_rate_csv(&outcome.rows, BufWriter::new(file))?;
    write_json(&out.join("diagnostics.json"), &outcome.diagnostics)?;
    write_json(&out.join("rate.json"), &(&outcome.rate, &outcome.hessian))?;

    for r in &outcome.report.records {
        let value = r.value.map_or("-".to_string(), |v| format!("{v:.4e}"));
        let threshold = r.threshold.map_or("-".to_string(), |t| format!("{t:.4e}"));
        println!("{:<24} {:<8} value {value:<12} threshold {threshold}", r.name, format!("{:?}", r.status).to_lowercase());
    }
    Ok(outcome.report.all_passed())
}

/// Mass error of the oracle at `2N` against the one at `N`; must shrink (`n = 1` only).
fn refinement_record(cfg: &ExperimentConfig, env: &EnvelopeResult) -> Result<CheckRecord, Error> {
    if cfg.verify.disabled.iter().any(|d| d == REFINEMENT_CHECK) {
        return Ok(CheckRecord::skipped(REFINEMENT_CHECK, "disabled in configuration"));
    }
    let grid = env.obstacle.grid();
    if grid.complex_dim() != 1 || cfg.verify.artifacts.is_some() {
        return Ok(CheckRecord::skipped(
            REFINEMENT_CHECK,
            "needs the complementarity oracle and a preset obstacle",
        ));
    }
    let fine_grid = Grid::new(grid.geometry().clone(), 2 * grid.res())?;
    let fine = envelope_psor(&cfg.obstacle(&fine_grid)?, &cfg.psor)?;
    let coarse_err = ma_mass_check(env)?;
    let fine_err = ma_mass_check(&fine)?;
    let digest = digest_inputs(&[&env.envelope, &fine.envelope], &[]);
    let ratio = fine_err / coarse_err;
    let rec = CheckRecord::at_most(REFINEMENT_CHECK, &digest, ratio, 1.0)
        .with_note(format!("mass error {coarse_err:.4e} at N = {}, {fine_err:.4e} at N = {}", grid.res(), fine_grid.res()));
    Ok(if ratio < 1.0 || fine_err <= cfg.verify.noise_floor {
        rec.with_status(CheckStatus::Passed)
    } else {
        rec.with_status(CheckStatus::Failed)
    })
}
