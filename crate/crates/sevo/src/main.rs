//! Command-line front end: configuration, orchestration, persistence,
//! and report generation for all suites.
//!
//! Every data command takes a JSON config document as its positional
//! argument, writes a self-describing run directory (`meta.json`,
//! `series.csv`, `verdicts.json`, `report.md`, `plots.gp`), and prints
//! the rendered report to stdout. `report` regenerates the report from
//! such a directory alone.
//!
//! Exit codes: 0 success — including the findings "no theorem applies"
//! and "blow-up observed" — 2 invalid input, 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use sevo::config::{
    default_scan_grid, load_config, resolve_out_dir, ConfigError, RunConfig, OUT_ROOT_ENV,
};
use sevo::decay_harness::{
    build_weights, envelope_check_default, fit_rate, fit_window, gn_envelope_check,
    kernel_norm_suite, linear_rate_suite, x_norm, EnvelopeResult, HarnessError, KernelSuiteConfig,
    LinearSuiteConfig, NormSeries,
};
use sevo::evolution_engine::{picard_solve, run_coupled, EngineError};
use sevo::exponent_calculus::{
    classify, derived_constants, predicted_rates, region_scan, scan_summary, ParamError,
    ProblemParams, Scenario, TheoremVerdict,
};
use sevo::report::{
    render_report, scan_rows, scenario_line, serde_name, write_run_dir, write_scan_dir,
    ReportError, RunMeta, Verdicts,
};
use sevo::transforms::{TransformError, TransformPlan};

#[derive(Parser)]
#[command(
    name = "sevo",
    version,
    about = "Simulator and decay-rate verifier for weakly coupled semilinear \
             sigma-evolution systems with visco-elastic damping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the parameter tuple and print the admissibility report.
    Check(JobArgs),
    /// Classify every tuple of a parameter grid into a CSV region map.
    Scan(JobArgs),
    /// Measure kernel norm decay against the envelope table.
    Kernel(JobArgs),
    /// Measure linear solution norm decay against the decay table.
    Linear(JobArgs),
    /// Simulate the coupled system and run the envelope suites.
    Run(JobArgs),
    /// Iterate the solution map and measure successive distances.
    Picard(JobArgs),
    /// Regenerate report.md and plots.gp from an existing run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Path to the JSON config document.
    config: PathBuf,
    /// Output directory; overrides the config key and the env root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for scan (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Reserved; every data path is already deterministic.
    #[arg(long)]
    seedless: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory containing meta.json, series.csv, and verdicts.json.
    dir: PathBuf,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

impl CliError {
    /// 2 for invalid input, 3 for I/O failure.
    fn code(&self) -> u8 {
        match self {
            CliError::Config(ConfigError::Read { .. }) => 3,
            CliError::Config(_) => 2,
            CliError::Report(ReportError::Io { .. }) => 3,
            // csv wraps underlying read failures; unwrap them for the code.
            CliError::Report(ReportError::Csv { source, .. }) => {
                if matches!(source.kind(), csv::ErrorKind::Io(_)) {
                    3
                } else {
                    2
                }
            }
            CliError::Report(_) => 2,
            CliError::Engine(EngineError::Transform(_)) => 2,
            CliError::Engine(EngineError::Harness(_)) => 2,
            CliError::Engine(_) => 2,
            CliError::Harness(_) => 2,
            CliError::Param(_) => 2,
            CliError::Transform(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Check(a) => cmd_check(&a),
        Command::Scan(a) => cmd_scan(&a),
        Command::Kernel(a) => cmd_kernel(&a),
        Command::Linear(a) => cmd_linear(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Picard(a) => cmd_picard(&a),
        Command::Report(a) => cmd_report(&a.dir),
    }
}

/// Loads and validates the config, and resolves the output directory
/// (flag > config key > env root > ./runs).
fn prepare(args: &JobArgs, command: &str) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = load_config(&args.config)?;
    cfg.validate()?;
    let out = resolve_out_dir(
        args.out.as_deref(),
        cfg.out_dir.as_deref(),
        std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from),
        command,
    );
    Ok((cfg, out))
}

fn classify_block(
    params: &ProblemParams,
) -> Result<(TheoremVerdict, sevo::exponent_calculus::DerivedConstants), CliError> {
    let verdict = classify(params)?;
    let consts = derived_constants(params)?;
    Ok((verdict, consts))
}

/// Writes to stdout without panicking when the consumer closes the pipe.
///
/// The runtime ignores SIGPIPE, so `print!` would panic with a backtrace
/// the moment a downstream `head` or pager exits. A closed pipe is a
/// normal way for a CLI to be told to stop: exit 141 mirrors death by
/// SIGPIPE. Any other stdout failure is an I/O error (exit 3).
fn emit(text: std::fmt::Arguments<'_>) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(text) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(141);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(3);
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

fn finish(dir: &Path, report: &str) {
    say!("{report}");
    say!("wrote: {}\n", dir.display());
}

fn cmd_check(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, out) = prepare(args, "check")?;
    let (verdict, consts) = classify_block(&cfg.params)?;
    let rates = predicted_rates(&cfg.params, &consts, &verdict);

    say!("{}\n", scenario_line(&verdict));
    let violated: Vec<_> = verdict
        .report
        .entries
        .iter()
        .filter(|c| !c.satisfied)
        .collect();
    if verdict.scenario == Scenario::None && !violated.is_empty() {
        say!("violated conditions:\n");
        for c in &violated {
            say!(
                "  [{}] {}: lhs = {}, rhs = {} ({})\n",
                serde_name(&c.family),
                c.id,
                c.lhs,
                c.rhs,
                c.note
            );
        }
    }
    say!("\n");

    let mut meta = RunMeta::new("check", cfg);
    meta.verdict = Some(verdict.clone());
    meta.constants = Some(consts);
    meta.rates = rates;
    let verdicts = Verdicts::Check {
        verdict,
        constants: consts,
        rates,
    };
    let series = NormSeries::new(vec![])?;
    write_run_dir(&out, &meta, &series, &verdicts)?;
    finish(&out, &render_report(&meta, &verdicts, Some(&series)));
    Ok(())
}

fn cmd_scan(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, out) = prepare(args, "scan")?;
    let grid = cfg.scan.clone().unwrap_or_else(default_scan_grid);

    // Parallel across tuples, bounded by --jobs; collect preserves grid
    // order, so the region map is deterministic.
    let results = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
    {
        Ok(pool) => pool.install(|| {
            grid.tuples()
                .into_par_iter()
                .map(|p| (p, classify(&p)))
                .collect::<Vec<_>>()
        }),
        Err(_) => region_scan(&grid),
    };
    let summary = scan_summary(&results);
    let rows = scan_rows(&results);

    let meta = RunMeta::new("scan", cfg);
    let verdicts = Verdicts::Scan { summary };
    write_scan_dir(&out, &meta, &rows, &verdicts)?;
    finish(&out, &render_report(&meta, &verdicts, None));
    Ok(())
}

fn cmd_kernel(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, out) = prepare(args, "kernel")?;
    let n = radial_dim(&cfg)?;
    let sigma = cfg.kernel.sigma_for(&cfg.params);
    let a_values = cfg.kernel.a_values_for(&cfg.params);
    let (t0, t_max) = cfg.kernel.window();
    let suite = KernelSuiteConfig::standard(n, sigma, a_values, t0, t_max);
    let (series, rows) = kernel_norm_suite(&suite)?;

    let mut meta = RunMeta::new("kernel", cfg);
    attach_classification(&mut meta)?;
    let verdicts = Verdicts::Kernel { rows };
    write_run_dir(&out, &meta, &series, &verdicts)?;
    finish(&out, &render_report(&meta, &verdicts, Some(&series)));
    Ok(())
}

fn cmd_linear(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, out) = prepare(args, "linear")?;
    let n = radial_dim(&cfg)?;
    let sigma = cfg.linear.sigma_for(&cfg.params);
    let suite = LinearSuiteConfig::standard(n, sigma, cfg.params.q, cfg.params.m);
    let (series, mut rows) = linear_rate_suite(&suite)?;
    if !cfg.suites.fits {
        strip_fits(&mut rows);
    }

    let mut meta = RunMeta::new("linear", cfg);
    attach_classification(&mut meta)?;
    let verdicts = Verdicts::Linear { rows };
    write_run_dir(&out, &meta, &series, &verdicts)?;
    finish(&out, &render_report(&meta, &verdicts, Some(&series)));
    Ok(())
}

fn cmd_run(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, out) = prepare(args, "run")?;
    let (verdict, consts) = classify_block(&cfg.params)?;
    let rates = predicted_rates(&cfg.params, &consts, &verdict);

    let plan = TransformPlan::new(cfg.grid)?;
    let data = cfg.data.build(&plan);
    let times = cfg.output_times();
    let series = run_coupled(&plan, &cfg.params, &data, &times, cfg.t_end, &cfg.stepper)?;

    // "No theorem applies" is a finding, not an error: the run still
    // records the series; only the weighted suites need a scenario.
    let has_scenario = verdict.scenario != Scenario::None;
    let weights = if cfg.suites.envelopes && has_scenario {
        Some(build_weights(&cfg.params, &verdict, &consts)?)
    } else {
        None
    };
    let mut envelopes = Vec::new();
    let mut xn = None;
    if let Some(w) = &weights {
        for e in &w.entries {
            let mut env = envelope_check_default(&series, &e.column, e.exponent)?;
            env.fitted_slope = fit_rate(&series, &e.column, fit_window(&series))
                .ok()
                .map(|f| f.slope);
            envelopes.push(env);
        }
        xn = Some(x_norm(&series, w)?);
    }
    let mut gn = if cfg.suites.gn && has_scenario {
        gn_envelope_check(&series, &cfg.params, &consts, &verdict)?
    } else {
        Vec::new()
    };
    if !cfg.suites.fits {
        strip_fits(&mut envelopes);
        strip_fits(&mut gn);
    }

    say!("{}\n", scenario_line(&verdict));
    if let Some(t) = series.truncated_at_blowup {
        say!("blow-up observed: series truncated at t = {t}\n");
    }
    say!("\n");

    let mut meta = RunMeta::new("run", cfg);
    meta.verdict = Some(verdict.clone());
    meta.constants = Some(consts);
    meta.rates = rates;
    let verdicts = Verdicts::Run {
        scenario: verdict.scenario,
        weights,
        x_norm: xn,
        envelopes,
        gn,
        blowup: series.truncated_at_blowup,
    };
    write_run_dir(&out, &meta, &series, &verdicts)?;
    finish(&out, &render_report(&meta, &verdicts, Some(&series)));
    Ok(())
}

fn cmd_picard(args: &JobArgs) -> Result<(), CliError> {
    let (cfg, out) = prepare(args, "picard")?;
    let plan = TransformPlan::new(cfg.grid)?;
    let data = cfg.data.build(&plan);
    let outcome = picard_solve(&plan, &cfg.params, &data, cfg.t_end, &cfg.stepper)?;

    // The distance sequence doubles as the series: one sample per sweep.
    let times: Vec<f64> = (1..=outcome.distances.len()).map(|k| k as f64).collect();
    let mut series = NormSeries::new(times)?;
    series.add_column("picard_distance", outcome.distances.clone())?;

    let mut meta = RunMeta::new("picard", cfg);
    attach_classification(&mut meta)?;
    let verdicts = Verdicts::Picard { outcome };
    write_run_dir(&out, &meta, &series, &verdicts)?;
    finish(&out, &render_report(&meta, &verdicts, Some(&series)));
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<(), CliError> {
    let report = sevo::report::regenerate_report(dir)?;
    say!("{report}");
    Ok(())
}

/// The radial suites need n as a one-byte dimension.
fn radial_dim(cfg: &RunConfig) -> Result<u8, CliError> {
    u8::try_from(cfg.params.n).map_err(|_| {
        CliError::Harness(HarnessError::BadSuite(format!(
            "radial evaluation needs odd n <= 7, got n = {}",
            cfg.params.n
        )))
    })
}

fn attach_classification(meta: &mut RunMeta) -> Result<(), CliError> {
    let (verdict, consts) = classify_block(&meta.config.params)?;
    meta.rates = predicted_rates(&meta.config.params, &consts, &verdict);
    meta.verdict = Some(verdict);
    meta.constants = Some(consts);
    Ok(())
}

fn strip_fits(rows: &mut [EnvelopeResult]) {
    for r in rows {
        r.fitted_slope = None;
    }
}
