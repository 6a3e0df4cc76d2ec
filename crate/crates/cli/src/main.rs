use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rayon::prelude::*;

use ucheck_core::cost::PenaltyTable;
use ucheck_core::dpn::io as model_io;
use ucheck_core::log::{parse_log, LogFormat};
use ucheck_core::solver::SOLVER_ENV;
use ucheck_core::{CostFunctions, Profile, SolverConfig};

mod report;

use report::{check_one, Job};

#[derive(Parser, Debug)]
#[command(name = "ucheck", version, about = "Conformance checking of uncertain event logs against Data Petri nets")]
struct Cli {
    /// Net as JSON or PNML (.pnml)
    model: PathBuf,

    /// Log as JSON or XES (.xes)
    log: PathBuf,

    /// Cost mode: fit or min
    #[arg(short = 'u', long = "mode", value_parser = ["fit", "min", "standard-fit", "standard-min"])]
    mode: String,

    /// Solver executable; defaults to $UCHECK_SOLVER, then z3 on PATH
    #[arg(long)]
    solver: Option<PathBuf>,

    /// Per-trace solver budget in seconds
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,

    /// Solver profile: optimize (native minimize) or tighten (plain SMT loop)
    #[arg(long, env = "UCHECK_PROFILE", default_value = "optimize")]
    profile: String,

    /// Override the run-length bound
    #[arg(long)]
    bound: Option<usize>,

    /// Write each trace's SMT problem into this directory
    #[arg(long, value_name = "DIR")]
    dump_smt: Option<PathBuf>,

    /// Cross-check each cost against the explicit-state oracle
    #[arg(long)]
    oracle: bool,

    /// Traces checked in parallel
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Reject unknown uncertainty attributes in XES logs
    #[arg(long)]
    strict: bool,

    /// JSON table of per-activity log/model penalties
    #[arg(long, value_name = "FILE")]
    penalties: Option<PathBuf>,

    /// Write reports here instead of stdout
    #[arg(short = 'o', long = "output", value_name = "OUT.json")]
    output: Option<PathBuf>,
}

fn solver_config(cli: &Cli) -> Result<SolverConfig> {
    let cfg = match &cli.solver {
        Some(p) => SolverConfig::z3(p),
        None => SolverConfig::locate().with_context(|| format!("no solver found; pass --solver or set {SOLVER_ENV}"))?,
    };
    let Some(profile) = Profile::parse(&cli.profile) else {
        bail!("unknown solver profile `{}`", cli.profile);
    };
    if !(cli.timeout > 0.0 && cli.timeout.is_finite()) {
        bail!("--timeout must be a positive number of seconds");
    }
    Ok(cfg.with_profile(profile).with_timeout(Duration::from_secs_f64(cli.timeout)))
}

fn run(cli: Cli) -> Result<bool> {
    let net = model_io::load(&cli.model).with_context(|| format!("reading model {}", cli.model.display()))?;
    let traces = parse_log(&cli.log, LogFormat::from_path(&cli.log), cli.strict)
        .with_context(|| format!("reading log {}", cli.log.display()))?;
    let mut cf = CostFunctions::by_name(&cli.mode).expect("validated by clap");
    if let Some(path) = &cli.penalties {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let json: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cf = cf.with_table(PenaltyTable::from_json(&json)?);
    }
    if let Some(dir) = &cli.dump_smt {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let job = Job {
        net: &net,
        cf: &cf,
        solver: solver_config(&cli)?,
        bound: cli.bound,
        dump_dir: cli.dump_smt.clone(),
        oracle: cli.oracle,
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build()?;
    let reports: Vec<report::RunReport> =
        pool.install(|| traces.par_iter().enumerate().map(|(i, t)| check_one(&job, i, t)).collect());

    let mut out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    for r in &reports {
        writeln!(out, "{}", serde_json::to_string(&r.json)?)?;
    }
    out.flush()?;
    Ok(reports.iter().all(|r| r.ok))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
