//! One NDJSON report per trace.

use std::path::PathBuf;

use serde_json::{json, Value as Json};

use ucheck_core::log::LogError;
use ucheck_core::oracle::{oracle_conformance, OracleError, OracleLimits, ValueUniverse};
use ucheck_core::rational::{format_decimal, format_exact};
use ucheck_core::{check_trace, CheckOptions, CostFunctions, Dpn, Mode, SolverConfig, UncertainTrace};

pub struct Job<'a> {
    pub net: &'a Dpn,
    pub cf: &'a CostFunctions,
    pub solver: SolverConfig,
    pub bound: Option<usize>,
    pub dump_dir: Option<PathBuf>,
    pub oracle: bool,
}

pub struct RunReport {
    pub ok: bool,
    pub json: Json,
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Fit => "fit",
        Mode::Min => "min",
    }
}

/// Oracle errors that mean the trace is outside what the oracle can decide.
fn ineligible(e: &OracleError) -> bool {
    matches!(e, OracleError::Unsupported(_) | OracleError::StateCap(_) | OracleError::Log(LogError::TooManyRealizations(_)))
}

pub fn check_one(job: &Job, index: usize, trace: &UncertainTrace) -> RunReport {
    let mut opts = CheckOptions::new(job.solver.clone());
    opts.bound = job.bound;
    opts.dump_smt = job.dump_dir.as_ref().map(|d| d.join(format!("trace_{index}.smt2")));

    let mut report = json!({
        "trace": index,
        "name": trace.name,
        "mode": mode_name(job.cf.mode),
    });
    let outcome = match check_trace(job.net, trace, job.cf, &opts) {
        Ok(o) => o,
        Err(e) => {
            report["error"] = json!(e.to_string());
            return RunReport { ok: false, json: report };
        }
    };
    let result = &outcome.result;
    let mut ok = result.verified;
    let coerced = trace.coerce_to(job.net).unwrap_or_else(|_| trace.clone());
    let body = result.to_json(job.net, &coerced);
    report["cost"] = json!(format_exact(&result.cost));
    report["cost_decimal"] = json!(format_decimal(&result.cost, 6));
    report["alignment"] = body["moves"].clone();
    report["realization"] = body["realization"].clone();
    report["dropped"] = body["dropped"].clone();
    report["solve_ms"] = json!(outcome.solve_time.as_millis() as u64);
    report["n"] = json!(outcome.n);
    report["incomplete"] = json!(!outcome.complete);
    report["verified"] = json!(result.verified);
    if !outcome.warnings.is_empty() {
        report["warnings"] = json!(outcome.warnings);
    }

    if job.oracle {
        let universe = ValueUniverse::for_net(job.net, 2).with_trace(&coerced);
        report["oracle"] = match oracle_conformance(job.net, &coerced, job.cf, &universe, OracleLimits::default()) {
            Ok(o) => {
                let agrees = o.cost == result.cost;
                ok &= agrees;
                json!({"cost": format_exact(&o.cost), "agrees": agrees})
            }
            Err(e) if ineligible(&e) => json!({"skipped": e.to_string()}),
            Err(e) => {
                ok = false;
                json!({"error": e.to_string(), "agrees": false})
            }
        };
    }
    RunReport { ok, json: report }
}
