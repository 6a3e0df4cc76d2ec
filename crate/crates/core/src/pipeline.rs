//! Checking one trace end to end: run bound, encoding, solving, decoding.

use std::path::PathBuf;
use std::time::Duration;

use crate::cost::CostFunctions;
use crate::decode::{decode, DecodeError, DecodedResult};
use crate::dpn::{cheapest_run_cost_ub, silent_chain_bound, Dpn, RunSearchError};
use crate::log::{LogError, UncertainTrace};
use crate::oracle::ValueUniverse;
use crate::rational::{format_exact, int, Rational};
use crate::smt::{build_problem, build_run_problem, generic_bound, standard_bound, EncodeError, SmtProblem};
use crate::solver::{check_sat, solve_optimize, SolverConfig, SolverError, Status};

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub solver: SolverConfig,
    /// Overrides the computed run-length bound.
    pub bound: Option<usize>,
    /// Write the SMT-LIB problem to this file.
    pub dump_smt: Option<PathBuf>,
    /// Step limit for the explicit search for a cheap run.
    pub witness_depth: usize,
    pub witness_states: usize,
    /// Longest run length tried when looking for any run with the solver.
    pub max_run_probe: usize,
}

impl CheckOptions {
    pub fn new(solver: SolverConfig) -> Self {
        CheckOptions { solver, bound: None, dump_smt: None, witness_depth: 64, witness_states: 50_000, max_run_probe: 256 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("the net has no process run of length at most {0}")]
    NoRun(usize),
    #[error("no alignment within the run bound: the optimum {0} reaches big-M")]
    NoAlignment(String),
    #[error("a visible transition has model penalty 0, so run lengths are unbounded")]
    Unbounded,
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Net-level quantities entering the run-length bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunParams {
    /// Model cost of some process run.
    pub c: Rational,
    /// Longest chain of silent transitions.
    pub k: usize,
    /// Length of that process run.
    pub witness_len: usize,
}

#[derive(Debug, Clone)]
pub struct TraceOutcome {
    pub result: DecodedResult,
    pub params: RunParams,
    /// Run length used.
    pub n: usize,
    /// The computed bound, before any override.
    pub computed_bound: usize,
    pub big_m: Rational,
    pub complete: bool,
    pub solve_time: Duration,
    pub warnings: Vec<String>,
}

/// `c`, `k` and the witness length. Tries an explicit search first and
/// falls back to asking the solver for runs of growing length.
pub fn run_params(net: &Dpn, trace: &UncertainTrace, cf: &CostFunctions, opts: &CheckOptions) -> Result<RunParams, CheckError> {
    let k = silent_chain_bound(net);
    let universe = ValueUniverse::for_net(net, 1).with_trace(trace);
    match cheapest_run_cost_ub(net, |t| cf.model_penalty(t), opts.witness_depth, &universe, opts.witness_states) {
        Ok(w) => return Ok(RunParams { c: w.cost, k, witness_len: w.run.len() }),
        Err(RunSearchError::NoRunFound(_)) | Err(RunSearchError::StateCap(_)) => {}
    }
    let mut n = 1;
    while n <= opts.max_run_probe {
        let p = build_run_problem(net, n);
        if let Some(model) = check_sat(&p, &opts.solver)? {
            let aug = net.augment_final_loop();
            let run = crate::decode::decode_run(&model, &p.layout, &aug)?;
            let c = run.iter().map(|f| cf.model_penalty(aug.transition(f.transition))).sum();
            return Ok(RunParams { c, k, witness_len: n });
        }
        n *= 2;
    }
    Err(CheckError::NoRun(opts.max_run_probe))
}

/// The run-length bound for `trace`: the standard expression for the standard
/// penalties, else one derived from the cheapest visible model move.
pub fn run_bound(net: &Dpn, trace: &UncertainTrace, cf: &CostFunctions, params: &RunParams) -> Result<usize, CheckError> {
    let n = if cf.table.is_empty() {
        standard_bound(trace.m1(), trace.m2(), &params.c, params.k)
    } else {
        let upper = int((3 * trace.m1() + trace.m2()) as i64).max(cf.gamma0_log_cost(trace)) + &params.c;
        let pm_min = net
            .transitions()
            .iter()
            .filter(|t| !t.is_silent() && !t.synthetic)
            .map(|t| cf.model_penalty(t))
            .min()
            .unwrap_or_else(|| int(1));
        generic_bound(trace.len(), &upper, &pm_min, params.k).ok_or(CheckError::Unbounded)?
    };
    Ok(n.max(params.witness_len))
}

/// Builds, solves and decodes for a fixed run length.
pub fn solve_with_bound(
    net: &Dpn,
    trace: &UncertainTrace,
    cf: &CostFunctions,
    n: usize,
    params: &RunParams,
    opts: &CheckOptions,
) -> Result<(SmtProblem, DecodedResult, bool, Duration), CheckError> {
    let problem = build_problem(net, trace, cf, n, &params.c, params.k)?;
    if let Some(path) = &opts.dump_smt {
        std::fs::write(path, problem.to_smtlib(true, &[]))
            .map_err(|source| CheckError::Io { path: path.display().to_string(), source })?;
    }
    let outcome = solve_optimize(&problem, &opts.solver)?;
    let (Status::Sat, Some(model), Some(value)) = (&outcome.status, &outcome.model, &outcome.objective) else {
        return Err(CheckError::NoRun(n));
    };
    if *value >= problem.meta.big_m {
        return Err(CheckError::NoAlignment(format_exact(value)));
    }
    let trace = trace.coerce_to(net)?;
    let result = decode(&problem, model, net, &trace, cf)?;
    Ok((problem, result, outcome.complete, outcome.elapsed))
}

/// Conformance of one trace: an optimal realization and alignment with its cost.
pub fn check_trace(
    net: &Dpn,
    trace: &UncertainTrace,
    cf: &CostFunctions,
    opts: &CheckOptions,
) -> Result<TraceOutcome, CheckError> {
    let net = net.without_final_loop();
    let trace = trace.coerce_to(&net)?;
    let params = run_params(&net, &trace, cf, opts)?;
    let computed = run_bound(&net, &trace, cf, &params)?;
    let mut warnings = Vec::new();
    let n = match opts.bound {
        Some(b) => {
            if b < computed {
                let w = format!("run bound {b} is below the computed bound {computed}; the result may not be optimal");
                log::warn!("{w}");
                warnings.push(w);
            }
            b
        }
        None => computed,
    };
    let (problem, result, complete, solve_time) = solve_with_bound(&net, &trace, cf, n, &params, opts)?;
    if !complete {
        warnings.push("solver budget exhausted; the cost is an upper bound".into());
    }
    if !result.verified {
        warnings.extend(result.problems.iter().cloned());
    }
    Ok(TraceOutcome {
        result,
        params,
        n,
        computed_bound: computed,
        big_m: problem.meta.big_m.clone(),
        complete,
        solve_time,
        warnings,
    })
}

/// The trivial upper bound `3·m1 + m2 + c` on the fit optimum.
pub fn gamma0_bound(trace: &UncertainTrace, c: &Rational) -> Rational {
    int((3 * trace.m1() + trace.m2()) as i64) + c
}
