use std::time::Duration;

use ucheck_core::cost::Move;
use ucheck_core::examples::{example_net, ut1, ut2, ut3};
use ucheck_core::pipeline::{check_trace, CheckError, CheckOptions};
use ucheck_core::rational::{int, ratio};
use ucheck_core::smt::term::{self, Sort};
use ucheck_core::smt::SmtProblem;
use ucheck_core::solver::{solve_optimize, Profile, SolverConfig, Status};
use ucheck_core::{CostFunctions, DpnBuilder, Expr, UncertainTrace, Value};

fn solver() -> SolverConfig {
    SolverConfig::locate().expect("an SMT solver (z3) is required for these tests").with_timeout(Duration::from_secs(60))
}

fn opts(profile: Profile) -> CheckOptions {
    CheckOptions::new(solver().with_profile(profile))
}

#[test]
fn minimizes_a_bounded_variable() {
    for profile in [Profile::Optimize, Profile::Tighten] {
        let p = SmtProblem::from_parts(
            vec![("x".into(), Sort::Real)],
            vec![term::ge(term::var("x"), term::int(3))],
            Some(term::var("x")),
        );
        let out = solve_optimize(&p, &solver().with_profile(profile)).unwrap();
        assert_eq!(out.status, Status::Sat);
        assert_eq!(out.objective, Some(int(3)));
        assert!(out.complete);
    }
}

#[test]
fn false_is_unsat() {
    for profile in [Profile::Optimize, Profile::Tighten] {
        let p = SmtProblem::from_parts(vec![("x".into(), Sort::Int)], vec![term::Term::Bool(false)], Some(term::var("x")));
        let out = solve_optimize(&p, &solver().with_profile(profile)).unwrap();
        assert_eq!(out.status, Status::Unsat);
        assert!(out.model.is_none());
    }
}

#[test]
fn fit_optimum_of_the_worked_example() {
    for profile in [Profile::Optimize, Profile::Tighten] {
        let out = check_trace(&example_net(), &ut1(), &CostFunctions::standard_fit(), &opts(profile)).unwrap();
        let r = &out.result;
        assert!(r.verified, "{:?}", r.problems);
        assert_eq!(r.cost, ratio(41, 20));
        assert_eq!(out.n, 9);
        assert_eq!(out.params.c, int(5));
        assert_eq!(out.big_m, int(26));
        let net = example_net();
        let labels: Vec<&str> =
            r.run.iter().map(|f| net.transition(f.transition).label.as_deref().unwrap()).collect();
        assert_eq!(labels, ["a", "b", "c"]);
        let kinds: Vec<&str> = r.alignment.moves.iter().map(Move::kind).collect();
        assert_eq!(kinds, ["sync", "sync", "model"]);
        let ev: Vec<(&str, &str)> = r.realization.events.iter().map(|e| (e.id.as_str(), e.label.as_str())).collect();
        assert_eq!(ev, [("e1", "a"), ("e2", "b")]);
        assert_eq!(r.realization.events[0].assign["x"], Value::Rat(int(2)));
        assert_eq!(r.realization.events[1].assign["y"], Value::Rat(int(1)));
        assert_eq!(r.move_costs.iter().sum::<ucheck_core::Rational>(), ratio(41, 20));
    }
}

#[test]
fn min_optimum_of_the_worked_example() {
    let out = check_trace(&example_net(), &ut1(), &CostFunctions::standard_min(), &opts(Profile::Optimize)).unwrap();
    assert!(out.result.verified, "{:?}", out.result.problems);
    assert_eq!(out.result.cost, int(1));
}

#[test]
fn perfect_and_imperfect_fit() {
    let cf = CostFunctions::standard_fit();
    let o2 = check_trace(&example_net(), &ut2(), &cf, &opts(Profile::Optimize)).unwrap();
    assert!(o2.result.verified);
    assert_eq!(o2.result.cost, int(0));
    let o3 = check_trace(&example_net(), &ut3(), &cf, &opts(Profile::Tighten)).unwrap();
    assert!(o3.result.verified);
    assert_eq!(o3.result.cost, int(1));
}

#[test]
fn empty_trace_aligns_with_the_cheapest_run() {
    let empty = UncertainTrace::new(vec![]).unwrap();
    let out = check_trace(&example_net(), &empty, &CostFunctions::standard_fit(), &opts(Profile::Optimize)).unwrap();
    assert!(out.result.verified);
    assert_eq!(out.result.cost, int(5));
    assert!(out.result.alignment.moves.iter().all(|m| m.kind() == "model"));
    assert_eq!(out.result.alignment.moves.len(), out.result.run.len());
}

#[test]
fn low_bound_override_warns() {
    let mut o = opts(Profile::Optimize);
    o.bound = Some(3);
    let out = check_trace(&example_net(), &ut1(), &CostFunctions::standard_fit(), &o).unwrap();
    assert_eq!(out.n, 3);
    assert_eq!(out.computed_bound, 9);
    assert!(out.warnings.iter().any(|w| w.contains("below the computed bound")));
    assert_eq!(out.result.cost, ratio(41, 20));
}

#[test]
fn unreachable_final_marking_is_reported() {
    let net = DpnBuilder::new()
        .place("p")
        .place("q")
        .transition("t", Some("t"), Expr::truth())
        .arc("q", "t", 1)
        .arc("t", "p", 1)
        .initial("p", 1)
        .final_marking("q", 1)
        .build()
        .unwrap();
    let mut o = opts(Profile::Optimize);
    o.max_run_probe = 4;
    let err = check_trace(&net, &ut3().clone(), &CostFunctions::standard_fit(), &o).unwrap_err();
    assert!(matches!(err, CheckError::Log(_) | CheckError::NoRun(_)), "{err}");
    let empty = UncertainTrace::new(vec![]).unwrap();
    let err = check_trace(&net, &empty, &CostFunctions::standard_fit(), &o).unwrap_err();
    assert!(matches!(err, CheckError::NoRun(4)), "{err}");
}

#[test]
fn dump_writes_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ut1.smt2");
    let mut o = opts(Profile::Optimize);
    o.dump_smt = Some(path.clone());
    check_trace(&example_net(), &ut1(), &CostFunctions::standard_fit(), &o).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("(minimize d_2_9)"));
    assert!(text.contains("(check-sat)"));
}
