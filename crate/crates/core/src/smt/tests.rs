use std::collections::HashMap;

use super::term::{SValue, Sort};
use super::*;
use crate::cost::CostFunctions;
use crate::dpn::fixtures::example_net;
use crate::dpn::{DpnBuilder, Expr};
use crate::log::fixtures::{ut1, ut3};
use crate::log::UncertainTrace;
use crate::rational::{int, ratio};

#[test]
fn run_bounds() {
    assert_eq!(standard_bound(0, 2, &int(5), 0), 9);
    assert_eq!(standard_bound(0, 0, &int(0), 0), 0);
    // N = 5 visible steps, up to one silent step in each of the 6 gaps
    assert_eq!(standard_bound(1, 0, &int(1), 1), 11);
    assert_eq!(standard_bound(0, 0, &ratio(1, 2), 0), 1);
    assert_eq!(generic_bound(2, &int(7), &int(2), 0), Some(5));
    assert_eq!(generic_bound(2, &int(7), &int(0), 0), None);
}

#[test]
fn silent_gaps_need_the_extra_k() {
    // τ a τ: an empty trace forces all three firings; N = c = 1, k = 1
    let net = DpnBuilder::new()
        .place("p0")
        .place("p1")
        .place("p2")
        .place("p3")
        .transition("s1", None, Expr::truth())
        .transition("a", Some("a"), Expr::truth())
        .transition("s2", None, Expr::truth())
        .arc("p0", "s1", 1)
        .arc("s1", "p1", 1)
        .arc("p1", "a", 1)
        .arc("a", "p2", 1)
        .arc("p2", "s2", 1)
        .arc("s2", "p3", 1)
        .initial("p0", 1)
        .final_marking("p3", 1)
        .build()
        .unwrap();
    assert_eq!(crate::dpn::silent_chain_bound(&net), 1);
    assert!(standard_bound(0, 0, &int(1), 1) >= 3);
}

#[test]
fn big_m_values() {
    let net = example_net().augment_final_loop();
    let t = ut1();
    assert_eq!(big_m(&net, &t, &CostFunctions::standard_fit(), 9, &int(5)), int(26));
    let empty = UncertainTrace::new(vec![]).unwrap();
    assert_eq!(big_m(&net, &empty, &CostFunctions::standard_fit(), 0, &int(0)), int(1));
}

#[test]
fn run_layout_counts() {
    let p = build_run_problem(&example_net(), 2);
    let count = |prefix: &str| p.declarations.iter().filter(|(n, _)| n.starts_with(prefix)).count();
    assert_eq!(count("t_"), 2);
    assert_eq!(count("m_"), 12);
    assert_eq!(count("x_"), 6);
}

#[test]
fn declaration_count_matches_layout() {
    for (trace, seq) in [(ut1(), false), (ut3(), false), (crate::log::fixtures::ut2(), true)] {
        let p = build_problem(&example_net(), &trace, &CostFunctions::standard_fit(), 4, &int(5), 0).unwrap();
        assert_eq!(p.layout.sequential, seq);
        assert_eq!(p.declarations.len(), p.layout.expected_declarations());
        let names: std::collections::BTreeSet<_> = p.declarations.iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), p.declarations.len());
    }
}

#[test]
fn sequential_trace_has_no_order_variables() {
    let p = build_problem(&example_net(), &crate::log::fixtures::ut2(), &CostFunctions::standard_min(), 3, &int(5), 0)
        .unwrap();
    assert!(p.declarations.iter().all(|(n, _)| !n.starts_with("ts_") && !n.starts_with("pos_") && !n.starts_with("nth_")));
    assert_eq!(p.meta.m, 3);
    assert_eq!(p.objective, Some(term::var("d_3_3")));
}

#[test]
fn problem_metadata() {
    let p = build_problem(&example_net(), &ut1(), &CostFunctions::standard_fit(), 9, &int(5), 0).unwrap();
    assert_eq!((p.meta.m, p.meta.m1, p.meta.m2, p.meta.n, p.meta.k), (2, 0, 2, 9, 0));
    assert_eq!(p.meta.big_m, int(26));
}

#[test]
fn script_is_balanced_and_closed() {
    let p = build_problem(&example_net(), &ut1(), &CostFunctions::standard_fit(), 3, &int(5), 0).unwrap();
    let text = p.to_smtlib(true, &[]);
    let mut depth = 0i64;
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        assert!(depth >= 0);
    }
    assert_eq!(depth, 0);
    assert!(text.contains("(minimize d_2_3)"));
    let mut known: std::collections::HashSet<String> = p.declarations.iter().map(|(n, _)| n.clone()).collect();
    for (name, _, body) in &p.definitions {
        body.for_each_var(&mut |v| assert!(known.contains(v), "{name} uses undefined {v}"));
        known.insert(name.clone());
    }
    for a in p.assertions() {
        a.for_each_var(&mut |v| assert!(known.contains(v), "undefined {v}"));
    }
}

/// Model values for a concrete run of the example net: a(x := 2), b(y := 1), c,
/// then the final loop.
fn run_model(p: &SmtProblem, codes: &[i64], xs: &[(i64, i64)]) -> HashMap<String, SValue> {
    let net = example_net().augment_final_loop();
    let l = &p.layout;
    let mut model = HashMap::new();
    let mut marking = net.initial_marking().clone();
    for i in 0..=l.n {
        if i > 0 {
            let t = (codes[i - 1] - 1) as usize;
            model.insert(l.t(i), SValue::Num(int(codes[i - 1])));
            marking = net.next_marking(&marking, t);
        }
        for (pi, k) in marking.iter().enumerate() {
            model.insert(l.m(i, pi), SValue::Num(int(*k as i64)));
        }
        model.insert(l.x(i, 0), SValue::Num(int(xs[i].0)));
        model.insert(l.x(i, 1), SValue::Num(int(xs[i].1)));
    }
    model
}

#[test]
fn evaluator_accepts_a_genuine_run_and_rejects_a_broken_one() {
    let p = build_run_problem(&example_net(), 4);
    let good = run_model(&p, &[1, 2, 3, 6], &[(0, 0), (2, 0), (2, 1), (2, 1), (2, 1)]);
    p.check_model(&good).unwrap();
    // d requires x = y
    let bad = run_model(&p, &[1, 2, 4, 6], &[(0, 0), (2, 0), (2, 1), (2, 1), (2, 1)]);
    assert!(p.check_model(&bad).unwrap_err().contains("firing"));
    // frame violation: c writes nothing
    let bad = run_model(&p, &[1, 2, 3, 6], &[(0, 0), (2, 0), (2, 1), (3, 1), (3, 1)]);
    assert!(p.check_model(&bad).is_err());
    // not final
    let mut bad = good.clone();
    bad.insert(p.layout.m(4, 3), SValue::Num(int(2)));
    assert!(p.check_model(&bad).is_err());
    bad.remove(&p.layout.m(4, 3));
    assert!(p.check_model(&bad).unwrap_err().contains("no value"));
}

#[test]
fn sorts_follow_variable_types() {
    let p = build_problem(&example_net(), &ut1(), &CostFunctions::standard_fit(), 2, &int(5), 0).unwrap();
    let sort = |n: &str| p.declarations.iter().find(|(d, _)| d == n).map(|(_, s)| *s);
    assert_eq!(sort("x_0_0"), Some(Sort::Real));
    assert_eq!(sort("drop_1"), Some(Sort::Bool));
    assert_eq!(sort("act_2"), Some(Sort::Int));
    assert_eq!(sort("d_2_2"), Some(Sort::Real));
    assert_eq!(sort("nth_1"), Some(Sort::Int));
}
