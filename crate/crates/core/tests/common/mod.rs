//! Random small instances: workflow nets with integer data and short
//! uncertain traces over a few labels.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ucheck_core::dpn::{cheapest_run_cost_ub, CmpOp, Dpn, DpnBuilder, Expr, Value, VarType};
use ucheck_core::log::{TimeSpec, UncertainEvent, UncertainTrace, ValueSpec};
use ucheck_core::oracle::ValueUniverse;
use ucheck_core::rational::ratio;

pub const LABELS: [&str; 3] = ["a", "b", "c"];

pub struct Instance {
    pub seed: u64,
    pub net: Dpn,
    pub trace: UncertainTrace,
}

const OPS: [CmpOp; 5] = [CmpOp::Ge, CmpOp::Le, CmpOp::Eq, CmpOp::Gt, CmpOp::Lt];

fn written_guard(rng: &mut ChaCha8Rng, var: &str) -> Expr {
    let op = *OPS.choose(rng).unwrap();
    Expr::cmp(op, Expr::wvar(var), Expr::int(rng.gen_range(0..=3)))
}

fn read_guard(rng: &mut ChaCha8Rng, vars: &[&str]) -> Expr {
    if vars.len() == 2 && rng.gen_bool(0.5) {
        let op = if rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
        Expr::cmp(op, Expr::rvar(vars[0]), Expr::rvar(vars[1]))
    } else {
        let v = vars.choose(rng).unwrap();
        Expr::cmp(*OPS.choose(rng).unwrap(), Expr::rvar(v), Expr::int(rng.gen_range(0..=3)))
    }
}

fn visible_guard(rng: &mut ChaCha8Rng, vars: &[&str]) -> Expr {
    match rng.gen_range(0..10) {
        0..=2 => Expr::truth(),
        3..=6 => {
            let v = *vars.choose(rng).unwrap();
            written_guard(rng, v)
        }
        7 => read_guard(rng, vars),
        _ => {
            let v = *vars.choose(rng).unwrap();
            let w = written_guard(rng, v);
            Expr::And(vec![w, read_guard(rng, vars)])
        }
    }
}

/// A sequence of stages between consecutive places; each stage is one
/// transition, a choice of two, or a transition with a silent bypass. At most
/// six transitions, at most one silent.
pub fn random_net(rng: &mut ChaCha8Rng) -> Dpn {
    let vars: Vec<&str> = if rng.gen_bool(0.5) { vec!["x", "y"] } else { vec!["x"] };
    let mut b = DpnBuilder::new();
    for v in &vars {
        b = b.variable(v, VarType::Int, Value::Int(0));
    }
    let stages = rng.gen_range(2..=3);
    let mut n_trans = 0;
    let mut silent_used = false;
    b = b.place("p0").initial("p0", 1);
    for s in 0..stages {
        let (from, to) = (format!("p{s}"), format!("p{}", s + 1));
        b = b.place(&to);
        let remaining = 6 - n_trans;
        let kind = if remaining <= 1 { 0 } else { rng.gen_range(0..3) };
        let mut add = |b: DpnBuilder, label: Option<&str>, guard: Expr| {
            let id = format!("t{n_trans}");
            n_trans += 1;
            b.transition(&id, label, guard).arc(&from, &id, 1).arc(&id, &to, 1)
        };
        let label = |rng: &mut ChaCha8Rng| *LABELS.choose(rng).unwrap();
        match kind {
            1 => {
                let (l1, g1) = (label(rng), visible_guard(rng, &vars));
                b = add(b, Some(l1), g1);
                let (l2, g2) = (label(rng), visible_guard(rng, &vars));
                b = add(b, Some(l2), g2);
            }
            2 if !silent_used => {
                silent_used = true;
                let (l1, g1) = (label(rng), visible_guard(rng, &vars));
                b = add(b, Some(l1), g1);
                let g = if rng.gen_bool(0.5) { Expr::truth() } else { read_guard(rng, &vars) };
                b = add(b, None, g);
            }
            _ => {
                let (l1, g1) = (label(rng), visible_guard(rng, &vars));
                b = add(b, Some(l1), g1);
            }
        }
    }
    b.final_marking(&format!("p{stages}"), 1).build().expect("generated net is well formed")
}

fn random_labels(rng: &mut ChaCha8Rng) -> BTreeMap<String, ucheck_core::Rational> {
    let pool = ["a", "b", "c", "z"];
    let first = *pool.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        return BTreeMap::from([(first.to_string(), ratio(1, 1))]);
    }
    let second = *pool.iter().filter(|l| **l != first).collect::<Vec<_>>().choose(rng).unwrap();
    let p = [ratio(1, 2), ratio(1, 4), ratio(3, 4)].choose(rng).unwrap().clone();
    BTreeMap::from([(first.to_string(), ratio(1, 1) - &p), (second.to_string(), p)])
}

pub fn random_trace(rng: &mut ChaCha8Rng, net: &Dpn) -> UncertainTrace {
    let n = rng.gen_range(1..=3);
    let vars: Vec<String> = net.variables().iter().map(|v| v.name.clone()).collect();
    let mut events = Vec::new();
    for i in 0..n {
        let conf = if rng.gen_bool(0.2) { ratio(1, 1) } else { [ratio(1, 4), ratio(1, 2), ratio(3, 4)].choose(rng).unwrap().clone() };
        let ts = if rng.gen_bool(0.6) {
            let k = rng.gen_range(1..=2);
            TimeSpec::Set((0..k).map(|_| rng.gen_range(0..=3)).collect::<BTreeSet<u64>>())
        } else {
            let lo = rng.gen_range(0..=2);
            TimeSpec::Interval(lo, lo + rng.gen_range(1..=2))
        };
        let mut data = BTreeMap::new();
        for v in &vars {
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(1..=3);
                let mut vals: Vec<i64> = (0..=3).collect();
                vals.shuffle(rng);
                vals.truncate(k);
                vals.sort();
                data.insert(v.clone(), ValueSpec::Set(vals.into_iter().map(Value::Int).collect()));
            }
        }
        events.push(UncertainEvent { id: format!("e{}", i + 1), conf, labels: random_labels(rng), ts, data });
    }
    UncertainTrace::new(events).expect("generated trace is well formed")
}

/// Value universe for the oracle: guard constants and trace values, closed
/// twice under ±1.
pub fn universe(net: &Dpn, trace: &UncertainTrace) -> ValueUniverse {
    ValueUniverse::for_net(net, 2).with_trace(trace)
}

/// An instance whose net has at least one process run.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let net = random_net(&mut rng);
        let u = ValueUniverse::for_net(&net, 2);
        if cheapest_run_cost_ub(&net, |_| ratio(1, 1), 16, &u, 10_000).is_err() {
            continue;
        }
        let trace = random_trace(&mut rng, &net);
        return Instance { seed, net, trace };
    }
}
