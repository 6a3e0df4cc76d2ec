//! The worked example: a small net with two data variables and three
//! uncertain traces over it.

use std::collections::{BTreeMap, BTreeSet};

use crate::dpn::{CmpOp, Dpn, DpnBuilder, Expr, Value, VarType};
use crate::log::{TimeSpec, UncertainEvent, UncertainTrace, ValueSpec};
use crate::rational::ratio;

/// The running example: a (x' ≥ 0), b (y' > 0), then c (x ≠ y) or d (x = y),
/// with e (y' = y + 1) looping on the final place.
pub fn example_net() -> Dpn {
    let zero = Value::Int(0);
    DpnBuilder::new()
        .place("p0")
        .place("p1")
        .place("p2")
        .place("p3")
        .transition("a", Some("a"), Expr::cmp(CmpOp::Ge, Expr::wvar("x"), Expr::int(0)))
        .transition("b", Some("b"), Expr::cmp(CmpOp::Gt, Expr::wvar("y"), Expr::int(0)))
        .transition("c", Some("c"), Expr::cmp(CmpOp::Ne, Expr::rvar("x"), Expr::rvar("y")))
        .transition("d", Some("d"), Expr::cmp(CmpOp::Eq, Expr::rvar("x"), Expr::rvar("y")))
        .transition(
            "e",
            Some("e"),
            Expr::cmp(CmpOp::Eq, Expr::wvar("y"), Expr::Add(vec![Expr::rvar("y"), Expr::int(1)])),
        )
        .arc("p0", "a", 1)
        .arc("a", "p1", 1)
        .arc("p1", "b", 1)
        .arc("b", "p2", 1)
        .arc("p2", "c", 1)
        .arc("c", "p3", 1)
        .arc("p2", "d", 1)
        .arc("d", "p3", 1)
        .arc("p3", "e", 1)
        .arc("e", "p3", 1)
        .variable("x", VarType::Rat, zero.clone())
        .variable("y", VarType::Rat, zero)
        .initial("p0", 1)
        .final_marking("p3", 1)
        .build()
        .unwrap()
}

fn rat(n: i64, d: i64) -> Value {
    Value::Rat(ratio(n, d))
}

pub fn ut1() -> UncertainTrace {
    UncertainTrace::new(vec![
        UncertainEvent {
            id: "e1".into(),
            conf: ratio(1, 4),
            labels: BTreeMap::from([("a".into(), ratio(1, 1))]),
            ts: TimeSpec::Interval(0, 5),
            data: BTreeMap::from([("x".into(), ValueSpec::Set(vec![rat(2, 1), rat(3, 1)]))]),
        },
        UncertainEvent {
            id: "e2".into(),
            conf: ratio(9, 10),
            labels: BTreeMap::from([("b".into(), ratio(4, 5)), ("c".into(), ratio(1, 5))]),
            ts: TimeSpec::Set(BTreeSet::from([2])),
            data: BTreeMap::from([("y".into(), ValueSpec::Set(vec![rat(1, 1)]))]),
        },
    ])
    .unwrap()
}

pub fn ut2() -> UncertainTrace {
    UncertainTrace::new(vec![
        UncertainEvent {
            id: "e3".into(),
            conf: ratio(1, 1),
            labels: BTreeMap::from([("a".into(), ratio(1, 1))]),
            ts: TimeSpec::Set(BTreeSet::from([0])),
            data: BTreeMap::from([("x".into(), ValueSpec::Interval(ratio(1, 1), ratio(13, 2)))]),
        },
        UncertainEvent::certain("e4", "b", 2, [("y".to_string(), rat(1, 1))]),
        UncertainEvent::certain("e5", "c", 3, []),
    ])
    .unwrap()
}

pub fn ut3() -> UncertainTrace {
    UncertainTrace::new(vec![
        UncertainEvent::certain("e6", "a", 2, [("x".to_string(), rat(6, 1))]),
        UncertainEvent::certain("e7", "b", 2, [("y".to_string(), rat(1, 1))]),
    ])
    .unwrap()
}
