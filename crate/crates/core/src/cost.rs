//! Alignment moves and the cost schema: penalties P_L / P_M / P_=, the
//! confidence penalty θ, removal cost κ_uT and the combination ⊗, in the
//! `fit` and `min` instantiations.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::dpn::{Dpn, Transition, TransitionFiring};
use crate::log::{Event, Realization, UncertainEvent, UncertainTrace};
use crate::rational::{int, parse_rational, Cost, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Log(Event),
    Model(TransitionFiring),
    Sync(Event, TransitionFiring),
}

impl Move {
    pub fn event(&self) -> Option<&Event> {
        match self {
            Move::Log(e) | Move::Sync(e, _) => Some(e),
            Move::Model(_) => None,
        }
    }

    pub fn firing(&self) -> Option<&TransitionFiring> {
        match self {
            Move::Model(f) | Move::Sync(_, f) => Some(f),
            Move::Log(_) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Move::Log(_) => "log",
            Move::Model(_) => "model",
            Move::Sync(..) => "sync",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub moves: Vec<Move>,
}

impl Alignment {
    pub fn log_projection(&self) -> Vec<&Event> {
        self.moves.iter().filter_map(Move::event).collect()
    }

    pub fn model_projection(&self) -> Vec<TransitionFiring> {
        self.moves.iter().filter_map(Move::firing).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Expected-fitness conformance with confidence costs.
    Fit,
    /// Lower bound: κ_R = 0, θ = 1, ⊗ = product.
    Min,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Fit => "fit",
            Mode::Min => "min",
        }
    }
}

/// Which written variables P_= compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MismatchScope {
    /// Only variables the source uncertain event constrains.
    Logged,
    /// Every written variable for which the event carries a value.
    AllWritten,
}

/// User-supplied P_L / P_M values keyed by activity (or transition id for P_M).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PenaltyTable {
    pub log: BTreeMap<String, Rational>,
    pub model: BTreeMap<String, Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("event `{0}` does not occur in the trace")]
    UnknownEvent(String),
    #[error("label `{label}` is not admissible for event `{event}`")]
    InadmissibleLabel { event: String, label: String },
    #[error("log projection of the alignment differs from the realization")]
    ProjectionMismatch,
    #[error("bad penalty table: {0}")]
    Table(String),
}

impl PenaltyTable {
    /// `{"activity": {"log": 2, "model": "1/2"}, ...}`
    pub fn from_json(j: &serde_json::Value) -> Result<Self, CostError> {
        let obj = j.as_object().ok_or_else(|| CostError::Table("expected an object".into()))?;
        let mut table = PenaltyTable::default();
        for (act, entry) in obj {
            let entry = entry.as_object().ok_or_else(|| CostError::Table(format!("entry `{act}` must be an object")))?;
            for (k, v) in entry {
                let q = match v {
                    serde_json::Value::Number(n) => parse_rational(&n.to_string()).ok(),
                    serde_json::Value::String(s) => parse_rational(s).ok(),
                    _ => None,
                }
                .filter(|q| *q >= Rational::zero())
                .ok_or_else(|| CostError::Table(format!("`{act}.{k}` must be a non-negative number")))?;
                match k.as_str() {
                    "log" => table.log.insert(act.clone(), q),
                    "model" => table.model.insert(act.clone(), q),
                    _ => return Err(CostError::Table(format!("unknown key `{k}` in `{act}`"))),
                };
            }
        }
        Ok(table)
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty() && self.model.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostFunctions {
    pub mode: Mode,
    pub scope: MismatchScope,
    pub table: PenaltyTable,
}

impl CostFunctions {
    pub fn standard_fit() -> Self {
        CostFunctions { mode: Mode::Fit, scope: MismatchScope::Logged, table: PenaltyTable::default() }
    }

    pub fn standard_min() -> Self {
        CostFunctions { mode: Mode::Min, ..Self::standard_fit() }
    }

    /// `standard-fit` / `fit` or `standard-min` / `min`.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "fit" | "standard-fit" => Some(Self::standard_fit()),
            "min" | "standard-min" => Some(Self::standard_min()),
            _ => None,
        }
    }

    pub fn with_table(mut self, table: PenaltyTable) -> Self {
        self.table = table;
        self
    }

    pub fn with_scope(mut self, scope: MismatchScope) -> Self {
        self.scope = scope;
        self
    }

    /// P_L for an event labelled `label`.
    pub fn log_penalty(&self, label: &str) -> Rational {
        self.table.log.get(label).cloned().unwrap_or_else(Rational::one)
    }

    /// P_M depends only on the transition: 0 for silent or synthetic ones,
    /// else 1 + |write(t)|, unless overridden.
    pub fn model_penalty(&self, t: &Transition) -> Rational {
        if t.synthetic {
            return Rational::zero();
        }
        let key = t.label.as_deref().unwrap_or(&t.id);
        if let Some(q) = self.table.model.get(key).or_else(|| self.table.model.get(&t.id)) {
            return q.clone();
        }
        if t.is_silent() {
            Rational::zero()
        } else {
            int(1 + t.writes().len() as i64)
        }
    }

    /// Variables compared by P_= for transition `t` and source event `ue`.
    pub fn compared_vars<'a>(&self, t: &'a Transition, ue: &UncertainEvent) -> Vec<&'a String> {
        t.writes()
            .iter()
            .filter(|v| match self.scope {
                MismatchScope::Logged => ue.data.contains_key(*v),
                MismatchScope::AllWritten => true,
            })
            .collect()
    }

    /// P_=: ∞ on label mismatch, else the fraction of compared variables whose
    /// event value differs from the written value.
    pub fn sync_penalty(&self, net: &Dpn, ue: &UncertainEvent, e: &Event, f: &TransitionFiring) -> Cost {
        let t = net.transition(f.transition);
        if t.label.as_deref() != Some(e.label.as_str()) {
            return Cost::Infinite;
        }
        let nv = net.variables().len();
        if nv == 0 {
            return Cost::zero();
        }
        let mismatches = self
            .compared_vars(t, ue)
            .into_iter()
            .filter(|v| match (e.assign.get(*v), f.write.get(*v)) {
                (Some(a), Some(b)) => !a.same(b),
                _ => false,
            })
            .count();
        Cost::Finite(Rational::new(mismatches.into(), nv.into()))
    }

    /// θ for choosing `label` for `ue`.
    pub fn theta_for(&self, ue: &UncertainEvent, label: &str) -> Result<Rational, CostError> {
        let p = ue
            .label_conf(label)
            .ok_or_else(|| CostError::InadmissibleLabel { event: ue.id.clone(), label: label.to_string() })?;
        Ok(match self.mode {
            Mode::Fit => (Rational::one() - &ue.conf) + (Rational::one() - p),
            Mode::Min => Rational::one(),
        })
    }

    pub fn theta(&self, e: &Event, trace: &UncertainTrace) -> Result<Rational, CostError> {
        let ue = trace.event(&e.id).ok_or_else(|| CostError::UnknownEvent(e.id.clone()))?;
        self.theta_for(ue, &e.label)
    }

    /// κ_uT: cost of discarding `ue` (∞ for certain events).
    pub fn removal(&self, ue: &UncertainEvent) -> Cost {
        if ue.is_certain() {
            return Cost::Infinite;
        }
        match self.mode {
            Mode::Fit => Cost::Finite(ue.conf.clone()),
            Mode::Min => Cost::zero(),
        }
    }

    /// ⊗. For model moves (`log_absent`) θ is not consulted.
    pub fn combine(&self, k: Cost, th: &Rational, log_absent: bool) -> Cost {
        if log_absent {
            return k;
        }
        match self.mode {
            Mode::Min => k * th,
            Mode::Fit => match k {
                Cost::Infinite => Cost::Infinite,
                Cost::Finite(q) if q.is_zero() => Cost::Finite(th.clone()),
                Cost::Finite(q) => Cost::Finite(&q * (Rational::one() + th)),
            },
        }
    }

    pub fn move_cost(&self, net: &Dpn, trace: &UncertainTrace, m: &Move) -> Result<Cost, CostError> {
        let ue_of = |e: &Event| trace.event(&e.id).ok_or_else(|| CostError::UnknownEvent(e.id.clone()));
        Ok(match m {
            Move::Model(f) => Cost::Finite(self.model_penalty(net.transition(f.transition))),
            Move::Log(e) => {
                let th = self.theta_for(ue_of(e)?, &e.label)?;
                self.combine(Cost::Finite(self.log_penalty(&e.label)), &th, false)
            }
            Move::Sync(e, f) => {
                let ue = ue_of(e)?;
                let th = self.theta_for(ue, &e.label)?;
                self.combine(self.sync_penalty(net, ue, e, f), &th, false)
            }
        })
    }

    /// Cost of the all-drop / all-log-move prefix of the trivial alignment γ₀:
    /// certain events as log moves (worst label), uncertain ones dropped or
    /// log-moved, whichever is cheaper. Adding any run's P_M cost bounds the optimum.
    pub fn gamma0_log_cost(&self, trace: &UncertainTrace) -> Rational {
        let mut total = Rational::zero();
        for ue in trace.events() {
            let worst_log = ue
                .labels
                .keys()
                .map(|l| {
                    let th = self.theta_for(ue, l).expect("admissible");
                    self.combine(Cost::Finite(self.log_penalty(l)), &th, false)
                })
                .max()
                .unwrap_or(Cost::zero());
            let c = worst_log.min(self.removal(ue));
            total += c.finite().cloned().expect("log moves are finite");
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub per_move: Vec<Cost>,
    pub kappa_a: Cost,
    pub kappa_r: Cost,
    pub total: Cost,
}

/// 𝔎 = κ_A + κ_R for alignment `gamma` of realization `r` of `trace`.
pub fn total_cost(
    net: &Dpn,
    gamma: &Alignment,
    r: &Realization,
    trace: &UncertainTrace,
    cf: &CostFunctions,
) -> Result<CostReport, CostError> {
    let proj = gamma.log_projection();
    if proj.len() != r.events.len() || proj.iter().zip(&r.events).any(|(a, b)| *a != b) {
        return Err(CostError::ProjectionMismatch);
    }
    let mut per_move = Vec::with_capacity(gamma.moves.len());
    let mut kappa_a = Cost::zero();
    for m in &gamma.moves {
        let c = cf.move_cost(net, trace, m)?;
        kappa_a += c.clone();
        per_move.push(c);
    }
    let mut kappa_r = Cost::zero();
    for ue in r.dropped(trace) {
        kappa_r += cf.removal(ue);
    }
    let total = kappa_a.clone() + kappa_r.clone();
    Ok(CostReport { per_move, kappa_a, kappa_r, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpn::fixtures::example_net;
    use crate::dpn::{Assignment, Value};
    use crate::log::fixtures::ut1;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn rat(n: i64) -> Value {
        Value::Rat(ratio(n, 1))
    }

    fn event(id: &str, label: &str, var: &str, v: i64) -> Event {
        Event { id: id.into(), label: label.into(), assign: Assignment::from([(var.into(), rat(v))]) }
    }

    fn firing(net: &Dpn, t: &str, read: &[(&str, i64)], write: &[(&str, i64)]) -> TransitionFiring {
        TransitionFiring {
            transition: net.transition_index(t).unwrap(),
            read: read.iter().map(|(k, v)| (k.to_string(), rat(*v))).collect(),
            write: write.iter().map(|(k, v)| (k.to_string(), rat(*v))).collect(),
        }
    }

    /// γ¹ (x^w ↦ x_a) and γ² of the running example over e⃗′.
    fn gamma(net: &Dpn, x_a: i64) -> (Alignment, Realization) {
        let e1 = event("e1", "a", "x", 2);
        let e2 = event("e2", "b", "y", 1);
        let r = Realization { events: vec![e1.clone(), e2.clone()], timestamps: vec![0, 2] };
        let g = Alignment {
            moves: vec![
                Move::Sync(e1, firing(net, "a", &[("x", 0), ("y", 0)], &[("x", x_a)])),
                Move::Sync(e2, firing(net, "b", &[("x", x_a), ("y", 0)], &[("y", 1)])),
                Move::Model(firing(net, "c", &[("x", x_a), ("y", 1)], &[])),
            ],
        };
        (g, r)
    }

    #[test]
    fn standard_penalties() {
        let net = example_net();
        let cf = CostFunctions::standard_fit();
        assert_eq!(cf.model_penalty(net.transition(2)), int(1));
        assert_eq!(cf.model_penalty(net.transition(0)), int(2));
        let aug = net.augment_final_loop();
        assert_eq!(cf.model_penalty(aug.transitions().last().unwrap()), int(0));
        let t = ut1();
        let ue1 = &t.events()[0];
        let e1 = event("e1", "a", "x", 2);
        assert_eq!(cf.sync_penalty(&net, ue1, &e1, &firing(&net, "a", &[], &[("x", 2)])), Cost::zero());
        assert_eq!(cf.sync_penalty(&net, ue1, &e1, &firing(&net, "a", &[], &[("x", 5)])), Cost::Finite(ratio(1, 2)));
        assert_eq!(cf.sync_penalty(&net, ue1, &e1, &firing(&net, "b", &[], &[("y", 2)])), Cost::Infinite);
    }

    #[test]
    fn theta_values() {
        let cf = CostFunctions::standard_fit();
        let t = ut1();
        assert_eq!(cf.theta(&event("e1", "a", "x", 2), &t).unwrap(), ratio(3, 4));
        assert_eq!(cf.theta(&event("e2", "b", "y", 1), &t).unwrap(), ratio(3, 10));
        let certain = crate::log::UncertainEvent::certain("e", "a", 0, []);
        assert_eq!(cf.theta_for(&certain, "a").unwrap(), ratio(0, 1));
        assert!(cf.theta(&event("e2", "d", "y", 1), &t).is_err());
        assert!(cf.theta(&event("e9", "a", "y", 1), &t).is_err());
    }

    #[test]
    fn combine_cases() {
        let cf = CostFunctions::standard_fit();
        assert_eq!(cf.combine(Cost::one(), &ratio(3, 4), true), Cost::one());
        assert_eq!(cf.combine(Cost::zero(), &ratio(3, 4), false), Cost::Finite(ratio(3, 4)));
        assert_eq!(cf.combine(Cost::Finite(ratio(1, 2)), &ratio(3, 4), false), Cost::Finite(ratio(7, 8)));
        assert_eq!(cf.combine(Cost::Infinite, &ratio(3, 4), false), Cost::Infinite);
    }

    #[test]
    fn removal_costs() {
        let cf = CostFunctions::standard_fit();
        let t = ut1();
        assert_eq!(cf.removal(&t.events()[0]), Cost::Finite(ratio(1, 4)));
        assert_eq!(cf.removal(&t.events()[1]), Cost::Finite(ratio(9, 10)));
        assert_eq!(cf.removal(&crate::log::UncertainEvent::certain("e", "a", 0, [])), Cost::Infinite);
        assert_eq!(CostFunctions::standard_min().removal(&t.events()[0]), Cost::zero());
    }

    #[test]
    fn golden_alignment_costs() {
        let net = example_net();
        let t = ut1();
        let (g1, r) = gamma(&net, 2);
        let report = total_cost(&net, &g1, &r, &t, &CostFunctions::standard_fit()).unwrap();
        assert_eq!(report.total, Cost::Finite(ratio(41, 20)));
        assert_eq!(
            report.per_move,
            vec![Cost::Finite(ratio(3, 4)), Cost::Finite(ratio(3, 10)), Cost::one()]
        );
        assert_eq!(report.kappa_r, Cost::zero());
        let (g2, r2) = gamma(&net, 5);
        let report = total_cost(&net, &g2, &r2, &t, &CostFunctions::standard_fit()).unwrap();
        assert_eq!(report.total, Cost::Finite(ratio(87, 40)));
        let report = total_cost(&net, &g1, &r, &t, &CostFunctions::standard_min()).unwrap();
        assert_eq!(report.total, Cost::one());
    }

    #[test]
    fn only_removal_cost() {
        let net = example_net();
        let ue = crate::log::UncertainEvent { conf: ratio(1, 4), ..ut1().events()[0].clone() };
        let t = UncertainTrace::new(vec![ue]).unwrap();
        let report =
            total_cost(&net, &Alignment::default(), &Realization::default(), &t, &CostFunctions::standard_fit()).unwrap();
        assert_eq!(report.total, Cost::Finite(ratio(1, 4)));
    }

    #[test]
    fn min_mode_cases() {
        let net = example_net().augment_final_loop();
        let cf = CostFunctions::standard_min();
        let t = ut1();
        let tfin = TransitionFiring { transition: 5, read: Assignment::new(), write: Assignment::new() };
        assert_eq!(cf.move_cost(&net, &t, &Move::Model(tfin)).unwrap(), Cost::zero());
        let report = total_cost(&net, &Alignment::default(), &Realization::default(), &t, &cf).unwrap();
        assert_eq!(report.total, Cost::zero());
    }

    #[test]
    fn projection_mismatch() {
        let net = example_net();
        let (g, _) = gamma(&net, 2);
        let err = total_cost(&net, &g, &Realization::default(), &ut1(), &CostFunctions::standard_fit());
        assert_eq!(err.unwrap_err(), CostError::ProjectionMismatch);
    }

    #[test]
    fn penalty_table() {
        let j = serde_json::json!({"a": {"log": 2, "model": "1/2"}, "tau1": {"model": 3}});
        let table = PenaltyTable::from_json(&j).unwrap();
        let cf = CostFunctions::standard_fit().with_table(table);
        let net = example_net();
        assert_eq!(cf.log_penalty("a"), int(2));
        assert_eq!(cf.log_penalty("b"), int(1));
        assert_eq!(cf.model_penalty(net.transition(0)), ratio(1, 2));
        assert!(PenaltyTable::from_json(&serde_json::json!({"a": {"log": -1}})).is_err());
        assert!(PenaltyTable::from_json(&serde_json::json!({"a": {"other": 1}})).is_err());
    }

    #[test]
    fn gamma0_cost_for_example() {
        // both events of uT₁ are cheapest dropped: 1/4 + 9/10
        assert_eq!(CostFunctions::standard_fit().gamma0_log_cost(&ut1()), ratio(23, 20));
        assert_eq!(CostFunctions::standard_min().gamma0_log_cost(&ut1()), ratio(0, 1));
    }

    proptest! {
        #[test]
        fn combine_identities(n in 0i64..40, d in 1i64..10, tn in 0i64..20, td in 1i64..10) {
            let cf = CostFunctions::standard_fit();
            let th = ratio(tn, td);
            prop_assert_eq!(cf.combine(Cost::zero(), &th, false), Cost::Finite(th.clone()));
            let k = ratio(n + 1, d);
            prop_assert_eq!(cf.combine(Cost::Finite(k.clone()), &ratio(0, 1), false), Cost::Finite(k.clone()));
            // fit per-move cost dominates the min one
            let min = CostFunctions::standard_min();
            prop_assert!(cf.combine(Cost::Finite(k.clone()), &th, false) >= min.combine(Cost::Finite(k), &int(1), false));
        }
    }
}
