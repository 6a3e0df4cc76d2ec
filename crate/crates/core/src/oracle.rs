//! Brute-force ground truth for small instances: enumerate realizations, align
//! each by uniform-cost search over (log position, state), keep the cheapest.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use num_traits::{One, Zero};

use crate::cost::{Alignment, CostError, CostFunctions, Move};
use crate::dpn::candidate_firings;
use crate::dpn::{Dpn, Expr, State, TransitionFiring, Value, VarType};
use crate::log::{enumerate_realizations, LogError, Realization, UncertainTrace, ValueSpec};
use crate::rational::{Cost, Rational};

pub const OTHER_STRING: &str = "#other";

/// Finite candidate values for model-written variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueUniverse {
    depth: u32,
    numbers: BTreeSet<Rational>,
    strings: BTreeSet<String>,
    types: BTreeMap<String, VarType>,
    values: BTreeMap<String, Vec<Value>>,
}

impl ValueUniverse {
    /// Seeds from initial values and guard constants, closed under ±1 up to
    /// `depth` steps; rational variables also get midpoints between neighbours.
    pub fn for_net(net: &Dpn, depth: u32) -> Self {
        let mut u = ValueUniverse {
            depth,
            numbers: BTreeSet::new(),
            strings: BTreeSet::from([OTHER_STRING.to_string()]),
            types: net.var_types(),
            values: BTreeMap::new(),
        };
        for c in net.constants() {
            u.seed(&c);
        }
        u.rebuild();
        u
    }

    /// Adds every value a trace mentions (set members and interval endpoints).
    pub fn with_trace(mut self, trace: &UncertainTrace) -> Self {
        for ue in trace.events() {
            for spec in ue.data.values() {
                for v in spec.mentioned() {
                    self.seed(&v);
                }
            }
        }
        self.rebuild();
        self
    }

    /// Adds one value to the seed pool.
    pub fn with_value(mut self, v: &Value) -> Self {
        self.seed(v);
        self.rebuild();
        self
    }

    fn seed(&mut self, v: &Value) {
        match v {
            Value::Str(s) => {
                self.strings.insert(s.clone());
            }
            Value::Bool(_) => {}
            other => {
                if let Some(q) = other.as_rational() {
                    self.numbers.insert(q);
                }
            }
        }
    }

    fn rebuild(&mut self) {
        let mut pool = self.numbers.clone();
        for _ in 0..self.depth {
            let step: Vec<Rational> = pool.iter().cloned().collect();
            for q in step {
                pool.insert(&q + Rational::one());
                pool.insert(&q - Rational::one());
            }
        }
        let sorted: Vec<Rational> = pool.iter().cloned().collect();
        let mut with_mid = pool.clone();
        for w in sorted.windows(2) {
            with_mid.insert((&w[0] + &w[1]) / Rational::from_integer(2.into()));
        }
        self.values = self
            .types
            .iter()
            .map(|(name, ty)| {
                let vals: Vec<Value> = match ty {
                    VarType::Bool => vec![Value::Bool(false), Value::Bool(true)],
                    VarType::Str => self.strings.iter().cloned().map(Value::Str).collect(),
                    VarType::Int => pool.iter().filter_map(|q| Value::Rat(q.clone()).coerce(VarType::Int)).collect(),
                    VarType::Rat => with_mid.iter().cloned().map(Value::Rat).collect(),
                };
                (name.clone(), vals)
            })
            .collect();
    }

    pub fn values(&self, var: &str) -> &[Value] {
        self.values.get(var).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn size(&self) -> usize {
        self.values.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("guard of `{0}` combines several written variables in one term; the value universe cannot cover it")]
    Unsupported(String),
    #[error("state space exceeded {0} nodes")]
    StateCap(usize),
    #[error("no complete alignment exists over the value universe")]
    NoAlignment,
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Rejects guards where two written variables meet inside one arithmetic term
/// (e.g. `x' + y' = 5`): ±1 closure of constants does not reach their solutions.
pub fn check_supported(net: &Dpn) -> Result<(), OracleError> {
    fn writes_in(e: &Expr) -> usize {
        let mut n = 0;
        e.for_each_var(&mut |_, a| {
            if a == crate::dpn::Annot::Write {
                n += 1;
            }
        });
        n
    }
    fn ok(e: &Expr) -> bool {
        match e {
            Expr::Cmp(_, a, b) => writes_in(a) + writes_in(b) <= 1,
            Expr::And(xs) | Expr::Or(xs) => xs.iter().all(ok),
            Expr::Not(x) => ok(x),
            _ => true,
        }
    }
    for t in net.transitions() {
        if !ok(&t.guard) {
            return Err(OracleError::Unsupported(t.id.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub state_cap: usize,
    pub realization_cap: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { state_cap: 200_000, realization_cap: 10_000 }
    }
}

/// Minimum κ_A alignment of realization `r` against `net`.
pub fn oracle_align(
    net: &Dpn,
    trace: &UncertainTrace,
    r: &Realization,
    cf: &CostFunctions,
    universe: &ValueUniverse,
    state_cap: usize,
) -> Result<(Alignment, Rational), OracleError> {
    struct Node {
        pos: usize,
        state: State,
        parent: Option<(usize, Move)>,
    }
    let universe = r.events.iter().flat_map(|e| e.assign.values()).fold(universe.clone(), |u, v| u.with_value(v));
    let events = &r.events;
    let mut nodes = vec![Node { pos: 0, state: net.initial_state(), parent: None }];
    let mut best: HashMap<(usize, State), Rational> = HashMap::new();
    best.insert((0, net.initial_state()), Rational::zero());
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Rational::zero(), 0usize)));
    let log_costs: Vec<Rational> = events
        .iter()
        .map(|e| {
            let c = cf.move_cost(net, trace, &Move::Log(e.clone()))?;
            Ok(c.finite().cloned().expect("log moves are finite"))
        })
        .collect::<Result<_, CostError>>()?;

    while let Some(Reverse((cost, id))) = heap.pop() {
        let (pos, state) = (nodes[id].pos, nodes[id].state.clone());
        if best.get(&(pos, state.clone())).is_some_and(|b| *b < cost) {
            continue;
        }
        if pos == events.len() && &state.marking == net.final_marking() {
            let mut moves = Vec::new();
            let mut cur = id;
            while let Some((p, m)) = &nodes[cur].parent {
                moves.push(m.clone());
                cur = *p;
            }
            moves.reverse();
            return Ok((Alignment { moves }, cost));
        }
        let mut succ: Vec<(usize, State, Move, Rational)> = Vec::new();
        if pos < events.len() {
            succ.push((pos + 1, state.clone(), Move::Log(events[pos].clone()), log_costs[pos].clone()));
        }
        for t in 0..net.transitions().len() {
            let tr = net.transition(t);
            if tr.synthetic || !net.is_enabled(&state.marking, t) {
                continue;
            }
            let firings: Vec<TransitionFiring> = candidate_firings(net, &state, t, &universe);
            for f in firings {
                let Ok(next) = net.fire(&state, &f) else { continue };
                let pm = cf.model_penalty(tr);
                succ.push((pos, next.clone(), Move::Model(f.clone()), pm));
                if pos < events.len() && tr.label.as_deref() == Some(events[pos].label.as_str()) {
                    let m = Move::Sync(events[pos].clone(), f);
                    if let Cost::Finite(c) = cf.move_cost(net, trace, &m)? {
                        succ.push((pos + 1, next, m, c));
                    }
                }
            }
        }
        for (npos, nstate, m, c) in succ {
            let ncost = &cost + &c;
            let key = (npos, nstate);
            if best.get(&key).is_some_and(|b| *b <= ncost) {
                continue;
            }
            if nodes.len() >= state_cap {
                return Err(OracleError::StateCap(state_cap));
            }
            best.insert(key.clone(), ncost.clone());
            nodes.push(Node { pos: key.0, state: key.1, parent: Some((id, m)) });
            heap.push(Reverse((ncost, nodes.len() - 1)));
        }
    }
    Err(OracleError::NoAlignment)
}

/// The trace with every interval replaced by the universe values inside it
/// (endpoints included), so that its realizations can be enumerated.
pub fn discretize(trace: &UncertainTrace, net: &Dpn, universe: &ValueUniverse) -> UncertainTrace {
    let types = net.var_types();
    let mut events = trace.events().to_vec();
    for ue in &mut events {
        for (var, spec) in ue.data.iter_mut() {
            if let ValueSpec::Interval(lo, hi) = spec {
                let ty = types.get(var).copied().unwrap_or(VarType::Rat);
                let mut vals: Vec<Value> =
                    universe.values(var).iter().filter(|v| v.as_rational().is_some_and(|q| *lo <= q && q <= *hi)).cloned().collect();
                for end in [lo.clone(), hi.clone()] {
                    let end = if ty == VarType::Int { Value::Rat(end.ceil().min(hi.floor())) } else { Value::Rat(end) };
                    if let Some(v) = end.coerce(ty) {
                        if ValueSpec::Interval(lo.clone(), hi.clone()).contains(&v) && !vals.iter().any(|w| w.same(&v)) {
                            vals.push(v);
                        }
                    }
                }
                *spec = ValueSpec::Set(vals);
            }
        }
    }
    let mut out = UncertainTrace::new(events).expect("same ids and invariants");
    out.name = trace.name.clone();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub realization: Realization,
    pub alignment: Alignment,
    pub cost: Rational,
}

/// Minimum of κ_A + κ_R over all realizations of `trace`.
pub fn oracle_conformance(
    net: &Dpn,
    trace: &UncertainTrace,
    cf: &CostFunctions,
    universe: &ValueUniverse,
    limits: OracleLimits,
) -> Result<OracleResult, OracleError> {
    check_supported(net)?;
    let universe = universe.clone().with_trace(trace);
    let finite = discretize(trace, net, &universe);
    let realizations = enumerate_realizations(&finite, &net.var_types(), limits.realization_cap)?;
    let mut best: Option<OracleResult> = None;
    for r in realizations {
        let mut kappa_r = Cost::zero();
        for ue in r.dropped(trace) {
            kappa_r += cf.removal(ue);
        }
        let Cost::Finite(kappa_r) = kappa_r else { continue };
        if best.as_ref().is_some_and(|b| kappa_r >= b.cost) {
            continue;
        }
        match oracle_align(net, trace, &r, cf, &universe, limits.state_cap) {
            Ok((alignment, ka)) => {
                let cost = ka + kappa_r;
                if best.as_ref().is_none_or(|b| cost < b.cost) {
                    best = Some(OracleResult { realization: r, alignment, cost });
                }
            }
            Err(OracleError::NoAlignment) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(OracleError::NoAlignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::total_cost;
    use crate::dpn::fixtures::example_net;
    use crate::dpn::{Assignment, CmpOp, DpnBuilder};
    use crate::log::fixtures::{ut1, ut2, ut3};
    use crate::log::Event;
    use crate::rational::{int, ratio};

    fn universe(net: &Dpn, trace: &UncertainTrace) -> ValueUniverse {
        ValueUniverse::for_net(net, 1).with_trace(trace)
    }

    #[test]
    fn universe_contents() {
        let net = example_net();
        let u = ValueUniverse::for_net(&net, 1);
        let xs: Vec<Rational> = u.values("x").iter().map(|v| v.as_rational().unwrap()).collect();
        // seeds 0 (α₀, guard constants) and 1 (from y' = y + 1)
        assert_eq!(xs, vec![int(-1), ratio(-1, 2), int(0), ratio(1, 2), int(1), ratio(3, 2), int(2)]);
        let u2 = u.with_trace(&ut1());
        assert!(u2.values("y").iter().any(|v| v.same(&Value::Int(3))));
        assert!(u2.values("x").len() > xs.len());
    }

    #[test]
    fn golden_values() {
        let net = example_net();
        let fit = CostFunctions::standard_fit();
        let min = CostFunctions::standard_min();
        let lim = OracleLimits::default();
        let t1 = ut1();
        let r = oracle_conformance(&net, &t1, &fit, &universe(&net, &t1), lim).unwrap();
        assert_eq!(r.cost, ratio(41, 20));
        assert_eq!(oracle_conformance(&net, &t1, &min, &universe(&net, &t1), lim).unwrap().cost, int(1));
        let t2 = ut2().coerce_to(&net).unwrap();
        assert_eq!(oracle_conformance(&net, &t2, &fit, &universe(&net, &t2), lim).unwrap().cost, int(0));
        let t3 = ut3();
        assert_eq!(oracle_conformance(&net, &t3, &fit, &universe(&net, &t3), lim).unwrap().cost, int(1));
    }

    #[test]
    fn oracle_cost_recomputes() {
        let net = example_net();
        let t1 = ut1();
        let cf = CostFunctions::standard_fit();
        let r = oracle_conformance(&net, &t1, &cf, &universe(&net, &t1), OracleLimits::default()).unwrap();
        let report = total_cost(&net, &r.alignment, &r.realization, &t1, &cf).unwrap();
        assert_eq!(report.total, Cost::Finite(r.cost.clone()));
        assert!(net.is_process_run(&r.alignment.model_projection()));
    }

    #[test]
    fn aligning_fixed_realizations() {
        let net = example_net();
        let t1 = ut1();
        let u = universe(&net, &t1);
        let (_, c) =
            oracle_align(&net, &t1, &Realization::default(), &CostFunctions::standard_min(), &u, 100_000).unwrap();
        assert_eq!(c, int(5));
        let e = |id: &str, l: &str, v: &str, x: i64| Event {
            id: id.into(),
            label: l.into(),
            assign: Assignment::from([(v.into(), Value::Rat(int(x)))]),
        };
        let t3 = ut3();
        let r = Realization { events: vec![e("e6", "a", "x", 6), e("e7", "b", "y", 1)], timestamps: vec![2, 2] };
        let (g, c) = oracle_align(&net, &t3, &r, &CostFunctions::standard_fit(), &universe(&net, &t3), 100_000).unwrap();
        assert_eq!(c, int(1));
        assert_eq!(g.moves.iter().map(Move::kind).collect::<Vec<_>>(), vec!["sync", "sync", "model"]);
    }

    #[test]
    fn bigger_universe_never_hurts() {
        let net = example_net();
        let t1 = ut1();
        let cf = CostFunctions::standard_fit();
        let small = oracle_conformance(&net, &t1, &cf, &ValueUniverse::for_net(&net, 0), OracleLimits::default()).unwrap();
        let big = oracle_conformance(&net, &t1, &cf, &ValueUniverse::for_net(&net, 2), OracleLimits::default()).unwrap();
        assert!(big.cost <= small.cost);
    }

    #[test]
    fn unsupported_guards_are_refused() {
        let net = DpnBuilder::new()
            .place("p")
            .place("q")
            .transition(
                "t",
                Some("t"),
                Expr::cmp(CmpOp::Eq, Expr::Add(vec![Expr::wvar("x"), Expr::wvar("y")]), Expr::int(5)),
            )
            .arc("p", "t", 1)
            .arc("t", "q", 1)
            .variable("x", VarType::Int, Value::Int(0))
            .variable("y", VarType::Int, Value::Int(0))
            .initial("p", 1)
            .final_marking("q", 1)
            .build()
            .unwrap();
        let err = oracle_conformance(
            &net,
            &UncertainTrace::default(),
            &CostFunctions::standard_fit(),
            &ValueUniverse::for_net(&net, 1),
            OracleLimits::default(),
        );
        assert!(matches!(err, Err(OracleError::Unsupported(_))));
    }
}
