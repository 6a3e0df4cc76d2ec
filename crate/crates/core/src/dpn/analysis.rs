use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use num_traits::Zero;

use super::semantics::{State, TransitionFiring};
use super::{Dpn, Transition};
use crate::oracle::ValueUniverse;
use crate::rational::Rational;

/// Length (in transitions) of the longest simple path through silent
/// transitions, where `t → t'` iff some output place of `t` is an input place
/// of `t'`. Synthetic transitions are ignored.
pub fn silent_chain_bound(net: &Dpn) -> usize {
    let silent: Vec<usize> = (0..net.transitions().len())
        .filter(|&i| net.transition(i).is_silent() && !net.transition(i).synthetic)
        .collect();
    let succ: Vec<Vec<usize>> = silent
        .iter()
        .map(|&i| {
            let t = net.transition(i);
            (0..silent.len())
                .filter(|&k| net.transition(silent[k]).pre.keys().any(|p| t.post.contains_key(p)))
                .collect()
        })
        .collect();

    fn longest(node: usize, succ: &[Vec<usize>], on_path: &mut [bool]) -> usize {
        on_path[node] = true;
        let mut best = 0;
        for &next in &succ[node] {
            if !on_path[next] {
                best = best.max(longest(next, succ, on_path));
            }
        }
        on_path[node] = false;
        best + 1
    }

    let mut on_path = vec![false; silent.len()];
    (0..silent.len()).map(|s| longest(s, &succ, &mut on_path)).max().unwrap_or(0)
}

/// A process run found by search, with its model-move cost.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessRun {
    pub cost: Rational,
    pub run: Vec<TransitionFiring>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunSearchError {
    #[error("no process run found within {0} steps")]
    NoRunFound(usize),
    #[error("state space exceeded {0} states")]
    StateCap(usize),
}

/// All write assignments for `t` drawn from the universe that satisfy its guard in `state`.
pub(crate) fn candidate_firings(
    net: &Dpn,
    state: &State,
    t_idx: usize,
    universe: &ValueUniverse,
) -> Vec<TransitionFiring> {
    let t: &Transition = net.transition(t_idx);
    let writes: Vec<&String> = t.writes().iter().collect();
    let domains: Vec<&[super::Value]> = writes.iter().map(|w| universe.values(w)).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; writes.len()];
    if domains.iter().any(|d| d.is_empty()) {
        return out;
    }
    loop {
        let write: BTreeMap<String, super::Value> =
            writes.iter().zip(&domains).zip(&idx).map(|((w, d), &i)| ((*w).clone(), d[i].clone())).collect();
        if t.guard.eval(&state.assignment, &write).unwrap_or(false) {
            out.push(net.firing_from(state, t_idx, write));
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Uniform-cost search for a cheap process run over states whose written values
/// are drawn from `universe`. Any run's cost is a valid `c` for the run-length
/// bound; this returns the cheapest one within `depth_limit` steps.
pub fn cheapest_run_cost_ub(
    net: &Dpn,
    model_cost: impl Fn(&Transition) -> Rational,
    depth_limit: usize,
    universe: &ValueUniverse,
    state_cap: usize,
) -> Result<WitnessRun, RunSearchError> {
    struct Node {
        state: State,
        depth: usize,
        parent: Option<(usize, TransitionFiring)>,
    }
    let mut nodes: Vec<Node> = vec![Node { state: net.initial_state(), depth: 0, parent: None }];
    let mut best: HashMap<State, Rational> = HashMap::new();
    best.insert(net.initial_state(), Rational::zero());
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Rational::zero(), 0usize)));
    while let Some(Reverse((cost, id))) = heap.pop() {
        if best.get(&nodes[id].state).is_some_and(|b| *b < cost) {
            continue;
        }
        if &nodes[id].state.marking == net.final_marking() {
            let mut run = Vec::new();
            let mut cur = id;
            while let Some((parent, f)) = &nodes[cur].parent {
                run.push(f.clone());
                cur = *parent;
            }
            run.reverse();
            return Ok(WitnessRun { cost, run });
        }
        if nodes[id].depth >= depth_limit {
            continue;
        }
        for t in 0..net.transitions().len() {
            if net.transition(t).synthetic || !net.is_enabled(&nodes[id].state.marking, t) {
                continue;
            }
            let step = model_cost(net.transition(t));
            for f in candidate_firings(net, &nodes[id].state, t, universe) {
                let Ok(next) = net.fire(&nodes[id].state, &f) else { continue };
                let next_cost = &cost + &step;
                if best.get(&next).is_some_and(|b| *b <= next_cost) {
                    continue;
                }
                if nodes.len() >= state_cap {
                    return Err(RunSearchError::StateCap(state_cap));
                }
                best.insert(next.clone(), next_cost.clone());
                let depth = nodes[id].depth + 1;
                nodes.push(Node { state: next, depth, parent: Some((id, f)) });
                heap.push(Reverse((next_cost, nodes.len() - 1)));
            }
        }
    }
    Err(RunSearchError::NoRunFound(depth_limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostFunctions;
    use crate::dpn::fixtures::example_net;
    use crate::dpn::{DpnBuilder, Expr};
    use crate::rational::int;

    fn silent_chain(len: usize) -> Dpn {
        let mut b = DpnBuilder::new();
        for i in 0..=len {
            b = b.place(&format!("p{i}"));
        }
        for i in 0..len {
            b = b
                .transition(&format!("t{i}"), None, Expr::truth())
                .arc(&format!("p{i}"), &format!("t{i}"), 1)
                .arc(&format!("t{i}"), &format!("p{}", i + 1), 1);
        }
        b.initial("p0", 1).final_marking(&format!("p{len}"), 1).build().unwrap()
    }

    /// Brute force: every sequence of distinct silent transitions that forms a chain.
    fn brute_force_chain(net: &Dpn) -> usize {
        let silent: Vec<usize> = (0..net.transitions().len()).filter(|&i| net.transition(i).is_silent()).collect();
        let mut best = 0;
        let mut stack: Vec<Vec<usize>> = silent.iter().map(|&s| vec![s]).collect();
        while let Some(path) = stack.pop() {
            best = best.max(path.len());
            let last = net.transition(*path.last().unwrap());
            for &s in &silent {
                if !path.contains(&s) && net.transition(s).pre.keys().any(|p| last.post.contains_key(p)) {
                    let mut p = path.clone();
                    p.push(s);
                    stack.push(p);
                }
            }
        }
        best
    }

    #[test]
    fn chain_bounds() {
        assert_eq!(silent_chain_bound(&example_net()), 0);
        assert_eq!(silent_chain_bound(&silent_chain(1)), 1);
        let three = silent_chain(3);
        assert_eq!(brute_force_chain(&three), 3);
        assert_eq!(silent_chain_bound(&three), 3);
        // the synthetic loop does not count
        assert_eq!(silent_chain_bound(&example_net().augment_final_loop()), 0);
    }

    #[test]
    fn silent_cycle_is_bounded_by_transition_count() {
        let net = DpnBuilder::new()
            .place("p")
            .place("q")
            .transition("u", None, Expr::truth())
            .transition("v", None, Expr::truth())
            .arc("p", "u", 1)
            .arc("u", "q", 1)
            .arc("q", "v", 1)
            .arc("v", "p", 1)
            .initial("p", 1)
            .final_marking("q", 1)
            .build()
            .unwrap();
        assert_eq!(silent_chain_bound(&net), 2);
    }

    #[test]
    fn cheapest_run_on_example() {
        let cf = CostFunctions::standard_fit();
        let net = example_net();
        let universe = ValueUniverse::for_net(&net, 1);
        let w = cheapest_run_cost_ub(&net, |t| cf.model_penalty(t), 6, &universe, 100_000).unwrap();
        assert_eq!(w.cost, int(5));
        assert!(net.is_process_run(&w.run));
        let aug = net.augment_final_loop();
        let w2 = cheapest_run_cost_ub(&aug, |t| cf.model_penalty(t), 6, &universe, 100_000).unwrap();
        assert_eq!(w2.cost, int(5));
    }

    #[test]
    fn silent_only_run_costs_nothing() {
        let cf = CostFunctions::standard_fit();
        let net = silent_chain(1);
        let w = cheapest_run_cost_ub(&net, |t| cf.model_penalty(t), 3, &ValueUniverse::for_net(&net, 1), 1000).unwrap();
        assert_eq!(w.cost, int(0));
        assert_eq!(w.run.len(), 1);
    }

    #[test]
    fn depth_limit_is_respected() {
        let cf = CostFunctions::standard_fit();
        let net = example_net();
        let err = cheapest_run_cost_ub(&net, |t| cf.model_penalty(t), 2, &ValueUniverse::for_net(&net, 1), 1000);
        assert_eq!(err.unwrap_err(), RunSearchError::NoRunFound(2));
    }
}
