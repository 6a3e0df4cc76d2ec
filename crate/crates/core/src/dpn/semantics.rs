use serde::{Deserialize, Serialize};

use super::value::{Assignment, Value};
use super::{Dpn, GuardError, Marking};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub marking: Marking,
    pub assignment: Assignment,
}

/// A transition together with the values it reads (all of `V`) and writes
/// (exactly the variables written by its guard).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionFiring {
    pub transition: usize,
    pub read: Assignment,
    pub write: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FiringError {
    #[error("transition index {0} does not exist")]
    UnknownTransition(usize),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("transition `{transition}` reads {var} = {given}, but the state holds {actual}")]
    ReadMismatch { transition: String, var: String, given: String, actual: String },
    #[error("transition `{transition}` must write exactly {{{expected}}}, got {{{given}}}")]
    WriteSet { transition: String, expected: String, given: String },
    #[error("transition `{transition}` writes {var} with a value of the wrong type")]
    WriteType { transition: String, var: String },
    #[error("guard of `{0}` is violated")]
    GuardViolated(String),
    #[error("guard of `{transition}` is malformed: {source}")]
    MalformedGuard { transition: String, source: GuardError },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("step {step}: {source}")]
    InvalidFiring { step: usize, source: FiringError },
    #[error("run ends in a non-final marking {0:?}")]
    NotFinal(Marking),
}

impl Dpn {
    /// `M(p) ≥ F(p,t)` for every input place of `t`.
    pub fn is_enabled(&self, marking: &Marking, transition: usize) -> bool {
        self.transitions()[transition].pre.iter().all(|(&p, &w)| marking[p] >= w)
    }

    /// Marking after firing `transition`; assumes it is enabled.
    pub fn next_marking(&self, marking: &Marking, transition: usize) -> Marking {
        let t = &self.transitions()[transition];
        let mut m = marking.clone();
        for (&p, &w) in &t.pre {
            m[p] -= w;
        }
        for (&p, &w) in &t.post {
            m[p] += w;
        }
        m
    }

    /// Checks validity of `firing` in `state` and returns the successor state.
    pub fn fire(&self, state: &State, firing: &TransitionFiring) -> Result<State, FiringError> {
        let t = self
            .transitions()
            .get(firing.transition)
            .ok_or(FiringError::UnknownTransition(firing.transition))?;
        if !self.is_enabled(&state.marking, firing.transition) {
            return Err(FiringError::NotEnabled(t.id.clone()));
        }
        for (var, given) in &firing.read {
            match state.assignment.get(var) {
                Some(actual) if actual.same(given) => {}
                actual => {
                    return Err(FiringError::ReadMismatch {
                        transition: t.id.clone(),
                        var: var.clone(),
                        given: given.to_string(),
                        actual: actual.map_or_else(|| "nothing".to_string(), Value::to_string),
                    })
                }
            }
        }
        if firing.write.keys().ne(t.writes().iter()) {
            return Err(FiringError::WriteSet {
                transition: t.id.clone(),
                expected: t.writes().iter().cloned().collect::<Vec<_>>().join(", "),
                given: firing.write.keys().cloned().collect::<Vec<_>>().join(", "),
            });
        }
        let mut next_assignment = state.assignment.clone();
        for (var, value) in &firing.write {
            let ty = self.variable(var).map(|v| v.ty);
            let coerced = ty
                .and_then(|ty| value.coerce(ty))
                .ok_or_else(|| FiringError::WriteType { transition: t.id.clone(), var: var.clone() })?;
            next_assignment.insert(var.clone(), coerced);
        }
        // the guard sees the current state for reads, whatever subset `read` lists
        let ok = t
            .guard
            .eval(&state.assignment, &firing.write)
            .map_err(|source| FiringError::MalformedGuard { transition: t.id.clone(), source })?;
        if !ok {
            return Err(FiringError::GuardViolated(t.id.clone()));
        }
        Ok(State { marking: self.next_marking(&state.marking, firing.transition), assignment: next_assignment })
    }

    /// Replays `run` from the initial state; returns the final state if the run
    /// is valid and ends in the final marking.
    pub fn check_process_run(&self, run: &[TransitionFiring]) -> Result<State, RunError> {
        let mut state = self.initial_state();
        for (step, f) in run.iter().enumerate() {
            state = self.fire(&state, f).map_err(|source| RunError::InvalidFiring { step, source })?;
        }
        if &state.marking != self.final_marking() {
            return Err(RunError::NotFinal(state.marking));
        }
        Ok(state)
    }

    pub fn is_process_run(&self, run: &[TransitionFiring]) -> bool {
        self.check_process_run(run).is_ok()
    }

    /// Builds the firing of `transition` from `state` writing `write`, with the
    /// full current assignment as its read part.
    pub fn firing_from(&self, state: &State, transition: usize, write: Assignment) -> TransitionFiring {
        TransitionFiring { transition, read: state.assignment.clone(), write }
    }
}

/// Serializable view of a firing: transition id plus read/write maps.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FiringView {
    pub transition: String,
    pub label: Option<String>,
    pub read: serde_json::Map<String, serde_json::Value>,
    pub write: serde_json::Map<String, serde_json::Value>,
}

impl TransitionFiring {
    pub fn view(&self, net: &Dpn) -> FiringView {
        let t = net.transition(self.transition);
        FiringView {
            transition: t.id.clone(),
            label: t.label.clone(),
            read: self.read.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
            write: self.write.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpn::fixtures::example_net;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn rat(n: i64) -> Value {
        Value::Rat(ratio(n, 1))
    }

    fn asg(pairs: &[(&str, i64)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), rat(*v))).collect()
    }

    fn firing(net: &Dpn, t: &str, read: &[(&str, i64)], write: &[(&str, i64)]) -> TransitionFiring {
        TransitionFiring { transition: net.transition_index(t).unwrap(), read: asg(read), write: asg(write) }
    }

    #[test]
    fn enabledness() {
        let net = example_net();
        assert!(net.is_enabled(&vec![1, 0, 0, 0], 0));
        assert!(!net.is_enabled(&vec![1, 0, 0, 0], 2));
        for t in 0..net.transitions().len() {
            assert!(!net.is_enabled(&vec![0; 4], t));
        }
    }

    #[test]
    fn fire_a() {
        let net = example_net();
        let s = net.initial_state();
        let next = net.fire(&s, &firing(&net, "a", &[], &[("x", 2)])).unwrap();
        assert_eq!(next.marking, vec![0, 1, 0, 0]);
        assert_eq!(next.assignment, asg(&[("x", 2), ("y", 0)]));
    }

    #[test]
    fn fire_c_not_enabled() {
        let net = example_net();
        let err = net.fire(&net.initial_state(), &firing(&net, "c", &[], &[])).unwrap_err();
        assert_eq!(err, FiringError::NotEnabled("c".into()));
    }

    #[test]
    fn fire_d() {
        let net = example_net();
        let s = State { marking: vec![0, 0, 1, 0], assignment: asg(&[("x", 1), ("y", 1)]) };
        let next = net.fire(&s, &firing(&net, "d", &[("x", 1), ("y", 1)], &[])).unwrap();
        assert_eq!(next, State { marking: vec![0, 0, 0, 1], assignment: asg(&[("x", 1), ("y", 1)]) });
    }

    #[test]
    fn firing_errors_name_the_failed_precondition() {
        let net = example_net();
        let s = State { marking: vec![0, 0, 1, 0], assignment: asg(&[("x", 1), ("y", 1)]) };
        assert!(matches!(
            net.fire(&s, &firing(&net, "d", &[("x", 2)], &[])),
            Err(FiringError::ReadMismatch { .. })
        ));
        assert_eq!(net.fire(&s, &firing(&net, "c", &[], &[])), Err(FiringError::GuardViolated("c".into())));
        assert!(matches!(net.fire(&s, &firing(&net, "d", &[], &[("x", 1)])), Err(FiringError::WriteSet { .. })));
        let s0 = net.initial_state();
        assert!(matches!(net.fire(&s0, &firing(&net, "a", &[], &[])), Err(FiringError::WriteSet { .. })));
        assert_eq!(net.fire(&s0, &firing(&net, "a", &[], &[("x", -1)])), Err(FiringError::GuardViolated("a".into())));
    }

    #[test]
    fn example_runs() {
        let net = example_net();
        let run1 = vec![
            firing(&net, "a", &[], &[("x", 2)]),
            firing(&net, "b", &[], &[("y", 1)]),
            firing(&net, "c", &[("x", 2), ("y", 1)], &[]),
        ];
        let run2 = vec![
            firing(&net, "a", &[], &[("x", 1)]),
            firing(&net, "b", &[], &[("y", 1)]),
            firing(&net, "d", &[("y", 1), ("x", 1)], &[]),
        ];
        assert!(net.is_process_run(&run1));
        assert!(net.is_process_run(&run2));
        assert!(!net.is_process_run(&run1[..1]));
        assert!(matches!(net.check_process_run(&run1[..1]), Err(RunError::NotFinal(_))));
        assert!(!net.is_process_run(&run2[..1]));
    }

    #[test]
    fn empty_run_when_initial_is_final() {
        let net = crate::dpn::DpnBuilder::new()
            .place("p")
            .transition("t", Some("t"), Expr::truth())
            .initial("p", 1)
            .final_marking("p", 1)
            .build()
            .unwrap();
        assert!(net.is_process_run(&[]));
    }

    #[test]
    fn final_loop_preserves_runs() {
        let net = example_net();
        let aug = net.augment_final_loop();
        let mut run = vec![
            firing(&net, "a", &[], &[("x", 2)]),
            firing(&net, "b", &[], &[("y", 1)]),
            firing(&net, "c", &[("x", 2), ("y", 1)], &[]),
        ];
        assert!(aug.is_process_run(&run));
        assert!(!aug.is_process_run(&run[..2]));
        run.push(TransitionFiring { transition: 5, read: asg(&[("x", 2), ("y", 1)]), write: asg(&[]) });
        assert!(aug.is_process_run(&run));
    }

    use crate::dpn::Expr;

    proptest! {
        /// Token conservation and the frame rule, checked on random walks.
        #[test]
        fn firing_conserves_tokens_and_frames(choices in proptest::collection::vec((0usize..5, -2i64..4), 0..12)) {
            let net = example_net();
            let mut state = net.initial_state();
            for (t, v) in choices {
                if !net.is_enabled(&state.marking, t) {
                    continue;
                }
                let tr = net.transition(t);
                let mut write = Assignment::new();
                for w in tr.writes() {
                    let value = if t == 4 {
                        Value::Rat(state.assignment[w].as_rational().unwrap() + ratio(1, 1))
                    } else {
                        rat(v)
                    };
                    write.insert(w.clone(), value);
                }
                let f = net.firing_from(&state, t, write);
                if let Ok(next) = net.fire(&state, &f) {
                    let before: i64 = state.marking.iter().map(|&k| k as i64).sum();
                    let after: i64 = next.marking.iter().map(|&k| k as i64).sum();
                    let delta: i64 = tr.post.values().map(|&k| k as i64).sum::<i64>() - tr.pre.values().map(|&k| k as i64).sum::<i64>();
                    prop_assert_eq!(after - before, delta);
                    for (var, val) in &state.assignment {
                        if !tr.writes().contains(var) {
                            prop_assert_eq!(&next.assignment[var], val);
                        }
                    }
                    state = next;
                }
            }
        }
    }
}
