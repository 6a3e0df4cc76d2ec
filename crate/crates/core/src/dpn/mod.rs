//! Data Petri nets: structure, guard language, firing semantics and the
//! net-level quantities the encoder needs (silent-chain length, a cheap run).

mod analysis;
pub mod guard;
pub mod io;
mod semantics;
pub mod value;

use std::collections::{BTreeMap, BTreeSet};

pub(crate) use analysis::candidate_firings;
pub use analysis::{cheapest_run_cost_ub, silent_chain_bound, RunSearchError, WitnessRun};
pub use guard::{Annot, CmpOp, Expr, GuardError};
pub use semantics::{FiringError, RunError, State, TransitionFiring};
pub use value::{Assignment, Value, VarType};

/// Token counts indexed by place position.
pub type Marking = Vec<u64>;

pub const FINAL_LOOP_ID: &str = "__final_loop";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    /// `None` marks a silent (τ) transition.
    pub label: Option<String>,
    pub guard: Expr,
    /// Input arcs: place index → multiplicity.
    pub pre: BTreeMap<usize, u64>,
    /// Output arcs: place index → multiplicity.
    pub post: BTreeMap<usize, u64>,
    /// Set only for the final-marking loop added by [`Dpn::augment_final_loop`].
    pub synthetic: bool,
    writes: BTreeSet<String>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }

    /// Variables written by the guard (those occurring as `v^w`).
    pub fn writes(&self) -> &BTreeSet<String> {
        &self.writes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub ty: VarType,
    pub init: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("the net has no places")]
    NoPlaces,
    #[error("the net has no transitions")]
    NoTransitions,
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("arc {0} -> {1} must connect a place and a transition")]
    BadArc(String, String),
    #[error("arc {0} -> {1} has weight 0")]
    ZeroWeight(String, String),
    #[error("guard of transition `{transition}`: {source}")]
    Guard { transition: String, source: GuardError },
    #[error("silent transition `{0}` writes variables")]
    SilentWrites(String),
    #[error("initial value of `{0}` does not match its type {1}")]
    InitType(String, VarType),
    #[error("{0}")]
    Format(String),
}

/// An immutable, validated Data Petri net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dpn {
    places: Vec<String>,
    transitions: Vec<Transition>,
    variables: Vec<Variable>,
    initial: Marking,
    final_marking: Marking,
}

/// Unvalidated description of a net; [`DpnBuilder::build`] checks every invariant.
#[derive(Debug, Clone, Default)]
pub struct DpnBuilder {
    pub places: Vec<String>,
    pub transitions: Vec<(String, Option<String>, Expr)>,
    pub arcs: Vec<(String, String, u64)>,
    pub variables: Vec<(String, VarType, Value)>,
    pub initial: Vec<(String, u64)>,
    pub final_marking: Vec<(String, u64)>,
}

impl DpnBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, id: &str) -> Self {
        self.places.push(id.to_string());
        self
    }

    pub fn transition(mut self, id: &str, label: Option<&str>, guard: Expr) -> Self {
        self.transitions.push((id.to_string(), label.map(str::to_string), guard));
        self
    }

    pub fn arc(mut self, from: &str, to: &str, weight: u64) -> Self {
        self.arcs.push((from.to_string(), to.to_string(), weight));
        self
    }

    pub fn variable(mut self, name: &str, ty: VarType, init: Value) -> Self {
        self.variables.push((name.to_string(), ty, init));
        self
    }

    pub fn initial(mut self, place: &str, tokens: u64) -> Self {
        self.initial.push((place.to_string(), tokens));
        self
    }

    pub fn final_marking(mut self, place: &str, tokens: u64) -> Self {
        self.final_marking.push((place.to_string(), tokens));
        self
    }

    pub fn build(self) -> Result<Dpn, ModelError> {
        if self.places.is_empty() {
            return Err(ModelError::NoPlaces);
        }
        if self.transitions.is_empty() {
            return Err(ModelError::NoTransitions);
        }
        let mut seen = BTreeSet::new();
        for id in self.places.iter().chain(self.transitions.iter().map(|t| &t.0)) {
            if !seen.insert(id.clone()) {
                return Err(ModelError::DuplicateId(id.clone()));
            }
        }
        let place_index: BTreeMap<String, usize> =
            self.places.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let trans_index: BTreeMap<String, usize> =
            self.transitions.iter().enumerate().map(|(i, t)| (t.0.clone(), i)).collect();

        let mut variables: Vec<Variable> = Vec::new();
        for (name, ty, init) in self.variables {
            if variables.iter().any(|v| v.name == name) {
                return Err(ModelError::DuplicateId(name));
            }
            let init = init.coerce(ty).ok_or_else(|| ModelError::InitType(name.clone(), ty))?;
            variables.push(Variable { name, ty, init });
        }
        variables.sort_by(|a, b| a.name.cmp(&b.name));
        let types: BTreeMap<String, VarType> = variables.iter().map(|v| (v.name.clone(), v.ty)).collect();

        let mut transitions = Vec::with_capacity(self.transitions.len());
        for (id, label, guard) in self.transitions {
            let guard = guard
                .resolve(&types)
                .map_err(|source| ModelError::Guard { transition: id.clone(), source })?;
            let writes = guard.written_vars();
            if label.is_none() && !writes.is_empty() {
                return Err(ModelError::SilentWrites(id));
            }
            transitions.push(Transition {
                id,
                label,
                guard,
                pre: BTreeMap::new(),
                post: BTreeMap::new(),
                synthetic: false,
                writes,
            });
        }
        for (from, to, weight) in self.arcs {
            if weight == 0 {
                return Err(ModelError::ZeroWeight(from, to));
            }
            match (
                place_index.get(from.as_str()),
                trans_index.get(from.as_str()),
                place_index.get(to.as_str()),
                trans_index.get(to.as_str()),
            ) {
                (Some(&p), None, None, Some(&t)) => *transitions[t].pre.entry(p).or_default() += weight,
                (None, Some(&t), Some(&p), None) => *transitions[t].post.entry(p).or_default() += weight,
                (None, None, _, _) => return Err(ModelError::UnknownNode(from)),
                (_, _, None, None) => return Err(ModelError::UnknownNode(to)),
                _ => return Err(ModelError::BadArc(from, to)),
            }
        }
        let n_places = self.places.len();
        let marking = |entries: Vec<(String, u64)>| -> Result<Marking, ModelError> {
            let mut m = vec![0; n_places];
            for (p, k) in entries {
                let idx = *place_index.get(p.as_str()).ok_or_else(|| ModelError::UnknownPlace(p.clone()))?;
                m[idx] += k;
            }
            Ok(m)
        };
        let initial = marking(self.initial)?;
        let final_marking = marking(self.final_marking)?;
        Ok(Dpn { places: self.places, transitions, variables, initial, final_marking })
    }
}

impl Dpn {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, idx: usize) -> &Transition {
        &self.transitions[idx]
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    /// Variables sorted by name.
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn var_types(&self) -> BTreeMap<String, VarType> {
        self.variables.iter().map(|v| (v.name.clone(), v.ty)).collect()
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn initial_assignment(&self) -> Assignment {
        self.variables.iter().map(|v| (v.name.clone(), v.init.clone())).collect()
    }

    pub fn initial_state(&self) -> State {
        State { marking: self.initial.clone(), assignment: self.initial_assignment() }
    }

    /// Activity labels of visible transitions.
    pub fn labels(&self) -> BTreeSet<&str> {
        self.transitions.iter().filter_map(|t| t.label.as_deref()).collect()
    }

    pub fn has_final_loop(&self) -> bool {
        self.transitions.iter().any(|t| t.synthetic)
    }

    /// Adds one silent transition consuming and producing exactly the final
    /// marking, so that any run can be padded to a fixed length. Idempotent.
    pub fn augment_final_loop(&self) -> Dpn {
        if self.has_final_loop() {
            return self.clone();
        }
        let arcs: BTreeMap<usize, u64> =
            self.final_marking.iter().enumerate().filter(|(_, &k)| k > 0).map(|(p, &k)| (p, k)).collect();
        let mut id = FINAL_LOOP_ID.to_string();
        while self.places.contains(&id) || self.transition_index(&id).is_some() {
            id.push('_');
        }
        let mut net = self.clone();
        net.transitions.push(Transition {
            id,
            label: None,
            guard: Expr::truth(),
            pre: arcs.clone(),
            post: arcs,
            synthetic: true,
            writes: BTreeSet::new(),
        });
        net
    }

    /// The net without its synthetic final loop (identity if there is none).
    pub fn without_final_loop(&self) -> Dpn {
        let mut net = self.clone();
        net.transitions.retain(|t| !t.synthetic);
        net
    }

    /// All constants in guards and initial values, grouped by the type of the
    /// variables they relate to (literal types after resolution).
    pub fn constants(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.variables.iter().map(|v| v.init.clone()).collect();
        for t in &self.transitions {
            out.extend(t.guard.constants());
        }
        out
    }

    /// String literals occurring in guards and initial values.
    pub fn string_literals(&self) -> BTreeSet<String> {
        self.constants()
            .into_iter()
            .filter_map(|v| match v {
                Value::Str(s) => Some(s),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub use crate::examples::example_net;
}

#[cfg(test)]
mod tests {
    use super::fixtures::example_net;
    use super::*;

    #[test]
    fn builds_example() {
        let net = example_net();
        assert_eq!(net.places().len(), 4);
        assert_eq!(net.transitions().len(), 5);
        assert_eq!(net.transition(0).writes().iter().collect::<Vec<_>>(), vec!["x"]);
        assert!(net.transition(2).writes().is_empty());
        assert_eq!(net.initial_marking(), &vec![1, 0, 0, 0]);
    }

    #[test]
    fn augment_is_idempotent() {
        let net = example_net().augment_final_loop();
        assert_eq!(net.transitions().len(), 6);
        let t = net.transitions().last().unwrap();
        assert!(t.synthetic && t.is_silent());
        assert_eq!(t.pre, BTreeMap::from([(3, 1)]));
        assert_eq!(t.post, t.pre);
        assert_eq!(net.augment_final_loop().transitions().len(), 6);
        assert_eq!(net.without_final_loop(), example_net());
    }

    #[test]
    fn rejects_silent_writes() {
        let err = DpnBuilder::new()
            .place("p")
            .transition("t", None, Expr::cmp(CmpOp::Ge, Expr::wvar("x"), Expr::int(0)))
            .variable("x", VarType::Int, Value::Int(0))
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::SilentWrites("t".into()));
    }

    #[test]
    fn rejects_bad_structure() {
        let base = || DpnBuilder::new().place("p").transition("t", Some("t"), Expr::truth());
        assert!(matches!(base().arc("p", "p", 1).build(), Err(ModelError::BadArc(..))));
        assert!(matches!(base().arc("p", "q", 1).build(), Err(ModelError::UnknownNode(_))));
        assert!(matches!(base().arc("p", "t", 0).build(), Err(ModelError::ZeroWeight(..))));
        assert!(matches!(base().initial("q", 1).build(), Err(ModelError::UnknownPlace(_))));
        assert!(matches!(base().place("t").build(), Err(ModelError::DuplicateId(_))));
        assert!(matches!(
            base().variable("x", VarType::Int, Value::Str("a".into())).build(),
            Err(ModelError::InitType(..))
        ));
        assert_eq!(DpnBuilder::new().place("p").build().unwrap_err(), ModelError::NoTransitions);
    }
}
