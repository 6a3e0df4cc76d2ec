//! Event logs with uncertainty: uncertain events and traces, certain events,
//! realizations, and the finite-case enumerator.

pub mod json;
pub mod xes;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_traits::{One, Zero};

use crate::dpn::{Assignment, Dpn, Value, VarType};
use crate::rational::{format_exact, Rational};

/// Admissible timestamps of an event: a finite set or a closed interval of naturals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeSpec {
    Set(BTreeSet<u64>),
    Interval(u64, u64),
}

impl TimeSpec {
    pub fn contains(&self, t: u64) -> bool {
        match self {
            TimeSpec::Set(s) => s.contains(&t),
            TimeSpec::Interval(lo, hi) => *lo <= t && t <= *hi,
        }
    }

    pub fn min(&self) -> u64 {
        match self {
            TimeSpec::Set(s) => *s.iter().next().expect("non-empty"),
            TimeSpec::Interval(lo, _) => *lo,
        }
    }

    pub fn max(&self) -> u64 {
        match self {
            TimeSpec::Set(s) => *s.iter().next_back().expect("non-empty"),
            TimeSpec::Interval(_, hi) => *hi,
        }
    }

    /// Smallest admissible timestamp `≥ t`.
    pub fn first_at_or_after(&self, t: u64) -> Option<u64> {
        match self {
            TimeSpec::Set(s) => s.range(t..).next().copied(),
            TimeSpec::Interval(lo, hi) => {
                let c = t.max(*lo);
                (c <= *hi).then_some(c)
            }
        }
    }

    pub fn singleton(&self) -> Option<u64> {
        match self {
            TimeSpec::Set(s) if s.len() == 1 => s.iter().next().copied(),
            TimeSpec::Interval(lo, hi) if lo == hi => Some(*lo),
            _ => None,
        }
    }
}

/// Admissible values of one variable: a finite set, or a closed interval for numeric variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueSpec {
    Set(Vec<Value>),
    Interval(Rational, Rational),
}

impl ValueSpec {
    pub fn contains(&self, v: &Value) -> bool {
        match self {
            ValueSpec::Set(s) => s.iter().any(|c| c.same(v)),
            ValueSpec::Interval(lo, hi) => v.as_rational().is_some_and(|q| *lo <= q && q <= *hi),
        }
    }

    /// Values the spec mentions explicitly (set members or interval endpoints).
    pub fn mentioned(&self) -> Vec<Value> {
        match self {
            ValueSpec::Set(s) => s.clone(),
            ValueSpec::Interval(lo, hi) => vec![Value::Rat(lo.clone()), Value::Rat(hi.clone())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UncertainEvent {
    pub id: String,
    /// Confidence that the event happened, in (0, 1].
    pub conf: Rational,
    /// Candidate activities with their confidences, summing to 1.
    pub labels: BTreeMap<String, Rational>,
    pub ts: TimeSpec,
    /// Partial: variables absent here are unconstrained.
    pub data: BTreeMap<String, ValueSpec>,
}

impl UncertainEvent {
    /// A certain event: conf 1, one label, one timestamp, singleton values.
    pub fn certain(id: &str, label: &str, ts: u64, data: impl IntoIterator<Item = (String, Value)>) -> Self {
        UncertainEvent {
            id: id.to_string(),
            conf: Rational::one(),
            labels: BTreeMap::from([(label.to_string(), Rational::one())]),
            ts: TimeSpec::Set(BTreeSet::from([ts])),
            data: data.into_iter().map(|(k, v)| (k, ValueSpec::Set(vec![v]))).collect(),
        }
    }

    pub fn is_certain(&self) -> bool {
        self.conf.is_one()
    }

    /// Confidence of `label`, if admissible.
    pub fn label_conf(&self, label: &str) -> Option<&Rational> {
        self.labels.get(label)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.conf <= Rational::zero() || self.conf > Rational::one() {
            return Err(format!("confidence {} is outside (0, 1]", format_exact(&self.conf)));
        }
        if self.labels.is_empty() {
            return Err("no activity labels".into());
        }
        for (l, p) in &self.labels {
            if *p <= Rational::zero() || *p > Rational::one() {
                return Err(format!("label `{l}` has confidence {} outside (0, 1]", format_exact(p)));
            }
        }
        let total: Rational = self.labels.values().sum();
        if !total.is_one() {
            return Err(format!("label confidences sum to {}, not 1", format_exact(&total)));
        }
        match &self.ts {
            TimeSpec::Set(s) if s.is_empty() => return Err("empty timestamp set".into()),
            TimeSpec::Interval(lo, hi) if lo > hi => return Err(format!("empty timestamp interval [{lo}, {hi}]")),
            _ => {}
        }
        for (var, spec) in &self.data {
            match spec {
                ValueSpec::Set(s) if s.is_empty() => return Err(format!("empty value set for `{var}`")),
                ValueSpec::Interval(lo, hi) if lo > hi => return Err(format!("empty interval for `{var}`")),
                ValueSpec::Set(s) => {
                    let ty = s[0].var_type();
                    let numeric = ty.is_numeric();
                    if !s.iter().all(|v| v.var_type() == ty || (numeric && v.var_type().is_numeric())) {
                        return Err(format!("mixed value types for `{var}`"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogError {
    #[error("{0}")]
    Io(String),
    #[error("malformed input at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("trace {trace}{}: {msg}", event.as_ref().map(|e| format!(", event `{e}`")).unwrap_or_default())]
    Schema { trace: usize, event: Option<String>, msg: String },
    #[error("variable `{var}` of event `{event}` has a dense interval; realizations are not enumerable")]
    DenseInterval { event: String, var: String },
    #[error("more than {0} realizations")]
    TooManyRealizations(usize),
}

/// A finite set of uncertain events (stored in input order).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UncertainTrace {
    pub name: Option<String>,
    events: Vec<UncertainEvent>,
}

impl UncertainTrace {
    pub fn new(events: Vec<UncertainEvent>) -> Result<Self, LogError> {
        let mut ids = BTreeSet::new();
        for e in &events {
            e.check().map_err(|msg| LogError::Schema { trace: 0, event: Some(e.id.clone()), msg })?;
            if !ids.insert(e.id.as_str()) {
                return Err(LogError::Schema { trace: 0, event: Some(e.id.clone()), msg: "duplicate event id".into() });
            }
        }
        Ok(UncertainTrace { name: None, events })
    }

    pub fn events(&self) -> &[UncertainEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event(&self, id: &str) -> Option<&UncertainEvent> {
        self.events.iter().find(|e| e.id == id)
    }

    /// Number of certain events (conf = 1).
    pub fn m1(&self) -> usize {
        self.events.iter().filter(|e| e.is_certain()).count()
    }

    /// Number of uncertain events (conf < 1).
    pub fn m2(&self) -> usize {
        self.len() - self.m1()
    }

    /// Every event has a single timestamp and no two share one.
    pub fn is_sequential(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.events.iter().all(|e| e.ts.singleton().is_some_and(|t| seen.insert(t)))
    }

    /// Events sorted by their single timestamp; meaningful for sequential traces.
    pub fn time_ordered(&self) -> Vec<&UncertainEvent> {
        let mut v: Vec<&UncertainEvent> = self.events.iter().collect();
        v.sort_by_key(|e| e.ts.min());
        v
    }

    /// Converts data values to the declared types of `net`'s variables, and
    /// rejects variables the net does not declare.
    pub fn coerce_to(&self, net: &Dpn) -> Result<UncertainTrace, LogError> {
        let types = net.var_types();
        let mut out = self.clone();
        for e in &mut out.events {
            for (var, spec) in e.data.iter_mut() {
                let schema = |msg: String| LogError::Schema { trace: 0, event: Some(e.id.clone()), msg };
                let ty = *types.get(var).ok_or_else(|| schema(format!("variable `{var}` is not declared by the net")))?;
                match spec {
                    ValueSpec::Set(values) => {
                        for v in values.iter_mut() {
                            *v = coerce_value(v, ty)
                                .ok_or_else(|| schema(format!("value {v} does not fit variable `{var}` of type {ty}")))?;
                        }
                        let mut dedup: Vec<Value> = Vec::new();
                        for v in values.drain(..) {
                            if !dedup.contains(&v) {
                                dedup.push(v);
                            }
                        }
                        *values = dedup;
                    }
                    ValueSpec::Interval(..) if !ty.is_numeric() => {
                        return Err(schema(format!("interval given for non-numeric variable `{var}`")));
                    }
                    ValueSpec::Interval(lo, hi) if ty == VarType::Int => {
                        let lo = lo.ceil();
                        let hi = hi.floor();
                        if lo > hi {
                            return Err(schema(format!("interval for `{var}` contains no integer")));
                        }
                        *spec = ValueSpec::Interval(lo, hi);
                    }
                    ValueSpec::Interval(..) => {}
                }
            }
        }
        Ok(out)
    }
}

fn coerce_value(v: &Value, ty: VarType) -> Option<Value> {
    match (v, ty) {
        (Value::Str(s), t) if t.is_numeric() => Value::Rat(crate::rational::parse_rational(s).ok()?).coerce(t),
        (Value::Rat(q), VarType::Str) if q.is_integer() => Some(Value::Str(q.numer().to_string())),
        _ => v.coerce(ty),
    }
}

/// An event without uncertainty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub id: String,
    pub label: String,
    /// Chosen values; must cover every variable constrained by the source event.
    pub assign: Assignment,
}

/// An ordered sequence of certain events with the timestamps witnessing its order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Realization {
    pub events: Vec<Event>,
    pub timestamps: Vec<u64>,
}

impl Realization {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Ids of events of `trace` that are not in this realization.
    pub fn dropped<'a>(&self, trace: &'a UncertainTrace) -> Vec<&'a UncertainEvent> {
        trace.events().iter().filter(|ue| !self.events.iter().any(|e| e.id == ue.id)).collect()
    }
}

pub fn is_admissible_label(ue: &UncertainEvent, label: &str) -> bool {
    ue.labels.contains_key(label)
}

/// Checks that `r` is a realization of `trace`; the error names the first violation.
pub fn validate_realization(r: &Realization, trace: &UncertainTrace) -> Result<(), String> {
    if r.timestamps.len() != r.events.len() {
        return Err(format!("{} events but {} timestamps", r.events.len(), r.timestamps.len()));
    }
    let mut seen = BTreeSet::new();
    for (i, (e, &t)) in r.events.iter().zip(&r.timestamps).enumerate() {
        let ue = trace.event(&e.id).ok_or_else(|| format!("position {}: unknown event `{}`", i + 1, e.id))?;
        if !seen.insert(e.id.as_str()) {
            return Err(format!("event `{}` occurs twice", e.id));
        }
        if i > 0 && r.timestamps[i - 1] > t {
            return Err(format!("timestamps decrease at position {}", i + 1));
        }
        if !ue.ts.contains(t) {
            return Err(format!("timestamp {t} is not admissible for `{}`", e.id));
        }
        if !is_admissible_label(ue, &e.label) {
            return Err(format!("label `{}` is not admissible for `{}`", e.label, e.id));
        }
        for (var, spec) in &ue.data {
            match e.assign.get(var) {
                Some(v) if spec.contains(v) => {}
                Some(v) => return Err(format!("value {v} of `{var}` is not admissible for `{}`", e.id)),
                None => return Err(format!("`{}` assigns no value to `{var}`", e.id)),
            }
        }
    }
    if let Some(ue) = trace.events().iter().find(|ue| ue.is_certain() && !seen.contains(ue.id.as_str())) {
        return Err(format!("certain event `{}` is discarded", ue.id));
    }
    Ok(())
}

pub fn is_realization(r: &Realization, trace: &UncertainTrace) -> bool {
    validate_realization(r, trace).is_ok()
}

/// Earliest witnessing timestamps for visiting `order` in sequence, if any.
pub fn witness_timestamps(order: &[&UncertainEvent]) -> Option<Vec<u64>> {
    let mut out = Vec::with_capacity(order.len());
    let mut t = 0;
    for ue in order {
        t = ue.ts.first_at_or_after(t)?;
        out.push(t);
    }
    Some(out)
}

/// All realizations of `trace`. Variables the events leave unconstrained are
/// not enumerated (they stay out of `assign`). Integer intervals are expanded;
/// other intervals with more than one point are rejected.
pub fn enumerate_realizations(
    trace: &UncertainTrace,
    types: &BTreeMap<String, VarType>,
    cap: usize,
) -> Result<Vec<Realization>, LogError> {
    // per event: every (label, assignment) choice
    let mut choices: Vec<Vec<(String, Assignment)>> = Vec::new();
    for ue in trace.events() {
        let mut partial: Vec<Assignment> = vec![Assignment::new()];
        for (var, spec) in &ue.data {
            let values = spec_values(ue, var, spec, types, cap)?;
            let mut next = Vec::with_capacity(partial.len() * values.len());
            for a in &partial {
                for v in &values {
                    let mut a = a.clone();
                    a.insert(var.clone(), v.clone());
                    next.push(a);
                }
            }
            if next.len() > cap {
                return Err(LogError::TooManyRealizations(cap));
            }
            partial = next;
        }
        choices.push(
            ue.labels.keys().flat_map(|l| partial.iter().map(move |a| (l.clone(), a.clone()))).collect(),
        );
    }

    let mut out = Vec::new();
    let m = trace.len();
    for mask in 0u64..(1u64 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if trace.events().iter().enumerate().any(|(i, ue)| ue.is_certain() && mask & (1 << i) == 0) {
            continue;
        }
        for order in permutations(&subset) {
            let ues: Vec<&UncertainEvent> = order.iter().map(|&i| &trace.events()[i]).collect();
            let Some(timestamps) = witness_timestamps(&ues) else { continue };
            let mut seqs: Vec<Vec<Event>> = vec![Vec::new()];
            for &i in &order {
                let mut next = Vec::new();
                for s in &seqs {
                    for (label, assign) in &choices[i] {
                        let mut s = s.clone();
                        s.push(Event { id: trace.events()[i].id.clone(), label: label.clone(), assign: assign.clone() });
                        next.push(s);
                    }
                }
                seqs = next;
                if out.len() + seqs.len() > cap {
                    return Err(LogError::TooManyRealizations(cap));
                }
            }
            out.extend(seqs.into_iter().map(|events| Realization { events, timestamps: timestamps.clone() }));
        }
    }
    Ok(out)
}

fn spec_values(
    ue: &UncertainEvent,
    var: &str,
    spec: &ValueSpec,
    types: &BTreeMap<String, VarType>,
    cap: usize,
) -> Result<Vec<Value>, LogError> {
    match spec {
        ValueSpec::Set(s) => Ok(s.clone()),
        ValueSpec::Interval(lo, hi) if lo == hi => Ok(vec![Value::Rat(lo.clone())]),
        ValueSpec::Interval(lo, hi) if types.get(var) == Some(&VarType::Int) => {
            let (lo, hi) = (lo.ceil(), hi.floor());
            let mut out = Vec::new();
            let mut v = lo;
            while v <= hi {
                if out.len() >= cap {
                    return Err(LogError::TooManyRealizations(cap));
                }
                out.push(Value::Rat(v.clone()).coerce(VarType::Int).unwrap_or(Value::Rat(v.clone())));
                v += Rational::one();
            }
            Ok(out)
        }
        ValueSpec::Interval(..) => Err(LogError::DenseInterval { event: ue.id.clone(), var: var.to_string() }),
    }
}

/// All orderings of `items` (lexicographic, distinct since items are distinct).
pub(crate) fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let rest: Vec<usize> = items.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &x)| x).collect();
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Log file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Json,
    Xes,
}

impl LogFormat {
    pub fn from_path(path: &Path) -> LogFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("xes") => LogFormat::Xes,
            _ => LogFormat::Json,
        }
    }
}

pub fn parse_log(path: &Path, format: LogFormat, strict: bool) -> Result<Vec<UncertainTrace>, LogError> {
    let text = std::fs::read_to_string(path).map_err(|e| LogError::Io(format!("{}: {e}", path.display())))?;
    match format {
        LogFormat::Json => json::parse(&text),
        LogFormat::Xes => xes::parse(&text, strict),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    pub use crate::examples::{ut1, ut2, ut3};
}
