//! Reading a run, a realization and an optimal alignment back out of a
//! solver model, and re-checking all three independently.

use std::fmt::Write as _;

use num_traits::ToPrimitive;
use serde_json::json;

use crate::cost::{total_cost, Alignment, CostFunctions, Mode, Move};
use crate::dpn::{Assignment, Dpn, TransitionFiring};
use crate::log::{validate_realization, Event, Realization, UncertainTrace};
use crate::rational::{format_decimal, format_exact, Cost, Rational};
use crate::smt::term::{EvalError, Evaluator, SValue, Term};
use crate::smt::{Layout, SmtProblem};
use crate::solver::Model;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("model has no usable value for `{0}`")]
    MissingValue(String),
    #[error("transition code {0} is out of range")]
    BadTransition(i64),
    #[error("label code {code} is out of range for event `{event}`")]
    BadLabel { event: String, code: i64 },
    #[error("no branch of cell ({i}, {j}) matches its value")]
    NoBranch { i: usize, j: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedResult {
    /// The run without final-loop firings.
    pub run: Vec<TransitionFiring>,
    pub realization: Realization,
    /// The alignment without final-loop model moves.
    pub alignment: Alignment,
    /// Cost of each move of `alignment`.
    pub move_costs: Vec<Rational>,
    pub cost: Rational,
    pub mode: Mode,
    /// All checks passed: the run replays, the realization validates, the
    /// projections match and the recomputed cost equals `cost`.
    pub verified: bool,
    /// Failed checks, if any.
    pub problems: Vec<String>,
}

fn num(model: &Model, name: &str) -> Result<Rational, DecodeError> {
    match model.get(name) {
        Some(SValue::Num(q)) => Ok(q.clone()),
        _ => Err(DecodeError::MissingValue(name.to_string())),
    }
}

fn int_of(model: &Model, name: &str) -> Result<i64, DecodeError> {
    let q = num(model, name)?;
    if !q.is_integer() {
        return Err(DecodeError::MissingValue(name.to_string()));
    }
    q.to_integer().to_i64().ok_or_else(|| DecodeError::MissingValue(name.to_string()))
}

fn truth(model: &Model, name: &str) -> Result<bool, DecodeError> {
    match model.get(name) {
        Some(SValue::Bool(b)) => Ok(*b),
        _ => Err(DecodeError::MissingValue(name.to_string())),
    }
}

fn assignment_at(model: &Model, layout: &Layout, i: usize) -> Result<Assignment, DecodeError> {
    let mut out = Assignment::new();
    for (v, (name, ty)) in layout.vars.iter().enumerate() {
        let key = layout.x(i, v);
        let val = model
            .get(&key)
            .and_then(|sv| layout.decode_value(*ty, sv))
            .ok_or(DecodeError::MissingValue(key))?;
        out.insert(name.clone(), val);
    }
    Ok(out)
}

/// The full run over the augmented net, final-loop firings included.
pub fn decode_run(model: &Model, layout: &Layout, net: &Dpn) -> Result<Vec<TransitionFiring>, DecodeError> {
    let mut run = Vec::with_capacity(layout.n);
    let mut before = assignment_at(model, layout, 0)?;
    for i in 1..=layout.n {
        let code = int_of(model, &layout.t(i))?;
        if code < 1 || code as usize > net.transitions().len() {
            return Err(DecodeError::BadTransition(code));
        }
        let t = code as usize - 1;
        let after = assignment_at(model, layout, i)?;
        let write =
            net.transition(t).writes().iter().map(|v| (v.clone(), after[v].clone())).collect::<Assignment>();
        run.push(TransitionFiring { transition: t, read: before, write });
        before = after;
    }
    Ok(run)
}

pub fn strip_final_loop(net: &Dpn, run: &[TransitionFiring]) -> Vec<TransitionFiring> {
    run.iter().filter(|f| !net.transition(f.transition).synthetic).cloned().collect()
}

/// Rows of the alignment matrix: for each row `i`, the event index (1-based)
/// it holds, in timestamp order.
fn row_events(model: &Model, layout: &Layout) -> Result<Vec<usize>, DecodeError> {
    if let Some(order) = &layout.row_event {
        return Ok(order.clone());
    }
    (1..=layout.m)
        .map(|i| {
            let k = int_of(model, &layout.nth(i))?;
            if k < 1 || k as usize > layout.m {
                return Err(DecodeError::MissingValue(layout.nth(i)));
            }
            Ok(k as usize)
        })
        .collect()
}

fn event_of(model: &Model, layout: &Layout, trace: &UncertainTrace, k: usize) -> Result<Event, DecodeError> {
    let ue = &trace.events()[k - 1];
    let code = int_of(model, &layout.act(k))?;
    let label = layout.labels[k - 1]
        .get((code - 1).max(0) as usize)
        .filter(|_| code >= 1)
        .cloned()
        .ok_or(DecodeError::BadLabel { event: ue.id.clone(), code })?;
    let mut assign = Assignment::new();
    for (v, (name, ty)) in layout.vars.iter().enumerate() {
        let key = layout.td(v, k);
        let val = model.get(&key).and_then(|sv| layout.decode_value(*ty, sv)).ok_or(DecodeError::MissingValue(key))?;
        assign.insert(name.clone(), val);
    }
    Ok(Event { id: ue.id.clone(), label, assign })
}

/// Kept events in row order, with their timestamps.
pub fn decode_realization(model: &Model, layout: &Layout, trace: &UncertainTrace) -> Result<Realization, DecodeError> {
    let mut r = Realization::default();
    for k in row_events(model, layout)? {
        if truth(model, &layout.drop(k))? {
            continue;
        }
        let ts = if layout.sequential {
            trace.events()[k - 1].ts.min()
        } else {
            let t = int_of(model, &layout.ts(k))?;
            u64::try_from(t).map_err(|_| DecodeError::MissingValue(layout.ts(k)))?
        };
        r.events.push(event_of(model, layout, trace, k)?);
        r.timestamps.push(ts);
    }
    Ok(r)
}

/// Backtracks the δ recurrence from (m, n), testing branches in the order
/// log, drop, model, sync. Returns moves over the full run.
pub fn decode_alignment(
    problem: &SmtProblem,
    model: &Model,
    run: &[TransitionFiring],
    trace: &UncertainTrace,
) -> Result<Alignment, DecodeError> {
    let layout = &problem.layout;
    let defs = problem.definitions_map();
    let mut ev = Evaluator::new(model, &defs);
    let rows = row_events(model, layout)?;
    let (mut i, mut j) = (layout.m, layout.n);
    let mut moves = Vec::new();
    while i > 0 || j > 0 {
        let cell = &problem.cells[i][j];
        let here = ev.num(&Term::Var(layout.d(i, j)))?;
        let mut matches = |t: &Option<Term>| -> Result<bool, DecodeError> {
            Ok(match t {
                Some(t) => ev.num(t)? == here,
                None => false,
            })
        };
        if matches(&cell.log)? && !truth(model, &layout.drop(rows[i - 1]))? {
            moves.push(Move::Log(event_of(model, layout, trace, rows[i - 1])?));
            i -= 1;
        } else if matches(&cell.drop)? && truth(model, &layout.drop(rows[i - 1]))? {
            i -= 1;
        } else if matches(&cell.model)? {
            moves.push(Move::Model(run[j - 1].clone()));
            j -= 1;
        } else if matches(&cell.sync)? {
            moves.push(Move::Sync(event_of(model, layout, trace, rows[i - 1])?, run[j - 1].clone()));
            i -= 1;
            j -= 1;
        } else {
            return Err(DecodeError::NoBranch { i, j });
        }
    }
    moves.reverse();
    Ok(Alignment { moves })
}

/// Decodes everything and runs the independent checks. `net` is the
/// original (unaugmented) net; `trace` must be the trace the problem was
/// built from.
pub fn decode(
    problem: &SmtProblem,
    model: &Model,
    net: &Dpn,
    trace: &UncertainTrace,
    cf: &CostFunctions,
) -> Result<DecodedResult, DecodeError> {
    let aug = net.augment_final_loop();
    let trace = trace.coerce_to(&aug).unwrap_or_else(|_| trace.clone());
    let layout = &problem.layout;
    let full_run = decode_run(model, layout, &aug)?;
    let realization = decode_realization(model, layout, &trace)?;
    let full_alignment = decode_alignment(problem, model, &full_run, &trace)?;
    let cost = problem.objective_value(model)?;

    let mut problems = Vec::new();
    if let Err(e) = aug.check_process_run(&full_run) {
        problems.push(format!("run does not replay: {e}"));
    }
    let run = strip_final_loop(&aug, &full_run);
    if let Err(e) = net.check_process_run(&run) {
        problems.push(format!("run without final loop does not replay: {e}"));
    }
    if let Err(e) = validate_realization(&realization, &trace) {
        problems.push(format!("realization is invalid: {e}"));
    }
    if full_alignment.model_projection() != full_run {
        problems.push("model projection differs from the run".into());
    }
    let mut move_costs = Vec::new();
    match total_cost(&aug, &full_alignment, &realization, &trace, cf) {
        Ok(report) => {
            if report.total != Cost::Finite(cost.clone()) {
                problems.push(format!("recomputed cost {} differs from the optimum {}", report.total, format_exact(&cost)));
            }
            for (m, c) in full_alignment.moves.iter().zip(report.per_move) {
                if !is_final_loop(&aug, m) {
                    move_costs.push(c.finite().cloned().unwrap_or_else(|| problem.meta.big_m.clone()));
                }
            }
        }
        Err(e) => problems.push(format!("cannot recompute the cost: {e}")),
    }
    let alignment = Alignment { moves: full_alignment.moves.into_iter().filter(|m| !is_final_loop(&aug, m)).collect() };
    Ok(DecodedResult {
        run,
        realization,
        alignment,
        move_costs,
        cost,
        mode: cf.mode,
        verified: problems.is_empty(),
        problems,
    })
}

fn is_final_loop(net: &Dpn, m: &Move) -> bool {
    matches!(m, Move::Model(f) if net.transition(f.transition).synthetic)
}

fn event_cell(e: &Event) -> String {
    e.label.clone()
}

fn firing_cell(net: &Dpn, f: &TransitionFiring) -> String {
    let t = net.transition(f.transition);
    let name = t.label.clone().unwrap_or_else(|| format!("τ({})", t.id));
    if f.write.is_empty() {
        name
    } else {
        let w: Vec<String> = f.write.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{name}/{}", w.join(","))
    }
}

/// Two rows, log over model, `≫` marking a skip.
pub fn render_text(net: &Dpn, alignment: &Alignment) -> String {
    let cols: Vec<(String, String)> = alignment
        .moves
        .iter()
        .map(|m| match m {
            Move::Log(e) => (event_cell(e), "≫".to_string()),
            Move::Model(f) => ("≫".to_string(), firing_cell(net, f)),
            Move::Sync(e, f) => (event_cell(e), firing_cell(net, f)),
        })
        .collect();
    let mut top = String::from("log   |");
    let mut bottom = String::from("model |");
    for (a, b) in &cols {
        let w = a.chars().count().max(b.chars().count());
        let _ = write!(top, " {a:<w$} |");
        let _ = write!(bottom, " {b:<w$} |");
    }
    format!("{top}\n{bottom}")
}

fn event_json(e: &Event) -> serde_json::Value {
    let data: serde_json::Map<String, serde_json::Value> = e.assign.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
    json!({"id": e.id, "label": e.label, "data": data})
}

fn firing_json(net: &Dpn, f: &TransitionFiring) -> serde_json::Value {
    let v = f.view(net);
    json!({"transition": v.transition, "label": v.label, "read": v.read, "write": v.write})
}

impl DecodedResult {
    /// `{moves: [{kind, event?, firing?, cost}], cost, realization, dropped}`.
    pub fn to_json(&self, net: &Dpn, trace: &UncertainTrace) -> serde_json::Value {
        let moves: Vec<serde_json::Value> = self
            .alignment
            .moves
            .iter()
            .zip(&self.move_costs)
            .map(|(m, c)| {
                let mut o = serde_json::Map::new();
                o.insert("kind".into(), json!(m.kind()));
                if let Some(e) = m.event() {
                    o.insert("event".into(), event_json(e));
                }
                if let Some(f) = m.firing() {
                    o.insert("firing".into(), firing_json(net, f));
                }
                o.insert("cost".into(), json!(format_exact(c)));
                serde_json::Value::Object(o)
            })
            .collect();
        let realization: Vec<serde_json::Value> = self
            .realization
            .events
            .iter()
            .zip(&self.realization.timestamps)
            .map(|(e, t)| {
                let mut v = event_json(e);
                v["timestamp"] = json!(t);
                v
            })
            .collect();
        let dropped: Vec<&str> = self.realization.dropped(trace).iter().map(|ue| ue.id.as_str()).collect();
        json!({
            "moves": moves,
            "cost": format_exact(&self.cost),
            "cost_decimal": format_decimal(&self.cost, 6),
            "realization": realization,
            "dropped": dropped,
        })
    }
}
