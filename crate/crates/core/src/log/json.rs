//! JSON log format.
//!
//! ```json
//! {"traces": [{"events": [{"id": "e1", "conf": "1/4", "labels": {"a": 1},
//!   "ts": {"interval": [0, 5]}, "data": {"x": {"set": [2, 3]}}}]}]}
//! ```
//! Numbers are read exactly; strings of the form `p/q` are rationals.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::ToPrimitive;
use serde_json::{json, Map, Value as Json};

use super::{LogError, TimeSpec, UncertainEvent, UncertainTrace, ValueSpec};
use crate::dpn::Value;
use crate::rational::{format_exact, parse_rational, Rational};

pub fn parse(text: &str) -> Result<Vec<UncertainTrace>, LogError> {
    let root: Json = serde_json::from_str(text).map_err(|e| LogError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    from_json(&root)
}

pub fn from_json(root: &Json) -> Result<Vec<UncertainTrace>, LogError> {
    let top = |msg: &str| LogError::Schema { trace: 0, event: None, msg: msg.to_string() };
    let traces = root
        .get("traces")
        .and_then(Json::as_array)
        .ok_or_else(|| top("expected an object with a `traces` list"))?;
    traces.iter().enumerate().map(|(i, t)| parse_trace(i, t)).collect()
}

fn parse_trace(index: usize, t: &Json) -> Result<UncertainTrace, LogError> {
    let err = |event: Option<&str>, msg: String| LogError::Schema { trace: index, event: event.map(str::to_string), msg };
    let events = t.get("events").and_then(Json::as_array).ok_or_else(|| err(None, "missing `events` list".into()))?;
    let mut out = Vec::with_capacity(events.len());
    for (k, e) in events.iter().enumerate() {
        let obj = e.as_object().ok_or_else(|| err(None, format!("event #{k} is not an object")))?;
        let id = obj.get("id").and_then(Json::as_str).ok_or_else(|| err(None, format!("event #{k} has no string `id`")))?;
        let ev = parse_event(id, obj).map_err(|msg| err(Some(id), msg))?;
        out.push(ev);
    }
    let mut trace = UncertainTrace::new(out).map_err(|e| match e {
        LogError::Schema { event, msg, .. } => LogError::Schema { trace: index, event, msg },
        other => other,
    })?;
    trace.name = t.get("name").and_then(Json::as_str).map(str::to_string);
    Ok(trace)
}

fn parse_event(id: &str, obj: &Map<String, Json>) -> Result<UncertainEvent, String> {
    for key in obj.keys() {
        if !["id", "conf", "labels", "ts", "data"].contains(&key.as_str()) {
            return Err(format!("unknown key `{key}`"));
        }
    }
    let conf = match obj.get("conf") {
        None => Rational::from_integer(1.into()),
        Some(c) => number(c).ok_or("`conf` must be a number or a \"p/q\" string")?,
    };
    let labels_obj = obj.get("labels").and_then(Json::as_object).ok_or("missing `labels` object")?;
    let mut labels = BTreeMap::new();
    for (l, p) in labels_obj {
        labels.insert(l.clone(), number(p).ok_or_else(|| format!("confidence of label `{l}` is not a number"))?);
    }
    let ts = parse_ts(obj.get("ts").ok_or("missing `ts`")?)?;
    let mut data = BTreeMap::new();
    if let Some(d) = obj.get("data") {
        let d = d.as_object().ok_or("`data` must be an object")?;
        for (var, spec) in d {
            data.insert(var.clone(), parse_value_spec(spec).map_err(|m| format!("data `{var}`: {m}"))?);
        }
    }
    let ev = UncertainEvent { id: id.to_string(), conf, labels, ts, data };
    ev.check()?;
    Ok(ev)
}

fn number(j: &Json) -> Option<Rational> {
    match j {
        Json::Number(n) => parse_rational(&n.to_string()).ok(),
        Json::String(s) => parse_rational(s).ok(),
        _ => None,
    }
}

fn single_key(j: &Json) -> Result<(&str, &Json), String> {
    let obj = j.as_object().ok_or("expected {\"set\": [...]} or {\"interval\": [lo, hi]}")?;
    if obj.len() != 1 {
        return Err("expected exactly one of `set` / `interval`".into());
    }
    let (k, v) = obj.iter().next().unwrap();
    Ok((k.as_str(), v))
}

fn parse_ts(j: &Json) -> Result<TimeSpec, String> {
    let nat = |x: &Json| x.as_u64().ok_or_else(|| format!("timestamp {x} is not a natural number"));
    match single_key(j)? {
        ("set", Json::Array(xs)) => Ok(TimeSpec::Set(xs.iter().map(nat).collect::<Result<BTreeSet<_>, _>>()?)),
        ("interval", Json::Array(xs)) if xs.len() == 2 => Ok(TimeSpec::Interval(nat(&xs[0])?, nat(&xs[1])?)),
        (k, _) => Err(format!("bad timestamp spec `{k}`")),
    }
}

/// JSON value of a log attribute: numbers are exact rationals, `p/q` strings too.
pub fn parse_value(j: &Json) -> Option<Value> {
    match j {
        Json::Bool(b) => Some(Value::Bool(*b)),
        Json::Number(n) => parse_rational(&n.to_string()).ok().map(Value::Rat),
        Json::String(s) if is_fraction(s) => parse_rational(s).ok().map(Value::Rat),
        Json::String(s) => Some(Value::Str(s.clone())),
        _ => None,
    }
}

fn is_fraction(s: &str) -> bool {
    let Some((n, d)) = s.split_once('/') else { return false };
    let n = n.strip_prefix('-').unwrap_or(n);
    !n.is_empty() && !d.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) && d.bytes().all(|b| b.is_ascii_digit())
}

fn parse_value_spec(j: &Json) -> Result<ValueSpec, String> {
    match single_key(j)? {
        ("set", Json::Array(xs)) => Ok(ValueSpec::Set(
            xs.iter().map(|x| parse_value(x).ok_or_else(|| format!("unsupported value {x}"))).collect::<Result<_, _>>()?,
        )),
        ("interval", Json::Array(xs)) if xs.len() == 2 => {
            let lo = number(&xs[0]).ok_or("interval bounds must be numbers")?;
            let hi = number(&xs[1]).ok_or("interval bounds must be numbers")?;
            Ok(ValueSpec::Interval(lo, hi))
        }
        (k, _) => Err(format!("bad value spec `{k}`")),
    }
}

pub fn rational_json(q: &Rational) -> Json {
    if q.is_integer() {
        if let Some(i) = q.to_integer().to_i64() {
            return json!(i);
        }
    }
    Json::String(format_exact(q))
}

pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Rat(q) => rational_json(q),
        other => other.to_json(),
    }
}

pub fn to_json(traces: &[UncertainTrace]) -> Json {
    json!({ "traces": traces.iter().map(trace_json).collect::<Vec<_>>() })
}

fn trace_json(t: &UncertainTrace) -> Json {
    let mut obj = Map::new();
    if let Some(n) = &t.name {
        obj.insert("name".into(), json!(n));
    }
    obj.insert("events".into(), Json::Array(t.events().iter().map(event_json).collect()));
    Json::Object(obj)
}

fn event_json(e: &UncertainEvent) -> Json {
    let ts = match &e.ts {
        TimeSpec::Set(s) => json!({"set": s}),
        TimeSpec::Interval(lo, hi) => json!({"interval": [lo, hi]}),
    };
    let data: Map<String, Json> = e
        .data
        .iter()
        .map(|(k, spec)| {
            let j = match spec {
                ValueSpec::Set(vs) => json!({"set": vs.iter().map(value_json).collect::<Vec<_>>()}),
                ValueSpec::Interval(lo, hi) => json!({"interval": [rational_json(lo), rational_json(hi)]}),
            };
            (k.clone(), j)
        })
        .collect();
    json!({
        "id": e.id,
        "conf": rational_json(&e.conf),
        "labels": e.labels.iter().map(|(l, p)| (l.clone(), rational_json(p))).collect::<Map<_, _>>(),
        "ts": ts,
        "data": data,
    })
}

pub fn to_string(traces: &[UncertainTrace]) -> String {
    serde_json::to_string_pretty(&to_json(traces)).expect("log serializes")
}
