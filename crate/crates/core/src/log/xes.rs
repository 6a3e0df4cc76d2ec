//! XES reading and writing.
//!
//! Plain XES events map to certain events: `concept:name` is the label,
//! `time:timestamp` the timestamp (epoch milliseconds), other non-extension
//! attributes are data. Uncertainty is carried by `uncertainty:*` attributes:
//!
//! - `uncertainty:conf`: event confidence
//! - `uncertainty:labels`: container of `<float key="activity" value="p"/>`
//! - `uncertainty:ts_min` / `uncertainty:ts_max`: timestamp interval
//! - `uncertainty:ts_set`: container of admissible timestamps
//! - `uncertainty:data:<var>`: container with `min`/`max` entries (interval) or value entries (set)
//! - `uncertainty:id`: event id (else `identity:id`, else the position)

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::DateTime;
use roxmltree::Node;

use super::{LogError, TimeSpec, UncertainEvent, UncertainTrace, ValueSpec};
use crate::dpn::Value;
use crate::rational::{format_exact, parse_rational, Rational};

const IGNORED_PREFIXES: &[&str] = &["concept:", "time:", "lifecycle:", "org:", "identity:", "cost:", "semantic:"];
const KNOWN_UNCERTAINTY: &[&str] =
    &["uncertainty:conf", "uncertainty:labels", "uncertainty:ts_min", "uncertainty:ts_max", "uncertainty:ts_set", "uncertainty:id"];

pub fn parse(text: &str, strict: bool) -> Result<Vec<UncertainTrace>, LogError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let p = e.pos();
        LogError::Syntax { line: p.row as usize, column: p.col as usize, msg: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "log" {
        return Err(LogError::Schema { trace: 0, event: None, msg: "root element must be <log>".into() });
    }
    root.children()
        .filter(|n| n.has_tag_name("trace"))
        .enumerate()
        .map(|(i, t)| parse_trace(i, t, strict))
        .collect()
}

fn parse_trace(index: usize, node: Node, strict: bool) -> Result<UncertainTrace, LogError> {
    let mut events = Vec::new();
    let mut name = None;
    for child in node.children().filter(Node::is_element) {
        if child.has_tag_name("event") {
            let pos = events.len();
            let ev = parse_event(child, pos, strict).map_err(|(event, msg)| {
                let p = child.document().text_pos_at(child.range().start);
                LogError::Schema { trace: index, event, msg: format!("{msg} (line {})", p.row) }
            })?;
            events.push(ev);
        } else if child.attribute("key") == Some("concept:name") {
            name = child.attribute("value").map(str::to_string);
        }
    }
    let mut t = UncertainTrace::new(events).map_err(|e| match e {
        LogError::Schema { event, msg, .. } => LogError::Schema { trace: index, event, msg },
        other => other,
    })?;
    t.name = name;
    Ok(t)
}

type EventErr = (Option<String>, String);

fn parse_event(node: Node, pos: usize, strict: bool) -> Result<UncertainEvent, EventErr> {
    let attr = |key: &str| node.children().find(|c| c.is_element() && c.attribute("key") == Some(key));
    let id = attr("uncertainty:id")
        .or_else(|| attr("identity:id"))
        .and_then(|n| n.attribute("value"))
        .map(str::to_string)
        .unwrap_or_else(|| format!("e{}", pos + 1));
    let fail = |msg: String| (Some(id.clone()), msg);

    let conf = match attr("uncertainty:conf") {
        Some(n) => number(n).ok_or_else(|| fail("bad uncertainty:conf".into()))?,
        None => Rational::from_integer(1.into()),
    };

    let mut labels = BTreeMap::new();
    if let Some(c) = attr("uncertainty:labels") {
        for entry in c.children().filter(Node::is_element) {
            let key = entry.attribute("key").ok_or_else(|| fail("label entry without key".into()))?;
            let p = number(entry).ok_or_else(|| fail(format!("bad confidence for label `{key}`")))?;
            labels.insert(key.to_string(), p);
        }
    } else if let Some(n) = attr("concept:name") {
        let l = n.attribute("value").ok_or_else(|| fail("concept:name without value".into()))?;
        labels.insert(l.to_string(), Rational::from_integer(1.into()));
    }

    let ts = if let Some(c) = attr("uncertainty:ts_set") {
        let set = c
            .children()
            .filter(Node::is_element)
            .map(|e| timestamp(e).ok_or_else(|| fail("bad entry in uncertainty:ts_set".into())))
            .collect::<Result<BTreeSet<u64>, _>>()?;
        TimeSpec::Set(set)
    } else if let (Some(lo), Some(hi)) = (attr("uncertainty:ts_min"), attr("uncertainty:ts_max")) {
        let lo = timestamp(lo).ok_or_else(|| fail("bad uncertainty:ts_min".into()))?;
        let hi = timestamp(hi).ok_or_else(|| fail("bad uncertainty:ts_max".into()))?;
        TimeSpec::Interval(lo, hi)
    } else if let Some(t) = attr("time:timestamp") {
        TimeSpec::Set(BTreeSet::from([timestamp(t).ok_or_else(|| fail("bad time:timestamp".into()))?]))
    } else {
        // untimed events keep their position as timestamp
        TimeSpec::Set(BTreeSet::from([pos as u64]))
    };

    let mut data = BTreeMap::new();
    for a in node.children().filter(Node::is_element) {
        let Some(key) = a.attribute("key") else { continue };
        if let Some(var) = key.strip_prefix("uncertainty:data:") {
            data.insert(var.to_string(), data_container(a).map_err(|m| fail(format!("{key}: {m}")))?);
        } else if key.starts_with("uncertainty:") {
            if !KNOWN_UNCERTAINTY.contains(&key) {
                if strict {
                    return Err(fail(format!("unrecognized attribute `{key}`")));
                }
                log::warn!("event `{id}`: ignoring unrecognized attribute `{key}`");
            }
        } else if !IGNORED_PREFIXES.iter().any(|p| key.starts_with(p)) {
            let v = attribute_value(a).ok_or_else(|| fail(format!("unsupported value for `{key}`")))?;
            data.insert(key.to_string(), ValueSpec::Set(vec![v]));
        }
    }
    Ok(UncertainEvent { id, conf, labels, ts, data })
}

fn number(n: Node) -> Option<Rational> {
    parse_rational(n.attribute("value")?).ok()
}

fn timestamp(n: Node) -> Option<u64> {
    let v = n.attribute("value")?;
    if n.has_tag_name("date") {
        let dt = DateTime::parse_from_rfc3339(v).ok()?;
        u64::try_from(dt.timestamp_millis()).ok()
    } else {
        v.trim().parse().ok()
    }
}

fn attribute_value(n: Node) -> Option<Value> {
    let v = n.attribute("value")?;
    match n.tag_name().name() {
        "int" | "float" => parse_rational(v).ok().map(Value::Rat),
        "boolean" => v.parse().ok().map(Value::Bool),
        "string" | "id" => Some(Value::Str(v.to_string())),
        "date" => Some(Value::Rat(Rational::from_integer(timestamp(n)?.into()))),
        _ => None,
    }
}

fn data_container(c: Node) -> Result<ValueSpec, String> {
    let entries: Vec<Node> = c.children().filter(Node::is_element).collect();
    let get = |k: &str| entries.iter().find(|e| e.attribute("key") == Some(k));
    if let (Some(lo), Some(hi)) = (get("min"), get("max")) {
        let lo = number(*lo).ok_or("bad min")?;
        let hi = number(*hi).ok_or("bad max")?;
        return Ok(ValueSpec::Interval(lo, hi));
    }
    let values = entries.iter().map(|e| attribute_value(*e).ok_or("unsupported value")).collect::<Result<Vec<_>, _>>()?;
    Ok(ValueSpec::Set(values))
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn value_element(key: &str, v: &Value) -> String {
    match v {
        Value::Bool(b) => format!("<boolean key=\"{}\" value=\"{b}\"/>", esc(key)),
        Value::Int(i) => format!("<int key=\"{}\" value=\"{i}\"/>", esc(key)),
        Value::Rat(q) if q.is_integer() => format!("<int key=\"{}\" value=\"{}\"/>", esc(key), q.numer()),
        Value::Rat(q) => format!("<float key=\"{}\" value=\"{}\"/>", esc(key), format_exact(q)),
        Value::Str(s) => format!("<string key=\"{}\" value=\"{}\"/>", esc(key), esc(s)),
    }
}

/// Serializes traces using the attribute vocabulary above. Timestamps are
/// written as plain integers so that they survive a round trip exactly.
pub fn to_string(traces: &[UncertainTrace]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<log xes.version=\"1.0\">\n");
    for t in traces {
        out.push_str("  <trace>\n");
        if let Some(n) = &t.name {
            let _ = writeln!(out, "    <string key=\"concept:name\" value=\"{}\"/>", esc(n));
        }
        for e in t.events() {
            out.push_str("    <event>\n");
            let _ = writeln!(out, "      <string key=\"uncertainty:id\" value=\"{}\"/>", esc(&e.id));
            let _ = writeln!(out, "      <float key=\"uncertainty:conf\" value=\"{}\"/>", format_exact(&e.conf));
            if e.labels.len() == 1 && e.labels.values().all(|p| *p == Rational::from_integer(1.into())) {
                let l = e.labels.keys().next().unwrap();
                let _ = writeln!(out, "      <string key=\"concept:name\" value=\"{}\"/>", esc(l));
            } else {
                out.push_str("      <container key=\"uncertainty:labels\">\n");
                for (l, p) in &e.labels {
                    let _ = writeln!(out, "        <float key=\"{}\" value=\"{}\"/>", esc(l), format_exact(p));
                }
                out.push_str("      </container>\n");
            }
            match &e.ts {
                TimeSpec::Set(s) => {
                    out.push_str("      <container key=\"uncertainty:ts_set\">\n");
                    for t in s {
                        let _ = writeln!(out, "        <int key=\"t\" value=\"{t}\"/>");
                    }
                    out.push_str("      </container>\n");
                }
                TimeSpec::Interval(lo, hi) => {
                    let _ = writeln!(out, "      <int key=\"uncertainty:ts_min\" value=\"{lo}\"/>");
                    let _ = writeln!(out, "      <int key=\"uncertainty:ts_max\" value=\"{hi}\"/>");
                }
            }
            for (var, spec) in &e.data {
                let _ = writeln!(out, "      <container key=\"uncertainty:data:{}\">", esc(var));
                match spec {
                    ValueSpec::Set(vs) => {
                        for v in vs {
                            let _ = writeln!(out, "        {}", value_element("v", v));
                        }
                    }
                    ValueSpec::Interval(lo, hi) => {
                        let _ = writeln!(out, "        <float key=\"min\" value=\"{}\"/>", format_exact(lo));
                        let _ = writeln!(out, "        <float key=\"max\" value=\"{}\"/>", format_exact(hi));
                    }
                }
                out.push_str("      </container>\n");
            }
            out.push_str("    </event>\n");
        }
        out.push_str("  </trace>\n");
    }
    out.push_str("</log>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::fixtures::{ut1, ut2, ut3};
    use crate::rational::ratio;

    #[test]
    fn round_trip_fixtures() {
        let log = vec![ut1(), ut2(), ut3()];
        assert_eq!(parse(&to_string(&log), true).unwrap(), log);
    }

    #[test]
    fn plain_xes_events_are_certain() {
        let text = r#"<log xes.version="1.0">
          <trace><string key="concept:name" value="case1"/>
            <event><string key="concept:name" value="a"/><date key="time:timestamp" value="1970-01-01T00:00:01.000+00:00"/>
              <float key="x" value="2.5"/><string key="lifecycle:transition" value="complete"/></event>
            <event><string key="concept:name" value="b"/><date key="time:timestamp" value="1970-01-01T00:00:02.000+00:00"/></event>
          </trace></log>"#;
        let t = &parse(text, true).unwrap()[0];
        assert_eq!(t.name.as_deref(), Some("case1"));
        let e = &t.events()[0];
        assert!(e.is_certain());
        assert_eq!(e.ts, TimeSpec::Set(BTreeSet::from([1000])));
        assert_eq!(e.data["x"], ValueSpec::Set(vec![Value::Rat(ratio(5, 2))]));
        assert_eq!(e.data.len(), 1);
        assert!(t.is_sequential());
    }

    #[test]
    fn unknown_uncertainty_keys() {
        let text = r#"<log><trace><event><string key="concept:name" value="a"/>
            <float key="uncertainty:weird" value="1"/></event></trace></log>"#;
        assert!(parse(text, true).is_err());
        assert_eq!(parse(text, false).unwrap()[0].len(), 1);
    }
}
