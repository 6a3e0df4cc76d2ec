//! Net file formats: the JSON format (normative) and a PNML subset.
//!
//! JSON:
//! ```json
//! {"places": ["p0", "p1"],
//!  "transitions": [{"id": "a", "label": "a", "guard": [">=", ["wvar", "x"], ["int", 0]]}],
//!  "arcs": [{"from": "p0", "to": "a", "weight": 1}],
//!  "variables": {"x": {"type": "rat", "init": 0}},
//!  "marking_initial": {"p0": 1}, "marking_final": {"p1": 1}}
//! ```
//! A `null` label is a silent transition; a missing or `null` guard is `true`.

use std::path::Path;

use serde_json::{json, Map, Value as Json};

use super::{Dpn, DpnBuilder, Expr, ModelError, Value, VarType};

fn fmt_err(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

pub fn from_json_str(text: &str) -> Result<Dpn, ModelError> {
    let root: Json = serde_json::from_str(text).map_err(|e| fmt_err(format!("invalid JSON: {e}")))?;
    from_json(&root)
}

pub fn from_json(root: &Json) -> Result<Dpn, ModelError> {
    let obj = root.as_object().ok_or_else(|| fmt_err("net must be a JSON object"))?;
    for key in obj.keys() {
        if !["places", "transitions", "arcs", "variables", "marking_initial", "marking_final"].contains(&key.as_str()) {
            return Err(fmt_err(format!("unknown key `{key}`")));
        }
    }
    let mut b = DpnBuilder::new();
    for p in array(obj, "places")? {
        b = b.place(p.as_str().ok_or_else(|| fmt_err("place ids must be strings"))?);
    }
    for t in array(obj, "transitions")? {
        let t = t.as_object().ok_or_else(|| fmt_err("transition must be an object"))?;
        let id = t.get("id").and_then(Json::as_str).ok_or_else(|| fmt_err("transition without id"))?;
        let label = match t.get("label") {
            None | Some(Json::Null) => None,
            Some(Json::String(s)) => Some(s.as_str()),
            Some(_) => return Err(fmt_err(format!("label of `{id}` must be a string or null"))),
        };
        let guard = Expr::from_json(t.get("guard").unwrap_or(&Json::Null))
            .map_err(|source| ModelError::Guard { transition: id.to_string(), source })?;
        b = b.transition(id, label, guard);
    }
    for a in array(obj, "arcs")? {
        let a = a.as_object().ok_or_else(|| fmt_err("arc must be an object"))?;
        let from = a.get("from").and_then(Json::as_str).ok_or_else(|| fmt_err("arc without `from`"))?;
        let to = a.get("to").and_then(Json::as_str).ok_or_else(|| fmt_err("arc without `to`"))?;
        let weight = match a.get("weight") {
            None => 1,
            Some(w) => w.as_u64().ok_or_else(|| fmt_err("arc weight must be a natural number"))?,
        };
        b = b.arc(from, to, weight);
    }
    if let Some(vars) = obj.get("variables") {
        let vars = vars.as_object().ok_or_else(|| fmt_err("`variables` must be an object"))?;
        for (name, decl) in vars {
            let ty = decl
                .get("type")
                .and_then(Json::as_str)
                .and_then(VarType::parse)
                .ok_or_else(|| fmt_err(format!("variable `{name}` needs a type (bool|int|rat|string)")))?;
            let init = decl.get("init").ok_or_else(|| fmt_err(format!("variable `{name}` needs an init value")))?;
            let init = Value::from_json(init, Some(ty)).ok_or(ModelError::InitType(name.clone(), ty))?;
            b = b.variable(name, ty, init);
        }
    }
    b.initial = marking(obj, "marking_initial")?;
    b.final_marking = marking(obj, "marking_final")?;
    b.build()
}

fn array<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a Vec<Json>, ModelError> {
    obj.get(key).and_then(Json::as_array).ok_or_else(|| fmt_err(format!("`{key}` must be a list")))
}

fn marking(obj: &Map<String, Json>, key: &str) -> Result<Vec<(String, u64)>, ModelError> {
    let Some(m) = obj.get(key) else { return Ok(Vec::new()) };
    let m = m.as_object().ok_or_else(|| fmt_err(format!("`{key}` must be an object")))?;
    m.iter()
        .map(|(p, k)| Ok((p.clone(), k.as_u64().ok_or_else(|| fmt_err(format!("token count for `{p}`")))?)))
        .collect()
}

pub fn to_json(net: &Dpn) -> Json {
    let mut arcs = Vec::new();
    for t in net.transitions().iter().filter(|t| !t.synthetic) {
        for (&p, &w) in &t.pre {
            arcs.push(json!({"from": net.places()[p], "to": t.id, "weight": w}));
        }
        for (&p, &w) in &t.post {
            arcs.push(json!({"from": t.id, "to": net.places()[p], "weight": w}));
        }
    }
    let marking = |m: &[u64]| -> Map<String, Json> {
        m.iter().enumerate().filter(|(_, &k)| k > 0).map(|(p, &k)| (net.places()[p].clone(), json!(k))).collect()
    };
    json!({
        "places": net.places(),
        "transitions": net.transitions().iter().filter(|t| !t.synthetic).map(|t| json!({
            "id": t.id, "label": t.label, "guard": t.guard.to_json()
        })).collect::<Vec<_>>(),
        "arcs": arcs,
        "variables": net.variables().iter().map(|v| (v.name.clone(), json!({"type": v.ty.name(), "init": v.init.to_json()}))).collect::<Map<_, _>>(),
        "marking_initial": marking(net.initial_marking()),
        "marking_final": marking(net.final_marking()),
    })
}

/// Reads a net from `path`, choosing the format by extension (`.pnml` or JSON).
pub fn load(path: &Path) -> Result<Dpn, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| fmt_err(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pnml")) {
        from_pnml_str(&text)
    } else {
        from_json_str(&text)
    }
}

const PRESENTATION: &[&str] = &["graphics", "position", "offset", "dimension", "fill", "line", "font"];

/// PNML subset: `place`, `transition` (with `guard` attribute in infix text
/// syntax), `arc`, `initialMarking`, `inscription`, `finalmarkings`, and a
/// `variables` block of `<variable type=".." init=".."><name>x</name></variable>`.
/// A transition is silent when it has no name or is tagged `invisible="true"`
/// (or with the `$invisible$` tool-specific activity).
pub fn from_pnml_str(text: &str) -> Result<Dpn, ModelError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| fmt_err(format!("invalid XML: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "pnml" {
        return Err(fmt_err("root element must be <pnml>"));
    }
    let net = root
        .children()
        .find(|n| n.has_tag_name("net"))
        .ok_or_else(|| fmt_err("missing <net> element"))?;
    let mut b = DpnBuilder::new();
    let mut final_seen = false;
    walk_pnml(net, &mut b, &mut final_seen)?;
    b.build()
}

fn text_child(node: roxmltree::Node) -> Option<String> {
    node.children().find(|c| c.has_tag_name("text")).and_then(|t| t.text()).map(|s| s.trim().to_string())
}

fn name_of(node: roxmltree::Node) -> Option<String> {
    let name = node.children().find(|c| c.has_tag_name("name"))?;
    text_child(name).or_else(|| name.text().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()))
}

fn pos(node: roxmltree::Node) -> String {
    let p = node.document().text_pos_at(node.range().start);
    format!("line {}", p.row)
}

fn walk_pnml(node: roxmltree::Node, b: &mut DpnBuilder, final_seen: &mut bool) -> Result<(), ModelError> {
    for child in node.children().filter(|c| c.is_element()) {
        let tag = child.tag_name().name();
        match tag {
            "page" => walk_pnml(child, b, final_seen)?,
            "name" | "toolspecific" => {}
            t if PRESENTATION.contains(&t) => {}
            "place" => {
                let id = child.attribute("id").ok_or_else(|| fmt_err(format!("place without id at {}", pos(child))))?;
                b.places.push(id.to_string());
                for sub in child.children().filter(|c| c.is_element()) {
                    match sub.tag_name().name() {
                        "initialMarking" => {
                            let k = text_child(sub)
                                .and_then(|s| s.parse::<u64>().ok())
                                .ok_or_else(|| fmt_err(format!("bad initial marking at {}", pos(sub))))?;
                            if k > 0 {
                                b.initial.push((id.to_string(), k));
                            }
                        }
                        "name" | "toolspecific" => {}
                        t if PRESENTATION.contains(&t) => {}
                        other => return Err(fmt_err(format!("unsupported PNML element <{other}> at {}", pos(sub)))),
                    }
                }
            }
            "transition" => {
                let id = child
                    .attribute("id")
                    .ok_or_else(|| fmt_err(format!("transition without id at {}", pos(child))))?;
                let invisible = child.attribute("invisible").is_some_and(|v| v == "true")
                    || child
                        .children()
                        .any(|c| c.has_tag_name("toolspecific") && c.attribute("activity") == Some("$invisible$"));
                let label = if invisible { None } else { name_of(child) };
                let guard = match child.attribute("guard") {
                    Some(text) => Expr::parse_text(text)
                        .map_err(|source| ModelError::Guard { transition: id.to_string(), source })?,
                    None => Expr::truth(),
                };
                for sub in child.children().filter(|c| c.is_element()) {
                    let t = sub.tag_name().name();
                    if t != "name" && t != "toolspecific" && !PRESENTATION.contains(&t) {
                        return Err(fmt_err(format!("unsupported PNML element <{t}> at {}", pos(sub))));
                    }
                }
                b.transitions.push((id.to_string(), label, guard));
            }
            "arc" => {
                let (Some(s), Some(t)) = (child.attribute("source"), child.attribute("target")) else {
                    return Err(fmt_err(format!("arc without source/target at {}", pos(child))));
                };
                let mut weight = 1;
                for sub in child.children().filter(|c| c.is_element()) {
                    match sub.tag_name().name() {
                        "inscription" => {
                            weight = text_child(sub)
                                .and_then(|s| s.parse::<u64>().ok())
                                .ok_or_else(|| fmt_err(format!("bad arc inscription at {}", pos(sub))))?;
                        }
                        "name" | "toolspecific" | "arctype" => {
                            if sub.tag_name().name() == "arctype" && text_child(sub).as_deref() != Some("normal") {
                                return Err(fmt_err(format!("unsupported arc type at {}", pos(sub))));
                            }
                        }
                        t if PRESENTATION.contains(&t) => {}
                        other => return Err(fmt_err(format!("unsupported PNML element <{other}> at {}", pos(sub)))),
                    }
                }
                b.arcs.push((s.to_string(), t.to_string(), weight));
            }
            "finalmarkings" => {
                for m in child.children().filter(|c| c.is_element()) {
                    if !m.has_tag_name("marking") {
                        return Err(fmt_err(format!("unexpected <{}> in finalmarkings", m.tag_name().name())));
                    }
                    if *final_seen {
                        return Err(fmt_err("multiple final markings are not supported"));
                    }
                    *final_seen = true;
                    for p in m.children().filter(|c| c.has_tag_name("place")) {
                        let idref = p.attribute("idref").ok_or_else(|| fmt_err("final marking place without idref"))?;
                        let k = text_child(p).and_then(|s| s.parse::<u64>().ok()).unwrap_or(0);
                        if k > 0 {
                            b.final_marking.push((idref.to_string(), k));
                        }
                    }
                }
            }
            "variables" => {
                for v in child.children().filter(|c| c.is_element()) {
                    if !v.has_tag_name("variable") {
                        return Err(fmt_err(format!("unexpected <{}> in variables", v.tag_name().name())));
                    }
                    let name = name_of(v)
                        .or_else(|| v.attribute("name").map(str::to_string))
                        .ok_or_else(|| fmt_err(format!("variable without name at {}", pos(v))))?;
                    let ty_name = v.attribute("type").unwrap_or("");
                    let ty = VarType::parse(ty_name)
                        .or(match ty_name {
                            "java.lang.Boolean" => Some(VarType::Bool),
                            "java.lang.Integer" | "java.lang.Long" => Some(VarType::Int),
                            "java.lang.Double" | "java.lang.Float" => Some(VarType::Rat),
                            "java.lang.String" => Some(VarType::Str),
                            _ => None,
                        })
                        .ok_or_else(|| fmt_err(format!("variable `{name}` has unsupported type `{ty_name}`")))?;
                    let init = match v.attribute("init") {
                        Some(text) => {
                            let json = match ty {
                                VarType::Str => Json::String(text.to_string()),
                                VarType::Bool => Json::Bool(text == "true"),
                                _ => Json::String(text.to_string()),
                            };
                            let parsed = if ty == VarType::Int {
                                text.trim().parse::<i64>().ok().map(Value::Int)
                            } else {
                                Value::from_json(&json, Some(ty))
                            };
                            parsed.ok_or(ModelError::InitType(name.clone(), ty))?
                        }
                        None => default_value(ty),
                    };
                    b.variables.push((name, ty, init));
                }
            }
            other => return Err(fmt_err(format!("unsupported PNML element <{other}> at {}", pos(child)))),
        }
    }
    Ok(())
}

fn default_value(ty: VarType) -> Value {
    match ty {
        VarType::Bool => Value::Bool(false),
        VarType::Int => Value::Int(0),
        VarType::Rat => Value::Rat(num_traits::Zero::zero()),
        VarType::Str => Value::Str(String::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpn::fixtures::example_net;

    #[test]
    fn json_round_trip() {
        let net = example_net();
        let text = serde_json::to_string(&to_json(&net)).unwrap();
        assert_eq!(from_json_str(&text).unwrap(), net);
    }

    #[test]
    fn json_errors() {
        assert!(from_json_str("[]").is_err());
        assert!(from_json_str(r#"{"places":["p"],"transitions":[{"id":"t","guard":["?"]}],"arcs":[]}"#).is_err());
        assert!(from_json_str(r#"{"places":["p"],"transitions":[{"id":"t"}],"arcs":[],"extra":1}"#).is_err());
        let ok = from_json_str(r#"{"places":["p"],"transitions":[{"id":"t","label":null}],"arcs":[{"from":"p","to":"t"}]}"#)
            .unwrap();
        assert!(ok.transition(0).is_silent());
        assert!(ok.transition(0).guard.is_trivially_true());
    }

    const PNML: &str = r#"<?xml version="1.0"?>
<pnml>
  <net id="n" type="http://www.pnml.org/version-2009/grammar/ptnet">
    <page id="pg">
      <place id="p0"><name><text>p0</text></name><initialMarking><text>1</text></initialMarking></place>
      <place id="p1"><graphics><position x="1" y="2"/></graphics></place>
      <transition id="a" guard="x' &gt;= 0"><name><text>a</text></name></transition>
      <transition id="tau"><toolspecific tool="ProM" version="6.4" activity="$invisible$"/></transition>
      <arc id="r1" source="p0" target="a"><inscription><text>1</text></inscription></arc>
      <arc id="r2" source="a" target="p1"/>
      <arc id="r3" source="p1" target="tau"/>
      <arc id="r4" source="tau" target="p1"/>
    </page>
    <finalmarkings><marking><place idref="p1"><text>1</text></place></marking></finalmarkings>
    <variables><variable type="java.lang.Double" init="0"><name>x</name></variable></variables>
  </net>
</pnml>"#;

    #[test]
    fn reads_pnml_subset() {
        let net = from_pnml_str(PNML).unwrap();
        assert_eq!(net.places(), ["p0", "p1"]);
        assert_eq!(net.transition(0).label.as_deref(), Some("a"));
        assert!(net.transition(1).is_silent());
        assert_eq!(net.transition(0).writes().len(), 1);
        assert_eq!(net.final_marking(), &vec![0, 1]);
        assert_eq!(net.variable("x").unwrap().ty, VarType::Rat);
    }

    #[test]
    fn pnml_outside_subset_is_an_error() {
        let bad = PNML.replace("<page id=\"pg\">", "<page id=\"pg\"><referencePlace id=\"rp\" ref=\"p0\"/>");
        let err = from_pnml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("referencePlace"), "{err}");
    }
}
