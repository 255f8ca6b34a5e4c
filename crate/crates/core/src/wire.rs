//! JSON forms of values, stores, moves and labels, and the line-oriented
//! script and trace formats built on them.
//!
//! Names render as `l3`, `f0`, `k7`; `a3` is accepted for a location on
//! input. Integers are JSON numbers and tuples are arrays, so unit is `[]`.

use std::fmt::Write as _;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::bisim::{Verdict, Witness};
use crate::compose::CompositionReport;
use crate::lang::ResolvedModule;
use crate::nominal::{Name, NameSet};
use crate::sls::{Action, Dir, Label, SystemMove, StoreUpdate};
use crate::store::{Store, StoreValue};
use crate::syntax::Value;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Shape(String),
}

fn shape(msg: impl Into<String>) -> WireError {
    WireError::Shape(msg.into())
}

pub fn parse_name(s: &str) -> Result<Name, WireError> {
    let s2;
    let s = match s.strip_prefix('a') {
        Some(rest) => {
            s2 = format!("l{rest}");
            s2.as_str()
        }
        None => s,
    };
    s.parse().map_err(|_| shape(format!("{s:?} is not a name")))
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(n) => json!(n),
        Value::Name(a) => json!(a.to_string()),
        Value::Tuple(vs) => Json::Array(vs.iter().map(value_to_json).collect()),
    }
}

pub fn value_from_json(j: &Json) -> Result<Value, WireError> {
    match j {
        Json::Number(n) => n.as_i64().map(Value::Int).ok_or_else(|| shape(format!("{n} is not a 64-bit integer"))),
        Json::String(s) => parse_name(s).map(Value::Name),
        Json::Array(vs) => vs.iter().map(value_from_json).collect::<Result<_, _>>().map(Value::Tuple),
        other => Err(shape(format!("{other} is not a value"))),
    }
}

fn store_value_from_json(j: &Json) -> Result<StoreValue, WireError> {
    match value_from_json(j)? {
        Value::Int(n) => Ok(StoreValue::Int(n)),
        Value::Name(a) => Ok(StoreValue::Name(a)),
        Value::Tuple(_) => Err(shape("tuples cannot be stored")),
    }
}

fn store_value_to_json(v: &StoreValue) -> Json {
    value_to_json(&v.to_value())
}

/// The location part of a store as a JSON object.
pub fn store_to_json(s: &Store) -> Json {
    Json::Object(s.locs().iter().map(|(a, v)| (a.to_string(), store_value_to_json(v))).collect())
}

fn update_to_json(s: &StoreUpdate) -> Json {
    Json::Object(s.iter().map(|(a, v)| (a.to_string(), store_value_to_json(v))).collect())
}

fn update_from_json(j: Option<&Json>) -> Result<StoreUpdate, WireError> {
    let Some(j) = j else { return Ok(StoreUpdate::new()) };
    let obj = j.as_object().ok_or_else(|| shape("\"store\" must be an object"))?;
    obj.iter().map(|(k, v)| Ok((parse_name(k)?, store_value_from_json(v)?))).collect()
}

fn action_fields(a: &Action, out: &mut Map<String, Json>) {
    match a {
        Action::Call { f, arg, k } => {
            out.insert("kind".into(), json!("call"));
            out.insert("fn".into(), json!(f.to_string()));
            out.insert("value".into(), value_to_json(arg));
            out.insert("k".into(), json!(k.to_string()));
        }
        Action::Ret { value, k } => {
            out.insert("kind".into(), json!("ret"));
            out.insert("value".into(), value_to_json(value));
            out.insert("k".into(), json!(k.to_string()));
        }
    }
}

fn field<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a Json, WireError> {
    obj.get(key).ok_or_else(|| shape(format!("missing field {key:?}")))
}

fn name_field(obj: &Map<String, Json>, key: &str) -> Result<Name, WireError> {
    let s = field(obj, key)?.as_str().ok_or_else(|| shape(format!("{key:?} must be a string")))?;
    parse_name(s)
}

fn action_from_obj(obj: &Map<String, Json>) -> Result<Action, WireError> {
    let kind = field(obj, "kind")?.as_str().unwrap_or_default();
    let value = value_from_json(field(obj, "value")?)?;
    let k = name_field(obj, "k")?;
    match kind {
        "call" => Ok(Action::Call { f: name_field(obj, "fn")?, arg: value, k }),
        "ret" => Ok(Action::Ret { value, k }),
        other => Err(shape(format!("unknown kind {other:?}"))),
    }
}

pub fn move_to_json(mv: &SystemMove) -> Json {
    let mut obj = Map::new();
    action_fields(&mv.action(), &mut obj);
    obj.insert("store".into(), update_to_json(mv.store()));
    Json::Object(obj)
}

pub fn move_from_json(j: &Json) -> Result<SystemMove, WireError> {
    let obj = j.as_object().ok_or_else(|| shape("a move must be an object"))?;
    let store = update_from_json(obj.get("store"))?;
    Ok(match action_from_obj(obj)? {
        Action::Call { f, arg, k } => SystemMove::Call { f, arg, k, store },
        Action::Ret { value, k } => SystemMove::Ret { value, k, store },
    })
}

fn dir_str(d: Dir) -> &'static str {
    match d {
        Dir::SP => "sp",
        Dir::PS => "ps",
    }
}

pub fn label_to_json(l: &Label) -> Json {
    let mut obj = Map::new();
    obj.insert("dir".into(), json!(dir_str(l.dir)));
    action_fields(&l.action, &mut obj);
    obj.insert("store".into(), store_to_json(&l.store));
    Json::Object(obj)
}

pub fn label_from_json(j: &Json) -> Result<Label, WireError> {
    let obj = j.as_object().ok_or_else(|| shape("a label must be an object"))?;
    let dir = match field(obj, "dir")?.as_str() {
        Some("sp") => Dir::SP,
        Some("ps") => Dir::PS,
        _ => return Err(shape("\"dir\" must be \"sp\" or \"ps\"")),
    };
    let store = update_from_json(obj.get("store"))?;
    if let Some(k) = store.keys().find(|a| !a.is_loc()) {
        return Err(shape(format!("label stores bind locations only, found {k}")));
    }
    Ok(Label { dir, action: action_from_obj(obj)?, store: Store::from_locs(store) })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn at_line<T>(line: usize, r: Result<T, WireError>) -> Result<T, WireError> {
    r.map_err(|e| match e {
        WireError::Shape(message) => WireError::Line { line, message },
        e => e,
    })
}

fn parse_line(line: usize, l: &str) -> Result<Json, WireError> {
    serde_json::from_str(l).map_err(|e| WireError::Line { line, message: e.to_string() })
}

/// Reads a move script. Lines of a JSONL trace are accepted too: program
/// labels and the halt record are skipped, so a trace replays as a script.
pub fn parse_script(text: &str) -> Result<Vec<SystemMove>, WireError> {
    let mut out = Vec::new();
    for (line, l) in lines(text) {
        let j = parse_line(line, l)?;
        if j.get("dir").and_then(Json::as_str) == Some("ps") || j.get("kind").and_then(Json::as_str) == Some("halt") {
            continue;
        }
        out.push(at_line(line, move_from_json(&j))?);
    }
    Ok(out)
}

pub fn format_script(script: &[SystemMove]) -> String {
    script.iter().map(|mv| format!("{}\n", move_to_json(mv))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TraceStyle {
    #[default]
    Text,
    Jsonl,
}

/// A label sequence and, if the run stopped, why.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TraceLog {
    pub labels: Vec<Label>,
    pub halt: Option<String>,
}

impl TraceLog {
    pub fn from_trace(t: &crate::sls::Trace) -> TraceLog {
        TraceLog { labels: t.labels.clone(), halt: t.halted().map(|h| h.to_string()) }
    }

    pub fn format(&self, style: TraceStyle) -> String {
        let mut out = String::new();
        match style {
            TraceStyle::Text => {
                for l in &self.labels {
                    let _ = writeln!(out, "{} {}\n    {{{}}}", l.dir, l.action, l.store);
                }
                if let Some(h) = &self.halt {
                    let _ = writeln!(out, "halt: {h}");
                }
            }
            TraceStyle::Jsonl => {
                for l in &self.labels {
                    let _ = writeln!(out, "{}", label_to_json(l));
                }
                if let Some(h) = &self.halt {
                    let _ = writeln!(out, "{}", json!({"kind": "halt", "reason": h}));
                }
            }
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<TraceLog, WireError> {
        let mut log = TraceLog::default();
        for (line, l) in lines(text) {
            let j = parse_line(line, l)?;
            if j.get("kind").and_then(Json::as_str) == Some("halt") {
                let reason = j.get("reason").and_then(Json::as_str).unwrap_or_default();
                log.halt = Some(reason.to_string());
            } else {
                log.labels.push(at_line(line, label_from_json(&j))?);
            }
        }
        Ok(log)
    }
}

fn names_json(s: &NameSet) -> Json {
    Json::Array(s.iter().map(|n| json!(n.to_string())).collect())
}

pub fn witness_to_json(w: &Witness) -> Json {
    json!({
        "side": w.side,
        "left": w.left.iter().map(label_to_json).collect::<Vec<_>>(),
        "right": w.right.iter().map(label_to_json).collect::<Vec<_>>(),
        "script": w.script.iter().map(move_to_json).collect::<Vec<_>>(),
    })
}

pub fn verdict_to_json(v: &Verdict) -> Json {
    match v {
        Verdict::BisimilarUpTo(d) => json!({ "verdict": "bisimilar", "depth": d }),
        Verdict::Distinguished(w) => json!({ "verdict": "distinguished", "witness": witness_to_json(w) }),
    }
}

pub fn composition_report_to_json(r: &CompositionReport) -> Json {
    json!({
        "holds": r.holds(),
        "states": r.states,
        "edges": r.edges,
        "truncated": r.truncated,
        "lemma": r.lemma,
        "items": r.items,
        "bisim": verdict_to_json(&r.bisim),
    })
}

/// Interface, declared names, initial store and function arities, with
/// the source identifier of each name.
pub fn module_to_json(m: &ResolvedModule) -> Json {
    let symbols: Map<String, Json> = m.symbols.iter().map(|(n, s)| (n.to_string(), json!(s))).collect();
    let defs: Map<String, Json> = m.defs.iter().map(|(f, d)| (f.to_string(), json!({ "arity": d.params.len() }))).collect();
    json!({
        "exports": names_json(&m.exports),
        "imports": names_json(&m.imports),
        "declared": names_json(&m.declared),
        "initStore": store_to_json(&m.init_store),
        "functions": defs,
        "symbols": symbols,
    })
}
