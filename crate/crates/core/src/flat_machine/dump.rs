//! Canonical text dump and JSON export of a [`FlatState`].
//!
//! ```text
//! [operads]
//! operad: f
//! [arity]
//! arity: f->4
//! [foliage]
//! foliage: (1,f)
//! [in]
//! in: f->{1,7,8}
//! [out]
//! out: f->{1}
//! [hat]
//! hat: (3,g)->f
//! [hook]
//! hook: g->f
//! [ghook]
//! ghook: g->f
//! ```
//!
//! Every section header is always written; entries follow the natural order
//! of their keys, so equal states produce identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FlatState, Relations};
use crate::config::Config;
use crate::ids::{OperadId, Position};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DumpError {
    #[error("dump line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("json: {0}")]
    Json(String),
}

pub(crate) const SECTIONS: [(&str, &str); 8] = [
    ("operads", "operad"),
    ("arity", "arity"),
    ("foliage", "foliage"),
    ("in", "in"),
    ("out", "out"),
    ("hat", "hat"),
    ("hook", "hook"),
    ("ghook", "ghook"),
];

pub(crate) fn fmt_set(set: &BTreeSet<Position>) -> String {
    let items: Vec<String> = set.iter().map(Position::to_string).collect();
    format!("{{{}}}", items.join(","))
}

impl FlatState {
    /// Canonical sorted text form.
    pub fn dump(&self) -> String {
        let r = &self.rel;
        let mut out = String::new();
        let mut section = |name: &str, lines: Vec<String>| {
            let _ = writeln!(out, "[{name}]");
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
        };
        section(
            "operads",
            r.my_operads.iter().map(|op| format!("operad: {op}")).collect(),
        );
        section(
            "arity",
            r.arity_op.iter().map(|(op, a)| format!("arity: {op}->{a}")).collect(),
        );
        section(
            "foliage",
            r.foliage.iter().map(|(p, op)| format!("foliage: ({p},{op})")).collect(),
        );
        section(
            "in",
            r.in_op
                .iter()
                .map(|(op, s)| format!("in: {op}->{}", fmt_set(s)))
                .collect(),
        );
        section(
            "out",
            r.out_op
                .iter()
                .map(|(op, s)| format!("out: {op}->{}", fmt_set(s)))
                .collect(),
        );
        section(
            "hat",
            r.g_hat_op
                .iter()
                .map(|((p, hat), root)| format!("hat: ({p},{hat})->{root}"))
                .collect(),
        );
        section(
            "hook",
            r.hook_op.iter().map(|(a, b)| format!("hook: {a}->{b}")).collect(),
        );
        section(
            "ghook",
            r.g_hook_op.iter().map(|(a, b)| format!("ghook: {a}->{b}")).collect(),
        );
        out
    }

    /// Parse a dump back into a state. No invariant is checked; inconsistent
    /// dumps load fine and can be fed to the checker.
    pub fn parse_dump(text: &str, config: Config) -> Result<FlatState, DumpError> {
        parse_sections(text, &SECTIONS, |section, body, line| {
            Ok(Some((section.to_string(), body.to_string(), line)))
        })
        .and_then(|entries| {
            let mut rel = Relations::default();
            for (section, body, line) in entries {
                apply_entry(&mut rel, &section, &body, line)?;
            }
            Ok(FlatState::from_relations(config, rel))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(StateJson::from(&self.rel)).expect("plain data serializes")
    }

    pub fn from_json(text: &str, config: Config) -> Result<FlatState, DumpError> {
        let js: StateJson = serde_json::from_str(text).map_err(|e| DumpError::Json(e.to_string()))?;
        Ok(FlatState::from_relations(config, js.into()))
    }
}

/// Split a sectioned dump into `(section, body, line)` entries. `known`
/// lists `(section header, line prefix)` pairs; `#` comments and blank lines
/// are skipped.
pub(crate) fn parse_sections<T>(
    text: &str,
    known: &[(&str, &str)],
    mut entry: impl FnMut(&str, &str, usize) -> Result<Option<T>, DumpError>,
) -> Result<Vec<T>, DumpError> {
    let mut current: Option<(&str, &str)> = None;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(*known.iter().find(|(s, _)| *s == name).ok_or_else(|| {
                DumpError::Syntax {
                    line: line_no,
                    msg: format!("unknown section [{name}]"),
                }
            })?);
            continue;
        }
        let Some((section, prefix)) = current else {
            return Err(syntax(line_no, "entry before any section header"));
        };
        let (pre, body) = line
            .split_once(':')
            .ok_or_else(|| syntax(line_no, format!("expected `{prefix}: ...`")))?;
        if pre.trim() != prefix {
            return Err(syntax(
                line_no,
                format!("entry `{}` in section [{section}]", pre.trim()),
            ));
        }
        if let Some(t) = entry(section, body.trim(), line_no)? {
            out.push(t);
        }
    }
    Ok(out)
}

fn syntax(line: usize, msg: impl Into<String>) -> DumpError {
    DumpError::Syntax {
        line,
        msg: msg.into(),
    }
}

pub(crate) fn parse_id(s: &str, line: usize) -> Result<OperadId, DumpError> {
    OperadId::new(s.trim()).map_err(|e| syntax(line, e.to_string()))
}

pub(crate) fn parse_pos(s: &str, line: usize) -> Result<Position, DumpError> {
    let v: usize = s
        .trim()
        .parse()
        .map_err(|_| syntax(line, format!("bad position `{}`", s.trim())))?;
    Position::new(v).map_err(|e| syntax(line, e.to_string()))
}

pub(crate) fn parse_arrow(body: &str, line: usize) -> Result<(&str, &str), DumpError> {
    body.split_once("->")
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| syntax(line, format!("expected `->` in `{body}`")))
}

/// `(p,op)`
pub(crate) fn parse_pair(s: &str, line: usize) -> Result<(Position, OperadId), DumpError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| syntax(line, format!("expected `(position,operad)`, got `{s}`")))?;
    let (p, op) = inner
        .split_once(',')
        .ok_or_else(|| syntax(line, format!("expected `(position,operad)`, got `{s}`")))?;
    Ok((parse_pos(p, line)?, parse_id(op, line)?))
}

fn parse_set(s: &str, line: usize) -> Result<BTreeSet<Position>, DumpError> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| syntax(line, format!("expected `{{...}}`, got `{s}`")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_pos(t, line))
        .collect()
}

pub(crate) fn apply_entry(rel: &mut Relations, section: &str, body: &str, line: usize) -> Result<(), DumpError> {
    match section {
        "operads" => {
            rel.my_operads.insert(parse_id(body, line)?);
        }
        "arity" => {
            let (op, a) = parse_arrow(body, line)?;
            let a: usize = a.parse().map_err(|_| syntax(line, format!("bad arity `{a}`")))?;
            rel.arity_op.insert(parse_id(op, line)?, a);
        }
        "foliage" => {
            rel.foliage.insert(parse_pair(body, line)?);
        }
        "in" | "out" => {
            let (op, set) = parse_arrow(body, line)?;
            let target = if section == "in" {
                &mut rel.in_op
            } else {
                &mut rel.out_op
            };
            target.insert(parse_id(op, line)?, parse_set(set, line)?);
        }
        "hat" => {
            let (key, root) = parse_arrow(body, line)?;
            rel.g_hat_op.insert(parse_pair(key, line)?, parse_id(root, line)?);
        }
        "hook" | "ghook" => {
            let (a, b) = parse_arrow(body, line)?;
            let target = if section == "hook" {
                &mut rel.hook_op
            } else {
                &mut rel.g_hook_op
            };
            target.insert(parse_id(a, line)?, parse_id(b, line)?);
        }
        other => unreachable!("section {other} filtered by parse_sections"),
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct HatJson {
    position: Position,
    hat: OperadId,
    root: OperadId,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateJson {
    operads: Vec<OperadId>,
    arity: BTreeMap<OperadId, usize>,
    foliage: Vec<(Position, OperadId)>,
    #[serde(rename = "in")]
    inputs: BTreeMap<OperadId, BTreeSet<Position>>,
    out: BTreeMap<OperadId, BTreeSet<Position>>,
    hat: Vec<HatJson>,
    hook: BTreeMap<OperadId, OperadId>,
    ghook: BTreeMap<OperadId, OperadId>,
}

impl From<&Relations> for StateJson {
    fn from(r: &Relations) -> Self {
        StateJson {
            operads: r.my_operads.iter().cloned().collect(),
            arity: r.arity_op.clone(),
            foliage: r.foliage.iter().cloned().collect(),
            inputs: r.in_op.clone(),
            out: r.out_op.clone(),
            hat: r
                .g_hat_op
                .iter()
                .map(|((p, hat), root)| HatJson {
                    position: *p,
                    hat: hat.clone(),
                    root: root.clone(),
                })
                .collect(),
            hook: r.hook_op.clone(),
            ghook: r.g_hook_op.clone(),
        }
    }
}

impl From<StateJson> for Relations {
    fn from(js: StateJson) -> Self {
        Relations {
            my_operads: js.operads.into_iter().collect(),
            arity_op: js.arity,
            foliage: js.foliage.into_iter().collect(),
            out_op: js.out,
            in_op: js.inputs,
            g_hat_op: js
                .hat
                .into_iter()
                .map(|h| ((h.position, h.hat), h.root))
                .collect(),
            hook_op: js.hook,
            g_hook_op: js.ghook,
        }
    }
}
