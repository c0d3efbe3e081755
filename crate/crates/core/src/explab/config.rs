//! Experiment configuration files.
//!
//! Grammar, one item per line:
//!
//! ```text
//! file  := item*
//! item  := key '=' value
//!        | name '{' item* '}'
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Keys and block names
//! are `[A-Za-z_][A-Za-z0-9_-]*`; a value is the rest of the line, trimmed. A
//! key may repeat where the experiment kind says so (`event`, `pair`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::entropy::LogBase;
use crate::error::{invalid, Error, Result};
use crate::interval::IntervalSet;
use crate::rational::{parse_q, q_from_f64, Q};

/// The experiment kinds, one CLI subcommand each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    MarkovVerify,
    RankoneBuild,
    RankoneDisjoint,
    PoissonMeasure,
    PoissonIndependence,
    Pentropy,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::MarkovVerify,
        Kind::RankoneBuild,
        Kind::RankoneDisjoint,
        Kind::PoissonMeasure,
        Kind::PoissonIndependence,
        Kind::Pentropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::MarkovVerify => "markov-verify",
            Kind::RankoneBuild => "rankone-build",
            Kind::RankoneDisjoint => "rankone-disjoint",
            Kind::PoissonMeasure => "poisson-measure",
            Kind::PoissonIndependence => "poisson-independence",
            Kind::Pentropy => "pentropy",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownKind(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// A parsed block: ordered entries and nested blocks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Block {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
    pub children: Vec<Block>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub fn parse_blocks(text: &str) -> Result<Block> {
    let mut stack = vec![Block::default()];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line, msg };
        if s == "}" {
            if stack.len() == 1 {
                return Err(err("unmatched `}`".into()));
            }
            let done = stack.pop().expect("checked");
            stack.last_mut().expect("root").children.push(done);
        } else if let Some(name) = s.strip_suffix('{') {
            let name = name.trim();
            if !is_ident(name) {
                return Err(err(format!("bad block name `{name}`")));
            }
            stack.push(Block { name: name.to_string(), line, ..Block::default() });
        } else if let Some((k, v)) = s.split_once('=') {
            let key = k.trim();
            if !is_ident(key) {
                return Err(err(format!("bad key `{key}`")));
            }
            let value = v.trim();
            if value.is_empty() {
                return Err(err(format!("`{key}` has no value")));
            }
            stack.last_mut().expect("root").entries.push(Entry { key: key.into(), value: value.into(), line });
        } else {
            return Err(err(format!("expected `key = value`, `name {{` or `}}`, got `{s}`")));
        }
    }
    if stack.len() > 1 {
        let open = stack.last().expect("nonempty");
        return Err(Error::Parse { line: open.line, msg: format!("block `{}` is not closed", open.name) });
    }
    Ok(stack.pop().expect("root"))
}

impl Block {
    fn at(&self, line: usize, msg: String) -> Error {
        Error::Parse { line, msg }
    }

    /// Single value of `key`; repeated keys are an error.
    pub fn get(&self, key: &str) -> Result<Option<&Entry>> {
        let mut it = self.entries.iter().filter(|e| e.key == key);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(self.at(dup.line, format!("`{key}` given more than once")));
        }
        Ok(first)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    pub fn child(&self, name: &str) -> Result<Option<&Block>> {
        let mut it = self.children.iter().filter(|b| b.name == name);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(self.at(dup.line, format!("block `{name}` given more than once")));
        }
        Ok(first)
    }

    /// Rejects keys and blocks outside the allowed lists.
    pub fn check_names(&self, keys: &[&str], blocks: &[&str]) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| !keys.contains(&e.key.as_str())) {
            return Err(self.at(e.line, format!("unknown key `{}` in {}", e.key, self.label())));
        }
        if let Some(b) = self.children.iter().find(|b| !blocks.contains(&b.name.as_str())) {
            return Err(self.at(b.line, format!("unknown block `{}` in {}", b.name, self.label())));
        }
        Ok(())
    }

    fn label(&self) -> String {
        if self.name.is_empty() {
            "the top level".into()
        } else {
            format!("block `{}`", self.name)
        }
    }

    /// Parses the value of `key` with `f`, attaching the line to errors.
    pub fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        match self.get(key)? {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|err| self.at(e.line, format!("`{key}`: {err}"))),
        }
    }

    pub fn parse_or<T>(&self, key: &str, default: T, f: impl Fn(&str) -> Result<T>) -> Result<T> {
        Ok(self.parse_with(key, f)?.unwrap_or(default))
    }

    /// Parses every occurrence of a repeatable key.
    pub fn parse_all<T>(&self, key: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
        self.all(key)
            .map(|e| f(&e.value).map_err(|err| self.at(e.line, format!("`{key}`: {err}"))))
            .collect()
    }

    /// JSON echo: keys map to strings, or arrays of strings when repeated;
    /// nested blocks map to objects (arrays when repeated).
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for e in &self.entries {
            push_json(&mut map, &e.key, Value::String(e.value.clone()));
        }
        for b in &self.children {
            push_json(&mut map, &b.name, b.to_json());
        }
        Value::Object(map)
    }
}

fn push_json(map: &mut Map<String, Value>, key: &str, value: Value) {
    match map.get_mut(key) {
        None => {
            map.insert(key.to_string(), value);
        }
        // arrays only arise from earlier repeats
        Some(Value::Array(items)) => items.push(value),
        Some(existing) => {
            let prev = existing.take();
            *existing = Value::Array(vec![prev, value]);
        }
    }
}

/// A parsed experiment: kind, shared settings and the kind-specific body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub base: LogBase,
    pub samples: Option<u64>,
    pub out: Option<PathBuf>,
    pub body: Block,
}

pub const SHARED_KEYS: [&str; 5] = ["kind", "seed", "base", "samples", "out"];

impl ExperimentConfig {
    /// Defaults for `kind` with an empty body.
    pub fn new(kind: Kind) -> Self {
        Self { kind, seed: 0, base: LogBase::Binary, samples: None, out: None, body: Block::default() }
    }

    /// Parses a file. `kind` from the command line must agree with the file's
    /// `kind` key if both are present.
    pub fn parse(text: &str, kind: Option<Kind>) -> Result<Self> {
        let body = parse_blocks(text)?;
        let file_kind = body.get("kind")?.map(|e| e.value.parse::<Kind>()).transpose()?;
        let kind = match (kind, file_kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(invalid(format!("config is for `{b}`, not `{a}`")));
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(invalid("config has no `kind`")),
        };
        Ok(Self {
            kind,
            seed: body.parse_or("seed", 0, parse_u64)?,
            base: body.parse_or("base", LogBase::Binary, LogBase::from_str)?,
            samples: body.parse_with("samples", parse_u64)?,
            out: body.parse_with("out", |s| Ok(PathBuf::from(s)))?,
            body,
        })
    }

    /// Echo for reports, with command-line overrides folded in.
    pub fn to_json(&self) -> Value {
        let mut echo = match self.body.to_json() {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        for key in SHARED_KEYS {
            echo.remove(key);
        }
        let mut map = Map::new();
        map.insert("kind".into(), Value::String(self.kind.to_string()));
        map.insert("seed".into(), Value::from(self.seed));
        map.insert("base".into(), Value::String(self.base.unit().into()));
        if let Some(s) = self.samples {
            map.insert("samples".into(), Value::from(s));
        }
        map.insert("parameters".into(), Value::Object(echo));
        Value::Object(map)
    }
}

pub fn parse_u64(s: &str) -> Result<u64> {
    let s = s.trim().replace('_', "");
    if let Some((m, e)) = s.split_once("e") {
        let m: u64 = m.parse().map_err(|_| invalid(format!("bad integer `{s}`")))?;
        let e: u32 = e.parse().map_err(|_| invalid(format!("bad integer `{s}`")))?;
        return 10u64.checked_pow(e).and_then(|p| p.checked_mul(m)).ok_or_else(|| invalid(format!("`{s}` overflows")));
    }
    s.parse().map_err(|_| invalid(format!("bad integer `{s}`")))
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| invalid(format!("bad number `{}`", s.trim())))
}

pub fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" => Ok(true),
        "false" | "no" => Ok(false),
        other => Err(invalid(format!("bad boolean `{other}`"))),
    }
}

/// Comma-separated items, empty items dropped.
pub fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

/// `1..6` (inclusive) or a list `1, 3, 5`.
pub fn parse_u64_range(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_u64(a)?, parse_u64(b)?);
        if a > b {
            return Err(invalid(format!("empty range `{}`", s.trim())));
        }
        return Ok((a..=b).collect());
    }
    split_list(s).into_iter().map(parse_u64).collect()
}

/// Sum of terms, each a rational literal or `ln2` with an optional rational
/// factor (`3*ln2`). `ln2` is the exact rational value of the double nearest
/// `ln 2`.
pub fn parse_real(s: &str) -> Result<Q> {
    let mut total = Q::default();
    for term in s.split('+') {
        let term = term.trim();
        let value = match term.split_once('*') {
            Some((c, atom)) => parse_q(c)? * parse_atom(atom)?,
            None => parse_atom(term)?,
        };
        total += value;
    }
    Ok(total)
}

fn parse_atom(s: &str) -> Result<Q> {
    match s.trim() {
        "ln2" => q_from_f64(std::f64::consts::LN_2),
        other => parse_q(other),
    }
}

pub fn parse_real_list(s: &str) -> Result<Vec<Q>> {
    split_list(s).into_iter().map(parse_real).collect()
}

/// Disjoint half-open pieces `l..r`, comma-separated.
pub fn parse_set(s: &str) -> Result<IntervalSet> {
    let pieces = split_list(s)
        .into_iter()
        .map(|p| {
            let (l, r) = p.split_once("..").ok_or_else(|| invalid(format!("expected `l..r`, got `{p}`")))?;
            Ok((parse_real(l)?, parse_real(r)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if pieces.is_empty() {
        return Err(Error::Empty("set"));
    }
    IntervalSet::new(pieces)
}

/// `SET : k ; SET : k ; …`.
pub fn parse_terms(s: &str) -> Result<Vec<(IntervalSet, u64)>> {
    s.split(';')
        .map(|t| {
            let (set, k) = t.rsplit_once(':').ok_or_else(|| invalid(format!("expected `set : count`, got `{}`", t.trim())))?;
            Ok((parse_set(set)?, parse_u64(k)?))
        })
        .collect()
}
