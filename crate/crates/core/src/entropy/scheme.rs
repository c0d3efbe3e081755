use std::collections::{BTreeMap, HashSet};
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// How the number of iterates `L(j)` depends on the scheme index `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LengthRule {
    Constant(u64),
    /// `L(j) = j`.
    Identity,
    /// `L(j) = factor * j`.
    Linear(u64),
    Table(BTreeMap<u64, u64>),
}

impl LengthRule {
    pub fn length(&self, j: u64) -> Option<u64> {
        match self {
            LengthRule::Constant(l) => Some(*l),
            LengthRule::Identity => Some(j),
            LengthRule::Linear(c) => c.checked_mul(j),
            LengthRule::Table(t) => t.get(&j).copied(),
        }
    }
}

impl FromStr for LengthRule {
    type Err = Error;

    /// `j`, `3j`, a constant like `4`, or a table `1:2,2:5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "j" {
            return Ok(LengthRule::Identity);
        }
        if let Some(c) = s.strip_suffix('j') {
            let c = c.trim().trim_end_matches('*').trim();
            return c
                .parse()
                .map(LengthRule::Linear)
                .map_err(|_| invalid(format!("bad length rule `{s}`")));
        }
        if s.contains(':') {
            let mut t = BTreeMap::new();
            for pair in s.split(',') {
                let (j, l) = pair
                    .split_once(':')
                    .ok_or_else(|| invalid(format!("bad table entry `{pair}`")))?;
                let j: u64 = j.trim().parse().map_err(|_| invalid(format!("bad j in `{pair}`")))?;
                let l: u64 = l.trim().parse().map_err(|_| invalid(format!("bad L in `{pair}`")))?;
                t.insert(j, l);
            }
            return Ok(LengthRule::Table(t));
        }
        s.parse()
            .map(LengthRule::Constant)
            .map_err(|_| invalid(format!("bad length rule `{s}`")))
    }
}

/// Step of the arithmetic progression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode<'a> {
    /// Step `j`.
    Plain,
    /// Step `h_j`; `heights[j - 1]` is the tower height at stage `j`.
    Tower(&'a [u64]),
}

/// One index set `P_j` with its generator metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSet {
    pub j: u64,
    pub step: u64,
    pub length: u64,
    pub tower: bool,
    elements: Vec<i64>,
}

impl SchemeSet {
    /// Arbitrary finite set; elements must be distinct.
    pub fn from_elements(j: u64, elements: Vec<i64>) -> Result<Self> {
        check_distinct(&elements)?;
        if elements.is_empty() {
            return Err(Error::Empty("index set"));
        }
        Ok(Self { j, step: 0, length: elements.len() as u64, tower: false, elements })
    }

    pub fn elements(&self) -> &[i64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// The family `{P_j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsequenceScheme {
    sets: Vec<SchemeSet>,
}

impl SubsequenceScheme {
    pub fn sets(&self) -> &[SchemeSet] {
        &self.sets
    }

    pub fn get(&self, j: u64) -> Option<&SchemeSet> {
        self.sets.iter().find(|s| s.j == j)
    }
}

pub(crate) fn check_distinct(elements: &[i64]) -> Result<()> {
    let mut seen = HashSet::with_capacity(elements.len());
    for &e in elements {
        if !seen.insert(e) {
            return Err(Error::RepeatedElement(e));
        }
    }
    Ok(())
}

/// `P_j = {step, 2·step, …, L(j)·step}` with `step = j` or `step = h_j`.
pub fn arithmetic_scheme(
    j_values: &[u64],
    length: impl Fn(u64) -> Option<u64>,
    mode: StepMode<'_>,
) -> Result<SubsequenceScheme> {
    if j_values.is_empty() {
        return Err(Error::Empty("j values"));
    }
    let mut sets = Vec::with_capacity(j_values.len());
    for &j in j_values {
        if j == 0 {
            return Err(invalid("scheme index j must be positive"));
        }
        let l = length(j).ok_or_else(|| invalid(format!("no L defined for j = {j}")))?;
        if l == 0 {
            return Err(invalid(format!("L({j}) must be positive")));
        }
        let step = match mode {
            StepMode::Plain => j,
            StepMode::Tower(heights) => *heights
                .get(j as usize - 1)
                .ok_or_else(|| invalid(format!("no tower height for stage {j}")))?,
        };
        if step == 0 {
            return Err(invalid(format!("zero step at j = {j}")));
        }
        let elements = (1..=l)
            .map(|m| {
                m.checked_mul(step)
                    .and_then(|v| i64::try_from(v).ok())
                    .ok_or_else(|| invalid(format!("index overflow at j = {j}")))
            })
            .collect::<Result<Vec<_>>>()?;
        sets.push(SchemeSet { j, step, length: l, tower: matches!(mode, StepMode::Tower(_)), elements });
    }
    Ok(SubsequenceScheme { sets })
}
