//! Rank-one cutting and stacking with exact rational geometry.
//!
//! Layout: stage 1 is the unit interval `[0, 1)`. At every stage each level of
//! the current tower is cut into `r` equal pieces, column `c` being the `c`-th
//! piece of every level, and the spacer levels of a stage are appended to the
//! right of the space built so far, column by column. Consequently the tower
//! `X_j` is always `[0, h_j w_j)` with `w_j = 1 / (r_1 ⋯ r_{j-1})`, and every
//! level of stage `j` is one of the slots `[k w_j, (k + 1) w_j)`.
//!
//! `T` lifts each level to the one above it; on the top level of the last
//! stage built it is not yet defined. Queries report unsettled parts instead
//! of silently extending; extension is an explicit call.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::caps::Caps;
use crate::entropy::LengthRule;
use crate::error::{invalid, Error, Result};
use crate::interval::IntervalSet;
use crate::rational::{ceil_int, floor_int, fmt_q, Q};

/// One cutting step: `cuts` columns with `spacers[i]` new levels above column `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StageParams {
    pub cuts: u64,
    pub spacers: Vec<u64>,
}

impl StageParams {
    pub fn new(cuts: u64, spacers: Vec<u64>) -> Result<Self> {
        let s = Self { cuts, spacers };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(cuts: u64, spacer: u64) -> Self {
        Self { cuts, spacers: vec![spacer; cuts as usize] }
    }

    fn validate(&self) -> Result<()> {
        if self.cuts < 2 {
            return Err(invalid(format!("a stage needs at least 2 cuts, got {}", self.cuts)));
        }
        if self.spacers.len() as u64 != self.cuts {
            return Err(invalid(format!("{} spacer counts for {} columns", self.spacers.len(), self.cuts)));
        }
        Ok(())
    }

    fn spacer_total(&self) -> Option<u64> {
        self.spacers.iter().try_fold(0u64, |acc, &s| acc.checked_add(s))
    }
}

/// Parameters for stages `1..J`: `J - 1` cutting steps after `h_1 = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RankOneParams {
    stages: Vec<StageParams>,
}

impl RankOneParams {
    pub fn new(stages: Vec<StageParams>) -> Result<Self> {
        stages.iter().try_for_each(StageParams::validate)?;
        Ok(Self { stages })
    }

    /// Dyadic odometer: two cuts, no spacers.
    pub fn odometer(stage_count: usize) -> Self {
        Self { stages: vec![StageParams::uniform(2, 0); stage_count.saturating_sub(1)] }
    }

    pub fn stages(&self) -> &[StageParams] {
        &self.stages
    }

    /// `J`.
    pub fn stage_count(&self) -> usize {
        self.stages.len() + 1
    }

    /// One `stage r=<cuts> s=<s1>,<s2>,…` line per step; `#` starts a comment.
    pub fn to_text(&self) -> String {
        self.stages
            .iter()
            .map(|s| {
                let sp: Vec<String> = s.spacers.iter().map(u64::to_string).collect();
                format!("stage r={} s={}\n", s.cuts, sp.join(","))
            })
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut stages = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: n + 1, msg: msg.to_string() };
            let mut words = line.split_whitespace();
            if words.next() != Some("stage") {
                return Err(err("expected `stage`"));
            }
            let (mut cuts, mut spacers) = (None, None);
            for w in words {
                match w.split_once('=') {
                    Some(("r", v)) => cuts = Some(v.parse::<u64>().map_err(|_| err("bad r"))?),
                    Some(("s", v)) => {
                        spacers = Some(
                            v.split(',')
                                .map(|x| x.trim().parse::<u64>())
                                .collect::<std::result::Result<Vec<_>, _>>()
                                .map_err(|_| err("bad s"))?,
                        )
                    }
                    _ => return Err(err("expected r=… or s=…")),
                }
            }
            let cuts = cuts.ok_or_else(|| err("missing r"))?;
            let spacers = spacers.unwrap_or_else(|| vec![0; cuts as usize]);
            stages.push(StageParams::new(cuts, spacers).map_err(|e| err(&e.to_string()))?);
        }
        Ok(Self { stages })
    }
}

/// Rule producing further stages when a construction is extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageRule {
    /// `s_j(i) = L(j) h_j + 1` with `cuts` columns.
    Margin { length: LengthRule, cuts: u64 },
    /// Fixed stage repeated.
    Repeat(StageParams),
}

impl StageRule {
    pub fn next(&self, j: u64, height: u64) -> Result<StageParams> {
        match self {
            StageRule::Margin { length, cuts } => {
                let l = length.length(j).ok_or_else(|| invalid(format!("no L for j = {j}")))?;
                let s = l
                    .checked_mul(height)
                    .and_then(|v| v.checked_add(1))
                    .ok_or_else(|| Error::CapExceeded(format!("spacer count overflows at stage {j}")))?;
                StageParams::new(*cuts, vec![s; *cuts as usize])
            }
            StageRule::Repeat(p) => {
                p.validate()?;
                Ok(p.clone())
            }
        }
    }
}

/// `s_j(i) = L(j) h_j + 1` for `j = 1..J-1`, heights chained through the recurrence.
pub fn spacer_params_for(
    length: impl Fn(u64) -> Option<u64>,
    cuts: impl Fn(u64) -> Option<u64>,
    stage_count: usize,
) -> Result<RankOneParams> {
    let mut stages = Vec::new();
    let mut h: u64 = 1;
    for j in 1..stage_count as u64 {
        let l = length(j).filter(|l| *l > 0).ok_or_else(|| invalid(format!("L({j}) must be a positive integer")))?;
        let r = cuts(j).ok_or_else(|| invalid(format!("no cut count for j = {j}")))?;
        let s = l
            .checked_mul(h)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| Error::CapExceeded(format!("spacer count overflows at stage {j}")))?;
        let stage = StageParams::new(r, vec![s; r as usize])?;
        h = next_height(h, &stage).ok_or_else(|| Error::CapExceeded(format!("height overflows at stage {}", j + 1)))?;
        stages.push(stage);
    }
    Ok(RankOneParams { stages })
}

fn next_height(h: u64, stage: &StageParams) -> Option<u64> {
    stage.cuts.checked_mul(h)?.checked_add(stage.spacer_total()?)
}

/// A built construction: stages `1..=J` and the dynamics settled so far.
#[derive(Clone, PartialEq, Eq)]
pub struct RankOneState {
    params: Vec<StageParams>,
    heights: Vec<u64>,
    /// `r_1 ⋯ r_{j-1}` for stage `j`; widths are the reciprocals.
    scales: Vec<BigInt>,
    /// For each stage, the slot of every level, bottom to top.
    levels: Vec<Vec<u64>>,
    /// Level index of each slot of the last stage.
    slot_level: Vec<u64>,
    caps: Caps,
}

impl fmt::Debug for RankOneState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RankOneState").field("heights", &self.heights).field("params", &self.params).finish()
    }
}

/// Image of a set under `T^n` on its settled part, and the part where `T^n`
/// is not yet defined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialImage {
    pub image: IntervalSet,
    pub unsettled: IntervalSet,
}

pub fn build(params: &RankOneParams) -> Result<RankOneState> {
    build_with_caps(params, Caps::default())
}

pub fn build_with_caps(params: &RankOneParams, caps: Caps) -> Result<RankOneState> {
    let mut state = RankOneState {
        params: Vec::new(),
        heights: vec![1],
        scales: vec![BigInt::one()],
        levels: vec![vec![0]],
        slot_level: vec![0],
        caps,
    };
    for stage in params.stages() {
        state.extend(stage.clone())?;
    }
    Ok(state)
}

impl RankOneState {
    /// `J`.
    pub fn stage_count(&self) -> usize {
        self.heights.len()
    }

    pub fn params(&self) -> RankOneParams {
        RankOneParams { stages: self.params.clone() }
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    /// `h_j`, stages counted from 1.
    pub fn height(&self, j: usize) -> Result<u64> {
        self.check_stage(j)?;
        Ok(self.heights[j - 1])
    }

    fn check_stage(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.stage_count() {
            return Err(invalid(format!("stage {j} outside 1..={}", self.stage_count())));
        }
        Ok(())
    }

    pub fn width(&self, j: usize) -> Result<Q> {
        self.check_stage(j)?;
        Ok(Q::new(BigInt::one(), self.scales[j - 1].clone()))
    }

    /// Base level `B_j = [0, w_j)`.
    pub fn base(&self, j: usize) -> Result<IntervalSet> {
        IntervalSet::interval(Q::zero(), self.width(j)?)
    }

    /// Level `T^i B_j`.
    pub fn level(&self, j: usize, i: u64) -> Result<IntervalSet> {
        let w = self.width(j)?;
        let slot = *self.levels[j - 1]
            .get(i as usize)
            .ok_or_else(|| invalid(format!("level {i} outside tower of height {}", self.heights[j - 1])))?;
        let l = &w * Q::from_integer(slot.into());
        let r = &l + &w;
        IntervalSet::interval(l, r)
    }

    /// `X_j = ⋃_{i < h_j} T^i B_j`.
    pub fn tower_set(&self, j: usize) -> Result<IntervalSet> {
        let m = self.tower_measure(j)?;
        IntervalSet::interval(Q::zero(), m)
    }

    /// `μ(X_j) = h_j w_j`.
    pub fn tower_measure(&self, j: usize) -> Result<Q> {
        Ok(self.width(j)? * Q::from_integer(self.height(j)?.into()))
    }

    /// Adds one stage. Everything defined before is kept.
    pub fn extend(&mut self, stage: StageParams) -> Result<()> {
        stage.validate()?;
        if self.stage_count() >= self.caps.max_stages {
            return Err(Error::CapExceeded(format!("stage cap {} reached", self.caps.max_stages)));
        }
        let h = *self.heights.last().expect("stage 1 exists");
        let new_h = next_height(h, &stage)
            .filter(|n| *n <= self.caps.max_levels)
            .ok_or_else(|| Error::CapExceeded(format!("tower height exceeds level cap {}", self.caps.max_levels)))?;
        let r = stage.cuts;
        let prev = self.levels.last().expect("stage 1 exists");
        let mut next = Vec::with_capacity(new_h as usize);
        let mut free = h * r;
        for (c, &spacers) in stage.spacers.iter().enumerate() {
            next.extend(prev.iter().map(|&s| s * r + c as u64));
            next.extend(free..free + spacers);
            free += spacers;
        }
        debug_assert_eq!(free, new_h);
        let mut slot_level = vec![0u64; new_h as usize];
        for (i, &s) in next.iter().enumerate() {
            slot_level[s as usize] = i as u64;
        }
        self.scales.push(self.scales.last().expect("nonempty") * BigInt::from(r));
        self.heights.push(new_h);
        self.levels.push(next);
        self.slot_level = slot_level;
        self.params.push(stage);
        Ok(())
    }

    /// Extends with `rule` until `T^n` is settled on `set`.
    pub fn extend_until_settled(&mut self, set: &IntervalSet, n: i64, rule: &StageRule) -> Result<()> {
        loop {
            if self.image_partial(set, n).unsettled.is_empty() {
                return Ok(());
            }
            let j = self.stage_count() as u64;
            let next = rule.next(j, *self.heights.last().expect("nonempty"))?;
            self.extend(next)?;
        }
    }

    fn final_scale(&self) -> &BigInt {
        self.scales.last().expect("nonempty")
    }

    fn final_height(&self) -> u64 {
        *self.heights.last().expect("nonempty")
    }

    /// Slot reached from slot `k` by `T^n`, if settled.
    fn target_slot(&self, k: u64, n: i64) -> Option<u64> {
        let level = *self.slot_level.get(k as usize)? as i64;
        let target = level.checked_add(n)?;
        if target < 0 || target as u64 >= self.final_height() {
            return None;
        }
        Some(self.levels.last().expect("nonempty")[target as usize])
    }

    /// `T^n` of a point, if settled there.
    pub fn map_point(&self, x: &Q, n: i64) -> Option<Q> {
        if n == 0 {
            return Some(x.clone());
        }
        let d = Q::from_integer(self.final_scale().clone());
        let scaled = x * &d;
        let k = floor_int(&scaled);
        if k < BigInt::zero() {
            return None;
        }
        let k = k.to_u64()?;
        let t = self.target_slot(k, n)?;
        let shift = Q::from_integer(BigInt::from(t) - BigInt::from(k));
        Some((scaled + shift) / d)
    }

    /// Image of `set` under `T^n` where settled, plus the unsettled remainder.
    pub fn image_partial(&self, set: &IntervalSet, n: i64) -> PartialImage {
        if n == 0 {
            return PartialImage { image: set.clone(), unsettled: IntervalSet::empty() };
        }
        let d = Q::from_integer(self.final_scale().clone());
        let total = self.final_height();
        let mut whole: Vec<u64> = Vec::new();
        let mut pieces: Vec<(Q, Q)> = Vec::new();
        let mut unsettled: Vec<(Q, Q)> = Vec::new();
        let zero = Q::zero();
        let top = Q::from_integer(total.into());
        for (l, r) in set.intervals() {
            // slot units
            let (a, b) = (l * &d, r * &d);
            if a < zero {
                unsettled.push((l.clone(), std::cmp::min(r, &zero).clone()));
            }
            if b > top {
                let from = std::cmp::max(a.clone(), top.clone()) / &d;
                unsettled.push((from, r.clone()));
            }
            let a = std::cmp::max(a, zero.clone());
            let b = std::cmp::min(b, top.clone());
            if a >= b {
                continue;
            }
            let first = floor_int(&a).to_u64().expect("inside tower");
            let last = ceil_int(&b).to_u64().expect("inside tower");
            for k in first..last {
                let kq = Q::from_integer(k.into());
                let k1 = Q::from_integer((k + 1).into());
                let full = a <= kq && k1 <= b;
                match self.target_slot(k, n) {
                    Some(t) if full => whole.push(t),
                    Some(t) => {
                        let lo = std::cmp::max(&a, &kq).clone();
                        let hi = std::cmp::min(&b, &k1).clone();
                        let shift = Q::from_integer(BigInt::from(t) - BigInt::from(k));
                        pieces.push(((lo + &shift) / &d, (hi + &shift) / &d));
                    }
                    None => {
                        let lo = std::cmp::max(&a, &kq).clone();
                        let hi = std::cmp::min(&b, &k1).clone();
                        unsettled.push((lo / &d, hi / &d));
                    }
                }
            }
        }
        whole.sort_unstable();
        let mut runs: Vec<(Q, Q)> = Vec::new();
        let mut iter = whole.into_iter().peekable();
        while let Some(start) = iter.next() {
            let mut end = start;
            while iter.peek() == Some(&(end + 1)) {
                end = iter.next().expect("peeked");
            }
            runs.push((Q::from_integer(start.into()) / &d, Q::from_integer((end + 1).into()) / &d));
        }
        runs.extend(pieces);
        PartialImage { image: IntervalSet::from_union(runs), unsettled: IntervalSet::from_union(unsettled) }
    }

    /// Exact `T^n S`; fails when `T^n` is not settled on all of `S`.
    pub fn image_of_set(&self, set: &IntervalSet, n: i64) -> Result<IntervalSet> {
        let p = self.image_partial(set, n);
        if p.unsettled.is_empty() {
            Ok(p.image)
        } else {
            Err(Error::NotSettled { power: n, unsettled: fmt_q(&p.unsettled.measure()) })
        }
    }
}

/// Outcome of the translate-disjointness check for `X_j, T^{h_j} X_j, …, T^{L h_j} X_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointnessReport {
    pub j: usize,
    pub length: u64,
    pub height: u64,
    pub disjoint: bool,
    /// First overlapping pair `(m, m')` of multipliers, when not disjoint.
    pub overlap: Option<(u64, u64)>,
}

/// Exact pairwise disjointness of `T^{m h_j} X_j` for `m = 0..=L`.
///
/// An overlap among the settled parts of the translates is a definitive
/// `false`; otherwise every translate must be fully settled.
pub fn verify_translate_disjointness(state: &RankOneState, j: usize, length: u64) -> Result<DisjointnessReport> {
    let h = state.height(j)?;
    let tower = state.tower_set(j)?;
    let mut images = Vec::with_capacity(length as usize + 1);
    let mut unsettled = Q::zero();
    for m in 0..=length {
        let n = m
            .checked_mul(h)
            .and_then(|v| i64::try_from(v).ok())
            .ok_or_else(|| Error::CapExceeded("translate power overflows".into()))?;
        let p = state.image_partial(&tower, n);
        unsettled += p.unsettled.measure();
        images.push(p.image);
    }
    let sum: Q = images.iter().map(IntervalSet::measure).sum();
    let union = images.iter().fold(IntervalSet::empty(), |acc, s| acc.union(s));
    let overlap = if union.measure() == sum {
        None
    } else {
        (0..images.len())
            .flat_map(|a| (a + 1..images.len()).map(move |b| (a, b)))
            .find(|&(a, b)| !images[a].is_disjoint(&images[b]))
            .map(|(a, b)| (a as u64, b as u64))
    };
    if overlap.is_none() && !unsettled.is_zero() {
        return Err(Error::NotSettled { power: (length * h) as i64, unsettled: fmt_q(&unsettled) });
    }
    Ok(DisjointnessReport { j, length, height: h, disjoint: overlap.is_none(), overlap })
}
