//! Exactly solvable reference systems: Bernoulli shifts and circle rotations.
//!
//! Join laws are indexed by tuples of per-iterate cell indices, first iterate
//! most significant, so exact laws, brute-force oracles and Monte Carlo counts
//! all share one labelling.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::Rng as _;

use crate::entropy::{scheme::check_distinct, LogBase, ProbabilityVector};
use crate::error::{invalid, Error, Result};
use crate::rational::{frac, Q};
use crate::rng;

/// i.i.d. letters with the given masses (the scheme "type").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliScheme {
    letter_masses: ProbabilityVector,
}

impl BernoulliScheme {
    pub fn new(letter_masses: ProbabilityVector) -> Self {
        Self { letter_masses }
    }

    pub fn fair_coin() -> Self {
        Self::new(ProbabilityVector::uniform(2).expect("two cells"))
    }

    pub fn letter_masses(&self) -> &ProbabilityVector {
        &self.letter_masses
    }

    pub fn alphabet_size(&self) -> usize {
        self.letter_masses.len()
    }
}

/// A coarsening of the alphabet: every letter belongs to exactly one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphabetPartition {
    cell_of: Vec<usize>,
    cells: usize,
}

impl AlphabetPartition {
    /// Each group becomes one cell, in order.
    pub fn from_groups(alphabet_size: usize, groups: &[Vec<usize>]) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(Vec::is_empty) {
            return Err(invalid("partition cells must be nonempty"));
        }
        let mut cell_of = vec![None; alphabet_size];
        for (cell, group) in groups.iter().enumerate() {
            for &letter in group {
                let slot = cell_of
                    .get_mut(letter)
                    .ok_or_else(|| invalid(format!("letter {letter} outside alphabet of size {alphabet_size}")))?;
                if slot.replace(cell).is_some() {
                    return Err(invalid(format!("letter {letter} assigned twice")));
                }
            }
        }
        let cell_of = cell_of
            .into_iter()
            .enumerate()
            .map(|(letter, c)| c.ok_or(Error::UnmappedLetter(letter)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cell_of, cells: groups.len() })
    }

    pub fn identity(alphabet_size: usize) -> Self {
        Self { cell_of: (0..alphabet_size).collect(), cells: alphabet_size }
    }

    /// Two cells: `letters` versus the rest.
    pub fn two_cell(alphabet_size: usize, letters: &[usize]) -> Result<Self> {
        let rest: Vec<usize> = (0..alphabet_size).filter(|l| !letters.contains(l)).collect();
        Self::from_groups(alphabet_size, &[letters.to_vec(), rest])
    }

    pub fn cell(&self, letter: usize) -> usize {
        self.cell_of[letter]
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn alphabet_size(&self) -> usize {
        self.cell_of.len()
    }

    /// Common refinement; cells are the occurring pairs in lexicographic order.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.alphabet_size() != other.alphabet_size() {
            return Err(invalid("joined partitions must share an alphabet"));
        }
        let pairs: BTreeSet<(usize, usize)> =
            (0..self.alphabet_size()).map(|l| (self.cell(l), other.cell(l))).collect();
        let index: BTreeMap<_, _> = pairs.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let cell_of = (0..self.alphabet_size()).map(|l| index[&(self.cell(l), other.cell(l))]).collect();
        Ok(Self { cell_of, cells: pairs.len() })
    }

    /// True when every cell is a single letter.
    pub fn is_discrete(&self) -> bool {
        self.cells == self.alphabet_size()
    }
}

/// Cell masses of the factor partition.
pub fn factor_partition(scheme: &BernoulliScheme, grouping: &AlphabetPartition) -> Result<ProbabilityVector> {
    if grouping.alphabet_size() != scheme.alphabet_size() {
        return Err(Error::UnmappedLetter(grouping.alphabet_size().min(scheme.alphabet_size())));
    }
    let mut masses = vec![Q::zero(); grouping.cells()];
    for (letter, m) in scheme.letter_masses().masses().iter().enumerate() {
        masses[grouping.cell(letter)] += m;
    }
    ProbabilityVector::new(masses)
}

/// Law of `⋁_{p ∈ P} S^{-p} ξ` for the shift: coordinates are independent, so
/// this is the `|P|`-fold product of the factor law.
pub fn bernoulli_join_law(
    scheme: &BernoulliScheme,
    xi: &AlphabetPartition,
    index_set: &[i64],
) -> Result<ProbabilityVector> {
    if index_set.is_empty() {
        return Err(Error::Empty("index set"));
    }
    check_distinct(index_set)?;
    Ok(factor_partition(scheme, xi)?.power(index_set.len()))
}

/// `window_length` i.i.d. letters. Deterministic in `seed`.
pub fn bernoulli_sample_window(scheme: &BernoulliScheme, window_length: usize, seed: u64) -> Result<Vec<usize>> {
    if window_length == 0 {
        return Err(invalid("window length must be at least 1"));
    }
    let cumulative: Vec<f64> = scheme
        .letter_masses()
        .to_f64()
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m;
            Some(*acc)
        })
        .collect();
    let last = cumulative.len() - 1;
    let mut rng = rng::seeded(seed);
    Ok((0..window_length)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// Counts of cell tuples `(ξ(x_{t+p}))_{p ∈ P}` over non-overlapping windows
/// of a sampled sequence.
pub fn empirical_join_counts(
    sequence: &[usize],
    xi: &AlphabetPartition,
    index_set: &[i64],
) -> Result<BTreeMap<Vec<usize>, u64>> {
    check_distinct(index_set)?;
    let lo = *index_set.iter().min().ok_or(Error::Empty("index set"))?;
    let hi = *index_set.iter().max().expect("nonempty");
    let span = (hi - lo + 1) as usize;
    let mut counts = BTreeMap::new();
    let mut start = 0;
    while start + span <= sequence.len() {
        let label: Vec<usize> = index_set
            .iter()
            .map(|&p| xi.cell(sequence[start + (p - lo) as usize]))
            .collect();
        *counts.entry(label).or_insert(0) += 1;
        start += span;
    }
    Ok(counts)
}

/// Rotation `x ↦ x + α mod 1` with a partition of the circle into arcs.
///
/// Arc `k` is `[c_k, c_{k+1})`; the last arc wraps through `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSystem {
    angle: Q,
    cuts: Vec<Q>,
}

impl RotationSystem {
    pub fn new(angle: Q, cuts: Vec<Q>) -> Result<Self> {
        if angle < Q::zero() || angle >= Q::one() {
            return Err(invalid("rotation angle must lie in [0, 1)"));
        }
        if cuts.is_empty() {
            return Err(Error::Empty("cut points"));
        }
        if cuts.iter().any(|c| *c < Q::zero() || *c >= Q::one()) {
            return Err(invalid("cut points must lie in [0, 1)"));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("cut points must be strictly increasing"));
        }
        Ok(Self { angle, cuts })
    }

    pub fn angle(&self) -> &Q {
        &self.angle
    }

    pub fn cuts(&self) -> &[Q] {
        &self.cuts
    }

    /// Arc containing `y ∈ [0, 1)`.
    pub fn arc_of(&self, y: &Q) -> usize {
        match self.cuts.partition_point(|c| c <= y) {
            0 => self.cuts.len() - 1,
            k => k - 1,
        }
    }

    pub fn arc_masses(&self) -> ProbabilityVector {
        let n = self.cuts.len();
        let masses = (0..n)
            .map(|k| {
                let next = if k + 1 < n { self.cuts[k + 1].clone() } else { &self.cuts[0] + Q::one() };
                next - &self.cuts[k]
            })
            .collect();
        ProbabilityVector::new(masses).expect("arcs tile the circle")
    }
}

/// Atoms of `⋁_{p ∈ P} R^{-p} ξ` with their tuple labels, in label order.
///
/// The cut points of `R^{-p} ξ` are the original cuts moved by `-pα`; the
/// merged cut set splits the circle into arcs, and arcs carrying the same
/// label tuple belong to the same atom.
pub fn rotation_join_cells(rot: &RotationSystem, index_set: &[i64]) -> Result<Vec<(Vec<usize>, Q)>> {
    if index_set.is_empty() {
        return Err(Error::Empty("index set"));
    }
    let shifts: Vec<Q> = index_set.iter().map(|&p| frac(&(rot.angle() * Q::from_integer(p.into())))).collect();
    let points: BTreeSet<Q> = shifts
        .iter()
        .flat_map(|s| rot.cuts().iter().map(move |c| frac(&(c - s))))
        .collect();
    let points: Vec<Q> = points.into_iter().collect();
    let mut atoms: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    for (i, left) in points.iter().enumerate() {
        let length = match points.get(i + 1) {
            Some(right) => right - left,
            None => &points[0] + Q::one() - left,
        };
        let label: Vec<usize> = shifts.iter().map(|s| rot.arc_of(&frac(&(left + s)))).collect();
        *atoms.entry(label).or_insert_with(Q::zero) += length;
    }
    Ok(atoms.into_iter().collect())
}

pub fn rotation_join_law(rot: &RotationSystem, index_set: &[i64]) -> Result<ProbabilityVector> {
    ProbabilityVector::new(rotation_join_cells(rot, index_set)?.into_iter().map(|(_, m)| m).collect())
}

/// Smallest `L ≤ max_length` with `H(⋁_{m=1}^{L} R^{-mj} ξ) / L < 1/j`, if any.
pub fn search_length(rot: &RotationSystem, j: u64, base: LogBase, max_length: u64) -> Result<Option<u64>> {
    if j == 0 {
        return Err(invalid("j must be positive"));
    }
    for l in 1..=max_length {
        let set: Vec<i64> = (1..=l).map(|m| (m * j) as i64).collect();
        let h = crate::entropy::partition_entropy(&rotation_join_law(rot, &set)?, base) / l as f64;
        if h < 1.0 / j as f64 {
            return Ok(Some(l));
        }
    }
    Ok(None)
}
