//! Partition entropy and the normalized join entropy along index schemes.
//!
//! Masses are kept as exact rationals; the only floating-point step is the
//! final logarithm sum. `0 · log 0` is taken to be `0`.

mod estimate;
pub(crate) mod scheme;

pub use estimate::{bootstrap_std_error, plugin_entropy_estimate, Correction};
pub use scheme::{arithmetic_scheme, LengthRule, SchemeSet, StepMode, SubsequenceScheme};

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rational::{fmt_q, to_f64, Q};

/// Logarithm base for entropy values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Nats.
    Natural,
    /// Bits.
    #[default]
    Binary,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Binary => x.log2(),
        }
    }

    /// Converts a value measured in nats into this base.
    pub fn from_nats(self, h: f64) -> f64 {
        match self {
            LogBase::Natural => h,
            LogBase::Binary => h / std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Natural => "nat",
            LogBase::Binary => "bit",
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nat" | "nats" | "natural" | "e" => Ok(LogBase::Natural),
            "bit" | "bits" | "binary" | "2" => Ok(LogBase::Binary),
            other => Err(invalid(format!("unknown log base `{other}`"))),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.unit())
    }
}

/// Anything with a finite list of cell masses whose entropy can be taken.
pub trait Law {
    fn entropy(&self, base: LogBase) -> f64;
    fn cells(&self) -> usize;
}

/// Cell measures of a finite partition, exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProbabilityVector {
    masses: Vec<Q>,
}

impl ProbabilityVector {
    pub fn new(masses: Vec<Q>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        if let Some((index, m)) = masses.iter().enumerate().find(|(_, m)| m.is_negative()) {
            return Err(Error::NegativeMass { index, mass: fmt_q(m) });
        }
        let sum: Q = masses.iter().sum();
        if !sum.is_one() {
            return Err(Error::MassSumNotOne { sum: fmt_q(&sum) });
        }
        Ok(Self { masses })
    }

    /// Builds from `(numerator, denominator)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Result<Self> {
        if pairs.iter().any(|&(_, d)| d == 0) {
            return Err(invalid("zero denominator"));
        }
        Self::new(pairs.iter().map(|&(n, d)| crate::rational::q(n, d)).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("probability vector"));
        }
        let m = crate::rational::q(1, n as i64);
        Ok(Self { masses: vec![m; n] })
    }

    pub fn masses(&self) -> &[Q] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.masses.iter().map(to_f64).collect()
    }

    /// Law of two independent draws; cell `(i, k)` sits at index `i * other.len() + k`.
    pub fn product(&self, other: &Self) -> Self {
        let masses = self
            .masses
            .iter()
            .flat_map(|a| other.masses.iter().map(move |b| a * b))
            .collect();
        Self { masses }
    }

    /// `n`-fold independent product, first factor most significant.
    pub fn power(&self, n: usize) -> Self {
        let mut out = Self { masses: vec![Q::one()] };
        for _ in 0..n {
            out = out.product(self);
        }
        out
    }

    /// Drops zero cells and sorts, giving a representation independent of labelling.
    pub fn canonical(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self.masses.iter().filter(|m| !m.is_zero()).cloned().collect();
        v.sort();
        v
    }
}

impl Law for ProbabilityVector {
    fn entropy(&self, base: LogBase) -> f64 {
        partition_entropy(self, base)
    }

    fn cells(&self) -> usize {
        self.len()
    }
}

impl fmt::Display for ProbabilityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.masses.iter().map(fmt_q).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Floating-point cell masses, for laws that involve transcendental values
/// (Poisson probabilities) or empirical frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLaw {
    masses: Vec<f64>,
}

impl RealLaw {
    /// Sum must be within `1e-9` of one.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Empty("law"));
        }
        if let Some((index, m)) = masses.iter().enumerate().find(|(_, m)| !(**m >= 0.0)) {
            return Err(Error::NegativeMass { index, mass: m.to_string() });
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::MassSumNotOne { sum: sum.to_string() });
        }
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `n`-fold independent product, first factor most significant.
    pub fn power(&self, n: usize) -> Self {
        let mut out = vec![1.0];
        for _ in 0..n {
            out = out.iter().flat_map(|a| self.masses.iter().map(move |b| a * b)).collect();
        }
        Self { masses: out }
    }
}

impl Law for RealLaw {
    fn entropy(&self, base: LogBase) -> f64 {
        entropy_of_masses(&self.masses, base)
    }

    fn cells(&self) -> usize {
        self.masses.len()
    }
}

/// `-Σ m log m` over raw masses, skipping zero cells.
pub fn entropy_of_masses(masses: &[f64], base: LogBase) -> f64 {
    let h: f64 = masses
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| -m * base.log(m))
        .sum();
    // -0.0 and tiny negative round-off for single-cell laws
    h.max(0.0)
}

pub fn partition_entropy(p: &ProbabilityVector, base: LogBase) -> f64 {
    entropy_of_masses(&p.to_f64(), base)
}

/// Entropy of the two-cell partition `(q, 1 - q)`.
pub fn binary_entropy(q: f64, base: LogBase) -> f64 {
    entropy_of_masses(&[q, 1.0 - q], base)
}

/// `H(joint) / scheme_size`.
pub fn normalized_join_entropy(joint: &impl Law, scheme_size: usize, base: LogBase) -> Result<f64> {
    if scheme_size == 0 {
        return Err(invalid("scheme size must be positive"));
    }
    Ok(joint.entropy(base) / scheme_size as f64)
}

/// Largest value from `tail_start` on.
///
/// This is a finite-range stand-in for an upper limit and is labelled as such
/// wherever it is reported.
pub fn tail_sup_diagnostic(values: &[f64], tail_start: usize) -> Result<f64> {
    let tail = values.get(tail_start..).unwrap_or(&[]);
    tail.iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::Empty("tail"))
}
