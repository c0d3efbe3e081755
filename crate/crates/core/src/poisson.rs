//! Poisson suspensions: cylinder measures, configuration sampling on finite
//! windows, the induced map on configurations and the join law of the
//! generating cylinder partition along tower schemes.
//!
//! Set algebra is exact. Sampled coordinates are floats converted exactly to
//! rationals; points within `1e-15` of an interval endpoint are redrawn.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use rand::Rng as _;
use rand_distr::{Distribution, Poisson};

use crate::entropy::{RealLaw, SchemeSet};
use crate::error::{invalid, Error, Result};
use crate::interval::IntervalSet;
use crate::rank_one::RankOneState;
use crate::rational::{fmt_q, q_from_f64, to_f64, Q};
use crate::rng::{run_batches, seeded, Rng};

const BOUNDARY_GUARD: f64 = 1e-15;
const INVERSION_LIMIT: f64 = 30.0;

/// `⋂ C(A_i, k_i)`: exactly `k_i` points in `A_i` for every `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderEvent {
    terms: Vec<(IntervalSet, u64)>,
}

impl CylinderEvent {
    pub fn new(terms: Vec<(IntervalSet, u64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("cylinder event"));
        }
        for (i, (a, _)) in terms.iter().enumerate() {
            if a.measure().is_zero() {
                return Err(Error::ZeroMeasure);
            }
            if let Some(j) = terms[..i].iter().position(|(b, _)| !a.is_disjoint(b)) {
                return Err(Error::Overlap(format!("sets {j} and {i} of the cylinder event intersect")));
            }
        }
        Ok(Self { terms })
    }

    pub fn single(set: IntervalSet, k: u64) -> Result<Self> {
        Self::new(vec![(set, k)])
    }

    pub fn terms(&self) -> &[(IntervalSet, u64)] {
        &self.terms
    }
}

/// `ln(μ^k e^{-μ} / k!)`.
pub fn poisson_log_pmf(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return -mu;
    }
    let log_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    k as f64 * mu.ln() - log_fact - mu
}

pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    poisson_log_pmf(mu, k).exp()
}

/// `∏ μ(A_i)^{k_i} e^{-μ(A_i)} / k_i!`, accumulated in log space and
/// exponentiated once.
pub fn cylinder_measure(event: &CylinderEvent) -> f64 {
    event
        .terms
        .iter()
        .map(|(a, k)| poisson_log_pmf(to_f64(&a.measure()), *k))
        .sum::<f64>()
        .exp()
}

/// A finite configuration inside a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    window: IntervalSet,
    points: Vec<Q>,
}

impl Configuration {
    /// Points are sorted; they must be distinct and inside the window.
    pub fn new(window: IntervalSet, mut points: Vec<Q>) -> Result<Self> {
        points.sort();
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("configuration points must be distinct"));
        }
        if let Some(p) = points.iter().find(|p| !window.contains(p)) {
            return Err(invalid(format!("point {} outside the window", fmt_q(p))));
        }
        Ok(Self { window, points })
    }

    pub fn window(&self) -> &IntervalSet {
        &self.window
    }

    pub fn points(&self) -> &[Q] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|x ∩ A|`.
    pub fn count_in(&self, set: &IntervalSet) -> usize {
        self.points.iter().filter(|p| set.contains(p)).count()
    }

    /// Header `numerator,denominator,value`, one point per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("numerator,denominator,value\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.numer(), p.denom(), to_f64(p)));
        }
        out
    }
}

/// Count law sampler: inversion for small means, rejection above.
pub fn sample_poisson_count(rng: &mut Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean <= INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                break;
            }
        }
        k
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    }
}

/// Float view of a window for drawing uniform points.
#[derive(Debug, Clone)]
struct UniformWindow {
    pieces: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    measure: f64,
}

impl UniformWindow {
    fn new(window: &IntervalSet) -> Result<Self> {
        let m = window.measure();
        if m.is_zero() {
            return Err(Error::ZeroMeasure);
        }
        let pieces: Vec<(f64, f64)> = window.intervals().iter().map(|(l, r)| (to_f64(l), to_f64(r))).collect();
        let mut cumulative = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for (l, r) in &pieces {
            acc += r - l;
            cumulative.push(acc);
        }
        Ok(Self { pieces, cumulative, measure: to_f64(&m) })
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        let u = rng.random::<f64>() * self.measure;
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.pieces.len() - 1);
        let before = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let (l, r) = self.pieces[i];
        (l + (u - before)).min(r)
    }
}

/// Sorted float endpoints; a point near any of them is redrawn.
fn near_boundary(edges: &[f64], x: f64) -> bool {
    let i = edges.partition_point(|&e| e < x);
    let close = |j: usize| edges.get(j).is_some_and(|&e| (e - x).abs() < BOUNDARY_GUARD);
    close(i) || (i > 0 && close(i - 1))
}

/// Poisson configuration on `window`: `Poisson(μ(window))` points, i.i.d. uniform.
pub fn sample_configuration(window: &IntervalSet, seed: u64) -> Result<Configuration> {
    sample_configuration_with(window, &mut seeded(seed))
}

pub fn sample_configuration_with(window: &IntervalSet, rng: &mut Rng) -> Result<Configuration> {
    let uniform = UniformWindow::new(window)?;
    let mut edges: Vec<f64> = uniform.pieces.iter().flat_map(|&(l, r)| [l, r]).collect();
    edges.sort_by(f64::total_cmp);
    let n = sample_poisson_count(rng, uniform.measure);
    let mut points = Vec::with_capacity(n as usize);
    while (points.len() as u64) < n {
        let x = uniform.draw(rng);
        if near_boundary(&edges, x) {
            continue;
        }
        let p = q_from_f64(x)?;
        if window.contains(&p) && !points.contains(&p) {
            points.push(p);
        }
    }
    Configuration::new(window.clone(), points)
}

/// Fast counting sampler: draws configurations on a window and records how
/// many points land in each of several (possibly overlapping) sets.
#[derive(Debug, Clone)]
pub struct CountSampler {
    window: UniformWindow,
    sets: Vec<Vec<(f64, f64)>>,
    edges: Vec<f64>,
}

impl CountSampler {
    pub fn new(window: &IntervalSet, sets: &[IntervalSet]) -> Result<Self> {
        let uniform = UniformWindow::new(window)?;
        let float_set = |s: &IntervalSet| -> Vec<(f64, f64)> {
            s.intervals().iter().map(|(l, r)| (to_f64(l), to_f64(r))).collect()
        };
        let sets: Vec<Vec<(f64, f64)>> = sets.iter().map(float_set).collect();
        let mut edges: Vec<f64> = uniform
            .pieces
            .iter()
            .chain(sets.iter().flatten())
            .flat_map(|&(l, r)| [l, r])
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        Ok(Self { window: uniform, sets, edges })
    }

    /// Window given by the convex hull of the union of `sets`.
    pub fn over_hull(sets: &[IntervalSet]) -> Result<Self> {
        let union = sets.iter().fold(IntervalSet::empty(), |acc, s| acc.union(s));
        let (l, r) = union.hull().ok_or(Error::ZeroMeasure)?;
        Self::new(&IntervalSet::interval(l, r)?, sets)
    }

    /// Window equal to the union of `sets`: the restriction of a Poisson
    /// configuration to the union is again Poisson, and points outside it
    /// never change a count.
    pub fn over_union(sets: &[IntervalSet]) -> Result<Self> {
        let union = sets.iter().fold(IntervalSet::empty(), |acc, s| acc.union(s));
        Self::new(&union, sets)
    }

    pub fn set_count(&self) -> usize {
        self.sets.len()
    }

    /// Fills `counts[i]` with `|x ∩ S_i|` for one fresh configuration.
    pub fn sample(&self, rng: &mut Rng, counts: &mut [u64]) {
        counts.iter_mut().for_each(|c| *c = 0);
        let n = sample_poisson_count(rng, self.window.measure);
        let mut drawn = 0;
        while drawn < n {
            let x = self.window.draw(rng);
            if near_boundary(&self.edges, x) {
                continue;
            }
            drawn += 1;
            for (set, c) in self.sets.iter().zip(counts.iter_mut()) {
                let i = set.partition_point(|&(_, r)| r <= x);
                if set.get(i).is_some_and(|&(l, _)| l <= x) {
                    *c += 1;
                }
            }
        }
    }

    /// Histogram of the pattern `[counts[i] == target[i]]` over `samples`
    /// configurations, keyed by the bit pattern (bit set when equal).
    pub fn pattern_counts(&self, target: &[u64], samples: u64, seed: u64) -> BTreeMap<Vec<bool>, u64> {
        let partial = run_batches(samples, seed, |rng, n| {
            let mut counts = vec![0u64; self.sets.len()];
            let mut hist: BTreeMap<Vec<bool>, u64> = BTreeMap::new();
            for _ in 0..n {
                self.sample(rng, &mut counts);
                let key: Vec<bool> = counts.iter().zip(target).map(|(c, t)| c == t).collect();
                *hist.entry(key).or_insert(0) += 1;
            }
            hist
        });
        let mut total = BTreeMap::new();
        for hist in partial {
            for (k, v) in hist {
                *total.entry(k).or_insert(0) += v;
            }
        }
        total
    }
}

/// Empirical frequency of a binary event with its binomial standard error
/// under a reference probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McFrequency {
    pub hits: u64,
    pub samples: u64,
    pub frequency: f64,
    pub expected: f64,
    pub sigma: f64,
}

impl McFrequency {
    fn new(hits: u64, samples: u64, expected: f64) -> Self {
        let frequency = hits as f64 / samples as f64;
        let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
        Self { hits, samples, frequency, expected, sigma }
    }

    /// `|f - p| / σ`; zero when both sides agree with `σ = 0`.
    pub fn z_score(&self) -> f64 {
        let d = (self.frequency - self.expected).abs();
        if self.sigma > 0.0 {
            d / self.sigma
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z_score() <= sigmas
    }
}

/// Monte Carlo frequency of a cylinder event; configurations are drawn on the
/// hull of the event's sets, so points also fall outside them.
pub fn cylinder_frequency(event: &CylinderEvent, samples: u64, seed: u64) -> Result<McFrequency> {
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let sets: Vec<IntervalSet> = event.terms.iter().map(|(a, _)| a.clone()).collect();
    let target: Vec<u64> = event.terms.iter().map(|(_, k)| *k).collect();
    let sampler = CountSampler::over_hull(&sets)?;
    let hist = sampler.pattern_counts(&target, samples, seed);
    let hits = hist.get(&vec![true; sets.len()]).copied().unwrap_or(0);
    Ok(McFrequency::new(hits, samples, cylinder_measure(event)))
}

/// Pointwise `T^n` of a configuration; the window moves with it.
pub fn apply_suspension(state: &RankOneState, config: &Configuration, n: i64) -> Result<Configuration> {
    if n == 0 {
        return Ok(config.clone());
    }
    let window = state.image_of_set(&config.window, n)?;
    let points = config
        .points
        .iter()
        .map(|p| {
            state
                .map_point(p, n)
                .ok_or_else(|| Error::NotSettled { power: n, unsettled: format!("point {}", fmt_q(p)) })
        })
        .collect::<Result<Vec<_>>>()?;
    Configuration::new(window, points)
}

/// Exact and Monte Carlo checks that `C(A, k)` and `C(B, m)` are independent.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub joint: f64,
    pub product: f64,
    pub relative_error: f64,
    pub identity_holds: bool,
    pub monte_carlo: Option<McFrequency>,
}

impl IndependenceReport {
    pub fn passes(&self, sigmas: f64) -> bool {
        self.identity_holds && self.monte_carlo.is_none_or(|m| m.within(sigmas))
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `samples = 0` skips the Monte Carlo half.
pub fn verify_independence(
    a: &IntervalSet,
    b: &IntervalSet,
    k: u64,
    m: u64,
    samples: u64,
    seed: u64,
) -> Result<IndependenceReport> {
    let both = CylinderEvent::new(vec![(a.clone(), k), (b.clone(), m)])?;
    let joint = cylinder_measure(&both);
    let product =
        cylinder_measure(&CylinderEvent::single(a.clone(), k)?) * cylinder_measure(&CylinderEvent::single(b.clone(), m)?);
    let relative_error = relative_error(joint, product);
    let monte_carlo = if samples == 0 {
        None
    } else {
        let f = cylinder_frequency(&both, samples, seed)?;
        Some(McFrequency::new(f.hits, samples, product))
    };
    Ok(IndependenceReport { joint, product, relative_error, identity_holds: relative_error <= 1e-12, monte_carlo })
}

/// `ξ_C = {C(A, k), complement}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuspensionPartition {
    set: IntervalSet,
    k: u64,
}

impl SuspensionPartition {
    pub fn new(set: IntervalSet, k: u64) -> Result<Self> {
        if set.measure().is_zero() {
            return Err(Error::ZeroMeasure);
        }
        Ok(Self { set, k })
    }

    pub fn set(&self) -> &IntervalSet {
        &self.set
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `q = μ∘(C) = e^{-μ(A)} μ(A)^k / k!`.
    pub fn q(&self) -> f64 {
        poisson_pmf(to_f64(&self.set.measure()), self.k)
    }

    /// `(q, 1 - q)`; cell 0 is `C`.
    pub fn law(&self) -> Result<RealLaw> {
        let q = self.q();
        RealLaw::new(vec![q, 1.0 - q])
    }
}

/// Join law of `T∘^{-p} ξ_C` over `p ∈ P_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionJoin {
    pub law: RealLaw,
    /// True when the translates are disjoint and the law is the exact product.
    pub exact: bool,
    /// Monte Carlo cell counts, present when the law was estimated.
    pub counts: Option<BTreeMap<Vec<bool>, u64>>,
}

/// Sets `T^{max P - p} A` for `p ∈ P_j`, in scheme order. Applying the
/// measure-preserving `T^{max P}` to every `T^{-p} A` changes neither their
/// overlaps nor the joint count law, and keeps all powers nonnegative.
fn scheme_translates(state: &RankOneState, part: &SuspensionPartition, scheme: &SchemeSet) -> Result<Vec<IntervalSet>> {
    check_tower_scheme(state, part, scheme)?;
    let top = *scheme.elements().iter().max().expect("nonempty scheme");
    let mut images = Vec::with_capacity(scheme.len());
    let mut unsettled = Q::zero();
    for &p in scheme.elements() {
        let partial = state.image_partial(&part.set, top - p);
        unsettled += partial.unsettled.measure();
        images.push(partial.image);
    }
    if !unsettled.is_zero() {
        return Err(Error::NotSettled { power: top, unsettled: fmt_q(&unsettled) });
    }
    Ok(images)
}

fn check_tower_scheme(state: &RankOneState, part: &SuspensionPartition, scheme: &SchemeSet) -> Result<()> {
    if scheme.is_empty() {
        return Err(Error::Empty("index set"));
    }
    let j = usize::try_from(scheme.j).map_err(|_| Error::SchemeMismatch("stage index too large".into()))?;
    let h = state.height(j).map_err(|_| {
        Error::SchemeMismatch(format!("scheme index {j} has no tower among {} stages", state.stage_count()))
    })?;
    if !scheme.tower || scheme.step != h {
        return Err(Error::SchemeMismatch(format!("scheme step {} is not the tower height h_{j} = {h}", scheme.step)));
    }
    let ok = scheme
        .elements()
        .iter()
        .enumerate()
        .all(|(i, &p)| p.to_u64() == (i as u64 + 1).checked_mul(h));
    if !ok {
        return Err(Error::SchemeMismatch("elements are not h_j, 2h_j, …".into()));
    }
    let inside = (1..=state.stage_count()).any(|j0| state.tower_set(j0).is_ok_and(|x| part.set.is_subset(&x)));
    if !inside {
        return Err(Error::SchemeMismatch("the generating set lies in no tower".into()));
    }
    Ok(())
}

/// Exact product law when the translates are disjoint, otherwise a Monte
/// Carlo estimate from `samples` configurations.
pub fn suspension_join_law(
    state: &RankOneState,
    part: &SuspensionPartition,
    scheme: &SchemeSet,
    samples: u64,
    seed: u64,
) -> Result<SuspensionJoin> {
    let images = scheme_translates(state, part, scheme)?;
    let sum: Q = images.iter().map(IntervalSet::measure).sum();
    let union = images.iter().fold(IntervalSet::empty(), |acc, s| acc.union(s));
    if union.measure() == sum {
        return Ok(SuspensionJoin { law: part.law()?.power(images.len()), exact: true, counts: None });
    }
    if samples == 0 {
        return Err(invalid("translates overlap and no samples were requested"));
    }
    let counts = join_counts(&images, part.k, samples, seed)?;
    Ok(SuspensionJoin { law: counts_to_law(&counts, images.len(), samples)?, exact: false, counts: Some(counts) })
}

/// Monte Carlo histogram of the join cells, regardless of disjointness.
pub fn suspension_join_counts(
    state: &RankOneState,
    part: &SuspensionPartition,
    scheme: &SchemeSet,
    samples: u64,
    seed: u64,
) -> Result<BTreeMap<Vec<bool>, u64>> {
    let images = scheme_translates(state, part, scheme)?;
    join_counts(&images, part.k, samples, seed)
}

fn join_counts(images: &[IntervalSet], k: u64, samples: u64, seed: u64) -> Result<BTreeMap<Vec<bool>, u64>> {
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let sampler = CountSampler::over_union(images)?;
    Ok(sampler.pattern_counts(&vec![k; images.len()], samples, seed))
}

/// Cell order matches the exact product law: `C` (bit set) first, first
/// factor most significant.
fn counts_to_law(counts: &BTreeMap<Vec<bool>, u64>, factors: usize, samples: u64) -> Result<RealLaw> {
    let mut masses = vec![0.0; 1 << factors];
    for (bits, &c) in counts {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(!b));
        masses[index] = c as f64 / samples as f64;
    }
    RealLaw::new(masses)
}
