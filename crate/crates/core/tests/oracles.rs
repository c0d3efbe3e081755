//! Cross-checks against brute-force oracles that share no code with the
//! library's fast paths.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Discrete, Poisson};

use ergolab::entropy::ProbabilityVector;
use ergolab::interval::IntervalSet;
use ergolab::markov::{tensor_apply, transfer_matrix, BetaCell, CylinderVector, KernelSpec, XiCell};
use ergolab::poisson::{apply_suspension, cylinder_measure, poisson_pmf, sample_configuration_with, Configuration, CylinderEvent};
use ergolab::rank_one::{build, spacer_params_for, RankOneParams, RankOneState, StageParams};
use ergolab::rational::{q, qi, Q};
use ergolab::reference::{bernoulli_join_law, rotation_join_law, AlphabetPartition, BernoulliScheme, RotationSystem};

// ---------------------------------------------------------------- kernel

/// Three letters with masses (1/2, a, 1/2 - a); A = {1}, B = {0}.
fn letter_masses(a: &Q) -> [Q; 3] {
    [q(1, 2), a.clone(), q(1, 2) - a]
}

fn xi_of(letter: usize) -> usize {
    usize::from(letter != 1)
}

fn beta_of(letter: usize) -> usize {
    usize::from(letter != 0)
}

/// `E[f(ξ(ω_1), …, ξ(ω_w)) | β(ω) = y]` by enumerating all `3^w` words.
fn conditional_expectation(a: &Q, w: usize, f: &[Q]) -> Vec<Q> {
    let m = letter_masses(a);
    let mut num = vec![Q::zero(); 1 << w];
    let mut den = vec![Q::zero(); 1 << w];
    for word in 0..3usize.pow(w as u32) {
        let letters: Vec<usize> = (0..w).map(|k| (word / 3usize.pow((w - 1 - k) as u32)) % 3).collect();
        let p: Q = letters.iter().map(|&l| m[l].clone()).fold(Q::one(), |acc, x| acc * x);
        let x = letters.iter().fold(0usize, |acc, &l| (acc << 1) | xi_of(l));
        let y = letters.iter().fold(0usize, |acc, &l| (acc << 1) | beta_of(l));
        num[y] += &p * &f[x];
        den[y] += p;
    }
    num.into_iter().zip(den).map(|(n, d)| n / d).collect()
}

#[test]
fn transfer_matrix_is_a_conditional_expectation() {
    for a in [q(1, 4), q(1, 3), q(2, 5), q(1, 100), q(49, 100)] {
        let t = transfer_matrix(&KernelSpec::new(a.clone()).unwrap());
        for x in XiCell::ALL {
            let mut f = [Q::zero(), Q::zero()];
            f[x as usize] = Q::one();
            let e = conditional_expectation(&a, 1, &f);
            for y in BetaCell::ALL {
                assert_eq!(t.entry(y, x), &e[y as usize], "a={a} x={x:?} y={y:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_power_matches_enumeration(
        num in 1i64..50,
        w in 1usize..5,
        seed in any::<u64>(),
    ) {
        let a = q(num, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<Q> = (0..1 << w).map(|_| q(rng.random_range(-9..10), rng.random_range(1..6))).collect();
        let out = tensor_apply(&KernelSpec::new(a.clone()).unwrap(), &CylinderVector::new(w, f.clone()).unwrap()).unwrap();
        let expected = conditional_expectation(&a, w, &f);
        prop_assert_eq!(out.coeffs(), expected.as_slice());
    }

    #[test]
    fn shift_commutes_with_enumerated_expectation(num in 1i64..50, w in 2usize..5, seed in any::<u64>()) {
        // f ignoring coordinate 1: built from an arbitrary function of coordinates 2..w
        let a = q(num, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner: Vec<Q> = (0..1 << (w - 1)).map(|_| qi(rng.random_range(-5..6))).collect();
        let f: Vec<Q> = (0..1usize << w).map(|i| inner[i & ((1 << (w - 1)) - 1)].clone()).collect();
        let fv = CylinderVector::new(w, f).unwrap();
        let lhs = CylinderVector::new(w, conditional_expectation(&a, w, fv.coeffs())).unwrap().shift().unwrap();
        let shifted = fv.shift().unwrap();
        let rhs = conditional_expectation(&a, w, shifted.coeffs());
        prop_assert_eq!(lhs.coeffs(), rhs.as_slice());
    }
}

// ---------------------------------------------------------------- bernoulli and rotation

/// Law of `(ξ(x_p))_{p ∈ P}` by summing the product measure over every word
/// on positions `min P ..= max P`.
fn brute_join(masses: &[Q], groups: &[usize], index_set: &[i64]) -> BTreeMap<Vec<usize>, Q> {
    let lo = *index_set.iter().min().unwrap();
    let span = (*index_set.iter().max().unwrap() - lo + 1) as u32;
    let n = masses.len();
    let mut law = BTreeMap::new();
    for word in 0..n.pow(span) {
        let letter = |pos: u32| (word / n.pow(span - 1 - pos)) % n;
        let p: Q = (0..span).map(|k| masses[letter(k)].clone()).fold(Q::one(), |acc, x| acc * x);
        let label: Vec<usize> = index_set.iter().map(|&i| groups[letter((i - lo) as u32)]).collect();
        *law.entry(label).or_insert_with(Q::zero) += p;
    }
    law
}

#[test]
fn bernoulli_join_matches_enumeration() {
    let masses = vec![q(1, 2), q(1, 5), q(3, 10)];
    let scheme = BernoulliScheme::new(ProbabilityVector::new(masses.clone()).unwrap());
    let cases: [(&[Vec<usize>], Vec<usize>, &[i64]); 3] = [
        (&[vec![0], vec![1], vec![2]], vec![0, 1, 2], &[0, 2, 3]),
        (&[vec![1], vec![0, 2]], vec![1, 0, 1], &[1, 2, 4]),
        (&[vec![0, 1, 2]], vec![0, 0, 0], &[5]),
    ];
    for (grouping, groups, set) in cases {
        let xi = AlphabetPartition::from_groups(3, grouping).unwrap();
        let law = bernoulli_join_law(&scheme, &xi, set).unwrap();
        let brute = brute_join(&masses, &groups, set);
        let cells = xi.cells();
        let mut expected = vec![Q::zero(); law.len()];
        for (label, p) in brute {
            let idx = label.iter().fold(0usize, |acc, &c| acc * cells + c);
            expected[idx] = p;
        }
        assert_eq!(law.masses(), expected.as_slice(), "set {set:?}");
    }
}

fn lcm(a: &num_bigint::BigInt, b: &num_bigint::BigInt) -> num_bigint::BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

/// Every cut of every translate lies on the grid `k / D`; the label is
/// constant on each grid cell, so the law is a count of cell midpoints.
fn grid_rotation_law(angle: &Q, cuts: &[Q], index_set: &[i64]) -> Vec<Q> {
    let d = cuts.iter().fold(angle.denom().clone(), |acc, c| lcm(&acc, c.denom()));
    let d: i64 = d.try_into().unwrap();
    let arc = |y: &Q| -> usize {
        // arc k = [c_k, c_{k+1}), the last arc wraps
        let i = cuts.iter().rposition(|c| c <= y);
        i.unwrap_or(cuts.len() - 1)
    };
    let mut law: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
    for k in 0..d {
        let mid = q(2 * k + 1, 2 * d);
        let label: Vec<usize> = index_set
            .iter()
            .map(|&p| {
                let y = &mid + angle * qi(p);
                let frac = &y - Q::from_integer(y.floor().to_integer());
                arc(&frac)
            })
            .collect();
        *law.entry(label).or_insert_with(Q::zero) += q(1, d);
    }
    law.into_values().collect()
}

#[test]
fn rotation_join_matches_grid() {
    let cases: [(Q, Vec<Q>, Vec<i64>); 4] = [
        (q(1, 3), vec![q(0, 1), q(1, 2)], vec![0, 1]),
        (q(71, 226), vec![q(0, 1), q(1, 2)], (1..=7).map(|m| 3 * m).collect()),
        (q(2, 7), vec![q(1, 5), q(1, 2), q(4, 5)], vec![1, 4, 9]),
        (q(5, 11), vec![q(1, 3)], vec![2, 3]),
    ];
    for (angle, cuts, set) in cases {
        let rot = RotationSystem::new(angle.clone(), cuts.clone()).unwrap();
        let law = rotation_join_law(&rot, &set).unwrap();
        assert_eq!(law.masses(), grid_rotation_law(&angle, &cuts, &set).as_slice(), "angle {angle}");
    }
}

// ---------------------------------------------------------------- rank-one

/// Literal cutting and stacking with explicit interval lists.
struct Stacked {
    levels: Vec<(Q, Q)>,
    right: Q,
}

impl Stacked {
    fn new() -> Self {
        Self { levels: vec![(qi(0), qi(1))], right: qi(1) }
    }

    fn cut(&mut self, stage: &StageParams) {
        let width = (&self.levels[0].1 - &self.levels[0].0) / qi(stage.cuts as i64);
        let mut next = Vec::new();
        for c in 0..stage.cuts {
            let off = &width * qi(c as i64);
            for (l, _) in &self.levels {
                let lo = l + &off;
                let hi = &lo + &width;
                next.push((lo, hi));
            }
            for _ in 0..stage.spacers[c as usize] {
                let hi = &self.right + &width;
                next.push((self.right.clone(), hi.clone()));
                self.right = hi;
            }
        }
        self.levels = next;
    }

    fn map(&self, x: &Q, n: i64) -> Option<Q> {
        let i = self.levels.iter().position(|(l, r)| l <= x && x < r)? as i64;
        let t = usize::try_from(i + n).ok().filter(|t| *t < self.levels.len())?;
        Some(x - &self.levels[i as usize].0 + &self.levels[t].0)
    }
}

fn random_stages(rng: &mut ChaCha8Rng, count: usize) -> Vec<StageParams> {
    (0..count)
        .map(|_| {
            let r = rng.random_range(2..5u64);
            StageParams::new(r, (0..r).map(|_| rng.random_range(0..4)).collect()).unwrap()
        })
        .collect()
}

#[test]
fn rank_one_matches_literal_stacking() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let count = rng.random_range(0..5);
        let stages = random_stages(&mut rng, count);
        let state = build(&RankOneParams::new(stages.clone()).unwrap()).unwrap();
        let mut lit = Stacked::new();
        for (j, stage) in std::iter::once(None).chain(stages.iter().map(Some)).enumerate() {
            if let Some(s) = stage {
                lit.cut(s);
            }
            let stage_index = j + 1;
            assert_eq!(state.height(stage_index).unwrap() as usize, lit.levels.len());
            for (i, (l, r)) in lit.levels.iter().enumerate() {
                let lvl = state.level(stage_index, i as u64).unwrap();
                assert_eq!(lvl, IntervalSet::interval(l.clone(), r.clone()).unwrap());
            }
        }
        for _ in 0..50 {
            let x = q(rng.random_range(0..10_000), 10_000) * &lit.right;
            let n = rng.random_range(-6..7);
            assert_eq!(state.map_point(&x, n), lit.map(&x, n), "x={x} n={n}");
        }
    }
}

fn settled_sets(state: &RankOneState) -> Vec<IntervalSet> {
    let j = state.stage_count();
    let h = state.height(j).unwrap();
    (0..h).map(|i| state.level(j, i).unwrap()).collect()
}

#[test]
fn translation_preserves_measure_and_inverts() {
    let p = spacer_params_for(|j| Some(j), |_| Some(3), 4).unwrap();
    let state = build(&p).unwrap();
    let levels = settled_sets(&state);
    let h = levels.len() as i64;
    for (i, lvl) in levels.iter().enumerate().step_by(7) {
        for n in [-(i as i64), 1, 5, h - 1 - i as i64] {
            let Ok(img) = state.image_of_set(lvl, n) else { continue };
            assert_eq!(img.measure(), lvl.measure());
            assert_eq!(&state.image_of_set(&img, -n).unwrap(), lvl);
        }
    }
}

#[test]
fn extension_keeps_settled_dynamics() {
    let p = spacer_params_for(|_| Some(2), |_| Some(2), 6).unwrap();
    let full = build(&p).unwrap();
    let short = build(&RankOneParams::new(p.stages()[..3].to_vec()).unwrap()).unwrap();
    let j = short.stage_count();
    for i in 0..short.height(j).unwrap() - 1 {
        let lvl = short.level(j, i).unwrap();
        assert_eq!(short.image_of_set(&lvl, 1).unwrap(), full.image_of_set(&lvl, 1).unwrap());
    }
    let measures: Vec<Q> = (1..=full.stage_count()).map(|j| full.tower_measure(j).unwrap()).collect();
    assert!(measures.windows(2).all(|w| w[0] <= w[1]));
}

// ---------------------------------------------------------------- poisson

#[test]
fn pmf_matches_statrs() {
    for mu in [0.05f64, std::f64::consts::LN_2, 1.0, 4.5, 29.0, 60.0] {
        let d = Poisson::new(mu).unwrap();
        for k in 0..80u64 {
            let (ours, theirs) = (poisson_pmf(mu, k), d.pmf(k));
            assert!((ours - theirs).abs() <= 1e-12 * theirs.max(1e-300) + 1e-300, "mu={mu} k={k}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn counts_on_disjoint_union_convolve() {
    let a = IntervalSet::interval(qi(0), q(3, 4)).unwrap();
    let b = IntervalSet::interval(qi(2), q(7, 2)).unwrap();
    let ab = a.union(&b);
    for n in 0..8u64 {
        let conv: f64 = (0..=n)
            .map(|i| {
                cylinder_measure(&CylinderEvent::single(a.clone(), i).unwrap())
                    * cylinder_measure(&CylinderEvent::single(b.clone(), n - i).unwrap())
            })
            .sum();
        let direct = cylinder_measure(&CylinderEvent::single(ab.clone(), n).unwrap());
        assert!((conv - direct).abs() <= 1e-14, "n={n}: {conv} vs {direct}");
    }
}

#[test]
fn empty_window_frequency_is_one_half() {
    let ln2 = Q::from_float(std::f64::consts::LN_2).unwrap();
    let w = IntervalSet::interval(qi(0), ln2).unwrap();
    let mut rng = ergolab::rng::seeded(2024);
    let n = 1_000_000u64;
    let empty = (0..n).filter(|_| sample_configuration_with(&w, &mut rng).unwrap().is_empty()).count() as f64;
    let sigma = (0.25 / n as f64).sqrt();
    assert!((empty / n as f64 - 0.5).abs() <= 4.0 * sigma);
}

#[test]
fn suspension_is_invertible_on_samples() {
    let state = build(&spacer_params_for(|_| Some(1), |_| Some(2), 4).unwrap()).unwrap();
    let window = state.tower_set(2).unwrap();
    let mut rng = ergolab::rng::seeded(8);
    for n in [1i64, 3, 6] {
        for _ in 0..20 {
            let c: Configuration = sample_configuration_with(&window, &mut rng).unwrap();
            let moved = apply_suspension(&state, &c, n).unwrap();
            assert_eq!(moved.len(), c.len());
            assert_eq!(apply_suspension(&state, &moved, -n).unwrap(), c);
        }
    }
}
