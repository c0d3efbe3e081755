use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::{entropy_of_masses, LogBase};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correction {
    #[default]
    None,
    /// Adds `(K - 1) / (2N)` nats, `K` the number of occupied cells.
    MillerMadow,
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Correction::None),
            "miller_madow" | "miller-madow" | "mm" => Ok(Correction::MillerMadow),
            other => Err(invalid(format!("unknown correction `{other}`"))),
        }
    }
}

/// Plug-in entropy of the empirical cell frequencies.
pub fn plugin_entropy_estimate<K: Ord>(
    cell_counts: &BTreeMap<K, u64>,
    base: LogBase,
    correction: Correction,
) -> Result<f64> {
    let counts: Vec<u64> = cell_counts.values().copied().collect();
    plugin_from_counts(&counts, base, correction)
}

pub(crate) fn plugin_from_counts(counts: &[u64], base: LogBase, correction: Correction) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Empty("cell counts"));
    }
    let nf = n as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let h = entropy_of_masses(&freqs, base);
    Ok(match correction {
        Correction::None => h,
        Correction::MillerMadow => {
            let occupied = counts.iter().filter(|&&c| c > 0).count() as f64;
            h + base.from_nats((occupied - 1.0) / (2.0 * nf))
        }
    })
}

/// Bootstrap standard error of [`plugin_entropy_estimate`], resampling the
/// empirical law multinomially. Deterministic in `seed`.
pub fn bootstrap_std_error<K: Ord>(
    cell_counts: &BTreeMap<K, u64>,
    base: LogBase,
    correction: Correction,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    let counts: Vec<u64> = cell_counts.values().copied().collect();
    bootstrap_from_counts(&counts, base, correction, resamples, seed)
}

pub(crate) fn bootstrap_from_counts(
    counts: &[u64],
    base: LogBase,
    correction: Correction,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if resamples < 2 {
        return Err(invalid("bootstrap needs at least two resamples"));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Empty("cell counts"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = vec![0u64; counts.len()];
    let mut estimates = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        // multinomial via conditional binomials
        let mut left = n;
        let mut mass_left = n as f64;
        for (slot, &c) in draw.iter_mut().zip(counts) {
            if left == 0 || c == 0 {
                *slot = 0;
                mass_left -= c as f64;
                continue;
            }
            let p = (c as f64 / mass_left).min(1.0);
            let k = Binomial::new(left, p).map_err(|e| invalid(e.to_string()))?.sample(&mut rng);
            *slot = k;
            left -= k;
            mass_left -= c as f64;
        }
        estimates.push(plugin_from_counts(&draw, base, correction)?);
    }
    let mean = estimates.iter().sum::<f64>() / resamples as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(&'static str, u64)]) -> BTreeMap<&'static str, u64> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn examples() {
        let c = counts(&[("a", 500_000), ("b", 500_000)]);
        let h = plugin_entropy_estimate(&c, LogBase::Binary, Correction::None).unwrap();
        assert!((h - 1.0).abs() < 0.01);
        let c = counts(&[("a", 7)]);
        assert_eq!(plugin_entropy_estimate(&c, LogBase::Binary, Correction::None).unwrap(), 0.0);
        assert_eq!(plugin_entropy_estimate(&c, LogBase::Natural, Correction::MillerMadow).unwrap(), 0.0);
        let c = counts(&[("a", 1), ("b", 1)]);
        assert_eq!(plugin_entropy_estimate(&c, LogBase::Binary, Correction::None).unwrap(), 1.0);
    }

    #[test]
    fn miller_madow_offset() {
        let c = counts(&[("a", 3), ("b", 1), ("c", 0)]);
        let raw = plugin_entropy_estimate(&c, LogBase::Natural, Correction::None).unwrap();
        let mm = plugin_entropy_estimate(&c, LogBase::Natural, Correction::MillerMadow).unwrap();
        assert!((mm - raw - 1.0 / 8.0).abs() < 1e-15);
        let mm_bits = plugin_entropy_estimate(&c, LogBase::Binary, Correction::MillerMadow).unwrap();
        assert!((mm_bits - mm / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn all_zero_rejected() {
        let c = counts(&[("a", 0), ("b", 0)]);
        assert_eq!(
            plugin_entropy_estimate(&c, LogBase::Binary, Correction::None),
            Err(Error::Empty("cell counts"))
        );
    }

    #[test]
    fn bootstrap_is_deterministic_and_sane() {
        let c = counts(&[("a", 600), ("b", 250), ("c", 150)]);
        let s1 = bootstrap_std_error(&c, LogBase::Binary, Correction::None, 200, 7).unwrap();
        let s2 = bootstrap_std_error(&c, LogBase::Binary, Correction::None, 200, 7).unwrap();
        assert_eq!(s1, s2);
        // delta-method standard error is about 0.03 bits for this law and N
        assert!(s1 > 0.01 && s1 < 0.06, "{s1}");
        let single = counts(&[("a", 10)]);
        assert_eq!(bootstrap_std_error(&single, LogBase::Binary, Correction::None, 10, 1).unwrap(), 0.0);
    }
}
