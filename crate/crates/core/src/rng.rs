//! Seeded generators and the batch-splitting scheme for Monte Carlo work.
//!
//! Work is cut into fixed-size batches. Batch `b` of a run with seed `s` draws
//! from ChaCha8 seeded by `s` with stream number `b`. The batch layout does not
//! depend on the number of threads, so serial and parallel runs agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type Rng = ChaCha8Rng;

pub const BATCH: u64 = 1 << 16;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Generator for worker/batch `index` under `seed`.
pub fn worker_rng(seed: u64, index: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `total` trials in batches of [`BATCH`], in parallel, returning the
/// per-batch results in batch order.
pub fn run_batches<T, F>(total: u64, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng, u64) -> T + Sync,
{
    let batches = total.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let n = BATCH.min(total - b * BATCH);
            let mut rng = worker_rng(seed, b);
            work(&mut rng, n)
        })
        .collect()
}
