//! Replication scheduling and seed derivation.
//!
//! Monte-Carlo loops run through [`map_indexed`], which evaluates a closure
//! for every replication index and returns the results in index order. With
//! the `parallel` feature the work is spread over the current rayon pool;
//! otherwise (or when parallelism is switched off at runtime) it runs on the
//! calling thread. Each replication owns an RNG seeded from
//! `(master seed, index)`, so results are bit-identical for any worker count.

use std::sync::atomic::{AtomicBool, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used for every stream in the crate.
pub type Rng = ChaCha8Rng;

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable data-parallel execution at runtime. Has no effect
/// when the crate is built without the `parallel` feature.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::SeqCst);
}

/// True when [`map_indexed`] will dispatch to rayon.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::SeqCst)
}

/// Evaluate `f(i)` for `i in 0..n`, returning results ordered by `i`.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel_enabled() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed by folding each component through SplitMix64.
///
/// `derive_seed(master, &[gamma_idx, depth_idx, rep])` is the per-cell,
/// per-replication seed used by the experiment runner.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// RNG for replication `rep` under `seed`.
pub fn rep_rng(seed: u64, rep: usize) -> Rng {
    rng_from_seed(derive_seed(seed, &[rep as u64]))
}
