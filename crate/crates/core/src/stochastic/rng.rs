use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Generator for path `index` of a run seeded with `seed`.
///
/// Every path owns a ChaCha stream keyed by its index, so results do not
/// depend on how paths are scheduled across threads.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Evaluate `f` on every path index in parallel, returning values in index order.
pub(crate) fn map_paths<F>(n_paths: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| f(&mut path_rng(seed, i)))
        .collect()
}

/// Mean and standard error (sample std / sqrt n), accumulated with
/// Welford's update in slice order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let n = values.len();
    if n < 2 {
        return (mean, 0.0);
    }
    let var = (m2 / (n - 1) as f64).max(0.0);
    (mean, (var / n as f64).sqrt())
}
