//! Moving-block bootstrap for statistics of serially dependent samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Resampled index vectors of length `len`, built from blocks of `block` consecutive
/// indices with uniformly drawn starts, one per replication.
pub fn block_indices(len: usize, block: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let block = block.clamp(1, len);
    let mut idx = Vec::with_capacity(len + block);
    while idx.len() < len {
        let start = rng.random_range(0..=len - block);
        idx.extend(start..start + block);
    }
    idx.truncate(len);
    idx
}

/// Statistic evaluated on `reps` block-bootstrap resamples. Replication `r` draws from
/// stream `r` of the seeded generator, so results do not depend on thread scheduling.
pub fn moving_block<F>(len: usize, block: usize, reps: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            stat(&block_indices(len, block, &mut rng))
        })
        .collect()
}

/// Sample standard deviation of the finite values.
pub fn standard_error(stats: &[f64]) -> f64 {
    let v: Vec<f64> = stats.iter().copied().filter(|s| s.is_finite()).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let idx = block_indices(100, 10, &mut rng);
        assert_eq!(idx.len(), 100);
        for chunk in idx.chunks(10) {
            assert!(chunk.windows(2).all(|w| w[1] == w[0] + 1));
        }
    }

    #[test]
    fn mean_se_matches_iid_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() - 0.5).collect();
        let stats = moving_block(x.len(), 1, 400, 7, |i| gather(&x, i).iter().sum::<f64>() / i.len() as f64);
        let se = standard_error(&stats);
        // uniform(-1/2, 1/2) has variance 1/12
        let want = (1.0 / 12.0 / 2000.0f64).sqrt();
        assert!((se - want).abs() < 0.15 * want, "{se} vs {want}");
        assert_eq!(stats, moving_block(x.len(), 1, 400, 7, |i| gather(&x, i).iter().sum::<f64>() / i.len() as f64));
    }
}
