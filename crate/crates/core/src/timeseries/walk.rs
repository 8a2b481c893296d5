use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Generator recorded in reports for reproducibility.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha), StandardNormal ziggurat (rand_distr), splitmix64 seed derivation";

/// Running sums of `increments`.
pub fn walk_from_increments(increments: impl IntoIterator<Item = f64>) -> Vec<f64> {
    increments
        .into_iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Gaussian random walk: cumulative sum of `n` standard normal increments.
pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    walk_from_increments((0..n).map(|_| StandardNormal.sample(&mut rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_increments() {
        assert_eq!(
            walk_from_increments(std::iter::repeat_n(0.0, 5)),
            vec![0.0; 5]
        );
        assert_eq!(
            walk_from_increments([1.0, -2.0, 0.5]),
            vec![1.0, -1.0, -0.5]
        );
    }

    #[test]
    fn seeded_walk_is_reproducible() {
        assert_eq!(random_walk(300, 9), random_walk(300, 9));
        assert_ne!(random_walk(300, 9), random_walk(300, 10));
        assert_eq!(random_walk(1, 3).len(), 1);
    }
}
