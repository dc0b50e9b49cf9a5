use ndarray::Array2;
use rand::Rng;

/// Glorot-uniform matrix of shape `fan_in x fan_out`.
pub fn init_xavier(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Array2<f64> {
    assert!(
        fan_in >= 1 && fan_out >= 1,
        "fan_in and fan_out must be >= 1"
    );
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..=bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn variance_matches_glorot() {
        let w = init_xavier(256, 256, &mut ChaCha8Rng::seed_from_u64(0));
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let var = w.mapv(|v| (v - mean) * (v - mean)).sum() / n;
        let target = 2.0 / 512.0;
        assert!((var - target).abs() / target < 0.1, "var {var}");
        let bound = (6.0f64 / 512.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn one_by_one_bounds_and_reproducibility() {
        let w = init_xavier(1, 1, &mut ChaCha8Rng::seed_from_u64(5));
        assert!(w[[0, 0]].abs() <= 3f64.sqrt());
        let a = init_xavier(7, 3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = init_xavier(7, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
