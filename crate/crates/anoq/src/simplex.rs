//! Probability-simplex helpers: Euclidean projection and uniform sampling.

use rand::Rng;

/// Euclidean projection onto the probability simplex via sort-and-threshold.
///
/// Ties are broken by the deterministic descending sort; the result is exact
/// up to floating point. O(N log N).
pub fn project_to_simplex(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    assert!(n > 0, "cannot project an empty vector");
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite entry in projection input"));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    let mut support = 0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
            support = j + 1;
        }
    }
    debug_assert!(support > 0);
    y.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Uniform sample from the probability simplex (exponential-spacings method).
pub fn sample_uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    e
}

/// `Σ|x_i − y_i|`.
pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn projects_interior_point_to_itself() {
        let x = vec![0.2, 0.3, 0.5];
        let p = project_to_simplex(&x);
        for (a, b) in x.iter().zip(&p) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projects_vertexward() {
        let p = project_to_simplex(&[10.0, 0.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(y in proptest::collection::vec(-50.0_f64..50.0, 1..8)) {
            let p = project_to_simplex(&y);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
        }

        // The projection is a minimizer: no uniform mixture with a random
        // simplex point gets closer in l2.
        #[test]
        fn projection_is_closest(
            y in proptest::collection::vec(-10.0_f64..10.0, 2..6),
            seed in 0u64..1000,
        ) {
            let p = project_to_simplex(&y);
            let d2 = |a: &[f64]| -> f64 {
                a.iter().zip(&y).map(|(x, z)| (x - z) * (x - z)).sum()
            };
            let base = d2(&p);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let other = sample_uniform_simplex(y.len(), &mut rng);
                prop_assert!(base <= d2(&other) + 1e-9);
            }
        }
    }

    #[test]
    fn uniform_sample_is_on_simplex_and_symmetric() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut means = vec![0.0; 4];
        let draws = 20_000;
        for _ in 0..draws {
            let x = sample_uniform_simplex(4, &mut rng);
            let s: f64 = x.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            for (m, v) in means.iter_mut().zip(&x) {
                *m += v;
            }
        }
        for m in &means {
            let mean = m / draws as f64;
            assert!((mean - 0.25).abs() < 0.01, "coordinate mean {mean}");
        }
    }
}
