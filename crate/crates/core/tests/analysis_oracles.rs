mod common;

use ffbm::analysis::{
    block_accuracy, cross_entropy_loss, feature_scores, reduce_dimension, summarize_weights, WeightPosteriorSummary,
};
use ffbm::graph::FeatureMatrix;
use ffbm::matrix::Matrix;
use proptest::prelude::*;

use common::{kept_at, naive_cutoff};

fn summary() -> impl Strategy<Value = WeightPosteriorSummary<f64>> {
    (1usize..5, 1usize..11).prop_flat_map(|(b, d)| {
        (
            prop::collection::vec(-3.0f64..3.0, b * d),
            prop::collection::vec(0.0f64..1.0, b * d),
        )
            .prop_map(move |(m, s)| WeightPosteriorSummary {
                mean: Matrix::from_vec(b, d, m),
                std: Matrix::from_vec(b, d, s),
            })
    })
}

proptest! {
    #[test]
    fn reduction_equals_naive_search(s in summary(), k in 0.5f64..2.0, pick in 0usize..100) {
        let target = 1 + pick % s.num_features();
        let got = reduce_dimension(&s, k, target).unwrap();
        prop_assert_eq!(got.kept.len(), target);
        match naive_cutoff(&s, k, target) {
            Some((set, c)) => {
                prop_assert_eq!(&got.kept, &set);
                prop_assert_eq!(got.cutoff, c);
                prop_assert_eq!(kept_at(&s, k, got.cutoff), set);
            }
            None => prop_assert_eq!(got.cutoff, 0.0),
        }
    }

    #[test]
    fn reduction_ignores_block_order(s in summary(), k in 0.5f64..2.0, pick in 0usize..100) {
        let target = 1 + pick % s.num_features();
        let b = s.num_blocks();
        let flipped = WeightPosteriorSummary {
            mean: Matrix::from_fn(b, s.num_features(), |i, d| s.mean[(b - 1 - i, d)]),
            std: Matrix::from_fn(b, s.num_features(), |i, d| s.std[(b - 1 - i, d)]),
        };
        prop_assert_eq!(reduce_dimension(&s, k, target).unwrap(), reduce_dimension(&flipped, k, target).unwrap());
    }

    #[test]
    fn reduction_is_odd_in_the_means(s in summary(), k in 0.5f64..2.0, pick in 0usize..100) {
        let target = 1 + pick % s.num_features();
        let negated = WeightPosteriorSummary { mean: s.mean.map(|v| -v), std: s.std.clone() };
        prop_assert_eq!(feature_scores(&s, k), feature_scores(&negated, k));
        prop_assert_eq!(reduce_dimension(&s, k, target).unwrap().kept, reduce_dimension(&negated, k, target).unwrap().kept);
    }

    #[test]
    fn summary_matches_streaming_moments(values in prop::collection::vec(-10.0f64..10.0, 2..60)) {
        let samples: Vec<Matrix<f64>> = values.iter().map(|&v| Matrix::from_vec(1, 1, vec![v])).collect();
        let s = summarize_weights(&samples).unwrap();
        // Welford's update
        let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
        for &v in &values {
            n += 1.0;
            let delta = v - mean;
            mean += delta / n;
            m2 += delta * (v - mean);
        }
        prop_assert!((s.mean[(0, 0)] - mean).abs() < 1e-12);
        prop_assert!((s.std[(0, 0)] - (m2 / n).sqrt()).abs() < 1e-9);
    }
}

#[test]
fn reduction_rejects_impossible_targets() {
    let s = WeightPosteriorSummary {
        mean: Matrix::from_vec(1, 2, vec![1.0, 2.0]),
        std: Matrix::from_vec(1, 2, vec![0.1, 0.1]),
    };
    assert!(reduce_dimension(&s, 1.0, 3).is_err());
    assert!(reduce_dimension(&s, 1.0, 0).is_err());
    assert!(reduce_dimension(&s, 0.0, 1).is_err());
}

/// `eta(j)` by looping over samples on the outside.
fn accuracy_oracle(samples: &[Matrix<f64>], y: &Matrix<f64>, x: &FeatureMatrix, vertices: &[usize]) -> Vec<Option<f64>> {
    let b = y.cols();
    let first_max = |v: &[f64]| {
        let mut best = 0;
        for (k, &val) in v.iter().enumerate() {
            if val > v[best] {
                best = k;
            }
        }
        best
    };
    (0..b)
        .map(|j| {
            let members: Vec<usize> = vertices.iter().copied().filter(|&i| first_max(y.row(i)) == j).collect();
            if members.is_empty() {
                return None;
            }
            let mut total = 0.0;
            for w in samples {
                let hits = members
                    .iter()
                    .filter(|&&i| {
                        let z: Vec<f64> = (0..b)
                            .map(|k| (0..x.num_cols()).filter(|&d| x.get(i, d)).map(|d| w[(k, d)]).sum())
                            .collect();
                        first_max(&z) == j
                    })
                    .count();
                total += hits as f64 / members.len() as f64;
            }
            Some(total / samples.len() as f64)
        })
        .collect()
}

#[test]
fn accuracy_and_loss_match_loop_oracles() {
    use rand::{Rng, SeedableRng};
    let mut rng = ffbm::rng::ChainRng::seed_from_u64(5);
    for _ in 0..50 {
        let (n, b, d) = (rng.random_range(2..30), rng.random_range(1..5), rng.random_range(1..6));
        let dense: Vec<u8> = (0..n * d).map(|_| rng.random_bool(0.5) as u8).collect();
        let x = FeatureMatrix::from_dense(n, (0..d).map(|j| j.to_string()).collect(), &dense).unwrap();
        let y = Matrix::from_fn(n, b, |_, _| rng.random_range(0.0..1.0));
        let y = Matrix::from_fn(n, b, |i, k| y[(i, k)] / y.row(i).iter().sum::<f64>());
        let samples: Vec<Matrix<f64>> = (0..4).map(|_| Matrix::from_fn(b, d, |_, _| rng.random_range(-2.0..2.0))).collect();
        let vertices: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
        if vertices.is_empty() {
            continue;
        }
        let got = block_accuracy(&samples, &y, &x, &vertices).unwrap();
        let want = accuracy_oracle(&samples, &y, &x, &vertices);
        for (g, w) in got.iter().zip(&want) {
            match (g, w) {
                (Some(g), Some(w)) => assert!((g - w).abs() < 1e-12),
                (None, None) => {}
                _ => panic!("{got:?} vs {want:?}"),
            }
        }

        let mut loss = 0.0;
        for w in &samples {
            let mut per = 0.0;
            for &i in &vertices {
                let z: Vec<f64> = (0..b)
                    .map(|k| (0..d).filter(|&j| x.get(i, j)).map(|j| w[(k, j)]).sum())
                    .collect();
                let lse = z.iter().map(|v| v.exp()).sum::<f64>().ln();
                per -= (0..b).map(|k| y[(i, k)] * (z[k] - lse)).sum::<f64>();
            }
            loss += per / vertices.len() as f64;
        }
        loss /= samples.len() as f64;
        let lib = cross_entropy_loss(&samples, &y, &x, &vertices).unwrap();
        assert!((lib - loss).abs() < 1e-10 * loss.max(1.0));
    }
}

#[test]
fn zero_weights_give_log_b_loss() {
    let x = FeatureMatrix::from_dense(3, vec!["a".into()], &[1, 0, 1]).unwrap();
    let y = Matrix::from_vec(3, 4, vec![0.25; 12]);
    let loss = cross_entropy_loss(&[Matrix::zeros(4, 1)], &y, &x, &[0, 1, 2]).unwrap();
    assert!((loss - 4f64.ln()).abs() < 1e-14);
}
