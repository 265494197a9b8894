//! Posterior summaries of the weights, feature selection and evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::block_chain::argmax;
use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::softmax::{log_softmax, logits};

/// Entry-wise sample mean and population standard deviation of retained weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPosteriorSummary<F> {
    pub mean: Matrix<F>,
    pub std: Matrix<F>,
}

impl<F: Scalar> WeightPosteriorSummary<F> {
    pub fn num_blocks(&self) -> usize {
        self.mean.rows()
    }

    pub fn num_features(&self) -> usize {
        self.mean.cols()
    }
}

pub fn summarize_weights<F: Scalar>(samples: &[Matrix<F>]) -> Result<WeightPosteriorSummary<F>> {
    let first = samples.first().ok_or(Error::EmptyRetainedSet)?;
    let (b, d) = (first.rows(), first.cols());
    if samples.iter().any(|s| s.rows() != b || s.cols() != d) {
        return Err(Error::invalid("weight samples have different shapes"));
    }
    let n = F::of_usize(samples.len());
    let mean = Matrix::from_fn(b, d, |k, j| samples.iter().map(|s| s[(k, j)]).sum::<F>() / n);
    let std = Matrix::from_fn(b, d, |k, j| {
        let m = mean[(k, j)];
        let var = samples
            .iter()
            .map(|s| {
                let r = s[(k, j)] - m;
                r * r
            })
            .sum::<F>()
            / n;
        var.sqrt()
    });
    Ok(WeightPosteriorSummary { mean, std })
}

/// Features kept by the significance screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFeatureSet<F> {
    /// Kept feature indices, ascending.
    pub kept: Vec<usize>,
    /// `c*`.
    pub cutoff: F,
    pub multiplier: F,
    pub target: usize,
    /// `c_d` for every feature.
    pub scores: Vec<F>,
}

/// `c_d = max_i min(|l_id|, |u_id|)` with `(l, u) = mu -/+ k sigma`, where an
/// interval containing zero scores 0.
pub fn feature_scores<F: Scalar>(summary: &WeightPosteriorSummary<F>, k: F) -> Vec<F> {
    (0..summary.num_features())
        .map(|d| {
            (0..summary.num_blocks())
                .map(|i| {
                    let (mu, sd) = (summary.mean[(i, d)], summary.std[(i, d)]);
                    let (l, u) = (mu - k * sd, mu + k * sd);
                    if l <= F::zero() && u >= F::zero() {
                        F::zero()
                    } else {
                        l.abs().min(u.abs())
                    }
                })
                .fold(F::zero(), F::max)
        })
        .collect()
}

/// Keeps the `D'` features with the largest scores (ties to the lower index).
pub fn reduce_dimension<F: Scalar>(
    summary: &WeightPosteriorSummary<F>,
    k: F,
    target: usize,
) -> Result<ReducedFeatureSet<F>> {
    let d = summary.num_features();
    if target > d {
        return Err(Error::invalid(format!(
            "cannot keep {target} features out of {d}"
        )));
    }
    if target == 0 {
        return Err(Error::invalid("target dimension must be at least 1"));
    }
    if !(k > F::zero()) {
        return Err(Error::invalid(format!("multiplier must be positive, got {k}")));
    }
    let scores = feature_scores(summary, k);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let cutoff = scores[order[target - 1]];
    let mut kept = order[..target].to_vec();
    kept.sort_unstable();
    Ok(ReducedFeatureSet {
        kept,
        cutoff,
        multiplier: k,
        target,
        scores,
    })
}

/// Features whose interval lies entirely outside `(-c, c)` for some block.
pub fn features_beyond_cutoff<F: Scalar>(summary: &WeightPosteriorSummary<F>, k: F, c: F) -> Vec<usize> {
    (0..summary.num_features())
        .filter(|&d| {
            (0..summary.num_blocks()).any(|i| {
                let (mu, sd) = (summary.mean[(i, d)], summary.std[(i, d)]);
                mu - k * sd >= c || mu + k * sd <= -c
            })
        })
        .collect()
}

/// `S_bar_e`: mean retained description length per entity, `N + E` entities.
pub fn mean_description_length<F: Scalar>(retained: &[F], num_vertices: usize, num_edges: u64) -> Result<F> {
    if retained.is_empty() {
        return Err(Error::EmptyRetainedSet);
    }
    let total: F = retained.iter().copied().sum();
    Ok(total / F::of_usize(retained.len()) / F::of(num_vertices as f64 + num_edges as f64))
}

fn check_inputs<F: Scalar>(
    samples: &[Matrix<F>],
    y_hat: &Matrix<F>,
    x: &FeatureMatrix,
) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyRetainedSet);
    }
    if y_hat.rows() != x.num_rows() {
        return Err(Error::invalid("responsibilities and features have different row counts"));
    }
    for s in samples {
        if s.rows() != y_hat.cols() || s.cols() != x.num_cols() {
            return Err(Error::invalid("weight sample shape does not match B x D"));
        }
    }
    Ok(())
}

/// Soft cross-entropy of the classifier against `y_hat` on `vertices`,
/// averaged over vertices and then over weight samples.
pub fn cross_entropy_loss<F: Scalar>(
    samples: &[Matrix<F>],
    y_hat: &Matrix<F>,
    x: &FeatureMatrix,
    vertices: &[usize],
) -> Result<F> {
    check_inputs(samples, y_hat, x)?;
    if vertices.is_empty() {
        return Err(Error::invalid("cross-entropy needs at least one vertex"));
    }
    let per_sample = samples.iter().map(|w| {
        vertices
            .iter()
            .map(|&i| {
                let lp = log_softmax(w, x.active(i));
                y_hat
                    .row(i)
                    .iter()
                    .zip(&lp)
                    .filter(|(y, _)| **y > F::zero())
                    .map(|(&y, &l)| -y * l)
                    .sum::<F>()
            })
            .sum::<F>()
            / F::of_usize(vertices.len())
    });
    Ok(per_sample.sum::<F>() / F::of_usize(samples.len()))
}

/// `eta(j)` for every block: the fraction of (vertex, sample) pairs, over the
/// vertices of `vertices` whose most probable block is `j`, on which the
/// classifier's most probable block is also `j`. `None` when no vertex has `j`
/// as its most probable block.
pub fn block_accuracy<F: Scalar>(
    samples: &[Matrix<F>],
    y_hat: &Matrix<F>,
    x: &FeatureMatrix,
    vertices: &[usize],
) -> Result<Vec<Option<F>>> {
    check_inputs(samples, y_hat, x)?;
    let b = y_hat.cols();
    let mut hits = vec![0usize; b];
    let mut members = vec![0usize; b];
    for &i in vertices {
        let target = argmax(y_hat.row(i));
        members[target] += 1;
        for w in samples {
            if argmax(&logits(w, x.active(i))) == target {
                hits[target] += 1;
            }
        }
    }
    Ok((0..b)
        .map(|j| {
            (members[j] > 0).then(|| F::of_usize(hits[j]) / F::of_usize(members[j] * samples.len()))
        })
        .collect())
}

/// Metrics of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub repetition: usize,
    pub mean_description_length: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Per-block accuracy on the training vertices; `null` for empty blocks.
    pub block_accuracy_train: Vec<Option<f64>>,
    /// Per-block accuracy on the test vertices; `null` for empty blocks.
    pub block_accuracy_test: Vec<Option<f64>>,
    pub block_acceptance_rate: f64,
    pub theta_acceptance_rate: f64,
    pub mean_objective: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduction: Option<ReductionReport>,
}

/// Feature screen and the classifier retrained on the kept features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub cutoff: f64,
    pub kept_features: Vec<usize>,
    pub kept_feature_names: Vec<String>,
    pub train_loss: f64,
    pub test_loss: f64,
    pub theta_acceptance_rate: f64,
}
