//! Softmax feature-to-block model: block probabilities, the objective `U`
//! targeted by the weight chain and its gradient.
//!
//! Features are binary, so a linear score `w_k . x_i` is the sum of the
//! weights of the active columns of row `i`. There is no bias term.

use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `B x D` softmax weights, row `k` is `w_k`.
pub type WeightMatrix<F> = Matrix<F>;

/// A differentiable negative log-density over `B x D` parameter matrices.
pub trait Potential<F: Scalar> {
    fn shape(&self) -> (usize, usize);

    fn value(&self, theta: &Matrix<F>) -> F;

    fn gradient(&self, theta: &Matrix<F>) -> Matrix<F>;

    fn value_and_gradient(&self, theta: &Matrix<F>) -> (F, Matrix<F>) {
        (self.value(theta), self.gradient(theta))
    }
}

/// `w_k . x` for every block, where `x` is given by its active columns.
pub fn logits<F: Scalar>(w: &WeightMatrix<F>, active: &[usize]) -> Vec<F> {
    (0..w.rows())
        .map(|k| {
            let row = w.row(k);
            active.iter().fold(F::zero(), |acc, &d| acc + row[d])
        })
        .collect()
}

fn log_sum_exp<F: Scalar>(z: &[F]) -> F {
    let m = z.iter().copied().fold(F::neg_infinity(), F::max);
    if m == F::neg_infinity() {
        return m;
    }
    m + z.iter().map(|&v| (v - m).exp()).sum::<F>().ln()
}

/// Block probabilities `phi(x)` for a binary feature vector given by its
/// active columns.
pub fn softmax_probs<F: Scalar>(w: &WeightMatrix<F>, active: &[usize]) -> Vec<F> {
    softmax_of_logits(&logits(w, active))
}

pub fn softmax_of_logits<F: Scalar>(z: &[F]) -> Vec<F> {
    let m = z.iter().copied().fold(F::neg_infinity(), F::max);
    let e: Vec<F> = z.iter().map(|&v| (v - m).exp()).collect();
    let total: F = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `ln phi(x)`, stable for large logits.
pub fn log_softmax<F: Scalar>(w: &WeightMatrix<F>, active: &[usize]) -> Vec<F> {
    let z = logits(w, active);
    let lse = log_sum_exp(&z);
    z.into_iter().map(|v| v - lse).collect()
}

/// `ln p(b | X) = -N ln B`, the uniform law the model assumes once the weights
/// are integrated out. Exact only when no two vertices share an active
/// feature; shared features correlate the labels under the prior.
pub fn log_p_b_given_x<F: Scalar>(num_vertices: usize, num_blocks: usize) -> F {
    -F::of_usize(num_vertices) * F::of_usize(num_blocks).ln()
}

/// `ln p(b | X, W) = sum_i ln phi_{b_i}(x_i)`.
pub fn log_p_b_given_x_w<F: Scalar>(w: &WeightMatrix<F>, x: &FeatureMatrix, labels: &[usize]) -> F {
    labels
        .iter()
        .enumerate()
        .map(|(i, &b)| log_softmax(w, x.active(i))[b])
        .sum()
}

/// Features and target responsibilities of the vertices entering `U`.
#[derive(Debug, Clone)]
pub struct ObjectiveContext<F> {
    x: FeatureMatrix,
    y: Matrix<F>,
    sigma: F,
}

impl<F: Scalar> ObjectiveContext<F> {
    /// `y` may be soft (rows of `y_hat`) or one-hot; rows must sum to one.
    pub fn new(x: FeatureMatrix, y: Matrix<F>, sigma: F) -> Result<Self> {
        if x.num_rows() != y.rows() {
            return Err(Error::invalid(format!(
                "feature matrix has {} rows but targets have {}",
                x.num_rows(),
                y.rows()
            )));
        }
        if !(sigma > F::zero()) || !sigma.is_finite() {
            return Err(Error::invalid("prior standard deviation must be positive and finite"));
        }
        let tol = F::of(1e-6).max(F::epsilon() * F::of(64.0));
        for i in 0..y.rows() {
            let row = y.row(i);
            let total: F = row.iter().copied().sum();
            if row.iter().any(|&v| v < F::zero() || !v.is_finite()) || (total - F::one()).abs() > tol {
                return Err(Error::invalid(format!("target row {i} is not a probability vector")));
            }
        }
        Ok(Self { x, y, sigma })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.x
    }

    pub fn targets(&self) -> &Matrix<F> {
        &self.y
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }

    /// `N_ctx`, the number of vertices in the context.
    pub fn len(&self) -> usize {
        self.x.num_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_blocks(&self) -> usize {
        self.y.cols()
    }

    pub fn num_features(&self) -> usize {
        self.x.num_cols()
    }

    /// `sum_i sum_j y_ij ln(1 / a_ij)`: `N` times the mean cross-entropy.
    pub fn cross_entropy_sum(&self, w: &WeightMatrix<F>) -> F {
        let mut total = F::zero();
        for i in 0..self.len() {
            let z = logits(w, self.x.active(i));
            let lse = log_sum_exp(&z);
            for (j, &y) in self.y.row(i).iter().enumerate() {
                if y > F::zero() {
                    total = total + y * (lse - z[j]);
                }
            }
        }
        total
    }

    pub fn prior_term(&self, w: &WeightMatrix<F>) -> F {
        w.norm_squared() / (F::of(2.0) * self.sigma * self.sigma)
    }

    pub fn objective(&self, w: &WeightMatrix<F>) -> F {
        self.cross_entropy_sum(w) + self.prior_term(w)
    }

    /// Row `k` is `-sum_i x_i (y_ik - a_ik) + w_k / sigma^2`.
    pub fn gradient(&self, w: &WeightMatrix<F>) -> Matrix<F> {
        let s2 = self.sigma * self.sigma;
        let mut g = w.map(|v| v / s2);
        for i in 0..self.len() {
            let active = self.x.active(i);
            let a = softmax_probs(w, active);
            for (k, &ak) in a.iter().enumerate() {
                let r = ak - self.y[(i, k)];
                let row = g.row_mut(k);
                for &d in active {
                    row[d] = row[d] + r;
                }
            }
        }
        g
    }
}

impl<F: Scalar> Potential<F> for ObjectiveContext<F> {
    fn shape(&self) -> (usize, usize) {
        (self.num_blocks(), self.num_features())
    }

    fn value(&self, theta: &Matrix<F>) -> F {
        self.objective(theta)
    }

    fn gradient(&self, theta: &Matrix<F>) -> Matrix<F> {
        ObjectiveContext::gradient(self, theta)
    }
}

/// `U(W)` for the given context.
pub fn objective_u<F: Scalar>(w: &WeightMatrix<F>, ctx: &ObjectiveContext<F>) -> F {
    ctx.objective(w)
}

/// `grad U(W)` for the given context.
pub fn gradient_u<F: Scalar>(w: &WeightMatrix<F>, ctx: &ObjectiveContext<F>) -> Matrix<F> {
    ctx.gradient(w)
}
