//! Metropolis-adjusted Langevin sampling of the softmax weights.
//!
//! A proposal is `theta' = theta - h grad U(theta) + sqrt(2h) xi` with `xi`
//! standard normal; the Hastings ratio uses the Gaussian proposal densities in
//! both directions, so the chain targets `exp(-U)` exactly for any `h > 0`.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::retained::Retention;
use crate::rng::ChainRng;
use crate::scalar::Scalar;
use crate::softmax::{ObjectiveContext, Potential};

/// Step size as a function of the iteration index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule {
    Fixed(f64),
    /// `h_t = alpha (beta + t)^(-gamma)`.
    Polynomial { alpha: f64, beta: f64, gamma: f64 },
}

impl StepSchedule {
    /// `alpha = 250 s / N_ctx`, `beta = 1000`, `gamma = 0.8`.
    pub fn annealed(step_scale: f64, context_size: usize) -> Self {
        StepSchedule::Polynomial {
            alpha: 250.0 * step_scale / context_size as f64,
            beta: 1000.0,
            gamma: 0.8,
        }
    }

    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Fixed(h) => h,
            StepSchedule::Polynomial { alpha, beta, gamma } => alpha * (beta + t as f64).powf(-gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Fixed(h) if h > 0.0 && h.is_finite() => Ok(()),
            StepSchedule::Fixed(h) => Err(Error::invalid(format!("step size must be positive, got {h}"))),
            StepSchedule::Polynomial { alpha, beta, gamma } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::invalid(format!("step scale must be positive, got {alpha}")));
                }
                if !(beta > 0.0) {
                    return Err(Error::invalid(format!("step offset must be positive, got {beta}")));
                }
                if !(gamma > 0.5 && gamma <= 1.0) {
                    return Err(Error::invalid(format!("step decay must lie in (1/2, 1], got {gamma}")));
                }
                Ok(())
            }
        }
    }
}

/// `h_t` of the annealed schedule.
pub fn step_size(t: usize, step_scale: f64, context_size: usize) -> f64 {
    StepSchedule::annealed(step_scale, context_size).step(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaChainConfig {
    pub iterations: usize,
    pub burn_in: f64,
    pub thinning: usize,
    /// Prior standard deviation of every weight.
    pub sigma: f64,
    /// `s` in `alpha = 250 s / N_ctx`.
    pub step_scale: f64,
    pub seed: u64,
}

impl Default for ThetaChainConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 0.4,
            thinning: 10,
            sigma: 1.0,
            step_scale: 0.05,
            seed: 0,
        }
    }
}

impl ThetaChainConfig {
    pub fn retention(&self) -> Result<Retention> {
        Retention::new(self.iterations, self.burn_in, self.thinning)
    }

    pub fn validate(&self) -> Result<()> {
        self.retention()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "step scale must be positive, got {}",
                self.step_scale
            )));
        }
        Ok(())
    }
}

/// `ln q(a -> b)` up to the constant that cancels in the Hastings ratio.
pub fn log_proposal_density<F: Scalar>(a: &Matrix<F>, b: &Matrix<F>, grad_a: &Matrix<F>, h: F) -> F {
    let sq: F = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .zip(grad_a.as_slice())
        .map(|((&x, &y), &g)| {
            let r = y - x + h * g;
            r * r
        })
        .sum();
    -sq / (F::of(4.0) * h)
}

/// `ln alpha` for a move from `theta` to `proposal` at step size `h`.
pub fn mala_accept_log_prob<F: Scalar, P: Potential<F> + ?Sized>(
    potential: &P,
    theta: &Matrix<F>,
    proposal: &Matrix<F>,
    h: F,
) -> Result<F> {
    if !(h > F::zero()) {
        return Err(Error::invalid(format!("step size must be positive, got {h}")));
    }
    let (u, g) = potential.value_and_gradient(theta);
    let (u_new, g_new) = potential.value_and_gradient(proposal);
    Ok(log_acceptance(u, u_new, log_proposal_density(theta, proposal, &g, h), log_proposal_density(proposal, theta, &g_new, h)))
}

fn log_acceptance<F: Scalar>(u: F, u_new: F, log_forward: F, log_reverse: F) -> F {
    let r = (u - u_new) + (log_reverse - log_forward);
    if r.is_nan() {
        F::neg_infinity()
    } else {
        r.min(F::zero())
    }
}

/// One proposal and the quantities entering its acceptance test.
#[derive(Debug, Clone)]
pub struct MalaStep<F> {
    pub proposal: Matrix<F>,
    pub value: F,
    pub gradient: Matrix<F>,
    pub log_forward: F,
    pub log_reverse: F,
    pub log_alpha: F,
    pub accepted: bool,
}

/// Draws one proposal from `theta` (with cached `U` and gradient) and decides it.
pub fn mala_step<F: Scalar, P: Potential<F> + ?Sized, R: Rng + ?Sized>(
    potential: &P,
    theta: &Matrix<F>,
    grad: &Matrix<F>,
    u: F,
    h: F,
    rng: &mut R,
) -> MalaStep<F> {
    let noise_scale = (F::of(2.0) * h).sqrt();
    let proposal = Matrix::from_fn(theta.rows(), theta.cols(), |k, d| {
        let xi: f64 = StandardNormal.sample(rng);
        theta[(k, d)] - h * grad[(k, d)] + noise_scale * F::of(xi)
    });
    let (value, gradient) = potential.value_and_gradient(&proposal);
    let log_forward = log_proposal_density(theta, &proposal, grad, h);
    let log_reverse = log_proposal_density(&proposal, theta, &gradient, h);
    let usable = value.is_finite() && gradient.is_finite();
    let log_alpha = if usable {
        log_acceptance(u, value, log_forward, log_reverse)
    } else {
        F::neg_infinity()
    };
    let ln_u = F::of(rng.random::<f64>().ln());
    MalaStep {
        accepted: usable && ln_u < log_alpha,
        proposal,
        value,
        gradient,
        log_forward,
        log_reverse,
        log_alpha,
    }
}

/// Retained weight samples and diagnostics of a MALA chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MalaOutput<F> {
    pub retained_indices: Vec<usize>,
    pub samples: Vec<Matrix<F>>,
    /// `U(theta^(t))` for `t = 0..=T`.
    pub u_trace: Vec<F>,
    /// Acceptance decision of iteration `t = 1..=T` at position `t - 1`.
    pub accepted: Vec<bool>,
}

impl<F: Scalar> MalaOutput<F> {
    /// `r_alpha`, accepted proposals over `T`.
    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }

    /// Acceptance rate over positions `range` of [`MalaOutput::accepted`].
    pub fn acceptance_rate_in(&self, range: std::ops::Range<usize>) -> f64 {
        let window = &self.accepted[range];
        if window.is_empty() {
            return 0.0;
        }
        window.iter().filter(|&&a| a).count() as f64 / window.len() as f64
    }

    /// `U_bar`, the mean of `U` over iterations `1..=T`.
    pub fn mean_objective(&self) -> F {
        let tail = &self.u_trace[1..];
        if tail.is_empty() {
            return self.u_trace[0];
        }
        tail.iter().copied().sum::<F>() / F::of_usize(tail.len())
    }

    /// Entry-wise mean of the retained samples.
    pub fn posterior_mean(&self) -> Matrix<F> {
        let first = &self.samples[0];
        let n = F::of_usize(self.samples.len());
        Matrix::from_fn(first.rows(), first.cols(), |k, d| {
            self.samples.iter().map(|s| s[(k, d)]).sum::<F>() / n
        })
    }
}

/// Runs `retention.iterations` MALA iterations from `init`.
pub fn run_mala<F: Scalar, P: Potential<F> + ?Sized, R: Rng + ?Sized>(
    potential: &P,
    init: Matrix<F>,
    schedule: StepSchedule,
    retention: &Retention,
    rng: &mut R,
) -> Result<MalaOutput<F>> {
    schedule.validate()?;
    let mut theta = init;
    let (mut u, mut grad) = potential.value_and_gradient(&theta);
    if !u.is_finite() || !grad.is_finite() {
        return Err(Error::NumericFailure(format!("objective is not finite at the initial weights: {u}")));
    }
    let t_max = retention.iterations;
    let mut u_trace = Vec::with_capacity(t_max + 1);
    let mut accepted = Vec::with_capacity(t_max);
    let mut samples = Vec::with_capacity(retention.len());
    u_trace.push(u);
    if retention.contains(0) {
        samples.push(theta.clone());
    }
    for t in 1..=t_max {
        let h = F::of(schedule.step(t - 1));
        let step = mala_step(potential, &theta, &grad, u, h, rng);
        if step.accepted {
            theta = step.proposal;
            u = step.value;
            grad = step.gradient;
        }
        accepted.push(step.accepted);
        u_trace.push(u);
        if retention.contains(t) {
            samples.push(theta.clone());
        }
    }
    Ok(MalaOutput {
        retained_indices: retention.indices(),
        samples,
        u_trace,
        accepted,
    })
}

/// Draws `theta^(0)` from the prior and runs the annealed chain on `ctx`.
pub fn run_theta_chain<F: Scalar>(ctx: &ObjectiveContext<F>, cfg: &ThetaChainConfig) -> Result<MalaOutput<F>> {
    cfg.validate()?;
    if ctx.is_empty() {
        return Err(Error::invalid("objective context has no vertices"));
    }
    let retention = cfg.retention()?;
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    let prior = Normal::new(0.0, cfg.sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let (b, d) = ctx.shape();
    let init = Matrix::from_fn(b, d, |_, _| F::of(prior.sample(&mut rng)));
    let schedule = StepSchedule::annealed(cfg.step_scale, ctx.len());
    run_mala(ctx, init, schedule, &retention, &mut rng)
}
