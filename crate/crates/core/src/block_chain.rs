//! Metropolis-Hastings sampling of block partitions at fixed `B`, targeting
//! `pi(b) ∝ exp(-S(b))`.
//!
//! Proposals move one vertex at a time. For a vertex with neighbours, the
//! target block is drawn by picking a random half-edge, reading the block `t`
//! of its far end, and sampling `s` from `(e_ts + eps) / (e_t + eps B)`.
//! The Hastings ratio uses the exact forward and reverse proposal densities.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::align::align_labels;
use crate::error::{Error, Result};
use crate::graph::LabelledNetwork;
use crate::matrix::Matrix;
use crate::retained::Retention;
use crate::rng::ChainRng;
use crate::sbm::{BlockState, SbmModel, VertexMove};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BChainConfig {
    /// Number of sweeps `T_b`; one sweep is `N` single-vertex proposals.
    pub iterations: usize,
    pub burn_in: f64,
    pub thinning: usize,
    /// Proposal smoothing `eps > 0`.
    pub epsilon: f64,
    /// Starts tried by [`mdl_init`]: one agglomerative start plus
    /// `init_restarts - 1` random ones; the lowest `S` wins.
    pub init_restarts: usize,
    pub seed: u64,
}

impl Default for BChainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            burn_in: 0.2,
            thinning: 5,
            epsilon: 1.0,
            init_restarts: 10,
            seed: 0,
        }
    }
}

impl BChainConfig {
    pub fn retention(&self) -> Result<Retention> {
        Retention::new(self.iterations, self.burn_in, self.thinning)
    }

    pub fn validate(&self) -> Result<()> {
        self.retention()?;
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "proposal smoothing must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// A proposed single-vertex move with its proposal log-densities.
#[derive(Debug, Clone)]
pub struct Proposal<F> {
    pub mv: VertexMove,
    /// `ln q(b -> b')`, excluding the `1/N` vertex choice which cancels.
    pub log_forward: F,
    /// `ln q(b' -> b)`.
    pub log_reverse: F,
}

impl<F> Proposal<F> {
    pub fn vertex(&self) -> usize {
        self.mv.vertex
    }

    pub fn target(&self) -> usize {
        self.mv.to
    }
}

/// `(e_ts + eps) / (e_t + eps B)`, given `e_ts` and `e_t`.
#[inline]
fn smoothed<F: Scalar>(e_ts: u64, e_t: u64, eps: F, b: F) -> F {
    (F::of(e_ts as f64) + eps) / (F::of(e_t as f64) + eps * b)
}

/// Probability of each target block for vertex `i` under the current state.
pub fn proposal_probabilities<F: Scalar>(
    net: &LabelledNetwork,
    state: &BlockState,
    i: usize,
    epsilon: F,
) -> Vec<F> {
    let nb = state.num_blocks();
    let b = F::of_usize(nb);
    let k = state.degrees()[i];
    if k == 0 {
        return vec![F::one() / b; nb];
    }
    let (neighbours, loops) = state.neighbour_block_counts(net, i);
    let kf = F::of(k as f64);
    (0..nb)
        .map(|s| {
            let own = state.label(i);
            let mut p = F::zero();
            if loops > 0 {
                p = p + F::of(loops as f64) / kf
                    * smoothed(state.edge_count(own, s), state.block_degree(own), epsilon, b);
            }
            for &(t, m) in &neighbours {
                p = p + F::of(m as f64) / kf
                    * smoothed(state.edge_count(t, s), state.block_degree(t), epsilon, b);
            }
            p
        })
        .collect()
}

fn log_proposal_density<F: Scalar>(mv: &VertexMove, state: &BlockState, epsilon: F) -> (F, F) {
    let nb = state.num_blocks();
    let b = F::of_usize(nb);
    if mv.degree == 0 {
        let uniform = -b.ln();
        return (uniform, uniform);
    }
    let kf = F::of(mv.degree as f64);
    let (r, s) = (mv.from, mv.to);
    let mut forward = F::zero();
    let mut reverse = F::zero();
    let mut add = |t: usize, weight: u64, t_after: usize| {
        let w = F::of(weight as f64) / kf;
        forward = forward + w * smoothed(state.edge_count(t, s), state.block_degree(t), epsilon, b);
        reverse = reverse
            + w * smoothed(
                mv.edge_count_after(state, t_after, r),
                mv.block_degree_after(state, t_after),
                epsilon,
                b,
            );
    };
    // self-loop half-edges point at the moving vertex itself: block r before, s after
    if mv.loops > 0 {
        add(r, mv.loops, s);
    }
    for &(t, m) in &mv.neighbour_blocks {
        add(t, m, t);
    }
    (forward.ln(), reverse.ln())
}

/// Draws a vertex uniformly and a target block from the neighbour-informed
/// proposal, returning the move with its forward and reverse log-densities.
pub fn propose_move<F: Scalar, R: Rng + ?Sized>(
    net: &LabelledNetwork,
    state: &BlockState,
    epsilon: F,
    rng: &mut R,
) -> Proposal<F> {
    let nb = state.num_blocks();
    let i = rng.random_range(0..state.num_vertices());
    let half_edges = net.half_edges(i);
    let s = if half_edges.is_empty() {
        rng.random_range(0..nb)
    } else {
        let j = half_edges[rng.random_range(0..half_edges.len())];
        let t = state.label(j);
        // sample s from (e_ts + eps) / (e_t + eps B)
        let b = F::of_usize(nb);
        let total = F::of(state.block_degree(t) as f64) + epsilon * b;
        let mut u = F::of(rng.random::<f64>()) * total;
        let mut chosen = nb - 1;
        for s in 0..nb {
            let w = F::of(state.edge_count(t, s) as f64) + epsilon;
            if u < w {
                chosen = s;
                break;
            }
            u = u - w;
        }
        chosen
    };
    let mv = VertexMove::new(net, state, i, s);
    let (log_forward, log_reverse) = log_proposal_density(&mv, state, epsilon);
    Proposal {
        mv,
        log_forward,
        log_reverse,
    }
}

/// `ln alpha = min(0, -dS + ln q(b' -> b) - ln q(b -> b'))`.
pub fn log_acceptance<F: Scalar>(delta_s: F, proposal: &Proposal<F>) -> F {
    if delta_s == F::infinity() {
        return F::neg_infinity();
    }
    (-delta_s + proposal.log_reverse - proposal.log_forward).min(F::zero())
}

/// Outcome of a single Metropolis-Hastings step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<F> {
    pub accepted: bool,
    /// Change in description length actually applied (zero on rejection).
    pub delta: F,
}

/// One proposal plus accept/reject; the state changes only on acceptance.
pub fn mh_step<F: Scalar, R: Rng + ?Sized>(
    model: &SbmModel<'_, F>,
    state: &mut BlockState,
    epsilon: F,
    rng: &mut R,
) -> StepOutcome<F> {
    let net = model.network();
    let proposal = propose_move(net, state, epsilon, rng);
    if proposal.mv.from == proposal.mv.to {
        return StepOutcome {
            accepted: true,
            delta: F::zero(),
        };
    }
    let delta = model.delta_for_move(state, &proposal.mv);
    let log_alpha = log_acceptance(delta, &proposal);
    let u: f64 = rng.random();
    if F::of(u).ln() < log_alpha {
        state.apply(&proposal.mv);
        StepOutcome {
            accepted: true,
            delta,
        }
    } else {
        StepOutcome {
            accepted: false,
            delta: F::zero(),
        }
    }
}

fn random_labelling<R: Rng + ?Sized>(n: usize, num_blocks: usize, rng: &mut R) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..num_blocks)).collect();
    // seed every block with one vertex so none starts empty
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for (r, &i) in order.iter().take(num_blocks).enumerate() {
        labels[i] = r;
    }
    labels
}

/// Zero-temperature descent: visit vertices in random order and move each to
/// the block with the most negative `dS`, until a sweep changes nothing.
pub fn greedy_descent<F: Scalar, R: Rng + ?Sized>(
    model: &SbmModel<'_, F>,
    state: &mut BlockState,
    rng: &mut R,
) {
    const MAX_SWEEPS: usize = 10_000;
    let threshold = F::of(-1e-10);
    let n = state.num_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SWEEPS {
        order.shuffle(rng);
        let mut moved = false;
        for &i in &order {
            let mut best = (F::zero(), state.label(i));
            for s in 0..state.num_blocks() {
                let d = model.delta_description_length(state, i, s);
                if d < best.0 {
                    best = (d, s);
                }
            }
            if best.0 < threshold {
                state.move_vertex(model.network(), i, best.1);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Agglomerative starting partition: begin with every vertex in its own
/// block, repeatedly merge the cheapest block pairs (shrinking the block count
/// by about a third per level) and run greedy vertex sweeps at each level
/// until `B` blocks remain.
pub fn agglomerative_partition<F: Scalar, R: Rng + ?Sized>(
    model: &SbmModel<'_, F>,
    rng: &mut R,
) -> Result<BlockState> {
    let net = model.network();
    let n = net.num_vertices();
    let nb = model.num_blocks();
    if nb == 0 || n < nb {
        return Err(Error::invalid(format!(
            "cannot place {n} vertices into {nb} nonempty blocks"
        )));
    }
    let mut labels: Vec<usize> = (0..n).collect();
    let mut c = n;
    loop {
        let level = model.with_num_blocks(c);
        let mut state = BlockState::new(net, labels, c)?;
        if c < n {
            greedy_descent(&level, &mut state, rng);
        }
        if c == nb {
            return Ok(state);
        }
        let target = nb.max(2 * c / 3).min(c - 1);

        let mut candidates: Vec<(F, usize, usize)> = Vec::with_capacity(c);
        for r in 0..c {
            let connected: Vec<usize> = (0..c)
                .filter(|&t| t != r && state.edge_count(r, t) > 0)
                .collect();
            let pool: Vec<usize> = if connected.is_empty() {
                (0..c).filter(|&t| t != r).collect()
            } else {
                connected
            };
            let mut best: Option<(F, usize)> = None;
            for t in pool {
                let d = level.delta_merge(&state, r, t);
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, t));
                }
            }
            let (d, t) = best.expect("at least two blocks");
            candidates.push((d, r, t));
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        let mut parent: Vec<usize> = (0..c).collect();
        let find = |parent: &[usize], mut x: usize| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        };
        let mut merges = 0;
        for &(_, r, t) in &candidates {
            if merges == c - target {
                break;
            }
            let (a, b) = (find(&parent, r), find(&parent, t));
            if a != b {
                parent[a] = b;
                merges += 1;
            }
        }
        let mut compact = vec![usize::MAX; c];
        let mut next = 0;
        labels = state
            .labels()
            .iter()
            .map(|&b| {
                let root = find(&parent, b);
                if compact[root] == usize::MAX {
                    compact[root] = next;
                    next += 1;
                }
                compact[root]
            })
            .collect();
        c = next;
    }
}

/// Greedy minimum-description-length starting partition with `B` nonempty
/// blocks. The agglomerative partition is always tried; each further restart
/// runs greedy descent from a random labelling. The lowest `S` wins.
pub fn mdl_init<F: Scalar, R: Rng + ?Sized>(
    model: &SbmModel<'_, F>,
    restarts: usize,
    rng: &mut R,
) -> Result<BlockState> {
    let net = model.network();
    let n = net.num_vertices();
    let nb = model.num_blocks();
    if nb == 0 {
        return Err(Error::invalid("number of blocks must be at least 1"));
    }
    if nb == 1 {
        return BlockState::new(net, vec![0; n], 1);
    }
    if n < nb {
        return Err(Error::invalid(format!(
            "cannot place {n} vertices into {nb} nonempty blocks"
        )));
    }
    let state = agglomerative_partition(model, rng)?;
    let mut best = (model.description_length(&state), state);
    for _ in 1..restarts {
        let mut state = BlockState::new(net, random_labelling(n, nb, rng), nb)?;
        greedy_descent(model, &mut state, rng);
        let s = model.description_length(&state);
        if s < best.0 {
            best = (s, state);
        }
    }
    Ok(best.1)
}

/// Retained partitions and diagnostics of a block chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BChainOutput<F> {
    /// Greedy starting partition; the reference for label alignment.
    pub initial: Vec<usize>,
    pub retained_indices: Vec<usize>,
    pub samples: Vec<Vec<usize>>,
    /// `S(b^(t))` for `t = 0..=T_b`.
    pub s_trace: Vec<F>,
    pub acceptance_rate: f64,
}

impl<F: Scalar> BChainOutput<F> {
    /// `S(b^(t))` at the retained indices.
    pub fn retained_description_lengths(&self) -> Vec<F> {
        self.retained_indices.iter().map(|&t| self.s_trace[t]).collect()
    }
}

/// Greedy initialisation followed by `T_b` sweeps of Metropolis-Hastings.
pub fn run_b_chain<F: Scalar>(
    net: &LabelledNetwork,
    num_blocks: usize,
    cfg: &BChainConfig,
) -> Result<BChainOutput<F>> {
    cfg.validate()?;
    let retention = cfg.retention()?;
    let model = SbmModel::<F>::new(net, num_blocks);
    let mut rng = ChainRng::seed_from_u64(cfg.seed);
    let mut state = mdl_init(&model, cfg.init_restarts, &mut rng)?;
    let initial = state.labels().to_vec();
    let epsilon = F::of(cfg.epsilon);

    let mut s_trace = Vec::with_capacity(cfg.iterations + 1);
    let mut samples = Vec::with_capacity(retention.len());
    let check = |s: F, t: usize| -> Result<F> {
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NumericFailure(format!(
                "description length is {s} at sweep {t}"
            )))
        }
    };
    s_trace.push(check(model.description_length(&state), 0)?);
    if retention.contains(0) {
        samples.push(state.labels().to_vec());
    }
    let n = net.num_vertices();
    let mut accepted = 0usize;
    for t in 1..=cfg.iterations {
        for _ in 0..n {
            if mh_step(&model, &mut state, epsilon, &mut rng).accepted {
                accepted += 1;
            }
        }
        s_trace.push(check(model.description_length(&state), t)?);
        if retention.contains(t) {
            samples.push(state.labels().to_vec());
        }
    }
    let steps = cfg.iterations * n;
    Ok(BChainOutput {
        initial,
        retained_indices: retention.indices(),
        samples,
        s_trace,
        acceptance_rate: if steps == 0 {
            0.0
        } else {
            accepted as f64 / steps as f64
        },
    })
}

/// Posterior block-membership probabilities `y_hat`, an `N x B` row-stochastic matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Responsibilities<F> {
    pub matrix: Matrix<F>,
}

impl<F: Scalar> Responsibilities<F> {
    pub fn num_vertices(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_blocks(&self) -> usize {
        self.matrix.cols()
    }

    /// Hard one-hot responsibilities of a single partition.
    pub fn one_hot(labels: &[usize], num_blocks: usize) -> Self {
        Self {
            matrix: Matrix::from_fn(labels.len(), num_blocks, |i, j| {
                if labels[i] == j {
                    F::one()
                } else {
                    F::zero()
                }
            }),
        }
    }

    /// `argmax_j y_hat_ij`, ties to the lowest block.
    pub fn map_labels(&self) -> Vec<usize> {
        (0..self.num_vertices())
            .map(|i| argmax(self.matrix.row(i)))
            .collect()
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            matrix: Matrix::from_fn(rows.len(), self.num_blocks(), |i, j| {
                self.matrix[(rows[i], j)]
            }),
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// Aligns every sample to `reference`, then averages block indicators.
pub fn estimate_responsibilities<F: Scalar>(
    samples: &[Vec<usize>],
    reference: &[usize],
    num_blocks: usize,
) -> Result<Responsibilities<F>> {
    if samples.is_empty() {
        return Err(Error::EmptyRetainedSet);
    }
    let n = reference.len();
    let mut counts = vec![0usize; n * num_blocks];
    for sample in samples {
        if sample.len() != n {
            return Err(Error::invalid("sample and reference lengths differ"));
        }
        for (i, &b) in align_labels(sample, reference, num_blocks).iter().enumerate() {
            counts[i * num_blocks + b] += 1;
        }
    }
    let total = F::of_usize(samples.len());
    Ok(Responsibilities {
        matrix: Matrix::from_vec(
            n,
            num_blocks,
            counts.into_iter().map(|c| F::of_usize(c) / total).collect(),
        ),
    })
}
