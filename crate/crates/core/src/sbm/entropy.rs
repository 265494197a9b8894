//! Microcanonical DC-SBM likelihood, the `(e, k)` priors and the description
//! length `S(b)`, all in nats.

use std::sync::Arc;

use crate::graph::LabelledNetwork;
use crate::scalar::Scalar;

use super::logfact::LogFactorial;
use super::partitions::LogPartitionTable;
use super::state::{BlockState, VertexMove};

/// `ln Xi(A) = sum_i ln k_i! - sum_{i<j} ln A_ij! - sum_i ln A_ii!!`.
pub fn log_xi<F: Scalar>(net: &LabelledNetwork, lf: &LogFactorial<F>) -> F {
    let degrees: F = net.degrees().iter().map(|&k| lf.ln_fact(k)).sum();
    let pairs: F = net
        .edges()
        .iter()
        .map(|&(u, v, m)| {
            if u == v {
                lf.ln_double_fact_even(2 * m)
            } else {
                lf.ln_fact(m)
            }
        })
        .sum();
    degrees - pairs
}

/// `ln Omega(e) = sum_r ln e_r! - sum_{r<s} ln e_rs! - sum_r ln e_rr!!`.
pub fn log_omega<F: Scalar>(state: &BlockState, lf: &LogFactorial<F>) -> F {
    let b = state.num_blocks();
    let mut total = F::zero();
    for r in 0..b {
        total = total + lf.ln_fact(state.block_degree(r));
        total = total - lf.ln_double_fact_even(state.edge_count(r, r));
        for s in r + 1..b {
            total = total - lf.ln_fact(state.edge_count(r, s));
        }
    }
    total
}

/// `ln p(e | b) = -ln multiset(multiset(B, 2), E)`.
pub fn log_prior_e<F: Scalar>(num_blocks: usize, num_edges: u64, lf: &LogFactorial<F>) -> F {
    let b = num_blocks as u64;
    let pair_bins = b * (b + 1) / 2;
    -lf.ln_multiset(pair_bins, num_edges)
}

/// `ln p(k | e, b) = sum_r [ sum_j ln eta_j^r! - ln n_r! - ln q(e_r, n_r) ]`.
pub fn log_prior_k<F: Scalar>(
    state: &BlockState,
    lf: &LogFactorial<F>,
    lq: &LogPartitionTable<F>,
) -> F {
    (0..state.num_blocks())
        .map(|r| {
            let hist: F = state
                .degree_histogram(r)
                .map(|(_, c)| lf.ln_fact(c as u64))
                .sum();
            hist - lf.ln_fact(state.block_size(r) as u64)
                - lq.ln_q(state.block_degree(r), state.block_size(r))
        })
        .sum()
}

/// Lookup tables and partition-independent constants for one network and a
/// fixed number of blocks.
#[derive(Debug, Clone)]
pub struct SbmModel<'a, F> {
    net: &'a LabelledNetwork,
    num_blocks: usize,
    ln_fact: Arc<LogFactorial<F>>,
    ln_q: Arc<LogPartitionTable<F>>,
    log_xi: F,
    log_prior_e: F,
    log_p_b: F,
}

impl<'a, F: Scalar> SbmModel<'a, F> {
    pub fn new(net: &'a LabelledNetwork, num_blocks: usize) -> Self {
        let n = net.num_vertices();
        let e = net.num_edges() as usize;
        let table_size = (2 * e).max(n).max(e + num_blocks * (num_blocks + 1) / 2) + 1;
        let ln_fact = Arc::new(LogFactorial::new(table_size));
        let ln_q = Arc::new(LogPartitionTable::new(2 * e, n));
        Self::from_tables(net, num_blocks, ln_fact, ln_q)
    }

    /// Same network and lookup tables, different number of blocks.
    pub fn with_num_blocks(&self, num_blocks: usize) -> Self {
        Self::from_tables(
            self.net,
            num_blocks,
            Arc::clone(&self.ln_fact),
            Arc::clone(&self.ln_q),
        )
    }

    fn from_tables(
        net: &'a LabelledNetwork,
        num_blocks: usize,
        ln_fact: Arc<LogFactorial<F>>,
        ln_q: Arc<LogPartitionTable<F>>,
    ) -> Self {
        let log_xi = log_xi(net, &ln_fact);
        let log_prior_e = log_prior_e(num_blocks, net.num_edges(), &ln_fact);
        let log_p_b = -F::of_usize(net.num_vertices()) * F::of_usize(num_blocks).ln();
        Self {
            net,
            num_blocks,
            ln_fact,
            ln_q,
            log_xi,
            log_prior_e,
            log_p_b,
        }
    }

    pub fn network(&self) -> &'a LabelledNetwork {
        self.net
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn log_factorial(&self) -> &LogFactorial<F> {
        &self.ln_fact
    }

    pub fn log_partitions(&self) -> &LogPartitionTable<F> {
        &self.ln_q
    }

    pub fn log_xi(&self) -> F {
        self.log_xi
    }

    pub fn log_omega(&self, state: &BlockState) -> F {
        log_omega(state, &self.ln_fact)
    }

    /// `ln p(A | k, e, b) = ln Xi(A) - ln Omega(e)`.
    pub fn log_likelihood(&self, state: &BlockState) -> F {
        self.log_xi - self.log_omega(state)
    }

    pub fn log_prior_e(&self) -> F {
        self.log_prior_e
    }

    pub fn log_prior_k(&self, state: &BlockState) -> F {
        log_prior_k(state, &self.ln_fact, &self.ln_q)
    }

    /// `ln p(b | X) = -N ln B`.
    pub fn log_p_b(&self) -> F {
        self.log_p_b
    }

    /// `S(b) = -(ln p(A | b, psi*) + ln p(b | X) + ln p(e | b) + ln p(k | e, b))`.
    pub fn description_length(&self, state: &BlockState) -> F {
        -(self.log_likelihood(state) + self.log_p_b + self.log_prior_e + self.log_prior_k(state))
    }

    /// `S(b') - S(b)` for moving vertex `i` into block `s`.
    ///
    /// Touches only rows `b_i` and `s` of `e`. Returns `+inf` for a move that
    /// would empty its source block.
    pub fn delta_description_length(&self, state: &BlockState, i: usize, s: usize) -> F {
        let r = state.label(i);
        if r == s {
            return F::zero();
        }
        if state.block_size(r) == 1 {
            return F::infinity();
        }
        let mv = VertexMove::new(self.net, state, i, s);
        self.delta_for_move(state, &mv)
    }

    /// Same as [`Self::delta_description_length`] for a precomputed move.
    pub fn delta_for_move(&self, state: &BlockState, mv: &VertexMove) -> F {
        let (r, s) = (mv.from, mv.to);
        if r == s {
            return F::zero();
        }
        if state.block_size(r) == 1 {
            return F::infinity();
        }
        let lf = &self.ln_fact;
        let lq = &self.ln_q;
        let k = mv.degree;
        let e_r = state.block_degree(r);
        let e_s = state.block_degree(s);

        // ln Omega(e') - ln Omega(e)
        let mut d_omega = lf.ln_fact(e_r - k) - lf.ln_fact(e_r) + lf.ln_fact(e_s + k)
            - lf.ln_fact(e_s);
        for t in [r, s] {
            d_omega = d_omega - lf.ln_double_fact_even(mv.edge_count_after(state, t, t))
                + lf.ln_double_fact_even(state.edge_count(t, t));
        }
        d_omega = d_omega - lf.ln_fact(mv.edge_count_after(state, r, s))
            + lf.ln_fact(state.edge_count(r, s));
        for &(t, m) in &mv.neighbour_blocks {
            if t == r || t == s {
                continue;
            }
            let (ert, est) = (state.edge_count(r, t), state.edge_count(s, t));
            d_omega = d_omega - (lf.ln_fact(ert - m) - lf.ln_fact(ert))
                - (lf.ln_fact(est + m) - lf.ln_fact(est));
        }

        // ln p(k | e', b') - ln p(k | e, b)
        let (n_r, n_s) = (state.block_size(r), state.block_size(s));
        let (h_r, h_s) = (
            state.degree_count(r, k) as u64,
            state.degree_count(s, k) as u64,
        );
        let d_prior_k = (lf.ln_fact(h_r - 1) - lf.ln_fact(h_r))
            + (lf.ln_fact(h_s + 1) - lf.ln_fact(h_s))
            - (lf.ln_fact(n_r as u64 - 1) - lf.ln_fact(n_r as u64))
            - (lf.ln_fact(n_s as u64 + 1) - lf.ln_fact(n_s as u64))
            - (lq.ln_q(e_r - k, n_r - 1) - lq.ln_q(e_r, n_r))
            - (lq.ln_q(e_s + k, n_s + 1) - lq.ln_q(e_s, n_s));

        d_omega - d_prior_k
    }

    /// Change in `S` from merging block `r` into block `s`, with the
    /// `B`-dependent constants held fixed (they are the same for every merge
    /// that removes one block).
    pub fn delta_merge(&self, state: &BlockState, r: usize, s: usize) -> F {
        if r == s {
            return F::zero();
        }
        let lf = &self.ln_fact;
        let lq = &self.ln_q;
        let (e_r, e_s) = (state.block_degree(r), state.block_degree(s));
        let (e_rr, e_ss, e_rs) = (
            state.edge_count(r, r),
            state.edge_count(s, s),
            state.edge_count(r, s),
        );
        let mut d_omega = lf.ln_fact(e_r + e_s) - lf.ln_fact(e_r) - lf.ln_fact(e_s)
            + lf.ln_fact(e_rs)
            + lf.ln_double_fact_even(e_rr)
            + lf.ln_double_fact_even(e_ss)
            - lf.ln_double_fact_even(e_rr + e_ss + 2 * e_rs);
        for t in 0..state.num_blocks() {
            if t == r || t == s {
                continue;
            }
            let (ert, est) = (state.edge_count(r, t), state.edge_count(s, t));
            if ert > 0 {
                d_omega = d_omega + lf.ln_fact(ert) + lf.ln_fact(est) - lf.ln_fact(ert + est);
            }
        }

        let (n_r, n_s) = (state.block_size(r), state.block_size(s));
        let mut d_prior_k = -(lf.ln_fact((n_r + n_s) as u64)
            - lf.ln_fact(n_r as u64)
            - lf.ln_fact(n_s as u64))
            - (lq.ln_q(e_r + e_s, n_r + n_s) - lq.ln_q(e_r, n_r) - lq.ln_q(e_s, n_s));
        for (j, c) in state.degree_histogram(r) {
            let other = state.degree_count(s, j) as u64;
            d_prior_k = d_prior_k + lf.ln_fact(c as u64 + other)
                - lf.ln_fact(c as u64)
                - lf.ln_fact(other);
        }
        d_omega - d_prior_k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabelledNetwork;

    fn lf() -> LogFactorial<f64> {
        LogFactorial::new(64)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn omega_examples() {
        // one block, e_11 = 2 (single edge): one pairing
        let net = LabelledNetwork::unlabelled(2, [(0, 1, 1)]).unwrap();
        let st = BlockState::new(&net, vec![0, 0], 1).unwrap();
        assert!(close(log_omega(&st, &lf()), 0.0));
        // e_11 = 4: three perfect matchings of four half-edges
        let net = LabelledNetwork::unlabelled(2, [(0, 1, 2)]).unwrap();
        let st = BlockState::new(&net, vec![0, 0], 1).unwrap();
        assert!(close(log_omega(&st, &lf()), 3f64.ln()));
        // single cross edge between two blocks
        let net = LabelledNetwork::unlabelled(2, [(0, 1, 1)]).unwrap();
        let st = BlockState::new(&net, vec![0, 1], 2).unwrap();
        assert!(close(log_omega(&st, &lf()), 0.0));
    }

    #[test]
    fn xi_examples() {
        let path = LabelledNetwork::unlabelled(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
        assert!(close(log_xi(&path, &lf()), 2f64.ln()));
        let single = LabelledNetwork::unlabelled(2, [(0, 1, 1)]).unwrap();
        assert!(close(log_xi(&single, &lf()), 0.0));
        let double = LabelledNetwork::unlabelled(2, [(0, 1, 2)]).unwrap();
        assert!(close(log_xi(&double, &lf()), 2f64.ln()));
    }

    #[test]
    fn likelihood_examples() {
        let double = LabelledNetwork::unlabelled(2, [(0, 1, 2)]).unwrap();
        let model = SbmModel::<f64>::new(&double, 1);
        let st = BlockState::new(&double, vec![0, 0], 1).unwrap();
        assert!(close(model.log_likelihood(&st), (2.0f64 / 3.0).ln()));
        let single = LabelledNetwork::unlabelled(2, [(0, 1, 1)]).unwrap();
        let model = SbmModel::<f64>::new(&single, 1);
        let st = BlockState::new(&single, vec![0, 0], 1).unwrap();
        assert!(close(model.log_likelihood(&st), 0.0));
    }

    #[test]
    fn prior_e_examples() {
        assert!(close(log_prior_e(1, 1, &lf()), 0.0));
        assert!(close(log_prior_e(2, 1, &lf()), -(3f64.ln())));
        assert!(close(log_prior_e(4, 0, &lf()), 0.0));
    }

    #[test]
    fn prior_k_examples() {
        let lq = LogPartitionTable::new(8, 4);
        // single vertex with a self-loop: n_r = 1, e_r = 2, q(2, 1) = 1
        let net = LabelledNetwork::unlabelled(1, [(0, 0, 1)]).unwrap();
        let st = BlockState::new(&net, vec![0], 1).unwrap();
        assert!(close(log_prior_k(&st, &lf(), &lq), 0.0));
        // n_r = 2, e_r = 2, degrees (1, 1): 2! / (2! q(2, 2)) = 1 / 2
        let net = LabelledNetwork::unlabelled(2, [(0, 1, 1)]).unwrap();
        let st = BlockState::new(&net, vec![0, 0], 1).unwrap();
        assert!(close(log_prior_k(&st, &lf(), &lq), -(2f64.ln())));
        // edgeless block
        let net = LabelledNetwork::unlabelled(3, []).unwrap();
        let st = BlockState::new(&net, vec![0, 0, 0], 1).unwrap();
        assert!(close(log_prior_k(&st, &lf(), &lq), 0.0));
    }

    #[test]
    fn description_length_positive_and_symmetric() {
        let net = LabelledNetwork::unlabelled(
            6,
            [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1), (2, 3, 1)],
        )
        .unwrap();
        let model = SbmModel::<f64>::new(&net, 2);
        let a = BlockState::new(&net, vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let b = BlockState::new(&net, vec![1, 1, 1, 0, 0, 0], 2).unwrap();
        let sa = model.description_length(&a);
        assert!(sa.is_finite() && sa > 0.0);
        assert!(close(sa, model.description_length(&b)));
    }

    #[test]
    fn delta_no_op_and_reversal() {
        let net = LabelledNetwork::unlabelled(
            5,
            [(0, 1, 1), (1, 2, 2), (2, 2, 1), (2, 3, 1), (3, 4, 1), (4, 0, 1)],
        )
        .unwrap();
        let model = SbmModel::<f64>::new(&net, 2);
        let mut st = BlockState::new(&net, vec![0, 0, 1, 1, 0], 2).unwrap();
        assert_eq!(model.delta_description_length(&st, 2, 1), 0.0);
        let forward = model.delta_description_length(&st, 2, 0);
        st.move_vertex(&net, 2, 0);
        let back = model.delta_description_length(&st, 2, 1);
        assert!((forward + back).abs() < 1e-9);
    }

    #[test]
    fn emptying_move_is_infinite() {
        let net = LabelledNetwork::unlabelled(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
        let model = SbmModel::<f64>::new(&net, 2);
        let st = BlockState::new(&net, vec![0, 0, 1], 2).unwrap();
        assert_eq!(model.delta_description_length(&st, 2, 0), f64::INFINITY);
    }

    #[test]
    fn merge_delta_matches_recompute() {
        let net = LabelledNetwork::unlabelled(
            8,
            [(0, 1, 1), (1, 2, 2), (2, 2, 1), (2, 3, 1), (3, 4, 1), (4, 0, 1), (5, 6, 1), (6, 7, 3), (7, 1, 1)],
        )
        .unwrap();
        let labels = vec![0, 1, 2, 3, 0, 1, 2, 3];
        let st = BlockState::new(&net, labels.clone(), 4).unwrap();
        let model = SbmModel::<f64>::new(&net, 4);
        let before = model.description_length(&st);
        for r in 0..4 {
            for s in 0..4 {
                if r == s {
                    continue;
                }
                let merged: Vec<usize> = labels.iter().map(|&b| if b == r { s } else { b }).collect();
                let after = model.description_length(&BlockState::new(&net, merged, 4).unwrap());
                let d = model.delta_merge(&st, r, s);
                assert!((after - before - d).abs() < 1e-9, "merge {r} -> {s}");
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let net = LabelledNetwork::unlabelled(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
        let m32 = SbmModel::<f32>::new(&net, 2);
        let m64 = SbmModel::<f64>::new(&net, 2);
        let st = BlockState::new(&net, vec![0, 0, 1], 2).unwrap();
        let diff = m32.description_length(&st) as f64 - m64.description_length(&st);
        assert!(diff.abs() < 1e-4);
    }
}
