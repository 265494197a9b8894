use crate::error::{Error, Result};
use crate::graph::LabelledNetwork;

/// A partition `b` together with the sufficient statistics of the
/// microcanonical DC-SBM.
///
/// `e_rr` holds twice the number of edges inside block `r`, so every row sum
/// `e_r = sum_s e_rs` counts the half-edges attached to block `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockState {
    num_blocks: usize,
    labels: Vec<usize>,
    degrees: Vec<u64>,
    edge_counts: Vec<u64>,
    block_degrees: Vec<u64>,
    block_sizes: Vec<usize>,
    // degree_hist[r * hist_width + j] = eta_j^r
    degree_hist: Vec<usize>,
    hist_width: usize,
}

/// How a single-vertex move rearranges the half-edges of the moved vertex.
#[derive(Debug, Clone)]
pub struct VertexMove {
    pub vertex: usize,
    pub from: usize,
    pub to: usize,
    pub degree: u64,
    /// Self-loop half-edges, `A_ii`.
    pub loops: u64,
    /// `(t, m_t)`: half-edges to other vertices currently in block `t`, with `m_t > 0`.
    pub neighbour_blocks: Vec<(usize, u64)>,
}

impl VertexMove {
    pub fn new(net: &LabelledNetwork, state: &BlockState, vertex: usize, to: usize) -> Self {
        let (neighbour_blocks, loops) = state.neighbour_block_counts(net, vertex);
        Self {
            vertex,
            from: state.labels[vertex],
            to,
            degree: state.degrees[vertex],
            loops,
            neighbour_blocks,
        }
    }

    pub fn neighbours_in(&self, t: usize) -> u64 {
        self.neighbour_blocks
            .iter()
            .find(|&&(b, _)| b == t)
            .map_or(0, |&(_, m)| m)
    }

    /// `e'_{tu}` after the move.
    pub fn edge_count_after(&self, state: &BlockState, t: usize, u: usize) -> u64 {
        let (r, s) = (self.from, self.to);
        let e = state.edge_count(t, u);
        if r == s {
            return e;
        }
        let other = |x: usize| x != r && x != s;
        if t == r && u == r {
            e - 2 * self.neighbours_in(r) - self.loops
        } else if t == s && u == s {
            e + 2 * self.neighbours_in(s) + self.loops
        } else if (t == r && u == s) || (t == s && u == r) {
            e + self.neighbours_in(r) - self.neighbours_in(s)
        } else if t == r && other(u) {
            e - self.neighbours_in(u)
        } else if u == r && other(t) {
            e - self.neighbours_in(t)
        } else if t == s && other(u) {
            e + self.neighbours_in(u)
        } else if u == s && other(t) {
            e + self.neighbours_in(t)
        } else {
            e
        }
    }

    /// `e'_t` after the move.
    pub fn block_degree_after(&self, state: &BlockState, t: usize) -> u64 {
        let e = state.block_degree(t);
        if self.from == self.to {
            e
        } else if t == self.from {
            e - self.degree
        } else if t == self.to {
            e + self.degree
        } else {
            e
        }
    }
}

impl BlockState {
    pub fn new(net: &LabelledNetwork, labels: Vec<usize>, num_blocks: usize) -> Result<Self> {
        if labels.len() != net.num_vertices() {
            return Err(Error::invalid(format!(
                "partition has {} labels for {} vertices",
                labels.len(),
                net.num_vertices()
            )));
        }
        if num_blocks == 0 {
            return Err(Error::invalid("number of blocks must be at least 1"));
        }
        if let Some(&label) = labels.iter().find(|&&b| b >= num_blocks) {
            return Err(Error::LabelOutOfRange { label, num_blocks });
        }
        let b = num_blocks;
        let hist_width = net.max_degree() as usize + 1;
        let mut edge_counts = vec![0u64; b * b];
        for &(u, v, m) in net.edges() {
            let (r, s) = (labels[u], labels[v]);
            edge_counts[r * b + s] += m;
            edge_counts[s * b + r] += m;
        }
        let mut block_sizes = vec![0usize; b];
        let mut degree_hist = vec![0usize; b * hist_width];
        for (i, &r) in labels.iter().enumerate() {
            block_sizes[r] += 1;
            degree_hist[r * hist_width + net.degree(i) as usize] += 1;
        }
        let block_degrees = (0..b)
            .map(|r| edge_counts[r * b..(r + 1) * b].iter().sum())
            .collect();
        Ok(Self {
            num_blocks,
            labels,
            degrees: net.degrees().to_vec(),
            edge_counts,
            block_degrees,
            block_sizes,
            degree_hist,
            hist_width,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    #[inline]
    pub fn edge_count(&self, r: usize, s: usize) -> u64 {
        self.edge_counts[r * self.num_blocks + s]
    }

    #[inline]
    pub fn block_degree(&self, r: usize) -> u64 {
        self.block_degrees[r]
    }

    #[inline]
    pub fn block_size(&self, r: usize) -> usize {
        self.block_sizes[r]
    }

    /// `eta_j^r`: vertices of degree `j` in block `r`.
    #[inline]
    pub fn degree_count(&self, r: usize, j: u64) -> usize {
        let j = j as usize;
        if j >= self.hist_width {
            0
        } else {
            self.degree_hist[r * self.hist_width + j]
        }
    }

    /// Nonzero `(j, eta_j^r)` pairs of block `r`.
    pub fn degree_histogram(&self, r: usize) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.degree_hist[r * self.hist_width..(r + 1) * self.hist_width]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j as u64, c))
    }

    pub fn num_nonempty_blocks(&self) -> usize {
        self.block_sizes.iter().filter(|&&n| n > 0).count()
    }

    /// Half-edges from `i` to other vertices grouped by block, and `A_ii`.
    pub fn neighbour_block_counts(
        &self,
        net: &LabelledNetwork,
        i: usize,
    ) -> (Vec<(usize, u64)>, u64) {
        let mut counts: Vec<(usize, u64)> = Vec::new();
        let mut loops = 0;
        for &j in net.half_edges(i) {
            if j == i {
                loops += 1;
                continue;
            }
            let t = self.labels[j];
            match counts.iter_mut().find(|(b, _)| *b == t) {
                Some((_, m)) => *m += 1,
                None => counts.push((t, 1)),
            }
        }
        counts.sort_unstable();
        (counts, loops)
    }

    /// Moves vertex `i` into block `s`, updating every statistic.
    pub fn move_vertex(&mut self, net: &LabelledNetwork, i: usize, s: usize) {
        let mv = VertexMove::new(net, self, i, s);
        self.apply(&mv);
    }

    /// Applies a move computed against the current state.
    pub fn apply(&mut self, mv: &VertexMove) {
        let (r, s) = (mv.from, mv.to);
        debug_assert_eq!(self.labels[mv.vertex], r);
        if r == s {
            return;
        }
        let b = self.num_blocks;
        let m_r = mv.neighbours_in(r);
        let m_s = mv.neighbours_in(s);
        self.edge_counts[r * b + r] -= 2 * m_r + mv.loops;
        self.edge_counts[s * b + s] += 2 * m_s + mv.loops;
        let rs = self.edge_counts[r * b + s] + m_r - m_s;
        self.edge_counts[r * b + s] = rs;
        self.edge_counts[s * b + r] = rs;
        for &(t, m) in &mv.neighbour_blocks {
            if t == r || t == s {
                continue;
            }
            self.edge_counts[r * b + t] -= m;
            self.edge_counts[t * b + r] -= m;
            self.edge_counts[s * b + t] += m;
            self.edge_counts[t * b + s] += m;
        }
        self.block_degrees[r] -= mv.degree;
        self.block_degrees[s] += mv.degree;
        self.block_sizes[r] -= 1;
        self.block_sizes[s] += 1;
        let k = mv.degree as usize;
        self.degree_hist[r * self.hist_width + k] -= 1;
        self.degree_hist[s * self.hist_width + k] += 1;
        self.labels[mv.vertex] = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path() -> LabelledNetwork {
        LabelledNetwork::unlabelled(3, [(0, 1, 1), (1, 2, 1)]).unwrap()
    }

    #[test]
    fn path_statistics() {
        let st = BlockState::new(&path(), vec![0, 0, 1], 2).unwrap();
        // brute force over ordered endpoint pairs
        assert_eq!(
            [
                st.edge_count(0, 0),
                st.edge_count(0, 1),
                st.edge_count(1, 0),
                st.edge_count(1, 1)
            ],
            [2, 1, 1, 0]
        );
        assert_eq!((st.block_size(0), st.block_size(1)), (2, 1));
        assert_eq!(st.degree_count(0, 1), 1);
        assert_eq!(st.degree_count(0, 2), 1);
    }

    #[test]
    fn single_block_and_empty_graph() {
        let net = path();
        let st = BlockState::new(&net, vec![0; 3], 1).unwrap();
        assert_eq!(st.edge_count(0, 0), 2 * net.num_edges());
        let empty = LabelledNetwork::unlabelled(4, []).unwrap();
        let st = BlockState::new(&empty, vec![0, 1, 0, 1], 2).unwrap();
        assert!((0..2).all(|r| (0..2).all(|s| st.edge_count(r, s) == 0)));
    }

    #[test]
    fn rejects_out_of_range_label() {
        assert!(matches!(
            BlockState::new(&path(), vec![0, 2, 1], 2),
            Err(Error::LabelOutOfRange { label: 2, .. })
        ));
    }

    #[test]
    fn incremental_moves_match_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 25;
        let edges: Vec<_> = (0..90)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(1..3)))
            .collect();
        let net = LabelledNetwork::unlabelled(n, edges).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let mut st = BlockState::new(&net, labels, 4).unwrap();
        for _ in 0..500 {
            let i = rng.random_range(0..n);
            let s = rng.random_range(0..4);
            let mv = VertexMove::new(&net, &st, i, s);
            for t in 0..4 {
                for u in 0..4 {
                    let predicted = mv.edge_count_after(&st, t, u);
                    let mut moved = st.clone();
                    moved.apply(&mv);
                    assert_eq!(predicted, moved.edge_count(t, u));
                }
            }
            st.apply(&mv);
            let rebuilt = BlockState::new(&net, st.labels().to_vec(), 4).unwrap();
            assert_eq!(st, rebuilt);
        }
    }
}
