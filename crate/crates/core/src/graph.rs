//! Labelled undirected multigraphs and the train/test vertex split.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::ChainRng;

/// Binary `N x D` feature matrix stored as per-row lists of active columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    names: Vec<String>,
    offsets: Vec<usize>,
    active: Vec<usize>,
}

impl FeatureMatrix {
    /// A matrix with `rows` rows and no columns.
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            names: Vec::new(),
            offsets: vec![0; rows + 1],
            active: Vec::new(),
        }
    }

    /// Builds from row-major entries, each of which must be 0 or 1.
    pub fn from_dense(rows: usize, names: Vec<String>, entries: &[u8]) -> Result<Self> {
        let cols = names.len();
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "feature matrix expects {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let mut offsets = Vec::with_capacity(rows + 1);
        let mut active = Vec::new();
        offsets.push(0);
        for i in 0..rows {
            for (d, &x) in entries[i * cols..(i + 1) * cols].iter().enumerate() {
                match x {
                    0 => {}
                    1 => active.push(d),
                    other => {
                        return Err(Error::invalid(format!(
                            "feature entry ({i}, {d}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
            offsets.push(active.len());
        }
        Ok(Self {
            rows,
            names,
            offsets,
            active,
        })
    }

    /// Builds from per-row active column lists.
    pub fn from_active(names: Vec<String>, rows: Vec<Vec<usize>>) -> Result<Self> {
        let cols = names.len();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut active = Vec::new();
        offsets.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable();
            row.dedup();
            if let Some(&d) = row.iter().find(|&&d| d >= cols) {
                return Err(Error::invalid(format!(
                    "row {i} activates column {d} but there are only {cols} columns"
                )));
            }
            active.extend(row);
            offsets.push(active.len());
        }
        Ok(Self {
            rows: offsets.len() - 1,
            names,
            offsets,
            active,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Sorted indices of the columns set to 1 in row `i`.
    #[inline]
    pub fn active(&self, i: usize) -> &[usize] {
        &self.active[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn get(&self, i: usize, d: usize) -> bool {
        self.active(i).binary_search(&d).is_ok()
    }

    pub fn to_dense(&self) -> Vec<u8> {
        let cols = self.num_cols();
        let mut out = vec![0u8; self.rows * cols];
        for i in 0..self.rows {
            for &d in self.active(i) {
                out[i * cols + d] = 1;
            }
        }
        out
    }

    /// Rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let picked = rows.iter().map(|&i| self.active(i).to_vec()).collect();
        Self::from_active(self.names.clone(), picked).expect("columns already validated")
    }

    /// Columns in the given order; the result is re-indexed `0..columns.len()`.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.num_cols()];
        for (new, &old) in columns.iter().enumerate() {
            remap[old] = new;
        }
        let names = columns.iter().map(|&d| self.names[d].clone()).collect();
        let rows = (0..self.rows)
            .map(|i| {
                self.active(i)
                    .iter()
                    .filter_map(|&d| (remap[d] != usize::MAX).then_some(remap[d]))
                    .collect()
            })
            .collect();
        Self::from_active(names, rows).expect("remapped columns are in range")
    }

    /// Columns of `self` followed by the columns of `other`.
    pub fn concat_columns(&self, other: &FeatureMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::invalid(format!(
                "cannot join feature matrices with {} and {} rows",
                self.rows, other.rows
            )));
        }
        let shift = self.num_cols();
        let names = self.names.iter().chain(&other.names).cloned().collect();
        let rows = (0..self.rows)
            .map(|i| {
                let mut row = self.active(i).to_vec();
                row.extend(other.active(i).iter().map(|&d| d + shift));
                row
            })
            .collect();
        Self::from_active(names, rows)
    }
}

/// An undirected multigraph with self-loops plus a binary feature matrix.
///
/// Edges are stored canonically as `(u, v, multiplicity)` with `u <= v`, sorted
/// and merged. A self-loop of multiplicity `m` contributes `A_ii = 2m`, hence
/// `2m` to the degree of its vertex.
#[derive(Debug, Clone)]
pub struct LabelledNetwork {
    num_vertices: usize,
    edges: Vec<(usize, usize, u64)>,
    num_edges: u64,
    features: FeatureMatrix,
    degrees: Vec<u64>,
    // CSR over half-edges: neighbour of each half-edge leaving a vertex.
    half_edge_offsets: Vec<usize>,
    half_edges: Vec<usize>,
}

impl LabelledNetwork {
    /// Accumulates duplicate and reversed pairs into multiplicities.
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
        features: FeatureMatrix,
    ) -> Result<Self> {
        if features.num_rows() != num_vertices {
            return Err(Error::invalid(format!(
                "feature matrix has {} rows for {} vertices",
                features.num_rows(),
                num_vertices
            )));
        }
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, m) in edges {
            for x in [u, v] {
                if x >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: x,
                        num_vertices,
                    });
                }
            }
            if m == 0 {
                return Err(Error::invalid(format!("edge ({u}, {v}) has multiplicity 0")));
            }
            *merged.entry((u.min(v), u.max(v))).or_default() += m;
        }
        let edges: Vec<_> = merged.into_iter().map(|((u, v), m)| (u, v, m)).collect();

        let mut degrees = vec![0u64; num_vertices];
        for &(u, v, m) in &edges {
            degrees[u] += m;
            degrees[v] += m;
        }
        let num_edges = edges.iter().map(|e| e.2).sum();

        let mut half_edge_offsets = Vec::with_capacity(num_vertices + 1);
        half_edge_offsets.push(0usize);
        for &k in &degrees {
            let last = *half_edge_offsets.last().unwrap();
            half_edge_offsets.push(last + k as usize);
        }
        let mut fill = half_edge_offsets.clone();
        let mut half_edges = vec![0usize; *half_edge_offsets.last().unwrap()];
        for &(u, v, m) in &edges {
            for _ in 0..m {
                half_edges[fill[u]] = v;
                fill[u] += 1;
                half_edges[fill[v]] = u;
                fill[v] += 1;
            }
        }

        Ok(Self {
            num_vertices,
            edges,
            num_edges,
            features,
            degrees,
            half_edge_offsets,
            half_edges,
        })
    }

    /// Graph without features (`D = 0`).
    pub fn unlabelled(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        Self::new(num_vertices, edges, FeatureMatrix::empty(num_vertices))
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Total edge count `E`, multiplicities included.
    pub fn num_edges(&self) -> u64 {
        self.num_edges
    }

    pub fn edges(&self) -> &[(usize, usize, u64)] {
        &self.edges
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn with_features(self, features: FeatureMatrix) -> Result<Self> {
        Self::new(self.num_vertices, self.edges, features)
    }

    /// `k_i = sum_j A_ij`.
    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn degree(&self, i: usize) -> u64 {
        self.degrees[i]
    }

    pub fn max_degree(&self) -> u64 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Neighbour at the far end of every half-edge leaving `i`; a neighbour
    /// joined by `m` parallel edges appears `m` times and a self-loop appears
    /// twice per loop.
    #[inline]
    pub fn half_edges(&self, i: usize) -> &[usize] {
        &self.half_edges[self.half_edge_offsets[i]..self.half_edge_offsets[i + 1]]
    }

    /// Adjacency entry with the `A_ii = 2 * loops` convention.
    pub fn adjacency(&self, i: usize, j: usize) -> u64 {
        let key = (i.min(j), i.max(j));
        let m = self
            .edges
            .binary_search_by(|&(u, v, _)| (u, v).cmp(&key))
            .map(|pos| self.edges[pos].2)
            .unwrap_or(0);
        if i == j {
            2 * m
        } else {
            m
        }
    }
}

/// Degree sequence of a network.
pub fn degrees(net: &LabelledNetwork) -> Vec<u64> {
    net.degrees().to_vec()
}

/// Random train/test partition of the vertex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSplit {
    pub fraction: f64,
    /// Sorted ascending.
    pub train: Vec<usize>,
    /// Sorted ascending.
    pub test: Vec<usize>,
}

/// Uniformly random split with `|train| = round(f * N)`, rounding half up.
pub fn split_vertices(num_vertices: usize, fraction: f64, seed: u64) -> Result<VertexSplit> {
    let mut rng = ChainRng::seed_from_u64(seed);
    split_vertices_with(num_vertices, fraction, &mut rng)
}

pub fn split_vertices_with<R: rand::Rng + ?Sized>(
    num_vertices: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<VertexSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "training fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if num_vertices < 2 {
        return Err(Error::invalid("a split needs at least two vertices"));
    }
    let train_size = (fraction * num_vertices as f64 + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..num_vertices).collect();
    order.shuffle(rng);
    let mut train = order[..train_size].to_vec();
    let mut test = order[train_size..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(VertexSplit {
        fraction,
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_degrees() {
        let net = LabelledNetwork::unlabelled(3, [(0, 1, 1), (1, 2, 1)]).unwrap();
        assert_eq!(degrees(&net), vec![1, 2, 1]);
        assert_eq!(net.num_edges(), 2);
    }

    #[test]
    fn self_loop_counts_twice() {
        let net = LabelledNetwork::unlabelled(1, [(0, 0, 1)]).unwrap();
        assert_eq!(degrees(&net), vec![2]);
        assert_eq!(net.adjacency(0, 0), 2);
        assert_eq!(net.half_edges(0), &[0, 0]);
    }

    #[test]
    fn parallel_edges_accumulate() {
        let net = LabelledNetwork::unlabelled(2, [(0, 1, 1), (1, 0, 1)]).unwrap();
        assert_eq!(net.edges(), &[(0, 1, 2)]);
        // brute-force half-edge count: each parallel edge leaves one stub at each end
        let stubs: Vec<usize> = (0..2).map(|i| net.half_edges(i).len()).collect();
        assert_eq!(stubs, vec![2, 2]);
        assert_eq!(degrees(&net), vec![2, 2]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            LabelledNetwork::unlabelled(2, [(0, 2, 1)]),
            Err(Error::VertexOutOfRange { vertex: 2, .. })
        ));
        assert!(LabelledNetwork::unlabelled(2, [(0, 1, 0)]).is_err());
        assert!(LabelledNetwork::new(3, [], FeatureMatrix::empty(2)).is_err());
    }

    #[test]
    fn feature_matrix_rejects_non_binary() {
        let names = vec!["a".to_string()];
        assert!(FeatureMatrix::from_dense(1, names.clone(), &[2]).is_err());
        let x = FeatureMatrix::from_dense(2, names, &[1, 0]).unwrap();
        assert!(x.get(0, 0));
        assert!(!x.get(1, 0));
    }

    #[test]
    fn column_selection_reindexes() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let x = FeatureMatrix::from_dense(2, names, &[1, 0, 1, 0, 1, 1]).unwrap();
        let y = x.select_columns(&[2, 0]);
        assert_eq!(y.names(), &["c".to_string(), "a".to_string()]);
        assert_eq!(y.to_dense(), vec![1, 1, 1, 0]);
    }

    #[test]
    fn split_sizes() {
        let s = split_vertices(10, 0.7, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (7, 3));
        let s = split_vertices(2, 0.5, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
        assert_eq!(split_vertices(10, 0.7, 9).unwrap(), split_vertices(10, 0.7, 9).unwrap());
        assert!(split_vertices(10, 1.0, 0).is_err());
        assert!(split_vertices(10, 0.0, 0).is_err());
    }

    fn multigraph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
        (1usize..30).prop_flat_map(|n| {
            let edge = (0..n, 0..n, 1u64..4);
            (Just(n), proptest::collection::vec(edge, 0..80))
        })
    }

    proptest! {
        #[test]
        fn handshake((n, edges) in multigraph()) {
            let net = LabelledNetwork::unlabelled(n, edges).unwrap();
            let sum: u64 = net.degrees().iter().sum();
            prop_assert_eq!(sum, 2 * net.num_edges());
            for i in 0..n {
                prop_assert_eq!(net.half_edges(i).len() as u64, net.degree(i));
                let row: u64 = (0..n).map(|j| net.adjacency(i, j)).sum();
                prop_assert_eq!(row, net.degree(i));
            }
        }

        #[test]
        fn split_partitions_vertices(n in 2usize..200, f in 0.01f64..0.99, seed in any::<u64>()) {
            let s = split_vertices(n, f, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.train.len(), (f * n as f64 + 0.5).floor() as usize);
        }
    }
}
