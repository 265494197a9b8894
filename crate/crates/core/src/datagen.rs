//! Synthetic instances with a known partition and known softmax weights.
//!
//! Blocks are drawn from the softmax given the features. The graph is a
//! Poisson degree-corrected SBM given the blocks. A separate routine places
//! edges uniformly given exact block edge counts and degrees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, LabelledNetwork};
use crate::matrix::Matrix;
use crate::rng::ChainRng;
use crate::softmax::softmax_probs;

/// How feature rows are produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FeatureSource {
    /// Column `d` is an independent Bernoulli(`p_d`) flag.
    Bernoulli(Vec<f64>),
    /// One uniformly drawn category, one-hot over the first `categories`
    /// columns, followed by independent Bernoulli noise flags.
    OneHotWithNoise { categories: usize, noise: Vec<f64> },
    Explicit(FeatureMatrix),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub num_vertices: usize,
    /// Planted `B x D` weights.
    pub weights: Matrix<f64>,
    pub features: FeatureSource,
    /// Symmetric `B x B` expected edge propensities.
    pub affinity: Matrix<f64>,
    /// Per-vertex degree propensities; all ones when absent.
    pub propensities: Option<Vec<f64>>,
    pub seed: u64,
}

impl GeneratorSpec {
    /// `B` one-hot informative features with weight `strength` on the matching
    /// block, `noise_features` fair-coin flags with zero weight, and an
    /// assortative affinity with `omega_in` on the diagonal and `omega_out`
    /// elsewhere.
    pub fn assortative(
        num_vertices: usize,
        num_blocks: usize,
        noise_features: usize,
        strength: f64,
        omega_in: f64,
        omega_out: f64,
        seed: u64,
    ) -> Self {
        let d = num_blocks + noise_features;
        Self {
            num_vertices,
            weights: Matrix::from_fn(num_blocks, d, |k, j| if k == j { strength } else { 0.0 }),
            features: FeatureSource::OneHotWithNoise {
                categories: num_blocks,
                noise: vec![0.5; noise_features],
            },
            affinity: Matrix::from_fn(num_blocks, num_blocks, |r, s| {
                if r == s {
                    omega_in
                } else {
                    omega_out
                }
            }),
            propensities: None,
            seed,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_features(&self) -> usize {
        self.weights.cols()
    }
}

/// A generated network with its planted partition and weights.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub network: LabelledNetwork,
    pub labels: Vec<usize>,
    pub weights: Matrix<f64>,
}

fn feature_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

pub fn sample_features<R: Rng + ?Sized>(
    num_vertices: usize,
    source: &FeatureSource,
    rng: &mut R,
) -> Result<FeatureMatrix> {
    let check = |p: &[f64]| {
        if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            Err(Error::invalid("feature probabilities must lie in [0, 1]"))
        } else {
            Ok(())
        }
    };
    match source {
        FeatureSource::Explicit(x) => {
            if x.num_rows() != num_vertices {
                return Err(Error::invalid(format!(
                    "explicit features have {} rows, expected {num_vertices}",
                    x.num_rows()
                )));
            }
            Ok(x.clone())
        }
        FeatureSource::Bernoulli(p) => {
            check(p)?;
            let rows = (0..num_vertices)
                .map(|_| (0..p.len()).filter(|&d| rng.random::<f64>() < p[d]).collect())
                .collect();
            FeatureMatrix::from_active(feature_names(p.len()), rows)
        }
        FeatureSource::OneHotWithNoise { categories, noise } => {
            check(noise)?;
            if *categories == 0 {
                return Err(Error::invalid("need at least one category"));
            }
            let rows = (0..num_vertices)
                .map(|_| {
                    let mut row = vec![rng.random_range(0..*categories)];
                    row.extend((0..noise.len()).filter(|&d| rng.random::<f64>() < noise[d]).map(|d| categories + d));
                    row
                })
                .collect();
            FeatureMatrix::from_active(feature_names(categories + noise.len()), rows)
        }
    }
}

/// `b_i ~ Categorical(phi(x_i; W))`, independently per vertex.
pub fn sample_blocks_with<R: Rng + ?Sized>(x: &FeatureMatrix, w: &Matrix<f64>, rng: &mut R) -> Result<Vec<usize>> {
    if w.cols() != x.num_cols() {
        return Err(Error::invalid(format!(
            "weights have {} columns but features have {}",
            w.cols(),
            x.num_cols()
        )));
    }
    if w.rows() == 0 {
        return Err(Error::invalid("weights must have at least one block"));
    }
    Ok((0..x.num_rows())
        .map(|i| {
            let p = softmax_probs(w, x.active(i));
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, &pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    return k;
                }
            }
            p.len() - 1
        })
        .collect())
}

pub fn sample_blocks(x: &FeatureMatrix, w: &Matrix<f64>, seed: u64) -> Result<Vec<usize>> {
    sample_blocks_with(x, w, &mut ChainRng::seed_from_u64(seed))
}

/// Poisson DC-SBM: `A_ij ~ Poisson(p_i p_j omega_{b_i b_j})` for `i < j`, and
/// `Poisson(p_i^2 omega_{b_i b_i} / 2)` self-loops.
pub fn sample_graph_with<R: Rng + ?Sized>(
    labels: &[usize],
    affinity: &Matrix<f64>,
    propensities: Option<&[f64]>,
    rng: &mut R,
) -> Result<LabelledNetwork> {
    let n = labels.len();
    let b = affinity.rows();
    if affinity.cols() != b {
        return Err(Error::invalid("affinity matrix must be square"));
    }
    for r in 0..b {
        for s in 0..b {
            let v = affinity[(r, s)];
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("affinities must be finite and nonnegative"));
            }
            if v != affinity[(s, r)] {
                return Err(Error::invalid("affinity matrix must be symmetric"));
            }
        }
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= b) {
        return Err(Error::LabelOutOfRange { label: l, num_blocks: b });
    }
    let ones;
    let p = match propensities {
        Some(p) => {
            if p.len() != n || p.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::invalid("need one positive propensity per vertex"));
            }
            p
        }
        None => {
            ones = vec![1.0; n];
            &ones[..]
        }
    };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut mean = p[i] * p[j] * affinity[(labels[i], labels[j])];
            if i == j {
                mean /= 2.0;
            }
            if mean > 0.0 {
                let m = Poisson::new(mean)
                    .map_err(|e| Error::invalid(e.to_string()))?
                    .sample(rng) as u64;
                if m > 0 {
                    edges.push((i, j, m));
                }
            }
        }
    }
    LabelledNetwork::unlabelled(n, edges)
}

pub fn sample_graph(
    labels: &[usize],
    affinity: &Matrix<f64>,
    propensities: Option<&[f64]>,
    seed: u64,
) -> Result<LabelledNetwork> {
    sample_graph_with(labels, affinity, propensities, &mut ChainRng::seed_from_u64(seed))
}

/// Uniform random pairing of half-edges subject to block edge counts `e`
/// (diagonal entries count each internal edge twice) and degrees `k`.
pub fn sample_microcanonical_graph_with<R: Rng + ?Sized>(
    labels: &[usize],
    e: &Matrix<u64>,
    degrees: &[u64],
    rng: &mut R,
) -> Result<LabelledNetwork> {
    let n = labels.len();
    let b = e.rows();
    if e.cols() != b {
        return Err(Error::invalid("edge count matrix must be square"));
    }
    if degrees.len() != n {
        return Err(Error::invalid("need one degree per vertex"));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= b) {
        return Err(Error::LabelOutOfRange { label: l, num_blocks: b });
    }
    let mut stubs: Vec<Vec<usize>> = vec![Vec::new(); b];
    for (i, (&l, &k)) in labels.iter().zip(degrees).enumerate() {
        stubs[l].extend(std::iter::repeat_n(i, k as usize));
    }
    for r in 0..b {
        if e[(r, r)] % 2 != 0 {
            return Err(Error::invalid(format!("e_{r}{r} must be even")));
        }
        let mut total = 0;
        for s in 0..b {
            if e[(r, s)] != e[(s, r)] {
                return Err(Error::invalid("edge count matrix must be symmetric"));
            }
            total += e[(r, s)];
        }
        if total != stubs[r].len() as u64 {
            return Err(Error::invalid(format!(
                "block {r} has {} half-edges but its edge counts sum to {total}",
                stubs[r].len()
            )));
        }
        stubs[r].shuffle(rng);
    }
    let mut cursor = vec![0usize; b];
    let take = |r: usize, count: usize, cursor: &mut [usize]| {
        let slice = stubs[r][cursor[r]..cursor[r] + count].to_vec();
        cursor[r] += count;
        slice
    };
    let mut edges = Vec::new();
    for r in 0..b {
        let internal = take(r, e[(r, r)] as usize, &mut cursor);
        edges.extend(internal.chunks(2).map(|p| (p[0], p[1], 1)));
        for s in r + 1..b {
            let count = e[(r, s)] as usize;
            let left = take(r, count, &mut cursor);
            let right = take(s, count, &mut cursor);
            edges.extend(left.into_iter().zip(right).map(|(u, v)| (u, v, 1)));
        }
    }
    LabelledNetwork::unlabelled(n, edges)
}

pub fn sample_microcanonical_graph(
    labels: &[usize],
    e: &Matrix<u64>,
    degrees: &[u64],
    seed: u64,
) -> Result<LabelledNetwork> {
    sample_microcanonical_graph_with(labels, e, degrees, &mut ChainRng::seed_from_u64(seed))
}

/// Features, then blocks, then the graph, all from `spec.seed`.
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedInstance> {
    if spec.affinity.rows() != spec.num_blocks() {
        return Err(Error::invalid("affinity and weights disagree on the number of blocks"));
    }
    let mut rng = ChainRng::seed_from_u64(spec.seed);
    let x = sample_features(spec.num_vertices, &spec.features, &mut rng)?;
    let labels = sample_blocks_with(&x, &spec.weights, &mut rng)?;
    let graph = sample_graph_with(&labels, &spec.affinity, spec.propensities.as_deref(), &mut rng)?;
    Ok(GeneratedInstance {
        network: graph.with_features(x)?,
        labels,
        weights: spec.weights.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::BlockState;

    #[test]
    fn zero_affinity_gives_empty_graph() {
        let g = sample_graph(&[0, 1, 0, 1], &Matrix::zeros(2, 2), None, 1).unwrap();
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn rejects_asymmetric_affinity() {
        let w = Matrix::from_vec(2, 2, vec![1.0, 0.5, 0.2, 1.0]);
        assert!(sample_graph(&[0, 1], &w, None, 1).is_err());
    }

    #[test]
    fn edge_count_concentrates() {
        let labels: Vec<usize> = (0..200).map(|i| i % 2).collect();
        let w = Matrix::from_vec(2, 2, vec![0.05, 0.01, 0.01, 0.05]);
        let g = sample_graph(&labels, &w, None, 4).unwrap();
        // 1/2 sum_ij mean, diagonal included at half weight
        let expected = 2.0 * (100.0 * 100.0 / 2.0) * 0.05 + 100.0 * 100.0 * 0.01;
        let e = g.num_edges() as f64;
        assert!((e - expected).abs() < 4.0 * expected.sqrt(), "{e} vs {expected}");
    }

    #[test]
    fn forced_single_edge() {
        let e = Matrix::from_vec(1, 1, vec![2]);
        let g = sample_microcanonical_graph(&[0, 0], &e, &[1, 1], 3).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 1)]);
    }

    #[test]
    fn microcanonical_output_reproduces_constraints() {
        let labels = vec![0, 0, 1, 1, 2, 2, 0];
        let degrees = vec![3, 1, 2, 2, 4, 0, 2];
        let e = Matrix::from_vec(3, 3, vec![2, 2, 2, 2, 0, 2, 2, 2, 0]);
        for seed in 0..20 {
            let g = sample_microcanonical_graph(&labels, &e, &degrees, seed).unwrap();
            assert_eq!(g.degrees(), &degrees[..]);
            let st = BlockState::new(&g, labels.clone(), 3).unwrap();
            for r in 0..3 {
                for s in 0..3 {
                    assert_eq!(st.edge_count(r, s), e[(r, s)]);
                }
            }
        }
    }

    #[test]
    fn microcanonical_rejects_inconsistent_input() {
        let e = Matrix::from_vec(1, 1, vec![4]);
        assert!(sample_microcanonical_graph(&[0, 0], &e, &[1, 1], 0).is_err());
        let odd = Matrix::from_vec(1, 1, vec![1]);
        assert!(sample_microcanonical_graph(&[0], &odd, &[1], 0).is_err());
    }

    #[test]
    fn dominant_weights_pick_the_feature_block() {
        let spec = GeneratorSpec::assortative(500, 3, 2, 5.0, 0.0, 0.0, 11);
        let inst = generate(&spec).unwrap();
        let agree = (0..500)
            .filter(|&i| inst.network.features().active(i)[0] == inst.labels[i])
            .count();
        // phi = e^5 / (e^5 + 2) per vertex
        assert!(agree as f64 / 500.0 > 0.95);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::assortative(60, 2, 1, 3.0, 0.2, 0.02, 5);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.network.edges(), b.network.edges());
    }
}
