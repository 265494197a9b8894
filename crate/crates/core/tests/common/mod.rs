//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ffbm::align::canonical_labels;
use ffbm::analysis::WeightPosteriorSummary;
use ffbm::graph::LabelledNetwork;
use ffbm::sbm::{BlockState, SbmModel};
use rand::Rng;

/// Two triangles sharing vertex 2.
pub fn bowtie() -> LabelledNetwork {
    LabelledNetwork::unlabelled(5, [(0, 1, 1), (0, 2, 1), (1, 2, 1), (2, 3, 1), (2, 4, 1), (3, 4, 1)]).unwrap()
}

/// Every labelling in `[B]^N` with all blocks nonempty.
pub fn all_labellings(n: usize, b: usize) -> Vec<Vec<usize>> {
    let total = b.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let l = code % b;
                    code /= b;
                    l
                })
                .collect::<Vec<usize>>()
        })
        .filter(|l| (0..b).all(|r| l.contains(&r)))
        .collect()
}

/// `pi(b) ∝ exp(-S(b))` over labelled partitions, by enumeration.
pub fn exact_posterior(net: &LabelledNetwork, b: usize) -> Vec<(Vec<usize>, f64)> {
    let model = SbmModel::<f64>::new(net, b);
    let states: Vec<(Vec<usize>, f64)> = all_labellings(net.num_vertices(), b)
        .into_iter()
        .map(|l| {
            let s = model.description_length(&BlockState::new(net, l.clone(), b).unwrap());
            (l, s)
        })
        .collect();
    let min = states.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    let z: f64 = states.iter().map(|(_, s)| (min - s).exp()).sum();
    states.into_iter().map(|(l, s)| (l, (min - s).exp() / z)).collect()
}

/// The exact law pushed forward to partitions up to relabelling.
pub fn exact_canonical_posterior(net: &LabelledNetwork, b: usize) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    for (l, p) in exact_posterior(net, b) {
        *out.entry(canonical_labels(&l)).or_insert(0.0) += p;
    }
    out
}

pub fn total_variation(p: &BTreeMap<Vec<usize>, f64>, q: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&Vec<usize>> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Number of partitions of `m` into at most `n` positive parts, by listing them.
pub fn brute_partition_count(m: u32, n: u32) -> u64 {
    fn walk(remaining: u32, max_part: u32, parts_left: u32) -> u64 {
        if remaining == 0 {
            return 1;
        }
        if parts_left == 0 {
            return 0;
        }
        (1..=max_part.min(remaining))
            .map(|p| walk(remaining - p, p, parts_left - 1))
            .sum()
    }
    walk(m, m, n)
}

/// Random multigraph with roughly `edges` edges, including loops and repeats.
pub fn random_multigraph<R: Rng>(n: usize, edges: usize, rng: &mut R) -> LabelledNetwork {
    let list: Vec<(usize, usize, u64)> = (0..edges)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), 1))
        .collect();
    LabelledNetwork::unlabelled(n, list).unwrap()
}

/// Features kept at cutoff `c`: some block's `mu -/+ k sigma` interval lies
/// entirely at or beyond `c` in magnitude.
pub fn kept_at(summary: &WeightPosteriorSummary<f64>, k: f64, c: f64) -> Vec<usize> {
    (0..summary.mean.cols())
        .filter(|&d| {
            (0..summary.mean.rows()).any(|i| {
                let (mu, sd) = (summary.mean[(i, d)], summary.std[(i, d)]);
                mu - k * sd >= c || mu + k * sd <= -c
            })
        })
        .collect()
}

/// Largest `c > 0` among all interval endpoints at which exactly `target`
/// features survive, with the surviving set; `None` when no such `c` exists.
pub fn naive_cutoff(summary: &WeightPosteriorSummary<f64>, k: f64, target: usize) -> Option<(Vec<usize>, f64)> {
    let mut candidates = Vec::new();
    for i in 0..summary.mean.rows() {
        for d in 0..summary.mean.cols() {
            let (mu, sd) = (summary.mean[(i, d)], summary.std[(i, d)]);
            for c in [(mu - k * sd).abs(), (mu + k * sd).abs()] {
                if c > 0.0 {
                    candidates.push(c);
                }
            }
        }
    }
    candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    candidates
        .into_iter()
        .map(|c| (kept_at(summary, k, c), c))
        .find(|(set, _)| set.len() == target)
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
