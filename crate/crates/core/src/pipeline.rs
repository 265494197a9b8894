//! One repetition of the full inference pipeline and aggregation over
//! repetitions.
//!
//! blocks -> responsibilities -> split -> weights -> feature screen ->
//! retrained weights -> metrics.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    block_accuracy, cross_entropy_loss, mean_description_length, reduce_dimension, summarize_weights,
    EvaluationReport, ReducedFeatureSet, ReductionReport,
};
use crate::block_chain::{estimate_responsibilities, run_b_chain, BChainOutput, Responsibilities};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::{split_vertices, LabelledNetwork, VertexSplit};
use crate::mala::{run_theta_chain, MalaOutput, ThetaChainConfig};
use crate::matrix::Matrix;
use crate::softmax::ObjectiveContext;

/// Block chain output and the responsibilities estimated from it.
#[derive(Debug, Clone)]
pub struct BlockStage {
    pub chain: BChainOutput<f64>,
    pub responsibilities: Responsibilities<f64>,
}

pub fn infer_blocks(net: &LabelledNetwork, cfg: &RunConfig, repetition: u64) -> Result<BlockStage> {
    let chain = run_b_chain::<f64>(net, cfg.num_blocks, &cfg.block_chain(repetition))?;
    let responsibilities = estimate_responsibilities(&chain.samples, &chain.initial, cfg.num_blocks)?;
    Ok(BlockStage { chain, responsibilities })
}

pub fn split(net: &LabelledNetwork, cfg: &RunConfig, repetition: u64) -> Result<VertexSplit> {
    split_vertices(net.num_vertices(), cfg.f, cfg.split_seed(repetition))
}

/// Weight chain on the training vertices, optionally restricted to `columns`.
pub fn fit_weights(
    net: &LabelledNetwork,
    y_hat: &Matrix<f64>,
    split: &VertexSplit,
    columns: Option<&[usize]>,
    chain: &ThetaChainConfig,
) -> Result<MalaOutput<f64>> {
    let mut x = net.features().select_rows(&split.train);
    if let Some(c) = columns {
        x = x.select_columns(c);
    }
    let y = Matrix::from_fn(split.train.len(), y_hat.cols(), |i, j| y_hat[(split.train[i], j)]);
    let ctx = ObjectiveContext::new(x, y, chain.sigma)?;
    run_theta_chain(&ctx, chain)
}

/// Feature screen on the retained weights, when `k` and `D'` are configured.
pub fn screen_features(samples: &[Matrix<f64>], cfg: &RunConfig) -> Result<Option<ReducedFeatureSet<f64>>> {
    match (cfg.k, cfg.reduced_dim) {
        (Some(k), Some(d)) => Ok(Some(reduce_dimension(&summarize_weights(samples)?, k, d)?)),
        _ => Ok(None),
    }
}

/// Losses of weight samples on the train and test vertices.
fn losses(
    net: &LabelledNetwork,
    y_hat: &Matrix<f64>,
    split: &VertexSplit,
    samples: &[Matrix<f64>],
    columns: Option<&[usize]>,
) -> Result<(f64, f64)> {
    let x = match columns {
        Some(c) => net.features().select_columns(c),
        None => net.features().clone(),
    };
    Ok((
        cross_entropy_loss(samples, y_hat, &x, &split.train)?,
        cross_entropy_loss(samples, y_hat, &x, &split.test)?,
    ))
}

/// Everything produced by one repetition.
#[derive(Debug, Clone)]
pub struct RepetitionResult {
    pub blocks: BlockStage,
    pub split: VertexSplit,
    pub theta: MalaOutput<f64>,
    pub reduced: Option<(ReducedFeatureSet<f64>, MalaOutput<f64>)>,
    pub report: EvaluationReport,
}

/// Metrics from the stage outputs.
pub fn evaluate(
    net: &LabelledNetwork,
    repetition: usize,
    blocks: &BlockStage,
    split: &VertexSplit,
    theta: &MalaOutput<f64>,
    reduced: Option<&(ReducedFeatureSet<f64>, MalaOutput<f64>)>,
) -> Result<EvaluationReport> {
    let y_hat = &blocks.responsibilities.matrix;
    let x = net.features();
    let (train_loss, test_loss) = losses(net, y_hat, split, &theta.samples, None)?;
    let reduction = match reduced {
        Some((set, chain)) => {
            let (train, test) = losses(net, y_hat, split, &chain.samples, Some(&set.kept))?;
            Some(ReductionReport {
                cutoff: set.cutoff,
                kept_features: set.kept.clone(),
                kept_feature_names: set.kept.iter().map(|&d| x.names()[d].clone()).collect(),
                train_loss: train,
                test_loss: test,
                theta_acceptance_rate: chain.acceptance_rate(),
            })
        }
        None => None,
    };
    Ok(EvaluationReport {
        repetition,
        mean_description_length: mean_description_length(
            &blocks.chain.retained_description_lengths(),
            net.num_vertices(),
            net.num_edges(),
        )?,
        train_loss,
        test_loss,
        block_accuracy_train: block_accuracy(&theta.samples, y_hat, x, &split.train)?,
        block_accuracy_test: block_accuracy(&theta.samples, y_hat, x, &split.test)?,
        block_acceptance_rate: blocks.chain.acceptance_rate,
        theta_acceptance_rate: theta.acceptance_rate(),
        mean_objective: theta.mean_objective(),
        reduction,
    })
}

pub fn run_repetition(net: &LabelledNetwork, cfg: &RunConfig, repetition: usize) -> Result<RepetitionResult> {
    cfg.validate()?;
    if net.features().num_cols() == 0 {
        return Err(Error::invalid("the network has no feature columns"));
    }
    let rep = repetition as u64;
    let blocks = infer_blocks(net, cfg, rep)?;
    let split = split(net, cfg, rep)?;
    let theta = fit_weights(net, &blocks.responsibilities.matrix, &split, None, &cfg.theta_chain(rep))?;
    let reduced = match screen_features(&theta.samples, cfg)? {
        Some(set) => {
            let chain_cfg = cfg.reduced_theta_chain(rep).expect("reduction is configured");
            let chain = fit_weights(net, &blocks.responsibilities.matrix, &split, Some(&set.kept), &chain_cfg)?;
            Some((set, chain))
        }
        None => None,
    };
    let report = evaluate(net, repetition, &blocks, &split, &theta, reduced.as_ref())?;
    Ok(RepetitionResult {
        blocks,
        split,
        theta,
        reduced,
        report,
    })
}

/// Mean and sample standard deviation over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

/// Per-repetition reports plus their mean and spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub num_vertices: usize,
    pub num_edges: u64,
    pub num_features: usize,
    pub num_blocks: usize,
    pub mean_description_length: MeanStd,
    pub train_loss: MeanStd,
    pub test_loss: MeanStd,
    pub block_acceptance_rate: MeanStd,
    pub theta_acceptance_rate: MeanStd,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cutoff: Option<MeanStd>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced_train_loss: Option<MeanStd>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduced_test_loss: Option<MeanStd>,
    pub repetitions: Vec<EvaluationReport>,
}

pub fn aggregate(net: &LabelledNetwork, num_blocks: usize, reports: Vec<EvaluationReport>) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::invalid("no repetitions to aggregate"));
    }
    let col = |f: &dyn Fn(&EvaluationReport) -> f64| -> MeanStd {
        MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>()).expect("nonempty")
    };
    let reduced: Vec<&ReductionReport> = reports.iter().filter_map(|r| r.reduction.as_ref()).collect();
    let red = |f: &dyn Fn(&ReductionReport) -> f64| MeanStd::of(&reduced.iter().map(|r| f(r)).collect::<Vec<_>>());
    Ok(AggregateReport {
        num_vertices: net.num_vertices(),
        num_edges: net.num_edges(),
        num_features: net.features().num_cols(),
        num_blocks,
        mean_description_length: col(&|r| r.mean_description_length),
        train_loss: col(&|r| r.train_loss),
        test_loss: col(&|r| r.test_loss),
        block_acceptance_rate: col(&|r| r.block_acceptance_rate),
        theta_acceptance_rate: col(&|r| r.theta_acceptance_rate),
        cutoff: red(&|r| r.cutoff),
        reduced_train_loss: red(&|r| r.train_loss),
        reduced_test_loss: red(&|r| r.test_loss),
        repetitions: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GeneratorSpec};

    #[test]
    fn small_pipeline_is_deterministic() {
        let inst = generate(&GeneratorSpec::assortative(40, 2, 2, 4.0, 0.3, 0.02, 2)).unwrap();
        let cfg = RunConfig {
            num_blocks: 2,
            b_iterations: 20,
            theta_iterations: 200,
            k: Some(1.0),
            reduced_dim: Some(2),
            n: 2,
            ..RunConfig::default()
        };
        let a = run_repetition(&inst.network, &cfg, 1).unwrap();
        let b = run_repetition(&inst.network, &cfg, 1).unwrap();
        assert_eq!(a.report, b.report);
        let red = a.report.reduction.as_ref().unwrap();
        assert_eq!(red.kept_features.len(), 2);
        assert!(a.report.train_loss >= 0.0 && a.report.mean_description_length > 0.0);
        let agg = aggregate(&inst.network, 2, vec![a.report.clone(), b.report]).unwrap();
        assert_eq!(agg.train_loss.std, 0.0);
        assert!(agg.cutoff.is_some());
    }

    #[test]
    fn mean_std_uses_sample_deviation() {
        let m = MeanStd::of(&[1.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert!(MeanStd::of(&[]).is_none());
    }
}
