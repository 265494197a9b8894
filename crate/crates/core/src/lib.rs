//! Feature-first block model: Bayesian inference of block memberships of a
//! labelled network together with a softmax map from vertex features to
//! blocks.
//!
//! Partitions are sampled by Metropolis-Hastings under the microcanonical
//! degree-corrected SBM ([`block_chain`]). Their averaged indicators feed a
//! Metropolis-adjusted Langevin chain over softmax weights ([`mala`]).
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`.

pub mod align;
pub mod analysis;
pub mod block_chain;
pub mod config;
pub mod datagen;
pub mod error;
pub mod graph;
pub mod io;
pub mod mala;
pub mod matrix;
pub mod pipeline;
pub mod retained;
pub mod rng;
pub mod sbm;
pub mod scalar;
pub mod softmax;

pub use align::{align_labels, canonical_labels};
pub use analysis::{
    block_accuracy, cross_entropy_loss, mean_description_length, reduce_dimension, summarize_weights,
    EvaluationReport,
};
pub use block_chain::{estimate_responsibilities, mdl_init, run_b_chain, BChainConfig};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use graph::{degrees, split_vertices, FeatureMatrix, LabelledNetwork, VertexSplit};
pub use mala::{run_theta_chain, step_size, StepSchedule, ThetaChainConfig};
pub use matrix::Matrix;
pub use retained::Retention;
pub use sbm::{BlockState, SbmModel};
pub use scalar::Scalar;
pub use softmax::{gradient_u, log_p_b_given_x, objective_u, softmax_probs, ObjectiveContext, Potential};

pub type Weights = matrix::Matrix<f64>;
pub type Model<'a> = sbm::SbmModel<'a, f64>;
pub type Responsibilities = block_chain::Responsibilities<f64>;
pub type BChainOutput = block_chain::BChainOutput<f64>;
pub type MalaOutput = mala::MalaOutput<f64>;
pub type Objective = softmax::ObjectiveContext<f64>;
pub type WeightSummary = analysis::WeightPosteriorSummary<f64>;
pub type ReducedFeatureSet = analysis::ReducedFeatureSet<f64>;
