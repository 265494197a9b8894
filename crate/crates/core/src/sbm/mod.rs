//! Microcanonical degree-corrected stochastic block model.

pub mod entropy;
pub mod logfact;
pub mod partitions;
pub mod state;

pub use entropy::{log_omega, log_prior_e, log_prior_k, log_xi, SbmModel};
pub use logfact::LogFactorial;
pub use partitions::{count_partitions, ln_biguint, LogPartitionTable, PartitionCountTable};
pub use state::{BlockState, VertexMove};
