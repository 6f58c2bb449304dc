//! Combinatorial pure exploration with continuous and separable reward
//! functions: the COCI identification algorithm, its uniform-sampling
//! baseline, oracles for several decision classes, and hardness measures.

pub mod coci;
pub mod condition;
pub mod error;
pub mod estimators;
pub mod hardness;
pub mod instance;
pub mod oracles;
pub mod osa;
pub mod sim;
pub mod types;

pub use coci::{run, run_coci, run_uniform, RunOptions, RunResult, SamplingRule};
pub use condition::ConditionStrategy;
pub use error::{Error, Result};
pub use estimators::EstimatorKind;
pub use hardness::{compute_gaps_cpel, compute_lambda, sample_complexity_bound, HardnessReport, LambdaBracket};
pub use instance::ProblemInstance;
pub use oracles::{CostFn, TopK, WaterSpec};
pub use osa::{greedy_osa, OsaSpec};
pub use sim::ArmModel;
pub use types::{ConfidenceBox, Decision, Oracle, Orientation, ParameterVector};
