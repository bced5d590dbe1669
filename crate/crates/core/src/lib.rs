//! Ordinal regression from multi-rater soft labels.
//!
//! The crate covers label transforms ([`ordinal`]), training objectives
//! ([`losses`]), a small MLP with exact gradients ([`model`]), agreement-aware
//! evaluation ([`metrics`]), data handling ([`data`]), cross-validated
//! experiments ([`harness`]) and result files ([`report`]).

pub mod data;
pub mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod ordinal;
pub mod report;
pub mod rng;

pub use data::{Dataset, Example, SyntheticConfig, TieHandling};
pub use error::{Error, Result};
pub use harness::{CvSettings, DecodeRule, ExperimentResult, Method, TrainConfig};
pub use losses::{LossKind, Reduction, Target};
pub use metrics::{EvalRecord, MetricReport};
pub use model::{Activation, AdamConfig, EncoderConfig, HeadKind, ModelParams, Prediction};
pub use ordinal::{
    ClassDistribution, Distance, ExceedanceLabel, HardLabel, Mode, ProblemSpec, RatingDistribution, TaskProbabilities,
    TiePolicy,
};
