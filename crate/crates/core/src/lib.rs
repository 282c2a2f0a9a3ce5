//! Population size estimation from two dependent record systems under the
//! Bivariate Bernoulli model, with two sub-populations.

pub mod boot;
pub mod classical;
pub mod dataset;
pub mod error;
pub mod estimate;
pub mod mle;
pub mod mme;
pub mod model;
pub mod numeric;
pub mod optim;
pub mod params;
pub mod result;
pub mod sim;
pub mod table;

pub use boot::{bootstrap, BootstrapScheme};
pub use error::{DrsError, Result};
pub use estimate::{estimate, EstimatorOptions};
pub use mle::{FitConfig, ModelKind};
pub use model::DependenceSign;
pub use numeric::LogFactorial;
pub use params::{BbmParams, CellProbabilities};
pub use result::{EstimateResult, Method};
pub use sim::{run_study, DesignPoint, PresetReading, SamplingMode, StudySummary};
pub use table::{DrsTable, StratumPair};
