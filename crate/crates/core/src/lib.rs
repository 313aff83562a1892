//! Access Class Barring combined with Binary Countdown Contention
//! Resolution (DBCA): closed-form model, constrained optimizer, backlog
//! estimator and a contention-round simulator with d-ACB and q-ary TRA
//! baselines.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`.

pub mod analytics;
pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod special;
pub mod traffic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SystemConfig = model::SystemConfig<f64>;
pub type OperatingPoint = model::OperatingPoint<f64>;
pub type RoundOutcome = model::RoundOutcome<f64>;
pub type ResourceBudget = optimizer::ResourceBudget<f64>;
pub type EstimatorState = estimator::EstimatorState<f64>;
pub type BacklogEstimator = estimator::BacklogEstimator<f64>;
pub type DbcaParams = sim::DbcaParams<f64>;
pub type DriftPrediction = analytics::DriftPrediction<f64>;
pub type ParetoFrontier = analytics::ParetoFrontier<f64>;
pub use config::ExperimentConfig;

pub type SystemConfig32 = model::SystemConfig<f32>;
pub type OperatingPoint32 = model::OperatingPoint<f32>;
pub type ResourceBudget32 = optimizer::ResourceBudget<f32>;
