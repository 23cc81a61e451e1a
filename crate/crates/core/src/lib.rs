//! Mobile-cellular handoff simulation.
//!
//! The pipeline mirrors what a mobile does while moving between two base
//! stations:
//!
//! 1. [`channel`] produces received signal strength from log-distance path
//!    loss, correlated log-normal shadowing and Rayleigh fading.
//! 2. [`estimator`] smooths each link with a sliding-window least-squares
//!    path-loss fit.
//! 3. [`decision`] gates on threshold and hysteresis, quantizes RSS and
//!    traffic intensity into levels and asks a small backpropagation
//!    network ([`neuralnet`]) whether to hand off.
//! 4. [`simulator`] drives trajectories, executes handoffs and aggregates
//!    Monte Carlo metrics and hysteresis/threshold sweeps.
//!
//! [`export`] writes the CSV files consumed by plotting scripts.

pub mod channel;
pub mod decision;
pub mod error;
pub mod estimator;
pub mod export;
pub mod neuralnet;
pub mod simulator;

pub use channel::{PropagationParams, RngStream, SignalSample};
pub use decision::{
    Action, DecisionConfig, GateMode, HandoffDecision, Levels, Provenance, RssLevel, TiLevel,
    TrafficIntensity,
};
pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, PathLossFit};
pub use neuralnet::{NetworkWeights, TrainConfig, TrainOutcome, TrainingSample};
pub use simulator::{RunResult, ScenarioConfig, SweepResult, TiGroup};
