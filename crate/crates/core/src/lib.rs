//! Reinforcement-learning fusion of indoor tracking paths.
//!
//! Three position trackers (RSSI with Kalman/particle smoothing, pedestrian
//! dead reckoning, angle of arrival) are combined as
//! `w_rssi * rssi + w_pdr * pdr + w_aoa * aoa` with weights summing to one.
//! A tabular Q-learning agent tunes the weights per trajectory; the crate also
//! ships the walk/tracker simulator and the evaluation harness used to compare
//! the learned weights against single paths and fixed-weight baselines.

pub mod baselines;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod eval;
pub mod learning;
pub mod model;
pub mod rng;
pub mod sim;
pub mod trackers;

pub use error::{Error, Result};
pub use eval::{
    evaluate_methods, run_experiment, run_reliability, run_reliability_with_seeds, simulate_trajectory,
    ExperimentConfig, Method, MseSummary, ReliabilityReport, RunReport,
};
pub use learning::{
    apply_action, bellman_update, discretize_state, evaluate, reward, select_action, train, ActionId,
    LearningConfig, QTable, TrainOutcome,
};
pub use model::{fuse, tracking_error, Position2D, Scenario, SyncedEstimates, Trajectory, WeightVector};
pub use sim::{generate_trajectory, EnvironmentSpec};
pub use trackers::{simulate_aoa_path, simulate_pdr_path, simulate_rssi_path, TrackerNoiseConfig};
