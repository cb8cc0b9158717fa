//! Experiment harness for the kitchen simulator: seeded batches, metrics,
//! the waiter session service and the `hybs` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod frames;
pub mod metrics;
pub mod protocol;
pub mod runner;
pub mod server;
pub mod session;

use std::path::Path;

use thiserror::Error;

pub use config::{ChefSpec, Experiment, ExperimentConfig, PlanningCaps, WaiterSpec};
pub use frames::{turns_from_log, Frame, RenderState, Turn};
pub use metrics::{aggregate, compliance, paired_table, summarize, Aggregate, MeanStd, MetricsSummary};
pub use runner::{run_batch, run_episode, write_batch, BatchResult, ChefFactory, EpisodeFailure, EpisodeOutcome, ReplayChef};
pub use session::{Lifecycle, Reply, ServiceConfig, SessionManager};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("policy failure: {0}")]
    PolicyFailure(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("service: {0}")]
    Service(String),
}

impl HarnessError {
    pub fn io(path: &Path, e: std::io::Error) -> HarnessError {
        HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

impl From<hybs_analysis::AnalysisError> for HarnessError {
    fn from(e: hybs_analysis::AnalysisError) -> Self {
        HarnessError::Analysis(e.to_string())
    }
}
