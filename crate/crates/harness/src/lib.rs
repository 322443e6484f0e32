//! Closed-loop simulation harness for the cart-pendulum NMPC controller:
//! config ingestion, episode orchestration, trajectory/diagnostic logging
//! and plot-data emission.

pub mod config;
pub mod selfcheck;
pub mod sim;

pub use config::{ScenarioConfig, SolverConfig};
pub use sim::{run_episode, EpisodeSummary, SimLog, TickRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("config key `{0}` is missing")]
    MissingKey(&'static str),
    #[error("config key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid problem: {0}")]
    Problem(#[from] nmpc_core::sqp::ProblemError),
    #[error("invalid plant parameters: {0}")]
    Plant(#[from] nmpc_core::dynamics::ModelError),
    #[error("invalid discretization: {0}")]
    Discretization(#[from] nmpc_core::integrator::DiscretizationError),
    #[error("malformed log row {row}: {message}")]
    LogParse { row: usize, message: String },
}

impl HarnessError {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Every `HarnessError` is an I/O or configuration problem (exit code 2);
    /// plant divergence is flagged on the log and exits with 1 instead.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
