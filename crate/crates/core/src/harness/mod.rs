//! Experiment plumbing: run records, the stabilization-time metric, the
//! full-identification baseline, seed sweeps and CSV/JSON output.

mod baseline;
mod csv_io;
mod record;
mod report;
mod sweep;

use thiserror::Error;

use crate::lts0n::Lts0nError;
use crate::plant::PlantError;

pub use baseline::{baseline_full_id, BaselineConfig, BaselineRun, BASELINE_COND_LIMIT};
pub use csv_io::{read_sweep_csv, read_trajectory_csv, write_sweep_csv, write_trajectory_csv, RowKind, SweepRow, TrajectoryRow};
pub use record::{
    record_baseline, record_lts0n, stabilization_threshold, steps_to_stabilize, Method, RunMeta, RunRecord, RunStatus,
};
pub use report::{RunReport, StageSummary};
pub use sweep::{median, run_sweep, DEFAULT_POST_HORIZON_FACTOR, summarize, ExperimentConfig, PlantSource, SeedRange, Summary, SweepOutput};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Lts0n(#[from] Lts0nError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
