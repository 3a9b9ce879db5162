//! Cluster-tree execution: per-cluster stepping with split monitoring, the
//! global round-robin controller, the independent baseline and metrics.

mod cluster;
mod config;
mod controller;
mod metrics;
mod monitor;
mod record;

pub use cluster::{
    cluster_step, ClusterState, ClusterStatus, StepContext, StepOutcome, StepResult,
};
pub use config::{
    BaselineBudget, Gain, GainKeyword, InitialParams, Mode, MonitorConfig, MonitorSpec,
    OptimizerSpec, RunConfig, DEFAULT_SHOTS_PER_TERM, WINDOW_FLOOR,
};
pub use controller::{
    baseline_run, controller_run, post_process, root_planned_iterations, run, Assignment,
    TaskFamily,
};
pub use metrics::{
    fidelity, meets_threshold, savings_ratio, shot_accounting, shots_to_threshold,
    tree_critical_depth, Run,
};
pub use monitor::{per_task_losses, slope, split_condition};
pub use record::{
    ClusterHistory, Event, Ledger, Metrics, NodeRecord, RunRecord, TaskResult, TracePoint,
};

use thiserror::Error;

use crate::cluster::ClusterError;
use crate::optim::OptimError;
use crate::pauli::PauliError;
use crate::statevec::StateError;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no tasks given")]
    EmptyTaskSet,
    #[error("task has {found} qubits, expected {expected}")]
    QubitCountMismatch { expected: usize, found: usize },
    #[error("task {0} has no non-identity term to measure")]
    NothingToMeasure(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need at least {window} history entries, have {have}")]
    InsufficientHistory { have: usize, window: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cluster {0} has no stored estimates")]
    MissingEstimates(usize),
    #[error("no final cluster measured every term of task {0}")]
    Unassigned(usize),
    #[error("ground energy is zero; fidelity undefined")]
    ZeroGroundEnergy,
    #[error("task {0} has no reference ground energy")]
    MissingReference(usize),
    #[error("no task results")]
    EmptyResults,
    #[error("shot ledger mismatch: recomputed {recomputed}, recorded {recorded}")]
    LedgerMismatch { recomputed: u64, recorded: u64 },
    #[error("{0} run never met the fidelity threshold")]
    ThresholdNotMet(Run),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}
