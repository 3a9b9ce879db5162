use serde::{Deserialize, Serialize};

use super::cluster::{ClusterState, ClusterStatus};
use super::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub members: Vec<usize>,
    pub created_at_iter: u64,
    pub iterations: u64,
    pub evaluations: u64,
    pub measured_terms: usize,
    pub shots_used: u64,
    pub status: ClusterStatus,
    pub split_suppressed: bool,
    pub final_params: Vec<f64>,
    /// Per superset term: whether this node sampled it.
    pub measured: Vec<bool>,
    /// Estimates from the node's last iteration, the input to
    /// post-processing.
    pub term_estimates: Option<Vec<f64>>,
}

impl NodeRecord {
    pub(crate) fn from_state(c: &ClusterState) -> Self {
        Self {
            id: c.id,
            parent: c.parent,
            members: c.members.clone(),
            created_at_iter: c.created_at_iter,
            iterations: c.iterations,
            evaluations: c.evaluations,
            measured_terms: c.measured_count(),
            shots_used: c.shots_used,
            status: c.status,
            split_suppressed: c.split_suppressed,
            final_params: c.params().to_vec(),
            measured: c.measured.clone(),
            term_estimates: c.last_term_estimates.clone(),
        }
    }
}

/// Loss histories of one cluster, keeping every `stride`-th entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterHistory {
    pub id: usize,
    pub stride: usize,
    pub mixed_loss: Vec<f64>,
    /// Parallel to the node's `members`.
    pub task_loss: Vec<Vec<f64>>,
}

impl ClusterHistory {
    pub(crate) fn from_state(c: &ClusterState, stride: usize) -> Self {
        let thin = |h: &[f64]| h.iter().step_by(stride).copied().collect::<Vec<_>>();
        Self {
            id: c.id,
            stride,
            mixed_loss: thin(&c.mixed_loss_history),
            task_loss: c.per_task_loss_history.iter().map(|h| thin(h)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: usize,
    pub task_id: String,
    /// Recombined from stored estimates; what the run reports.
    pub energy: f64,
    pub source_cluster: usize,
    /// Exact energy of the source cluster's final parameters.
    pub exact_energy: f64,
    pub reference: Option<f64>,
    /// Computed from `exact_energy`.
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub budget: u64,
    pub total: u64,
    pub calibration: u64,
    pub overshoot: u64,
}

/// State after one controller round: cumulative shots and each task's exact
/// energy at the parameters of the cluster holding it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub round: u64,
    pub shots: u64,
    pub energies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub round: u64,
    pub cluster: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rounds: u64,
    pub tree_critical_depth: usize,
    pub final_clusters: usize,
    pub min_fidelity: Option<f64>,
    pub mean_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub task_ids: Vec<String>,
    pub nodes: Vec<NodeRecord>,
    pub histories: Vec<ClusterHistory>,
    pub tasks: Vec<TaskResult>,
    pub ledger: Ledger,
    pub trace: Vec<TracePoint>,
    pub events: Vec<Event>,
    pub metrics: Metrics,
}

impl RunRecord {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("records hold only finite data")
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn node(&self, id: usize) -> Option<&NodeRecord> {
        self.nodes.iter().find(|n| n.id == id)
    }
}
