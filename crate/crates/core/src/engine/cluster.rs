use serde::{Deserialize, Serialize};

use super::config::{Mode, MonitorConfig, RunConfig};
use super::monitor::{per_task_losses, slope, split_condition};
use super::EngineError;
use crate::cluster::{distance_matrix, rbf_kernel, spectral_bipartition, ClusterError};
use crate::optim::{Evaluation, LossOracle, OptimError, OptimizerState};
use crate::pauli::{PaddedTaskSet, PauliString};
use crate::rng::{StreamKey, OPTIMIZER_SLOT};
use crate::statevec::{sample_terms, term_expectations, Ansatz};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterStatus {
    Active,
    Retired,
    Final,
}

/// One node of the cluster tree.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterState {
    pub id: usize,
    pub parent: Option<usize>,
    pub members: Vec<usize>,
    pub mixed_coeffs: Vec<f64>,
    /// Superset terms this cluster measures: the non-identity support of its
    /// member rows.
    pub measured: Vec<bool>,
    pub optimizer: OptimizerState,
    pub mixed_loss_history: Vec<f64>,
    /// One row per member, in member order.
    pub per_task_loss_history: Vec<Vec<f64>>,
    /// Per-term estimates of the latest iteration, averaged over its
    /// evaluations; zero for unmeasured terms, one for identity.
    pub last_term_estimates: Option<Vec<f64>>,
    pub shots_used: u64,
    pub evaluations: u64,
    /// Steps taken by this cluster, which also keys its random streams.
    pub iterations: u64,
    /// Controller round at which the cluster was created.
    pub created_at_iter: u64,
    pub status: ClusterStatus,
    pub split_suppressed: bool,
    pub eps_split: Option<f64>,
}

impl ClusterState {
    pub fn new(
        id: usize,
        parent: Option<usize>,
        members: Vec<usize>,
        padded: &PaddedTaskSet,
        optimizer: OptimizerState,
        created_at_iter: u64,
    ) -> Result<Self, EngineError> {
        let mixed = padded.mixed(&members)?;
        let measured = measured_terms(padded, &members);
        let n_members = members.len();
        Ok(Self {
            id,
            parent,
            members,
            mixed_coeffs: mixed.coeffs,
            measured,
            optimizer,
            mixed_loss_history: Vec::new(),
            per_task_loss_history: vec![Vec::new(); n_members],
            last_term_estimates: None,
            shots_used: 0,
            evaluations: 0,
            iterations: 0,
            created_at_iter,
            status: ClusterStatus::Active,
            split_suppressed: false,
            eps_split: None,
        })
    }

    pub fn params(&self) -> &[f64] {
        self.optimizer.params()
    }

    pub fn measured_count(&self) -> usize {
        self.measured.iter().filter(|&&m| m).count()
    }

    /// Whether this cluster measures every non-identity term of `row`.
    pub fn covers(&self, row: &[f64], superset: &[PauliString]) -> bool {
        row.iter()
            .zip(&self.measured)
            .zip(superset)
            .all(|((&c, &m), p)| c == 0.0 || m || p.is_identity())
    }

    /// Charges probe evaluations made outside [`cluster_step`].
    pub fn charge(&mut self, evaluations: &[Evaluation]) {
        self.evaluations += evaluations.len() as u64;
        self.shots_used += evaluations.iter().map(|e| e.shots).sum::<u64>();
    }
}

pub(crate) fn measured_terms(padded: &PaddedTaskSet, members: &[usize]) -> Vec<bool> {
    padded
        .superset()
        .iter()
        .enumerate()
        .map(|(k, p)| !p.is_identity() && members.iter().any(|&m| padded.row(m)[k] != 0.0))
        .collect()
}

/// Shot-sampled loss of a fixed coefficient vector. Evaluation `j` of the
/// step draws from slot `j + 1` of the step's stream.
pub(crate) struct SampledOracle<'a> {
    pub ansatz: &'a Ansatz,
    pub superset: &'a [PauliString],
    pub coeffs: &'a [f64],
    pub measured: &'a [bool],
    pub shots: u64,
    pub key: StreamKey,
    pub next_slot: u64,
}

impl LossOracle for SampledOracle<'_> {
    fn evaluate(&mut self, params: &[f64]) -> Result<Evaluation, OptimError> {
        let fail = |e: crate::statevec::StateError| OptimError::OracleFailure(e.to_string());
        let state = self.ansatz.prepare(params).map_err(fail)?;
        let mut rng = self.key.with_slot(self.next_slot).rng();
        self.next_slot += 1;
        let terms = sample_terms(&state, self.superset, self.measured, self.shots, &mut rng)
            .map_err(fail)?;
        let loss = terms.iter().map(|t| self.coeffs[t.term] * t.estimate).sum();
        let shots = terms.iter().map(|t| t.shots).sum();
        Ok(Evaluation { loss, terms, shots })
    }
}

pub struct StepContext<'a> {
    pub padded: &'a PaddedTaskSet,
    pub config: &'a RunConfig,
    pub monitor: &'a MonitorConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Continued,
    /// Split into two groups of global task indices.
    Split(Vec<usize>, Vec<usize>),
    /// The split condition fired but the members cannot be told apart;
    /// splitting is now off for this cluster.
    Unsplittable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub outcome: StepOutcome,
    pub shots: u64,
    /// Exact expectations of every superset term at the updated parameters.
    pub exact_terms: Vec<f64>,
}

/// One optimizer iteration on the cluster's mixed loss followed by the split
/// check.
pub fn cluster_step(c: &mut ClusterState, ctx: &StepContext) -> Result<StepResult, EngineError> {
    let config = ctx.config;
    let superset = ctx.padded.superset();
    let key = StreamKey::new(config.seed, c.id as u64, c.iterations, OPTIMIZER_SLOT);
    let mut oracle = SampledOracle {
        ansatz: &config.ansatz,
        superset,
        coeffs: &c.mixed_coeffs,
        measured: &c.measured,
        shots: config.shots_per_term,
        key,
        next_slot: OPTIMIZER_SLOT + 1,
    };
    let mut rng = key.rng();
    let report = c.optimizer.step(&mut oracle, &mut rng)?;

    let estimates = average_estimates(superset, &report.evaluations);
    let mixed_loss: f64 = c
        .mixed_coeffs
        .iter()
        .zip(&estimates)
        .map(|(a, e)| a * e)
        .sum();
    let rows: Vec<&[f64]> = c.members.iter().map(|&m| ctx.padded.row(m)).collect();
    let task_losses = per_task_losses(&estimates, &rows)?;
    c.mixed_loss_history.push(mixed_loss);
    for (h, l) in c.per_task_loss_history.iter_mut().zip(task_losses) {
        h.push(l);
    }
    c.last_term_estimates = Some(estimates);
    c.charge(&report.evaluations);
    c.iterations += 1;
    if c.eps_split.is_none() {
        c.eps_split = Some(ctx.monitor.eps_for(c.mixed_loss_history[0]));
    }

    let state = config.ansatz.prepare(c.params())?;
    let exact_terms = term_expectations(&state, superset)?;
    let outcome = split_check(c, ctx)?;
    Ok(StepResult {
        outcome,
        shots: report.shots(),
        exact_terms,
    })
}

fn average_estimates(superset: &[PauliString], evaluations: &[Evaluation]) -> Vec<f64> {
    let mut sum = vec![0.0; superset.len()];
    let mut count = vec![0u32; superset.len()];
    for e in evaluations {
        for t in &e.terms {
            sum[t.term] += t.estimate;
            count[t.term] += 1;
        }
    }
    superset
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if p.is_identity() {
                1.0
            } else if count[k] == 0 {
                0.0
            } else {
                sum[k] / count[k] as f64
            }
        })
        .collect()
}

fn split_check(c: &mut ClusterState, ctx: &StepContext) -> Result<StepOutcome, EngineError> {
    if c.members.len() < 2 || c.split_suppressed {
        return Ok(StepOutcome::Continued);
    }
    let fire = match ctx.config.mode {
        Mode::Baseline => false,
        Mode::ForcedSplit { iteration } => c.parent.is_none() && c.iterations == iteration,
        Mode::Tree => {
            let m = ctx.monitor;
            if c.iterations <= m.warmup || c.mixed_loss_history.len() < m.window {
                false
            } else {
                let mixed = slope(&c.mixed_loss_history, m.window)?;
                let tasks = c
                    .per_task_loss_history
                    .iter()
                    .map(|h| slope(h, m.window))
                    .collect::<Result<Vec<_>, _>>()?;
                split_condition(
                    mixed,
                    &tasks,
                    c.eps_split.expect("set after the first step"),
                )
            }
        }
    };
    if !fire {
        return Ok(StepOutcome::Continued);
    }
    let d = distance_matrix(ctx.padded, &c.members)?;
    match spectral_bipartition(&rbf_kernel(&d)) {
        Ok(b) => {
            let pick = |idx: &[usize]| idx.iter().map(|&i| c.members[i]).collect::<Vec<_>>();
            Ok(StepOutcome::Split(pick(&b.group_a), pick(&b.group_b)))
        }
        Err(ClusterError::UnsplittableCluster) => {
            c.split_suppressed = true;
            Ok(StepOutcome::Unsplittable)
        }
        Err(e) => Err(e.into()),
    }
}
