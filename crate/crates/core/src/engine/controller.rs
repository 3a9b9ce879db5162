use rand::Rng;
use rayon::prelude::*;

use super::cluster::{
    cluster_step, measured_terms, ClusterState, ClusterStatus, SampledOracle, StepContext,
    StepOutcome, StepResult,
};
use super::config::{
    BaselineBudget, Gain, InitialParams, Mode, MonitorConfig, OptimizerSpec, RunConfig,
};
use super::metrics::{fidelity, tree_critical_depth};
use super::monitor::slope;
use super::record::{
    ClusterHistory, Event, Ledger, Metrics, NodeRecord, RunRecord, TaskResult, TracePoint,
};
use super::EngineError;
use crate::optim::{calibrate_spsa_with, Evaluation, OptimizerState, SimplexState, SpsaState};
use crate::pauli::{Hamiltonian, PaddedTaskSet};
use crate::rng::{StreamKey, CALIBRATION_ITERATION, INIT_CLUSTER, OPTIMIZER_SLOT};
use crate::statevec::term_expectations;

/// The tasks of one run plus optional reference ground energies.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskFamily {
    pub padded: PaddedTaskSet,
    pub references: Vec<Option<f64>>,
}

impl TaskFamily {
    pub fn new(tasks: &[Hamiltonian]) -> Result<Self, EngineError> {
        let ids = (0..tasks.len()).map(|i| format!("task_{i}")).collect();
        Self::with_ids(tasks, ids)
    }

    /// Every task must have at least one non-identity term, so that each
    /// round charges shots and the controller terminates.
    pub fn with_ids(tasks: &[Hamiltonian], ids: Vec<String>) -> Result<Self, EngineError> {
        let first = tasks.first().ok_or(EngineError::EmptyTaskSet)?;
        for h in tasks {
            if h.n_qubits() != first.n_qubits() {
                return Err(EngineError::QubitCountMismatch {
                    expected: first.n_qubits(),
                    found: h.n_qubits(),
                });
            }
        }
        for (i, h) in tasks.iter().enumerate() {
            if !h.has_measurable_term() {
                return Err(EngineError::NothingToMeasure(i));
            }
        }
        let padded = PaddedTaskSet::build_with_ids(tasks, ids)?;
        let references = vec![None; tasks.len()];
        Ok(Self { padded, references })
    }

    pub fn with_references(mut self, references: Vec<f64>) -> Result<Self, EngineError> {
        if references.len() != self.padded.n_tasks() {
            return Err(EngineError::LengthMismatch {
                left: references.len(),
                right: self.padded.n_tasks(),
            });
        }
        self.references = references.into_iter().map(Some).collect();
        Ok(self)
    }

    pub fn n_tasks(&self) -> usize {
        self.padded.n_tasks()
    }

    fn check(&self, config: &RunConfig) -> Result<(), EngineError> {
        config.validate()?;
        if config.ansatz.n_qubits() != self.padded.n_qubits() {
            return Err(EngineError::QubitCountMismatch {
                expected: self.padded.n_qubits(),
                found: config.ansatz.n_qubits(),
            });
        }
        Ok(())
    }
}

/// Iterations the root cluster would take if it alone spent the budget.
pub fn root_planned_iterations(family: &TaskFamily, config: &RunConfig) -> u64 {
    let padded = &family.padded;
    let all: Vec<usize> = (0..padded.n_tasks()).collect();
    let measured = measured_terms(padded, &all).iter().filter(|&&m| m).count();
    planned_iterations(config, config.budget as f64, measured)
}

/// Dispatches on `config.mode`.
pub fn run(family: &TaskFamily, config: &RunConfig) -> Result<RunRecord, EngineError> {
    match config.mode {
        Mode::Baseline => baseline_run(family, config),
        Mode::Tree | Mode::ForcedSplit { .. } => controller_run(family, config),
    }
}

fn initial_params(config: &RunConfig) -> Vec<f64> {
    let n = config.ansatz.n_params();
    match &config.initial_params {
        InitialParams::Zeros => vec![0.0; n],
        InitialParams::Uniform { low, high } => {
            let mut rng = StreamKey::new(config.seed, INIT_CLUSTER, 0, OPTIMIZER_SLOT).rng();
            (0..n).map(|_| rng.random_range(*low..*high)).collect()
        }
        InitialParams::Explicit { values } => values.clone(),
    }
}

fn planned_iterations(config: &RunConfig, budget: f64, measured: usize) -> u64 {
    let per_iter =
        (config.optimizer.evals_per_iteration() * config.shots_per_term * measured as u64).max(1);
    ((budget / per_iter as f64).floor() as u64).max(1)
}

/// Builds the optimizer for a cluster created from scratch, running the SPSA
/// calibration probes on its mixed loss if requested.
fn new_optimizer(
    config: &RunConfig,
    padded: &PaddedTaskSet,
    cluster_id: usize,
    members: &[usize],
    theta0: Vec<f64>,
    planned: u64,
) -> Result<(OptimizerState, Vec<Evaluation>), EngineError> {
    match &config.optimizer {
        OptimizerSpec::Simplex { initial_step } => Ok((
            OptimizerState::Simplex(SimplexState::new(theta0, *initial_step)),
            Vec::new(),
        )),
        OptimizerSpec::Spsa {
            a,
            target_first_step,
            big_a,
            alpha,
            c,
            gamma,
        } => {
            let big_a = big_a.unwrap_or(0.1 * planned as f64);
            match a {
                Gain::Value(a) => Ok((
                    OptimizerState::Spsa(SpsaState::new(theta0, *a, big_a, *alpha, *c, *gamma)?),
                    Vec::new(),
                )),
                Gain::Keyword(_) => {
                    let template = SpsaState::new(theta0, 1.0, big_a, *alpha, *c, *gamma)?;
                    let mixed = padded.mixed(members)?;
                    let measured = measured_terms(padded, members);
                    let key = StreamKey::new(
                        config.seed,
                        cluster_id as u64,
                        CALIBRATION_ITERATION,
                        OPTIMIZER_SLOT,
                    );
                    let mut oracle = SampledOracle {
                        ansatz: &config.ansatz,
                        superset: padded.superset(),
                        coeffs: &mixed.coeffs,
                        measured: &measured,
                        shots: config.shots_per_term,
                        key,
                        next_slot: OPTIMIZER_SLOT + 1,
                    };
                    let cal = calibrate_spsa_with(
                        &mut oracle,
                        &template,
                        *target_first_step,
                        &mut key.rng(),
                    )?;
                    Ok((OptimizerState::Spsa(cal.state), cal.evaluations))
                }
            }
        }
    }
}

fn new_cluster(
    config: &RunConfig,
    padded: &PaddedTaskSet,
    id: usize,
    members: Vec<usize>,
    theta0: Vec<f64>,
    budget: f64,
) -> Result<ClusterState, EngineError> {
    let planned = planned_iterations(
        config,
        budget,
        measured_terms(padded, &members)
            .iter()
            .filter(|&&m| m)
            .count(),
    );
    let (opt, probes) = new_optimizer(config, padded, id, &members, theta0, planned)?;
    let mut c = ClusterState::new(id, None, members, padded, opt, 0)?;
    c.charge(&probes);
    Ok(c)
}

fn step_all(
    clusters: &mut [ClusterState],
    ctx: &[StepContext],
) -> Vec<(usize, Result<StepResult, EngineError>)> {
    clusters
        .par_iter_mut()
        .filter(|c| c.status == ClusterStatus::Active)
        .map(|c| {
            let i = if ctx.len() == 1 { 0 } else { c.id };
            (c.id, cluster_step(c, &ctx[i]))
        })
        .collect()
}

fn energy(row: &[f64], terms: &[f64]) -> f64 {
    row.iter().zip(terms).map(|(c, e)| c * e).sum()
}

/// Round-robin tree execution: every active cluster steps once per round
/// until the shot budget, checked at the start of each round, is spent.
pub fn controller_run(family: &TaskFamily, config: &RunConfig) -> Result<RunRecord, EngineError> {
    family.check(config)?;
    let padded = &family.padded;
    let n = padded.n_tasks();
    let all: Vec<usize> = (0..n).collect();
    let planned = root_planned_iterations(family, config);
    let monitor = MonitorConfig::resolve(&config.monitor, planned)?;
    let ctx = [StepContext {
        padded,
        config,
        monitor: &monitor,
    }];

    let root = new_cluster(
        config,
        padded,
        0,
        all,
        initial_params(config),
        config.budget as f64,
    )?;
    let calibration = root.shots_used;
    let mut total = root.shots_used;
    let mut clusters = vec![root];
    let mut trace = Vec::new();
    let mut events = Vec::new();
    let mut round = 0u64;
    let mut energies = vec![f64::NAN; n];

    while round == 0 || total < config.budget {
        let results = step_all(&mut clusters, &ctx);
        for (id, res) in results {
            let r = res?;
            total += r.shots;
            for &m in &clusters[id].members {
                energies[m] = energy(padded.row(m), &r.exact_terms);
            }
            match r.outcome {
                StepOutcome::Continued => {}
                StepOutcome::Unsplittable => events.push(Event {
                    round,
                    cluster: id,
                    message: "split condition met but members are identical; splitting disabled"
                        .into(),
                }),
                StepOutcome::Split(a, b) => {
                    clusters[id].status = ClusterStatus::Retired;
                    let mut child_ids = Vec::new();
                    for members in [a, b] {
                        let child_id = clusters.len();
                        let opt = clusters[id].optimizer.fork();
                        let mut child =
                            ClusterState::new(child_id, Some(id), members, padded, opt, round + 1)?;
                        // Same parameters as the parent, whose measured terms
                        // cover the child's; a child created in the last
                        // round is post-processed from these.
                        child.last_term_estimates = clusters[id].last_term_estimates.clone();
                        clusters.push(child);
                        child_ids.push(child_id);
                    }
                    events.push(Event {
                        round,
                        cluster: id,
                        message: format!("split into {} and {}", child_ids[0], child_ids[1]),
                    });
                }
            }
        }
        trace.push(TracePoint {
            round,
            shots: total,
            energies: energies.clone(),
        });
        round += 1;
    }

    for c in clusters
        .iter_mut()
        .filter(|c| c.status == ClusterStatus::Active)
    {
        c.status = ClusterStatus::Final;
    }
    let finals: Vec<&ClusterState> = clusters
        .iter()
        .filter(|c| c.status == ClusterStatus::Final)
        .collect();
    let assignments = post_process(&finals, padded)?;
    finish(
        family,
        config,
        &clusters,
        assignments,
        Ledger {
            budget: config.budget,
            total,
            calibration,
            overshoot: 0,
        },
        trace,
        events,
        round,
    )
}

/// Every task optimized on its own with an equal share `S_max / N` of the
/// budget.
pub fn baseline_run(family: &TaskFamily, config: &RunConfig) -> Result<RunRecord, EngineError> {
    family.check(config)?;
    let padded = &family.padded;
    let n = padded.n_tasks();
    let share = config.budget as f64 / n as f64;
    let theta0 = initial_params(config);

    let mut monitors = Vec::with_capacity(n);
    let mut clusters = Vec::with_capacity(n);
    for i in 0..n {
        let measured = measured_terms(padded, &[i]).iter().filter(|&&m| m).count();
        monitors.push(MonitorConfig::resolve(
            &config.monitor,
            planned_iterations(config, share, measured),
        )?);
        clusters.push(new_cluster(
            config,
            padded,
            i,
            vec![i],
            theta0.clone(),
            share,
        )?);
    }
    let ctx: Vec<StepContext> = monitors
        .iter()
        .map(|m| StepContext {
            padded,
            config,
            monitor: m,
        })
        .collect();
    let calibration: u64 = clusters.iter().map(|c| c.shots_used).sum();
    let mut total = calibration;
    let mut trace = Vec::new();
    let mut round = 0u64;
    let mut energies = vec![f64::NAN; n];

    loop {
        for c in clusters.iter_mut() {
            if c.status == ClusterStatus::Active && c.iterations > 0 && c.shots_used as f64 >= share
            {
                c.status = ClusterStatus::Final;
            }
        }
        if clusters.iter().all(|c| c.status != ClusterStatus::Active) {
            break;
        }
        let results = step_all(&mut clusters, &ctx);
        for (id, res) in results {
            let r = res?;
            total += r.shots;
            energies[id] = energy(padded.row(id), &r.exact_terms);
            let c = &mut clusters[id];
            let m = &monitors[id];
            if config.baseline_budget == BaselineBudget::UntilConverged
                && c.iterations > m.warmup
                && c.mixed_loss_history.len() >= m.window
                && slope(&c.mixed_loss_history, m.window)?.abs()
                    < c.eps_split.expect("set after the first step")
            {
                c.status = ClusterStatus::Final;
            }
        }
        trace.push(TracePoint {
            round,
            shots: total,
            energies: energies.clone(),
        });
        round += 1;
    }

    let assignments = (0..n)
        .map(|i| {
            let c = &clusters[i];
            let est = c
                .last_term_estimates
                .as_ref()
                .ok_or(EngineError::MissingEstimates(i))?;
            Ok(Assignment {
                task: i,
                cluster: i,
                energy: energy(padded.row(i), est),
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    let ledger = Ledger {
        budget: config.budget,
        total,
        calibration,
        overshoot: 0,
    };
    finish(
        family,
        config,
        &clusters,
        assignments,
        ledger,
        trace,
        Vec::new(),
        round,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub task: usize,
    pub cluster: usize,
    pub energy: f64,
}

/// Assigns every task the final cluster whose stored estimates give it the
/// lowest recombined energy. Only clusters that measured all of a task's
/// terms are candidates. Ties go to the cluster holding the task, then to the
/// lowest id.
pub fn post_process(
    finals: &[&ClusterState],
    padded: &PaddedTaskSet,
) -> Result<Vec<Assignment>, EngineError> {
    let mut sorted: Vec<&ClusterState> = finals.to_vec();
    sorted.sort_by_key(|c| c.id);
    for c in &sorted {
        if c.last_term_estimates.is_none() {
            return Err(EngineError::MissingEstimates(c.id));
        }
    }
    let mut out = Vec::with_capacity(padded.n_tasks());
    for task in 0..padded.n_tasks() {
        let row = padded.row(task);
        let home = sorted.iter().position(|c| c.members.contains(&task));
        let order = home
            .into_iter()
            .chain((0..sorted.len()).filter(|&i| Some(i) != home));
        let mut best: Option<Assignment> = None;
        for i in order {
            let c = sorted[i];
            if !c.covers(row, padded.superset()) {
                continue;
            }
            let e = energy(row, c.last_term_estimates.as_ref().expect("checked above"));
            if best.as_ref().is_none_or(|b| e < b.energy) {
                best = Some(Assignment {
                    task,
                    cluster: c.id,
                    energy: e,
                });
            }
        }
        out.push(best.ok_or(EngineError::Unassigned(task))?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    family: &TaskFamily,
    config: &RunConfig,
    clusters: &[ClusterState],
    assignments: Vec<Assignment>,
    mut ledger: Ledger,
    trace: Vec<TracePoint>,
    events: Vec<Event>,
    rounds: u64,
) -> Result<RunRecord, EngineError> {
    let padded = &family.padded;
    ledger.overshoot = ledger.total.saturating_sub(ledger.budget);
    let mut tasks = Vec::with_capacity(assignments.len());
    for a in assignments {
        let c = &clusters[a.cluster];
        let state = config.ansatz.prepare(c.params())?;
        let exact = energy(
            padded.row(a.task),
            &term_expectations(&state, padded.superset())?,
        );
        let reference = family.references[a.task];
        let fid = match reference {
            Some(g) => Some(fidelity(exact, g)?.1),
            None => None,
        };
        tasks.push(TaskResult {
            task: a.task,
            task_id: padded.task_ids()[a.task].clone(),
            energy: a.energy,
            source_cluster: a.cluster,
            exact_energy: exact,
            reference,
            fidelity: fid,
        });
    }
    let fids: Option<Vec<f64>> = tasks.iter().map(|t| t.fidelity).collect();
    let mut record = RunRecord {
        config: config.clone(),
        task_ids: padded.task_ids().to_vec(),
        nodes: clusters.iter().map(NodeRecord::from_state).collect(),
        histories: clusters
            .iter()
            .map(|c| ClusterHistory::from_state(c, config.history_stride))
            .collect(),
        tasks,
        ledger,
        trace,
        events,
        metrics: Metrics {
            rounds,
            tree_critical_depth: 0,
            final_clusters: clusters
                .iter()
                .filter(|c| c.status == ClusterStatus::Final)
                .count(),
            min_fidelity: fids
                .as_ref()
                .map(|f| f.iter().copied().fold(f64::INFINITY, f64::min)),
            mean_fidelity: fids
                .as_ref()
                .map(|f| f.iter().sum::<f64>() / f.len() as f64),
        },
    };
    record.metrics.tree_critical_depth = tree_critical_depth(&record);
    Ok(record)
}
