use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::record::{RunRecord, TaskResult};
use super::EngineError;

/// `(epsilon, F)` with `epsilon = (E_gs - E) / E_gs` and `F = 1 - epsilon`.
pub fn fidelity(energy: f64, ground: f64) -> Result<(f64, f64), EngineError> {
    if ground == 0.0 {
        return Err(EngineError::ZeroGroundEnergy);
    }
    let eps = (ground - energy) / ground;
    Ok((eps, 1.0 - eps))
}

/// Every task's fidelity is at least `threshold`.
pub fn meets_threshold(results: &[TaskResult], threshold: f64) -> Result<bool, EngineError> {
    if results.is_empty() {
        return Err(EngineError::EmptyResults);
    }
    let mut all = true;
    for r in results {
        let f = r.fidelity.ok_or(EngineError::MissingReference(r.task))?;
        all &= f >= threshold;
    }
    Ok(all)
}

/// Recomputes total shots as evaluations x shots per term x measured terms per
/// cluster and checks it against the running ledger.
pub fn shot_accounting(record: &RunRecord) -> Result<u64, EngineError> {
    let shots = record.config.shots_per_term;
    let recomputed: u64 = record
        .nodes
        .iter()
        .map(|n| n.evaluations * shots * n.measured_terms as u64)
        .sum();
    let per_node: u64 = record.nodes.iter().map(|n| n.shots_used).sum();
    for recorded in [per_node, record.ledger.total] {
        if recorded != recomputed {
            return Err(EngineError::LedgerMismatch {
                recomputed,
                recorded,
            });
        }
    }
    Ok(recomputed)
}

/// Edges on the longest root-to-leaf path.
pub fn tree_critical_depth(record: &RunRecord) -> usize {
    let parents: BTreeMap<usize, Option<usize>> =
        record.nodes.iter().map(|n| (n.id, n.parent)).collect();
    let mut best = 0;
    for &id in parents.keys() {
        let mut depth = 0;
        let mut cur = id;
        while let Some(Some(p)) = parents.get(&cur) {
            depth += 1;
            cur = *p;
        }
        best = best.max(depth);
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Run {
    Baseline,
    Tree,
}

impl fmt::Display for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Run::Baseline => "baseline",
            Run::Tree => "tree",
        })
    }
}

/// Cumulative shots at the first round where every task's exact energy
/// reaches fidelity `threshold`, or `None` if no round does.
pub fn shots_to_threshold(record: &RunRecord, threshold: f64) -> Result<Option<u64>, EngineError> {
    let refs: Vec<f64> = record
        .tasks
        .iter()
        .map(|t| t.reference.ok_or(EngineError::MissingReference(t.task)))
        .collect::<Result<_, _>>()?;
    if refs.is_empty() {
        return Err(EngineError::EmptyResults);
    }
    for point in &record.trace {
        let mut ok = true;
        for (e, g) in point.energies.iter().zip(&refs) {
            ok &= fidelity(*e, *g)?.1 >= threshold;
        }
        if ok {
            return Ok(Some(point.shots));
        }
    }
    Ok(None)
}

/// Baseline shots over tree shots, each counted up to the round where the
/// run first meets `threshold`.
pub fn savings_ratio(
    baseline: &RunRecord,
    tree: &RunRecord,
    threshold: f64,
) -> Result<f64, EngineError> {
    let b = shots_to_threshold(baseline, threshold)?
        .ok_or(EngineError::ThresholdNotMet(Run::Baseline))?;
    let t = shots_to_threshold(tree, threshold)?.ok_or(EngineError::ThresholdNotMet(Run::Tree))?;
    Ok(b as f64 / t as f64)
}
