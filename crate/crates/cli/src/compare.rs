use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vqtree_core::engine::{fidelity, savings_ratio, shots_to_threshold, RunRecord};

use crate::error::{exit, CliError, CliResult, WithCode};
use crate::run::RunFile;

pub const REPORT_FILE: &str = "compare.json";
pub const CURVE_FILE: &str = "shots_vs_fidelity.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task_id: String,
    pub tree_fidelity: Option<f64>,
    pub baseline_fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub threshold: f64,
    pub tree_shots_to_threshold: Option<u64>,
    pub baseline_shots_to_threshold: Option<u64>,
    /// Defined only when both runs reach the threshold.
    pub savings_ratio: Option<f64>,
    /// When only the tree reaches the threshold: the baseline's whole spend
    /// over the tree's shots to threshold.
    pub savings_ratio_lower_bound: Option<f64>,
    pub tree_total_shots: u64,
    pub baseline_total_shots: u64,
    pub tree_critical_depth: usize,
    pub tasks: Vec<TaskRow>,
}

pub fn compare(tree: &RunFile, baseline: &RunFile, threshold: f64) -> CliResult<Report> {
    if tree.family != baseline.family {
        return Err(CliError::new(
            exit::MISMATCH,
            "the two runs are on different task families",
        ));
    }
    if tree.family.references.iter().any(Option::is_none) {
        return Err(CliError::new(
            exit::INGEST,
            "comparison needs reference energies for every task",
        ));
    }
    let t = &tree.record;
    let b = &baseline.record;
    let tree_to = shots_to_threshold(t, threshold).code(exit::OTHER, "tree record")?;
    let base_to = shots_to_threshold(b, threshold).code(exit::OTHER, "baseline record")?;
    let ratio = match (tree_to, base_to) {
        (Some(_), Some(_)) => {
            Some(savings_ratio(b, t, threshold).code(exit::OTHER, "savings ratio")?)
        }
        _ => None,
    };
    let lower = match (tree_to, base_to) {
        (Some(s), None) => Some(b.ledger.total as f64 / s as f64),
        _ => None,
    };
    let tasks = t
        .tasks
        .iter()
        .zip(&b.tasks)
        .map(|(x, y)| TaskRow {
            task_id: x.task_id.clone(),
            tree_fidelity: x.fidelity,
            baseline_fidelity: y.fidelity,
        })
        .collect();
    Ok(Report {
        threshold,
        tree_shots_to_threshold: tree_to,
        baseline_shots_to_threshold: base_to,
        savings_ratio: ratio,
        savings_ratio_lower_bound: lower,
        tree_total_shots: t.ledger.total,
        baseline_total_shots: b.ledger.total,
        tree_critical_depth: t.metrics.tree_critical_depth,
        tasks,
    })
}

fn reach(s: Option<u64>) -> String {
    s.map_or("did not reach".into(), |v| v.to_string())
}

fn fid(f: Option<f64>) -> String {
    f.map_or("na".into(), |v| format!("{v:.6}"))
}

pub fn report_lines(r: &Report) -> Vec<String> {
    let mut out = vec![
        format!("threshold={}", r.threshold),
        format!(
            "tree_shots_to_threshold={}",
            reach(r.tree_shots_to_threshold)
        ),
        format!(
            "baseline_shots_to_threshold={}",
            reach(r.baseline_shots_to_threshold)
        ),
        format!(
            "savings_ratio={}",
            r.savings_ratio.map_or("na".into(), |v| v.to_string())
        ),
    ];
    if let Some(lb) = r.savings_ratio_lower_bound {
        out.push(format!("savings_ratio_lower_bound={lb}"));
    }
    out.push(format!(
        "tree_total_shots={} baseline_total_shots={}",
        r.tree_total_shots, r.baseline_total_shots
    ));
    out.push(format!("tree_critical_depth={}", r.tree_critical_depth));
    for t in &r.tasks {
        out.push(format!(
            "task={} tree_fidelity={} baseline_fidelity={}",
            t.task_id,
            fid(t.tree_fidelity),
            fid(t.baseline_fidelity)
        ));
    }
    out
}

/// Per round: cumulative shots and the min and mean task fidelity.
fn write_curve(
    w: &mut csv::Writer<fs::File>,
    name: &str,
    r: &RunRecord,
    refs: &[f64],
) -> CliResult<()> {
    for p in &r.trace {
        let fs: Vec<f64> = p
            .energies
            .iter()
            .zip(refs)
            .map(|(e, g)| fidelity(*e, *g).map(|x| x.1))
            .collect::<Result<_, _>>()
            .code(exit::OTHER, "fidelity")?;
        let min = fs.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = fs.iter().sum::<f64>() / fs.len() as f64;
        w.write_record([
            name,
            &p.round.to_string(),
            &p.shots.to_string(),
            &min.to_string(),
            &mean.to_string(),
        ])
        .code(exit::OTHER, CURVE_FILE)?;
    }
    Ok(())
}

pub fn write_report(r: &Report, tree: &RunFile, baseline: &RunFile, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).code(exit::OTHER, "creating output directory")?;
    let text = serde_json::to_string_pretty(r).expect("report serializes");
    fs::write(dir.join(REPORT_FILE), text).code(exit::OTHER, "writing compare.json")?;
    let refs: Vec<f64> = tree
        .family
        .references
        .iter()
        .map(|r| r.expect("checked in compare"))
        .collect();
    let mut w = csv::Writer::from_path(dir.join(CURVE_FILE)).code(exit::OTHER, CURVE_FILE)?;
    w.write_record(["run", "round", "shots", "min_fidelity", "mean_fidelity"])
        .code(exit::OTHER, CURVE_FILE)?;
    write_curve(&mut w, "tree", &tree.record, &refs)?;
    write_curve(&mut w, "baseline", &baseline.record, &refs)?;
    w.flush().code(exit::OTHER, CURVE_FILE)
}
