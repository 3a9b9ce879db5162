//! One-knob sweeps: monitor window, split threshold, forced split timing.

use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vqtree_core::engine::{fidelity, root_planned_iterations, Mode, MonitorSpec, WINDOW_FLOOR};

use crate::config::{resolve, split_iteration, LoadedConfig, SplitAt};
use crate::error::{exit, CliError, CliResult, WithCode};
use crate::run::execute;

pub const STUDY_FILE: &str = "study.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    /// Values are fractions of the planned iterations.
    Window,
    /// Values are `eps_split`.
    Threshold,
    /// Values are fractions of the planned iterations at which the root is
    /// split once.
    SplitTiming,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub value: f64,
    /// The setting actually used: window length, threshold or split
    /// iteration.
    pub effective: f64,
    pub note: String,
    /// `1 - F` per task, on exact energies.
    pub errors: Vec<f64>,
    pub mean_error: f64,
    pub max_error: f64,
    pub tree_critical_depth: usize,
    pub shots: u64,
}

pub fn study(
    kind: StudyKind,
    cfg: &LoadedConfig,
    values: &[f64],
    seed: Option<u64>,
) -> CliResult<(Vec<String>, Vec<StudyRow>)> {
    if values.is_empty() {
        return Err(CliError::new(exit::CONFIG, "sweep has no values"));
    }
    let loaded = cfg.load_family()?;
    let task_ids: Vec<String> = loaded.manifest.tasks.iter().map(|t| t.id.clone()).collect();
    let refs: Vec<f64> = loaded
        .manifest
        .tasks
        .iter()
        .map(|t| t.reference_energy)
        .collect::<Option<_>>()
        .ok_or_else(|| {
            CliError::new(
                exit::CONFIG,
                "studies need reference energies for every task",
            )
        })?;
    let base = resolve(cfg, loaded, seed)?;
    let planned = root_planned_iterations(&base.family, &base.config);

    let mut rows = Vec::with_capacity(values.len());
    for &v in values {
        let mut r = base.clone();
        let mut note = String::new();
        let effective = match kind {
            StudyKind::Window => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::new(
                        exit::CONFIG,
                        format!("window fraction must be positive, got {v}"),
                    ));
                }
                let raw = (v * planned as f64).round() as usize;
                let w = raw.max(WINDOW_FLOOR);
                if raw < WINDOW_FLOOR {
                    note = format!("clamped from {raw} to floor {WINDOW_FLOOR}");
                }
                r.config.mode = Mode::Tree;
                r.config.monitor = MonitorSpec {
                    window: Some(w),
                    warmup: None,
                    ..r.config.monitor.clone()
                };
                w as f64
            }
            StudyKind::Threshold => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::new(
                        exit::CONFIG,
                        format!("threshold must be positive, got {v}"),
                    ));
                }
                r.config.mode = Mode::Tree;
                r.config.monitor.eps_split = Some(v);
                v
            }
            StudyKind::SplitTiming => {
                let it = split_iteration(&r.family, &r.config, SplitAt::Fraction(v))?;
                r.config.mode = Mode::ForcedSplit { iteration: it };
                it as f64
            }
        };
        let file = execute(&r, cfg)?;
        let rec = &file.record;
        let errors: Vec<f64> = rec
            .tasks
            .iter()
            .zip(&refs)
            .map(|(t, g)| fidelity(t.exact_energy, *g).map(|x| x.0))
            .collect::<Result<_, _>>()
            .code(exit::OTHER, "fidelity")?;
        rows.push(StudyRow {
            value: v,
            effective,
            note,
            mean_error: errors.iter().sum::<f64>() / errors.len() as f64,
            max_error: errors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            errors,
            tree_critical_depth: rec.metrics.tree_critical_depth,
            shots: rec.ledger.total,
        });
    }
    Ok((task_ids, rows))
}

pub fn write_study(
    kind: StudyKind,
    task_ids: &[String],
    rows: &[StudyRow],
    path: &Path,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).code(exit::OTHER, STUDY_FILE)?;
    let mut header: Vec<String> = ["study", "value", "effective", "mean_error", "max_error"]
        .map(String::from)
        .to_vec();
    header.extend(task_ids.iter().map(|id| format!("error_{id}")));
    header.extend(["tree_critical_depth", "shots", "note"].map(String::from));
    w.write_record(&header).code(exit::OTHER, STUDY_FILE)?;
    let name = kind
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    for r in rows {
        let mut rec = vec![
            name.clone(),
            r.value.to_string(),
            r.effective.to_string(),
            r.mean_error.to_string(),
            r.max_error.to_string(),
        ];
        rec.extend(r.errors.iter().map(f64::to_string));
        rec.extend([
            r.tree_critical_depth.to_string(),
            r.shots.to_string(),
            r.note.clone(),
        ]);
        w.write_record(&rec).code(exit::OTHER, STUDY_FILE)?;
    }
    w.flush().code(exit::OTHER, STUDY_FILE)
}
