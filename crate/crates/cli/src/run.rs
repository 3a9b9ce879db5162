use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vqtree_core::engine::{run, shot_accounting, RunRecord};

use crate::config::{resolve, LoadedConfig, Resolved};
use crate::error::{exit, CliError, CliResult, WithCode};

pub const RUN_FILE: &str = "run.json";
pub const HISTORIES_FILE: &str = "histories.csv";

/// What identifies the tasks of a run; two runs are comparable only if these
/// agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyInfo {
    pub family: String,
    pub n_qubits: usize,
    pub task_ids: Vec<String>,
    pub references: Vec<Option<f64>>,
    pub max_cuts: Vec<Option<f64>>,
}

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    /// The config file exactly as given.
    pub config_file: serde_json::Value,
    pub family: FamilyInfo,
    pub record: RunRecord,
}

impl RunFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).code(exit::INGEST, &format!("reading {}", path.display()))?;
        serde_json::from_str(&text).code(exit::INGEST, &format!("parsing {}", path.display()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("run file serializes")
    }

    pub fn is_maxcut(&self) -> bool {
        self.family.family == "maxcut"
    }
}

fn engine_error(e: vqtree_core::engine::EngineError) -> CliError {
    use vqtree_core::engine::EngineError as E;
    let code = match e {
        E::Config(_) => exit::CONFIG,
        E::QubitCountMismatch { .. } | E::NothingToMeasure(_) | E::EmptyTaskSet => exit::INGEST,
        _ => exit::OTHER,
    };
    CliError::new(code, format!("run failed: {e}"))
}

pub fn execute(resolved: &Resolved, cfg: &LoadedConfig) -> CliResult<RunFile> {
    let record = run(&resolved.family, &resolved.config).map_err(engine_error)?;
    shot_accounting(&record).map_err(engine_error)?;
    let m = &resolved.loaded.manifest;
    Ok(RunFile {
        config_file: cfg.raw.clone(),
        family: FamilyInfo {
            family: m.family.clone(),
            n_qubits: m.n_qubits,
            task_ids: m.tasks.iter().map(|t| t.id.clone()).collect(),
            references: m.tasks.iter().map(|t| t.reference_energy).collect(),
            max_cuts: m.tasks.iter().map(|t| t.max_cut).collect(),
        },
        record,
    })
}

/// Loads, resolves and executes a config file.
pub fn run_config(path: &Path, seed: Option<u64>) -> CliResult<(LoadedConfig, RunFile)> {
    let cfg = LoadedConfig::from_path(path)?;
    let loaded = cfg.load_family()?;
    let resolved = resolve(&cfg, loaded, seed)?;
    let file = execute(&resolved, &cfg)?;
    Ok((cfg, file))
}

/// `--out`, else the config's `output`, else `./out`.
pub fn output_dir(cfg: &LoadedConfig, out: Option<&Path>) -> PathBuf {
    match (out, &cfg.file.output) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(o)) => cfg.base.join(o),
        (None, None) => PathBuf::from("out"),
    }
}

pub fn write_outputs(file: &RunFile, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).code(exit::OTHER, "creating output directory")?;
    fs::write(dir.join(RUN_FILE), file.to_json_string()).code(exit::OTHER, "writing run.json")?;
    write_histories(&file.record, &dir.join(HISTORIES_FILE))
}

/// Long format: one row per cluster, iteration and series.
fn write_histories(record: &RunRecord, path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).code(exit::OTHER, "writing histories.csv")?;
    w.write_record(["cluster", "iteration", "series", "task", "loss"])
        .code(exit::OTHER, "histories.csv")?;
    for (h, node) in record.histories.iter().zip(&record.nodes) {
        for (k, v) in h.mixed_loss.iter().enumerate() {
            let it = (k * h.stride).to_string();
            w.write_record([&h.id.to_string(), &it, "mixed", "", &v.to_string()])
                .code(exit::OTHER, "histories.csv")?;
        }
        for (series, &task) in h.task_loss.iter().zip(&node.members) {
            let id = &record.task_ids[task];
            for (k, v) in series.iter().enumerate() {
                let it = (k * h.stride).to_string();
                w.write_record([&h.id.to_string(), &it, "task", id, &v.to_string()])
                    .code(exit::OTHER, "histories.csv")?;
            }
        }
    }
    w.flush().code(exit::OTHER, "histories.csv")
}

/// One `key=value` line per task, then a totals line.
pub fn summary_lines(file: &RunFile) -> Vec<String> {
    let r = &file.record;
    let mut out = Vec::with_capacity(r.tasks.len() + 1);
    for t in &r.tasks {
        let mut line = format!(
            "task={} energy={:.10} exact_energy={:.10} fidelity={} cluster={}",
            t.task_id,
            t.energy,
            t.exact_energy,
            t.fidelity.map_or("na".into(), |f| format!("{f:.6}")),
            t.source_cluster
        );
        if file.is_maxcut() {
            line += &format!(" cut={:.10}", -t.exact_energy);
        }
        out.push(line);
    }
    out.push(format!(
        "mode={} total_shots={} budget={} rounds={} clusters={} final_clusters={} depth={} min_fidelity={}",
        mode_name(r),
        r.ledger.total,
        r.ledger.budget,
        r.metrics.rounds,
        r.nodes.len(),
        r.metrics.final_clusters,
        r.metrics.tree_critical_depth,
        r.metrics.min_fidelity.map_or("na".into(), |f| format!("{f:.6}")),
    ));
    out
}

pub fn mode_name(r: &RunRecord) -> &'static str {
    match r.config.mode {
        vqtree_core::engine::Mode::Tree => "tree",
        vqtree_core::engine::Mode::Baseline => "baseline",
        vqtree_core::engine::Mode::ForcedSplit { .. } => "forced-split",
    }
}
