//! The run config file and its resolution into engine inputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vqtree_core::engine::{
    root_planned_iterations, BaselineBudget, InitialParams, Mode, MonitorSpec, OptimizerSpec,
    RunConfig, TaskFamily, DEFAULT_SHOTS_PER_TERM,
};
use vqtree_core::statevec::{Ansatz, HeaSpec, MaQaoaSpec};

use crate::error::{exit, CliError, CliResult, WithCode};
use crate::family::{generate, load_glob, load_manifest, read_graph, GeneratorSpec, LoadedFamily};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    #[default]
    Tree,
    Baseline,
    ForcedSplit,
}

/// When a forced split happens: a root iteration, or a fraction of the
/// iterations the root could afford on the whole budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SplitAt {
    Iteration(u64),
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TaskSource {
    Generate(GeneratorSpec),
    Manifest(PathBuf),
    /// Glob over Hamiltonian files.
    Files(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AnsatzBlock {
    Hea {
        layers: usize,
    },
    /// The graph defaults to the family's own.
    Maqaoa {
        p: usize,
        #[serde(default)]
        graph: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub split_at: Option<SplitAt>,
    pub tasks: TaskSource,
    pub budget: u64,
    #[serde(default = "default_shots")]
    pub shots_per_term: u64,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub monitor: MonitorSpec,
    pub ansatz: AnsatzBlock,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub history_stride: usize,
    #[serde(default)]
    pub baseline_budget: BaselineBudget,
    #[serde(default)]
    pub initial_params: InitialParams,
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS_PER_TERM
}

fn default_stride() -> usize {
    1
}

/// A parsed config with the raw JSON it came from, kept verbatim for the
/// run record.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub file: RunConfigFile,
    pub raw: serde_json::Value,
    /// Directory relative paths resolve against.
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).code(exit::CONFIG, &format!("reading {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base)
    }

    pub fn from_str(text: &str, base: PathBuf) -> CliResult<Self> {
        let raw: serde_json::Value = serde_json::from_str(text).code(exit::CONFIG, "config")?;
        let file: RunConfigFile =
            serde_json::from_value(raw.clone()).code(exit::CONFIG, "config")?;
        Ok(Self { file, raw, base })
    }

    pub fn load_family(&self) -> CliResult<LoadedFamily> {
        match &self.file.tasks {
            TaskSource::Generate(spec) => {
                generate(spec, &self.base).map_err(|e| CliError::new(exit::INGEST, e.message))
            }
            TaskSource::Manifest(p) => load_manifest(&self.base.join(p)),
            TaskSource::Files(pattern) => {
                let full = if Path::new(pattern).is_absolute() {
                    pattern.clone()
                } else {
                    self.base.join(pattern).to_string_lossy().into_owned()
                };
                load_glob(&full)
            }
        }
    }
}

/// Everything one run needs.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub loaded: LoadedFamily,
    pub family: TaskFamily,
    pub config: RunConfig,
}

/// Validates the config against the family and builds the engine config.
/// `seed` overrides the file's seed.
pub fn resolve(cfg: &LoadedConfig, loaded: LoadedFamily, seed: Option<u64>) -> CliResult<Resolved> {
    let f = &cfg.file;
    let family = loaded.task_family()?;
    let ansatz = match &f.ansatz {
        AnsatzBlock::Hea { layers } => Ansatz::Hea(HeaSpec::new(loaded.manifest.n_qubits, *layers)),
        AnsatzBlock::Maqaoa { p, graph } => {
            let g = match graph {
                Some(path) => read_graph(&cfg.base.join(path))?,
                None => loaded.manifest.graph.clone().ok_or_else(|| {
                    CliError::new(
                        exit::CONFIG,
                        "maqaoa ansatz needs a graph: the family has none, set ansatz.graph",
                    )
                })?,
            };
            Ansatz::Maqaoa(MaQaoaSpec::new(g, *p))
        }
    };
    let mut config = RunConfig::new(ansatz, f.budget);
    config.shots_per_term = f.shots_per_term;
    config.optimizer = f.optimizer.clone();
    config.monitor = f.monitor.clone();
    config.seed = seed.unwrap_or(f.seed);
    config.baseline_budget = f.baseline_budget;
    config.initial_params = f.initial_params.clone();
    config.history_stride = f.history_stride;
    config.mode = match (f.mode, f.split_at) {
        (ModeName::Tree, None) => Mode::Tree,
        (ModeName::Baseline, None) => Mode::Baseline,
        (ModeName::ForcedSplit, Some(at)) => Mode::ForcedSplit {
            iteration: split_iteration(&family, &config, at)?,
        },
        (ModeName::ForcedSplit, None) => {
            return Err(CliError::new(
                exit::CONFIG,
                "forced-split mode needs split_at",
            ))
        }
        (_, Some(_)) => {
            return Err(CliError::new(
                exit::CONFIG,
                "split_at only applies to forced-split mode",
            ))
        }
    };
    config.validate().code(exit::CONFIG, "config")?;
    if config.ansatz.n_qubits() != loaded.manifest.n_qubits {
        return Err(CliError::new(
            exit::CONFIG,
            format!(
                "ansatz acts on {} qubits, tasks have {}",
                config.ansatz.n_qubits(),
                loaded.manifest.n_qubits
            ),
        ));
    }
    Ok(Resolved {
        loaded,
        family,
        config,
    })
}

pub fn split_iteration(family: &TaskFamily, config: &RunConfig, at: SplitAt) -> CliResult<u64> {
    match at {
        SplitAt::Iteration(0) => Err(CliError::new(
            exit::CONFIG,
            "split iteration must be positive",
        )),
        SplitAt::Iteration(i) => Ok(i),
        SplitAt::Fraction(x) if x > 0.0 && x < 1.0 => {
            let planned = root_planned_iterations(family, config);
            Ok(((x * planned as f64).round() as u64).max(1))
        }
        SplitAt::Fraction(x) => Err(CliError::new(
            exit::CONFIG,
            format!("split fraction must be in (0, 1), got {x}"),
        )),
    }
}
