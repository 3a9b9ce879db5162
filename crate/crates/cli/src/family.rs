//! Task families on disk: generator specs, manifests and Hamiltonian files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vqtree_core::benchmarks::{
    exact_ground_energy, gen_tfim, gen_xxz, max_cut_brute_force, maxcut_task, parse_range,
    synthetic_grid, BenchError, TfimSpec, WeightedGraph, XxzSpec, ITERATIVE_QUBIT_CAP,
};
use vqtree_core::engine::TaskFamily;
use vqtree_core::Hamiltonian;

use crate::error::{exit, CliError, CliResult, WithCode};

pub const MANIFEST_FILE: &str = "manifest.json";

/// A `start:stop:count` range or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Range(String),
    List(Vec<f64>),
}

impl Values {
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        let v = match self {
            Values::Range(text) => parse_range(text).code(exit::CONFIG, "range")?,
            Values::List(v) => v.clone(),
        };
        if v.is_empty() {
            return Err(CliError::new(exit::CONFIG, "empty value list"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Tfim {
        sites: usize,
        #[serde(rename = "J")]
        coupling: f64,
        h: Values,
    },
    Xxz {
        sites: usize,
        #[serde(rename = "J")]
        coupling: f64,
        delta: Values,
    },
    /// Either a graph file or the built-in synthetic grid with this many
    /// nodes.
    Maxcut {
        #[serde(default)]
        graph: Option<PathBuf>,
        #[serde(default)]
        synthetic_nodes: Option<usize>,
        scales: Values,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTask {
    pub id: String,
    pub file: String,
    #[serde(default)]
    pub parameter: Option<Parameter>,
    #[serde(default)]
    pub reference_energy: Option<f64>,
    /// Brute-force maximum cut, for MaxCut tasks.
    #[serde(default)]
    pub max_cut: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub family: String,
    pub n_qubits: usize,
    /// Unscaled graph of a MaxCut family; the ma-QAOA ansatz is built on it.
    #[serde(default)]
    pub graph: Option<WeightedGraph>,
    pub tasks: Vec<ManifestTask>,
}

/// A family held in memory, with or without files behind it.
#[derive(Clone, Debug)]
pub struct LoadedFamily {
    pub manifest: Manifest,
    pub hamiltonians: Vec<Hamiltonian>,
}

impl LoadedFamily {
    pub fn is_maxcut(&self) -> bool {
        self.manifest.family == "maxcut"
    }

    pub fn task_family(&self) -> CliResult<TaskFamily> {
        let ids = self.manifest.tasks.iter().map(|t| t.id.clone()).collect();
        let mut family =
            TaskFamily::with_ids(&self.hamiltonians, ids).code(exit::INGEST, "task family")?;
        family.references = self
            .manifest
            .tasks
            .iter()
            .map(|t| t.reference_energy)
            .collect();
        Ok(family)
    }
}

fn reference(h: &Hamiltonian) -> CliResult<Option<f64>> {
    if h.n_qubits() > ITERATIVE_QUBIT_CAP {
        return Ok(None);
    }
    exact_ground_energy(h)
        .map(Some)
        .code(exit::GENERATE, "reference energy")
}

pub fn read_graph(path: &Path) -> CliResult<WeightedGraph> {
    let text =
        fs::read_to_string(path).code(exit::INGEST, &format!("reading {}", path.display()))?;
    WeightedGraph::from_json_str(&text).code(exit::INGEST, &format!("parsing {}", path.display()))
}

/// Builds the tasks of a generator spec. Relative graph paths resolve
/// against `base`.
pub fn generate(spec: &GeneratorSpec, base: &Path) -> CliResult<LoadedFamily> {
    fn gen_err(what: &'static str) -> impl Fn(BenchError) -> CliError {
        move |e| CliError::new(exit::GENERATE, format!("{what}: {e}"))
    }
    let values = |v: &Values| {
        v.resolve()
            .map_err(|e| CliError::new(exit::GENERATE, e.message))
    };
    let (family, name, params, hamiltonians, graph, cuts) = match spec {
        GeneratorSpec::Tfim { sites, coupling, h } => {
            let fields = values(h)?;
            let hs = gen_tfim(&TfimSpec {
                sites: *sites,
                coupling: *coupling,
                fields: fields.clone(),
            })
            .map_err(gen_err("tfim"))?;
            ("tfim", "h", fields, hs, None, None)
        }
        GeneratorSpec::Xxz {
            sites,
            coupling,
            delta,
        } => {
            let ds = values(delta)?;
            let hs = gen_xxz(&XxzSpec {
                sites: *sites,
                coupling: *coupling,
                anisotropies: ds.clone(),
            })
            .map_err(gen_err("xxz"))?;
            ("xxz", "delta", ds, hs, None, None)
        }
        GeneratorSpec::Maxcut {
            graph,
            synthetic_nodes,
            scales,
        } => {
            let base_graph = match (graph, synthetic_nodes) {
                (Some(p), None) => read_graph(&base.join(p))
                    .map_err(|e| CliError::new(exit::GENERATE, e.message))?,
                (None, Some(n)) => synthetic_grid(*n).map_err(gen_err("synthetic grid"))?,
                _ => {
                    return Err(CliError::new(
                        exit::GENERATE,
                        "maxcut needs exactly one of graph or synthetic_nodes",
                    ))
                }
            };
            let ss = values(scales)?;
            let mut hs = Vec::with_capacity(ss.len());
            let mut cuts = Vec::with_capacity(ss.len());
            for &s in &ss {
                let g = base_graph.scaled(s).map_err(gen_err("scale"))?;
                cuts.push(max_cut_brute_force(&g).map_err(gen_err("max cut"))?.0);
                hs.push(maxcut_task(&g).map_err(gen_err("maxcut"))?);
            }
            ("maxcut", "load_scale", ss, hs, Some(base_graph), Some(cuts))
        }
    };
    let n_qubits = hamiltonians[0].n_qubits();
    let mut tasks = Vec::with_capacity(hamiltonians.len());
    for (i, (h, &v)) in hamiltonians.iter().zip(&params).enumerate() {
        let id = format!("{family}_{i:03}");
        tasks.push(ManifestTask {
            file: format!("{id}.json"),
            id,
            parameter: Some(Parameter {
                name: name.into(),
                value: v,
            }),
            reference_energy: reference(h)?,
            max_cut: cuts.as_ref().map(|c| c[i]),
        });
    }
    Ok(LoadedFamily {
        manifest: Manifest {
            family: family.into(),
            n_qubits,
            graph,
            tasks,
        },
        hamiltonians,
    })
}

/// Writes the task files and manifest. An existing nonempty directory is
/// refused unless `force` is set.
pub fn write_family(family: &LoadedFamily, dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir)
            .code(exit::GENERATE, "output directory")?
            .next()
            .is_some();
        if nonempty && !force {
            return Err(CliError::new(
                exit::GENERATE,
                format!(
                    "{} exists and is not empty; pass --force to overwrite",
                    dir.display()
                ),
            ));
        }
    }
    fs::create_dir_all(dir).code(exit::GENERATE, "creating output directory")?;
    for (t, h) in family.manifest.tasks.iter().zip(&family.hamiltonians) {
        fs::write(dir.join(&t.file), h.to_json_string())
            .code(exit::GENERATE, "writing task file")?;
    }
    let text = serde_json::to_string_pretty(&family.manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_FILE), text).code(exit::GENERATE, "writing manifest")?;
    Ok(())
}

fn read_hamiltonian(path: &Path) -> CliResult<Hamiltonian> {
    let text =
        fs::read_to_string(path).code(exit::INGEST, &format!("reading {}", path.display()))?;
    Hamiltonian::from_json_str(&text).code(exit::INGEST, &format!("parsing {}", path.display()))
}

/// Loads a manifest and the task files it lists, relative to its directory.
pub fn load_manifest(path: &Path) -> CliResult<LoadedFamily> {
    let text =
        fs::read_to_string(path).code(exit::INGEST, &format!("reading {}", path.display()))?;
    let manifest: Manifest =
        serde_json::from_str(&text).code(exit::INGEST, &format!("parsing {}", path.display()))?;
    if manifest.tasks.is_empty() {
        return Err(CliError::new(exit::INGEST, "manifest lists no tasks"));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let hamiltonians = manifest
        .tasks
        .iter()
        .map(|t| read_hamiltonian(&dir.join(&t.file)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(LoadedFamily {
        manifest,
        hamiltonians,
    })
}

/// Loads every Hamiltonian file matching `pattern` in sorted path order.
/// Reference energies are computed where the qubit count allows.
pub fn load_glob(pattern: &str) -> CliResult<LoadedFamily> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .code(exit::INGEST, "task glob")?
        .collect::<Result<_, _>>()
        .code(exit::INGEST, "task glob")?;
    paths.retain(|p| p.file_name().is_none_or(|n| n != MANIFEST_FILE));
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::new(
            exit::INGEST,
            format!("no task files match {pattern}"),
        ));
    }
    let hamiltonians = paths
        .iter()
        .map(|p| read_hamiltonian(p))
        .collect::<CliResult<Vec<_>>>()?;
    let mut tasks = Vec::with_capacity(paths.len());
    for (p, h) in paths.iter().zip(&hamiltonians) {
        let stem = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let reference_energy = reference(h).map_err(|e| CliError::new(exit::INGEST, e.message))?;
        tasks.push(ManifestTask {
            id: stem,
            file: p.display().to_string(),
            parameter: None,
            reference_energy,
            max_cut: None,
        });
    }
    let n_qubits = hamiltonians[0].n_qubits();
    Ok(LoadedFamily {
        manifest: Manifest {
            family: "files".into(),
            n_qubits,
            graph: None,
            tasks,
        },
        hamiltonians,
    })
}
