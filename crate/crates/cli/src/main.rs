use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vqtree_cli::compare::{compare, report_lines, write_report};
use vqtree_cli::config::LoadedConfig;
use vqtree_cli::error::{exit, CliError, CliResult, WithCode};
use vqtree_cli::family::{generate, write_family, GeneratorSpec, Values};
use vqtree_cli::run::{output_dir, run_config, summary_lines, write_outputs, RunFile};
use vqtree_cli::study::{study, write_study, StudyKind, STUDY_FILE};

/// Shared-parameter VQA runs over families of similar Hamiltonians.
///
/// Exit codes: 0 ok, 1 other failure, 2 bad generator spec, 3 config or
/// budget error, 4 task ingestion error, 5 runs on different task families.
#[derive(Parser)]
#[command(name = "vqtree", version)]
struct Cli {
    /// Worker threads for cluster stepping (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a task family: one Hamiltonian file per task plus manifest.json.
    Generate {
        #[command(subcommand)]
        family: GenerateCmd,
    },
    /// Run a config; writes run.json and histories.csv.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare a tree run against a baseline run.
    Compare {
        tree: PathBuf,
        baseline: PathBuf,
        #[arg(long)]
        fidelity: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one setting of a config; writes study.csv.
    Study {
        kind: StudyKind,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated list or start:stop:count.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct GenOut {
    #[arg(long)]
    out: PathBuf,
    /// Allow writing into a nonempty directory.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum GenerateCmd {
    Tfim {
        #[arg(long)]
        sites: usize,
        #[arg(long = "J", default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        h: String,
        #[command(flatten)]
        out: GenOut,
    },
    Xxz {
        #[arg(long)]
        sites: usize,
        #[arg(long = "J", default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        delta: String,
        #[command(flatten)]
        out: GenOut,
    },
    Maxcut {
        #[arg(long, conflicts_with = "synthetic")]
        graph: Option<PathBuf>,
        /// Use the built-in synthetic grid with this many nodes.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long)]
        scales: String,
        #[command(flatten)]
        out: GenOut,
    },
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn parse_values(text: &str) -> CliResult<Vec<f64>> {
    if text.contains(',') || !text.contains(':') {
        text.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .code(exit::CONFIG, "values")
    } else {
        Values::Range(text.into()).resolve()
    }
}

fn cmd_generate(cmd: GenerateCmd) -> CliResult<()> {
    let (spec, out) = match cmd {
        GenerateCmd::Tfim {
            sites,
            coupling,
            h,
            out,
        } => (
            GeneratorSpec::Tfim {
                sites,
                coupling,
                h: Values::Range(h),
            },
            out,
        ),
        GenerateCmd::Xxz {
            sites,
            coupling,
            delta,
            out,
        } => (
            GeneratorSpec::Xxz {
                sites,
                coupling,
                delta: Values::Range(delta),
            },
            out,
        ),
        GenerateCmd::Maxcut {
            graph,
            synthetic,
            scales,
            out,
        } => (
            GeneratorSpec::Maxcut {
                graph,
                synthetic_nodes: synthetic,
                scales: Values::Range(scales),
            },
            out,
        ),
    };
    let family =
        generate(&spec, Path::new(".")).map_err(|e| CliError::new(exit::GENERATE, e.message))?;
    write_family(&family, &out.out, out.force)?;
    for t in &family.manifest.tasks {
        emit(&format!(
            "task={} file={} reference_energy={}",
            t.id,
            out.out.join(&t.file).display(),
            t.reference_energy
                .map_or("na".into(), |e| format!("{e:.10}"))
        ));
    }
    Ok(())
}

fn cmd_run(config: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let (cfg, file) = run_config(config, seed)?;
    let dir = output_dir(&cfg, out);
    write_outputs(&file, &dir)?;
    for line in summary_lines(&file) {
        emit(&line);
    }
    Ok(())
}

fn cmd_compare(tree: &Path, baseline: &Path, threshold: f64, out: Option<&Path>) -> CliResult<()> {
    let t = RunFile::read(tree)?;
    let b = RunFile::read(baseline)?;
    let report = compare(&t, &b, threshold)?;
    for line in report_lines(&report) {
        emit(&line);
    }
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| tree.parent().unwrap_or(Path::new(".")).to_path_buf());
    write_report(&report, &t, &b, &dir)
}

fn cmd_study(
    kind: StudyKind,
    config: &Path,
    values: &str,
    out: Option<&Path>,
    seed: Option<u64>,
) -> CliResult<()> {
    let cfg = LoadedConfig::from_path(config)?;
    let values = parse_values(values)?;
    let (ids, rows) = study(kind, &cfg, &values, seed)?;
    let dir = output_dir(&cfg, out);
    std::fs::create_dir_all(&dir).code(exit::OTHER, "creating output directory")?;
    write_study(kind, &ids, &rows, &dir.join(STUDY_FILE))?;
    for r in &rows {
        emit(&format!(
            "value={} effective={} mean_error={:.6e} max_error={:.6e} depth={} shots={}{}",
            r.value,
            r.effective,
            r.mean_error,
            r.max_error,
            r.tree_critical_depth,
            r.shots,
            if r.note.is_empty() {
                String::new()
            } else {
                format!(" note=\"{}\"", r.note)
            }
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(exit::OTHER as u8);
        }
    }
    let result = match cli.command {
        Command::Generate { family } => cmd_generate(family),
        Command::Run { config, out, seed } => cmd_run(&config, out.as_deref(), seed),
        Command::Compare {
            tree,
            baseline,
            fidelity,
            out,
        } => cmd_compare(&tree, &baseline, fidelity, out.as_deref()),
        Command::Study {
            kind,
            config,
            values,
            out,
            seed,
        } => cmd_study(kind, &config, &values, out.as_deref(), seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
