use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vqtree(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqtree"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TFIM_TASKS: &str =
    r#"{"generate": {"kind": "tfim", "sites": 3, "J": 1.0, "h": "0.2:0.6:3"}}"#;

fn small_config(dir: &Path, name: &str, extra: &str) -> String {
    let text = format!(
        r#"{{"tasks": {TFIM_TASKS}, "budget": 2000000, "shots_per_term": 256,
            "ansatz": {{"kind": "hea", "layers": 1}}, "seed": 3{extra}}}"#
    );
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn generate_refuses_nonempty_dir_without_force() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "generate",
        "tfim",
        "--sites",
        "3",
        "--h",
        "0.5:1.0:2",
        "--out",
        "fam",
    ];
    let first = vqtree(&args, tmp.path());
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    assert!(tmp.path().join("fam/manifest.json").exists());
    assert_eq!(stdout(&first).lines().count(), 2);

    assert_eq!(code(&vqtree(&args, tmp.path())), 2);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&vqtree(&forced, tmp.path())), 0);
}

#[test]
fn bad_generator_spec_is_exit_2() {
    let tmp = TempDir::new().unwrap();
    let o = vqtree(
        &[
            "generate", "tfim", "--sites", "1", "--h", "0.5", "--out", "x",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_are_exit_3() {
    let tmp = TempDir::new().unwrap();
    let unknown = small_config(tmp.path(), "unknown.json", r#", "learning_rate": 0.1"#);
    assert_eq!(code(&vqtree(&["run", &unknown], tmp.path())), 3);

    let text = format!(
        r#"{{"tasks": {TFIM_TASKS}, "budget": 0, "ansatz": {{"kind": "hea", "layers": 1}}}}"#
    );
    fs::write(tmp.path().join("zero.json"), text).unwrap();
    assert_eq!(code(&vqtree(&["run", "zero.json"], tmp.path())), 3);

    assert_eq!(code(&vqtree(&["run", "missing.json"], tmp.path())), 3);
}

#[test]
fn missing_manifest_is_exit_4() {
    let tmp = TempDir::new().unwrap();
    let text = r#"{"tasks": {"manifest": "nowhere/manifest.json"}, "budget": 1000000, "ansatz": {"kind": "hea", "layers": 1}}"#;
    fs::write(tmp.path().join("c.json"), text).unwrap();
    assert_eq!(code(&vqtree(&["run", "c.json"], tmp.path())), 4);
}

#[test]
fn run_from_generated_manifest_writes_outputs() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&vqtree(
            &[
                "generate",
                "tfim",
                "--sites",
                "3",
                "--h",
                "0.2:0.6:3",
                "--out",
                "fam"
            ],
            tmp.path()
        )),
        0
    );
    let text = r#"{"tasks": {"manifest": "fam/manifest.json"}, "budget": 2000000, "shots_per_term": 256,
                   "ansatz": {"kind": "hea", "layers": 1}, "seed": 2, "output": "results"}"#;
    fs::write(tmp.path().join("c.json"), text).unwrap();
    let o = vqtree(&["run", "c.json"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("task=")).count(), 3);
    assert!(out.lines().last().unwrap().starts_with("mode=tree"));

    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("results/run.json")).unwrap())
            .unwrap();
    let embedded = &run["config_file"];
    let original: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(embedded, &original);
    let hist = fs::read_to_string(tmp.path().join("results/histories.csv")).unwrap();
    assert!(hist.starts_with("cluster,iteration,series,task,loss"));
}

#[test]
fn compare_identical_runs_and_mismatched_families() {
    let tmp = TempDir::new().unwrap();
    let a = small_config(tmp.path(), "a.json", "");
    assert_eq!(code(&vqtree(&["run", &a, "--out", "a"], tmp.path())), 0);
    let o = vqtree(
        &[
            "compare",
            "a/run.json",
            "a/run.json",
            "--fidelity",
            "0.5",
            "--out",
            "cmp",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(
        stdout(&o).lines().any(|l| l == "savings_ratio=1"),
        "{}",
        stdout(&o)
    );
    assert!(tmp.path().join("cmp/compare.json").exists());
    let curve = fs::read_to_string(tmp.path().join("cmp/shots_vs_fidelity.csv")).unwrap();
    assert!(curve.starts_with("run,round,shots,min_fidelity,mean_fidelity"));

    let other = r#"{"tasks": {"generate": {"kind": "tfim", "sites": 3, "J": 1.0, "h": "0.3:0.7:3"}}, "budget": 2000000,
                    "shots_per_term": 256, "ansatz": {"kind": "hea", "layers": 1}}"#;
    fs::write(tmp.path().join("b.json"), other).unwrap();
    assert_eq!(
        code(&vqtree(&["run", "b.json", "--out", "b"], tmp.path())),
        0
    );
    assert_eq!(
        code(&vqtree(
            &["compare", "a/run.json", "b/run.json", "--fidelity", "0.5"],
            tmp.path()
        )),
        5
    );
}

#[test]
fn seed_override_changes_the_run() {
    let tmp = TempDir::new().unwrap();
    let a = small_config(tmp.path(), "a.json", "");
    assert_eq!(code(&vqtree(&["run", &a, "--out", "s3"], tmp.path())), 0);
    assert_eq!(
        code(&vqtree(
            &["run", &a, "--out", "s3b", "--seed", "3"],
            tmp.path()
        )),
        0
    );
    assert_eq!(
        code(&vqtree(
            &["run", &a, "--out", "s4", "--seed", "4"],
            tmp.path()
        )),
        0
    );
    let read = |d: &str| fs::read(tmp.path().join(d).join("run.json")).unwrap();
    assert_eq!(read("s3"), read("s3b"));
    assert_ne!(read("s3"), read("s4"));
}

#[test]
fn window_study_notes_the_clamp() {
    let tmp = TempDir::new().unwrap();
    let a = small_config(tmp.path(), "a.json", "");
    let o = vqtree(
        &[
            "study",
            "window",
            "--config",
            &a,
            "--values",
            "0.001,0.2",
            "--out",
            "st",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("st/study.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("study,value,effective,mean_error,max_error,error_tfim_000"));
    assert!(lines[1].contains("clamped"));
    assert!(!lines[2].contains("clamped"));
}

#[test]
fn forced_split_mode_from_config() {
    let tmp = TempDir::new().unwrap();
    let a = small_config(
        tmp.path(),
        "a.json",
        r#", "mode": "forced-split", "split_at": {"iteration": 5}"#,
    );
    let o = vqtree(&["run", &a, "--out", "fs"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mode=forced-split"));
    assert!(stdout(&o).contains("final_clusters=2"));
}
