use proptest::prelude::*;

use vqtree_core::engine::*;
use vqtree_core::pauli::{Hamiltonian, PaddedTaskSet};
use vqtree_core::statevec::{exact_energy, Ansatz, HeaSpec};

const LABELS: [&str; 5] = ["ZI", "IZ", "ZZ", "XI", "IX"];

fn task(coeffs: &[f64]) -> Hamiltonian {
    let pairs: Vec<(&str, f64)> = LABELS.iter().copied().zip(coeffs.iter().copied()).collect();
    Hamiltonian::from_pairs(&pairs).unwrap().canonicalize()
}

fn small_config(budget: u64, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::new(Ansatz::Hea(HeaSpec::new(2, 1)), budget);
    cfg.shots_per_term = 64;
    cfg.seed = seed;
    cfg.monitor = MonitorSpec {
        warmup: Some(20),
        window: Some(10),
        eps_split: None,
    };
    cfg
}

fn coeff_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, LABELS.len()), 2..5)
}

fn assert_partition(record: &RunRecord, n: usize) {
    let mut seen = vec![0; n];
    for node in record
        .nodes
        .iter()
        .filter(|n| n.status == ClusterStatus::Final)
    {
        for &m in &node.members {
            seen[m] += 1;
        }
    }
    assert_eq!(seen, vec![1; n], "final clusters must partition the tasks");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tree_run_invariants(rows in coeff_rows(), seed in 0u64..1000) {
        let tasks: Vec<Hamiltonian> = rows.iter().map(|r| task(r)).collect();
        let family = TaskFamily::new(&tasks).unwrap();
        let record = run(&family, &small_config(400_000, seed)).unwrap();
        assert_partition(&record, tasks.len());
        prop_assert_eq!(shot_accounting(&record).unwrap(), record.ledger.total);
        prop_assert!(record.ledger.total >= record.ledger.budget);

        // Children start from their parent's tree position: every non-root
        // node's members are a subset of its parent's.
        for node in &record.nodes {
            if let Some(p) = node.parent {
                let parent = record.node(p).unwrap();
                prop_assert!(node.members.iter().all(|m| parent.members.contains(m)));
                prop_assert_eq!(parent.status, ClusterStatus::Retired);
            }
        }
    }

    #[test]
    fn mixed_loss_is_mean_of_member_losses(rows in coeff_rows(), params in prop::collection::vec(-3.0f64..3.0, 8)) {
        let tasks: Vec<Hamiltonian> = rows.iter().map(|r| task(r)).collect();
        let padded = PaddedTaskSet::build(&tasks).unwrap();
        let members: Vec<usize> = (0..tasks.len()).collect();
        let mixed = padded.mixed(&members).unwrap();
        let state = HeaSpec::new(2, 1).prepare(&params).unwrap();
        let lhs = exact_energy(&state, padded.superset(), &mixed.coeffs).unwrap();
        // Oracle: each task's energy evaluated from its own unpadded terms.
        let rhs: f64 = tasks
            .iter()
            .map(|h| {
                let ps: Vec<_> = h.terms().iter().map(|t| t.pauli.clone()).collect();
                let cs: Vec<f64> = h.terms().iter().map(|t| t.coeff).collect();
                exact_energy(&state, &ps, &cs).unwrap()
            })
            .sum::<f64>()
            / tasks.len() as f64;
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn reported_energy_is_minimum_over_covering_finals() {
    let tasks = vec![
        task(&[1.0, 0.5, 0.0, 0.3, 0.0]),
        task(&[-1.0, 0.5, 0.2, 0.0, 0.3]),
        task(&[0.9, 0.4, 0.0, 0.3, 0.1]),
    ];
    let family = TaskFamily::new(&tasks).unwrap();
    let mut cfg = small_config(300_000, 7);
    cfg.mode = Mode::ForcedSplit { iteration: 30 };
    let record = run(&family, &cfg).unwrap();
    assert_eq!(record.nodes.len(), 3);
    let superset = family.padded.superset();
    for t in &record.tasks {
        let row = family.padded.row(t.task);
        let mut best = f64::INFINITY;
        for node in record
            .nodes
            .iter()
            .filter(|n| n.status == ClusterStatus::Final)
        {
            let covers = row
                .iter()
                .zip(&node.measured)
                .zip(superset)
                .all(|((&c, &m), p)| c == 0.0 || m || p.is_identity());
            if covers {
                let est = node.term_estimates.as_ref().unwrap();
                best = best.min(row.iter().zip(est).map(|(c, e)| c * e).sum());
            }
        }
        assert_eq!(t.energy, best);
    }
}

#[test]
fn forced_split_happens_once_at_the_requested_iteration() {
    let tasks = vec![
        task(&[1.0, 0.0, 0.0, 0.5, 0.0]),
        task(&[1.0, 0.1, 0.0, 0.5, 0.0]),
        task(&[-1.0, 0.0, 0.4, 0.0, 0.5]),
    ];
    let family = TaskFamily::new(&tasks).unwrap();
    let mut cfg = small_config(200_000, 3);
    cfg.mode = Mode::ForcedSplit { iteration: 25 };
    let record = run(&family, &cfg).unwrap();
    assert_eq!(record.nodes.len(), 3);
    assert_eq!(record.nodes[0].iterations, 25);
    assert_eq!(record.nodes[0].status, ClusterStatus::Retired);
    for child in &record.nodes[1..] {
        assert_eq!(child.parent, Some(0));
        assert_eq!(child.status, ClusterStatus::Final);
    }
    assert_eq!(record.metrics.tree_critical_depth, 1);
    shot_accounting(&record).unwrap();
}

#[test]
fn repeated_runs_are_identical() {
    let tasks = vec![
        task(&[1.0, 0.2, 0.1, 0.5, 0.0]),
        task(&[-0.5, 0.2, 0.3, 0.0, 0.7]),
    ];
    let family = TaskFamily::new(&tasks).unwrap();
    let cfg = small_config(200_000, 11);
    let a = run(&family, &cfg).unwrap().to_json_string();
    let b = run(&family, &cfg).unwrap().to_json_string();
    assert_eq!(a, b);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let c = pool
        .install(|| run(&family, &cfg))
        .unwrap()
        .to_json_string();
    assert_eq!(a, c);
}

#[test]
fn single_task_tree_matches_baseline() {
    let tasks = vec![task(&[1.0, -0.5, 0.3, 0.4, 0.2])];
    let family = TaskFamily::new(&tasks).unwrap();
    let tree = run(&family, &small_config(150_000, 5)).unwrap();
    let mut cfg = small_config(150_000, 5);
    cfg.mode = Mode::Baseline;
    let base = run(&family, &cfg).unwrap();
    assert_eq!(tree.nodes.len(), 1);
    assert!(!tree.nodes[0].split_suppressed);
    assert_eq!(tree.ledger.total, base.ledger.total);
    assert_eq!(tree.tasks, base.tasks);
    assert_eq!(tree.trace, base.trace);
}

#[test]
fn identical_tasks_are_flagged_unsplittable() {
    let h = task(&[1.0, 0.5, 0.2, 0.3, 0.3]);
    let family = TaskFamily::new(&[h.clone(), h.clone(), h]).unwrap();
    let mut cfg = small_config(100_000, 2);
    cfg.mode = Mode::ForcedSplit { iteration: 10 };
    let record = run(&family, &cfg).unwrap();
    assert_eq!(record.nodes.len(), 1);
    assert!(record.nodes[0].split_suppressed);
    assert_eq!(record.events.len(), 1);
    // The members share every parameter, so their results coincide.
    let e0 = record.tasks[0].energy;
    assert!(record.tasks.iter().all(|t| t.energy == e0));
}

#[test]
fn opposite_tasks_split_and_each_child_solves_its_own() {
    // The mixed Hamiltonian is zero, so its loss never moves and the split
    // condition fires right after warmup.
    let up = task(&[1.0, 1.0, 0.0, 0.0, 0.0]);
    let down = task(&[-1.0, -1.0, 0.0, 0.0, 0.0]);
    let family = TaskFamily::new(&[up, down])
        .unwrap()
        .with_references(vec![-2.0, -2.0])
        .unwrap();
    let mut cfg = small_config(1_000_000, 4);
    cfg.shots_per_term = 256;
    // All-zero angles sit on a maximum of <Z>.
    cfg.initial_params = InitialParams::Uniform {
        low: -0.5,
        high: 0.5,
    };
    let record = run(&family, &cfg).unwrap();
    assert_eq!(record.nodes.len(), 3);
    assert_eq!(record.nodes[0].iterations, 21);
    for t in &record.tasks {
        assert_ne!(t.source_cluster, 0);
        assert!(
            t.fidelity.unwrap() > 0.95,
            "task {} fidelity {:?}",
            t.task,
            t.fidelity
        );
    }
}

#[test]
fn tiny_budget_still_runs_one_round() {
    let tasks = vec![
        task(&[1.0, 0.0, 0.0, 0.5, 0.0]),
        task(&[0.0, 1.0, 0.0, 0.0, 0.5]),
    ];
    let family = TaskFamily::new(&tasks).unwrap();
    for mode in [Mode::Tree, Mode::Baseline] {
        let mut cfg = small_config(1, 1);
        cfg.mode = mode;
        let record = run(&family, &cfg).unwrap();
        assert_eq!(record.metrics.rounds, 1, "{mode:?}");
        assert_eq!(record.trace.len(), 1);
        assert!(record.ledger.overshoot > 0);
        shot_accounting(&record).unwrap();
    }
}

#[test]
fn baseline_splits_budget_evenly() {
    let tasks = vec![
        task(&[1.0, 0.0, 0.0, 0.5, 0.0]),
        task(&[0.3, 1.0, 0.4, 0.2, 0.5]),
    ];
    let family = TaskFamily::new(&tasks).unwrap();
    let mut cfg = small_config(500_000, 9);
    cfg.mode = Mode::Baseline;
    let record = run(&family, &cfg).unwrap();
    assert_eq!(record.nodes.len(), 2);
    for node in &record.nodes {
        assert!(node.shots_used >= 250_000);
        // One iteration is 2 evaluations x 64 shots x measured terms.
        assert!(node.shots_used < 250_000 + 2 * 64 * node.measured_terms as u64);
        assert_eq!(node.parent, None);
    }
    assert_eq!(record.metrics.tree_critical_depth, 0);
    shot_accounting(&record).unwrap();
}

#[test]
fn record_round_trips_through_json() {
    let tasks = vec![
        task(&[1.0, 0.2, 0.1, 0.5, 0.0]),
        task(&[-0.5, 0.2, 0.3, 0.0, 0.7]),
    ];
    let family = TaskFamily::new(&tasks)
        .unwrap()
        .with_references(vec![-1.5, -1.2])
        .unwrap();
    let mut cfg = small_config(100_000, 3);
    cfg.history_stride = 3;
    let record = run(&family, &cfg).unwrap();
    let text = record.to_json_string();
    let back = RunRecord::from_json_str(&text).unwrap();
    assert_eq!(back.to_json_string(), text);
    assert_eq!(back.config, cfg);
}

#[test]
fn rejects_mismatched_inputs() {
    let two = task(&[1.0, 0.0, 0.0, 0.0, 0.0]);
    let three = Hamiltonian::from_pairs(&[("ZII", 1.0)]).unwrap();
    assert!(matches!(
        TaskFamily::new(&[two.clone(), three.clone()]),
        Err(EngineError::QubitCountMismatch { .. })
    ));
    assert!(matches!(
        TaskFamily::new(&[]),
        Err(EngineError::EmptyTaskSet)
    ));
    let constant = Hamiltonian::from_pairs(&[("II", 2.0)]).unwrap();
    assert!(matches!(
        TaskFamily::new(&[constant]),
        Err(EngineError::NothingToMeasure(0))
    ));
    let family = TaskFamily::new(&[three]).unwrap();
    assert!(matches!(
        run(&family, &small_config(1000, 0)),
        Err(EngineError::QubitCountMismatch { .. })
    ));
}
