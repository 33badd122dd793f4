//! Integration tests for the experiment harness and the `shiftseq` binary.

use std::path::Path;
use std::process::Command;

use shiftseq::graph::{er_random_graph, write_edge_list};
use shiftseq::harness::{parse_config, run_experiment, ParsedCommand};
use shiftseq::sim::write_signal;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_shiftseq")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn experiment_writes_all_artifacts_with_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cmd = parse_config([
        "experiment",
        "--graph",
        "er:20,0.3",
        "--target",
        "consensus",
        "--L",
        "10",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let ParsedCommand::Experiment(cfg) = cmd else {
        panic!("expected experiment command")
    };
    let summary = run_experiment(&cfg).unwrap();

    for name in [
        "trace.csv",
        "stages.csv",
        "summary.json",
        "signal_trace.csv",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    for i in 1..=10 {
        assert!(
            out.join(format!("seq_{i}.mat")).exists(),
            "seq_{i}.mat missing"
        );
    }

    let trace = read_csv(&out.join("trace.csv"));
    assert!(!trace.is_empty());
    let mut prev = f64::INFINITY;
    for row in &trace {
        assert_eq!(row.len(), 3);
        let obj: f64 = row[2].parse().unwrap();
        assert!(obj <= prev + 1e-10, "objective column not nonincreasing");
        prev = obj;
    }

    let stages = read_csv(&out.join("stages.csv"));
    assert_eq!(stages.len(), 10);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["version"].as_str().unwrap(), env!("CARGO_PKG_VERSION"));
    assert!(json["sim_max_deviation"].as_f64().unwrap() <= 1e-9);
    assert_eq!(
        json["final_objective"].as_f64().unwrap(),
        summary.final_objective
    );

    // round-based signal trace: rounds 0..=10, one value per node
    let signal_trace = read_csv(&out.join("signal_trace.csv"));
    assert_eq!(signal_trace.len(), 11);
    assert_eq!(signal_trace[0].len(), 21);
}

#[test]
fn single_stage_on_complete_graph_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cmd = parse_config([
        "design",
        "--graph",
        "er:6,1.0",
        "--target",
        "consensus",
        "--L",
        "1",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let ParsedCommand::Design(cfg) = cmd else {
        panic!("expected design command")
    };
    let summary = run_experiment(&cfg).unwrap();
    // |H|_F^2 = 1 for the averaging matrix
    assert!(
        summary.final_objective <= 1e-12,
        "{}",
        summary.final_objective
    );
    assert_eq!(summary.effective_rounds, Some(1));
    assert!(
        !out.join("signal_trace.csv").exists(),
        "design mode must not simulate"
    );
}

#[test]
fn summary_effective_rounds_consistent_with_stages_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let delta = 0.3;
    let cmd = parse_config([
        "experiment",
        "--graph",
        "er:10,0.4",
        "--target",
        "consensus",
        "--L",
        "4",
        "--seed",
        "5",
        "--delta",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let ParsedCommand::Experiment(cfg) = cmd else {
        panic!("expected experiment command")
    };
    let summary = run_experiment(&cfg).unwrap();

    let stages = read_csv(&out.join("stages.csv"));
    let recomputed = stages
        .iter()
        .find(|row| row[2].parse::<f64>().unwrap() <= delta)
        .map(|row| row[0].parse::<usize>().unwrap());
    assert_eq!(summary.effective_rounds, recomputed);
}

#[test]
fn simulate_replays_saved_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("g.edges");
    let graph = er_random_graph(8, 0.4, false, true, 21, true).unwrap();
    write_edge_list(&graph, &graph_path).unwrap();

    let design_out = dir.path().join("design");
    let cmd = parse_config([
        "design",
        "--graph",
        graph_path.to_str().unwrap(),
        "--target",
        "consensus",
        "--L",
        "3",
        "--out",
        design_out.to_str().unwrap(),
    ])
    .unwrap();
    let ParsedCommand::Design(cfg) = cmd else {
        panic!("expected design command")
    };
    run_experiment(&cfg).unwrap();

    let signal_path = dir.path().join("z.sig");
    let signal = nalgebra::DVector::from_fn(8, |i, _| (i as f64) - 3.5);
    write_signal(&signal_path, &signal).unwrap();

    let sim_out = dir.path().join("sim");
    let output = Command::new(bin())
        .args([
            "simulate",
            "--graph",
            graph_path.to_str().unwrap(),
            "--seq-dir",
            design_out.to_str().unwrap(),
            "--signal",
            signal_path.to_str().unwrap(),
            "--out",
            sim_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(sim_out.join("signal_trace.csv").exists());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sim_out.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["rounds"].as_u64().unwrap(), 3);
    assert!(json["max_deviation"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn simulate_rejects_sequence_from_another_graph() {
    let dir = tempfile::tempdir().unwrap();
    let design_graph = er_random_graph(6, 0.5, false, true, 31, true).unwrap();
    let other_graph = er_random_graph(6, 0.5, false, true, 32, true).unwrap();
    assert_ne!(design_graph, other_graph);

    let design_path = dir.path().join("design.edges");
    let other_path = dir.path().join("other.edges");
    write_edge_list(&design_graph, &design_path).unwrap();
    write_edge_list(&other_graph, &other_path).unwrap();

    let out = dir.path().join("design");
    let cmd = parse_config([
        "design",
        "--graph",
        design_path.to_str().unwrap(),
        "--target",
        "consensus",
        "--L",
        "2",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let ParsedCommand::Design(cfg) = cmd else {
        panic!("expected design command")
    };
    run_experiment(&cfg).unwrap();

    let signal_path = dir.path().join("z.sig");
    write_signal(&signal_path, &nalgebra::DVector::from_element(6, 1.0)).unwrap();

    let output = Command::new(bin())
        .args([
            "simulate",
            "--graph",
            other_path.to_str().unwrap(),
            "--seq-dir",
            out.to_str().unwrap(),
            "--signal",
            signal_path.to_str().unwrap(),
            "--out",
        ])
        .arg(dir.path().join("sim"))
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(1),
        "pattern mismatch is a validation failure"
    );
}

#[test]
fn geometric_weights_and_symmetry_flags_flow_through() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cmd = parse_config([
        "experiment",
        "--graph",
        "er:8,0.5",
        "--target",
        "consensus",
        "--L",
        "3",
        "--weights",
        "geometric:2.0",
        "--symmetric",
        "--seed",
        "13",
        "--noise-std",
        "0",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let ParsedCommand::Experiment(cfg) = cmd else {
        panic!("expected experiment command")
    };
    assert!(cfg.symmetric);
    run_experiment(&cfg).unwrap();

    // every dumped operator is exactly symmetric
    for i in 1..=3 {
        let op = shiftseq::targets::load_matrix(out.join(format!("seq_{i}.mat"))).unwrap();
        assert_eq!(
            (op.clone() - op.transpose()).norm(),
            0.0,
            "seq_{i} not symmetric"
        );
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    // validation failure: L = 0
    let out = Command::new(bin())
        .args([
            "design",
            "--graph",
            "er:5,0.5",
            "--target",
            "consensus",
            "--L",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // validation failure: missing graph file
    let out = Command::new(bin())
        .args([
            "design",
            "--graph",
            "/no/such/file.edges",
            "--target",
            "consensus",
            "--L",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // argument parse failure
    let out = Command::new(bin())
        .args(["design", "--bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // help exits cleanly
    let out = Command::new(bin()).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // runtime failure: non-finite target surfaces as exit 2
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("h.mat");
    std::fs::write(&target, "inf 0\n0 1\n").unwrap();
    let out = Command::new(bin())
        .args([
            "design",
            "--graph",
            "er:2,1.0",
            "--target",
            &format!("file:{}", target.display()),
            "--L",
            "1",
            "--out",
        ])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error"), "diagnostic missing: {stderr}");
}
