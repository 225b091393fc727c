//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mapsearch");

// A -> B with P(A) = (0.7, 0.3), P(B|A=0) = (0.7, 0.3), P(B|A=1) = (0.2, 0.8).
const TWO_NODE: &str = "BAYES\n2\n2 2\n2\n1 0\n2 0 1\n2\n0.7 0.3\n4\n0.7 0.3 0.2 0.8\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

#[test]
fn solve_reports_the_two_node_optimum() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("n1.net"), TWO_NODE).unwrap();
    fs::write(dir.path().join("mv.txt"), "2 0 1\n").unwrap();

    let out = run(dir.path(), &["solve", "n1.net", "--map-vars", "mv.txt"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("status: exact"), "{text}");
    assert!(text.contains("p=0.49"), "{text}");
    assert!(text.contains("assignment: V0=0 V1=0"), "{text}");
    assert!(text.contains("nodes="), "{text}");

    // under evidence B=1 the optimum flips to A=1: 0.3 * 0.8 = 0.24
    fs::write(dir.path().join("ev.txt"), "1 1 1\n").unwrap();
    fs::write(dir.path().join("mva.txt"), "1 0\n").unwrap();
    let out = run(
        dir.path(),
        &["solve", "n1.net", "--evidence", "ev.txt", "--map-vars", "mva.txt"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("p=0.24"), "{text}");
    assert!(text.contains("assignment: V0=1"), "{text}");
}

#[test]
fn json_output_carries_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("n1.net"), TWO_NODE).unwrap();
    fs::write(dir.path().join("mv.txt"), "2 0 1\n").unwrap();

    let out = run(dir.path(), &["solve", "n1.net", "--map-vars", "mv.txt", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(doc["status"], "exact");
    assert!((doc["p"].as_f64().unwrap() - 0.49).abs() < 1e-9);
    assert_eq!(doc["assignment"]["V0"], 0);
    assert_eq!(doc["assignment"]["V1"], 0);
    assert!(doc["map_log10"].as_f64().unwrap() < 0.0);
}

#[test]
fn oracle_solve_and_bounds_agree_on_a_generated_network() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gen-random", "--nodes", "16", "--connectivity", "4", "--seed", "9", "-o", "g.net"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    fs::write(dir.path().join("mv.txt"), "5 0 3 6 9 12\n").unwrap();

    let solve = run(dir.path(), &["solve", "g.net", "--map-vars", "mv.txt"]);
    let oracle = run(dir.path(), &["oracle", "g.net", "--map-vars", "mv.txt"]);
    assert_eq!(solve.status.code(), Some(0));
    assert_eq!(oracle.status.code(), Some(0));
    let value_line = |text: &str| {
        text.lines()
            .find(|l| l.starts_with("map log10="))
            .expect("a value line")
            .to_string()
    };
    assert_eq!(value_line(&stdout(&solve)), value_line(&stdout(&oracle)));

    // both bounding methods print a value at least as large as the optimum
    let p_of = |text: &str| {
        let line = text.lines().find(|l| l.contains(" p=")).unwrap().to_string();
        line.split(" p=").nth(1).unwrap().parse::<f64>().unwrap()
    };
    let optimum = p_of(&stdout(&solve));
    for method in ["jointree", "minibucket"] {
        let bound = run(dir.path(), &["bound", "g.net", "--map-vars", "mv.txt", "--method", method]);
        assert_eq!(bound.status.code(), Some(0), "stderr: {}", stderr(&bound));
        assert!(p_of(&stdout(&bound)) >= optimum * (1.0 - 1e-9), "{method}");
    }
}

#[test]
fn missing_files_and_bad_requests_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("mv.txt"), "1 0\n").unwrap();
    let out = run(dir.path(), &["solve", "missing.net", "--map-vars", "mv.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.net"), "{}", stderr(&out));

    // a MAP variable under evidence is a validation error, not a crash
    fs::write(dir.path().join("n1.net"), TWO_NODE).unwrap();
    fs::write(dir.path().join("ev.txt"), "1 0 1\n").unwrap();
    let out = run(
        dir.path(),
        &["solve", "n1.net", "--evidence", "ev.txt", "--map-vars", "mv.txt"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["solve"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn gen_random_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.net", "b.net"] {
        let out = run(
            dir.path(),
            &["gen-random", "--nodes", "25", "--connectivity", "6", "--seed", "3", "-o", name],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.net")).unwrap();
    let b = fs::read(dir.path().join("b.net")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn a_timeout_still_prints_the_best_solution_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gen-random", "--nodes", "22", "--connectivity", "6", "--seed", "5", "-o", "g.net"],
    );
    assert_eq!(out.status.code(), Some(0));
    fs::write(dir.path().join("mv.txt"), "8 0 2 4 6 8 10 12 14\n").unwrap();
    let out = run(
        dir.path(),
        &["solve", "g.net", "--map-vars", "mv.txt", "--time-limit", "0"],
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("status: timeout"), "{text}");
    let assignment = text.lines().find(|l| l.starts_with("assignment: ")).unwrap();
    assert_eq!(assignment.split_whitespace().count(), 9, "eight pairs: {assignment}");
}

#[test]
fn bench_subcommands_write_json_lines_reports() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.json"), r#"{"instances": 2, "nodes": 10, "connectivity": 4}"#)
        .unwrap();
    let out = run(
        dir.path(),
        &["bench", "compare-bounds", "--config", "b.json", "-o", "b.jsonl"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("ratio log10"));
    let report = fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 2);
    for line in lines {
        let doc: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(doc["status"], "bound");
        assert!(doc["bd_log10"].as_f64().is_some());
    }

    fs::write(
        dir.path().join("s.json"),
        r#"{"instances": 2, "nodes": 12, "map_count": 4, "time_limit_s": 30.0}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["bench", "solver", "--config", "s.json", "-o", "s.jsonl"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("solved 2 of 2"));
    let report = fs::read_to_string(dir.path().join("s.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 2);
}
