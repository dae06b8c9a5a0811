use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fkrfe::io::SelectOutput;
use fkrfe::sim::{gen_example, ExampleSpec};
use fkrfe::SeedSpec;

fn fkrfe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkrfe"))
        .args(args)
        .env_remove("FKRFE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Design-3 data (two signal columns) written as CSV with the response in
/// the middle column.
fn write_csv(dir: &Path, n: usize, p: usize) -> PathBuf {
    let (ds, _) = gen_example(&ExampleSpec::new(3, n, p).unwrap(), SeedSpec::new(11)).unwrap();
    let mut w = csv::Writer::from_path(dir.join("data.csv")).unwrap();
    let mut header: Vec<String> = (0..p).map(|j| format!("f{j}")).collect();
    header.insert(1, "y".into());
    w.write_record(&header).unwrap();
    for i in 0..n {
        let mut row: Vec<String> = (0..p).map(|j| ds.get(i, j).to_string()).collect();
        row.insert(1, ds.y.value(i).to_string());
        w.write_record(&row).unwrap();
    }
    w.flush().unwrap();
    dir.join("data.csv")
}

#[test]
fn select_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 60, 8);
    let args = ["select", "--input", csv.to_str().unwrap(), "--response", "y", "--seed", "7", "--trees", "100"];
    let a = fkrfe(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = fkrfe(&args);
    assert_eq!(a.stdout, b.stdout);

    let text = stdout(&a);
    let out: SelectOutput = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&out).unwrap() + "\n", text);
    assert_eq!(out.result.seed, SeedSpec::new(7));
    assert_eq!(out.feature_names[0], "f0");
    assert_eq!(out.feature_names[1], "f1");
    assert!(out.chosen_features.iter().any(|f| f.name == "f0" && f.index == 0));
    assert!(out.chosen_features.iter().any(|f| f.name == "f1" && f.index == 1));
    assert_eq!(out.result.trace.len(), out.result.d_n);
}

#[test]
fn select_writes_csv_trace_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 60, 8);
    let out = dir.path().join("trace.csv");
    let o = fkrfe(&[
        "select", "--input", csv.to_str().unwrap(), "--response", "1", "--trees", "50",
        "--dn", "5", "--format", "csv", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("step,size,oob_perf,chosen"));
    assert_eq!(lines.iter().filter(|l| l.contains(",true,")).count(), 1);
}

#[test]
fn missing_response_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 30, 4);
    let o = fkrfe(&["select", "--input", csv.to_str().unwrap(), "--response", "missing_col"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing_col"));
}

#[test]
fn non_numeric_cell_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,y,b\n1,2,3\n4,5,abc\n7,8,9\n").unwrap();
    let o = fkrfe(&["select", "--input", path.to_str().unwrap(), "--response", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 2, column 3"), "{}", stderr(&o));
}

#[test]
fn oversized_dn_is_clamped_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 40, 6);
    let o = fkrfe(&[
        "select", "--input", csv.to_str().unwrap(), "--response", "y", "--dn", "5000", "--trees", "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: d_n = 5000 exceeds p = 6; clamped to 6"));
    let out: SelectOutput = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out.result.d_n, 6);
    assert_eq!(out.d_n_requested, Some(5000));
}

#[test]
fn runtime_failure_exits_1() {
    // one tree leaves most rows never out of bag
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 40, 6);
    let o = fkrfe(&["select", "--input", csv.to_str().unwrap(), "--response", "y", "--trees", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("increase the number of trees"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fkrfe(&["select", "--response", "y"]).status.code(), Some(2));
    assert_eq!(fkrfe(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 30, 4);
    let c = csv.to_str().unwrap();
    assert_eq!(fkrfe(&["select", "--input", c, "--response", "y", "--slices", "1"]).status.code(), Some(2));
    assert_eq!(fkrfe(&["select", "--input", c, "--response", "y", "--dn", "lots"]).status.code(), Some(2));
    assert_eq!(fkrfe(&["--threads", "0", "select", "--input", c, "--response", "y"]).status.code(), Some(2));
    assert_eq!(fkrfe(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 50, 6);
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"n_trees": 60, "d_n": 4, "seed": 3}"#).unwrap();
    let o = fkrfe(&[
        "select", "--input", csv.to_str().unwrap(), "--response", "y",
        "--config", cfg.to_str().unwrap(), "--seed", "9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out: SelectOutput = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out.run_config.n_trees, 60);
    assert_eq!(out.result.d_n, 4);
    assert_eq!(out.result.seed, SeedSpec::new(9));

    std::fs::write(&cfg, r#"{"trees": 60}"#).unwrap();
    let o = fkrfe(&["select", "--input", csv.to_str().unwrap(), "--response", "y", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn categorical_response() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cls.csv");
    let mut text = String::from("x1,x2,label\n");
    for i in 0..40 {
        let x1 = i as f64 / 4.0;
        let x2 = ((i * 7) % 11) as f64;
        let label = if i < 20 { "low" } else { "high" };
        text += &format!("{x1},{x2},{label}\n");
    }
    std::fs::write(&path, text).unwrap();
    let o = fkrfe(&[
        "select", "--input", path.to_str().unwrap(), "--response", "label", "--categorical", "--trees", "100",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out: SelectOutput = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out.result.task, fkrfe::Task::Classification);
    assert!(out.chosen_features.iter().any(|f| f.name == "x1"));
}

#[test]
fn simulate_emits_rep_lines_and_aggregate() {
    let o = fkrfe(&["simulate", "--example", "5", "--n", "100", "--p", "100", "--reps", "5", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for l in &lines[..5] {
        let r: fkrfe::sim::RepRecord = serde_json::from_str(l).unwrap();
        assert!(r.trace_violation.is_none());
    }
    let agg: serde_json::Value = serde_json::from_str(lines[5]).unwrap();
    assert_eq!(agg["aggregate"]["reps"], 5);

    let t = fkrfe(&[
        "simulate", "--example", "3", "--n", "60", "--p", "20", "--reps", "2", "--trees", "50", "--format", "table",
    ]);
    let text = stdout(&t);
    assert!(text.lines().last().unwrap().starts_with("Example 3  n=60  p=20  reps=2  | Balanced Accuracy"));
}

#[test]
fn simulate_rejects_unknown_example() {
    let o = fkrfe(&["simulate", "--example", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("example"));
}

#[test]
fn holdout_reports_split_sizes_and_selection() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), 240, 5);
    let c = csv.to_str().unwrap();
    let o = fkrfe(&[
        "holdout", "--input", c, "--response", "y", "--train-n", "200", "--noise-p", "0", "--trees", "100",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let split = &v["splits"][0];
    assert_eq!(split["test_n"], 40);
    assert_eq!(split["train_n"], 200);
    assert_eq!(split["wrong_selection"], 0);
    assert!(split["test_metrics"]["mse"].as_f64().unwrap() >= 0.0);

    let o = fkrfe(&[
        "holdout", "--input", c, "--response", "y", "--train-n", "200", "--noise-p", "20",
        "--splits", "2", "--trees", "100", "--format", "table",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("Model size | Wrong selection"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn holdout_missing_file_exits_2() {
    let o = fkrfe(&["holdout", "--input", "/nonexistent/data.csv", "--response", "y", "--train-n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/data.csv"));
}
