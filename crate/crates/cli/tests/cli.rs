use std::path::PathBuf;
use std::process::{Command, Output};

const S3: &str = r#"{
  "name": "s3",
  "nvars": 3,
  "objective": "1 + x1 + x2 + x3 + x1^2 + x2^2 + x3^2 + 2*x1*x2 + 2*x1*x3 + 2*x2*x3 + x1^4 + x2^4 + x3^4",
  "group": {"family": "symmetric", "n": 3}
}"#;

/// Per-test scratch directory under the target dir.
fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_problem(dir: &PathBuf, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn symsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symsos")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_reports_optimal_json_and_exits_zero() {
    let dir = scratch("solve_json");
    let p = write_problem(&dir, "s3.json", S3);
    let out = symsos(&["solve", p.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["blocks"], "3_1, 4_1");
    assert_eq!(v["r"], 2);
    assert!(v["bound"].as_f64().unwrap().is_finite());
}

#[test]
fn unbounded_problem_exits_two() {
    let dir = scratch("unbounded");
    let p = write_problem(
        &dir,
        "linear.json",
        r#"{"nvars": 3, "objective": "x1 + x2 + x3", "group": {"family": "symmetric", "n": 3}}"#,
    );
    let out = symsos(&["solve", p.to_str().unwrap(), "--order", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("infeasible"));
}

#[test]
fn input_errors_exit_three() {
    let dir = scratch("input_errors");
    let missing = dir.join("missing.json");
    assert_eq!(symsos(&["solve", missing.to_str().unwrap()]).status.code(), Some(3));

    let broken = write_problem(
        &dir,
        "not_invariant.json",
        r#"{"nvars": 3, "objective": "x1", "group": {"family": "symmetric", "n": 3}}"#,
    );
    let out = symsos(&["solve", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error:"));

    assert_eq!(symsos(&["solve", "--order"]).status.code(), Some(3));
    assert_eq!(symsos(&["--help"]).status.code(), Some(0));
}

#[test]
fn chordal_closure_prints_a_warning() {
    let dir = scratch("md_warning");
    let p = write_problem(&dir, "s3.json", S3);
    let out = symsos(&["solve", p.to_str().unwrap(), "--sparsity", "1", "--closure", "md"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));

    let out = symsos(&["solve", p.to_str().unwrap(), "--sparsity", "1"]);
    assert!(!stderr(&out).contains("warning"));
}

#[test]
fn export_only_writes_sdpa_without_solving() {
    let dir = scratch("export_only");
    let p = write_problem(&dir, "s3.json", S3);
    let target = dir.join("s3.dat-s");
    let out = symsos(&["solve", p.to_str().unwrap(), "--solver", "export-only", "-o", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('*'));
    assert_eq!(lines.next().unwrap().trim().parse::<usize>().unwrap(), 10);
    assert_eq!(lines.next().unwrap().trim(), "2");
}

#[test]
fn basis_json_lists_components() {
    let dir = scratch("basis");
    let p = write_problem(&dir, "s3.json", S3);
    let out = symsos(&["basis", p.to_str().unwrap(), "--order", "2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let sizes: Vec<u64> = v["components"].as_array().unwrap().iter().map(|c| c["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![4, 3, 0]);
}

#[test]
fn bench_writes_the_csv_header() {
    let dir = scratch("bench");
    let target = dir.join("ring.csv");
    let out = symsos(&[
        "bench", "ring", "-n", "4", "--methods", "dense", "--sparsity-orders", "1", "-o", target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,method,r,s,closure,diag,max_block,blocks,n_scalar_constraints,n_matrix_constraints,bound,status,seconds"
    );
    assert!(lines.next().unwrap().contains(",dense,2,"));
}

#[test]
fn analyze_reports_the_stabilized_patterns() {
    let dir = scratch("analyze");
    let p = write_problem(&dir, "s3.json", S3);
    let out = symsos(&["analyze", p.to_str().unwrap(), "--sparsity", "fix", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("s,component,constraint,blocks,support"));
    assert!(text.lines().count() > 1);
}
