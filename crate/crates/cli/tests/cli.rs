use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use sstest::{Family, Sampler, Scenario, ScatterSpec, SignalSpec};
use tempfile::TempDir;

fn sstest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sstest")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = sstest(args);
    assert!(
        out.status.success(),
        "sstest {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn err(args: &[&str]) -> String {
    let out = sstest(args);
    assert!(!out.status.success(), "sstest {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn plan(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("plans").join(name)
}

fn write_sample(dir: &Path, name: &str, n: usize, p: usize, seed: u64, header: bool) -> PathBuf {
    let x = Sampler::new(&Scenario {
        family: Family::StudentT { df: 4.0 },
        n,
        p,
        scatter: ScatterSpec::Ar1 { rho: 0.5 },
        signal: SignalSpec::Null,
        seed,
    })
    .unwrap()
    .draw(0);
    let mut text = String::new();
    if header {
        let names: Vec<String> = (1..=p).map(|j| format!("v{j}")).collect();
        text.push_str(&names.join(","));
        text.push('\n');
    }
    for row in x.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn p_values(csv: &str) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect()
}

#[test]
fn test_reports_all_six_methods() {
    let dir = TempDir::new().unwrap();
    let input = write_sample(dir.path(), "x.csv", 30, 40, 1, true);
    let out = ok(&["test", "--input", input.to_str().unwrap()]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "method,statistic,p_value,decision,alpha,n,p,mode");
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["SS-MAX", "SS-SUM", "SS-CC", "MAX", "SUM", "COM"]);
    assert!(p_values(&out).iter().all(|p| (0.0..=1.0).contains(p)));
    assert!(lines[1].ends_with(",30,40,exact"));
}

#[test]
fn test_output_is_deterministic_and_thread_independent() {
    let dir = TempDir::new().unwrap();
    let input = write_sample(dir.path(), "x.csv", 24, 20, 2, false);
    let path = input.to_str().unwrap();
    let a = ok(&["test", "--input", path, "--format", "json"]);
    let b = ok(&["test", "--input", path, "--format", "json"]);
    let c = ok(&["test", "--input", path, "--format", "json", "--threads", "4"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert!(a.contains("\"approximate\": false"));
}

#[test]
fn output_file_and_method_subset() {
    let dir = TempDir::new().unwrap();
    let input = write_sample(dir.path(), "x.csv", 20, 12, 3, true);
    let report = dir.path().join("report.csv");
    let stdout = ok(&[
        "test",
        "--input",
        input.to_str().unwrap(),
        "--methods",
        "ss-cc,SUM",
        "--mode",
        "shared-dhat",
        "--output",
        report.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("SS-CC,"));
    assert!(text.contains("shared-dhat (approximate)"));
    assert!(stdout.contains("SS-CC"));
}

#[test]
fn bad_cell_is_reported_with_its_line() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("a,b,c,d\n");
    for i in 0..8 {
        if i == 5 {
            text.push_str("1.0,2.0,x3,4.0\n");
        } else {
            text.push_str(&format!("{i}.5,1.{i},-2.{i},0.{i}3\n"));
        }
    }
    let path = dir.path().join("bad.csv");
    fs::write(&path, text).unwrap();
    let msg = err(&["test", "--input", path.to_str().unwrap()]);
    assert!(msg.contains("line 7"), "{msg}");
}

#[test]
fn too_few_rows_or_columns() {
    let dir = TempDir::new().unwrap();
    let small_n = dir.path().join("n.csv");
    fs::write(&small_n, "1,2,3,4\n2,1,0,5\n-1,3,2,2\n").unwrap();
    assert!(err(&["test", "--input", small_n.to_str().unwrap()]).contains("at least 4 observations"));
    let two = dir.path().join("two.csv");
    fs::write(&two, "1,2\n2,1\n-1,3\n0.5,0.2\n3,-1\n").unwrap();
    assert!(err(&["test", "--input", two.to_str().unwrap()]).contains("at least 3 variables"));
}

#[test]
fn paired_swap_leaves_p_values_unchanged() {
    let dir = TempDir::new().unwrap();
    let a = write_sample(dir.path(), "a.csv", 22, 15, 6, true);
    let b = write_sample(dir.path(), "b.csv", 22, 15, 7, true);
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());
    let ab = ok(&["paired", "--input", a, "--paired-with", b]);
    let ba = ok(&["paired", "--input", b, "--paired-with", a]);
    assert_eq!(p_values(&ab), p_values(&ba));
    assert_eq!(p_values(&ab).len(), 6);
}

#[test]
fn paired_split_matches_two_files() {
    let dir = TempDir::new().unwrap();
    let a = write_sample(dir.path(), "a.csv", 12, 5, 8, false);
    let b = write_sample(dir.path(), "b.csv", 12, 5, 9, false);
    let joined: String = fs::read_to_string(&a)
        .unwrap()
        .lines()
        .zip(fs::read_to_string(&b).unwrap().lines())
        .map(|(x, y)| format!("{x},{y}\n"))
        .collect();
    let both = dir.path().join("both.csv");
    fs::write(&both, joined).unwrap();
    let two = ok(&["paired", "--input", a.to_str().unwrap(), "--paired-with", b.to_str().unwrap()]);
    let one = ok(&["paired", "--input", both.to_str().unwrap(), "--split"]);
    assert_eq!(one, two);
}

#[test]
fn identical_paired_files_are_degenerate() {
    let dir = TempDir::new().unwrap();
    let a = write_sample(dir.path(), "a.csv", 10, 6, 10, false);
    let a = a.to_str().unwrap();
    let msg = err(&["paired", "--input", a, "--paired-with", a]);
    assert!(msg.starts_with("error:"), "{msg}");
    assert!(!msg.contains("panicked"), "{msg}");
}

#[test]
fn paired_shape_mismatch() {
    let dir = TempDir::new().unwrap();
    let a = write_sample(dir.path(), "a.csv", 10, 6, 11, false);
    let b = write_sample(dir.path(), "b.csv", 10, 5, 12, false);
    let msg = err(&["paired", "--input", a.to_str().unwrap(), "--paired-with", b.to_str().unwrap()]);
    assert!(msg.contains("differ in shape"), "{msg}");
}

#[test]
fn smoke_plan_is_fast_and_thread_independent() {
    let path = plan("smoke.plan");
    let path = path.to_str().unwrap();
    let start = Instant::now();
    let one = ok(&["simulate", "--plan", path, "--threads", "1"]);
    assert!(start.elapsed().as_secs() < 60);
    let eight = ok(&["simulate", "--plan", path, "--threads", "8"]);
    assert_eq!(one, eight);
    assert_eq!(one.lines().count(), 7);
    assert!(one.lines().nth(1).unwrap().ends_with("shared-dhat (approximate)"));
}

#[test]
fn bundled_plans_parse() {
    for name in ["table1_desk.plan", "power_desk.plan"] {
        let text = fs::read_to_string(plan(name)).unwrap();
        let plan: sstest::ExperimentPlan = serde_json::from_str(&text).unwrap();
        plan.validate().unwrap();
    }
}

#[test]
fn power_plan_emits_grid_rows() {
    let dir = TempDir::new().unwrap();
    let plan_path = dir.path().join("power.plan");
    fs::write(
        &plan_path,
        r#"{"scenarios":[{"family":{"kind":"normal"},"n":12,"p":8,"scatter":{"kind":"ar1","rho":0.5},"seed":3}],
            "replications":4,"methods":["SS-MAX","MAX"],"power":{"sparsity":[1,8],"strength":[0.0,2.0]}}"#,
    )
    .unwrap();
    let out = ok(&["simulate", "--plan", plan_path.to_str().unwrap(), "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["scenarios"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_plan_is_rejected_before_running() {
    let dir = TempDir::new().unwrap();
    let plan_path = dir.path().join("bad.plan");
    fs::write(
        &plan_path,
        r#"{"scenarios":[{"family":{"kind":"normal"},"n":12,"p":8,"scatter":{"kind":"ar1","rho":1.5}}]}"#,
    )
    .unwrap();
    let msg = err(&["simulate", "--plan", plan_path.to_str().unwrap()]);
    assert!(msg.contains("rho"), "{msg}");
    let msg = err(&["simulate", "--plan", plan("smoke.plan").to_str().unwrap(), "--alpha", "1.5"]);
    assert!(msg.contains("alpha"), "{msg}");
}

#[test]
fn independence_reports_a_correlation() {
    let out = ok(&[
        "independence",
        "--plan",
        plan("smoke.plan").to_str().unwrap(),
        "--replications",
        "30",
        "--seed",
        "5",
    ]);
    let line = out.lines().nth(1).unwrap();
    let corr: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
    assert!((-1.0..=1.0).contains(&corr));
    let msg = err(&["independence", "--plan", plan("smoke.plan").to_str().unwrap(), "--replications", "10"]);
    assert!(msg.contains("30"), "{msg}");
}
