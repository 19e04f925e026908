use std::fs;
use std::process::Command;

use hag_core::ingest::deserialize_hag;

fn hag(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hag"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn twin_file(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("twin.txt");
    fs::write(&path, "# twin\n0 2\n0 3\n0 4\n1 2\n1 3\n1 4\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn optimize_writes_hag_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let input = twin_file(&dir);
    let out = dir.path().join("hag.json");
    let report = dir.path().join("trace.csv");
    let (ok, stdout, _) = hag(&[
        "optimize",
        &input,
        "--verbatim-ids",
        "--algo",
        "full",
        "--k",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(ok);
    assert!(stdout.starts_with("value=2 k_used=1 elapsed_ms="));
    let graph = deserialize_hag(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(graph.value(), 2);
    let trace = fs::read_to_string(&report).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "step,in_set,node,receivers,marginal,cumulative"
    );
    assert_eq!(trace.lines().nth(1).unwrap(), "1,0 1,5,3,2,2");
}

#[test]
fn zero_budget_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, stdout, _) = hag(&[
        "optimize",
        &twin_file(&dir),
        "--k",
        "0",
        "--algo",
        "partial",
    ]);
    assert!(ok);
    assert!(stdout.starts_with("value=0 k_used=0"));
}

#[test]
fn regime_violation_names_receiver() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("star.txt");
    let edges: String = (1..=25).map(|u| format!("{u} 0\n")).collect();
    fs::write(&path, edges).unwrap();
    let (ok, _, stderr) = hag(&[
        "optimize",
        path.to_str().unwrap(),
        "--verbatim-ids",
        "--algo",
        "partial",
        "--d",
        "3",
    ]);
    assert!(!ok);
    assert!(stderr.contains("receiver 0"), "{stderr}");
}

#[test]
fn compare_reports_partial_ahead_of_full() {
    let dir = tempfile::tempdir().unwrap();
    // the instance found by the greedy-gap search
    let path = dir.path().join("gap.txt");
    fs::write(
        &path,
        "# nodes: 10\n0 6\n0 7\n0 9\n1 6\n1 8\n1 9\n2 7\n2 9\n3 8\n3 9\n",
    )
    .unwrap();
    let report = dir.path().join("cmp.csv");
    let (ok, stdout, _) = hag(&[
        "compare",
        path.to_str().unwrap(),
        "--verbatim-ids",
        "--algo",
        "partial,full",
        "--k",
        "3",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(ok);
    assert!(stdout.contains("partial/full value=2.0000"), "{stdout}");
    assert!(fs::read_to_string(&report)
        .unwrap()
        .starts_with("kind,algorithm,baseline,"));
}

#[test]
fn er_experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let (ok, _, _) = hag(&[
            "experiment-er",
            "--n",
            "8",
            "--p",
            "0.5",
            "--trials",
            "1",
            "--k",
            "2",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(ok);
        let text = fs::read_to_string(out).unwrap();
        // drop the wall-clock column
        text.lines()
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                [&cols[..12], &cols[13..]].concat().join(",")
            })
            .collect::<Vec<_>>()
    };
    let a = run("a.csv");
    assert_eq!(a.len(), 3);
    assert_eq!(a, run("b.csv"));
}

#[test]
fn layers_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let (ok, stdout, _) = hag(&["experiment-layers", &twin_file(&dir), "--k", "3"]);
    assert!(ok);
    assert!(stdout.contains("mean % improvement: 0.000"));
    let (ok, stdout, _) = hag(&["validate", "--trials", "20"]);
    assert!(ok, "{stdout}");
    let (ok, stdout, _) = hag(&["validate", "--trials", "3", "--inject-fault"]);
    assert!(!ok);
    assert!(stdout.contains("FAIL optimizer outputs equivalent to input"));
}

#[test]
fn bad_input_fails_cleanly() {
    let (ok, _, stderr) = hag(&["optimize", "/nonexistent/graph.txt"]);
    assert!(!ok);
    assert!(stderr.starts_with("error:"));
}
