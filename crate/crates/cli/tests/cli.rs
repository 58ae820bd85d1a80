//! End-to-end invocations of the `congest` binary: exit codes, file output,
//! config-file layering, and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn congest(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_congest"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn soundness_gate_on_a_far_instance_exits_zero_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = congest(
        dir.path(),
        &[
            "test",
            "--property",
            "triangle",
            "--epsilon",
            "1/3",
            "--gen",
            "disjoint:triangle:10",
            "--trials",
            "60",
            "--seed",
            "1",
            "--gate",
            "soundness",
            "--out",
            "trials.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("gate soundness"));
    let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("seed,verdict,rounds,max_bits,property,epsilon,n,m"));
    assert_eq!(csv.lines().count(), 61);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",triangle-free,1/3,30,30")));
}

#[test]
fn completeness_gate_fails_on_a_rejecting_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = congest(
        dir.path(),
        &[
            "test",
            "--property",
            "triangle",
            "--epsilon",
            "1/3",
            "--gen",
            "disjoint:triangle:5",
            "--trials",
            "10",
            "--gate",
            "completeness",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("gate completeness -> fail"));
}

#[test]
fn usage_and_guard_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["test", "--property", "triangle", "--epsilon", "0/3", "--gen", "gnm:10:9"],
        &["test", "--property", "pentagon", "--epsilon", "1/3", "--gen", "gnm:10:9"],
        &["test", "--property", "triangle", "--epsilon", "1/3"],
        &["test", "--property", "triangle", "--epsilon", "1/3", "--graph", "a", "--gen", "b"],
        &["decompose", "--epsilon", "1/4", "--graph", "missing.txt"],
    ];
    for args in cases {
        let out = congest(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        assert!(!out.stderr.is_empty(), "args {args:?}");
    }
    // A bandwidth below the id width trips the in-simulation guard.
    let out = congest(
        dir.path(),
        &[
            "test", "--property", "triangle", "--epsilon", "1/3", "--gen",
            "disjoint:triangle:2", "--trials", "1", "--bandwidth", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_fills_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.conf"),
        "# far triangle batch\nproperty = triangle\nepsilon = 1/3\ngen = disjoint:triangle:4\ntrials = 9\nseed = 7\nout = from_conf.csv\n",
    )
    .unwrap();
    let out = congest(dir.path(), &["test", "--config", "exp.conf", "--trials", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("from_conf.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("7,"));

    fs::write(dir.path().join("bad.conf"), "trials = 2\nmystery = 1\n").unwrap();
    let out = congest(dir.path(), &["test", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn repeated_runs_write_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "test", "--property", "c4", "--epsilon", "1/4", "--gen", "disjoint:c4:6",
            "--trials", "20", "--seed", "42", "--out", out,
        ]
    };
    assert_eq!(congest(dir.path(), &args("a.csv")).status.code(), Some(0));
    assert_eq!(congest(dir.path(), &args("b.csv")).status.code(), Some(0));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn decompose_verifies_and_dumps_the_cluster_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = congest(
        dir.path(),
        &["decompose", "--gen", "gnm:60:120", "--epsilon", "1/4", "--seed", "3", "--out", "d.txt"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("verified pass"));
    let text = fs::read_to_string(dir.path().join("d.txt")).unwrap();
    let vertex_lines: Vec<_> =
        text.lines().filter(|l| !l.starts_with("cut ")).collect();
    assert_eq!(vertex_lines.len(), 60);
    for (v, line) in vertex_lines.iter().enumerate() {
        assert_eq!(line.split_whitespace().next(), Some(v.to_string().as_str()));
    }
}

#[test]
fn correct_reports_acyclicity_and_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let out = congest(
        dir.path(),
        &["correct", "--gen", "gnm:50:100", "--epsilon", "1/4", "--seed", "2", "--out", "c.txt"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("c.txt")).unwrap();
    assert!(text.contains("acyclic true"));
    assert!(text.contains("within-kept-budget true"));
    assert!(text.contains("deletion-budget "));
    let deleted = text.lines().filter(|l| l.starts_with("deleted ")).count();
    assert!(deleted > 100 - 50, "must delete at least m - n + c edges, saw {deleted}");
}

#[test]
fn tree_property_accepts_alias_and_pattern_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = congest(
        dir.path(),
        &[
            "test", "--property", "tree:path:3", "--epsilon", "1/2", "--gen",
            "disjoint:p3:6", "--trials", "15", "--seed", "4", "--tree-phases", "150",
            "--gate", "soundness",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // Same pattern through the file format: k, then "i parent" lines.
    fs::write(dir.path().join("p3.tree"), "3\n1 0\n2 1\n").unwrap();
    let completeness_args = [
        "test", "--property", "tree:p3.tree", "--epsilon", "1/2", "--graph",
        "clean.txt", "--trials", "10", "--tree-phases", "5", "--gate", "completeness",
    ];
    let out = congest(dir.path(), &completeness_args);
    assert_eq!(out.status.code(), Some(2), "missing graph file must be a usage error");
    // A perfect matching contains no path on three vertices.
    fs::write(dir.path().join("clean.txt"), "6 3\n0 1\n2 3\n4 5\n").unwrap();
    let out = congest(dir.path(), &completeness_args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("rejects 0"));
}
