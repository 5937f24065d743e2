use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn cclab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cclab"));
    cmd.args(args).env_remove("CCLAB_BUDGET");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A one-version corpus whose buggy side never terminates on the second test.
fn looping_corpus(root: &Path) {
    let d = root.join("loopy");
    fs::create_dir_all(&d).unwrap();
    fs::write(
        d.join("buggy.mini"),
        "fn main(x) {\n  let y = x + 1;\n  probe \"W1\";\n  check \"S1\" { let good = x; } when (good != y);\n  while (y > 100) {\n    y = y + 0;\n  }\n  output(y);\n}\n",
    )
    .unwrap();
    fs::write(d.join("fixed.mini"), "fn main(x) {\n  let y = x;\n  while (y > 100) {\n    y = y + 0;\n  }\n  output(y);\n}\n").unwrap();
    fs::write(d.join("tests.json"), r#"[{"name": "t1", "args": [1]}, {"name": "t2", "args": [100]}]"#).unwrap();
    fs::write(
        d.join("version.json"),
        r#"{"id": "loopy", "buggy": "buggy.mini", "fixed": "fixed.mini", "defect_fn": "main",
            "defect_sites": ["L1"], "weak_labels": ["W1"], "strong_labels": ["S1"], "tests": "tests.json"}"#,
    )
    .unwrap();
    fs::write(root.join("corpus.json"), r#"{"versions": ["loopy"], "drr": []}"#).unwrap();
}

#[test]
fn bundled_corpus_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = cclab(&["classify", "--corpus", s(&corpus_dir()), "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("classification.csv").is_file());
    assert!(!out.join("levels.csv").exists());
}

#[test]
fn missing_corpus_manifest_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cclab(&["report", "--corpus", s(tmp.path()), "--out", s(&tmp.path().join("out"))], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corpus.json"));
}

#[test]
fn nonterminating_subject_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    looping_corpus(tmp.path());
    let out = tmp.path().join("out");
    let o = cclab(&["report", "--corpus", s(tmp.path()), "--out", s(&out), "--budget", "5000"], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let diags = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diags.contains("loopy,t2,subject_error,buggy run: step budget of 5000 exhausted"), "{diags}");
}

#[test]
fn budget_environment_variable_wins() {
    let tmp = tempfile::tempdir().unwrap();
    looping_corpus(tmp.path());
    let out = tmp.path().join("out");
    let o = cclab(
        &["classify", "--corpus", s(tmp.path()), "--out", s(&out), "--budget", "999999999"],
        &[("CCLAB_BUDGET", "777")],
    );
    assert_eq!(o.status.code(), Some(2));
    let diags = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diags.contains("step budget of 777 exhausted"), "{diags}");

    let o = cclab(&["classify", "--corpus", s(tmp.path()), "--out", s(&out)], &[("CCLAB_BUDGET", "lots")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(cclab(&["classify"], &[]).status.code(), Some(1));
    assert_eq!(cclab(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(cclab(&["levels", "--corpus", "x", "--out", "y", "--scale", "cubic"], &[]).status.code(), Some(1));
    assert_eq!(cclab(&["report", "--corpus", "x", "--out", "y", "--analyses", "bogus"], &[]).status.code(), Some(1));
    assert_eq!(cclab(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn log_scale_levels_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = cclab(&["levels", "--corpus", s(&corpus_dir()), "--out", s(&out), "--bins", "4", "--scale", "log"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bins = fs::read_to_string(out.join("level_bins.csv")).unwrap();
    assert_eq!(bins.lines().filter(|l| l.starts_with("count,log,")).count(), 4);
    assert_eq!(bins.lines().filter(|l| l.starts_with("freq,log,")).count(), 4);
}
