//! Buggy/fixed version pairs, their test suites, and corpus loading.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::infoloss::{self, FiniteFunctionSpec};
use crate::minilang::{parse, Interpreter, Program, RuntimeError, SourceError, StmtId, StmtKind, Trace, Value};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Source {
        path: PathBuf,
        #[source]
        source: SourceError,
    },
    #[error("version `{version}`: {reason}")]
    Invalid { version: String, reason: String },
}

impl CorpusError {
    fn invalid(version: &str, reason: impl Into<String>) -> Self {
        CorpusError::Invalid { version: version.to_string(), reason: reason.into() }
    }
}

/// A defective program, its fix, and the checkers injected at the defect.
#[derive(Clone, Debug)]
pub struct VersionPair {
    pub id: String,
    pub buggy: Program,
    pub fixed: Program,
    pub defect_fn: String,
    pub defect_sites: Vec<StmtId>,
    pub weak_labels: Vec<String>,
    pub strong_labels: Vec<String>,
}

impl VersionPair {
    /// Versions without a strong checker can never yield strong CC.
    pub fn has_strong_checker(&self) -> bool {
        !self.strong_labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct TestCase {
    pub name: String,
    pub args: Vec<Value>,
    #[serde(default)]
    pub expected_output: Option<Vec<Value>>,
}

#[derive(Clone, Debug)]
pub struct TestSuite {
    pub version: String,
    pub tests: Vec<TestCase>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    id: String,
    buggy: String,
    fixed: String,
    defect_fn: String,
    defect_sites: Vec<String>,
    #[serde(default)]
    weak_labels: Vec<String>,
    #[serde(default)]
    strong_labels: Vec<String>,
    tests: String,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CorpusError> {
    serde_json::from_str(&read(path)?).map_err(|source| CorpusError::Json { path: path.to_path_buf(), source })
}

pub(crate) fn load_program(path: &Path) -> Result<Program, CorpusError> {
    parse(&read(path)?).map_err(|source| CorpusError::Source { path: path.to_path_buf(), source })
}

/// Loads and structurally validates one `version.json`.
pub fn load_version(manifest_path: &Path) -> Result<(VersionPair, TestSuite), CorpusError> {
    let manifest: Manifest = read_json(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let id = manifest.id.clone();
    let buggy = load_program(&dir.join(&manifest.buggy))?;
    let fixed = load_program(&dir.join(&manifest.fixed))?;
    let tests: Vec<TestCase> = read_json(&dir.join(&manifest.tests))?;

    for (which, prog) in [("buggy", &buggy), ("fixed", &fixed)] {
        if prog.function(&manifest.defect_fn).is_none() {
            return Err(CorpusError::invalid(
                &id,
                format!("defect function `{}` missing from {which} program", manifest.defect_fn),
            ));
        }
    }
    if !fixed.probe_labels().is_empty() || !fixed.check_labels().is_empty() {
        return Err(CorpusError::invalid(&id, "fixed program must not contain probe or check statements"));
    }
    if manifest.defect_sites.is_empty() {
        return Err(CorpusError::invalid(&id, "no defect sites listed"));
    }
    let mut defect_sites = Vec::new();
    for site in &manifest.defect_sites {
        let sid: StmtId = site.parse().map_err(|e: String| CorpusError::invalid(&id, e))?;
        if sid.is_checker() || buggy.statement(sid).is_none() {
            return Err(CorpusError::invalid(&id, format!("defect site `{site}` is not a statement of the buggy program")));
        }
        defect_sites.push(sid);
    }

    let probes: HashSet<&str> = buggy.probe_labels().into_iter().collect();
    let checks: HashSet<&str> = buggy.check_labels().into_iter().collect();
    for l in &manifest.weak_labels {
        if !probes.contains(l.as_str()) {
            return Err(CorpusError::invalid(&id, format!("weak label `{l}` has no probe in the buggy program")));
        }
    }
    for l in &manifest.strong_labels {
        if !checks.contains(l.as_str()) {
            return Err(CorpusError::invalid(&id, format!("strong label `{l}` has no check in the buggy program")));
        }
    }
    for l in &probes {
        if !manifest.weak_labels.iter().any(|w| w == l) {
            return Err(CorpusError::invalid(&id, format!("probe `{l}` is not listed in weak_labels")));
        }
    }
    for l in &checks {
        if !manifest.strong_labels.iter().any(|s| s == l) {
            return Err(CorpusError::invalid(&id, format!("check `{l}` is not listed in strong_labels")));
        }
    }

    // checker_bug is judged per activation of defect_fn, so checkers must live there
    let defect_body = buggy.function(&manifest.defect_fn).map(|f| f.statements()).unwrap_or_default();
    for s in buggy.statements() {
        let label = match &s.kind {
            StmtKind::Probe { label } | StmtKind::Check { label, .. } => label,
            _ => continue,
        };
        if !defect_body.iter().any(|d| d.id == s.id) {
            return Err(CorpusError::invalid(&id, format!("checker `{label}` is outside `{}`", manifest.defect_fn)));
        }
    }

    if tests.is_empty() {
        return Err(CorpusError::invalid(&id, "test suite is empty"));
    }
    let mut names = HashSet::new();
    for t in &tests {
        if !names.insert(t.name.as_str()) {
            return Err(CorpusError::invalid(&id, format!("duplicate test name `{}`", t.name)));
        }
        for (which, prog) in [("buggy", &buggy), ("fixed", &fixed)] {
            let arity = prog.entry_fn().params.len();
            if arity != t.args.len() {
                return Err(CorpusError::invalid(
                    &id,
                    format!("test `{}` passes {} arguments but the {which} entry takes {arity}", t.name, t.args.len()),
                ));
            }
        }
    }

    let pair = VersionPair {
        id: id.clone(),
        buggy,
        fixed,
        defect_fn: manifest.defect_fn,
        defect_sites,
        weak_labels: manifest.weak_labels,
        strong_labels: manifest.strong_labels,
    };
    Ok((pair, TestSuite { version: id, tests }))
}

/// Buggy and fixed traces for one test.
#[derive(Clone, Debug)]
pub struct TestRun {
    pub buggy: Trace,
    pub fixed: Trace,
}

impl TestRun {
    pub fn error(&self) -> Option<(&'static str, &RuntimeError)> {
        self.buggy
            .error()
            .map(|e| ("buggy", e))
            .or_else(|| self.fixed.error().map(|e| ("fixed", e)))
    }
}

pub fn run_pair(vp: &VersionPair, test: &TestCase, interp: &Interpreter) -> TestRun {
    TestRun { buggy: interp.run(&vp.buggy, &test.args), fixed: interp.run(&vp.fixed, &test.args) }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub version: String,
    /// Tests whose fixed run disagrees with the declared expected output.
    pub expected_mismatches: Vec<String>,
    /// Whether any test distinguishes buggy from fixed output.
    pub observable: bool,
    pub fixed_errors: Vec<(String, RuntimeError)>,
    pub nonterminating: Vec<String>,
    /// Always false for a loaded pair; kept so the report is self-describing.
    pub fixed_has_checkers: bool,
}

impl ValidationReport {
    pub fn from_runs(vp: &VersionPair, suite: &TestSuite, runs: &[TestRun]) -> Self {
        let mut report = ValidationReport {
            version: vp.id.clone(),
            fixed_has_checkers: !vp.fixed.probe_labels().is_empty() || !vp.fixed.check_labels().is_empty(),
            ..Default::default()
        };
        for (test, run) in suite.tests.iter().zip(runs) {
            if let Some(err) = run.fixed.error() {
                if err.is_nontermination() {
                    report.nonterminating.push(test.name.clone());
                }
                report.fixed_errors.push((test.name.clone(), err.clone()));
                continue;
            }
            if let Some(expected) = &test.expected_output {
                if *expected != run.fixed.output {
                    report.expected_mismatches.push(test.name.clone());
                }
            }
            if run.buggy.terminated_ok && run.buggy.output != run.fixed.output {
                report.observable = true;
            }
        }
        report
    }

    pub fn is_ok(&self) -> bool {
        self.expected_mismatches.is_empty() && self.observable && self.fixed_errors.is_empty() && !self.fixed_has_checkers
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.expected_mismatches {
            out.push(format!("fixed output of `{t}` differs from expected_output"));
        }
        if !self.observable {
            out.push("defect is not observable: no test distinguishes buggy from fixed".into());
        }
        for (t, e) in &self.fixed_errors {
            out.push(format!("fixed run of `{t}` failed: {e}"));
        }
        if self.fixed_has_checkers {
            out.push("fixed program carries checkers".into());
        }
        out
    }
}

pub fn validate_version(vp: &VersionPair, suite: &TestSuite, interp: &Interpreter) -> ValidationReport {
    let runs: Vec<TestRun> = suite.tests.iter().map(|t| run_pair(vp, t, interp)).collect();
    ValidationReport::from_runs(vp, suite, &runs)
}

/// One version inside a corpus, tagged with its group (first path component).
#[derive(Clone, Debug)]
pub struct CorpusVersion {
    pub group: String,
    pub dir: String,
    pub pair: VersionPair,
    pub suite: TestSuite,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub root: PathBuf,
    pub versions: Vec<CorpusVersion>,
    pub drr_specs: Vec<FiniteFunctionSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusManifest {
    versions: Vec<String>,
    #[serde(default)]
    drr: Vec<String>,
}

impl Corpus {
    /// Loads `corpus.json` under `root` and every version it lists.
    pub fn load(root: &Path) -> Result<Corpus, CorpusError> {
        let manifest: CorpusManifest = read_json(&root.join("corpus.json"))?;
        let mut versions = Vec::with_capacity(manifest.versions.len());
        let mut ids = HashSet::new();
        for dir in &manifest.versions {
            let (pair, suite) = load_version(&root.join(dir).join("version.json"))?;
            if !ids.insert(pair.id.clone()) {
                return Err(CorpusError::invalid(&pair.id, "duplicate version id"));
            }
            let group = dir.split('/').next().unwrap_or(dir).to_string();
            versions.push(CorpusVersion { group, dir: dir.clone(), pair, suite });
        }
        versions.sort_by(|a, b| a.pair.id.cmp(&b.pair.id));
        let mut drr_specs = manifest
            .drr
            .iter()
            .map(|p| infoloss::load_spec(&root.join(p)))
            .collect::<Result<Vec<_>, _>>()?;
        drr_specs.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(Corpus { root: root.to_path_buf(), versions, drr_specs })
    }

    pub fn version(&self, id: &str) -> Option<&CorpusVersion> {
        self.versions.iter().find(|v| v.pair.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
    }

    fn write_version(dir: &Path, version: &str, buggy: &str, fixed: &str, tests: &str) -> PathBuf {
        fs::write(dir.join("version.json"), version).unwrap();
        fs::write(dir.join("buggy.mini"), buggy).unwrap();
        fs::write(dir.join("fixed.mini"), fixed).unwrap();
        fs::write(dir.join("tests.json"), tests).unwrap();
        dir.join("version.json")
    }

    const MANIFEST: &str = r#"{ "id": "v", "buggy": "buggy.mini", "fixed": "fixed.mini", "defect_fn": "f",
        "defect_sites": ["L1"], "weak_labels": ["W1"], "strong_labels": [], "tests": "tests.json" }"#;
    const TESTS: &str = r#"[ { "name": "a", "args": [1] }, { "name": "b", "args": [2] } ]"#;

    #[test]
    fn median_loads_with_line_six_defect() {
        let (vp, suite) = load_version(&corpus_dir().join("median/version.json")).unwrap();
        assert_eq!(vp.defect_sites, vec![StmtId::Line(6)]);
        assert_eq!(vp.defect_fn, "median");
        assert_eq!(suite.tests.len(), 6);
        assert_eq!(suite.tests[5].args, vec![Value::Int(2), Value::Int(1), Value::Int(3)]);
    }

    #[test]
    fn reload_is_structurally_identical() {
        let (a, _) = load_version(&corpus_dir().join("median/version.json")).unwrap();
        let (b, _) = load_version(&corpus_dir().join("median/version.json")).unwrap();
        assert_eq!(a.buggy, b.buggy);
        assert_eq!(a.fixed, b.fixed);
        assert_eq!(a.defect_sites, b.defect_sites);
    }

    #[test]
    fn median_validates_as_observable() {
        let (vp, suite) = load_version(&corpus_dir().join("median/version.json")).unwrap();
        let report = validate_version(&vp, &suite, &Interpreter::default());
        assert!(report.observable);
        assert!(report.is_ok(), "{:?}", report.problems());
    }

    #[test]
    fn defect_fn_missing_from_fixed() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_version(
            tmp.path(),
            MANIFEST,
            "fn f(x) { let y = x; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            "fn g(x) { output(x); } fn main(x) { g(x); }",
            TESTS,
        );
        let err = load_version(&path).unwrap_err();
        assert!(matches!(err, CorpusError::Invalid { ref reason, .. } if reason.contains("missing from fixed")));
    }

    #[test]
    fn probe_in_fixed_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_version(
            tmp.path(),
            MANIFEST,
            "fn f(x) { let y = x; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            "fn f(x) { let y = x; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            TESTS,
        );
        assert!(matches!(load_version(&path), Err(CorpusError::Invalid { .. })));
    }

    #[test]
    fn identical_pair_is_not_observable() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_version(
            tmp.path(),
            MANIFEST,
            "fn f(x) { let y = x; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            "fn f(x) { let y = x; output(y); } fn main(x) { f(x); }",
            TESTS,
        );
        let (vp, suite) = load_version(&path).unwrap();
        let report = validate_version(&vp, &suite, &Interpreter::default());
        assert!(!report.observable);
        assert!(!report.is_ok());
    }

    #[test]
    fn nonterminating_fixed_run_is_flagged() {
        let tmp = tempfile::tempdir().unwrap();
        let path = write_version(
            tmp.path(),
            MANIFEST,
            "fn f(x) { let y = x + 1; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            "fn f(x) { let y = x; while (y > 1) { y = y + 0; } output(y); } fn main(x) { f(x); }",
            TESTS,
        );
        let (vp, suite) = load_version(&path).unwrap();
        let report = validate_version(&vp, &suite, &Interpreter::with_budget(10_000));
        assert_eq!(report.nonterminating, vec!["b".to_string()]);
        assert_eq!(report.fixed_errors.len(), 1);
        assert!(report.observable);
    }

    #[test]
    fn bad_manifests() {
        let tmp = tempfile::tempdir().unwrap();
        let unknown_site = MANIFEST.replace("\"L1\"", "\"L9\"");
        let path = write_version(
            tmp.path(),
            &unknown_site,
            "fn f(x) { let y = x; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            "fn f(x) { output(x); } fn main(x) { f(x); }",
            TESTS,
        );
        assert!(load_version(&path).is_err());

        let path = write_version(
            tmp.path(),
            MANIFEST,
            "fn f(x) { let y = x; probe \"W1\"; output(y); } fn main(x) { f(x); }",
            "fn f(x) { output(x); } fn main(x) { f(x); }",
            r#"[ { "name": "a", "args": [1, 2] } ]"#,
        );
        assert!(load_version(&path).is_err());

        let path = write_version(
            tmp.path(),
            MANIFEST,
            "fn f(x) { let y = x; probe \"W2\"; output(y); } fn main(x) { f(x); }",
            "fn f(x) { output(x); } fn main(x) { f(x); }",
            TESTS,
        );
        assert!(load_version(&path).is_err());
    }

    #[test]
    fn missing_corpus_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(Corpus::load(tmp.path()), Err(CorpusError::Io { .. })));
    }
}
