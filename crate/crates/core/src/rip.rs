//! Four-way RIP classification of tests and CC prevalence ratios.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::corpus::{run_pair, TestCase, TestRun, TestSuite, VersionPair};
use crate::minilang::Interpreter;
use crate::report::ratio_json;
use crate::SubjectError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RipLabel {
    Failing,
    TruePassing,
    WeakCC,
    StrongCC,
}

impl RipLabel {
    pub const ALL: [RipLabel; 4] = [RipLabel::Failing, RipLabel::TruePassing, RipLabel::WeakCC, RipLabel::StrongCC];

    pub fn as_str(self) -> &'static str {
        match self {
            RipLabel::Failing => "Failing",
            RipLabel::TruePassing => "TruePassing",
            RipLabel::WeakCC => "WeakCC",
            RipLabel::StrongCC => "StrongCC",
        }
    }

    pub fn is_cc(self) -> bool {
        matches!(self, RipLabel::WeakCC | RipLabel::StrongCC)
    }

    /// The oracle decides first; checker evidence only refines passing tests.
    pub fn from_evidence(oracle_pass: bool, reach_count: usize, infect_count: usize) -> RipLabel {
        if !oracle_pass {
            RipLabel::Failing
        } else if infect_count > 0 {
            RipLabel::StrongCC
        } else if reach_count > 0 {
            RipLabel::WeakCC
        } else {
            RipLabel::TruePassing
        }
    }
}

impl fmt::Display for RipLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationRecord {
    pub version: String,
    pub test: String,
    pub label: RipLabel,
    pub reach_count: usize,
    pub infect_count: usize,
    pub oracle_pass: bool,
    pub in_tbug: bool,
}

impl ClassificationRecord {
    /// A failure that never reached the defect: a flaky oracle or a mis-sited probe.
    pub fn failing_without_reach(&self) -> bool {
        self.label == RipLabel::Failing && self.reach_count == 0
    }

    /// Strong checkers fire only after the defect is reached.
    pub fn infect_without_reach(&self) -> bool {
        self.infect_count > 0 && self.reach_count == 0
    }
}

/// Classifies a completed buggy/fixed run pair.
pub fn classify_run(vp: &VersionPair, test: &str, run: &TestRun) -> Result<ClassificationRecord, SubjectError> {
    if let Some((side, error)) = run.error() {
        return Err(SubjectError { subject: vp.id.clone(), case: test.to_string(), side, error: error.clone() });
    }
    let reach_count = run.buggy.probe_count(&vp.weak_labels);
    let infect_count = run.buggy.check_count(&vp.strong_labels);
    let oracle_pass = run.buggy.output == run.fixed.output;
    Ok(ClassificationRecord {
        version: vp.id.clone(),
        test: test.to_string(),
        label: RipLabel::from_evidence(oracle_pass, reach_count, infect_count),
        reach_count,
        infect_count,
        oracle_pass,
        in_tbug: run.buggy.calls(&vp.defect_fn),
    })
}

pub fn classify_test(vp: &VersionPair, test: &TestCase, interp: &Interpreter) -> Result<ClassificationRecord, SubjectError> {
    classify_run(vp, &test.name, &run_pair(vp, test, interp))
}

/// Records in suite order; erroring tests are set aside.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassificationTable {
    pub version: String,
    pub records: Vec<ClassificationRecord>,
    pub errors: Vec<SubjectError>,
}

impl ClassificationTable {
    pub fn from_runs(vp: &VersionPair, suite: &TestSuite, runs: &[TestRun]) -> Self {
        let mut table = ClassificationTable { version: vp.id.clone(), ..Default::default() };
        for (test, run) in suite.tests.iter().zip(runs) {
            match classify_run(vp, &test.name, run) {
                Ok(r) => table.records.push(r),
                Err(e) => table.errors.push(e),
            }
        }
        table
    }

    pub fn record(&self, test: &str) -> Option<&ClassificationRecord> {
        self.records.iter().find(|r| r.test == test)
    }

    pub fn count(&self, label: RipLabel) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

pub fn classify_suite(vp: &VersionPair, suite: &TestSuite, interp: &Interpreter) -> ClassificationTable {
    let runs: Vec<TestRun> = suite.tests.iter().map(|t| run_pair(vp, t, interp)).collect();
    ClassificationTable::from_runs(vp, suite, &runs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PrevalenceCounts {
    pub fail: u64,
    pub strong_cc: u64,
    pub weak_cc: u64,
    pub true_pass_tbug: u64,
    pub true_pass: u64,
    /// Tests that entered the defective function.
    pub t_bug: u64,
    /// All classified tests.
    pub t: u64,
}

impl PrevalenceCounts {
    pub fn add(&mut self, r: &ClassificationRecord) {
        match r.label {
            RipLabel::Failing => self.fail += 1,
            RipLabel::StrongCC => self.strong_cc += 1,
            RipLabel::WeakCC => self.weak_cc += 1,
            RipLabel::TruePassing => {
                self.true_pass += 1;
                if r.in_tbug {
                    self.true_pass_tbug += 1;
                }
            }
        }
        if r.in_tbug {
            self.t_bug += 1;
        }
        self.t += 1;
    }
}

fn ratio(n: u64, d: u64) -> Option<Ratio<u64>> {
    (d != 0).then(|| Ratio::new(n, d))
}

/// Combined counts and the six prevalence ratios; `None` marks a zero denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrevalenceSummary {
    pub counts: PrevalenceCounts,
    pub strong_over_fail: Option<Ratio<u64>>,
    pub weak_over_fail: Option<Ratio<u64>>,
    pub strong_over_tbug: Option<Ratio<u64>>,
    pub weak_over_tbug: Option<Ratio<u64>>,
    pub strong_over_t: Option<Ratio<u64>>,
    pub weak_over_t: Option<Ratio<u64>>,
}

impl PrevalenceSummary {
    pub fn from_counts(c: PrevalenceCounts) -> Self {
        PrevalenceSummary {
            counts: c,
            strong_over_fail: ratio(c.strong_cc, c.fail),
            weak_over_fail: ratio(c.weak_cc, c.fail),
            strong_over_tbug: ratio(c.strong_cc, c.t_bug),
            weak_over_tbug: ratio(c.weak_cc, c.t_bug),
            strong_over_t: ratio(c.strong_cc, c.t),
            weak_over_t: ratio(c.weak_cc, c.t),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "counts": self.counts,
            "ratios": {
                "strong_over_fail": ratio_json(&self.strong_over_fail),
                "weak_over_fail": ratio_json(&self.weak_over_fail),
                "strong_over_tbug": ratio_json(&self.strong_over_tbug),
                "weak_over_tbug": ratio_json(&self.weak_over_tbug),
                "strong_over_t": ratio_json(&self.strong_over_t),
                "weak_over_t": ratio_json(&self.weak_over_t),
            }
        })
    }
}

pub fn summarize<'a>(tables: impl IntoIterator<Item = &'a ClassificationTable>) -> PrevalenceSummary {
    let mut c = PrevalenceCounts::default();
    for t in tables {
        for r in &t.records {
            c.add(r);
        }
    }
    PrevalenceSummary::from_counts(c)
}
