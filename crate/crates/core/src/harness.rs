//! Batch driver: runs every test of every version once, then derives all
//! reports from the recorded traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::corpus::{run_pair, Corpus, CorpusError, CorpusVersion, TestRun, ValidationReport};
use crate::flimpact::{self, Metric, VariantImpact};
use crate::infoloss;
use crate::levels::{self, LevelMode, LevelRecord, Scale};
use crate::minilang::Interpreter;
use crate::propagation::{self, ProfileKind, PropagationProfile};
use crate::report::{fmt_f64, fmt_opt_ratio, fmt_ratio, write_csv, write_json};
use crate::rip::{self, ClassificationTable, RipLabel};
use crate::state::{self, NullificationRecord, NullificationSummary};
use crate::stats::BoxStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analysis {
    Classify,
    Levels,
    Propagate,
    Nullify,
    Impact,
    Drr,
    Stats,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Classify,
        Analysis::Levels,
        Analysis::Propagate,
        Analysis::Nullify,
        Analysis::Impact,
        Analysis::Drr,
        Analysis::Stats,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Classify => "classify",
            Analysis::Levels => "levels",
            Analysis::Propagate => "propagate",
            Analysis::Nullify => "nullify",
            Analysis::Impact => "impact",
            Analysis::Drr => "drr",
            Analysis::Stats => "stats",
        }
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Analysis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown analysis `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub analyses: BTreeSet<Analysis>,
    pub bins: usize,
    pub scale: Scale,
    pub budget: u64,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus: corpus.into(),
            out: out.into(),
            analyses: Analysis::ALL.into_iter().collect(),
            bins: 10,
            scale: Scale::Linear,
            budget: crate::minilang::DEFAULT_STEP_BUDGET,
            jobs: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("writing reports: {0}")]
    Io(#[from] io::Error),
}

/// A row of `diagnostics.csv`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub version: String,
    pub test: String,
    pub kind: &'static str,
    pub detail: String,
}

impl Diagnostic {
    fn new(version: &str, test: &str, kind: &'static str, detail: impl Into<String>) -> Self {
        Diagnostic { version: version.into(), test: test.into(), kind, detail: detail.into() }
    }
}

/// Everything recorded for one version: its runs in suite order and what
/// follows directly from them.
pub struct VersionResult<'c> {
    pub version: &'c CorpusVersion,
    pub runs: Vec<TestRun>,
    pub table: ClassificationTable,
    pub validation: ValidationReport,
}

impl VersionResult<'_> {
    fn test_runs(&self) -> impl Iterator<Item = (&str, &TestRun)> {
        self.version.suite.tests.iter().map(|t| t.name.as_str()).zip(&self.runs)
    }

    fn run_of(&self, test: &str) -> Option<&TestRun> {
        self.test_runs().find(|(n, _)| *n == test).map(|(_, r)| r)
    }
}

/// Runs every (version, test) pair on a pool of `jobs` workers.
pub fn execute<'c>(corpus: &'c Corpus, interp: &Interpreter, jobs: usize) -> Result<Vec<VersionResult<'c>>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let items: Vec<(usize, usize)> = corpus
        .versions
        .iter()
        .enumerate()
        .flat_map(|(v, cv)| (0..cv.suite.tests.len()).map(move |t| (v, t)))
        .collect();
    // collect keeps input order, so results never depend on scheduling
    let mut runs: Vec<TestRun> = pool.install(|| {
        items
            .par_iter()
            .map(|&(v, t)| {
                let cv = &corpus.versions[v];
                run_pair(&cv.pair, &cv.suite.tests[t], interp)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(corpus.versions.len());
    for cv in corpus.versions.iter().rev() {
        let rest = runs.split_off(runs.len() - cv.suite.tests.len());
        out.push(rest);
    }
    out.reverse();
    Ok(corpus
        .versions
        .iter()
        .zip(out)
        .map(|(cv, runs)| VersionResult {
            table: ClassificationTable::from_runs(&cv.pair, &cv.suite, &runs),
            validation: ValidationReport::from_runs(&cv.pair, &cv.suite, &runs),
            version: cv,
            runs,
        })
        .collect())
}

/// Per-group analog of a suite-size table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupStats {
    pub group: String,
    pub versions: usize,
    pub t_min: u64,
    pub t_max: u64,
    pub t_sum: u64,
    pub tbug_min: u64,
    pub tbug_max: u64,
    pub tbug_sum: u64,
}

impl GroupStats {
    pub fn t_avg(&self) -> Ratio<u64> {
        Ratio::new(self.t_sum, self.versions as u64)
    }

    pub fn tbug_avg(&self) -> Ratio<u64> {
        Ratio::new(self.tbug_sum, self.versions as u64)
    }
}

/// Suite sizes |T(v)| and |T_bug(v)| per group, given (group, |T|, |T_bug|) per version.
pub fn corpus_stats(per_version: impl IntoIterator<Item = (String, u64, u64)>) -> Vec<GroupStats> {
    let mut groups: BTreeMap<String, GroupStats> = BTreeMap::new();
    for (group, t, tbug) in per_version {
        let g = groups.entry(group.clone()).or_insert(GroupStats {
            group,
            versions: 0,
            t_min: u64::MAX,
            t_max: 0,
            t_sum: 0,
            tbug_min: u64::MAX,
            tbug_max: 0,
            tbug_sum: 0,
        });
        g.versions += 1;
        g.t_min = g.t_min.min(t);
        g.t_max = g.t_max.max(t);
        g.t_sum += t;
        g.tbug_min = g.tbug_min.min(tbug);
        g.tbug_max = g.tbug_max.max(tbug);
        g.tbug_sum += tbug;
    }
    groups.into_values().collect()
}

/// Counts of tests in the whole suite and those entering the defective function.
/// Erroring runs still count: the call may happen before the error.
pub fn suite_sizes(r: &VersionResult) -> (u64, u64) {
    let tbug = r.runs.iter().filter(|run| run.buggy.calls(&r.version.pair.defect_fn)).count();
    (r.runs.len() as u64, tbug as u64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub exit_code: i32,
    pub diagnostics: Vec<Diagnostic>,
}

fn b(x: bool) -> String {
    x.to_string()
}

fn box_fields(s: Option<&BoxStats>) -> Vec<String> {
    match s {
        Some(s) => vec![
            s.n.to_string(),
            fmt_f64(s.min),
            fmt_f64(s.q1),
            fmt_f64(s.median),
            fmt_f64(s.q3),
            fmt_f64(s.max),
            fmt_f64(s.whisker_low),
            fmt_f64(s.whisker_high),
            s.outliers.len().to_string(),
        ],
        None => {
            let mut v = vec!["0".to_string()];
            v.extend(std::iter::repeat_n(String::new(), 7));
            v.push("0".into());
            v
        }
    }
}

const BOX_HEADER: [&str; 9] = ["n", "min", "q1", "median", "q3", "max", "whisker_low", "whisker_high", "outlier_count"];

fn with_box_header<'a>(prefix: &[&'a str]) -> Vec<&'a str> {
    prefix.iter().copied().chain(BOX_HEADER).collect()
}

/// Loads the corpus, runs it, and writes the requested reports.
pub fn run_corpus(cfg: &RunConfig) -> Result<RunSummary, HarnessError> {
    if cfg.bins == 0 {
        return Err(HarnessError::Config("--bins must be at least 1".into()));
    }
    if cfg.budget == 0 {
        return Err(HarnessError::Config("--budget must be at least 1".into()));
    }
    let corpus = Corpus::load(&cfg.corpus)?;
    let interp = Interpreter::with_budget(cfg.budget);
    let results = execute(&corpus, &interp, cfg.jobs)?;
    std::fs::create_dir_all(&cfg.out)?;

    let mut diags = Vec::new();
    let mut corpus_problem = false;
    let mut subject_problem = false;
    for r in &results {
        let id = &r.version.pair.id;
        for e in &r.table.errors {
            subject_problem = true;
            diags.push(Diagnostic::new(id, &e.case, "subject_error", format!("{} run: {}", e.side, e.error)));
        }
        for t in &r.validation.expected_mismatches {
            corpus_problem = true;
            diags.push(Diagnostic::new(id, t, "expected_output_mismatch", "fixed output differs from expected_output"));
        }
        if !r.validation.observable {
            corpus_problem = true;
            diags.push(Diagnostic::new(id, "", "unobservable_defect", "no test distinguishes buggy from fixed"));
        }
        for rec in &r.table.records {
            if rec.failing_without_reach() {
                diags.push(Diagnostic::new(id, &rec.test, "failing_without_reach", "oracle failed but the weak checker never fired"));
            }
            if rec.infect_without_reach() {
                diags.push(Diagnostic::new(id, &rec.test, "infect_without_reach", "strong checker fired without the weak checker"));
            }
        }
    }

    let out = cfg.out.as_path();
    let wants = |a| cfg.analyses.contains(&a);
    if wants(Analysis::Classify) {
        write_classification(out, &results)?;
    }
    if wants(Analysis::Levels) {
        write_levels(out, &results, cfg, &mut diags)?;
    }
    if wants(Analysis::Propagate) {
        write_propagation(out, &results, &mut diags)?;
    }
    if wants(Analysis::Nullify) {
        write_nullification(out, &results, &mut diags)?;
    }
    if wants(Analysis::Impact) {
        write_impact(out, &results, &mut diags)?;
    }
    if wants(Analysis::Drr) && write_drr(out, &corpus, &interp, &mut diags)? {
        subject_problem = true;
    }
    if wants(Analysis::Stats) {
        write_stats(out, &results)?;
    }

    diags.sort();
    diags.dedup();
    write_csv(
        &out.join("diagnostics.csv"),
        &["version", "test", "kind", "detail"],
        diags.iter().map(|d| vec![d.version.clone(), d.test.clone(), d.kind.to_string(), d.detail.clone()]),
    )?;
    let exit_code = if corpus_problem {
        1
    } else if subject_problem {
        2
    } else {
        0
    };
    Ok(RunSummary { exit_code, diagnostics: diags })
}

fn sorted_records<'a>(results: &'a [VersionResult]) -> Vec<&'a rip::ClassificationRecord> {
    let mut recs: Vec<&rip::ClassificationRecord> = results.iter().flat_map(|r| &r.table.records).collect();
    recs.sort_by(|a, b| (&a.version, &a.test).cmp(&(&b.version, &b.test)));
    recs
}

fn write_classification(out: &Path, results: &[VersionResult]) -> io::Result<()> {
    write_csv(
        &out.join("classification.csv"),
        &["version", "test", "label", "reach_count", "infect_count", "oracle_pass", "in_tbug"],
        sorted_records(results).into_iter().map(|r| {
            vec![
                r.version.clone(),
                r.test.clone(),
                r.label.to_string(),
                r.reach_count.to_string(),
                r.infect_count.to_string(),
                b(r.oracle_pass),
                b(r.in_tbug),
            ]
        }),
    )?;
    let summary = rip::summarize(results.iter().map(|r| &r.table));
    write_json(&out.join("prevalence.json"), &summary.to_json())
}

fn level_records(results: &[VersionResult]) -> Vec<(String, LevelRecord)> {
    let mut out: Vec<(String, LevelRecord)> = results
        .iter()
        .flat_map(|r| {
            r.table.records.iter().filter_map(move |rec| {
                r.run_of(&rec.test)
                    .map(|run| (r.version.group.clone(), levels::level_of(&rec.version, &rec.test, &run.buggy)))
            })
        })
        .collect();
    out.sort_by(|a, b| (&a.1.version, &a.1.test).cmp(&(&b.1.version, &b.1.test)));
    out
}

fn write_levels(out: &Path, results: &[VersionResult], cfg: &RunConfig, diags: &mut Vec<Diagnostic>) -> io::Result<()> {
    let grouped = level_records(results);
    let records: Vec<LevelRecord> = grouped.iter().map(|(_, r)| r.clone()).collect();
    write_csv(
        &out.join("levels.csv"),
        &["version", "test", "level_count", "level_freq"],
        records
            .iter()
            .map(|r| vec![r.version.clone(), r.test.clone(), r.level_count.to_string(), r.level_freq.to_string()]),
    )?;

    let table: Vec<rip::ClassificationRecord> = results.iter().flat_map(|r| r.table.records.iter().cloned()).collect();
    let mut rows = Vec::new();
    for mode in LevelMode::ALL {
        match levels::bin_and_rate(&records, &table, mode, cfg.scale, cfg.bins) {
            Ok(bins) => {
                if bins.degenerate {
                    diags.push(Diagnostic::new("", "", "degenerate_range", format!("all {} levels are equal", mode.as_str())));
                }
                for bin in &bins.bins {
                    rows.push(vec![
                        mode.as_str().to_string(),
                        cfg.scale.to_string(),
                        bin.index.to_string(),
                        fmt_f64(bin.lo),
                        fmt_f64(bin.hi),
                        bin.fail.to_string(),
                        bin.strong.to_string(),
                        bin.weak.to_string(),
                        fmt_opt_ratio(&bin.strong_over_fail()),
                        fmt_opt_ratio(&bin.weak_over_fail()),
                        fmt_opt_ratio(&bin.cc_over_fail()),
                    ]);
                }
            }
            Err(e) => diags.push(Diagnostic::new("", "", "level_bins", e.to_string())),
        }
    }
    write_csv(
        &out.join("level_bins.csv"),
        &[
            "mode", "scale", "bin_index", "lo", "hi", "fail", "strong", "weak", "strong_over_fail", "weak_over_fail",
            "cc_over_fail",
        ],
        rows,
    )?;

    let mut box_rows = Vec::new();
    for mode in LevelMode::ALL {
        let dist = levels::level_distribution(grouped.iter().map(|(g, r)| (g.clone(), r)), mode);
        for (group, stats) in dist {
            let mut row = vec![group, mode.as_str().to_string()];
            row.extend(box_fields(Some(&stats)));
            box_rows.push(row);
        }
    }
    box_rows.sort();
    write_csv(&out.join("level_box.csv"), &with_box_header(&["group", "mode"]), box_rows)
}

/// Profiles of every Failing and StrongCC test.
pub fn profiles(results: &[VersionResult], diags: &mut Vec<Diagnostic>) -> Vec<PropagationProfile> {
    let mut out = Vec::new();
    for r in results {
        for rec in &r.table.records {
            if !matches!(rec.label, RipLabel::Failing | RipLabel::StrongCC) {
                continue;
            }
            let Some(run) = r.run_of(&rec.test) else { continue };
            match propagation::profile(&run.buggy) {
                Some(counters) => out.push(PropagationProfile {
                    version: rec.version.clone(),
                    test: rec.test.clone(),
                    label: rec.label,
                    counters,
                }),
                None if r.version.pair.has_strong_checker() => diags.push(Diagnostic::new(
                    &rec.version,
                    &rec.test,
                    "checker_siting",
                    "failing test without a strong-checker infection",
                )),
                None => {}
            }
        }
    }
    out.sort_by(|a, b| (&a.version, &a.test).cmp(&(&b.version, &b.test)));
    out
}

fn write_propagation(out: &Path, results: &[VersionResult], diags: &mut Vec<Diagnostic>) -> io::Result<()> {
    let profiles = profiles(results, diags);
    write_csv(
        &out.join("propagation.csv"),
        &["version", "test", "label", "kind", "unique", "total"],
        profiles.iter().flat_map(|p| {
            ProfileKind::ALL.iter().zip(p.counters).map(move |(k, c)| {
                vec![
                    p.version.clone(),
                    p.test.clone(),
                    p.label.to_string(),
                    k.name().to_string(),
                    c.unique.to_string(),
                    c.total.to_string(),
                ]
            })
        }),
    )?;
    let agg = propagation::aggregate(&profiles);
    for label in [RipLabel::Failing, RipLabel::StrongCC] {
        if !profiles.iter().any(|p| p.label == label) {
            diags.push(Diagnostic::new("", "", "empty_group", format!("no {label} profiles")));
        }
    }
    // rows follow (label, kind, counter) in declaration order, as the map does
    write_csv(
        &out.join("propagation_box.csv"),
        &with_box_header(&["label", "kind", "counter"]),
        agg.iter().map(|((label, kind, counter), stats)| {
            let mut row = vec![label.to_string(), kind.name().to_string(), counter.name().to_string()];
            row.extend(box_fields(stats.as_ref()));
            row
        }),
    )
}

/// Nullification records and one summary row per version.
pub fn nullification(
    results: &[VersionResult],
    diags: &mut Vec<Diagnostic>,
) -> (Vec<NullificationRecord>, Vec<NullificationSummary>) {
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for r in results {
        let vp = &r.version.pair;
        let strong: Vec<&rip::ClassificationRecord> =
            r.table.records.iter().filter(|rec| rec.label == RipLabel::StrongCC).collect();
        let mut mine = Vec::new();
        for rec in &strong {
            let Some(run) = r.run_of(&rec.test) else { continue };
            match state::nullify_run(vp, &rec.test, run) {
                Ok(n) => {
                    if n.category == state::Category::Misaligned {
                        diags.push(Diagnostic::new(&vp.id, &rec.test, "misaligned", "activation counts differ"));
                    }
                    mine.push(n);
                }
                Err(e) => diags.push(Diagnostic::new(&vp.id, &rec.test, "state_capture", e.to_string())),
            }
        }
        if strong.is_empty() {
            diags.push(Diagnostic::new(&vp.id, "", "no_strong_cc", "version has no strong CC tests"));
        }
        mine.sort_by(|a, b| a.test.cmp(&b.test));
        summaries.push(state::nullification_table(&vp.id, strong.len(), &mine));
        records.extend(mine);
    }
    summaries.sort_by(|a, b| a.version.cmp(&b.version));
    records.sort_by(|a, b| (&a.version, &a.test).cmp(&(&b.version, &b.test)));
    (records, summaries)
}

fn write_nullification(out: &Path, results: &[VersionResult], diags: &mut Vec<Diagnostic>) -> io::Result<()> {
    let (records, summaries) = nullification(results, diags);
    write_csv(
        &out.join("nullification.csv"),
        &["version", "test", "N", "category"],
        records
            .iter()
            .map(|r| vec![r.version.clone(), r.test.clone(), r.n.to_string(), r.category.to_string()]),
    )?;
    write_csv(
        &out.join("nullification_summary.csv"),
        &["version", "t_cchigh", "avg_n", "in", "out", "in_out", "anomalous", "misaligned"],
        summaries.iter().map(|s| {
            vec![
                s.version.clone(),
                s.t_cchigh.to_string(),
                s.avg_n().map(|r| fmt_ratio(&r)).unwrap_or_else(|| "0.000".into()),
                s.in_.to_string(),
                s.out.to_string(),
                s.in_out.to_string(),
                s.anomalous.to_string(),
                s.misaligned.to_string(),
            ]
        }),
    )?;
    for r in &records {
        for a in &r.activations {
            let doc = serde_json::json!({
                "index": a.index,
                "checker_bug_fired": a.checker_bug_fired,
                "states_equal": a.states_equal,
                "low_label": a.low_label.as_str(),
                "buggy": a.state_buggy.to_json(),
                "fixed": a.state_fixed.to_json(),
            });
            write_json(&out.join("states").join(&r.version).join(&r.test).join(format!("{}.json", a.index)), &doc)?;
        }
    }
    Ok(())
}

/// Impact results per version, in version order.
pub fn impact<'r>(results: &'r [VersionResult]) -> Vec<(&'r VersionResult<'r>, Vec<VariantImpact>)> {
    results
        .iter()
        .map(|r| {
            let vp = &r.version.pair;
            let m = flimpact::coverage_matrix(vp, &r.version.suite, &r.runs, &r.table);
            (r, flimpact::cc_impact_report(vp, &m, &r.table))
        })
        .collect()
}

fn write_impact(out: &Path, results: &[VersionResult], diags: &mut Vec<Diagnostic>) -> io::Result<()> {
    let mut susp = Vec::new();
    let mut red = Vec::new();
    let mut pri = Vec::new();
    for (r, variants) in impact(results) {
        let vp = &r.version.pair;
        for v in &variants {
            let variant = v.variant.as_str();
            for (mi, report) in v.reports.iter().enumerate() {
                if report.no_failures && report.metric == Metric::Tarantula {
                    diags.push(Diagnostic::new(&vp.id, "", "no_failures", format!("variant {variant} has no failing test")));
                }
                for (s, id) in v.matrix.stmts.iter().enumerate() {
                    let rank = v.defect_ranks[mi].iter().find(|(d, _)| d == id).map(|(_, r)| r.to_string());
                    susp.push(vec![
                        vp.id.clone(),
                        variant.to_string(),
                        report.metric.as_str().to_string(),
                        id.to_string(),
                        fmt_f64(report.scores[s]),
                        rank.unwrap_or_default(),
                    ]);
                }
            }
            for (i, suite) in v.reduction.outcomes.iter().enumerate() {
                red.push(vec![
                    vp.id.clone(),
                    variant.to_string(),
                    (i + 1).to_string(),
                    suite.len().to_string(),
                    suite.iter().cloned().collect::<Vec<_>>().join(" "),
                    b(v.reduction.truncated),
                ]);
            }
            for (i, order) in v.prioritization.outcomes.iter().enumerate() {
                pri.push(vec![
                    vp.id.clone(),
                    variant.to_string(),
                    (i + 1).to_string(),
                    order.join(" "),
                    v.first_failure(order).map(|p| p.to_string()).unwrap_or_default(),
                    b(v.prioritization.truncated),
                ]);
            }
            if v.reduction.truncated || v.prioritization.truncated {
                diags.push(Diagnostic::new(&vp.id, "", "enumeration_truncated", format!("variant {variant}")));
            }
        }
    }
    write_csv(&out.join("suspiciousness.csv"), &["version", "variant", "metric", "stmt", "score", "defect_rank"], susp)?;
    write_csv(&out.join("reduction.csv"), &["version", "variant", "outcome", "size", "tests", "truncated"], red)?;
    write_csv(
        &out.join("prioritization.csv"),
        &["version", "variant", "outcome", "order", "first_failure", "truncated"],
        pri,
    )
}

/// Returns whether any spec failed to evaluate.
fn write_drr(out: &Path, corpus: &Corpus, interp: &Interpreter, diags: &mut Vec<Diagnostic>) -> io::Result<bool> {
    let mut rows = Vec::new();
    let mut failed = false;
    for spec in &corpus.drr_specs {
        match (infoloss::drr(spec, interp), infoloss::masking_rate(spec, interp)) {
            (Ok(d), Ok(rate)) => rows.push(vec![
                spec.name.clone(),
                d.domain_size.to_string(),
                d.range_size.to_string(),
                fmt_ratio(&d.drr),
                if spec.infected.is_empty() { String::new() } else { fmt_ratio(&rate) },
            ]),
            (Err(e), _) | (_, Err(e)) => {
                failed = true;
                diags.push(Diagnostic::new(&spec.name, &e.case, "subject_error", e.error.to_string()));
            }
        }
    }
    write_csv(&out.join("drr.csv"), &["spec", "domain_size", "range_size", "drr", "masking_rate"], rows)?;
    Ok(failed)
}

fn write_stats(out: &Path, results: &[VersionResult]) -> io::Result<()> {
    let stats = corpus_stats(results.iter().map(|r| {
        let (t, tbug) = suite_sizes(r);
        (r.version.group.clone(), t, tbug)
    }));
    write_csv(
        &out.join("corpus_stats.csv"),
        &["group", "versions", "t_min", "t_max", "t_avg", "t_sum", "tbug_min", "tbug_max", "tbug_avg", "tbug_sum"],
        stats.iter().map(|g| {
            vec![
                g.group.clone(),
                g.versions.to_string(),
                g.t_min.to_string(),
                g.t_max.to_string(),
                fmt_ratio(&g.t_avg()),
                g.t_sum.to_string(),
                g.tbug_min.to_string(),
                g.tbug_max.to_string(),
                fmt_ratio(&g.tbug_avg()),
                g.tbug_sum.to_string(),
            ]
        }),
    )?;
    write_csv(
        &out.join("validation.csv"),
        &["version", "observable", "expected_mismatches", "fixed_errors", "nonterminating"],
        results.iter().map(|r| {
            let v = &r.validation;
            vec![
                v.version.clone(),
                b(v.observable),
                v.expected_mismatches.join(" "),
                v.fixed_errors.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>().join(" "),
                v.nonterminating.join(" "),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_arithmetic() {
        let s = corpus_stats([("g".to_string(), 4, 0), ("g".to_string(), 6, 3), ("g".to_string(), 8, 5)]);
        assert_eq!(s.len(), 1);
        let g = &s[0];
        assert_eq!((g.t_min, g.t_max, g.t_sum), (4, 8, 18));
        assert_eq!(g.t_avg(), Ratio::from_integer(6));
        assert_eq!(g.tbug_min, 0);
        assert_eq!(g.tbug_avg(), Ratio::new(8, 3));
    }

    #[test]
    fn analysis_names_round_trip() {
        for a in Analysis::ALL {
            assert_eq!(a.as_str().parse::<Analysis>().unwrap(), a);
        }
        assert!("plot".parse::<Analysis>().is_err());
    }
}
