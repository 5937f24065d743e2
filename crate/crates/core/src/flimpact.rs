//! Coverage-based fault localization, greedy suite reduction and
//! additional-greedy prioritization, with and without CC tests.

use std::collections::{BTreeSet, HashSet};

use crate::corpus::{TestRun, TestSuite, VersionPair};
use crate::minilang::{EventKind, StmtId, Trace};
use crate::rip::{ClassificationTable, RipLabel};

/// Enumeration stops after this many distinct outcomes.
pub const MAX_OUTCOMES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageMatrix {
    pub stmts: Vec<StmtId>,
    pub tests: Vec<String>,
    /// `covered[s][t]`: statement `s` ran at least once in test `t`.
    pub covered: Vec<Vec<bool>>,
    pub passed: Vec<bool>,
}

impl CoverageMatrix {
    /// Builds a matrix from buggy-run traces and per-test verdicts.
    pub fn from_traces<'a>(stmts: Vec<StmtId>, runs: impl IntoIterator<Item = (&'a str, &'a Trace, bool)>) -> Self {
        let mut tests = Vec::new();
        let mut columns = Vec::new();
        let mut passed = Vec::new();
        for (name, trace, pass) in runs {
            let hit: HashSet<StmtId> = trace
                .events
                .iter()
                .filter_map(|e| match &e.kind {
                    EventKind::StmtExec { stmt, .. } if !stmt.is_checker() => Some(*stmt),
                    _ => None,
                })
                .collect();
            columns.push(stmts.iter().map(|s| hit.contains(s)).collect::<Vec<bool>>());
            tests.push(name.to_string());
            passed.push(pass);
        }
        let covered = (0..stmts.len()).map(|s| columns.iter().map(|c| c[s]).collect()).collect();
        CoverageMatrix { stmts, tests, covered, passed }
    }

    /// Matrix restricted to the tests for which `keep` holds.
    pub fn retain_tests(&self, keep: impl Fn(&str) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.tests.len()).filter(|&t| keep(&self.tests[t])).collect();
        CoverageMatrix {
            stmts: self.stmts.clone(),
            tests: idx.iter().map(|&t| self.tests[t].clone()).collect(),
            covered: self.covered.iter().map(|row| idx.iter().map(|&t| row[t]).collect()).collect(),
            passed: idx.iter().map(|&t| self.passed[t]).collect(),
        }
    }

    pub fn test_index(&self, name: &str) -> Option<usize> {
        self.tests.iter().position(|t| t == name)
    }

    pub fn stmt_index(&self, id: StmtId) -> Option<usize> {
        self.stmts.iter().position(|s| *s == id)
    }

    /// Statements covered by test `t`.
    pub fn coverage_of(&self, t: usize) -> BTreeSet<usize> {
        (0..self.stmts.len()).filter(|&s| self.covered[s][t]).collect()
    }

    /// Statements covered by at least one test.
    pub fn covered_by_suite(&self) -> BTreeSet<usize> {
        (0..self.stmts.len()).filter(|&s| self.covered[s].iter().any(|&c| c)).collect()
    }
}

/// Coverage of a version's classified tests. Erroring tests are left out.
pub fn coverage_matrix(vp: &VersionPair, suite: &TestSuite, runs: &[TestRun], table: &ClassificationTable) -> CoverageMatrix {
    let stmts: Vec<StmtId> = vp.buggy.subject_statements().iter().map(|s| s.id).collect();
    let mut cols: Vec<(&str, &Trace, bool)> = suite
        .tests
        .iter()
        .zip(runs)
        .filter_map(|(t, run)| table.record(&t.name).map(|r| (t.name.as_str(), &run.buggy, r.oracle_pass)))
        .collect();
    cols.sort_by(|a, b| a.0.cmp(b.0));
    CoverageMatrix::from_traces(stmts, cols)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Tarantula,
    Jaccard,
    Ochiai,
    Ample,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Tarantula, Metric::Jaccard, Metric::Ochiai, Metric::Ample];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Tarantula => "tarantula",
            Metric::Jaccard => "jaccard",
            Metric::Ochiai => "ochiai",
            Metric::Ample => "ample",
        }
    }

    /// Score from failing/passing covering counts and suite totals. Any ratio
    /// with a zero denominator counts as 0.
    pub fn score(self, f: u64, p: u64, total_f: u64, total_p: u64) -> f64 {
        let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
        let (f, p, tf, tp) = (f as f64, p as f64, total_f as f64, total_p as f64);
        match self {
            Metric::Tarantula => {
                let (fr, pr) = (div(f, tf), div(p, tp));
                div(fr, fr + pr)
            }
            Metric::Jaccard => div(f, tf + p),
            Metric::Ochiai => div(f, (tf * (f + p)).sqrt()),
            Metric::Ample => (div(f, tf) - div(p, tp)).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuspiciousnessReport {
    pub metric: Metric,
    pub scores: Vec<f64>,
    /// The suite had no failing test; every score is 0.
    pub no_failures: bool,
}

impl SuspiciousnessReport {
    /// Worst-case rank: statements scoring at least as high, this one included.
    pub fn rank(&self, s: usize) -> usize {
        self.scores.iter().filter(|&&x| x >= self.scores[s]).count()
    }
}

pub fn suspiciousness(m: &CoverageMatrix, metric: Metric) -> SuspiciousnessReport {
    let total_f = m.passed.iter().filter(|&&p| !p).count() as u64;
    let total_p = m.passed.len() as u64 - total_f;
    let scores = m
        .covered
        .iter()
        .map(|row| {
            let (mut f, mut p) = (0, 0);
            for (t, &c) in row.iter().enumerate() {
                if c {
                    if m.passed[t] {
                        p += 1;
                    } else {
                        f += 1;
                    }
                }
            }
            metric.score(f, p, total_f, total_p)
        })
        .collect();
    SuspiciousnessReport { metric, scores, no_failures: total_f == 0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    Lexical,
    EnumerateAll,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcomes<T> {
    pub outcomes: Vec<T>,
    pub truncated: bool,
}

/// Tests with the largest number of still-uncovered statements; empty once nothing is gained.
fn best_candidates(m: &CoverageMatrix, cover: &[BTreeSet<usize>], chosen: &[bool], left: &BTreeSet<usize>) -> Vec<usize> {
    let gains: Vec<(usize, usize)> = (0..m.tests.len())
        .filter(|&t| !chosen[t])
        .map(|t| (t, cover[t].intersection(left).count()))
        .collect();
    let best = gains.iter().map(|g| g.1).max().unwrap_or(0);
    if best == 0 {
        return Vec::new();
    }
    let mut ts: Vec<usize> = gains.into_iter().filter(|g| g.1 == best).map(|g| g.0).collect();
    ts.sort_by(|a, b| m.tests[*a].cmp(&m.tests[*b]));
    ts
}

/// Removes tests whose coverage the rest of the selection already provides,
/// trying the highest test name first.
fn drop_redundant(m: &CoverageMatrix, cover: &[BTreeSet<usize>], chosen: &[bool]) -> BTreeSet<usize> {
    let mut keep: BTreeSet<usize> = (0..m.tests.len()).filter(|&t| chosen[t]).collect();
    let mut by_name: Vec<usize> = keep.iter().copied().collect();
    by_name.sort_by(|a, b| m.tests[*b].cmp(&m.tests[*a]));
    for t in by_name {
        let others: BTreeSet<usize> = keep.iter().filter(|&&u| u != t).flat_map(|&u| cover[u].iter().copied()).collect();
        if cover[t].is_subset(&others) {
            keep.remove(&t);
        }
    }
    keep
}

/// Greedy set cover over the statements the whole suite covers, followed by
/// removal of tests made redundant by later picks.
///
/// Lexical mode breaks ties by test name. Enumerate mode follows every tied
/// choice and returns each distinct resulting suite, sorted.
pub fn greedy_reduce(m: &CoverageMatrix, tie_break: TieBreak) -> Outcomes<BTreeSet<String>> {
    let cover: Vec<BTreeSet<usize>> = (0..m.tests.len()).map(|t| m.coverage_of(t)).collect();
    let mut found: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    let mut visited: HashSet<Vec<bool>> = HashSet::new();
    let mut truncated = false;
    // explicit DFS over chosen sets; the chosen set fully determines the state
    let mut stack = vec![vec![false; m.tests.len()]];
    while let Some(chosen) = stack.pop() {
        if !visited.insert(chosen.clone()) {
            continue;
        }
        let mut left = m.covered_by_suite();
        for (t, _) in chosen.iter().enumerate().filter(|c| *c.1) {
            for s in &cover[t] {
                left.remove(s);
            }
        }
        let cands = best_candidates(m, &cover, &chosen, &left);
        if cands.is_empty() {
            found.insert(drop_redundant(m, &cover, &chosen));
            if found.len() >= MAX_OUTCOMES {
                truncated = !stack.is_empty();
                break;
            }
            continue;
        }
        let branch: &[usize] = match tie_break {
            TieBreak::Lexical => &cands[..1],
            TieBreak::EnumerateAll => &cands,
        };
        for &t in branch.iter().rev() {
            let mut next = chosen.clone();
            next[t] = true;
            stack.push(next);
        }
    }
    let outcomes = found
        .into_iter()
        .map(|set| set.into_iter().map(|t| m.tests[t].clone()).collect())
        .collect::<BTreeSet<BTreeSet<String>>>()
        .into_iter()
        .collect();
    Outcomes { outcomes, truncated }
}

/// Additional-greedy orderings. Once nothing new can be covered, the
/// remaining tests follow in name order.
pub fn prioritize(m: &CoverageMatrix, tie_break: TieBreak) -> Outcomes<Vec<String>> {
    let cover: Vec<BTreeSet<usize>> = (0..m.tests.len()).map(|t| m.coverage_of(t)).collect();
    let mut lexical: Vec<usize> = (0..m.tests.len()).collect();
    lexical.sort_by(|a, b| m.tests[*a].cmp(&m.tests[*b]));
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut truncated = false;

    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(order) = stack.pop() {
        if out.len() >= MAX_OUTCOMES {
            truncated = true;
            break;
        }
        let mut chosen = vec![false; m.tests.len()];
        let mut left = m.covered_by_suite();
        for &t in &order {
            chosen[t] = true;
            for s in &cover[t] {
                left.remove(s);
            }
        }
        let cands = best_candidates(m, &cover, &chosen, &left);
        if cands.is_empty() {
            let mut full = order.clone();
            full.extend(lexical.iter().copied().filter(|&t| !chosen[t]));
            out.push(full.into_iter().map(|t| m.tests[t].clone()).collect());
            continue;
        }
        let branch: &[usize] = match tie_break {
            TieBreak::Lexical => &cands[..1],
            TieBreak::EnumerateAll => &cands,
        };
        for &t in branch.iter().rev() {
            let mut next = order.clone();
            next.push(t);
            stack.push(next);
        }
    }
    // DFS pops in lexical branch order; sort anyway so the listing is canonical
    out.sort();
    out.dedup();
    Outcomes { outcomes: out, truncated }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Full,
    NoWeakCC,
    NoCC,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoWeakCC, Variant::NoCC];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoWeakCC => "no_weak_cc",
            Variant::NoCC => "no_cc",
        }
    }

    pub fn keeps(self, label: RipLabel) -> bool {
        match self {
            Variant::Full => true,
            Variant::NoWeakCC => label != RipLabel::WeakCC,
            Variant::NoCC => !label.is_cc(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantImpact {
    pub variant: Variant,
    pub matrix: CoverageMatrix,
    pub reports: Vec<SuspiciousnessReport>,
    /// Worst-case rank of each defect statement, per metric in `Metric::ALL` order.
    pub defect_ranks: Vec<Vec<(StmtId, usize)>>,
    pub reduction: Outcomes<BTreeSet<String>>,
    pub prioritization: Outcomes<Vec<String>>,
}

impl VariantImpact {
    /// 1-based position of the first failing test in an ordering.
    pub fn first_failure(&self, order: &[String]) -> Option<usize> {
        order
            .iter()
            .position(|name| self.matrix.test_index(name).is_some_and(|t| !self.matrix.passed[t]))
            .map(|p| p + 1)
    }
}

/// Fault-localization, reduction and prioritization results for the three
/// suite variants of one version.
pub fn cc_impact_report(vp: &VersionPair, matrix: &CoverageMatrix, table: &ClassificationTable) -> Vec<VariantImpact> {
    Variant::ALL
        .iter()
        .map(|&variant| {
            let m = matrix.retain_tests(|name| table.record(name).is_some_and(|r| variant.keeps(r.label)));
            let reports: Vec<SuspiciousnessReport> = Metric::ALL.iter().map(|&mt| suspiciousness(&m, mt)).collect();
            let defect_ranks = reports
                .iter()
                .map(|r| {
                    vp.defect_sites
                        .iter()
                        .filter_map(|id| m.stmt_index(*id).map(|s| (*id, r.rank(s))))
                        .collect()
                })
                .collect();
            VariantImpact {
                variant,
                reduction: greedy_reduce(&m, TieBreak::EnumerateAll),
                prioritization: prioritize(&m, TieBreak::EnumerateAll),
                matrix: m,
                reports,
                defect_ranks,
            }
        })
        .collect()
}
