//! Coverage-derived testing levels and CC prevalence per level interval.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::minilang::{EventKind, Trace};
use crate::rip::{ClassificationRecord, RipLabel};
use crate::stats::{boxplot_stats, BoxStats};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRecord {
    pub version: String,
    pub test: String,
    /// Distinct functions invoked, the entry included.
    pub level_count: u64,
    /// Activations, the entry's included.
    pub level_freq: u64,
}

/// Levels of one buggy run. The entry activation is itself a `Call` event.
pub fn level_of(version: &str, test: &str, trace: &Trace) -> LevelRecord {
    let mut callees = BTreeSet::new();
    let mut freq = 0u64;
    for e in &trace.events {
        if let EventKind::Call { callee, .. } = &e.kind {
            callees.insert(callee.clone());
            freq += 1;
        }
    }
    LevelRecord { version: version.into(), test: test.into(), level_count: callees.len() as u64, level_freq: freq }
}

pub fn compute_levels<'a>(traces: impl IntoIterator<Item = (&'a str, &'a str, &'a Trace)>) -> Vec<LevelRecord> {
    let mut out: Vec<LevelRecord> = traces.into_iter().map(|(v, t, tr)| level_of(v, t, tr)).collect();
    out.sort_by(|a, b| (&a.version, &a.test).cmp(&(&b.version, &b.test)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LevelMode {
    Count,
    Freq,
}

impl LevelMode {
    pub const ALL: [LevelMode; 2] = [LevelMode::Count, LevelMode::Freq];

    pub fn of(self, r: &LevelRecord) -> u64 {
        match self {
            LevelMode::Count => r.level_count,
            LevelMode::Freq => r.level_freq,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LevelMode::Count => "count",
            LevelMode::Freq => "freq",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Scale {
    pub fn as_str(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }

    fn forward(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.ln(),
        }
    }

    fn inverse(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::Log => v.exp(),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            _ => Err(format!("unknown scale `{s}` (expected linear or log)")),
        }
    }
}

/// Equal-width interval of `v` within `[lo, hi]`; the last interval is closed.
pub fn bin_index(v: f64, lo: f64, hi: f64, k: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let idx = ((v - lo) * k as f64 / (hi - lo)).floor();
    (idx.max(0.0) as usize).min(k - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelBin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub fail: u64,
    pub strong: u64,
    pub weak: u64,
}

impl LevelBin {
    fn over_fail(&self, n: u64) -> Option<Ratio<u64>> {
        (self.fail != 0).then(|| Ratio::new(n, self.fail))
    }

    pub fn strong_over_fail(&self) -> Option<Ratio<u64>> {
        self.over_fail(self.strong)
    }

    pub fn weak_over_fail(&self) -> Option<Ratio<u64>> {
        self.over_fail(self.weak)
    }

    pub fn cc_over_fail(&self) -> Option<Ratio<u64>> {
        self.over_fail(self.strong + self.weak)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelBins {
    pub mode: LevelMode,
    pub scale: Scale,
    pub k: usize,
    pub boundaries: Vec<f64>,
    pub bins: Vec<LevelBin>,
    /// All levels were equal, so a single bin holds everything.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LevelError {
    #[error("no classified tests to bin")]
    Empty,
    #[error("interval count must be at least 1")]
    ZeroBins,
}

/// Bins classified tests by level and counts labels per bin.
///
/// Levels without a classification record (erroring tests) are skipped.
pub fn bin_and_rate(
    records: &[LevelRecord],
    table: &[ClassificationRecord],
    mode: LevelMode,
    scale: Scale,
    k: usize,
) -> Result<LevelBins, LevelError> {
    if k == 0 {
        return Err(LevelError::ZeroBins);
    }
    let labels: HashMap<(&str, &str), RipLabel> =
        table.iter().map(|r| ((r.version.as_str(), r.test.as_str()), r.label)).collect();
    let joined: Vec<(u64, RipLabel)> = records
        .iter()
        .filter_map(|r| labels.get(&(r.version.as_str(), r.test.as_str())).map(|&l| (mode.of(r), l)))
        .collect();
    let min = joined.iter().map(|(v, _)| *v).min().ok_or(LevelError::Empty)?;
    let max = joined.iter().map(|(v, _)| *v).max().unwrap_or(min);

    let degenerate = min == max;
    let k_eff = if degenerate { 1 } else { k };
    let (lo, hi) = (scale.forward(min as f64), scale.forward(max as f64));
    let boundaries: Vec<f64> = (0..=k_eff)
        .map(|i| match i {
            0 => min as f64,
            i if i == k_eff => max as f64,
            i => scale.inverse(lo + (hi - lo) * i as f64 / k_eff as f64),
        })
        .collect();
    let mut bins: Vec<LevelBin> = (0..k_eff)
        .map(|i| LevelBin { index: i, lo: boundaries[i], hi: boundaries[i + 1], fail: 0, strong: 0, weak: 0 })
        .collect();
    for (v, label) in joined {
        let b = &mut bins[bin_index(scale.forward(v as f64), lo, hi, k_eff)];
        match label {
            RipLabel::Failing => b.fail += 1,
            RipLabel::StrongCC => b.strong += 1,
            RipLabel::WeakCC => b.weak += 1,
            RipLabel::TruePassing => {}
        }
    }
    Ok(LevelBins { mode, scale, k, boundaries, bins, degenerate })
}

/// Box-plot statistics of one level measure per group.
pub fn level_distribution<'a, G: Ord + Clone>(
    records: impl IntoIterator<Item = (G, &'a LevelRecord)>,
    mode: LevelMode,
) -> BTreeMap<G, BoxStats> {
    let mut groups: BTreeMap<G, Vec<f64>> = BTreeMap::new();
    for (g, r) in records {
        groups.entry(g).or_default().push(mode.of(r) as f64);
    }
    groups
        .into_iter()
        .filter_map(|(g, xs)| boxplot_stats(&xs).map(|b| (g, b)))
        .collect()
}
