//! Statement-kind counters over the execution suffix that follows the first infection.

use std::collections::{BTreeMap, BTreeSet};

use crate::minilang::{EventKind, StatementKind, StmtId, Trace};
use crate::rip::RipLabel;
use crate::stats::{boxplot_stats, BoxStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileKind {
    All,
    Stmt(StatementKind),
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 6] = [
        ProfileKind::All,
        ProfileKind::Stmt(StatementKind::Conditional),
        ProfileKind::Stmt(StatementKind::Modulo),
        ProfileKind::Stmt(StatementKind::Multiplication),
        ProfileKind::Stmt(StatementKind::Division),
        ProfileKind::Stmt(StatementKind::Invocation),
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::All => "All",
            ProfileKind::Stmt(k) => k.name(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counter {
    /// Distinct statements executed.
    pub unique: u64,
    /// Statement executions.
    pub total: u64,
}

/// Counters indexed like [`ProfileKind::ALL`].
pub type Counters = [Counter; 6];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationProfile {
    pub version: String,
    pub test: String,
    pub label: RipLabel,
    pub counters: Counters,
}

impl PropagationProfile {
    pub fn get(&self, kind: ProfileKind) -> Counter {
        self.counters[ProfileKind::ALL.iter().position(|k| *k == kind).expect("known kind")]
    }
}

/// Counts `StmtExec` events whose seq is strictly greater than `start_seq`.
pub fn count_after(trace: &Trace, start_seq: u64) -> Counters {
    let mut seen: [BTreeSet<StmtId>; 6] = Default::default();
    let mut counters = Counters::default();
    for e in trace.events.iter().filter(|e| e.seq > start_seq) {
        let EventKind::StmtExec { stmt, kinds } = &e.kind else { continue };
        for (i, kind) in ProfileKind::ALL.iter().enumerate() {
            let hit = match kind {
                ProfileKind::All => true,
                ProfileKind::Stmt(k) => kinds.contains(*k),
            };
            if hit {
                counters[i].total += 1;
                seen[i].insert(*stmt);
            }
        }
    }
    for (c, s) in counters.iter_mut().zip(&seen) {
        c.unique = s.len() as u64;
    }
    counters
}

/// Seq of the first `CheckFired`, if the run was ever infected.
pub fn first_infection(trace: &Trace) -> Option<u64> {
    trace.events.iter().find(|e| matches!(e.kind, EventKind::CheckFired { .. })).map(|e| e.seq)
}

/// Counters from the first infection to the end of the trace.
pub fn profile(trace: &Trace) -> Option<Counters> {
    first_infection(trace).map(|seq| count_after(trace, seq))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CounterKind {
    Unique,
    Total,
}

impl CounterKind {
    pub fn name(self) -> &'static str {
        match self {
            CounterKind::Unique => "unique",
            CounterKind::Total => "total",
        }
    }

    fn of(self, c: Counter) -> u64 {
        match self {
            CounterKind::Unique => c.unique,
            CounterKind::Total => c.total,
        }
    }
}

/// Box statistics per (label, kind, counter). A label without profiles maps
/// every cell to `None`.
pub fn aggregate(
    profiles: &[PropagationProfile],
) -> BTreeMap<(RipLabel, ProfileKind, CounterKind), Option<BoxStats>> {
    let mut out = BTreeMap::new();
    for label in [RipLabel::Failing, RipLabel::StrongCC] {
        let group: Vec<&PropagationProfile> = profiles.iter().filter(|p| p.label == label).collect();
        for (i, kind) in ProfileKind::ALL.iter().enumerate() {
            for counter in [CounterKind::Unique, CounterKind::Total] {
                let samples: Vec<f64> = group.iter().map(|p| counter.of(p.counters[i]) as f64).collect();
                out.insert((label, *kind, counter), boxplot_stats(&samples));
            }
        }
    }
    out
}
