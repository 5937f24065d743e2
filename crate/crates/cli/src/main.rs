//! `cclab`: run the coincidental-correctness analyses over a corpus.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use cclab_core::harness::{run_corpus, Analysis, RunConfig};
use cclab_core::levels::Scale;
use cclab_core::minilang::DEFAULT_STEP_BUDGET;
use clap::{Args, Parser, Subcommand};

const BUDGET_ENV: &str = "CCLAB_BUDGET";

#[derive(Parser)]
#[command(name = "cclab", version, about = "Coincidental-correctness analyses over buggy/fixed program pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// RIP labels per test and prevalence ratios
    Classify(Common),
    /// Testing levels and CC prevalence per level interval
    Levels(Common),
    /// Post-infection propagation profiles
    Propagate(Common),
    /// Where strong-CC infections were nullified
    Nullify(Common),
    /// Effect of CC tests on fault localization, reduction and prioritization
    Impact(Common),
    /// Domain-to-range ratios and masking rates
    Drr(Common),
    /// Suite-size statistics per corpus group
    Stats(Common),
    /// Every report at once, or the subset named by --analyses
    Report {
        #[command(flatten)]
        common: Common,
        /// Comma-separated analyses, or `all`
        #[arg(long, default_value = "all")]
        analyses: String,
    },
}

#[derive(Args)]
struct Common {
    /// Corpus root holding corpus.json
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for reports
    #[arg(long)]
    out: PathBuf,
    /// Number of level intervals
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Level interval scale
    #[arg(long, default_value = "linear")]
    scale: Scale,
    /// Interpreter step budget per run (overridden by CCLAB_BUDGET)
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    budget: u64,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_analyses(s: &str) -> Result<BTreeSet<Analysis>, String> {
    if s == "all" {
        return Ok(Analysis::ALL.into_iter().collect());
    }
    s.split(',').map(|a| a.trim().parse()).collect()
}

fn config(command: Command) -> Result<RunConfig, String> {
    let (common, analyses) = match command {
        Command::Classify(c) => (c, BTreeSet::from([Analysis::Classify])),
        Command::Levels(c) => (c, BTreeSet::from([Analysis::Levels])),
        Command::Propagate(c) => (c, BTreeSet::from([Analysis::Propagate])),
        Command::Nullify(c) => (c, BTreeSet::from([Analysis::Nullify])),
        Command::Impact(c) => (c, BTreeSet::from([Analysis::Impact])),
        Command::Drr(c) => (c, BTreeSet::from([Analysis::Drr])),
        Command::Stats(c) => (c, BTreeSet::from([Analysis::Stats])),
        Command::Report { common, analyses } => (common, parse_analyses(&analyses)?),
    };
    let budget = match std::env::var(BUDGET_ENV) {
        Ok(v) => v.trim().parse::<u64>().map_err(|_| format!("{BUDGET_ENV}=`{v}` is not a step count"))?,
        Err(_) => common.budget,
    };
    Ok(RunConfig {
        corpus: common.corpus,
        out: common.out,
        analyses,
        bins: common.bins,
        scale: common.scale,
        budget,
        jobs: common.jobs,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the corpus-error code; 2 is reserved for subject failures
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match config(cli.command) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    match run_corpus(&cfg) {
        Ok(summary) => {
            for d in &summary.diagnostics {
                let at = [d.version.as_str(), d.test.as_str()].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join("/");
                eprintln!("{}: {} {}", d.kind, at, d.detail);
            }
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
