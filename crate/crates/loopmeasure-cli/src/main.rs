//! `loopmeasure`: factorize loops, run verification suites, sample loops and test
//! their statistics. Exit code 0 when every check passes, 1 on a failed check (JSON
//! detail on stdout), 2 on a usage or input error.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use loopmeasure::birkhoff::{factorize, FactorizeOptions};
use loopmeasure::harness::experiment::{
    metadata_for, parse_reference, report_from_records, sample_records, ExperimentConfig, LoopRecord, Statistic, Target,
};
use loopmeasure::harness::special::{run_special, SpecialCheck};
use loopmeasure::harness::verify::{run_suite, Suite};
use loopmeasure::loopalg::LoopJson;
use loopmeasure::{Error, Loop64};

#[derive(Parser)]
#[command(name = "loopmeasure", version, about = "Birkhoff factorization and loop-measure checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factorize a loop read from JSON and write its factors.
    Factorize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Toeplitz order; the default is chosen from the loop's degree.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Run a seeded verification suite.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Defaults to the suite's own tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sample loops and write one JSON record per loop.
    Sample {
        /// Full experiment config; `--seed` still overrides its seed.
        #[arg(long, conflicts_with_all = ["target", "beta", "steps", "loops"])]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        target: Option<Target>,
        /// One or more inverse temperatures, comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "config")]
        beta: Vec<f64>,
        #[arg(long, required_unless_present = "config")]
        steps: Option<usize>,
        #[arg(long, required_unless_present = "config")]
        loops: Option<usize>,
        /// Truncation window N of the refit loops.
        #[arg(long, default_value_t = 16)]
        window: i32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test one statistic of a sample file against a reference law.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        statistic: Statistic,
        /// Reference law name, or NONE.
        #[arg(long, default_value = "NONE")]
        reference: String,
        #[arg(long)]
        out: PathBuf,
        /// Fail when any KS distance exceeds this band.
        #[arg(long)]
        max_distance: Option<f64>,
    },
    /// Run one special-function or reference-law check.
    Special {
        #[arg(long)]
        check: SpecialCheck,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// How a command ended, with the record to print on stdout.
enum Outcome {
    Pass(Option<serde_json::Value>),
    Fail(serde_json::Value),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(Outcome::Pass(record)) => {
            if let Some(record) = record {
                println!("{record}");
            }
            ExitCode::SUCCESS
        }
        Ok(Outcome::Fail(detail)) => {
            println!("{detail}");
            ExitCode::from(1)
        }
        Err(e @ (Error::InvalidInput(_) | Error::Io(_) | Error::Json(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            println!("{}", serde_json::json!({ "error": e.kind(), "detail": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Factorize { input, out, order } => {
            let json: LoopJson = serde_json::from_str(&fs::read_to_string(input)?)?;
            let g = Loop64::from_json(&json)?;
            let factors = factorize(&g, &FactorizeOptions { order, ..Default::default() })?;
            write_json(&out, &factors.to_json())?;
            Ok(Outcome::Pass(None))
        }
        Command::Verify { suite, trials, seed, tol } => {
            let record = run_suite(suite, trials, seed, tol.unwrap_or(suite.default_tolerance()))?;
            Ok(verdict(record.passed(), &record))
        }
        Command::Sample { config, target, beta, steps, loops, window, seed, out } => {
            let mut cfg = match config {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => {
                    let target = target.expect("required by clap");
                    ExperimentConfig {
                        target,
                        betas: beta,
                        steps: steps.expect("required by clap"),
                        window,
                        n_loops: loops.expect("required by clap"),
                        seed,
                        statistics: default_statistics(target),
                        references: Default::default(),
                        toeplitz_order: None,
                    }
                }
            };
            cfg.seed = seed;
            let records = sample_records(&cfg)?;
            let mut w = BufWriter::new(fs::File::create(out)?);
            for r in &records {
                serde_json::to_writer(&mut w, r)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
            Ok(Outcome::Pass(None))
        }
        Command::Stats { input, statistic, reference, out, max_distance } => {
            let text = fs::read_to_string(input)?;
            let records = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<Vec<LoopRecord>, _>>()?;
            let tag = parse_reference(&reference)?;
            let seed = records.iter().map(|r| r.seed).min().unwrap_or(0);
            let report = report_from_records(&records, &[(statistic, tag)], metadata_for(&text, seed, None))?;
            write_json(&out, &report)?;
            let within = |d: Option<f64>| match (d, max_distance) {
                (Some(d), Some(band)) => d <= band,
                _ => true,
            };
            let passed = report.reconciles() && report.rows.iter().all(|r| within(r.ks_distance));
            Ok(verdict(passed, &report))
        }
        Command::Special { check, seed } => {
            let record = run_special(check, seed)?;
            Ok(verdict(record.passed, &record))
        }
    }
}

/// Every statistic the target supports, so one sample file serves any later `stats` call.
fn default_statistics(target: Target) -> Vec<Statistic> {
    let mut stats = vec![
        Statistic::LadderRatio(1),
        Statistic::LadderRatio(2),
        Statistic::LadderRatio(3),
        Statistic::B0,
        Statistic::Theta1,
        Statistic::Theta2,
    ];
    if target == Target::S2 {
        stats.extend([Statistic::A0, Statistic::Zeta]);
    }
    stats
}

fn verdict<T: Serialize>(passed: bool, record: &T) -> Outcome {
    let value = serde_json::to_value(record).unwrap_or_default();
    if passed {
        Outcome::Pass(Some(value))
    } else {
        Outcome::Fail(value)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
