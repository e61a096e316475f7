use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modlab_cli::checks::{by_id, CHECKS};
use modlab_cli::config::{ExperimentConfig, Resolution, DEFAULT_CONFIG};
use modlab_cli::report::Report;
use modlab_cli::runner;

#[derive(Parser)]
#[command(name = "modlab", version, about = "Numerical checks of modular theory and modular localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks selected by the config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only these checks (see `list-checks`).
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// Rerun resolution-dependent checks across a ladder of grids.
    Refine {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated `n` or `theta_max:n` entries, each refining the previous.
        #[arg(long, value_delimiter = ',', required = true)]
        ladder: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available checks.
    ListChecks,
    /// Print the annotated default configuration.
    PrintSchema,
}

const USAGE: u8 = 2;

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn finish(report: &Report, out: PathBuf) -> ExitCode {
    if let Err(e) = runner::write(report, &out) {
        return usage(format!("cannot write report to {}: {e}", out.display()));
    }
    for r in &report.records {
        let status = if r.passed { "pass" } else { "FAIL" };
        println!("{status}  {:<32} {:<36} {:e} {} {:e}", r.check, r.name, r.measured, r.relation, r.threshold);
    }
    let failed = report.failures().count();
    println!(
        "{} records, {failed} failed; report in {}",
        report.records.len(),
        out.join(format!("{}.json", report.command)).display()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out, checks } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return usage(e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = if checks.is_empty() {
                runner::run(&cfg)
            } else {
                let mut picked = Vec::new();
                for id in &checks {
                    match by_id(id) {
                        Some(c) => picked.push(c),
                        None => return usage(format!("--check: unknown check {id}")),
                    }
                }
                runner::run_checks(&cfg, &picked)
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
            finish(&report, dir)
        }
        Command::Refine { config, ladder, out } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return usage(e),
            };
            let ladder = match ladder
                .iter()
                .map(|s| Resolution::parse(s, cfg.freefield.theta_max))
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(l) => l,
                Err(e) => return usage(format!("--ladder: {e}")),
            };
            let report = match runner::refine(&cfg, &ladder) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
            finish(&report, dir)
        }
        Command::ListChecks => {
            for c in CHECKS {
                println!("{:<32} {:>2}  {:<10} {}", c.id, c.criterion, c.kind, c.summary);
            }
            ExitCode::SUCCESS
        }
        Command::PrintSchema => {
            print!("{DEFAULT_CONFIG}");
            ExitCode::SUCCESS
        }
    }
}
