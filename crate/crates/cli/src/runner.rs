//! `run` and `refine`.

use std::path::Path;
use std::time::Instant;

use crate::checks::{ladder_study, selected, Check, LadderSelection};
use crate::config::{check_ladder, ConfigError, ExperimentConfig, Resolution};
use crate::report::{Record, Report};

fn timed(report: &mut Report, check: &Check, cfg: &ExperimentConfig) {
    let start = Instant::now();
    let out = check.execute(cfg);
    report.extend(out.records, out.plots, check.id, start.elapsed().as_secs_f64());
}

/// Every check selected by `cfg.kind`, in registry order.
pub fn run(cfg: &ExperimentConfig) -> Report {
    let mut report = Report::new("run", cfg);
    for check in selected(cfg.kind) {
        timed(&mut report, check, cfg);
    }
    report
}

/// Only the given checks.
pub fn run_checks(cfg: &ExperimentConfig, checks: &[&Check]) -> Report {
    let mut report = Report::new("run", cfg);
    for check in checks {
        timed(&mut report, check, cfg);
    }
    report
}

/// Reruns the resolution-dependent free-field quantities across `ladder`.
/// A ladder of one resolution is a plain run at that resolution.
pub fn refine(cfg: &ExperimentConfig, ladder: &[Resolution]) -> Result<Report, ConfigError> {
    check_ladder("--ladder", ladder)?;
    if let [only] = ladder {
        let mut cfg = cfg.clone();
        cfg.freefield.theta_max = only.theta_max;
        cfg.freefield.n_points = only.n_points;
        let mut report = run(&cfg);
        report.command = "refine".into();
        return Ok(report);
    }
    let mut report = Report::new("refine", cfg);
    let start = Instant::now();
    let (records, plots) = match ladder_study(&cfg.freefield, ladder, LadderSelection::ALL) {
        Ok(study) => (study.records("refine", &cfg.freefield), vec![study.plot("refine.csv")]),
        Err(e) => (vec![Record::error("refine", "evaluation", "refinement study", e.to_string())], vec![]),
    };
    report.extend(records, plots, "refine", start.elapsed().as_secs_f64());
    Ok(report)
}

pub fn write(report: &Report, dir: &Path) -> std::io::Result<()> {
    report.write(dir, &report.command)
}
