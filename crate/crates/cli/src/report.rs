//! Check records, reports and plot data.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::config::ExperimentConfig;

/// How `measured` is compared against `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "==")]
    Equal,
}

impl Relation {
    pub fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::Below => measured < threshold,
            Relation::AtMost => measured <= threshold,
            Relation::Above => measured > threshold,
            Relation::Equal => measured == threshold,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::Above => ">",
            Relation::Equal => "==",
        })
    }
}

/// JSON has no infinities; they are written as strings.
fn finite_or_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub check: String,
    pub name: String,
    /// The result the record verifies.
    pub anchor: String,
    #[serde(serialize_with = "finite_or_string")]
    pub measured: f64,
    pub relation: Relation,
    #[serde(serialize_with = "finite_or_string")]
    pub threshold: f64,
    pub passed: bool,
    /// Set for records whose pass condition is an expected failure of the
    /// underlying operation.
    pub expected_failure: bool,
    pub note: Option<String>,
}

impl Record {
    pub fn compare(check: &str, name: &str, anchor: &str, measured: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            check: check.into(),
            name: name.into(),
            anchor: anchor.into(),
            measured,
            relation,
            threshold,
            passed: relation.holds(measured, threshold),
            expected_failure: false,
            note: None,
        }
    }

    /// A check that could not be evaluated.
    pub fn error(check: &str, name: &str, anchor: &str, message: String) -> Self {
        Self {
            check: check.into(),
            name: name.into(),
            anchor: anchor.into(),
            measured: f64::NAN,
            relation: Relation::Below,
            threshold: f64::NAN,
            passed: false,
            expected_failure: false,
            note: Some(message),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn expecting_failure(mut self) -> Self {
        self.expected_failure = true;
        self
    }
}

/// Headered CSV table for plotting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotData {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PlotData {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut w = csv::Writer::from_path(dir.join(&self.file))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fingerprint {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Fingerprint {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub records: Vec<Record>,
    #[serde(skip)]
    pub plots: Vec<PlotData>,
    pub environment: Fingerprint,
    /// Wall-clock seconds per check.
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.into(),
            seed: config.seed,
            config: config.clone(),
            passed: true,
            records: Vec::new(),
            plots: Vec::new(),
            environment: Fingerprint::current(),
            timings: BTreeMap::new(),
        }
    }

    pub fn extend(&mut self, records: Vec<Record>, plots: Vec<PlotData>, check: &str, seconds: f64) {
        self.records.extend(records);
        self.plots.extend(plots);
        self.timings.insert(check.into(), seconds);
        self.passed = self.records.iter().all(|r| r.passed);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without timings and environment, for reproducibility
    /// comparisons.
    pub fn reproducible_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timings");
            o.remove("environment");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    /// Writes `<stem>.json` and every plot table into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json())?;
        for p in &self.plots {
            p.write(dir)?;
        }
        Ok(())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.passed)
    }
}
