//! Verification checks, one per acceptance criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};

use modlab::rng::{seeded, LabRng};

use crate::config::{ExperimentConfig, Kind};
use crate::report::{PlotData, Record};

mod fock;
mod freefield;
mod modloc;
mod subspace;

pub use freefield::{ladder_study, LadderSelection, LadderStudy, Series, Trend};

#[derive(Debug, Default)]
pub struct CheckOutput {
    pub records: Vec<Record>,
    pub plots: Vec<PlotData>,
}

impl CheckOutput {
    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }
}

type CheckFn = fn(&ExperimentConfig, &mut LabRng) -> modlab::Result<CheckOutput>;

pub struct Check {
    pub id: &'static str,
    pub criterion: u32,
    pub kind: Kind,
    pub summary: &'static str,
    run: CheckFn,
}

pub const CHECKS: &[Check] = &[
    Check {
        id: "subspace.modular",
        criterion: 1,
        kind: Kind::Subspace,
        summary: "Tomita, duality and modular flow identities on random standard subspaces",
        run: subspace::modular,
    },
    Check {
        id: "subspace.fiber",
        criterion: 2,
        kind: Kind::Subspace,
        summary: "fiber angles against principal angles; (j, δ) rebuilt from blocks",
        run: subspace::fiber,
    },
    Check {
        id: "fock.symmetrizer",
        criterion: 3,
        kind: Kind::Fock,
        summary: "polarization expansion against the symmetric projection",
        run: fock::symmetrizer,
    },
    Check {
        id: "fock.coherent",
        criterion: 4,
        kind: Kind::Fock,
        summary: "coherent overlaps and Γ(a) on coherent vectors",
        run: fock::coherent_calculus,
    },
    Check {
        id: "fock.weyl",
        criterion: 5,
        kind: Kind::Fock,
        summary: "closed-form Weyl action against the matrix exponential; CCR phase; truncation ladder",
        run: fock::weyl,
    },
    Check {
        id: "fock.second_quantized",
        criterion: 6,
        kind: Kind::Fock,
        summary: "second-quantized Tomita, conjugation and flow on a fiber model",
        run: fock::second_quantized,
    },
    Check {
        id: "freefield.locality",
        criterion: 7,
        kind: Kind::Freefield,
        summary: "symplectic pairing of spacelike and timelike bump pairs",
        run: freefield::locality,
    },
    Check {
        id: "freefield.covariance",
        criterion: 8,
        kind: Kind::Freefield,
        summary: "embedding covariance under boosts and translations",
        run: freefield::covariance,
    },
    Check {
        id: "freefield.bisognano_wichmann",
        criterion: 9,
        kind: Kind::Freefield,
        summary: "one-particle Bisognano–Wichmann residual and the left-wedge domain diagnostic",
        run: freefield::bisognano_wichmann,
    },
    Check {
        id: "freefield.borchers",
        criterion: 10,
        kind: Kind::Freefield,
        summary: "Borchers relations for lightlike translations",
        run: freefield::borchers,
    },
    Check {
        id: "modloc.net",
        criterion: 11,
        kind: Kind::Modloc,
        summary: "isotony, duality and covariance of the wedge net; double cones; direct sums",
        run: modloc::net,
    },
];

impl Check {
    /// Runs the check with its own RNG stream. Errors and panics become a
    /// failing record.
    pub fn execute(&self, cfg: &ExperimentConfig) -> CheckOutput {
        let mut rng = seeded(cfg.seed.wrapping_mul(0x100).wrapping_add(u64::from(self.criterion)));
        let result = catch_unwind(AssertUnwindSafe(|| (self.run)(cfg, &mut rng)));
        let message = match result {
            Ok(Ok(out)) => return out,
            Ok(Err(e)) => e.to_string(),
            Err(p) => p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()),
        };
        CheckOutput {
            records: vec![Record::error(self.id, "evaluation", self.summary, message)],
            plots: Vec::new(),
        }
    }
}

pub fn selected(kind: Kind) -> impl Iterator<Item = &'static Check> {
    CHECKS.iter().filter(move |c| kind.includes(c.kind))
}

pub fn by_id(id: &str) -> Option<&'static Check> {
    CHECKS.iter().find(|c| c.id == id)
}

/// Largest ratio of consecutive entries; a pair of zeros counts as 1.
pub(crate) fn worst_ratio(xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| if w[0] == 0.0 && w[1] == 0.0 { 1.0 } else { w[1] / w[0] })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:e}")
}
