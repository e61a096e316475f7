use std::sync::Arc;

use modlab::freefield::{
    borchers_check, bw_residual, covariance_residual, embed, locality_pairing, modular_half_diagnostic,
    wedge_modular_half, FreeFieldModel, OneParticleVector, Poincare2, Region2, TestFunction2,
    RIGHT_WEDGE_DIRECTION,
};
use modlab::rng::LabRng;
use modlab::Error;

use super::{fmt, worst_ratio, CheckOutput};
use crate::config::{BumpSpec, ExperimentConfig, FreefieldConfig, Resolution};
use crate::report::{PlotData, Record, Relation};

const BW_ANCHOR: &str = "Bisognano–Wichmann: s_W = J Δ^{1/2} with Δ^{it} the wedge boosts";
const BOOST_ANCHOR: &str = "Poincaré covariance of the one-particle embedding under boosts";
const TAIL_ANCHOR: &str = "vectors localized in W′ are outside the domain of Δ_W^{1/2}";

fn model_at(ff: &FreefieldConfig, r: Resolution) -> modlab::Result<Arc<FreeFieldModel>> {
    FreeFieldModel::new(ff.mass, r.theta_max, r.n_points)
}

fn bump(b: &BumpSpec, region: Region2) -> modlab::Result<TestFunction2> {
    TestFunction2::bump(b.center, b.radius, region)
}

fn plane() -> Region2 {
    Region2::double_cone([0.0, 0.0], 1e6)
}

/// What a ladder series is expected to do under refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trend {
    /// Residual, non-increasing up to the slack factor.
    Decreasing,
    /// Log10 tail mass, growing by at least the configured decades overall.
    Growing,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub check: String,
    pub anchor: &'static str,
    pub trend: Trend,
    pub values: Vec<f64>,
}

/// Resolution-dependent quantities across a ladder.
#[derive(Clone, Debug)]
pub struct LadderStudy {
    pub resolutions: Vec<Resolution>,
    pub series: Vec<Series>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderSelection {
    pub bw: bool,
    pub boost: bool,
    pub left_tail: bool,
}

impl LadderSelection {
    pub const ALL: Self = Self { bw: true, boost: true, left_tail: true };
}

pub fn ladder_study(ff: &FreefieldConfig, ladder: &[Resolution], which: LadderSelection) -> modlab::Result<LadderStudy> {
    let cutoff = ff.cutoff();
    let rw = Region2::right_wedge([0.0, 0.0]);
    let lw = Region2::left_wedge([0.0, 0.0]);
    let mut series = Vec::new();
    if which.bw {
        for i in 0..ff.bw_bumps.len() {
            series.push(Series { check: format!("bw_residual[{i}]"), anchor: BW_ANCHOR, trend: Trend::Decreasing, values: vec![] });
        }
    }
    if which.boost {
        for i in 0..ff.covariance_bumps.len() {
            series.push(Series {
                check: format!("boost_covariance[{i}]"),
                anchor: BOOST_ANCHOR,
                trend: Trend::Decreasing,
                values: vec![],
            });
        }
    }
    if which.left_tail {
        for i in 0..ff.left_bumps.len() {
            series.push(Series { check: format!("left_tail_log10[{i}]"), anchor: TAIL_ANCHOR, trend: Trend::Growing, values: vec![] });
        }
    }
    for &r in ladder {
        let model = model_at(ff, r)?;
        let mut values = Vec::new();
        if which.bw {
            for b in &ff.bw_bumps {
                values.push(bw_residual(&bump(b, rw.clone())?, &model, &cutoff)?.residual);
            }
        }
        if which.boost {
            for b in &ff.covariance_bumps {
                values.push(covariance_residual(&bump(b, rw.clone())?, &Poincare2::boost(ff.boost), &model)?);
            }
        }
        if which.left_tail {
            for b in &ff.left_bumps {
                let phi = embed(&bump(b, lw.clone())?, &model);
                values.push(modular_half_diagnostic(&phi, RIGHT_WEDGE_DIRECTION, &cutoff).tail_log10);
            }
        }
        for (s, v) in series.iter_mut().zip(values) {
            s.values.push(v);
        }
    }
    Ok(LadderStudy { resolutions: ladder.to_vec(), series })
}

impl LadderStudy {
    pub fn records(&self, check: &str, ff: &FreefieldConfig) -> Vec<Record> {
        let ladder: Vec<String> = self.resolutions.iter().map(|r| r.to_string()).collect();
        let ladder = ladder.join(" → ");
        self.series
            .iter()
            .map(|s| match s.trend {
                Trend::Decreasing => Record::compare(
                    check,
                    &format!("{}_refinement", s.check),
                    s.anchor,
                    worst_ratio(&s.values),
                    Relation::AtMost,
                    ff.refinement_slack,
                )
                .with_note(format!(
                    "largest ratio of consecutive residuals over {ladder}: {}",
                    s.values.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(", ")
                )),
                Trend::Growing => {
                    let growth = s.values.last().copied().unwrap_or(0.0) - s.values[0];
                    Record::compare(
                        check,
                        &format!("{}_growth", s.check),
                        s.anchor,
                        growth,
                        Relation::Above,
                        ff.tail_growth_decades,
                    )
                    .with_note(format!(
                        "decades of tail growth over {ladder}: {}",
                        s.values.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(", ")
                    ))
                }
            })
            .collect()
    }

    /// Rows of `(resolution, check, residual)`.
    pub fn plot(&self, file: &str) -> PlotData {
        let mut p = PlotData::new(file, &["resolution", "check", "residual"]);
        for s in &self.series {
            for (r, v) in self.resolutions.iter().zip(&s.values) {
                p.push(vec![r.to_string(), s.check.clone(), fmt(*v)]);
            }
        }
        p
    }
}

pub(super) fn locality(cfg: &ExperimentConfig, _rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let ff = &cfg.freefield;
    let id = "freefield.locality";
    let base = ff.resolution();
    let fine = Resolution { theta_max: base.theta_max, n_points: 2 * base.n_points };
    let mut out = CheckOutput::default();
    let mut plot = PlotData::new("freefield_locality.csv", &["pair", "separation", "resolution", "im_pairing"]);
    for r in [base, fine] {
        let model = model_at(ff, r)?;
        for (sep, list) in [("spacelike", &ff.spacelike), ("timelike", &ff.timelike)] {
            for (i, p) in list.iter().enumerate() {
                let f = bump(&p.f, plane())?;
                let g = bump(&p.g, plane())?;
                let v = locality_pairing(&f, &g, &model).abs();
                plot.push(vec![i.to_string(), sep.into(), r.to_string(), fmt(v)]);
                let (rel, thr, anchor) = if sep == "spacelike" {
                    (Relation::Below, ff.locality_tol, "Im⟨Ef, Eg⟩ = 0 for spacelike separated supports")
                } else {
                    (Relation::Above, ff.timelike_min, "the commutator function is nonzero inside the light cone")
                };
                out.push(
                    Record::compare(id, &format!("{sep}[{i}]@{r}"), anchor, v, rel, thr)
                        .with_note(format!("f at {:?}, g at {:?}", p.f.center, p.g.center)),
                );
            }
        }
    }
    out.plots.push(plot);
    Ok(out)
}

pub(super) fn covariance(cfg: &ExperimentConfig, _rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let ff = &cfg.freefield;
    let id = "freefield.covariance";
    let model = model_at(ff, ff.resolution())?;
    let rw = Region2::right_wedge([0.0, 0.0]);
    let mut out = CheckOutput::default();
    for (i, b) in ff.covariance_bumps.iter().enumerate() {
        let f = bump(b, rw.clone())?;
        let boost = covariance_residual(&f, &Poincare2::boost(ff.boost), &model)?;
        out.push(
            Record::compare(id, &format!("boost[{i}]"), BOOST_ANCHOR, boost, Relation::Below, ff.boost_tol)
                .with_note(format!("λ = {}", ff.boost)),
        );
        let tr = covariance_residual(&f, &Poincare2::translation(ff.translation), &model)?;
        out.push(
            Record::compare(
                id,
                &format!("translation[{i}]"),
                "Poincaré covariance of the one-particle embedding under translations",
                tr,
                Relation::Below,
                ff.translation_tol,
            )
            .with_note(format!("a = {:?}", ff.translation)),
        );
    }
    let which = LadderSelection { bw: false, boost: true, left_tail: false };
    let study = ladder_study(ff, &ff.ladder, which)?;
    out.records.extend(study.records(id, ff));
    out.plots.push(study.plot("freefield_covariance_ladder.csv"));
    Ok(out)
}

pub(super) fn bisognano_wichmann(cfg: &ExperimentConfig, _rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let ff = &cfg.freefield;
    let id = "freefield.bisognano_wichmann";
    let cutoff = ff.cutoff();
    let model = model_at(ff, ff.resolution())?;
    let rw = Region2::right_wedge([0.0, 0.0]);
    let lw = Region2::left_wedge([0.0, 0.0]);
    let mut out = CheckOutput::default();
    for (i, b) in ff.bw_bumps.iter().enumerate() {
        let r = bw_residual(&bump(b, rw.clone())?, &model, &cutoff)?;
        out.push(
            Record::compare(id, &format!("bw_residual[{i}]"), BW_ANCHOR, r.residual, Relation::Below, ff.bw_tol).with_note(
                format!("band fraction {:.6}, tail log10 {:.2}", r.band_fraction, r.tail_log10),
            ),
        );
    }
    for (i, b) in ff.left_bumps.iter().enumerate() {
        let phi = embed(&bump(b, lw.clone())?, &model);
        let name = format!("left_domain_violation[{i}]");
        let rec = match wedge_modular_half(&phi, RIGHT_WEDGE_DIRECTION, &cutoff) {
            Err(Error::DomainViolation { tail_log10, threshold_log10 }) => {
                Record::compare(id, &name, TAIL_ANCHOR, tail_log10, Relation::Above, threshold_log10)
                    .with_note("domain violation reported, as expected")
            }
            Ok(h) => Record::compare(id, &name, TAIL_ANCHOR, h.tail_log10, Relation::Above, cutoff.threshold_log10)
                .with_note("no domain violation reported"),
            Err(e) => return Err(e),
        };
        out.push(rec.expecting_failure());
    }
    let which = LadderSelection { bw: true, boost: false, left_tail: true };
    let study = ladder_study(ff, &ff.ladder, which)?;
    out.records.extend(study.records(id, ff));
    out.plots.push(study.plot("freefield_bw_ladder.csv"));
    Ok(out)
}

pub(super) fn borchers(cfg: &ExperimentConfig, _rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let ff = &cfg.freefield;
    let id = "freefield.borchers";
    let model = model_at(ff, ff.resolution())?;
    let probes: Vec<OneParticleVector> = ff
        .borchers_probes
        .iter()
        .map(|g| OneParticleVector::gaussian(&model, g.center, g.width, g.freq))
        .collect();
    let mut out = CheckOutput::default();
    let mut plot = PlotData::new("freefield_borchers.csv", &["t", "probe", "modular", "conjugation"]);
    let a = ff.borchers_alpha;
    for &t in &ff.borchers_times {
        let r = borchers_check(a, t, &probes, &model)?;
        for (i, p) in probes.iter().enumerate() {
            let single = borchers_check(a, t, std::slice::from_ref(p), &model)?;
            plot.push(vec![fmt(t), i.to_string(), fmt(single.modular_deviation), fmt(single.conjugation_deviation)]);
        }
        out.push(
            Record::compare(
                id,
                &format!("modular@t={t}"),
                "Borchers: Δ^{it} U(a) Δ^{−it} = U(e^{−2πt} a) for lightlike a",
                r.modular_deviation,
                Relation::Below,
                ff.borchers_tol,
            )
            .with_note(format!("a = {a}, {} Gaussian probes", probes.len())),
        );
        out.push(
            Record::compare(
                id,
                &format!("conjugation@t={t}"),
                "Borchers: J U(a) J = U(−a) for lightlike a",
                r.conjugation_deviation,
                Relation::Below,
                ff.borchers_tol,
            )
            .with_note(format!("a = {a}, {} Gaussian probes", probes.len())),
        );
    }
    out.plots.push(plot);
    Ok(out)
}
