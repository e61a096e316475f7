use std::collections::BTreeMap;
use std::sync::Arc;

use modlab::fock::{
    coherent, gamma, second_quantized_modular_check, sym_power_expand, sym_project, unitarity_defect,
    weyl_matrix, weyl_truncation_defect, FockSpace, FockVector, OneParticleMap,
};
use modlab::hilbert::{inner, ComplexVector, ComplexVectorSpace};
use modlab::rng::{normal_cmat, normal_cvec, LabRng};
use modlab::standard::FiberBlock;
use modlab::Complex64;
use rand::Rng;

use super::{fmt, worst_ratio, CheckOutput};
use crate::config::ExperimentConfig;
use crate::report::{PlotData, Record, Relation};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_vec(rng: &mut LabRng, d: usize, norm: f64) -> modlab::Result<ComplexVector> {
    let v = normal_cvec(rng, d);
    let n = v.norm();
    ComplexVector::new(ComplexVectorSpace::new(d)?, v * c(norm / n))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(super) fn symmetrizer(cfg: &ExperimentConfig, rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let fc = &cfg.fock;
    let mut spaces: BTreeMap<usize, Arc<FockSpace>> = BTreeMap::new();
    let mut worst: f64 = 0.0;
    let mut plot = PlotData::new("fock_symmetrizer.csv", &["instance", "d", "n", "difference"]);
    for i in 0..fc.sym_instances {
        let d = 1 + i % fc.sym_max_d;
        let n = 1 + (i / fc.sym_max_d) % fc.sym_max_level;
        let space = match spaces.get(&d) {
            Some(s) => s.clone(),
            None => {
                let s = FockSpace::new(d, fc.sym_max_level)?;
                spaces.insert(d, s.clone());
                s
            }
        };
        let xs = (0..n).map(|_| random_vec(rng, d, 1.0)).collect::<modlab::Result<Vec<_>>>()?;
        let diff = sym_power_expand(&space, &xs)?.sub(&sym_project(&space, &xs)?)?.norm();
        worst = worst.max(diff);
        plot.push(vec![i.to_string(), d.to_string(), n.to_string(), fmt(diff)]);
    }
    let mut out = CheckOutput::default();
    out.push(
        Record::compare(
            "fock.symmetrizer",
            "polarization",
            "x₁ ∨ … ∨ xₙ by the polarization formula equals the symmetric projection",
            worst,
            Relation::AtMost,
            fc.sym_tol,
        )
        .with_note(format!(
            "{} instances, d ≤ {}, n ≤ {}",
            fc.sym_instances, fc.sym_max_d, fc.sym_max_level
        )),
    );
    out.plots.push(plot);
    Ok(out)
}

pub(super) fn coherent_calculus(cfg: &ExperimentConfig, rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let fc = &cfg.fock;
    let n = fc.coherent_cutoff;
    let (mut overlap, mut linear, mut antilinear) = (0.0f64, 0.0f64, 0.0f64);
    for d in 1..=fc.coherent_max_d {
        let space = FockSpace::new(d, n)?;
        for _ in 0..fc.coherent_instances {
            let rh = 0.5 + 0.7 * rng.random::<f64>();
            let rk = 0.5 + 0.7 * rng.random::<f64>();
            let h = random_vec(rng, d, rh)?;
            let k = random_vec(rng, d, rk)?;
            let z = inner(&h, &k)?;
            let partial: Complex64 = (0..=n).map(|p| z.powu(p as u32) / factorial(p)).sum();
            let got = coherent(&space, &h)?.inner(&coherent(&space, &k)?)?;
            overlap = overlap.max((got - partial).norm());

            let a = normal_cmat(rng, d, d) * c(0.5);
            let eh = coherent(&space, &h)?;
            let ah = ComplexVector::new(h.space(), &a * h.coords())?;
            let lhs = gamma(&space, &OneParticleMap::Linear(a.clone()))?.apply(&eh)?;
            linear = linear.max(lhs.sub(&coherent(&space, &ah)?)?.norm());
            let ach = ComplexVector::new(h.space(), &a * h.conj().coords())?;
            let lhs = gamma(&space, &OneParticleMap::Antilinear(a))?.apply(&eh)?;
            antilinear = antilinear.max(lhs.sub(&coherent(&space, &ach)?)?.norm());
        }
    }
    let note = format!("d ≤ {}, N = {n}, {} instances per d", fc.coherent_max_d, fc.coherent_instances);
    let id = "fock.coherent";
    let mut out = CheckOutput::default();
    out.push(
        Record::compare(
            id,
            "overlap",
            "⟨e^h, e^k⟩ = Σ_{n≤N} ⟨h,k⟩ⁿ/n! on the truncated Fock space",
            overlap,
            Relation::Below,
            fc.overlap_tol,
        )
        .with_note(note.clone()),
    );
    out.push(
        Record::compare(id, "gamma_linear", "Γ(a) e^h = e^{ah}", linear, Relation::Below, fc.gamma_tol)
            .with_note(note.clone()),
    );
    out.push(
        Record::compare(id, "gamma_antilinear", "Γ(a∘C) e^h = e^{a h̄}", antilinear, Relation::Below, fc.gamma_tol)
            .with_note(note),
    );
    Ok(out)
}

pub(super) fn weyl(cfg: &ExperimentConfig, rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let fc = &cfg.fock;
    let id = "fock.weyl";
    let space = FockSpace::new(1, fc.weyl_cutoff)?;
    let sp = space.one_particle();
    let level = fc.weyl_level;
    let h = ComplexVector::unit(sp, 0)?;
    let probes = (0..4).map(|_| random_vec(rng, 1, 1.0)).collect::<modlab::Result<Vec<_>>>()?;
    let closed = weyl_truncation_defect(&space, &h, &probes, level)?;

    let vac = FockVector::vacuum(&space);
    let mut phase: f64 = 0.0;
    for _ in 0..4 {
        let a = random_vec(rng, 1, 1.0)?;
        let b = random_vec(rng, 1, 1.0)?;
        let im = inner(&a, &b)?.im;
        let lhs = weyl_matrix(&space, &a)?.apply(&weyl_matrix(&space, &b)?.apply(&vac)?)?;
        let rhs = weyl_matrix(&space, &a.add(&b)?)?
            .apply(&vac)?
            .scale(Complex64::from_polar(1.0, -0.5 * im));
        phase = phase.max(lhs.truncate(level).sub(&rhs.truncate(level))?.norm());
    }

    let mut plot = PlotData::new("fock_weyl_ladder.csv", &["cutoff", "level", "truncation_defect", "unitarity_defect"]);
    let mut truncation = Vec::new();
    let mut unitarity = Vec::new();
    for &n in &fc.weyl_ladder {
        let s = FockSpace::new(1, n)?;
        let t = weyl_truncation_defect(&s, &h, &probes, n / 2)?;
        let u = unitarity_defect(&s, &h, n / 2)?;
        plot.push(vec![n.to_string(), (n / 2).to_string(), fmt(t), fmt(u)]);
        truncation.push(t);
        unitarity.push(u);
    }
    let ladder = format!("N ∈ {:?}, levels ≤ N/2", fc.weyl_ladder);
    let mut out = CheckOutput::default();
    out.push(
        Record::compare(
            id,
            "closed_form",
            "W(h) e^{(i/√2)k} by the closed form equals exp of the field operator",
            closed,
            Relation::Below,
            fc.weyl_tol,
        )
        .with_note(format!("d = 1, N = {}, levels ≤ {level}", fc.weyl_cutoff)),
    );
    out.push(
        Record::compare(
            id,
            "ccr_phase",
            "W(h)W(k) = exp(−(i/2) Im⟨h,k⟩) W(h+k)",
            phase,
            Relation::Below,
            fc.weyl_tol,
        )
        .with_note(format!("on the vacuum, levels ≤ {level}")),
    );
    out.push(
        Record::compare(
            id,
            "unitarity",
            "truncated Weyl operators are unitary on low levels",
            unitarity.iter().copied().fold(0.0, f64::max),
            Relation::Below,
            fc.weyl_tol,
        )
        .with_note(format!("largest unitarity defect, {ladder}")),
    );
    out.push(
        Record::compare(
            id,
            "unitarity_ladder",
            "the unitarity defect shrinks as the cutoff grows",
            worst_ratio(&unitarity),
            Relation::Below,
            1.0,
        )
        .with_note(format!(
            "largest ratio of consecutive unitarity defects, {ladder}; exp of a truncated field operator is unitary up to rounding at every cutoff"
        )),
    );
    out.push(
        Record::compare(
            id,
            "truncation_ladder",
            "truncated Weyl operators approach the closed form",
            worst_ratio(&truncation),
            Relation::Below,
            1.0,
        )
        .with_note(format!("largest ratio of consecutive closed-form defects, {ladder}")),
    );
    out.plots.push(plot);
    Ok(out)
}

pub(super) fn second_quantized(cfg: &ExperimentConfig, rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let fc = &cfg.fock;
    let id = "fock.second_quantized";
    let k = FiberBlock::canonical(fc.fiber_theta)?.subspace();
    let r = second_quantized_modular_check(&k, fc.sq_cutoff, fc.sq_samples, fc.sq_t, rng)?;
    let note = format!("θ = {}, N = {}, {} samples, t = {}", fc.fiber_theta, fc.sq_cutoff, fc.sq_samples, fc.sq_t);
    let rows = [
        ("tomita", "Γ(s) e^{ik} = e^{−ik} for k ∈ K", r.tomita_residual),
        ("conjugation", "J W(k) J = W(jk)*", r.conjugation_residual),
        ("flow", "Δ^{it} W(k) Δ^{−it} = W(δ^{it} k)", r.flow_residual),
        ("ccr_phase", "the CCR phase between K and K′ vanishes", r.ccr_phase_residual),
        ("commutator", "W(k) and W(k′) commute for k ∈ K, k′ ∈ K′", r.commutator_residual),
    ];
    let mut out = CheckOutput::default();
    for (name, anchor, v) in rows {
        out.push(Record::compare(id, name, anchor, v, Relation::Below, fc.sq_tol).with_note(note.clone()));
    }
    Ok(out)
}
