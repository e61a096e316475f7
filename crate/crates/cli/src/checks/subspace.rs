use modlab::hilbert::{ComplexVectorSpace, RealLinearMap, RealSubspace};
use modlab::linalg::op_norm;
use modlab::rng::LabRng;
use modlab::standard::{
    fiberize_from, fixed_points_of_j_and_delta, modular_data, random_standard_with_fixed_part,
    tomita_operator,
};

use super::{fmt, CheckOutput};
use crate::config::{ExperimentConfig, SubspaceConfig};
use crate::report::{PlotData, Record, Relation};

/// Instance `i` of the suite: dimension cycles through `1..=d`, and every
/// `fixed_part_every`-th instance carries a real fixed part.
fn instance(cfg: &SubspaceConfig, i: usize, rng: &mut LabRng) -> modlab::Result<(usize, usize, RealSubspace)> {
    let d = 1 + i % cfg.d;
    let m = if (i + 1).is_multiple_of(cfg.fixed_part_every) { 1 + (i / cfg.fixed_part_every) % d } else { 0 };
    let (k, _) = random_standard_with_fixed_part(ComplexVectorSpace::new(d)?, m, rng)?;
    Ok((d, m, k))
}

pub(super) fn modular(cfg: &ExperimentConfig, rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let sc = &cfg.subspace;
    let id = "subspace.modular";
    let mut worst = [0.0f64; 6];
    let mut plot = PlotData::new(
        "subspace_modular.csv",
        &["instance", "d", "fixed", "involution", "adjoint", "j_duality", "flow", "fixed_points", "condition"],
    );
    for i in 0..sc.instances {
        let (d, m, k) = instance(sc, i, rng)?;
        let space = k.space();
        let s = tomita_operator(&k)?;
        let sn = op_norm(s.matrix());
        let involution = s.compose(&s)?.distance(&RealLinearMap::identity(space))? / (sn * sn);
        let fixes_k = k
            .basis()
            .iter()
            .map(|v| Ok(s.apply(v)?.sub(v)?.norm()))
            .collect::<modlab::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let kp = k.symplectic_complement();
        let adj = s.antilinear_adjoint()?;
        let adjoint = tomita_operator(&kp)?.distance(&adj)? / op_norm(adj.matrix());
        let md = modular_data(&s)?;
        let j_duality = md.j.image(&k)?.distance(&kp)?;
        let mut flow: f64 = 0.0;
        for &t in &sc.flow_times {
            flow = flow.max(md.modular_flow(t).image(&k)?.distance(&k)?);
        }
        let cap = k.intersection(&kp, sc.tol)?;
        let fixed_points = cap.distance(&fixed_points_of_j_and_delta(&md))?;
        let row = [involution, fixes_k, adjoint, j_duality, flow, fixed_points];
        for (w, r) in worst.iter_mut().zip(row) {
            *w = w.max(r);
        }
        plot.push(vec![
            i.to_string(),
            d.to_string(),
            m.to_string(),
            fmt(involution),
            fmt(adjoint),
            fmt(j_duality),
            fmt(flow),
            fmt(fixed_points),
            fmt(md.condition_number),
        ]);
    }
    let names = [
        ("s_squared", "s_K² = 1 on K + iK, relative to ‖s_K‖²"),
        ("s_fixes_k", "s_K k = k for k ∈ K"),
        ("adjoint", "s_{K′} = s_K*, relative to ‖s_K*‖"),
        ("j_duality", "j K = K′ (Rieffel–van Daele)"),
        ("flow_invariance", "δ^{it} K = K"),
        ("fixed_points", "K ∩ K′ = Fix(j) ∩ Fix(δ)"),
    ];
    let mut out = CheckOutput::default();
    for ((name, anchor), w) in names.iter().zip(worst) {
        out.push(
            Record::compare(id, name, anchor, w, Relation::Below, sc.tol)
                .with_note(format!("max over {} instances, d ≤ {}", sc.instances, sc.d)),
        );
    }
    out.plots.push(plot);
    Ok(out)
}

pub(super) fn fiber(cfg: &ExperimentConfig, rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let sc = &cfg.subspace;
    let id = "subspace.fiber";
    let (mut angles, mut j_err, mut delta_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut plot = PlotData::new("subspace_fiber.csv", &["instance", "d", "fixed", "fiber_angle", "principal_angle"]);
    for i in 0..sc.instances {
        let (d, m, k) = instance(sc, i, rng)?;
        let md = modular_data(&tomita_operator(&k)?)?;
        let fib = fiberize_from(&md)?;
        let got = fib.angles();
        let oracle = k.principal_angles(&k.times_i())?;
        if got.len() != oracle.len() {
            angles = f64::INFINITY;
        }
        for (a, b) in got.iter().zip(&oracle) {
            angles = angles.max((a - b).abs());
            plot.push(vec![i.to_string(), d.to_string(), m.to_string(), fmt(*a), fmt(*b)]);
        }
        let (j, delta) = fib.reconstruct();
        j_err = j_err.max(j.distance(&md.j)?);
        delta_err = delta_err.max(delta.distance(&md.delta)? / op_norm(md.delta.matrix()));
    }
    let note = format!("max over {} instances, d ≤ {}", sc.instances, sc.d);
    let mut out = CheckOutput::default();
    out.push(
        Record::compare(
            id,
            "angles",
            "fiber angles of K equal the principal angles between K and iK",
            angles,
            Relation::Below,
            sc.fiber_tol,
        )
        .with_note(note.clone()),
    );
    out.push(
        Record::compare(id, "reconstruct_j", "j is the direct sum of its fiber blocks", j_err, Relation::Below, sc.fiber_tol)
            .with_note(note.clone()),
    );
    out.push(
        Record::compare(
            id,
            "reconstruct_delta",
            "δ is the direct sum of its fiber blocks, relative to ‖δ‖",
            delta_err,
            Relation::Below,
            sc.fiber_tol,
        )
        .with_note(note),
    );
    out.plots.push(plot);
    Ok(out)
}
