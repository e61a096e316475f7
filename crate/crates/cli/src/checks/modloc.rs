use modlab::freefield::{FreeFieldModel, Region2};
use modlab::modloc::{
    dictionary_for, direct_sum_defect, doublecone_space, localized_subspace, net_checks, LocalizedNet,
    PoincareRep2, WedgeFamily2,
};
use modlab::rng::LabRng;

use super::{fmt, CheckOutput};
use crate::config::ExperimentConfig;
use crate::report::{PlotData, Record, Relation};

pub(super) fn net(cfg: &ExperimentConfig, _rng: &mut LabRng) -> modlab::Result<CheckOutput> {
    let mc = &cfg.modloc;
    let id = "modloc.net";
    let cutoff = cfg.freefield.cutoff();
    let model = FreeFieldModel::new(mc.mass, mc.theta_max, mc.n_points)?;
    let family = WedgeFamily2::new(WedgeFamily2::from_apexes(&mc.apexes).wedges().to_vec())?;
    let n_wedges = family.wedges().len();
    let net = LocalizedNet::build(PoincareRep2::single(model), family, cfg.pool(), mc.fixed_tol, cutoff)?;
    let elements: Vec<_> = mc.group_elements.iter().map(|g| g.element()).collect();
    let report = net_checks(&net, &elements, mc.modular_t)?;

    let mut out = CheckOutput::default();
    let nonzero = net.models.iter().filter(|(_, m)| m.subspace.dim() > 0).count();
    out.push(
        Record::compare(id, "nonzero_wedge_models", "every wedge of the family carries a nonzero model", nonzero as f64, Relation::Equal, n_wedges as f64)
            .with_note(format!("{} pool functions", net.pool.len())),
    );
    out.push(
        Record::compare(id, "isotony", "W₁ ⊂ W₂ implies K(W₁) ⊂ K(W₂)", report.max_isotony(), Relation::Below, mc.net_tol)
            .with_note(format!("{} included pairs", report.isotony.len())),
    );
    out.push(
        Record::compare(id, "duality", "K(W′) = K(W)′ (wedge duality)", report.max_duality(), Relation::Below, mc.net_tol)
            .with_note(format!("{} complementary pairs, complement taken within the joint span", report.duality.len())),
    );
    out.push(
        Record::compare(id, "covariance", "U(g) K(W) = K(gW)", report.max_covariance(), Relation::Below, mc.net_tol)
            .with_note(format!("{} wedge and group-element pairs", report.covariance.len())),
    );
    let bw = report.wedges.iter().map(|w| w.bw_invariance).fold(0.0, f64::max);
    out.push(
        Record::compare(id, "modular_invariance", "Δ_W^{it} K(W) = K(W) (Bisognano–Wichmann)", bw, Relation::Below, mc.fixed_tol)
            .with_note(format!("t = {}", mc.modular_t)),
    );
    let refl = report.wedges.iter().map(|w| w.reflection).fold(0.0, f64::max);
    out.push(Record::compare(id, "reflection", "J_W K(W) = K(W′)", refl, Relation::Below, mc.net_tol));

    let mut plot = PlotData::new(
        "modloc_wedges.csv",
        &["wedge", "dim", "dictionary_size", "dictionary_hash", "modular_invariance", "reflection", "k_cap_ik"],
    );
    for w in &report.wedges {
        let m = net.model(&w.wedge).expect("model of a reported wedge");
        plot.push(vec![
            format!("{:?}", w.wedge),
            w.dim.to_string(),
            m.report.dictionary_size.to_string(),
            m.report.dictionary_hash.clone(),
            fmt(w.bw_invariance),
            fmt(w.reflection),
            w.k_cap_ik.to_string(),
        ]);
    }
    out.plots.push(plot);

    let o = Region2::double_cone(mc.double_cone.center, mc.double_cone.radius);
    let dc = doublecone_space(&net, &o)?;
    out.push(
        Record::compare(id, "double_cone_members", "the double cone has pool functions supported in it", dc.members as f64, Relation::Above, 0.0)
            .with_note(format!("intersection dimension {}", dc.subspace.dim())),
    );
    let rec = Record::compare(
        id,
        "double_cone",
        "K(O) = K(W₁) ∩ K(W₂) contains the embeddings of functions supported in O",
        dc.residual,
        Relation::Below,
        mc.double_cone_tol,
    );
    out.push(match dc.warning {
        Some(w) => rec.with_note(w),
        None => rec,
    });

    let w = mc.direct_sum_wedge.region();
    let fs: Vec<_> = net.pool.iter().filter(|f| f.supported_in(&w)).cloned().collect();
    let sum = PoincareRep2::direct_sum(&mc.direct_sum_masses, mc.theta_max, mc.n_points)?;
    let ksum = localized_subspace(&sum, &w, &dictionary_for(&sum, &fs), mc.fixed_tol, &cutoff)?;
    let singles = mc
        .direct_sum_masses
        .iter()
        .map(|&m| {
            let rep = PoincareRep2::single(FreeFieldModel::new(m, mc.theta_max, mc.n_points)?);
            localized_subspace(&rep, &w, &dictionary_for(&rep, &fs), mc.fixed_tol, &cutoff)
        })
        .collect::<modlab::Result<Vec<_>>>()?;
    let dims: usize = singles.iter().map(|k| k.subspace.dim()).sum();
    out.push(Record::compare(
        id,
        "direct_sum_dimension",
        "K(W) of a direct sum is the direct sum of the K(W)",
        ksum.subspace.dim() as f64,
        Relation::Equal,
        dims as f64,
    ));
    out.push(
        Record::compare(
            id,
            "direct_sum_blocks",
            "K(W) of a direct sum is the direct sum of the K(W)",
            direct_sum_defect(&ksum, &singles, mc.n_points)?,
            Relation::Below,
            mc.direct_sum_tol,
        )
        .with_note(format!("masses {:?}", mc.direct_sum_masses)),
    );
    Ok(out)
}
