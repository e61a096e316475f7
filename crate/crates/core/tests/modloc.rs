use std::sync::{Arc, OnceLock};

use modlab::freefield::*;
use modlab::hilbert::RealSubspace;
use modlab::modloc::*;
use modlab::Error;

fn model() -> Arc<FreeFieldModel> {
    FreeFieldModel::new(1.0, DEFAULT_THETA_MAX, DEFAULT_N_POINTS).unwrap()
}

const RIGHT_CENTERS: [(f64, f64); 8] = [
    (0.3, 2.0),
    (-0.3, 2.0),
    (0.4, 2.8),
    (-0.4, 2.8),
    (0.6, 2.6),
    (-0.6, 2.6),
    (0.2, 1.0),
    (-0.2, 1.0),
];

const CONE_CENTERS: [(f64, f64); 6] =
    [(0.2, 0.0), (-0.2, 0.0), (0.15, 0.25), (-0.15, 0.25), (0.15, -0.25), (-0.15, -0.25)];

/// Bumps in time-mirrored pairs, right-wedge ones and their spatial mirrors.
fn wedge_pool() -> Vec<TestFunction2> {
    let mut v = Vec::new();
    for &(a, b) in &RIGHT_CENTERS {
        v.push(TestFunction2::bump([a, b], 0.4, Region2::right_wedge([0.0, -1.0])).unwrap());
        v.push(TestFunction2::bump([a, -b], 0.4, Region2::left_wedge([0.0, 1.0])).unwrap());
    }
    v
}

fn pool() -> Vec<TestFunction2> {
    let dc = Region2::double_cone([0.0, 0.0], 1.0);
    let mut v = wedge_pool();
    for &(a, b) in &CONE_CENTERS {
        v.push(TestFunction2::bump([a, b], 0.4, dc.clone()).unwrap());
    }
    v
}

fn family() -> WedgeFamily2 {
    WedgeFamily2::from_apexes(&[[0.0, -1.0], [0.0, 0.0], [0.0, 1.0]])
}

fn net() -> &'static LocalizedNet {
    static NET: OnceLock<LocalizedNet> = OnceLock::new();
    NET.get_or_init(|| {
        let rep = PoincareRep2::single(model());
        LocalizedNet::build(rep, family(), pool(), DEFAULT_FIXED_TOL, SpectralCutoff::default()).unwrap()
    })
}

fn report() -> &'static NetReport {
    static REPORT: OnceLock<NetReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let els = [Poincare2::translation([0.0, 0.5]), Poincare2::boost(0.2)];
        net_checks(net(), &els, 0.1).unwrap()
    })
}

fn probe(m: &Arc<FreeFieldModel>, c: f64, w: f64, f: f64) -> RepVector {
    RepVector { parts: vec![OneParticleVector::gaussian(m, c, w, f)] }
}

#[test]
fn six_wedges_with_nonzero_models() {
    let n = net();
    assert_eq!(n.models.len(), 6);
    for (w, m) in &n.models {
        assert!(m.subspace.dim() > 0, "{w:?}");
        assert!(m.report.excluded.is_empty(), "{w:?}: {:?}", m.report.excluded);
    }
}

#[test]
fn origin_wedge_tomita_is_the_free_field_one() {
    let m = model();
    let cutoff = SpectralCutoff::default();
    let t = wedge_tomita(&Region2::right_wedge([0.0, 0.0]), &cutoff).unwrap();
    let f = TestFunction2::bump([0.0, 3.0], 0.5, Region2::right_wedge([0.0, 0.0])).unwrap();
    let ef = embed(&f, &m);
    let a = t.apply(&RepVector { parts: vec![ef.clone()] }).unwrap();
    let b = tomita_origin(&ef, RIGHT_WEDGE_DIRECTION, &cutoff).unwrap();
    assert_eq!(a.parts[0].values(), b.values());
}

#[test]
fn translated_wedge_tomita_is_conjugated_by_translation() {
    let m = model();
    let cutoff = SpectralCutoff::default();
    let t = wedge_tomita(&Region2::right_wedge([0.0, 1.0]), &cutoff).unwrap();
    let a = [0.0, 1.0];
    for (c, w, f) in [(0.0, 1.0, 0.0), (0.4, 0.8, 0.9)] {
        let x = symmetric_band_project(&OneParticleVector::gaussian(&m, c, w, f), &cutoff);
        let x = translate(&x, a);
        let lhs = t.apply(&RepVector { parts: vec![x.clone()] }).unwrap();
        let back = translate(&x, [-a[0], -a[1]]);
        let rhs = translate(&tomita_origin(&back, RIGHT_WEDGE_DIRECTION, &cutoff).unwrap(), a);
        let d = lhs.parts[0].sub(&rhs).unwrap().norm() / rhs.norm();
        assert!(d < 1e-8, "{d:e}");
    }
}

#[test]
fn adjoint_relation_on_band_limited_probes() {
    let m = model();
    let cutoff = SpectralCutoff::default();
    for w in [Region2::right_wedge([0.0, 0.0]), Region2::right_wedge([0.0, 1.0]), Region2::left_wedge([0.0, -1.0])] {
        let t = wedge_tomita(&w, &cutoff).unwrap();
        let probes: Vec<RepVector> = [(0.0, 1.0, 0.0), (0.3, 0.8, 0.7), (-0.5, 0.9, -1.2)]
            .iter()
            .map(|&(c, s, f)| t.symmetric_band(&probe(&m, c, s, f)))
            .collect();
        let d = adjoint_relation_defect(&w, &probes, &cutoff).unwrap();
        assert!(d < 1e-6, "{w:?}: {d:e}");
    }
}

#[test]
fn right_wedge_bumps_lie_in_the_model() {
    let m = model();
    let rep = PoincareRep2::single(m.clone());
    let w = Region2::right_wedge([0.0, 0.0]);
    let fs: Vec<_> = [[0.0, 2.0], [0.3, 2.5], [-0.4, 2.2], [0.5, 3.0]]
        .iter()
        .map(|&c| TestFunction2::bump(c, 0.4, w.clone()).unwrap())
        .collect();
    let dict = dictionary_for(&rep, &fs);
    let k = localized_subspace(&rep, &w, &dict, DEFAULT_FIXED_TOL, &SpectralCutoff::default()).unwrap();
    for f in &fs {
        let v = embed(f, &m).realify();
        let r = (&v - k.subspace.project(&v)).norm() / v.norm();
        assert!(r < 1e-3, "{r:e}");
    }
}

#[test]
fn left_wedge_dictionary_for_the_right_wedge_is_empty() {
    let rep = PoincareRep2::single(model());
    let lw = Region2::left_wedge([0.0, 0.0]);
    let fs: Vec<_> = [[0.0, -2.0], [0.3, -2.5]]
        .iter()
        .map(|&c| TestFunction2::bump(c, 0.4, lw.clone()).unwrap())
        .collect();
    let dict = dictionary_for(&rep, &fs);
    let r = localized_subspace(&rep, &Region2::right_wedge([0.0, 0.0]), &dict, DEFAULT_FIXED_TOL, &SpectralCutoff::default());
    assert!(matches!(r, Err(Error::EmptyModel(_))), "{r:?}");
}

#[test]
fn zero_tolerance_keeps_exactly_fixed_probes() {
    // A small cap keeps s_W well conditioned, so symmetrized probes are fixed
    // to rounding.
    let m = model();
    let rep = PoincareRep2::single(m.clone());
    let cutoff = SpectralCutoff { cap: 1e2, ..SpectralCutoff::default() };
    let w = Region2::right_wedge([0.0, 0.0]);
    let t = wedge_tomita(&w, &cutoff).unwrap();
    let probes: Vec<RepVector> = [(0.0, 1.0, 0.0), (0.5, 1.5, 0.7), (-0.7, 2.0, -0.3), (1.2, 1.0, 1.1)]
        .iter()
        .map(|&(c, s, f)| t.symmetrize(&probe(&m, c, s, f)))
        .collect();
    let k = localized_subspace_of_vectors(&rep, &w, &probes, 0.0, &cutoff).unwrap();
    let mut cols = modlab::linalg::RMat::zeros(2 * m.n_points(), probes.len());
    for (c, p) in probes.iter().enumerate() {
        cols.set_column(c, &p.realify());
    }
    let span = RealSubspace::from_real_columns(rep.space(), &cols);
    assert_eq!(k.subspace.dim(), 4);
    assert!(k.subspace.distance(&span).unwrap() < 1e-9);
}

#[test]
fn empty_dictionary_gives_zero_model() {
    let rep = PoincareRep2::single(model());
    let k = localized_subspace(&rep, &Region2::right_wedge([0.0, 0.0]), &[], 0.1, &SpectralCutoff::default()).unwrap();
    assert_eq!(k.subspace.dim(), 0);
}

#[test]
fn model_is_closed_under_real_combinations() {
    let n = net();
    let w = Region2::right_wedge([0.0, -1.0]);
    let m = n.model(&w).unwrap();
    let t = wedge_tomita(&w, &n.cutoff).unwrap();
    let b = m.subspace.basis_matrix();
    let combo = b * modlab::linalg::RVec::from_fn(b.ncols(), |i, _| (i as f64 * 0.7).sin() + 0.2);
    assert!((&combo - m.subspace.project(&combo)).norm() < 1e-12 * combo.norm());
    let per_vector = m.fixed_residual_under(&t, |v| v.clone()).unwrap();
    assert!(per_vector < DEFAULT_FIXED_TOL, "{per_vector:e}");
}

#[test]
fn isotony_with_itself_is_zero() {
    let n = net();
    for (w, m) in &n.models {
        assert!(m.subspace.inclusion_residual(&m.subspace).unwrap() < 1e-14, "{w:?}");
    }
}

#[test]
fn right_wedge_at_apex_one_sits_in_origin_wedge() {
    let r = report();
    let rec = r
        .isotony
        .iter()
        .find(|p| p.first == Region2::right_wedge([0.0, 1.0]) && p.second == Region2::right_wedge([0.0, 0.0]))
        .unwrap();
    assert!(rec.residual < 1e-3, "{rec:?}");
}

#[test]
fn isotony_duality_covariance() {
    let r = report();
    assert!(r.isotony.len() >= 6);
    assert_eq!(r.duality.len(), 6);
    assert_eq!(r.covariance.len(), 12);
    assert!(r.max_isotony() < 1e-3, "{:e}", r.max_isotony());
    assert!(r.max_duality() < 1e-3, "{:e}", r.max_duality());
    assert!(r.max_covariance() < 1e-3, "{:e}", r.max_covariance());
}

#[test]
fn covariance_under_vertical_translation() {
    let r = report();
    for c in r.covariance.iter().filter(|c| c.element == Poincare2::translation([0.0, 0.5])) {
        assert!(c.residual < 1e-3, "{c:?}");
    }
}

#[test]
fn modular_group_reflection_and_standardness() {
    for w in &report().wedges {
        assert!(w.bw_invariance < DEFAULT_FIXED_TOL, "{w:?}");
        assert!(w.reflection < 1e-6, "{w:?}");
        assert_eq!(w.k_cap_ik, 0, "{w:?}");
    }
}

#[test]
fn double_cone_contains_cone_embeddings() {
    let dc = doublecone_space(net(), &Region2::double_cone([0.0, 0.0], 1.0)).unwrap();
    assert_eq!(dc.members, CONE_CENTERS.len());
    assert!(dc.subspace.dim() >= CONE_CENTERS.len());
    assert!(dc.residual < 1e-2, "{:e}", dc.residual);
    assert!(dc.warning.is_none());
}

#[test]
fn degenerate_intersection_is_the_wedge_space() {
    let n = net();
    let w = Region2::right_wedge([0.0, 0.0]);
    let k = intersect_wedges(n, &w, &w).unwrap();
    assert!(k.distance(&n.model(&w).unwrap().subspace).unwrap() < 1e-9);
}

#[test]
fn double_cone_needs_its_wedges() {
    let r = doublecone_space(net(), &Region2::double_cone([0.0, 5.0], 1.0));
    assert!(matches!(r, Err(Error::Usage(_))));
}

#[test]
fn disjoint_dictionaries_give_trivial_intersection() {
    let rep = PoincareRep2::single(model());
    let fam = WedgeFamily2::from_apexes(&[[0.0, -1.0], [0.0, 1.0]]);
    let net = LocalizedNet::build(rep, fam, wedge_pool(), DEFAULT_FIXED_TOL, SpectralCutoff::default()).unwrap();
    let dc = doublecone_space(&net, &Region2::double_cone([0.0, 0.0], 1.0)).unwrap();
    assert_eq!(dc.subspace.dim(), 0);
    assert!(dc.warning.is_some());
}

#[test]
fn direct_sum_is_blockwise() {
    let w = Region2::right_wedge([0.0, -1.0]);
    let fs: Vec<_> = wedge_pool().into_iter().filter(|f| f.supported_in(&w)).collect();
    let cutoff = SpectralCutoff::default();
    let sum = PoincareRep2::direct_sum(&[1.0, 2.0], DEFAULT_THETA_MAX, DEFAULT_N_POINTS).unwrap();
    let ksum = localized_subspace(&sum, &w, &dictionary_for(&sum, &fs), DEFAULT_FIXED_TOL, &cutoff).unwrap();
    let singles: Vec<_> = [1.0, 2.0]
        .iter()
        .map(|&m| {
            let rep = PoincareRep2::single(FreeFieldModel::new(m, DEFAULT_THETA_MAX, DEFAULT_N_POINTS).unwrap());
            localized_subspace(&rep, &w, &dictionary_for(&rep, &fs), DEFAULT_FIXED_TOL, &cutoff).unwrap()
        })
        .collect();
    assert_eq!(ksum.subspace.dim(), singles.iter().map(|k| k.subspace.dim()).sum::<usize>());
    let d = direct_sum_defect(&ksum, &singles, DEFAULT_N_POINTS).unwrap();
    assert!(d < 1e-10, "{d:e}");
}

#[test]
fn duality_of_complementary_models() {
    let n = net();
    let w = Region2::right_wedge([0.0, 0.0]);
    let k = &n.model(&w).unwrap().subspace;
    let kp = &n.model(&w.causal_complement()).unwrap().subspace;
    assert!(k.symplectic_pairing(kp).unwrap() < 1e-6);
    assert!(duality_residual(k, kp).unwrap() < 1e-3);
}

#[test]
fn export_is_serializable() {
    let e = net().export(None);
    assert_eq!(e.wedges.len(), 6);
    let text = serde_json::to_string(&e).unwrap();
    assert!(text.contains("dictionary_hash"));
    let hashes: std::collections::BTreeSet<_> = e.wedges.iter().map(|w| w.dictionary_hash.clone()).collect();
    assert_eq!(hashes.len(), 6);
}

#[test]
fn dictionary_hash_is_order_sensitive_and_stable() {
    let rep = PoincareRep2::single(model());
    let fs = wedge_pool();
    let a = dictionary_hash(&dictionary_for(&rep, &fs));
    let b = dictionary_hash(&dictionary_for(&rep, &fs));
    assert_eq!(a, b);
    let mut rev = fs.clone();
    rev.reverse();
    assert_ne!(a, dictionary_hash(&dictionary_for(&rep, &rev)));
}

#[test]
fn family_must_be_closed() {
    assert!(WedgeFamily2::new(vec![Region2::right_wedge([0.0, 0.0])]).is_err());
    assert!(WedgeFamily2::new(vec![Region2::double_cone([0.0, 0.0], 1.0)]).is_err());
}
