use std::sync::Arc;

use modlab::fock::{
    coherent, creation, field_operator, gamma, second_quantized_modular_check, sym_power_expand,
    sym_project, unitarity_defect, weyl_matrix, weyl_on_coherent, weyl_truncation_defect,
    CoherentState, DenseTensor, FockOperator, FockSpace, FockVector, OneParticleMap,
};
use modlab::hilbert::{inner, ComplexVector, ComplexVectorSpace, RealSubspace};
use modlab::linalg::{CMat, CVec};
use modlab::rng::{normal_cmat, normal_cvec, seeded, LabRng};
use modlab::standard::FiberBlock;
use modlab::{Complex64, Error};
use proptest::prelude::*;
use rand::SeedableRng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn vec_in(d: usize, coords: CVec) -> ComplexVector {
    ComplexVector::new(ComplexVectorSpace::new(d).unwrap(), coords).unwrap()
}

fn random_vec(rng: &mut LabRng, d: usize, norm: f64) -> ComplexVector {
    let v = normal_cvec(rng, d);
    let n = v.norm();
    vec_in(d, v * c(norm / n, 0.0))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Permanent by Ryser's formula.
fn permanent(m: &CMat) -> Complex64 {
    let n = m.nrows();
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut total = c(0.0, 0.0);
    for mask in 1u32..(1 << n) {
        let mut prod = c(1.0, 0.0);
        for r in 0..n {
            let mut s = c(0.0, 0.0);
            for col in 0..n {
                if mask & (1 << col) != 0 {
                    s += m[(r, col)];
                }
            }
            prod *= s;
        }
        let sign = if (n - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

fn expand(occ: &[u8]) -> Vec<usize> {
    occ.iter()
        .enumerate()
        .flat_map(|(k, &m)| std::iter::repeat_n(k, m as usize))
        .collect()
}

/// `⟨m|Γ(a)|n⟩ = perm(a[I_m, I_n]) / √(Πm! Πn!)`.
fn gamma_oracle(space: &Arc<FockSpace>, a: &CMat) -> CMat {
    let dim = space.dim();
    let mut out = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (mi, nj) = (space.occupations(i), space.occupations(j));
            let (ri, cj) = (expand(mi), expand(nj));
            if ri.len() != cj.len() {
                continue;
            }
            let sub = CMat::from_fn(ri.len(), cj.len(), |r, q| a[(ri[r], cj[q])]);
            let norm: f64 = mi.iter().chain(nj).map(|&x| factorial(x as usize)).product();
            out[(i, j)] = permanent(&sub) / norm.sqrt();
        }
    }
    out
}

#[test]
fn symmetrizer_examples() {
    let d = 2;
    let x = vec_in(d, CVec::from_vec(vec![c(0.3, 0.1), c(-1.0, 0.5)]));
    let t = DenseTensor::elementary(&[x.clone(), x.clone()]).unwrap();
    assert_eq!(t.sym_project(), t);

    let sp = ComplexVectorSpace::new(d).unwrap();
    let e1 = ComplexVector::unit(sp, 0).unwrap();
    let e2 = ComplexVector::unit(sp, 1).unwrap();
    let s = DenseTensor::elementary(&[e1.clone(), e2.clone()]).unwrap().sym_project();
    // Row-major layout: index 1 = e1⊗e2, index 2 = e2⊗e1.
    assert_eq!(s.data(), &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);

    let space = FockSpace::new(d, 3).unwrap();
    let lhs = sym_power_expand(&space, &[e1.clone(), e2.clone()]).unwrap();
    let sum = e1.add(&e2).unwrap();
    let by_hand = DenseTensor::elementary(&[sum.clone(), sum])
        .unwrap()
        .data()
        .iter()
        .zip(DenseTensor::elementary(&[e1.clone(), e1.clone()]).unwrap().data())
        .zip(DenseTensor::elementary(&[e2.clone(), e2.clone()]).unwrap().data())
        .map(|((a, b), q)| (a - b - q) * 0.5)
        .collect::<Vec<_>>();
    assert_eq!(by_hand, s.data());
    let rhs = sym_project(&space, &[e1.clone(), e2]).unwrap();
    assert!(lhs.sub(&rhs).unwrap().norm() < 1e-15);

    let single = sym_power_expand(&space, std::slice::from_ref(&x)).unwrap();
    assert!((single.level(1) - x.coords()).norm() < 1e-15);
    assert!(matches!(
        sym_project(&space, &[e1.clone(), e1.clone(), e1.clone(), e1]),
        Err(Error::Truncation { level: 4, cutoff: 3 })
    ));
}

#[test]
fn symmetrizer_contracts_norm_and_is_idempotent() {
    let mut rng = seeded(201);
    for _ in 0..20 {
        let xs: Vec<ComplexVector> = (0..3).map(|_| random_vec(&mut rng, 3, 1.0)).collect();
        let t = DenseTensor::elementary(&xs).unwrap();
        let s = t.sym_project();
        assert!(s.norm() <= t.norm() + 1e-14);
        assert!(s.transposition_defect() < 1e-15);
        let twice = s.sym_project();
        let diff: f64 = s.data().iter().zip(twice.data()).map(|(a, b)| (a - b).norm()).sum();
        assert!(diff < 1e-14);
    }
}

#[test]
fn symmetrizer_identity_brute_force() {
    let mut rng = seeded(202);
    for d in 1..=4 {
        let space = FockSpace::new(d, 5).unwrap();
        for n in 1..=5 {
            for _ in 0..5 {
                let xs: Vec<ComplexVector> = (0..n).map(|_| random_vec(&mut rng, d, 1.0)).collect();
                let a = sym_power_expand(&space, &xs).unwrap();
                let b = sym_project(&space, &xs).unwrap();
                assert!(a.sub(&b).unwrap().norm() < 1e-12, "d={d} n={n}");
            }
        }
    }
}

#[test]
fn coherent_overlap_is_taylor_partial_sum() {
    let mut rng = seeded(203);
    for d in 1..=3 {
        let space = FockSpace::new(d, 10).unwrap();
        for _ in 0..10 {
            let h = random_vec(&mut rng, d, 1.2);
            let k = random_vec(&mut rng, d, 0.9);
            let z = inner(&h, &k).unwrap();
            let partial: Complex64 = (0..=10).map(|n| z.powu(n as u32) / factorial(n)).sum();
            let got = coherent(&space, &h).unwrap().inner(&coherent(&space, &k).unwrap()).unwrap();
            assert!((got - partial).norm() < 1e-12);
        }
    }
    let space = FockSpace::new(2, 12).unwrap();
    let h = random_vec(&mut rng, 2, 1.0);
    let n2 = coherent(&space, &h).unwrap().norm().powi(2);
    let tail: f64 = (13..30).map(|n| 1.0 / factorial(n)).sum();
    assert!((n2 - std::f64::consts::E).abs() < 1e-9);
    assert!((std::f64::consts::E - n2 - tail).abs() < 1e-14);
}

#[test]
fn coherent_levels_are_tensor_powers() {
    let mut rng = seeded(204);
    let d = 3;
    let space = FockSpace::new(d, 4).unwrap();
    let h = random_vec(&mut rng, d, 0.7);
    let e = coherent(&space, &h).unwrap();
    for n in 0..=4 {
        let xs = vec![h.clone(); n];
        let power = if n == 0 {
            FockVector::vacuum(&space)
        } else {
            sym_project(&space, &xs).unwrap()
        };
        let expected = power.level(n) / c(factorial(n).sqrt(), 0.0);
        assert!((e.level(n) - expected).norm() < 1e-14);
    }
}

/// Central difference of order `n` of `t ↦ coherent(t h)` at zero.
fn central_difference(space: &Arc<FockSpace>, h: &ComplexVector, n: usize, step: f64) -> FockVector {
    let mut acc = FockVector::zeros(space);
    for k in 0..=n {
        let binom = factorial(n) / (factorial(k) * factorial(n - k));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let t = (n as f64 / 2.0 - k as f64) * step;
        let v = coherent(space, &h.scale(c(t, 0.0))).unwrap();
        acc = acc.add(&v.scale(c(sign * binom, 0.0))).unwrap();
    }
    acc.scale(c(step.powi(-(n as i32)), 0.0))
}

#[test]
fn derivatives_of_coherent_vectors() {
    let mut rng = seeded(205);
    let d = 2;
    let space = FockSpace::new(d, 8).unwrap();
    let h = random_vec(&mut rng, d, 1.0);
    let t = 1e-4;
    let first = coherent(&space, &h.scale(c(t, 0.0)))
        .unwrap()
        .sub(&FockVector::vacuum(&space))
        .unwrap()
        .scale(c(1.0 / t, 0.0));
    assert!((first.level(1) - h.coords()).norm() < 1e-12);
    assert!(first.truncate(1).sub(&first).unwrap().norm() < 2.0 * t);

    for n in 1..=4 {
        let xs = vec![h.clone(); n];
        let target = sym_project(&space, &xs).unwrap().scale(c(factorial(n).sqrt(), 0.0));
        let e1 = central_difference(&space, &h, n, 0.04).sub(&target).unwrap().norm();
        let e2 = central_difference(&space, &h, n, 0.02).sub(&target).unwrap().norm();
        assert!(e1 < 0.05, "n={n} e={e1}");
        // Second-order convergence: halving the step divides the error by ~4.
        assert!(e2 < e1 / 3.0, "n={n}: {e1} -> {e2}");
    }
}

#[test]
fn gamma_matches_permanent_oracle() {
    let mut rng = seeded(206);
    for (d, cutoff) in [(1, 6), (2, 5), (3, 4)] {
        let space = FockSpace::new(d, cutoff).unwrap();
        let a = normal_cmat(&mut rng, d, d);
        let g = gamma(&space, &OneParticleMap::Linear(a.clone())).unwrap();
        let oracle = gamma_oracle(&space, &a);
        assert!((g.matrix() - &oracle).norm() < 1e-12 * oracle.norm().max(1.0));
        let anti = gamma(&space, &OneParticleMap::Antilinear(a)).unwrap();
        assert!(anti.is_antilinear());
        assert!((anti.matrix() - oracle).norm() < 1e-12);
    }
}

#[test]
fn gamma_on_coherent_vectors() {
    let mut rng = seeded(207);
    for d in 1..=3 {
        let space = FockSpace::new(d, 10).unwrap();
        for _ in 0..5 {
            let a = normal_cmat(&mut rng, d, d) * c(0.5, 0.0);
            let h = random_vec(&mut rng, d, 1.0);
            let ah = vec_in(d, &a * h.coords());
            let lhs = gamma(&space, &OneParticleMap::Linear(a.clone()))
                .unwrap()
                .apply(&coherent(&space, &h).unwrap())
                .unwrap();
            let rhs = coherent(&space, &ah).unwrap();
            for n in 0..=10 {
                assert!((lhs.level(n) - rhs.level(n)).norm() < 1e-10);
            }
            let ach = vec_in(d, &a * h.conj().coords());
            let lhs = gamma(&space, &OneParticleMap::Antilinear(a))
                .unwrap()
                .apply(&coherent(&space, &h).unwrap())
                .unwrap();
            assert!(lhs.sub(&coherent(&space, &ach).unwrap()).unwrap().norm() < 1e-10);
        }
    }
}

#[test]
fn gamma_structure() {
    let mut rng = seeded(208);
    let d = 3;
    let space = FockSpace::new(d, 5).unwrap();
    let id = gamma(&space, &OneParticleMap::Linear(CMat::identity(d, d))).unwrap();
    assert_eq!(id.matrix(), FockOperator::identity(&space).matrix());

    let a = normal_cmat(&mut rng, d, d);
    let herm = (&a + a.adjoint()) * c(0.5, 0.0);
    let g = gamma(&space, &OneParticleMap::Linear(herm)).unwrap();
    assert!((g.matrix() - g.matrix().adjoint()).norm() < 1e-14 * g.matrix().norm());

    let u = normal_cmat(&mut rng, d, d).qr().q();
    let gu = gamma(&space, &OneParticleMap::Linear(u.clone())).unwrap();
    let n = space.dim();
    assert!((gu.matrix().adjoint() * gu.matrix() - CMat::identity(n, n)).norm() < 1e-12);
    let vac = FockVector::vacuum(&space);
    assert_eq!(gu.apply(&vac).unwrap().coeffs(), vac.coeffs());

    let anti = gamma(&space, &OneParticleMap::Antilinear(u)).unwrap();
    let x = FockVector::new(&space, normal_cvec(&mut rng, n)).unwrap();
    let y = FockVector::new(&space, normal_cvec(&mut rng, n)).unwrap();
    let lhs = anti.apply(&x).unwrap().inner(&anti.apply(&y).unwrap()).unwrap();
    assert!((lhs - x.inner(&y).unwrap().conj()).norm() < 1e-12);
}

#[test]
fn weyl_examples() {
    let space = FockSpace::new(1, 14).unwrap();
    let sp = space.one_particle();
    let zero = ComplexVector::zeros(sp);
    let n = space.dim();
    let w0 = weyl_matrix(&space, &zero).unwrap();
    assert!((w0.matrix() - CMat::identity(n, n)).norm() < 1e-15);

    let h = ComplexVector::unit(sp, 0).unwrap();
    let v = weyl_on_coherent(&space, &h, &zero).unwrap();
    assert!((v.coeffs()[0] - c((-0.25f64).exp(), 0.0)).norm() < 1e-15);

    let k = ComplexVector::new(sp, CVec::from_vec(vec![c(0.3, -0.4)])).unwrap();
    let same = weyl_on_coherent(&space, &zero, &k).unwrap();
    let frame = CoherentState::frame(&k).to_fock(&space).unwrap();
    assert!(same.sub(&frame).unwrap().norm() < 1e-15);

    // W(h) e^{-(i/√2)h} = exp(¼‖h‖²) Ω, against the matrix exponential.
    let minus_h = h.scale(c(-1.0, 0.0));
    let closed = weyl_on_coherent(&space, &h, &minus_h).unwrap();
    let mut expected = FockVector::vacuum(&space);
    expected = expected.scale(c(0.25f64.exp(), 0.0));
    assert!(closed.sub(&expected).unwrap().norm() < 1e-15);
    let input = CoherentState::frame(&minus_h).to_fock(&space).unwrap();
    let by_matrix = weyl_matrix(&space, &h).unwrap().apply(&input).unwrap();
    assert!(by_matrix.truncate(7).sub(&closed.truncate(7)).unwrap().norm() < 1e-8);
}

#[test]
fn weyl_vacuum_and_ccr_phase() {
    let space = FockSpace::new(1, 16).unwrap();
    let sp = space.one_particle();
    let h = ComplexVector::unit(sp, 0).unwrap();
    let k = h.scale(c(0.0, 1.0));
    assert!((inner(&h, &k).unwrap().im - 1.0).abs() < 1e-15);
    let vac = FockVector::vacuum(&space);
    let wh = weyl_matrix(&space, &h).unwrap();
    let wk = weyl_matrix(&space, &k).unwrap();
    let whk = weyl_matrix(&space, &h.add(&k).unwrap()).unwrap();
    let lhs = wh.apply(&wk.apply(&vac).unwrap()).unwrap().truncate(8);
    let rhs = whk.apply(&vac).unwrap().scale(Complex64::from_polar(1.0, -0.5)).truncate(8);
    assert!(lhs.sub(&rhs).unwrap().norm() < 1e-6);
    let closed = weyl_on_coherent(&space, &h, &ComplexVector::zeros(sp)).unwrap();
    assert!(wh.apply(&vac).unwrap().truncate(8).sub(&closed.truncate(8)).unwrap().norm() < 1e-6);
}

#[test]
fn field_operator_is_hermitian_and_creation_lowers_adjointly() {
    let mut rng = seeded(209);
    let space = FockSpace::new(2, 6).unwrap();
    let h = random_vec(&mut rng, 2, 1.0);
    let phi = field_operator(&space, &h).unwrap();
    assert_eq!(phi.matrix(), &phi.matrix().adjoint());
    assert_eq!(phi.structure(), modlab::fock::LevelStructure::Mixed);
    let cr = creation(&space, &h).unwrap();
    let vac = FockVector::vacuum(&space);
    let one = cr.apply(&vac).unwrap();
    assert!((one.level(1) - h.coords()).norm() < 1e-15);
}

#[test]
fn weyl_truncation_defect_decreases_with_cutoff() {
    let mut rng = seeded(210);
    let sp = ComplexVectorSpace::new(1).unwrap();
    let h = ComplexVector::unit(sp, 0).unwrap();
    let probes: Vec<ComplexVector> = (0..4).map(|_| random_vec(&mut rng, 1, 1.0)).collect();
    let mut prev = f64::INFINITY;
    for cutoff in [8, 12, 16] {
        let space = FockSpace::new(1, cutoff).unwrap();
        let defect = weyl_truncation_defect(&space, &h, &probes, cutoff / 2).unwrap();
        assert!(defect < prev, "N={cutoff}: {defect} !< {prev}");
        prev = defect;
        assert!(unitarity_defect(&space, &h, cutoff / 2).unwrap() < 1e-6);
    }
    assert!(prev < 1e-6);
}

#[test]
fn second_quantized_trivial_case() {
    let sp = ComplexVectorSpace::new(1).unwrap();
    let k = RealSubspace::real_coordinates(sp);
    let space = FockSpace::new(1, 10).unwrap();
    let one = ComplexVector::unit(sp, 0).unwrap();
    let i = c(0.0, 1.0);
    let s = modlab::standard::tomita_operator(&k).unwrap();
    let gs = gamma(&space, &OneParticleMap::from(&s)).unwrap();
    let lhs = gs.apply(&coherent(&space, &one.scale(i)).unwrap()).unwrap();
    let rhs = coherent(&space, &one.scale(-i)).unwrap();
    assert_eq!(lhs.coeffs(), rhs.coeffs());
}

#[test]
fn second_quantized_fiber_model() {
    let mut rng = seeded(211);
    let k = FiberBlock::canonical(std::f64::consts::PI / 3.0).unwrap().subspace();
    let report = second_quantized_modular_check(&k, 10, 12, 0.3, &mut rng).unwrap();
    assert!(report.max_residual() < 1e-7, "{report:?}");
    assert!(report.max_symplectic_pairing < 1e-12);

    let kp = k.symplectic_complement();
    for _ in 0..100 {
        let h = k.basis_matrix() * modlab::rng::normal_rvec(&mut rng, k.dim());
        let g = kp.basis_matrix() * modlab::rng::normal_rvec(&mut rng, kp.dim());
        let h = ComplexVector::from_real(k.space(), &h).unwrap();
        let g = ComplexVector::from_real(k.space(), &g).unwrap();
        assert!(inner(&h, &g).unwrap().im.abs() < 1e-12);
    }
}

#[test]
fn second_quantized_rejects_non_standard() {
    let sp = ComplexVectorSpace::new(2).unwrap();
    let e1 = ComplexVector::unit(sp, 0).unwrap();
    let k = RealSubspace::span(sp, &[e1.clone(), e1.scale(c(0.0, 1.0))]).unwrap();
    let mut rng = seeded(212);
    assert!(matches!(
        second_quantized_modular_check(&k, 4, 1, 0.1, &mut rng),
        Err(Error::NotStandard(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gamma_is_multiplicative(seed in any::<u64>(), d in 1usize..4, anti_a: bool, anti_b: bool) {
        let mut rng = LabRng::seed_from_u64(seed);
        let space = FockSpace::new(d, 5).unwrap();
        let am = normal_cmat(&mut rng, d, d);
        let bm = normal_cmat(&mut rng, d, d);
        let wrap = |m: CMat, anti: bool| if anti { OneParticleMap::Antilinear(m) } else { OneParticleMap::Linear(m) };
        let ga = gamma(&space, &wrap(am.clone(), anti_a)).unwrap();
        let gb = gamma(&space, &wrap(bm.clone(), anti_b)).unwrap();
        // (A∘C^a)(B∘C^b) = (A · C^a(B)) ∘ C^{a+b}.
        let prod = if anti_a { &am * bm.map(|z| z.conj()) } else { &am * &bm };
        let gab = gamma(&space, &wrap(prod, anti_a != anti_b)).unwrap();
        let lhs = ga.compose(&gb).unwrap();
        prop_assert_eq!(lhs.is_antilinear(), gab.is_antilinear());
        let scale = gab.matrix().norm().max(1.0);
        prop_assert!((lhs.matrix() - gab.matrix()).norm() < 1e-12 * scale);
    }

    #[test]
    fn coherent_overlap_levelwise(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = LabRng::seed_from_u64(seed);
        let space = FockSpace::new(d, 6).unwrap();
        let h = random_vec(&mut rng, d, 1.0);
        let k = random_vec(&mut rng, d, 1.0);
        let z = inner(&h, &k).unwrap();
        let (eh, ek) = (coherent(&space, &h).unwrap(), coherent(&space, &k).unwrap());
        for n in 0..=6 {
            let lvl = eh.level(n).dotc(&ek.level(n));
            prop_assert!((lvl - z.powu(n as u32) / factorial(n)).norm() < 1e-14);
        }
    }
}
