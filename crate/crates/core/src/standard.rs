//! Standard subspaces: Tomita operator, polar decomposition `s = j δ^{1/2}`,
//! modular flow and the angle (fiber) normal form.

use nalgebra::{LU, SVD};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    ComplexVector, ComplexVectorSpace, Linearity, RealLinearMap, RealSubspace, SUBSPACE_TOL,
};
use crate::linalg::{self, op_norm, realify_vec, CMat, CVec, RMat};
use crate::rng::normal_rmat;

/// Singular value threshold for deciding `K ∩ iK = {0}`.
pub const STANDARD_TOL: f64 = 1e-9;
/// Eigenvalues of δ within this distance of 1, scaled by `max(1, λ_max)`,
/// belong to the fixed part.
pub const FIXED_EIGEN_TOL: f64 = 1e-10;
/// Lower clamp for the spectrum of δ.
pub const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StandardnessCertificate {
    pub dim_k_cap_ik: usize,
    pub dim_k_plus_ik: usize,
    pub ambient_real_dim: usize,
    pub standard: bool,
}

pub fn is_standard(k: &RealSubspace) -> StandardnessCertificate {
    let ik = k.times_i();
    let cap = k.intersection(&ik, STANDARD_TOL).map(|c| c.dim()).unwrap_or(0);
    let sum = k.sum(&ik).map(|s| s.dim()).unwrap_or(0);
    let ambient = k.space().real_dim();
    StandardnessCertificate {
        dim_k_cap_ik: cap,
        dim_k_plus_ik: sum,
        ambient_real_dim: ambient,
        standard: cap == 0 && sum == ambient,
    }
}

/// A generic (hence standard) real subspace of real dimension `d` in C^d.
pub fn random_standard_subspace<R: Rng + ?Sized>(space: ComplexVectorSpace, rng: &mut R) -> RealSubspace {
    let d = space.dim();
    loop {
        let k = RealSubspace::from_real_columns(space, &normal_rmat(rng, 2 * d, d));
        if is_standard(&k).standard {
            return k;
        }
    }
}

/// `U (K0 ⊕ R^m)` with `K0` generic in `C^{d-m}` and `U` a random unitary.
/// Returns the subspace and its built-in real part `U R^m`. The intersection
/// with the symplectic complement has real dimension `m`, plus one when
/// `d - m` is odd, since the spectrum of δ pairs λ with 1/λ.
pub fn random_standard_with_fixed_part<R: Rng + ?Sized>(
    space: ComplexVectorSpace,
    m: usize,
    rng: &mut R,
) -> Result<(RealSubspace, RealSubspace)> {
    let d = space.dim();
    if m > d {
        return Err(Error::Usage(format!("fixed part {m} exceeds dimension {d}")));
    }
    let mut cols = RMat::zeros(2 * d, d);
    if d > m {
        let q0 = random_standard_subspace(ComplexVectorSpace::new(d - m)?, rng)
            .basis_matrix()
            .clone();
        for c in 0..d - m {
            for r in 0..d - m {
                cols[(r, c)] = q0[(r, c)];
                cols[(d + r, c)] = q0[(d - m + r, c)];
            }
        }
    }
    let mut fixed = RMat::zeros(2 * d, m);
    for c in 0..m {
        cols[(d - m + c, d - m + c)] = 1.0;
        fixed[(d - m + c, c)] = 1.0;
    }
    let u = linalg::realify_linear(&crate::rng::normal_cmat(rng, d, d).qr().q());
    Ok((
        RealSubspace::from_real_columns(space, &(&u * cols)),
        RealSubspace::from_real_columns(space, &(&u * fixed)),
    ))
}

/// `s_K : h + ik ↦ h - ik` on `K + iK`.
pub fn tomita_operator(k: &RealSubspace) -> Result<RealLinearMap> {
    let cert = is_standard(k);
    if !cert.standard {
        return Err(Error::NotStandard(cert));
    }
    let q = k.basis_matrix();
    let n = q.nrows();
    let d = q.ncols();
    let mut t = RMat::zeros(n, n);
    t.columns_mut(0, d).copy_from(q);
    t.columns_mut(d, d).copy_from(&linalg::times_i(q));
    let mut td = t.clone();
    td.columns_mut(d, d).neg_mut();
    // S T = T D, solved as Tᵀ Sᵀ = (T D)ᵀ.
    let lu = LU::new(t.transpose());
    let st = lu
        .solve(&td.transpose())
        .ok_or_else(|| Error::Numeric("basis of K + iK is singular".into()))?;
    RealLinearMap::new(k.space(), st.transpose(), Linearity::Antilinear)
}

#[derive(Clone, Debug)]
pub struct ModularData {
    pub s: RealLinearMap,
    pub j: RealLinearMap,
    pub delta: RealLinearMap,
    pub log_delta_spectrum: Vec<(f64, usize)>,
    pub condition_number: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

/// Operator-norm residuals of the polar decomposition identities, each
/// relative to the norm of the operator it is compared against.
#[derive(Clone, Debug, Serialize)]
pub struct ModularResiduals {
    pub polar: f64,
    pub j_involution: f64,
    pub j_antiunitary: f64,
    pub j_delta_j: f64,
    pub j_delta_half: f64,
    pub delta_min_eigenvalue: f64,
}

pub fn modular_data(s: &RealLinearMap) -> Result<ModularData> {
    ModularData::new(s)
}

impl ModularData {
    pub fn new(s: &RealLinearMap) -> Result<Self> {
        if s.linearity() != Linearity::Antilinear {
            return Err(Error::Usage("modular data needs an antilinear Tomita operator".into()));
        }
        let space = s.space();
        // With s = A∘C and A = W Σ V*, δ = s*s = conj(V) Σ² Vᵀ and
        // j = s δ^{-1/2} = (W V*)∘C.
        let a = s.complex_matrix();
        let svd = SVD::new(a, true, true);
        let w = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let sv = svd.singular_values;
        let mut order: Vec<usize> = (0..space.dim()).collect();
        order.sort_by(|&x, &y| sv[x].total_cmp(&sv[y]));
        let smax = sv.max();
        let smin = sv.min();
        if !smax.is_finite() || smin <= EIGEN_FLOOR * smax {
            return Err(Error::Numeric(format!(
                "s is singular: singular values range over [{smin:.3e}, {smax:.3e}]"
            )));
        }
        let eigenvalues: Vec<f64> = order.iter().map(|&i| (sv[i] * sv[i]).max(EIGEN_FLOOR)).collect();
        let mut eigenvectors = CMat::zeros(space.dim(), space.dim());
        for (c, &i) in order.iter().enumerate() {
            eigenvectors.set_column(c, &vt.row(i).transpose());
        }
        let condition_number = eigenvalues[eigenvalues.len() - 1] / eigenvalues[0];
        let j = RealLinearMap::antilinear(space, &(w * vt))?;
        let mut md = Self {
            s: s.clone(),
            j,
            delta: RealLinearMap::identity(space),
            log_delta_spectrum: group_spectrum(&eigenvalues),
            condition_number,
            eigenvalues,
            eigenvectors,
        };
        md.delta = md.spectral(|l| Complex64::new(l, 0.0));
        Ok(md)
    }

    fn spectral(&self, f: impl Fn(f64) -> Complex64) -> RealLinearMap {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (c, &l) in self.eigenvalues.iter().enumerate() {
            let z = f(l);
            for r in 0..u.nrows() {
                scaled[(r, c)] *= z;
            }
        }
        let m = scaled * u.adjoint();
        RealLinearMap::complex_linear(self.s.space(), &m).expect("square matrix of matching size")
    }

    /// Eigenvalues of δ in ascending order, after clamping.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors of δ, columns matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    /// `δ^p` for real `p`.
    pub fn delta_power(&self, p: f64) -> RealLinearMap {
        self.spectral(|l| Complex64::new(l.powf(p), 0.0))
    }

    pub fn log_delta(&self) -> RealLinearMap {
        self.spectral(|l| Complex64::new(l.ln(), 0.0))
    }

    /// `δ^{it}`.
    pub fn modular_flow(&self, t: f64) -> RealLinearMap {
        self.spectral(|l| Complex64::from_polar(1.0, t * l.ln()))
    }

    pub fn residuals(&self) -> ModularResiduals {
        let n = self.s.space().real_dim();
        let id = RMat::identity(n, n);
        let jm = self.j.matrix();
        let half = self.delta_power(0.5);
        let polar = op_norm(&(self.s.matrix() - jm * half.matrix())) / op_norm(self.s.matrix());
        let j_involution = op_norm(&(jm * jm - &id));
        let j_antiunitary = op_norm(&(jm.transpose() * jm - &id));
        let inv = self.delta_power(-1.0);
        let j_delta_j = op_norm(&(jm * self.delta.matrix() * jm - inv.matrix())) / op_norm(inv.matrix());
        let minus_half = self.delta_power(-0.5);
        let j_delta_half = op_norm(&(jm * half.matrix() - minus_half.matrix() * jm))
            / op_norm(half.matrix()).max(op_norm(minus_half.matrix()));
        ModularResiduals {
            polar,
            j_involution,
            j_antiunitary,
            j_delta_j,
            j_delta_half,
            delta_min_eigenvalue: self.eigenvalues[0],
        }
    }
}

/// `δ^{it}` for the modular data `md`.
pub fn modular_flow(md: &ModularData, t: f64) -> RealLinearMap {
    md.modular_flow(t)
}

fn group_spectrum(eigenvalues: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &l in eigenvalues {
        let x = l.ln();
        match out.last_mut() {
            Some((v, m)) if (x - *v).abs() <= 1e-9 * (1.0 + v.abs()) => *m += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// One two-dimensional block of the angle normal form. `basis = [e, j e]`
/// with `δ e = tan²(θ/2) e`.
#[derive(Clone, Debug)]
pub struct FiberBlock {
    pub theta: f64,
    pub basis: [ComplexVector; 2],
    pub y_plus: ComplexVector,
    pub y_minus: ComplexVector,
}

impl FiberBlock {
    fn from_frame(theta: f64, e: ComplexVector, je: ComplexVector) -> Self {
        let (sn, cs) = (theta / 2.0).sin_cos();
        let i = Complex64::new(0.0, 1.0);
        let y_plus = e
            .scale(Complex64::new(cs, 0.0))
            .add(&je.scale(Complex64::new(sn, 0.0)))
            .expect("same space");
        let y_minus = e
            .scale(i * cs)
            .sub(&je.scale(i * sn))
            .expect("same space");
        Self {
            theta,
            basis: [e, je],
            y_plus,
            y_minus,
        }
    }

    /// The block in C² with frame `(e1, e2)`.
    pub fn canonical(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Usage(format!("fiber angle {theta} outside (0, π/2)")));
        }
        let space = ComplexVectorSpace::new(2)?;
        Ok(Self::from_frame(
            theta,
            ComplexVector::unit(space, 0)?,
            ComplexVector::unit(space, 1)?,
        ))
    }

    /// `(tan²(θ/2), tan⁻²(θ/2))`.
    pub fn delta_eigenvalues(&self) -> (f64, f64) {
        let t = (self.theta / 2.0).tan().powi(2);
        (t, 1.0 / t)
    }

    /// `span_R{y_+, y_-}`.
    pub fn subspace(&self) -> RealSubspace {
        RealSubspace::span(self.y_plus.space(), &[self.y_plus.clone(), self.y_minus.clone()])
            .expect("same space")
    }
}

#[derive(Clone, Debug)]
pub struct Fiberization {
    pub blocks: Vec<FiberBlock>,
    pub fixed_part: RealSubspace,
}

impl Fiberization {
    /// Real-dimension-weighted angle list: each block angle twice and π/2
    /// once per real dimension of the fixed part, ascending.
    pub fn angles(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.blocks.iter().flat_map(|b| [b.theta, b.theta]).collect();
        out.extend(std::iter::repeat_n(std::f64::consts::FRAC_PI_2, self.fixed_part.dim()));
        out.sort_by(f64::total_cmp);
        out
    }

    /// `(j, δ)` reassembled from the blocks and the fixed part.
    pub fn reconstruct(&self) -> (RealLinearMap, RealLinearMap) {
        let space = self.fixed_part.space();
        let n = space.real_dim();
        let mut j = RMat::zeros(n, n);
        let mut delta = RMat::zeros(n, n);
        let i = Complex64::new(0.0, 1.0);
        for b in &self.blocks {
            let (l, linv) = b.delta_eigenvalues();
            let e = b.basis[0].coords();
            let je = b.basis[1].coords();
            let ve = realify_vec(e);
            let vie = realify_vec(&(e * i));
            let vje = realify_vec(je);
            let vije = realify_vec(&(je * i));
            delta += (&ve * ve.transpose() + &vie * vie.transpose()) * l;
            delta += (&vje * vje.transpose() + &vije * vije.transpose()) * linv;
            j += &vje * ve.transpose() + &ve * vje.transpose();
            j -= &vije * vie.transpose() + &vie * vije.transpose();
        }
        let pf = self.fixed_part.projector();
        let pif = self.fixed_part.times_i().projector();
        delta += &pf + &pif;
        j += &pf - &pif;
        (
            RealLinearMap::new(space, j, Linearity::Antilinear).expect("square"),
            RealLinearMap::new(space, delta, Linearity::ComplexLinear).expect("square"),
        )
    }
}

/// The angle normal form of a standard subspace.
///
/// Each eigenvector `e` of δ with eigenvalue below 1 is paired with its
/// partner `j e`; the eigenvalue-one part contributes `K ∩ K′`.
pub fn fiberize(k: &RealSubspace) -> Result<Fiberization> {
    let md = modular_data(&tomita_operator(k)?)?;
    fiberize_from(&md)
}

pub fn fiberize_from(md: &ModularData) -> Result<Fiberization> {
    let space = md.s.space();
    let u = md.eigenvectors();
    let mut blocks = Vec::new();
    let mut fixed_cols: Vec<CVec> = Vec::new();
    let lmax = md.eigenvalues().last().copied().unwrap_or(1.0);
    let tol = FIXED_EIGEN_TOL * lmax.max(1.0);
    for (c, &l) in md.eigenvalues().iter().enumerate() {
        let e = ComplexVector::new(space, u.column(c).into_owned())?;
        if (l - 1.0).abs() <= tol {
            fixed_cols.push(e.coords().clone());
        } else if l < 1.0 {
            let je = md.j.apply(&e)?;
            let theta = 2.0 * l.sqrt().atan();
            blocks.push(FiberBlock::from_frame(theta, e, je));
        }
    }
    let n = space.real_dim();
    let mut e1 = RMat::zeros(n, 2 * fixed_cols.len());
    let i = Complex64::new(0.0, 1.0);
    for (c, v) in fixed_cols.iter().enumerate() {
        e1.set_column(2 * c, &realify_vec(v));
        e1.set_column(2 * c + 1, &realify_vec(&(v * i)));
    }
    let sym = (RMat::identity(n, n) + md.j.matrix()) * &e1;
    let fixed = linalg::column_range(&sym, 1e-6);
    let fixed_part = RealSubspace::from_real_columns(space, &fixed);
    if fixed_part.dim() != fixed_cols.len() {
        return Err(Error::Numeric(format!(
            "fixed part has real dimension {} but δ has {} unit eigenvalues",
            fixed_part.dim(),
            fixed_cols.len()
        )));
    }
    Ok(Fiberization { blocks, fixed_part })
}

/// `{x : j x = x, δ x = x}` computed directly from the modular data.
pub fn fixed_points_of_j_and_delta(md: &ModularData) -> RealSubspace {
    let space = md.s.space();
    let n = space.real_dim();
    let id = RMat::identity(n, n);
    let mut stacked = RMat::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&(md.j.matrix() - &id));
    stacked.rows_mut(n, n).copy_from(&(md.delta.matrix() - &id));
    let (v, _) = linalg::small_right_singular(&stacked, SUBSPACE_TOL);
    RealSubspace::from_real_columns(space, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use std::f64::consts::PI;

    #[test]
    fn real_coordinates_are_standard_with_conjugation() {
        let space = ComplexVectorSpace::new(3).unwrap();
        let k = RealSubspace::real_coordinates(space);
        assert!(is_standard(&k).standard);
        let s = tomita_operator(&k).unwrap();
        assert!(s.distance(&RealLinearMap::conjugation(space)).unwrap() < 1e-14);
        let md = modular_data(&s).unwrap();
        assert!(md.j.distance(&RealLinearMap::conjugation(space)).unwrap() < 1e-14);
        assert!(md.delta.distance(&RealLinearMap::identity(space)).unwrap() < 1e-14);
        let fib = fiberize(&k).unwrap();
        assert!(fib.blocks.is_empty());
        assert!(fib.fixed_part.equals(&k, 1e-10).unwrap());
    }

    #[test]
    fn complex_line_is_not_standard() {
        let space = ComplexVectorSpace::new(2).unwrap();
        let e1 = ComplexVector::unit(space, 0).unwrap();
        let k = RealSubspace::span(space, &[e1.clone(), e1.scale(Complex64::new(0.0, 1.0))]).unwrap();
        let cert = is_standard(&k);
        assert!(!cert.standard);
        assert_eq!(cert.dim_k_plus_ik, 2);
        assert!(matches!(tomita_operator(&k), Err(Error::NotStandard(_))));
    }

    #[test]
    fn pi_over_three_fiber() {
        let block = FiberBlock::canonical(PI / 3.0).unwrap();
        let k = block.subspace();
        assert!(is_standard(&k).standard);
        let md = modular_data(&tomita_operator(&k).unwrap()).unwrap();
        let ev = md.eigenvalues();
        assert!((ev[0] - 1.0 / 3.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
        let spec = &md.log_delta_spectrum;
        assert_eq!(spec.len(), 2);
        assert!((spec[0].0 + 3f64.ln()).abs() < 1e-12 && (spec[1].0 - 3f64.ln()).abs() < 1e-12);
        let fib = fiberize(&k).unwrap();
        assert_eq!(fib.blocks.len(), 1);
        assert!((fib.blocks[0].theta - PI / 3.0).abs() < 1e-10);
        assert!(fib.blocks[0].subspace().equals(&k, 1e-10).unwrap());
    }

    #[test]
    fn flow_mixes_y_plus_and_minus() {
        let theta = PI / 3.0;
        let block = FiberBlock::canonical(theta).unwrap();
        let md = modular_data(&tomita_operator(&block.subspace()).unwrap()).unwrap();
        let t = 0.37;
        let w = (theta / 2.0).tan().powi(2).ln() * t;
        let lhs = md.modular_flow(t).apply(&block.y_plus).unwrap();
        // δ^{it} y_+ = cos(w) y_+ + sin(w) y_-, δ^{it} y_- = cos(w) y_- - sin(w) y_+.
        let rhs = block
            .y_plus
            .scale(Complex64::new(w.cos(), 0.0))
            .add(&block.y_minus.scale(Complex64::new(w.sin(), 0.0)))
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
        let lhs = md.modular_flow(t).apply(&block.y_minus).unwrap();
        let rhs = block
            .y_minus
            .scale(Complex64::new(w.cos(), 0.0))
            .sub(&block.y_plus.scale(Complex64::new(w.sin(), 0.0)))
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
    }

    #[test]
    fn random_standard_invariants() {
        let mut rng = seeded(11);
        let space = ComplexVectorSpace::new(6).unwrap();
        let k = random_standard_subspace(space, &mut rng);
        let s = tomita_operator(&k).unwrap();
        let s2 = s.compose(&s).unwrap();
        assert!(s2.distance(&RealLinearMap::identity(space)).unwrap() < 1e-10);
        let md = modular_data(&s).unwrap();
        let r = md.residuals();
        assert!(r.polar < 1e-10 && r.j_involution < 1e-10 && r.j_delta_j < 1e-10, "{r:?}");
        let a = md.modular_flow(0.4).compose(&md.modular_flow(-1.1)).unwrap();
        assert!(a.distance(&md.modular_flow(-0.7)).unwrap() < 1e-11);
        assert!(md.modular_flow(0.0).distance(&RealLinearMap::identity(space)).unwrap() < 1e-12);
    }
}
