//! Modular localization: wedge spaces `K_W = {h : s_W h = h}` built from the
//! representation alone, with `s_W = j_W δ_W^{1/2}`, `j_W` the reflection
//! through the wedge apex and `δ_W^{it}` the wedge boosts. Finite models are
//! fixed points of `s_W - 1` on the span of a probe dictionary.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::freefield::{
    band_project, embed, symmetric_band_project, modular_half_diagnostic, shift, translate, FreeFieldModel,
    OneParticleVector, Poincare2, Region2, SpectralCutoff, TestFunction2, RIGHT_WEDGE_DIRECTION,
};
use crate::hilbert::{ComplexVectorSpace, RealSubspace};
use crate::linalg::{column_range, small_right_singular, RMat, RVec, TruncatedSvd};

/// Default singular-value threshold for fixed points of `s_W - 1`.
pub const DEFAULT_FIXED_TOL: f64 = 1e-2;
/// Pairings at or below this (relative to unit vectors) count as zero.
pub const PAIRING_TOL: f64 = 1e-8;
/// Principal-angle tolerance for intersecting wedge models.
pub const INTERSECTION_TOL: f64 = 1e-6;
const DICTIONARY_RANK_TOL: f64 = 1e-10;
const WELL_CONDITIONED: f64 = 10.0;

/// A finite direct sum of mass-`m_k` free-field representations on a common
/// rapidity grid, acting component-wise.
#[derive(Clone, Debug)]
pub struct PoincareRep2 {
    summands: Vec<Arc<FreeFieldModel>>,
}

impl PoincareRep2 {
    pub fn new(summands: Vec<Arc<FreeFieldModel>>) -> Result<Self> {
        let first = summands
            .first()
            .ok_or_else(|| Error::Usage("representation needs at least one summand".into()))?;
        if summands.iter().any(|m| m.grid() != first.grid()) {
            return Err(Error::Usage("direct summands must share the rapidity grid".into()));
        }
        Ok(Self { summands })
    }

    pub fn single(model: Arc<FreeFieldModel>) -> Self {
        Self { summands: vec![model] }
    }

    pub fn direct_sum(masses: &[f64], theta_max: f64, n_points: usize) -> Result<Self> {
        let summands = masses
            .iter()
            .map(|&m| FreeFieldModel::new(m, theta_max, n_points))
            .collect::<Result<Vec<_>>>()?;
        Self::new(summands)
    }

    pub fn summands(&self) -> &[Arc<FreeFieldModel>] {
        &self.summands
    }

    pub fn masses(&self) -> Vec<f64> {
        self.summands.iter().map(|m| m.mass()).collect()
    }

    fn n(&self) -> usize {
        self.summands[0].n_points()
    }

    /// Complex dimension `k × n_points`.
    pub fn space(&self) -> ComplexVectorSpace {
        ComplexVectorSpace::new(self.summands.len() * self.n()).expect("nonempty grid")
    }

    pub fn zeros(&self) -> RepVector {
        RepVector {
            parts: self.summands.iter().map(OneParticleVector::zeros).collect(),
        }
    }

    /// `Ef` placed in summand `k`.
    pub fn embed_block(&self, f: &TestFunction2, k: usize) -> Result<RepVector> {
        if k >= self.summands.len() {
            return Err(Error::Usage(format!("summand {k} out of range")));
        }
        let mut v = self.zeros();
        v.parts[k] = embed(f, &self.summands[k]);
        Ok(v)
    }

    pub fn act(&self, g: &Poincare2, v: &RepVector) -> Result<RepVector> {
        v.try_map(|p| crate::freefield::poincare_act(g, p))
    }

    pub fn from_real(&self, v: &RVec) -> Result<RepVector> {
        let (k, n) = (self.summands.len(), self.n());
        check_dim(2 * k * n, v.len())?;
        let parts = self
            .summands
            .iter()
            .enumerate()
            .map(|(b, m)| {
                let mut r = RVec::zeros(2 * n);
                r.rows_mut(0, n).copy_from(&v.rows(b * n, n));
                r.rows_mut(n, n).copy_from(&v.rows(k * n + b * n, n));
                OneParticleVector::from_real(m, &r)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RepVector { parts })
    }
}

/// A vector of a direct-sum representation, one component per summand.
#[derive(Clone, Debug, PartialEq)]
pub struct RepVector {
    pub parts: Vec<OneParticleVector>,
}

impl RepVector {
    pub fn map(&self, f: impl Fn(&OneParticleVector) -> OneParticleVector) -> Self {
        Self { parts: self.parts.iter().map(f).collect() }
    }

    pub fn try_map(&self, f: impl Fn(&OneParticleVector) -> Result<OneParticleVector>) -> Result<Self> {
        Ok(Self { parts: self.parts.iter().map(f).collect::<Result<Vec<_>>>()? })
    }

    pub fn norm(&self) -> f64 {
        self.parts.iter().map(|p| p.norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<num_complex::Complex64> {
        check_dim(self.parts.len(), other.parts.len())?;
        let mut s = num_complex::Complex64::new(0.0, 0.0);
        for (a, b) in self.parts.iter().zip(&other.parts) {
            s += a.inner(b)?;
        }
        Ok(s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.parts.len(), other.parts.len())?;
        Ok(Self {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.parts.len(), other.parts.len())?;
        Ok(Self {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.add(b))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Realification of the concatenated coordinates: all real parts, then
    /// all imaginary parts.
    pub fn realify(&self) -> RVec {
        let n = self.parts[0].values().len();
        let k = self.parts.len();
        let mut out = RVec::zeros(2 * k * n);
        for (b, p) in self.parts.iter().enumerate() {
            for (j, v) in p.values().iter().enumerate() {
                out[b * n + j] = v.re;
                out[k * n + b * n + j] = v.im;
            }
        }
        out
    }
}

fn wedge_parts(w: &Region2) -> Result<([f64; 2], i8)> {
    match w {
        Region2::RightWedge { apex } => Ok((*apex, RIGHT_WEDGE_DIRECTION)),
        Region2::LeftWedge { apex } => Ok((*apex, -RIGHT_WEDGE_DIRECTION)),
        other => Err(Error::Usage(format!("{other:?} is not a wedge"))),
    }
}

/// `s_W = u(b) conj δ^{1/2} u(b)*` for the wedge with apex `b`, with the
/// imaginary-shift direction of its orientation.
#[derive(Clone, Debug)]
pub struct WedgeTomita {
    pub wedge: Region2,
    pub apex: [f64; 2],
    pub direction: i8,
    pub cutoff: SpectralCutoff,
}

impl WedgeTomita {
    pub fn transport_in(&self, v: &RepVector) -> RepVector {
        v.map(|p| translate(p, [-self.apex[0], -self.apex[1]]))
    }

    pub fn transport_out(&self, v: &RepVector) -> RepVector {
        v.map(|p| translate(p, self.apex))
    }

    /// `conj δ^{1/2}` at the origin with the tail diagnostic (max over summands).
    fn origin(&self, v: &RepVector) -> (RepVector, f64) {
        let mut tail = f64::NEG_INFINITY;
        let parts = v
            .parts
            .iter()
            .map(|p| {
                let h = modular_half_diagnostic(p, self.direction, &self.cutoff);
                tail = tail.max(h.tail_log10);
                h.vector.conj()
            })
            .collect();
        (RepVector { parts }, tail)
    }

    /// Tail diagnostic of `v` for this wedge.
    pub fn domain_tail(&self, v: &RepVector) -> f64 {
        self.origin(&self.transport_in(v)).1
    }

    /// `s_W v` and the tail diagnostic, without the domain check.
    pub fn apply_diagnostic(&self, v: &RepVector) -> (RepVector, f64) {
        let (s, tail) = self.origin(&self.transport_in(v));
        (self.transport_out(&s), tail)
    }

    pub fn apply(&self, v: &RepVector) -> Result<RepVector> {
        let (s, tail) = self.apply_diagnostic(v);
        if tail > self.cutoff.threshold_log10 {
            return Err(Error::DomainViolation {
                tail_log10: tail,
                threshold_log10: self.cutoff.threshold_log10,
            });
        }
        Ok(s)
    }

    /// Band projection onto the range of `s_W`, transported to the wedge.
    pub fn band(&self, v: &RepVector) -> RepVector {
        let p = self
            .transport_in(v)
            .map(|p| band_project(p, self.direction, &self.cutoff));
        self.transport_out(&p)
    }

    /// Symmetric band `|ω| ≤ Ω`, transported to the wedge.
    pub fn symmetric_band(&self, v: &RepVector) -> RepVector {
        let p = self
            .transport_in(v)
            .map(|p| symmetric_band_project(p, &self.cutoff));
        self.transport_out(&p)
    }

    /// `½(h + s_W h)` for `h` the symmetric band projection of `v`.
    pub fn symmetrize(&self, v: &RepVector) -> RepVector {
        let p = self.symmetric_band(v);
        let (s, _) = self.apply_diagnostic(&p);
        s.add(&p).expect("same layout").map(|x| x.scale(0.5.into()))
    }

    /// `‖s_W v - P v‖ / ‖P v‖`.
    pub fn fixed_residual(&self, v: &RepVector) -> Result<f64> {
        let s = self.apply(v)?;
        let p = self.band(v);
        let n = p.norm();
        Ok(if n == 0.0 { 0.0 } else { s.sub(&p)?.norm() / n })
    }

    /// `j_W = u(b) conj u(b)*`.
    pub fn conjugation(&self, v: &RepVector) -> RepVector {
        self.transport_out(&self.transport_in(v).map(OneParticleVector::conj))
    }

    /// `δ_W^{it} = u(b) u(Λ_W(t)) u(b)*`; the boost rapidity is `2πt·direction`.
    pub fn modular_group(&self, v: &RepVector, t: f64) -> RepVector {
        let lambda = 2.0 * PI * t * f64::from(self.direction);
        self.transport_out(&self.transport_in(v).map(|p| shift(p, lambda)))
    }
}

pub fn wedge_tomita(w: &Region2, cutoff: &SpectralCutoff) -> Result<WedgeTomita> {
    let (apex, direction) = wedge_parts(w)?;
    Ok(WedgeTomita { wedge: w.clone(), apex, direction, cutoff: *cutoff })
}

/// Test function placed in one summand of the representation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DictionaryEntry {
    pub function: TestFunction2,
    pub summand: usize,
}

/// Every function in every summand.
pub fn dictionary_for(rep: &PoincareRep2, functions: &[TestFunction2]) -> Vec<DictionaryEntry> {
    (0..rep.summands().len())
        .flat_map(|k| {
            functions.iter().map(move |f| DictionaryEntry { function: f.clone(), summand: k })
        })
        .collect()
}

pub fn dictionary_hash(entries: &[DictionaryEntry]) -> String {
    let mut h = Sha256::new();
    for e in entries {
        h.update(e.function.descriptor().as_bytes());
        h.update(format!(" k={}\n", e.summand).as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub wedge: Region2,
    pub tol: f64,
    pub dictionary_hash: String,
    pub dictionary_size: usize,
    /// Dictionary indices rejected by the domain diagnostic.
    pub excluded: Vec<usize>,
    /// Singular values of `s_W - 1` on the orthonormalized span, ascending.
    pub singular_values: Vec<f64>,
    /// Smallest rejected over largest accepted singular value.
    pub gap_ratio: f64,
    pub fallback_used: bool,
    pub adjoined: usize,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct LocalizedSubspace {
    pub subspace: RealSubspace,
    pub dictionary: Vec<DictionaryEntry>,
    pub report: LocalizationReport,
    /// Embedded dictionary vectors that passed the domain diagnostic, plus any
    /// adjoined symmetrized vectors.
    pub vectors: Vec<RepVector>,
    /// `basis = realify(vectors) · coefficients`.
    pub coefficients: RMat,
}

impl LocalizedSubspace {
    /// `max_c ‖(s_W - P) Σ_i A_ic g(v_i)‖ / ‖P Σ_i A_ic g(v_i)‖` over the model
    /// basis, with `s_W` extended real-linearly from the individual vectors so
    /// that the domain diagnostic is applied to each dictionary vector.
    pub fn fixed_residual_under(
        &self,
        tomita: &WedgeTomita,
        g: impl Fn(&RepVector) -> RepVector + Sync,
    ) -> Result<f64> {
        if self.vectors.is_empty() {
            return Ok(0.0);
        }
        let pairs = self
            .vectors
            .par_iter()
            .map(|v| -> Result<(RVec, RVec)> {
                let x = g(v);
                let sx = tomita.apply(&x)?;
                Ok((sx.realify(), tomita.band(&x).realify()))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = pairs[0].0.len();
        let (mut sm, mut pm) = (RMat::zeros(rows, pairs.len()), RMat::zeros(rows, pairs.len()));
        for (c, (sx, px)) in pairs.iter().enumerate() {
            sm.set_column(c, sx);
            pm.set_column(c, px);
        }
        let p = &pm * &self.coefficients;
        let d = (sm - &pm) * &self.coefficients;
        let mut worst: f64 = 0.0;
        for c in 0..p.ncols() {
            let n = p.column(c).norm();
            if n > 0.0 {
                worst = worst.max(d.column(c).norm() / n);
            }
        }
        Ok(worst)
    }
}

/// `A` with `v · A = q` for `q` in the column span of `v`.
fn span_coefficients(v: &RMat, q: &RMat) -> RMat {
    if v.ncols() == 0 || q.ncols() == 0 {
        return RMat::zeros(v.ncols(), q.ncols());
    }
    TruncatedSvd::new(v, DICTIONARY_RANK_TOL).solve(q)
}

struct FixedPoints {
    coeffs: RMat,
    singular_values: Vec<f64>,
}

/// Fixed combinations of `columns` (realified, not necessarily independent):
/// `c` with `‖(s - P) Σ c_i v_i‖ ≤ tol` on the orthonormalized span.
fn fixed_points(
    rep: &PoincareRep2,
    tomita: &WedgeTomita,
    vectors: &[RepVector],
    tol: f64,
) -> Result<FixedPoints> {
    let cols = realify_reps(vectors);
    let svd = TruncatedSvd::new(&cols, DICTIONARY_RANK_TOL);
    let q = svd.sigma.len();
    let basis = svd.u.clone();
    let mut to_dict = svd.v.clone();
    for (c, s) in svd.sigma.iter().enumerate() {
        to_dict.column_mut(c).unscale_mut(*s);
    }
    let columns: Vec<RVec> = (0..q)
        .into_par_iter()
        .map(|c| -> Result<RVec> {
            let v = rep.from_real(&basis.column(c).into_owned())?;
            let (s, _) = tomita.apply_diagnostic(&v);
            Ok(s.sub(&tomita.band(&v))?.realify())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = RMat::zeros(cols.nrows(), q);
    for (c, col) in columns.iter().enumerate() {
        r.set_column(c, col);
    }
    let (small, sv) = small_right_singular(&r, tol.max(1e-12));
    Ok(FixedPoints { coeffs: to_dict * small, singular_values: sv })
}

fn realify_reps(vectors: &[RepVector]) -> RMat {
    let rows = vectors.first().map_or(0, |v| v.realify().len());
    let mut m = RMat::zeros(rows, vectors.len());
    for (c, v) in vectors.iter().enumerate() {
        m.set_column(c, &v.realify());
    }
    m
}

fn gap_ratio(sv: &[f64], tol: f64) -> f64 {
    let accepted = sv.iter().copied().filter(|&s| s <= tol).fold(0.0, f64::max);
    match sv.iter().copied().find(|&s| s > tol) {
        None => f64::INFINITY,
        Some(rejected) => rejected / accepted.max(f64::MIN_POSITIVE),
    }
}

/// Finite model of `K_W`: fixed points of `s_W - 1` on the real span of the
/// dictionary embeddings, re-expressed through the unprojected vectors.
pub fn localized_subspace(
    rep: &PoincareRep2,
    w: &Region2,
    dictionary: &[DictionaryEntry],
    tol: f64,
    cutoff: &SpectralCutoff,
) -> Result<LocalizedSubspace> {
    let vectors = dictionary
        .par_iter()
        .map(|e| rep.embed_block(&e.function, e.summand))
        .collect::<Result<Vec<_>>>()?;
    localize(rep, w, vectors, dictionary, dictionary_hash(dictionary), tol, cutoff)
}

/// Same as [`localized_subspace`] for probe vectors given directly in the
/// grid space. The hash in the report is taken over the vector samples.
pub fn localized_subspace_of_vectors(
    rep: &PoincareRep2,
    w: &Region2,
    vectors: &[RepVector],
    tol: f64,
    cutoff: &SpectralCutoff,
) -> Result<LocalizedSubspace> {
    let mut hasher = Sha256::new();
    for v in vectors {
        for x in v.realify().iter() {
            hasher.update(x.to_le_bytes());
        }
    }
    let hash = hex::encode(hasher.finalize());
    localize(rep, w, vectors.to_vec(), &[], hash, tol, cutoff)
}

fn localize(
    rep: &PoincareRep2,
    w: &Region2,
    vectors: Vec<RepVector>,
    dictionary: &[DictionaryEntry],
    hash: String,
    tol: f64,
    cutoff: &SpectralCutoff,
) -> Result<LocalizedSubspace> {
    if !(tol >= 0.0) {
        return Err(Error::Usage(format!("tolerance must be non-negative, got {tol}")));
    }
    let tomita = wedge_tomita(w, cutoff)?;
    let size = vectors.len();
    let embedded: Vec<(usize, RepVector, f64)> = vectors
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let tail = tomita.domain_tail(&v);
            (i, v, tail)
        })
        .collect();
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (i, v, tail) in embedded {
        if tail > cutoff.threshold_log10 {
            excluded.push(i);
        } else {
            kept.push(v);
        }
    }
    let mut report = LocalizationReport {
        wedge: w.clone(),
        tol,
        dictionary_hash: hash,
        dictionary_size: size,
        excluded,
        singular_values: Vec::new(),
        gap_ratio: f64::INFINITY,
        fallback_used: false,
        adjoined: 0,
        dim: 0,
    };
    if kept.is_empty() {
        if size == 0 {
            return Ok(LocalizedSubspace {
                subspace: RealSubspace::zero(rep.space()),
                dictionary: Vec::new(),
                report,
                vectors: Vec::new(),
                coefficients: RMat::zeros(0, 0),
            });
        }
        return Err(Error::EmptyModel(format!(
            "all {size} dictionary members fail the domain diagnostic for {w:?}"
        )));
    }
    let mut fp = fixed_points(rep, &tomita, &kept, tol)?;
    let mut gap = gap_ratio(&fp.singular_values, tol);
    if gap < WELL_CONDITIONED {
        let mut sym = Vec::new();
        for v in &kept {
            let p = tomita.symmetric_band(v);
            let (s, _) = tomita.apply_diagnostic(&p);
            let np = p.norm();
            if np > 0.0 && s.norm() <= WELL_CONDITIONED * np {
                sym.push(s.add(&p)?.map(|x| x.scale(0.5.into())));
            }
        }
        if !sym.is_empty() {
            report.fallback_used = true;
            report.adjoined = sym.len();
            kept.extend(sym);
            fp = fixed_points(rep, &tomita, &kept, tol)?;
            gap = gap_ratio(&fp.singular_values, tol);
        }
    }
    let v = realify_reps(&kept);
    let subspace = RealSubspace::from_real_columns(rep.space(), &(&v * &fp.coeffs));
    let coefficients = span_coefficients(&v, subspace.basis_matrix());
    report.singular_values = fp.singular_values;
    report.gap_ratio = gap;
    report.dim = subspace.dim();
    Ok(LocalizedSubspace {
        subspace,
        dictionary: dictionary.to_vec(),
        report,
        vectors: kept,
        coefficients,
    })
}

/// Wedges with closure under causal complement checked at construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WedgeFamily2 {
    wedges: Vec<Region2>,
}

impl WedgeFamily2 {
    pub fn new(wedges: Vec<Region2>) -> Result<Self> {
        for w in &wedges {
            wedge_parts(w)?;
            if !wedges.contains(&w.causal_complement()) {
                return Err(Error::Usage(format!("family is not closed under complement at {w:?}")));
            }
        }
        Ok(Self { wedges })
    }

    /// Right and left wedges at each apex.
    pub fn from_apexes(apexes: &[[f64; 2]]) -> Self {
        let wedges = apexes
            .iter()
            .flat_map(|&a| [Region2::right_wedge(a), Region2::left_wedge(a)])
            .collect();
        Self { wedges }
    }

    pub fn wedges(&self) -> &[Region2] {
        &self.wedges
    }
}

/// `W1 ⊆ W2` for wedges.
pub fn wedge_contains(w2: &Region2, w1: &Region2) -> bool {
    match (w1, w2) {
        (Region2::RightWedge { apex: a }, Region2::RightWedge { apex: b }) => {
            a[1] - b[1] >= (a[0] - b[0]).abs()
        }
        (Region2::LeftWedge { apex: a }, Region2::LeftWedge { apex: b }) => {
            b[1] - a[1] >= (a[0] - b[0]).abs()
        }
        _ => false,
    }
}

#[derive(Clone, Debug)]
pub struct LocalizedNet {
    pub rep: PoincareRep2,
    pub family: WedgeFamily2,
    pub pool: Vec<TestFunction2>,
    pub tol: f64,
    pub cutoff: SpectralCutoff,
    pub models: Vec<(Region2, LocalizedSubspace)>,
}

impl LocalizedNet {
    /// Populates every wedge of the family from the pool members supported in
    /// it, in all summands.
    pub fn build(
        rep: PoincareRep2,
        family: WedgeFamily2,
        pool: Vec<TestFunction2>,
        tol: f64,
        cutoff: SpectralCutoff,
    ) -> Result<Self> {
        let models = family
            .wedges()
            .par_iter()
            .map(|w| -> Result<(Region2, LocalizedSubspace)> {
                let dict = wedge_dictionary(&rep, w, &pool)?;
                Ok((w.clone(), localized_subspace(&rep, w, &dict, tol, &cutoff)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rep, family, pool, tol, cutoff, models })
    }

    pub fn model(&self, w: &Region2) -> Option<&LocalizedSubspace> {
        self.models.iter().find(|(v, _)| v == w).map(|(_, m)| m)
    }
}

/// Pool members supported in `w`, relabelled to `w`, in every summand.
pub fn wedge_dictionary(
    rep: &PoincareRep2,
    w: &Region2,
    pool: &[TestFunction2],
) -> Result<Vec<DictionaryEntry>> {
    let inside = pool
        .iter()
        .filter(|f| f.supported_in(w))
        .map(|f| f.relabel(w.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(dictionary_for(rep, &inside))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRecord {
    pub first: Region2,
    pub second: Region2,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceRecord {
    pub wedge: Region2,
    pub element: Poincare2,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WedgeRecord {
    pub wedge: Region2,
    pub dim: usize,
    /// `max ‖(s_W - P)δ_W^{it}v‖/‖Pv‖` over the model basis.
    pub bw_invariance: f64,
    /// Distance of `j_W K_W` to the model from the reflected dictionary, and
    /// its symplectic pairing with `K_W`.
    pub reflection: f64,
    /// `dim(K ∩ iK)` at [`INTERSECTION_TOL`].
    pub k_cap_ik: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetReport {
    pub isotony: Vec<PairRecord>,
    pub duality: Vec<PairRecord>,
    pub covariance: Vec<CovarianceRecord>,
    pub wedges: Vec<WedgeRecord>,
}

impl NetReport {
    pub fn max_isotony(&self) -> f64 {
        self.isotony.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn max_duality(&self) -> f64 {
        self.duality.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn max_covariance(&self) -> f64 {
        self.covariance.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn apply_to_basis(
    rep: &PoincareRep2,
    k: &RealSubspace,
    f: impl Fn(&RepVector) -> Result<RepVector> + Sync,
) -> Result<RealSubspace> {
    let b = k.basis_matrix();
    let cols = (0..b.ncols())
        .into_par_iter()
        .map(|c| -> Result<RVec> { Ok(f(&rep.from_real(&b.column(c).into_owned())?)?.realify()) })
        .collect::<Result<Vec<_>>>()?;
    let mut m = RMat::zeros(b.nrows(), cols.len());
    for (c, col) in cols.iter().enumerate() {
        m.set_column(c, col);
    }
    Ok(RealSubspace::from_real_columns(k.space(), &m))
}

/// Duality residual: distance between `K(W′)` and `K(W)′ ∩ span(K(W) ∪ K(W′))`.
pub fn duality_residual(k: &RealSubspace, k_prime: &RealSubspace) -> Result<f64> {
    let joint = k.sum(k_prime)?;
    let comp = k.symplectic_complement_within(&joint, PAIRING_TOL)?;
    comp.distance(k_prime)
}

/// `u(g)K(W)` against the model of `gW` built from the transported dictionary.
pub fn covariance_record(
    net: &LocalizedNet,
    w: &Region2,
    g: &Poincare2,
) -> Result<CovarianceRecord> {
    let model = net
        .model(w)
        .ok_or_else(|| Error::Usage(format!("no model for {w:?}")))?;
    let gw = w.transform(g);
    let moved: Vec<DictionaryEntry> = model
        .dictionary
        .iter()
        .map(|e| DictionaryEntry { function: e.function.transformed(g), summand: e.summand })
        .collect();
    let target = localized_subspace(&net.rep, &gw, &moved, net.tol, &net.cutoff)?;
    let image = apply_to_basis(&net.rep, &model.subspace, |v| net.rep.act(g, v))?;
    Ok(CovarianceRecord { wedge: w.clone(), element: *g, residual: image.distance(&target.subspace)? })
}

fn wedge_record(net: &LocalizedNet, w: &Region2, model: &LocalizedSubspace, t: f64) -> Result<WedgeRecord> {
    let tomita = wedge_tomita(w, &net.cutoff)?;
    let bw = model.fixed_residual_under(&tomita, |v| tomita.modular_group(v, t))?;
    let reflected: Vec<DictionaryEntry> = model
        .dictionary
        .iter()
        .map(|e| DictionaryEntry {
            function: e.function.transformed(&reflection_through(tomita.apex)),
            summand: e.summand,
        })
        .collect();
    let wp = w.causal_complement();
    let target = localized_subspace(&net.rep, &wp, &reflected, net.tol, &net.cutoff)?;
    let image = apply_to_basis(&net.rep, &model.subspace, |v| Ok(tomita.conjugation(v)))?;
    let reflection = image
        .distance(&target.subspace)?
        .max(image.symplectic_pairing(&model.subspace)?);
    let k_cap_ik = model
        .subspace
        .intersection(&model.subspace.times_i(), INTERSECTION_TOL)?
        .dim();
    Ok(WedgeRecord { wedge: w.clone(), dim: model.subspace.dim(), bw_invariance: bw, reflection, k_cap_ik })
}

/// `x ↦ 2b - x`.
pub fn reflection_through(b: [f64; 2]) -> Poincare2 {
    Poincare2 { rapidity: 0.0, translation: [2.0 * b[0], 2.0 * b[1]], reflect: true }
}

/// Isotony over all contained pairs, duality for every wedge, covariance
/// for every wedge and group element, and the per-wedge BW, reflection and
/// standardness diagnostics at modular parameter `t`.
pub fn net_checks(net: &LocalizedNet, elements: &[Poincare2], t: f64) -> Result<NetReport> {
    let mut isotony = Vec::new();
    let mut duality = Vec::new();
    for (w1, m1) in &net.models {
        for (w2, m2) in &net.models {
            if wedge_contains(w2, w1) {
                isotony.push(PairRecord {
                    first: w1.clone(),
                    second: w2.clone(),
                    residual: m2.subspace.inclusion_residual(&m1.subspace)?,
                });
            }
        }
        if let Some(mp) = net.model(&w1.causal_complement()) {
            duality.push(PairRecord {
                first: w1.clone(),
                second: w1.causal_complement(),
                residual: duality_residual(&m1.subspace, &mp.subspace)?,
            });
        }
    }
    let pairs: Vec<(Region2, Poincare2)> = net
        .models
        .iter()
        .flat_map(|(w, _)| elements.iter().map(move |g| (w.clone(), *g)))
        .collect();
    let covariance = pairs
        .par_iter()
        .map(|(w, g)| covariance_record(net, w, g))
        .collect::<Result<Vec<_>>>()?;
    let wedges = net
        .models
        .par_iter()
        .map(|(w, m)| wedge_record(net, w, m, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetReport { isotony, duality, covariance, wedges })
}

#[derive(Clone, Debug)]
pub struct DoubleConeSpace {
    pub region: Region2,
    pub subspace: RealSubspace,
    /// `max` residual of `Ef`, `supp f ⊂ O`, against the intersection.
    pub residual: f64,
    pub members: usize,
    pub warning: Option<String>,
}

/// Intersection of two wedge models of the net.
pub fn intersect_wedges(net: &LocalizedNet, w1: &Region2, w2: &Region2) -> Result<RealSubspace> {
    let get = |w: &Region2| {
        net.model(w)
            .ok_or_else(|| Error::Usage(format!("no wedge model for {w:?}")))
    };
    let (a, b) = (get(w1)?, get(w2)?);
    a.subspace.intersection(&b.subspace, INTERSECTION_TOL)
}

/// `K(O) = K(W_1) ∩ K(W_2)` for the generating wedges of a double cone.
pub fn doublecone_space(net: &LocalizedNet, o: &Region2) -> Result<DoubleConeSpace> {
    let (w1, w2) = o
        .generating_wedges()
        .ok_or_else(|| Error::Usage(format!("{o:?} is not a double cone")))?;
    let subspace = intersect_wedges(net, &w1, &w2)?;
    let mut residual: f64 = 0.0;
    let mut members = 0;
    for f in net.pool.iter().filter(|f| f.supported_in(o)) {
        for k in 0..net.rep.summands().len() {
            let v = net.rep.embed_block(f, k)?.realify();
            let n = v.norm();
            if n > 0.0 {
                residual = residual.max((&v - subspace.project(&v)).norm() / n);
            }
            members += 1;
        }
    }
    let warning = (subspace.dim() == 0).then(|| {
        format!("wedge models {w1:?} and {w2:?} share no directions; intersection is trivial")
    });
    Ok(DoubleConeSpace { region: o.clone(), subspace, residual, members, warning })
}

/// Left singular vectors of `m` with singular value above `DICTIONARY_RANK_TOL`
/// relative to the largest; columns that are pure rounding noise drop out.
pub fn direct_sum_defect(
    sum: &LocalizedSubspace,
    singles: &[LocalizedSubspace],
    n_points: usize,
) -> Result<f64> {
    let k = singles.len();
    let total = 2 * k * n_points;
    check_dim(total, sum.subspace.space().real_dim())?;
    let rows = |b: usize| -> Vec<usize> {
        (0..n_points)
            .map(|j| b * n_points + j)
            .chain((0..n_points).map(|j| k * n_points + b * n_points + j))
            .collect()
    };
    let basis = sum.subspace.basis_matrix();
    let mut defect: f64 = 0.0;
    for (b, single) in singles.iter().enumerate() {
        let idx = rows(b);
        let mut block = RMat::zeros(total, basis.ncols());
        for (c, col) in basis.column_iter().enumerate() {
            for &i in &idx {
                block[(i, c)] = col[i];
            }
        }
        let projected = RealSubspace::from_real_columns(sum.subspace.space(), &column_range(&block, DICTIONARY_RANK_TOL));
        defect = defect.max(sum.subspace.inclusion_residual(&projected)?);
        let sb = single.subspace.basis_matrix();
        let mut placed = RMat::zeros(total, sb.ncols());
        for c in 0..sb.ncols() {
            for (j, &i) in idx.iter().enumerate() {
                placed[(i, c)] = sb[(j, c)];
            }
        }
        let placed = RealSubspace::from_real_columns(sum.subspace.space(), &placed);
        defect = defect.max(projected.distance(&placed)?);
    }
    Ok(defect)
}

/// Relative adjoint-relation defect `|⟨s_W x, y⟩ - ⟨s_{W′} y, x⟩| / (‖x‖‖y‖)`
/// over probe pairs.
pub fn adjoint_relation_defect(
    w: &Region2,
    probes: &[RepVector],
    cutoff: &SpectralCutoff,
) -> Result<f64> {
    let s = wedge_tomita(w, cutoff)?;
    let sp = wedge_tomita(&w.causal_complement(), cutoff)?;
    let mut worst: f64 = 0.0;
    for x in probes {
        for y in probes {
            let lhs = s.apply(x)?.inner(y)?;
            let rhs = sp.apply(y)?.inner(x)?;
            let scale = x.norm() * y.norm();
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WedgeExport {
    pub wedge: Region2,
    pub dictionary_hash: String,
    pub dim: usize,
    pub localization: LocalizationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetExport {
    pub masses: Vec<f64>,
    pub theta_max: f64,
    pub n_points: usize,
    pub wedges: Vec<WedgeExport>,
    pub residuals: Option<NetReport>,
}

impl LocalizedNet {
    pub fn export(&self, residuals: Option<NetReport>) -> NetExport {
        let grid = self.rep.summands()[0].grid();
        NetExport {
            masses: self.rep.masses(),
            theta_max: grid.theta_max,
            n_points: grid.n_points,
            wedges: self
                .models
                .iter()
                .map(|(w, m)| WedgeExport {
                    wedge: w.clone(),
                    dictionary_hash: m.report.dictionary_hash.clone(),
                    dim: m.subspace.dim(),
                    localization: m.report.clone(),
                })
                .collect(),
            residuals,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_containment() {
        let r0 = Region2::right_wedge([0.0, 0.0]);
        let r1 = Region2::right_wedge([0.0, 1.0]);
        assert!(wedge_contains(&r0, &r1));
        assert!(!wedge_contains(&r1, &r0));
        assert!(wedge_contains(&r0, &r0));
        let l0 = Region2::left_wedge([0.0, 0.0]);
        let l1 = Region2::left_wedge([0.0, -1.0]);
        assert!(wedge_contains(&l0, &l1));
        assert!(!wedge_contains(&l0, &r1));
    }

    #[test]
    fn family_closure() {
        assert!(WedgeFamily2::new(vec![Region2::right_wedge([0.0, 0.0])]).is_err());
        let f = WedgeFamily2::from_apexes(&[[0.0, 0.0], [0.0, 1.0]]);
        assert!(WedgeFamily2::new(f.wedges().to_vec()).is_ok());
    }

    #[test]
    fn reflection_through_apex() {
        let g = reflection_through([0.0, 1.0]);
        assert_eq!(g.apply_point([0.0, 3.0]), [0.0, -1.0]);
        assert_eq!(
            Region2::right_wedge([0.0, 1.0]).transform(&g),
            Region2::left_wedge([0.0, 1.0])
        );
    }
}
