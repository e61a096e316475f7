//! Truncated bosonic Fock space `⊕_{n≤N} Sym^n(C^d)` in the occupation
//! number basis.
//!
//! The basis vector `|m⟩` with occupations `m = (m_1..m_d)` is
//! `Π_k (a_k*)^{m_k} / √(m_k!) Ω`. States are ordered by level `Σ m_k`, then
//! by descending lexicographic order, so level one lists `e_1, …, e_d`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{inner, ComplexVector, ComplexVectorSpace, Linearity, RealLinearMap, RealSubspace};
use crate::linalg::{op_norm_c, CMat, CVec};
use crate::rng::normal;
use crate::standard::{modular_data, tomita_operator};

const NONE: usize = usize::MAX;

#[derive(Debug)]
pub struct FockSpace {
    one_particle: ComplexVectorSpace,
    cutoff: usize,
    states: Vec<Vec<u8>>,
    level_offsets: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    raise: Vec<Vec<usize>>,
    parent: Vec<(usize, usize)>,
}

impl FockSpace {
    pub fn new(d: usize, cutoff: usize) -> Result<Arc<Self>> {
        let one_particle = ComplexVectorSpace::new(d)?;
        if cutoff > u8::MAX as usize {
            return Err(Error::Usage(format!("cutoff {cutoff} exceeds {}", u8::MAX)));
        }
        let mut states: Vec<Vec<u8>> = Vec::new();
        let mut level_offsets = vec![0];
        for n in 0..=cutoff {
            let mut level = Vec::new();
            compositions(n, d, &mut vec![0; d], 0, &mut level);
            level.sort_by(|a, b| b.cmp(a));
            states.extend(level);
            level_offsets.push(states.len());
        }
        let index: HashMap<Vec<u8>, usize> =
            states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut raise = vec![vec![NONE; d]; states.len()];
        let mut parent = vec![(NONE, NONE); states.len()];
        for (i, s) in states.iter().enumerate() {
            let level: usize = s.iter().map(|&x| x as usize).sum();
            for k in 0..d {
                if level < cutoff {
                    let mut t = s.clone();
                    t[k] += 1;
                    raise[i][k] = index[&t];
                }
            }
            if let Some(k) = s.iter().position(|&x| x > 0) {
                let mut t = s.clone();
                t[k] -= 1;
                parent[i] = (index[&t], k);
            }
        }
        Ok(Arc::new(Self {
            one_particle,
            cutoff,
            states,
            level_offsets,
            index,
            raise,
            parent,
        }))
    }

    pub fn one_particle(&self) -> ComplexVectorSpace {
        self.one_particle
    }

    pub fn d(&self) -> usize {
        self.one_particle.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn level_of(&self, i: usize) -> usize {
        self.level_offsets.partition_point(|&o| o <= i) - 1
    }

    /// Index range of level `n`.
    pub fn level_range(&self, n: usize) -> std::ops::Range<usize> {
        self.level_offsets[n]..self.level_offsets[n + 1]
    }

    /// Index range of all levels `≤ n`.
    pub fn levels_up_to(&self, n: usize) -> std::ops::Range<usize> {
        0..self.level_offsets[n.min(self.cutoff) + 1]
    }
}

fn compositions(n: usize, d: usize, cur: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
    if k == d - 1 {
        cur[k] = n as u8;
        out.push(cur.clone());
        return;
    }
    for v in 0..=n {
        cur[k] = v as u8;
        compositions(n - v, d, cur, k + 1, out);
    }
    cur[k] = 0;
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn occ_factorial(occ: &[u8]) -> f64 {
    occ.iter().map(|&m| factorial(m as usize)).product()
}

#[derive(Clone, Debug)]
pub struct FockVector {
    space: Arc<FockSpace>,
    coeffs: CVec,
}

impl FockVector {
    pub fn new(space: &Arc<FockSpace>, coeffs: CVec) -> Result<Self> {
        check_dim(space.dim(), coeffs.len())?;
        Ok(Self {
            space: space.clone(),
            coeffs,
        })
    }

    pub fn zeros(space: &Arc<FockSpace>) -> Self {
        Self {
            space: space.clone(),
            coeffs: CVec::zeros(space.dim()),
        }
    }

    pub fn vacuum(space: &Arc<FockSpace>) -> Self {
        let mut v = Self::zeros(space);
        v.coeffs[0] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn level(&self, n: usize) -> CVec {
        self.coeffs.rows_range(self.space.level_range(n)).into_owned()
    }

    pub fn level_norms(&self) -> Vec<f64> {
        (0..=self.space.cutoff).map(|n| self.level(n).norm()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_dim(self.space.dim(), other.space.dim())?;
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.space.dim(), other.space.dim())?;
        Ok(Self {
            space: self.space.clone(),
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.space.dim(), other.space.dim())?;
        Ok(Self {
            space: self.space.clone(),
            coeffs: &self.coeffs - &other.coeffs,
        })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            coeffs: &self.coeffs * z,
        }
    }

    /// Coefficientwise conjugation (second quantization of the conjugation).
    pub fn conj(&self) -> Self {
        Self {
            space: self.space.clone(),
            coeffs: self.coeffs.map(|z| z.conj()),
        }
    }

    /// Projection onto levels `≤ n`.
    pub fn truncate(&self, n: usize) -> Self {
        let mut out = self.clone();
        let end = self.space.levels_up_to(n).end;
        out.coeffs.rows_range_mut(end..).fill(Complex64::new(0.0, 0.0));
        out
    }

    /// `a*(g) ψ` inside the truncation, and the mass `‖a*(g) ψ_N‖²` that the
    /// top level would push beyond the cutoff.
    pub fn apply_creation(&self, g: &ComplexVector) -> Result<(Self, f64)> {
        let out = creation(&self.space, g)?.apply(self)?;
        let top = self.space.level_range(self.space.cutoff);
        let mut psi_top = Self::zeros(&self.space);
        psi_top.coeffs.rows_range_mut(top.clone()).copy_from(&self.coeffs.rows_range(top));
        let lowered = annihilation(&self.space, g)?.apply(&psi_top)?;
        let overflow = g.norm().powi(2) * psi_top.norm().powi(2) + lowered.norm().powi(2);
        Ok((out, overflow))
    }
}

/// `e^h = ⊕_n h^{⊗n} / √(n!)` truncated at the cutoff.
pub fn coherent(space: &Arc<FockSpace>, h: &ComplexVector) -> Result<FockVector> {
    check_dim(space.d(), h.space().dim())?;
    let mut c = CVec::zeros(space.dim());
    c[0] = Complex64::new(1.0, 0.0);
    for i in 1..space.dim() {
        let (p, k) = space.parent[i];
        let m = space.states[i][k] as f64;
        c[i] = c[p] * h.coords()[k] / m.sqrt();
    }
    FockVector::new(space, c)
}

/// A dense rank-`n` tensor over C^d, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    d: usize,
    n: usize,
    data: Vec<Complex64>,
}

impl DenseTensor {
    pub fn elementary(xs: &[ComplexVector]) -> Result<Self> {
        let d = xs.first().map(|x| x.space().dim()).unwrap_or(1);
        let mut data = vec![Complex64::new(1.0, 0.0)];
        for x in xs {
            check_dim(d, x.space().dim())?;
            let mut next = Vec::with_capacity(data.len() * d);
            for a in &data {
                for b in x.coords().iter() {
                    next.push(a * b);
                }
            }
            data = next;
        }
        Ok(Self { d, n: xs.len(), data })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for k in (0..self.n).rev() {
            out[k] = idx % self.d;
            idx /= self.d;
        }
        out
    }

    fn flat(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    /// `T ∘ σ` for a permutation of tensor slots.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for (idx, z) in self.data.iter().enumerate() {
            let dg = self.digits(idx);
            let moved: Vec<usize> = perm.iter().map(|&p| dg[p]).collect();
            data[self.flat(&moved)] = *z;
        }
        Self {
            d: self.d,
            n: self.n,
            data,
        }
    }

    /// `(1/n!) Σ_σ T ∘ σ`, by enumerating all permutations.
    pub fn sym_project(&self) -> Self {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.data.len()];
        let perms = permutations(self.n);
        for p in &perms {
            for (a, b) in acc.iter_mut().zip(self.permuted(p).data) {
                *a += b;
            }
        }
        let w = 1.0 / perms.len() as f64;
        Self {
            d: self.d,
            n: self.n,
            data: acc.into_iter().map(|z| z * w).collect(),
        }
    }

    /// Largest deviation `‖T - T ∘ τ‖` over adjacent transpositions `τ`.
    pub fn transposition_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.n.saturating_sub(1) {
            let mut p: Vec<usize> = (0..self.n).collect();
            p.swap(k, k + 1);
            let q = self.permuted(&p);
            let diff: f64 = self
                .data
                .iter()
                .zip(&q.data)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diff);
        }
        worst
    }

    /// Occupation coordinates of a symmetric tensor: `√(n!/Πm!) T[I_m]` with
    /// `I_m` the sorted multi-index of `m`.
    pub fn to_occupation(&self, space: &Arc<FockSpace>) -> Result<FockVector> {
        check_dim(space.d(), self.d)?;
        if self.n > space.cutoff {
            return Err(Error::Truncation {
                level: self.n,
                cutoff: space.cutoff,
            });
        }
        let mut out = FockVector::zeros(space);
        for i in space.level_range(self.n) {
            let occ = &space.states[i];
            let digits: Vec<usize> = occ
                .iter()
                .enumerate()
                .flat_map(|(k, &m)| std::iter::repeat_n(k, m as usize))
                .collect();
            let w = (factorial(self.n) / occ_factorial(occ)).sqrt();
            out.coeffs[i] = self.data[self.flat(&digits)] * w;
        }
        Ok(out)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// `sym(x_1 ⊗ … ⊗ x_n)` by explicit permutation averaging, in occupation
/// coordinates.
pub fn sym_project(space: &Arc<FockSpace>, xs: &[ComplexVector]) -> Result<FockVector> {
    if xs.len() > space.cutoff {
        return Err(Error::Truncation {
            level: xs.len(),
            cutoff: space.cutoff,
        });
    }
    DenseTensor::elementary(xs)?.sym_project().to_occupation(space)
}

/// `sym(x_1 ⊗ … ⊗ x_n) = (1/n!) Σ_{F ⊆ {1..n}} (-1)^{|F|+n} (Σ_{j∈F} x_j)^{⊗n}`,
/// evaluated directly in occupation coordinates.
pub fn sym_power_expand(space: &Arc<FockSpace>, xs: &[ComplexVector]) -> Result<FockVector> {
    let n = xs.len();
    if n > space.cutoff {
        return Err(Error::Truncation {
            level: n,
            cutoff: space.cutoff,
        });
    }
    let d = space.d();
    for x in xs {
        check_dim(d, x.space().dim())?;
    }
    let range = space.level_range(n);
    let mut acc = CVec::zeros(space.dim());
    let nf = factorial(n);
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        let mut y = CVec::zeros(d);
        for (j, x) in xs.iter().enumerate() {
            if mask & (1 << j) != 0 {
                y += x.coords();
            }
        }
        let sign = if (size + n).is_multiple_of(2) { 1.0 } else { -1.0 };
        for i in range.clone() {
            let occ = &space.states[i];
            let mut mono = Complex64::new(1.0, 0.0);
            for (k, &m) in occ.iter().enumerate() {
                mono *= y[k].powu(m as u32);
            }
            acc[i] += mono * (sign * (nf / occ_factorial(occ)).sqrt());
        }
    }
    FockVector::new(space, acc / Complex64::new(nf, 0.0))
}

/// A one-particle operator `x ↦ a x` or `x ↦ a conj(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum OneParticleMap {
    Linear(CMat),
    Antilinear(CMat),
}

impl From<&RealLinearMap> for OneParticleMap {
    fn from(m: &RealLinearMap) -> Self {
        match m.linearity() {
            Linearity::ComplexLinear => Self::Linear(m.complex_matrix()),
            Linearity::Antilinear => Self::Antilinear(m.complex_matrix()),
        }
    }
}

impl OneParticleMap {
    fn parts(&self) -> (&CMat, bool) {
        match self {
            Self::Linear(a) => (a, false),
            Self::Antilinear(a) => (a, true),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LevelStructure {
    Preserving,
    Raising,
    Lowering,
    Mixed,
}

/// An operator on the truncated Fock space; antilinear operators act as
/// `ψ ↦ M conj(ψ)`.
#[derive(Clone, Debug)]
pub struct FockOperator {
    space: Arc<FockSpace>,
    matrix: CMat,
    antilinear: bool,
    structure: LevelStructure,
}

impl FockOperator {
    pub fn identity(space: &Arc<FockSpace>) -> Self {
        Self {
            space: space.clone(),
            matrix: CMat::identity(space.dim(), space.dim()),
            antilinear: false,
            structure: LevelStructure::Preserving,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn is_antilinear(&self) -> bool {
        self.antilinear
    }

    pub fn structure(&self) -> LevelStructure {
        self.structure
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        check_dim(self.space.dim(), v.space.dim())?;
        let coeffs = if self.antilinear {
            &self.matrix * v.coeffs.map(|z| z.conj())
        } else {
            &self.matrix * &v.coeffs
        };
        FockVector::new(&self.space, coeffs)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.space.dim(), other.space.dim())?;
        let matrix = if self.antilinear {
            &self.matrix * other.matrix.map(|z| z.conj())
        } else {
            &self.matrix * &other.matrix
        };
        let structure = if self.structure == other.structure {
            self.structure
        } else if self.structure == LevelStructure::Preserving {
            other.structure
        } else if other.structure == LevelStructure::Preserving {
            self.structure
        } else {
            LevelStructure::Mixed
        };
        Ok(Self {
            space: self.space.clone(),
            matrix,
            antilinear: self.antilinear != other.antilinear,
            structure,
        })
    }

    /// Adjoint; for antilinear `M∘C` this is `Mᵀ∘C`.
    pub fn adjoint(&self) -> Self {
        let structure = match self.structure {
            LevelStructure::Raising => LevelStructure::Lowering,
            LevelStructure::Lowering => LevelStructure::Raising,
            s => s,
        };
        Self {
            space: self.space.clone(),
            matrix: if self.antilinear {
                self.matrix.transpose()
            } else {
                self.matrix.adjoint()
            },
            antilinear: self.antilinear,
            structure,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.antilinear != other.antilinear {
            return Err(Error::Usage("cannot add a linear and an antilinear operator".into()));
        }
        check_dim(self.space.dim(), other.space.dim())?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
            antilinear: self.antilinear,
            structure: if self.structure == other.structure {
                self.structure
            } else {
                LevelStructure::Mixed
            },
        })
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * z,
            antilinear: self.antilinear,
            structure: self.structure,
        }
    }

    /// Operator norm of `self - other` restricted to levels `≤ level` on both
    /// sides.
    pub fn distance_on_levels(&self, other: &Self, level: usize) -> Result<f64> {
        if self.antilinear != other.antilinear {
            return Err(Error::Usage("cannot compare a linear and an antilinear operator".into()));
        }
        let r = self.space.levels_up_to(level).end;
        let diff = (&self.matrix - &other.matrix).view((0, 0), (r, r)).into_owned();
        Ok(op_norm_c(&diff))
    }
}

/// `Γ(a) = ⊕_n a^{⊗n}`, built column by column from
/// `Γ(a)|m⟩ = a*(a e_k) Γ(a)|m - e_k⟩ / √m_k`.
pub fn gamma(space: &Arc<FockSpace>, a: &OneParticleMap) -> Result<FockOperator> {
    let (am, antilinear) = a.parts();
    check_dim(space.d(), am.nrows())?;
    check_dim(space.d(), am.ncols())?;
    let dim = space.dim();
    let mut matrix = CMat::zeros(dim, dim);
    matrix[(0, 0)] = Complex64::new(1.0, 0.0);
    for i in 1..dim {
        let (p, k) = space.parent[i];
        let mk = space.states[i][k] as f64;
        let range = space.level_range(space.level_of(p));
        for r in range {
            let c = matrix[(r, p)];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..space.d() {
                let up = space.raise[r][q];
                let amp = (space.states[r][q] as f64 + 1.0).sqrt();
                matrix[(up, i)] += c * am[(q, k)] * (amp / mk.sqrt());
            }
        }
    }
    Ok(FockOperator {
        space: space.clone(),
        matrix,
        antilinear,
        structure: LevelStructure::Preserving,
    })
}

/// `a*(g) = Σ_k g_k a_k*`, with creation out of the top level dropped.
pub fn creation(space: &Arc<FockSpace>, g: &ComplexVector) -> Result<FockOperator> {
    check_dim(space.d(), g.space().dim())?;
    let dim = space.dim();
    let mut matrix = CMat::zeros(dim, dim);
    for i in space.levels_up_to(space.cutoff.saturating_sub(1)) {
        if space.cutoff == 0 {
            break;
        }
        for k in 0..space.d() {
            let up = space.raise[i][k];
            let amp = (space.states[i][k] as f64 + 1.0).sqrt();
            matrix[(up, i)] += g.coords()[k] * amp;
        }
    }
    Ok(FockOperator {
        space: space.clone(),
        matrix,
        antilinear: false,
        structure: LevelStructure::Raising,
    })
}

/// `a(g) = Σ_k conj(g_k) a_k`.
pub fn annihilation(space: &Arc<FockSpace>, g: &ComplexVector) -> Result<FockOperator> {
    Ok(creation(space, g)?.adjoint())
}

/// `φ(h) = (a(h) + a*(h)) / √2`.
pub fn field_operator(space: &Arc<FockSpace>, h: &ComplexVector) -> Result<FockOperator> {
    let f = annihilation(space, h)?.add(&creation(space, h)?)?;
    Ok(f.scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)))
}

/// `exp(i φ(h))` on the truncated space.
pub fn weyl_matrix(space: &Arc<FockSpace>, h: &ComplexVector) -> Result<FockOperator> {
    let phi = field_operator(space, h)?;
    let generator = phi.matrix() * Complex64::new(0.0, 1.0);
    Ok(FockOperator {
        space: space.clone(),
        matrix: generator.exp(),
        antilinear: false,
        structure: LevelStructure::Mixed,
    })
}

/// The exact vector `c · e^{(i/√2) g}`.
#[derive(Clone, Debug)]
pub struct CoherentState {
    pub prefactor: Complex64,
    pub label: ComplexVector,
}

impl CoherentState {
    /// `e^{(i/√2) k}`.
    pub fn frame(k: &ComplexVector) -> Self {
        Self {
            prefactor: Complex64::new(1.0, 0.0),
            label: k.clone(),
        }
    }

    /// `W(h)` applied exactly:
    /// `W(h) e^{(i/√2)k} = exp(¼‖k‖² − ¼‖h+k‖² − (i/2) Im⟨h,k⟩) e^{(i/√2)(h+k)}`.
    pub fn weyl(&self, h: &ComplexVector) -> Result<Self> {
        let k = &self.label;
        let hk = h.add(k)?;
        let im = inner(h, k)?.im;
        let expo = Complex64::new(0.25 * k.norm().powi(2) - 0.25 * hk.norm().powi(2), -0.5 * im);
        Ok(Self {
            prefactor: self.prefactor * expo.exp(),
            label: hk,
        })
    }

    pub fn to_fock(&self, space: &Arc<FockSpace>) -> Result<FockVector> {
        let scaled = self.label.scale(Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2));
        Ok(coherent(space, &scaled)?.scale(self.prefactor))
    }
}

/// `W(h) e^{(i/√2) k}` by the closed form, truncated at the cutoff.
pub fn weyl_on_coherent(space: &Arc<FockSpace>, h: &ComplexVector, k: &ComplexVector) -> Result<FockVector> {
    CoherentState::frame(k).weyl(h)?.to_fock(space)
}

/// `‖Q_L (W W* − 1) Q_L‖` for the matrix realization, `Q_L` the projection
/// onto levels `≤ level`.
pub fn unitarity_defect(space: &Arc<FockSpace>, h: &ComplexVector, level: usize) -> Result<f64> {
    let w = weyl_matrix(space, h)?;
    let ww = w.compose(&w.adjoint())?;
    ww.distance_on_levels(&FockOperator::identity(space), level)
}

/// Largest deviation, on levels `≤ level`, between the matrix Weyl operator
/// applied to truncated frame vectors `e^{(i/√2)k}` and the closed form.
pub fn weyl_truncation_defect(
    space: &Arc<FockSpace>,
    h: &ComplexVector,
    probes: &[ComplexVector],
    level: usize,
) -> Result<f64> {
    let w = weyl_matrix(space, h)?;
    let mut worst: f64 = 0.0;
    for k in probes {
        let input = CoherentState::frame(k).to_fock(space)?;
        let lhs = w.apply(&input)?.truncate(level);
        let rhs = weyl_on_coherent(space, h, k)?.truncate(level);
        worst = worst.max(lhs.sub(&rhs)?.norm());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondQuantizedReport {
    pub cutoff: usize,
    pub samples: usize,
    /// `max ‖Γ(s) e^{ik} − e^{−ik}‖`, k ∈ K.
    pub tomita_residual: f64,
    /// `max ‖Γ(j) W(k) Γ(j) ψ − W(jk)* ψ‖` on frame vectors.
    pub conjugation_residual: f64,
    /// `max ‖Γ(δ^{it}) W(k) Γ(δ^{−it}) ψ − W(δ^{it}k) ψ‖` on frame vectors.
    pub flow_residual: f64,
    /// `max |exp(−i Im⟨h,k′⟩) − 1|`, h ∈ K, k′ ∈ K′.
    pub ccr_phase_residual: f64,
    /// `max ‖W(h)W(k′)ψ − W(k′)W(h)ψ‖` on frame vectors, closed form.
    pub commutator_residual: f64,
    pub max_symplectic_pairing: f64,
}

impl SecondQuantizedReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.tomita_residual,
            self.conjugation_residual,
            self.flow_residual,
            self.ccr_phase_residual,
            self.commutator_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn sample_in<R: Rng + ?Sized>(k: &RealSubspace, radius: f64, rng: &mut R) -> ComplexVector {
    let coeffs = crate::rng::normal_rvec(rng, k.dim());
    let v = k.basis_matrix() * coeffs;
    let n = v.norm();
    let v = if n > 0.0 { v * (radius / n) } else { v };
    ComplexVector::from_real(k.space(), &v).expect("basis lives in the space")
}

/// Checks the second-quantized modular relations for the standard subspace
/// `k` on the Fock space truncated at `cutoff`.
pub fn second_quantized_modular_check<R: Rng + ?Sized>(
    k: &RealSubspace,
    cutoff: usize,
    samples: usize,
    t: f64,
    rng: &mut R,
) -> Result<SecondQuantizedReport> {
    let s = tomita_operator(k)?;
    let md = modular_data(&s)?;
    let kp = k.symplectic_complement();
    let space = FockSpace::new(k.space().dim(), cutoff)?;
    let i = Complex64::new(0.0, 1.0);

    let gs = gamma(&space, &OneParticleMap::from(&s))?;
    let gj = gamma(&space, &OneParticleMap::from(&md.j))?;
    let flow = md.modular_flow(t);
    let g_flow = gamma(&space, &OneParticleMap::from(&flow))?;
    let g_flow_inv = gamma(&space, &OneParticleMap::from(&md.modular_flow(-t)))?;

    let mut report = SecondQuantizedReport {
        cutoff,
        samples,
        tomita_residual: 0.0,
        conjugation_residual: 0.0,
        flow_residual: 0.0,
        ccr_phase_residual: 0.0,
        commutator_residual: 0.0,
        max_symplectic_pairing: 0.0,
    };
    for _ in 0..samples {
        let radius = 0.25 + 0.75 * rng.random::<f64>();
        let kv = sample_in(k, radius, rng);
        let lhs = gs.apply(&coherent(&space, &kv.scale(i))?)?;
        let rhs = coherent(&space, &kv.scale(-i))?;
        report.tomita_residual = report.tomita_residual.max(lhs.sub(&rhs)?.norm());

        let g = {
            let c = CVec::from_fn(space.d(), |_, _| Complex64::new(normal(rng), normal(rng)));
            let n = c.norm();
            ComplexVector::new(k.space(), c * Complex64::new(0.8 / n, 0.0))?
        };
        let psi = CoherentState::frame(&g).to_fock(&space)?;
        let w = weyl_matrix(&space, &kv)?;

        let jk = md.j.apply(&kv)?;
        let lhs = gj.compose(&w)?.compose(&gj)?.apply(&psi)?;
        let rhs = weyl_matrix(&space, &jk.scale(Complex64::new(-1.0, 0.0)))?.apply(&psi)?;
        report.conjugation_residual = report.conjugation_residual.max(lhs.sub(&rhs)?.norm());

        let fk = flow.apply(&kv)?;
        let lhs = g_flow.compose(&w)?.compose(&g_flow_inv)?.apply(&psi)?;
        let rhs = weyl_matrix(&space, &fk)?.apply(&psi)?;
        report.flow_residual = report.flow_residual.max(lhs.sub(&rhs)?.norm());

        let kpv = sample_in(&kp, radius, rng);
        let im = inner(&kv, &kpv)?.im;
        report.max_symplectic_pairing = report.max_symplectic_pairing.max(im.abs());
        let phase = Complex64::from_polar(1.0, -im) - Complex64::new(1.0, 0.0);
        report.ccr_phase_residual = report.ccr_phase_residual.max(phase.norm());
        let frame = CoherentState::frame(&g);
        let ab = frame.weyl(&kpv)?.weyl(&kv)?.to_fock(&space)?;
        let ba = frame.weyl(&kv)?.weyl(&kpv)?.to_fock(&space)?;
        report.commutator_residual = report.commutator_residual.max(ab.sub(&ba)?.norm());
    }
    Ok(report)
}
