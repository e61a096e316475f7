//! Realification helpers and small dense kernels shared by the modules.
//!
//! A complex vector `a + ib` in C^d is stored as the real vector `(a, b)` in
//! R^{2d}. Multiplication by `i` is the block matrix `Jc = [[0, -I], [I, 0]]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<Complex64>;

pub fn complex_structure(d: usize) -> RMat {
    let mut j = RMat::zeros(2 * d, 2 * d);
    for k in 0..d {
        j[(k, d + k)] = -1.0;
        j[(d + k, k)] = 1.0;
    }
    j
}

/// `Jc * m` without forming `Jc`.
pub fn times_i(m: &RMat) -> RMat {
    let d = m.nrows() / 2;
    let mut out = RMat::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        for k in 0..d {
            out[(k, c)] = -m[(d + k, c)];
            out[(d + k, c)] = m[(k, c)];
        }
    }
    out
}

pub fn realify_vec(v: &CVec) -> RVec {
    let d = v.len();
    RVec::from_fn(2 * d, |k, _| if k < d { v[k].re } else { v[k - d].im })
}

pub fn complexify_vec(v: &RVec) -> CVec {
    let d = v.len() / 2;
    CVec::from_fn(d, |k, _| Complex64::new(v[k], v[d + k]))
}

/// Columns of `m` read as complex vectors.
pub fn complexify_cols(m: &RMat) -> CMat {
    let d = m.nrows() / 2;
    CMat::from_fn(d, m.ncols(), |r, c| Complex64::new(m[(r, c)], m[(d + r, c)]))
}

pub fn realify_cols(m: &CMat) -> RMat {
    let d = m.nrows();
    RMat::from_fn(2 * d, m.ncols(), |r, c| {
        if r < d {
            m[(r, c)].re
        } else {
            m[(r - d, c)].im
        }
    })
}

/// Real matrix of `x ↦ M x`.
pub fn realify_linear(m: &CMat) -> RMat {
    let d = m.nrows();
    let mut out = RMat::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            let z = m[(r, c)];
            out[(r, c)] = z.re;
            out[(r, d + c)] = -z.im;
            out[(d + r, c)] = z.im;
            out[(d + r, d + c)] = z.re;
        }
    }
    out
}

/// Real matrix of `x ↦ A conj(x)`.
pub fn realify_antilinear(a: &CMat) -> RMat {
    let d = a.nrows();
    let mut out = RMat::zeros(2 * d, 2 * d);
    for r in 0..d {
        for c in 0..d {
            let z = a[(r, c)];
            out[(r, c)] = z.re;
            out[(r, d + c)] = z.im;
            out[(d + r, c)] = z.im;
            out[(d + r, d + c)] = -z.re;
        }
    }
    out
}

/// Inverse of [`realify_linear`], reading the left column blocks.
pub fn linear_part(m: &RMat) -> CMat {
    let d = m.nrows() / 2;
    CMat::from_fn(d, d, |r, c| Complex64::new(m[(r, c)], m[(d + r, c)]))
}

/// Inverse of [`realify_antilinear`], reading the left column blocks.
pub fn antilinear_part(m: &RMat) -> CMat {
    linear_part(m)
}

pub fn op_norm(m: &RMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

pub fn op_norm_c(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. A column is
/// dropped when its residual falls below `drop_tol` times its original norm.
pub fn orthonormalize(cols: &RMat, drop_tol: f64) -> RMat {
    let n = cols.nrows();
    let mut kept: Vec<RVec> = Vec::new();
    for c in 0..cols.ncols() {
        let mut v: RVec = cols.column(c).into_owned();
        let norm0 = v.norm();
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for q in &kept {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let r = v.norm();
        if r < drop_tol * norm0 {
            continue;
        }
        kept.push(v / r);
    }
    let mut out = RMat::zeros(n, kept.len());
    for (c, q) in kept.iter().enumerate() {
        out.set_column(c, q);
    }
    out
}

/// Full thin SVD `m = U diag(σ) Vᵀ` by one-sided Jacobi rotations, after a
/// Householder QR when `m` is tall. Singular values come out descending.
/// Used for every rank-revealing decomposition: nalgebra's bidiagonal SVD
/// returns inaccurate vectors and values on some rank-deficient inputs.
fn jacobi_svd(m: &RMat) -> (RMat, Vec<f64>, RMat) {
    let (rows, n) = m.shape();
    let (q, mut a) = if rows > n {
        let qr = m.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, m.clone())
    };
    let mut v = RMat::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(r).norm_squared();
                let gamma = a.column(p).dot(&a.column(r));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, r, c, s);
                rotate_columns(&mut v, p, r, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = RMat::zeros(a.nrows(), n);
    let mut vs = RMat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (c, &k) in order.iter().enumerate() {
        let s = norms[k];
        if s > 0.0 {
            u.set_column(c, &(a.column(k) / s));
        }
        vs.set_column(c, &v.column(k));
        sigma.push(s);
    }
    let u = match q {
        Some(q) => q * u,
        None => u,
    };
    (u, sigma, vs)
}

fn rotate_columns(m: &mut RMat, p: usize, r: usize, c: f64, s: f64) {
    for row in 0..m.nrows() {
        let (x, y) = (m[(row, p)], m[(row, r)]);
        m[(row, p)] = c * x - s * y;
        m[(row, r)] = s * x + c * y;
    }
}

/// Thin SVD truncated to singular values above a relative threshold.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: RMat,
    pub sigma: Vec<f64>,
    pub v: RMat,
}

impl TruncatedSvd {
    /// Singular triples of `m` with `σ > rel_tol · σ_max`.
    pub fn new(m: &RMat, rel_tol: f64) -> Self {
        if m.ncols() == 0 || m.nrows() == 0 {
            return Self { u: RMat::zeros(m.nrows(), 0), sigma: Vec::new(), v: RMat::zeros(m.ncols(), 0) };
        }
        let (u, sv, v) = jacobi_svd(m);
        let smax = sv[0];
        let r = sv.iter().take_while(|&&s| smax > 0.0 && s > rel_tol * smax).count();
        Self {
            u: u.columns(0, r).into_owned(),
            sigma: sv[..r].to_vec(),
            v: v.columns(0, r).into_owned(),
        }
    }

    /// `A` minimizing `‖m A - q‖` on the retained triples.
    pub fn solve(&self, q: &RMat) -> RMat {
        let mut w = self.u.transpose() * q;
        for (r, s) in self.sigma.iter().enumerate() {
            w.row_mut(r).unscale_mut(*s);
        }
        &self.v * w
    }
}

/// Orthonormal basis of the column space of `m`, dropping singular values at
/// or below `rel_tol` times the largest.
pub fn column_range(m: &RMat, rel_tol: f64) -> RMat {
    TruncatedSvd::new(m, rel_tol).u
}

/// Orthonormal basis of the orthogonal complement of `range(q)` in R^n,
/// where `q` has orthonormal columns.
pub fn orthogonal_complement(q: &RMat, n: usize) -> RMat {
    if q.ncols() == 0 {
        return RMat::identity(n, n);
    }
    let p = RMat::identity(n, n) - q * q.transpose();
    let eig = SymmetricEigen::new((&p + p.transpose()) * 0.5);
    let idx: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    let mut out = RMat::zeros(n, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        out.set_column(c, &eig.eigenvectors.column(k));
    }
    orthonormalize(&out, 1e-10)
}

/// Orthonormal basis of `{c : b c ≈ 0}`. Singular values at or below `tol`
/// count as zero.
pub fn null_space(b: &RMat, tol: f64) -> RMat {
    let a = b.ncols();
    if b.nrows() == 0 || a == 0 {
        return RMat::identity(a, a);
    }
    let (_, sv, v) = jacobi_svd(b);
    let r = sv.iter().take_while(|&&s| s > tol).count();
    let row_space = v.columns(0, r).into_owned();
    orthogonal_complement(&orthonormalize(&row_space, 1e-10), a)
}

/// Right singular vectors of `m` (tall or square) with singular value at or
/// below `tol`, together with all singular values in ascending order.
pub fn small_right_singular(m: &RMat, tol: f64) -> (RMat, Vec<f64>) {
    let k = m.ncols();
    if k == 0 {
        return (RMat::zeros(0, 0), Vec::new());
    }
    if m.nrows() < k {
        let mut padded = RMat::zeros(k, k);
        padded.view_mut((0, 0), (m.nrows(), k)).copy_from(m);
        return small_right_singular(&padded, tol);
    }
    let (_, mut sv, v) = jacobi_svd(m);
    let picked: Vec<usize> = (0..k).rev().filter(|&i| sv[i] <= tol).collect();
    let mut out = RMat::zeros(k, picked.len());
    for (c, &i) in picked.iter().enumerate() {
        out.set_column(c, &v.column(i));
    }
    sv.reverse();
    (out, sv)
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
