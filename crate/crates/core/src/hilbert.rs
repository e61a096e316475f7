//! Complex Hilbert spaces C^d, real-linear and antilinear maps on their
//! realification, and closed real subspaces.
//!
//! The inner product is conjugate-linear in the first slot. Under the
//! realification `(a, b)` of `a + ib`, `Re⟨x,y⟩` is the Euclidean product and
//! `Im⟨x,y⟩ = Re⟨-ix, y⟩ = xᵀ Ω y` with `Ω = -Jc`.

use nalgebra::SVD;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    self, complexify_vec, null_space, op_norm, orthonormalize, realify_vec, times_i, CMat, CVec,
    RMat, RVec,
};

/// Columns with residual below this fraction of their norm are dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;
/// Default projection distance below which two subspaces are equal.
pub const SUBSPACE_TOL: f64 = 1e-9;
/// Tolerance for the linear/antilinear claim of a [`RealLinearMap`].
pub const LINEARITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ComplexVectorSpace {
    dim: usize,
}

impl ComplexVectorSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Usage("complex dimension must be at least 1".into()));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.dim
    }

    fn same(&self, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    space: ComplexVectorSpace,
    coords: CVec,
}

impl ComplexVector {
    pub fn new(space: ComplexVectorSpace, coords: CVec) -> Result<Self> {
        check_dim(space.dim, coords.len())?;
        Ok(Self { space, coords })
    }

    pub fn from_slice(coords: &[Complex64]) -> Result<Self> {
        let space = ComplexVectorSpace::new(coords.len())?;
        Ok(Self {
            space,
            coords: CVec::from_column_slice(coords),
        })
    }

    pub fn zeros(space: ComplexVectorSpace) -> Self {
        Self {
            space,
            coords: CVec::zeros(space.dim),
        }
    }

    /// The standard basis vector `e_{k+1}`.
    pub fn unit(space: ComplexVectorSpace, k: usize) -> Result<Self> {
        if k >= space.dim {
            return Err(Error::Usage(format!("basis index {k} out of range for dimension {}", space.dim)));
        }
        let mut v = Self::zeros(space);
        v.coords[k] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_real(space: ComplexVectorSpace, v: &RVec) -> Result<Self> {
        check_dim(space.real_dim(), v.len())?;
        Ok(Self {
            space,
            coords: complexify_vec(v),
        })
    }

    pub fn space(&self) -> ComplexVectorSpace {
        self.space
    }

    pub fn coords(&self) -> &CVec {
        &self.coords
    }

    pub fn realify(&self) -> RVec {
        realify_vec(&self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            space: self.space,
            coords: &self.coords * z,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.space.same(&other.space)?;
        Ok(Self {
            space: self.space,
            coords: &self.coords + &other.coords,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.space.same(&other.space)?;
        Ok(Self {
            space: self.space,
            coords: &self.coords - &other.coords,
        })
    }

    pub fn conj(&self) -> Self {
        Self {
            space: self.space,
            coords: self.coords.map(|z| z.conj()),
        }
    }
}

pub fn inner(x: &ComplexVector, y: &ComplexVector) -> Result<Complex64> {
    x.space.same(&y.space)?;
    Ok(x.coords.dotc(&y.coords))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Linearity {
    ComplexLinear,
    Antilinear,
}

/// A real-linear map on the realification of `space`, tagged with the class
/// it claims to belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct RealLinearMap {
    space: ComplexVectorSpace,
    matrix: RMat,
    linearity: Linearity,
}

impl RealLinearMap {
    pub fn new(space: ComplexVectorSpace, matrix: RMat, linearity: Linearity) -> Result<Self> {
        check_dim(space.real_dim(), matrix.nrows())?;
        check_dim(space.real_dim(), matrix.ncols())?;
        Ok(Self {
            space,
            matrix,
            linearity,
        })
    }

    /// `x ↦ m x`.
    pub fn complex_linear(space: ComplexVectorSpace, m: &CMat) -> Result<Self> {
        check_dim(space.dim, m.nrows())?;
        check_dim(space.dim, m.ncols())?;
        Ok(Self {
            space,
            matrix: linalg::realify_linear(m),
            linearity: Linearity::ComplexLinear,
        })
    }

    /// `x ↦ a conj(x)`.
    pub fn antilinear(space: ComplexVectorSpace, a: &CMat) -> Result<Self> {
        check_dim(space.dim, a.nrows())?;
        check_dim(space.dim, a.ncols())?;
        Ok(Self {
            space,
            matrix: linalg::realify_antilinear(a),
            linearity: Linearity::Antilinear,
        })
    }

    pub fn identity(space: ComplexVectorSpace) -> Self {
        Self {
            space,
            matrix: RMat::identity(space.real_dim(), space.real_dim()),
            linearity: Linearity::ComplexLinear,
        }
    }

    /// Componentwise complex conjugation.
    pub fn conjugation(space: ComplexVectorSpace) -> Self {
        let d = space.dim;
        let mut m = RMat::identity(2 * d, 2 * d);
        for k in d..2 * d {
            m[(k, k)] = -1.0;
        }
        Self {
            space,
            matrix: m,
            linearity: Linearity::Antilinear,
        }
    }

    pub fn space(&self) -> ComplexVectorSpace {
        self.space
    }

    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    pub fn linearity(&self) -> Linearity {
        self.linearity
    }

    /// The complex matrix `m` with `x ↦ m x` or `x ↦ m conj(x)`, read off the
    /// real matrix according to the claimed class.
    pub fn complex_matrix(&self) -> CMat {
        match self.linearity {
            Linearity::ComplexLinear => linalg::linear_part(&self.matrix),
            Linearity::Antilinear => linalg::antilinear_part(&self.matrix),
        }
    }

    /// `‖M Jc ∓ Jc M‖ / max(1, ‖M‖)`, zero when the claimed class holds.
    pub fn linearity_defect(&self) -> f64 {
        let mj = times_i(&self.matrix.transpose()).transpose() * -1.0;
        let jm = times_i(&self.matrix);
        let diff = match self.linearity {
            Linearity::ComplexLinear => mj - jm,
            Linearity::Antilinear => mj + jm,
        };
        diff.norm() / self.matrix.norm().max(1.0)
    }

    pub fn verify_linearity(&self, tol: f64) -> Result<()> {
        let defect = self.linearity_defect();
        if defect > tol {
            return Err(Error::Usage(format!(
                "map claims {:?} but its defect is {defect:.3e}",
                self.linearity
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &ComplexVector) -> Result<ComplexVector> {
        self.space.same(&x.space)?;
        ComplexVector::from_real(self.space, &(&self.matrix * x.realify()))
    }

    pub fn apply_real(&self, cols: &RMat) -> Result<RMat> {
        check_dim(self.space.real_dim(), cols.nrows())?;
        Ok(&self.matrix * cols)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.space.same(&other.space)?;
        let linearity = if self.linearity == other.linearity {
            Linearity::ComplexLinear
        } else {
            Linearity::Antilinear
        };
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
            linearity,
        })
    }

    /// The antilinear adjoint `s*` with `⟨s x, y⟩ = ⟨s* y, x⟩`. On the
    /// realification this is the real transpose.
    pub fn antilinear_adjoint(&self) -> Result<Self> {
        if self.linearity != Linearity::Antilinear {
            return Err(Error::Usage("antilinear_adjoint needs an antilinear map".into()));
        }
        Ok(Self {
            space: self.space,
            matrix: self.matrix.transpose(),
            linearity: Linearity::Antilinear,
        })
    }

    /// The ordinary adjoint `m*` of a complex-linear map.
    pub fn linear_adjoint(&self) -> Result<Self> {
        if self.linearity != Linearity::ComplexLinear {
            return Err(Error::Usage("linear_adjoint needs a complex-linear map".into()));
        }
        Ok(Self {
            space: self.space,
            matrix: self.matrix.transpose(),
            linearity: Linearity::ComplexLinear,
        })
    }

    /// Operator norm of the difference of the real matrices.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.space.same(&other.space)?;
        Ok(op_norm(&(&self.matrix - &other.matrix)))
    }

    pub fn image(&self, k: &RealSubspace) -> Result<RealSubspace> {
        self.space.same(&k.space)?;
        Ok(RealSubspace::from_real_columns(self.space, &(&self.matrix * &k.basis)))
    }
}

/// A real subspace of the realified space, stored by an orthonormal real basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSubspace {
    space: ComplexVectorSpace,
    basis: RMat,
}

impl RealSubspace {
    pub fn zero(space: ComplexVectorSpace) -> Self {
        Self {
            space,
            basis: RMat::zeros(space.real_dim(), 0),
        }
    }

    pub fn full(space: ComplexVectorSpace) -> Self {
        Self {
            space,
            basis: RMat::identity(space.real_dim(), space.real_dim()),
        }
    }

    /// The real-coordinate subspace R^d ⊂ C^d.
    pub fn real_coordinates(space: ComplexVectorSpace) -> Self {
        let d = space.dim;
        Self {
            space,
            basis: RMat::identity(2 * d, d),
        }
    }

    /// Real span of the given columns of the realified space.
    pub fn from_real_columns(space: ComplexVectorSpace, cols: &RMat) -> Self {
        assert_eq!(cols.nrows(), space.real_dim(), "column length must be 2d");
        Self {
            space,
            basis: orthonormalize(cols, DEPENDENCE_TOL),
        }
    }

    pub fn span(space: ComplexVectorSpace, vectors: &[ComplexVector]) -> Result<Self> {
        let mut cols = RMat::zeros(space.real_dim(), vectors.len());
        for (c, v) in vectors.iter().enumerate() {
            space.same(&v.space)?;
            cols.set_column(c, &v.realify());
        }
        Ok(Self::from_real_columns(space, &cols))
    }

    pub fn space(&self) -> ComplexVectorSpace {
        self.space
    }

    /// Real dimension.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis_matrix(&self) -> &RMat {
        &self.basis
    }

    pub fn basis(&self) -> Vec<ComplexVector> {
        (0..self.dim())
            .map(|c| ComplexVector {
                space: self.space,
                coords: complexify_vec(&self.basis.column(c).into_owned()),
            })
            .collect()
    }

    pub fn gram_defect(&self) -> f64 {
        let k = self.dim();
        (self.basis.transpose() * &self.basis - RMat::identity(k, k)).amax()
    }

    pub fn projector(&self) -> RMat {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, v: &RVec) -> RVec {
        &self.basis * (self.basis.transpose() * v)
    }

    /// `‖(1 - P) v‖ / ‖v‖` for a single vector.
    pub fn residual(&self, v: &ComplexVector) -> Result<f64> {
        self.space.same(&v.space)?;
        let r = v.realify();
        let n = r.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        Ok((&r - self.project(&r)).norm() / n)
    }

    /// `i K`.
    pub fn times_i(&self) -> Self {
        Self {
            space: self.space,
            basis: times_i(&self.basis),
        }
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.space.same(&other.space)?;
        let mut cols = RMat::zeros(self.space.real_dim(), self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.basis);
        cols.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Ok(Self::from_real_columns(self.space, &cols))
    }

    /// Vectors of `self` whose residual against `other` is at most `tol`.
    pub fn intersection(&self, other: &Self, tol: f64) -> Result<Self> {
        self.space.same(&other.space)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Self::zero(self.space));
        }
        let r = &self.basis - &other.basis * (other.basis.transpose() * &self.basis);
        let (v, _) = linalg::small_right_singular(&r, tol);
        Ok(Self::from_real_columns(self.space, &(&self.basis * v)))
    }

    /// `‖(1 - P_self) P_other‖`, zero iff `other ⊆ self`.
    pub fn inclusion_residual(&self, other: &Self) -> Result<f64> {
        self.space.same(&other.space)?;
        Ok(op_norm(&(&other.basis - &self.basis * (self.basis.transpose() * &other.basis))))
    }

    /// `other ⊆ self` up to `tol`.
    pub fn contains(&self, other: &Self, tol: f64) -> Result<bool> {
        Ok(self.inclusion_residual(other)? <= tol)
    }

    /// `‖P_self - P_other‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self
            .inclusion_residual(other)?
            .max(other.inclusion_residual(self)?))
    }

    pub fn equals(&self, other: &Self, tol: f64) -> Result<bool> {
        Ok(self.distance(other)? < tol)
    }

    /// Principal angles with `other`, ascending.
    pub fn principal_angles(&self, other: &Self) -> Result<Vec<f64>> {
        self.space.same(&other.space)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Vec::new());
        }
        let m = self.basis.transpose() * &other.basis;
        let sv = SVD::new(m, false, false).singular_values;
        let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
        angles.sort_by(f64::total_cmp);
        Ok(angles)
    }

    /// `max |Im⟨h, k⟩|` over basis pairs.
    pub fn symplectic_pairing(&self, other: &Self) -> Result<f64> {
        self.space.same(&other.space)?;
        let m = times_i(&self.basis).transpose() * &other.basis;
        Ok(m.amax())
    }

    /// `K′ = {h : Im⟨h, k⟩ = 0 for all k ∈ K}`, the real orthogonal complement
    /// of `iK`.
    pub fn symplectic_complement(&self) -> Self {
        let ik = orthonormalize(&times_i(&self.basis), DEPENDENCE_TOL);
        Self {
            space: self.space,
            basis: linalg::orthogonal_complement(&ik, self.space.real_dim()),
        }
    }

    /// `{h ∈ ambient : Im⟨h, k⟩ = 0 for all k ∈ K}`. Pairings at or below
    /// `tol` count as zero.
    pub fn symplectic_complement_within(&self, ambient: &Self, tol: f64) -> Result<Self> {
        self.space.same(&ambient.space)?;
        let b = times_i(&self.basis).transpose() * &ambient.basis;
        let c = null_space(&b, tol);
        Ok(Self::from_real_columns(self.space, &(&ambient.basis * c)))
    }
}
