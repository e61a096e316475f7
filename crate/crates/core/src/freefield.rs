//! The mass-m scalar free field in two spacetime dimensions, discretized in
//! rapidity: `p(θ) = (m cosh θ, m sinh θ)`, one-particle vectors sampled on a
//! uniform periodic θ-grid with inner product `h Σ conj(φ)ψ`.
//!
//! Boosts are θ-shifts applied as FFT phase multipliers, translations are the
//! phases `e^{i a·p(θ)}` and the total reflection `x ↦ -x` is complex
//! conjugation. The wedge modular operator `δ^{1/2}` is the imaginary shift
//! `θ ↦ θ + direction·iπ`, i.e. the multiplier `e^{-direction·π·ω}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{ComplexVectorSpace, RealSubspace};
use crate::linalg::{RMat, RVec};

pub const DEFAULT_THETA_MAX: f64 = 8.0;
pub const DEFAULT_N_POINTS: usize = 16384;
/// Relative mass allowed to wrap around the θ-grid under a boost.
pub const DEFAULT_LEAKAGE_BUDGET: f64 = 1e-16;
/// Direction of the imaginary shift for the right wedge at the origin.
pub const RIGHT_WEDGE_DIRECTION: i8 = -1;

const PROJECTION_NZ: usize = 400;
const PROFILE_MARGIN: f64 = 1500.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RapidityGrid {
    pub theta_max: f64,
    pub n_points: usize,
}

impl RapidityGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.theta_max / self.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.theta_max + j as f64 * self.spacing()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct ProfileKey {
    radius: u64,
    gram: [u64; 3],
    ny: usize,
    nz: usize,
}

pub struct FreeFieldModel {
    mass: f64,
    grid: RapidityGrid,
    thetas: Vec<f64>,
    omegas: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    profiles: Mutex<HashMap<ProfileKey, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for FreeFieldModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FreeFieldModel")
            .field("mass", &self.mass)
            .field("grid", &self.grid)
            .finish()
    }
}

impl FreeFieldModel {
    pub fn new(mass: f64, theta_max: f64, n_points: usize) -> Result<Arc<Self>> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Usage(format!("mass must be positive, got {mass}")));
        }
        if !(theta_max >= 4.0 && theta_max.is_finite()) {
            return Err(Error::Usage(format!("theta_max must be at least 4, got {theta_max}")));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::Usage(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        let grid = RapidityGrid { theta_max, n_points };
        let h = grid.spacing();
        let thetas = (0..n_points).map(|j| grid.node(j)).collect();
        let omegas = (0..n_points)
            .map(|k| {
                let k = if k < n_points / 2 { k as f64 } else { k as f64 - n_points as f64 };
                2.0 * PI * k / (n_points as f64 * h)
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            mass,
            grid,
            thetas,
            omegas,
            fwd: planner.plan_fft_forward(n_points),
            inv: planner.plan_fft_inverse(n_points),
            profiles: Mutex::new(HashMap::new()),
        }))
    }

    pub fn default_mass(mass: f64) -> Result<Arc<Self>> {
        Self::new(mass, DEFAULT_THETA_MAX, DEFAULT_N_POINTS)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn grid(&self) -> RapidityGrid {
        self.grid
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// θ-frequencies of the DFT coefficients, Nyquist counted as negative.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Trapezoid weight of every node of the periodic grid.
    pub fn weight(&self) -> f64 {
        self.spacing()
    }

    /// `(p0, p1)` at rapidity θ.
    pub fn momentum(&self, theta: f64) -> [f64; 2] {
        [self.mass * theta.cosh(), self.mass * theta.sinh()]
    }

    /// Complex dimension of the grid space.
    pub fn space(&self) -> ComplexVectorSpace {
        ComplexVectorSpace::new(self.n_points()).expect("n_points >= 16")
    }

    pub(crate) fn fft(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.fwd.process(&mut buf);
        buf
    }

    pub(crate) fn ifft(&self, mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
        self.inv.process(&mut coeffs);
        let s = 1.0 / self.n_points() as f64;
        coeffs.iter_mut().for_each(|c| *c *= s);
        coeffs
    }

    /// `F(|M^{-T} k(θ_j)|)` on the grid for the radial bump of radius `r`,
    /// memoized by the quadratic form `MᵀM`.
    fn profile(&self, radius: f64, shape: &Matrix2<f64>, ny: usize, nz: usize) -> Arc<Vec<f64>> {
        let gram = shape.transpose() * shape;
        let key = ProfileKey {
            radius: radius.to_bits(),
            gram: [gram[(0, 0)], gram[(0, 1)], gram[(1, 1)]].map(f64::to_bits),
            ny,
            nz,
        };
        if let Some(p) = self.profiles.lock().expect("cache lock").get(&key) {
            return p.clone();
        }
        let minv_t = shape
            .try_inverse()
            .expect("shape matrix is invertible")
            .transpose();
        let kappas: Vec<f64> = self
            .thetas
            .iter()
            .map(|&t| {
                let [p0, p1] = self.momentum(t);
                (minv_t * nalgebra::Vector2::new(p0, -p1)).norm()
            })
            .collect();
        let (ys, a, dy) = radial_projection(radius, ny, nz);
        let values: Vec<f64> = kappas
            .par_iter()
            .map(|&kap| {
                let mut s = 0.0;
                for (y, w) in ys.iter().zip(&a) {
                    s += w * (kap * y).cos();
                }
                s * dy
            })
            .collect();
        let values = Arc::new(values);
        self.profiles
            .lock()
            .expect("cache lock")
            .insert(key, values.clone());
        values
    }

    fn kappa_max(&self, shape: &Matrix2<f64>) -> f64 {
        let minv_t = shape.try_inverse().expect("invertible").transpose();
        let t = self.grid.theta_max;
        [-t, t]
            .iter()
            .map(|&th| {
                let [p0, p1] = self.momentum(th);
                (minv_t * nalgebra::Vector2::new(p0, -p1)).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn bump_profile(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s2)).exp()
    }
}

/// Interior nodes `y_i` of `(-r, r)`, the line integrals `A(y_i) = ∫ b(y_i, z) dz`
/// of the radial bump, and the spacing.
fn radial_projection(r: f64, ny: usize, nz: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let dy = 2.0 * r / ny as f64;
    let ys: Vec<f64> = (1..ny).map(|i| -r + i as f64 * dy).collect();
    let a = ys
        .iter()
        .map(|&y| {
            let zm = (r * r - y * y).max(0.0).sqrt();
            let dz = 2.0 * zm / nz as f64;
            let mut s = 0.0;
            for k in 1..nz {
                let z = -zm + k as f64 * dz;
                s += bump_profile((y * y + z * z) / (r * r));
            }
            s * dz
        })
        .collect();
    (ys, a, dy)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Region2 {
    RightWedge { apex: [f64; 2] },
    LeftWedge { apex: [f64; 2] },
    /// `RightWedge(left) ∩ LeftWedge(right)`.
    DoubleCone { left: [f64; 2], right: [f64; 2] },
    Complement(Box<Region2>),
}

fn add2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

impl Region2 {
    pub fn right_wedge(apex: [f64; 2]) -> Self {
        Self::RightWedge { apex }
    }

    pub fn left_wedge(apex: [f64; 2]) -> Self {
        Self::LeftWedge { apex }
    }

    pub fn double_cone(center: [f64; 2], radius: f64) -> Self {
        Self::DoubleCone {
            left: [center[0], center[1] - radius],
            right: [center[0], center[1] + radius],
        }
    }

    pub fn is_wedge(&self) -> bool {
        matches!(self, Self::RightWedge { .. } | Self::LeftWedge { .. })
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Self::DoubleCone { .. })
    }

    /// Causal complement in closed form.
    pub fn causal_complement(&self) -> Self {
        match self {
            Self::RightWedge { apex } => Self::LeftWedge { apex: *apex },
            Self::LeftWedge { apex } => Self::RightWedge { apex: *apex },
            Self::DoubleCone { .. } => Self::Complement(Box::new(self.clone())),
            Self::Complement(inner) => (**inner).clone(),
        }
    }

    /// The two generating wedges of a double cone.
    pub fn generating_wedges(&self) -> Option<(Region2, Region2)> {
        match self {
            Self::DoubleCone { left, right } => {
                Some((Self::right_wedge(*left), Self::left_wedge(*right)))
            }
            _ => None,
        }
    }

    pub fn transform(&self, g: &Poincare2) -> Self {
        match self {
            Self::RightWedge { apex } | Self::LeftWedge { apex } => {
                let a = g.apply_point(*apex);
                let right = matches!(self, Self::RightWedge { .. }) != g.reflect;
                if right {
                    Self::RightWedge { apex: a }
                } else {
                    Self::LeftWedge { apex: a }
                }
            }
            Self::DoubleCone { left, right } => {
                let (l, r) = (g.apply_point(*left), g.apply_point(*right));
                if g.reflect {
                    Self::DoubleCone { left: r, right: l }
                } else {
                    Self::DoubleCone { left: l, right: r }
                }
            }
            Self::Complement(inner) => Self::Complement(Box::new(inner.transform(g))),
        }
    }

    /// Half-planes `ℓ·x > β` whose intersection is the region (wedges and
    /// double cones only).
    fn half_planes(&self) -> Vec<([f64; 2], f64)> {
        let dot = |l: [f64; 2], a: [f64; 2]| l[0] * a[0] + l[1] * a[1];
        match self {
            Self::RightWedge { apex } => [[-1.0, 1.0], [1.0, 1.0]]
                .iter()
                .map(|&l| (l, dot(l, *apex)))
                .collect(),
            Self::LeftWedge { apex } => [[1.0, -1.0], [-1.0, -1.0]]
                .iter()
                .map(|&l| (l, dot(l, *apex)))
                .collect(),
            Self::DoubleCone { left, right } => {
                let mut v = Self::right_wedge(*left).half_planes();
                v.extend(Self::left_wedge(*right).half_planes());
                v
            }
            Self::Complement(_) => Vec::new(),
        }
    }

    pub fn contains_point(&self, x: [f64; 2]) -> bool {
        match self {
            Self::Complement(inner) => match &**inner {
                Self::DoubleCone { left, right } => {
                    Self::left_wedge(*left).contains_point(x)
                        || Self::right_wedge(*right).contains_point(x)
                }
                other => other.causal_complement().contains_point(x),
            },
            _ => self
                .half_planes()
                .iter()
                .all(|(l, b)| l[0] * x[0] + l[1] * x[1] > *b),
        }
    }

    /// Whether the ellipse `{c + M^{-1} y : |y| ≤ r}` lies strictly inside.
    fn contains_ellipse(&self, c: [f64; 2], shape: &Matrix2<f64>, r: f64) -> bool {
        let minv_t = shape.try_inverse().expect("invertible").transpose();
        let inside = |region: &Region2| {
            region.half_planes().iter().all(|(l, b)| {
                let reach = r * (minv_t * nalgebra::Vector2::new(l[0], l[1])).norm();
                l[0] * c[0] + l[1] * c[1] - reach > *b
            })
        };
        match self {
            Self::Complement(inner) => match &**inner {
                Self::DoubleCone { left, right } => {
                    inside(&Self::left_wedge(*left)) || inside(&Self::right_wedge(*right))
                }
                other => inside(&other.causal_complement()),
            },
            _ => inside(self),
        }
    }
}

/// `x ↦ r·Λ(λ)x + a` with `r = -1` when `reflect`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Poincare2 {
    pub rapidity: f64,
    pub translation: [f64; 2],
    pub reflect: bool,
}

impl Poincare2 {
    pub fn identity() -> Self {
        Self { rapidity: 0.0, translation: [0.0, 0.0], reflect: false }
    }

    pub fn boost(rapidity: f64) -> Self {
        Self { rapidity, ..Self::identity() }
    }

    pub fn translation(a: [f64; 2]) -> Self {
        Self { translation: a, ..Self::identity() }
    }

    /// The total reflection `x ↦ -x`.
    pub fn reflection() -> Self {
        Self { reflect: true, ..Self::identity() }
    }

    pub fn lorentz(&self) -> Matrix2<f64> {
        let (c, s) = (self.rapidity.cosh(), self.rapidity.sinh());
        let sign = if self.reflect { -1.0 } else { 1.0 };
        Matrix2::new(c, s, s, c) * sign
    }

    pub fn apply_point(&self, x: [f64; 2]) -> [f64; 2] {
        let y = self.lorentz() * nalgebra::Vector2::new(x[0], x[1]);
        [y[0] + self.translation[0], y[1] + self.translation[1]]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.lorentz() * nalgebra::Vector2::new(other.translation[0], other.translation[1]);
        Self {
            rapidity: self.rapidity + other.rapidity,
            translation: add2(self.translation, [a[0], a[1]]),
            reflect: self.reflect != other.reflect,
        }
    }

    pub fn inverse(&self) -> Self {
        let lin = Self { rapidity: -self.rapidity, translation: [0.0, 0.0], reflect: self.reflect };
        let a = lin.apply_point(self.translation);
        Self { translation: [-a[0], -a[1]], ..lin }
    }
}

/// The smooth bump `x ↦ exp(-1/(1 - |M(x-c)|²/r²))`, zero outside its
/// ellipse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction2 {
    center: [f64; 2],
    radius: f64,
    shape: [[f64; 2]; 2],
    region: Region2,
}

impl TestFunction2 {
    pub fn bump(center: [f64; 2], radius: f64, region: Region2) -> Result<Self> {
        Self::with_shape(center, radius, Matrix2::identity(), region)
    }

    pub fn with_shape(
        center: [f64; 2],
        radius: f64,
        shape: Matrix2<f64>,
        region: Region2,
    ) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Usage(format!("bump radius must be positive, got {radius}")));
        }
        if shape.determinant().abs() < 1e-12 {
            return Err(Error::Usage("bump shape matrix is singular".into()));
        }
        if !region.contains_ellipse(center, &shape, radius) {
            return Err(Error::Usage(format!(
                "bump at {center:?} with radius {radius} is not strictly inside {region:?}"
            )));
        }
        Ok(Self {
            center,
            radius,
            shape: [[shape[(0, 0)], shape[(0, 1)]], [shape[(1, 0)], shape[(1, 1)]]],
            region,
        })
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn region(&self) -> &Region2 {
        &self.region
    }

    pub fn shape(&self) -> Matrix2<f64> {
        Matrix2::new(self.shape[0][0], self.shape[0][1], self.shape[1][0], self.shape[1][1])
    }

    pub fn supported_in(&self, region: &Region2) -> bool {
        region.contains_ellipse(self.center, &self.shape(), self.radius)
    }

    /// The same bump declared in a different (containing) region.
    pub fn relabel(&self, region: Region2) -> Result<Self> {
        Self::with_shape(self.center, self.radius, self.shape(), region)
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        let y = self.shape() * nalgebra::Vector2::new(x[0] - self.center[0], x[1] - self.center[1]);
        bump_profile(y.norm_squared() / (self.radius * self.radius))
    }

    /// `f ∘ g⁻¹`, supported in `g(region)`.
    pub fn transformed(&self, g: &Poincare2) -> Self {
        let lam = Poincare2 { translation: [0.0, 0.0], ..*g }.lorentz();
        let shape = self.shape() * lam.try_inverse().expect("Lorentz matrices are invertible");
        let center = g.apply_point(self.center);
        Self {
            center,
            radius: self.radius,
            shape: [[shape[(0, 0)], shape[(0, 1)]], [shape[(1, 0)], shape[(1, 1)]]],
            region: self.region.transform(g),
        }
    }

    /// Half-widths of the axis-aligned bounding box of the support.
    pub fn half_widths(&self) -> [f64; 2] {
        let minv = self.shape().try_inverse().expect("invertible");
        [
            self.radius * minv.row(0).norm(),
            self.radius * minv.row(1).norm(),
        ]
    }

    /// Samples on a `nx × nx` grid covering the support with a margin.
    pub fn sample(&self, nx: usize) -> SampledFunction2 {
        let hw = self.half_widths();
        let axis = |k: usize| -> Vec<f64> {
            let lo = self.center[k] - 1.05 * hw[k];
            let hi = self.center[k] + 1.05 * hw[k];
            let d = (hi - lo) / (nx - 1) as f64;
            (0..nx).map(|i| lo + i as f64 * d).collect()
        };
        let (x0, x1) = (axis(0), axis(1));
        let mut values = vec![0.0; nx * nx];
        for (a, &t) in x0.iter().enumerate() {
            for (b, &s) in x1.iter().enumerate() {
                values[a * nx + b] = self.value([t, s]);
            }
        }
        SampledFunction2 { x0, x1, values }
    }

    /// Stable text form used for dictionary hashing.
    pub fn descriptor(&self) -> String {
        format!(
            "bump c=({:e},{:e}) r={:e} M=({:e},{:e};{:e},{:e})",
            self.center[0],
            self.center[1],
            self.radius,
            self.shape[0][0],
            self.shape[0][1],
            self.shape[1][0],
            self.shape[1][1]
        )
    }
}

/// A real function sampled on a uniform tensor grid, row index `x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction2 {
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledFunction2 {
    fn step(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            0.0
        } else {
            axis[1] - axis[0]
        }
    }

    fn boundary_max(&self) -> f64 {
        let (n0, n1) = (self.x0.len(), self.x1.len());
        let mut m: f64 = 0.0;
        for a in 0..n0 {
            for b in 0..n1 {
                if a == 0 || b == 0 || a + 1 == n0 || b + 1 == n1 {
                    m = m.max(self.values[a * n1 + b].abs());
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct OneParticleVector {
    model: Arc<FreeFieldModel>,
    values: Vec<Complex64>,
}

impl PartialEq for OneParticleVector {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.model, &other.model) && self.values == other.values
    }
}

impl OneParticleVector {
    pub fn new(model: &Arc<FreeFieldModel>, values: Vec<Complex64>) -> Result<Self> {
        crate::error::check_dim(model.n_points(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("one-particle vector has non-finite samples".into()));
        }
        Ok(Self { model: model.clone(), values })
    }

    pub fn zeros(model: &Arc<FreeFieldModel>) -> Self {
        Self { model: model.clone(), values: vec![Complex64::new(0.0, 0.0); model.n_points()] }
    }

    pub fn from_fn(model: &Arc<FreeFieldModel>, f: impl Fn(f64) -> Complex64) -> Self {
        Self { model: model.clone(), values: model.thetas.iter().map(|&t| f(t)).collect() }
    }

    /// `exp(-(θ-θ0)²/(2σ²) + iνθ)`.
    pub fn gaussian(model: &Arc<FreeFieldModel>, center: f64, width: f64, freq: f64) -> Self {
        Self::from_fn(model, |t| {
            let x = (t - center) / width;
            Complex64::from_polar((-0.5 * x * x).exp(), freq * t)
        })
    }

    pub fn model(&self) -> &Arc<FreeFieldModel> {
        &self.model
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn same(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.model, &other.model) {
            return Err(Error::Usage("one-particle vectors belong to different models".into()));
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.same(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.model.weight())
    }

    pub fn norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.model.weight()).sqrt()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.same(other)?;
        Ok(Self {
            model: self.model.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, z: Complex64) -> Self {
        self.map(|v| v * z)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { model: self.model.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// Pointwise product with `f(θ)`.
    pub fn multiply(&self, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            model: self.model.clone(),
            values: self
                .values
                .iter()
                .zip(&self.model.thetas)
                .map(|(v, &t)| v * f(t))
                .collect(),
        }
    }

    /// `(Re, Im)` stacked into a real vector of length `2n`.
    pub fn realify(&self) -> RVec {
        let n = self.values.len();
        RVec::from_fn(2 * n, |i, _| if i < n { self.values[i].re } else { self.values[i - n].im })
    }

    pub fn from_real(model: &Arc<FreeFieldModel>, v: &RVec) -> Result<Self> {
        let n = model.n_points();
        crate::error::check_dim(2 * n, v.len())?;
        Self::new(model, (0..n).map(|i| Complex64::new(v[i], v[n + i])).collect())
    }

    /// Writes `theta,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "theta,re,im")?;
        for (t, v) in self.model.thetas.iter().zip(&self.values) {
            writeln!(w, "{t:.17e},{:.17e},{:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Embedding resolution: `ny` nodes across the projected bump and `nz` along
/// each chord.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmbedResolution {
    pub ny: usize,
    pub nz: usize,
}

impl EmbedResolution {
    /// Resolves the fastest oscillation `κ_max` on the grid with room for the
    /// Fourier tail of the projected bump.
    pub fn for_model(f: &TestFunction2, model: &FreeFieldModel) -> Self {
        let kmax = model.kappa_max(&f.shape());
        let ny = ((f.radius * kmax + PROFILE_MARGIN) / PI).ceil() as usize;
        Self { ny: ny + ny % 2, nz: PROJECTION_NZ }
    }

    pub fn doubled(&self) -> Self {
        Self { ny: 2 * self.ny, nz: 2 * self.nz }
    }
}

/// `Ef(θ) = √(2π) f̂(p(θ))` by the projection-slice route: the bump is radial
/// after the linear change of variables `y = M(x - c)`, so its transform is
/// `e^{ik·c} |det M|^{-1} F(|M^{-T}k|)` with `F` the cosine transform of the
/// chord integrals.
pub fn embed(f: &TestFunction2, model: &Arc<FreeFieldModel>) -> OneParticleVector {
    embed_at(f, model, EmbedResolution::for_model(f, model))
}

pub fn embed_at(
    f: &TestFunction2,
    model: &Arc<FreeFieldModel>,
    res: EmbedResolution,
) -> OneParticleVector {
    let shape = f.shape();
    let profile = model.profile(f.radius, &shape, res.ny, res.nz);
    let scale = 1.0 / ((2.0 * PI).sqrt() * shape.determinant().abs());
    let [c0, c1] = f.center;
    let values = model
        .thetas
        .iter()
        .zip(profile.iter())
        .map(|(&t, &amp)| {
            let [p0, p1] = model.momentum(t);
            Complex64::from_polar(amp * scale, p0 * c0 - p1 * c1)
        })
        .collect();
    OneParticleVector { model: model.clone(), values }
}

/// Embedding with a Richardson error estimate `‖E_{2res} f - E_res f‖ / ‖E_{2res} f‖`.
pub fn embed_with_error(
    f: &TestFunction2,
    model: &Arc<FreeFieldModel>,
) -> (OneParticleVector, f64) {
    let res = EmbedResolution::for_model(f, model);
    let coarse = embed_at(f, model, res);
    let fine = embed_at(f, model, res.doubled());
    let n = fine.norm();
    let err = if n == 0.0 {
        0.0
    } else {
        fine.sub(&coarse).expect("same model").norm() / n
    };
    (fine, err)
}

/// Direct 2D quadrature of `√(2π) f̂(p(θ))` for sampled data. Fails when the
/// samples do not vanish on the boundary of their grid.
pub fn embed_sampled(
    f: &SampledFunction2,
    model: &Arc<FreeFieldModel>,
) -> Result<OneParticleVector> {
    let (n0, n1) = (f.x0.len(), f.x1.len());
    if n0 < 3 || n1 < 3 || f.values.len() != n0 * n1 {
        return Err(Error::Usage("sampled test function needs at least a 3x3 grid".into()));
    }
    let peak = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if f.boundary_max() > 1e-14 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::Usage(
            "support of the test function is not inside the spacetime grid".into(),
        ));
    }
    let cell = SampledFunction2::step(&f.x0) * SampledFunction2::step(&f.x1);
    let scale = cell / (2.0 * PI).sqrt();
    let values = model
        .thetas
        .par_iter()
        .map(|&t| {
            let [p0, p1] = model.momentum(t);
            let e1: Vec<Complex64> = f.x1.iter().map(|&s| Complex64::from_polar(1.0, -p1 * s)).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, &x0) in f.x0.iter().enumerate() {
                let row = &f.values[a * n1..(a + 1) * n1];
                let mut r = Complex64::new(0.0, 0.0);
                for (v, e) in row.iter().zip(&e1) {
                    r += e * *v;
                }
                acc += r * Complex64::from_polar(1.0, p0 * x0);
            }
            acc * scale
        })
        .collect();
    OneParticleVector::new(model, values)
}

/// Relative mass that a θ-shift by `lambda` moves across the grid boundary.
pub fn boost_leakage(phi: &OneParticleVector, lambda: f64) -> f64 {
    let total: f64 = phi.values.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 || lambda == 0.0 {
        return 0.0;
    }
    let tmax = phi.model.grid.theta_max;
    let leaked: f64 = phi
        .model
        .thetas
        .iter()
        .zip(&phi.values)
        .filter(|(&t, _)| if lambda > 0.0 { t > tmax - lambda } else { t < -tmax - lambda })
        .map(|(_, v)| v.norm_sqr())
        .sum();
    leaked / total
}

/// `φ(θ - λ)` by an FFT phase shift, without leakage accounting.
pub fn shift(phi: &OneParticleVector, lambda: f64) -> OneParticleVector {
    if lambda == 0.0 {
        return phi.clone();
    }
    let model = &phi.model;
    let n = model.n_points();
    let mut c = model.fft(&phi.values);
    for (k, (ck, &w)) in c.iter_mut().zip(&model.omegas).enumerate() {
        if k == n / 2 {
            *ck *= (w * lambda).cos();
        } else {
            *ck *= Complex64::from_polar(1.0, -w * lambda);
        }
    }
    OneParticleVector { model: model.clone(), values: model.ifft(c) }
}

/// `e^{i a·p(θ)} φ` with `a·p = a0 p0 - a1 p1`.
pub fn translate(phi: &OneParticleVector, a: [f64; 2]) -> OneParticleVector {
    let m = phi.model.mass;
    phi.multiply(|t| Complex64::from_polar(1.0, a[0] * m * t.cosh() - a[1] * m * t.sinh()))
}

pub fn poincare_act(g: &Poincare2, phi: &OneParticleVector) -> Result<OneParticleVector> {
    poincare_act_with_budget(g, phi, DEFAULT_LEAKAGE_BUDGET)
}

/// `u(a) u(Λ) u(γ)^r φ`.
pub fn poincare_act_with_budget(
    g: &Poincare2,
    phi: &OneParticleVector,
    budget: f64,
) -> Result<OneParticleVector> {
    let leaked = boost_leakage(phi, g.rapidity);
    if leaked > budget {
        return Err(Error::BoundaryLeakage { leaked, budget });
    }
    let v = if g.reflect { phi.conj() } else { phi.clone() };
    let v = shift(&v, g.rapidity);
    Ok(if g.translation == [0.0, 0.0] { v } else { translate(&v, g.translation) })
}

/// `‖E(f ∘ g⁻¹) - u(g) Ef‖ / ‖Ef‖`.
pub fn covariance_residual(
    f: &TestFunction2,
    g: &Poincare2,
    model: &Arc<FreeFieldModel>,
) -> Result<f64> {
    let ef = embed(f, model);
    let lhs = embed(&f.transformed(g), model);
    let rhs = poincare_act(g, &ef)?;
    let n = ef.norm();
    Ok(if n == 0.0 { 0.0 } else { lhs.sub(&rhs)?.norm() / n })
}

/// Real span of a dictionary of test functions, recorded with the span.
#[derive(Clone, Debug)]
pub struct LocalSubspace {
    pub region: Region2,
    pub dictionary: Vec<TestFunction2>,
    pub subspace: RealSubspace,
}

pub fn local_subspace(
    region: &Region2,
    dictionary: &[TestFunction2],
    model: &Arc<FreeFieldModel>,
) -> Result<LocalSubspace> {
    if let Some(bad) = dictionary.iter().position(|f| !f.supported_in(region)) {
        return Err(Error::Usage(format!(
            "dictionary member {bad} is not supported in {region:?}"
        )));
    }
    let space = model.space();
    let vectors: Vec<OneParticleVector> = dictionary.par_iter().map(|f| embed(f, model)).collect();
    let mut cols = RMat::zeros(space.real_dim(), vectors.len());
    for (c, v) in vectors.iter().enumerate() {
        cols.set_column(c, &v.realify());
    }
    Ok(LocalSubspace {
        region: region.clone(),
        dictionary: dictionary.to_vec(),
        subspace: RealSubspace::from_real_columns(space, &cols),
    })
}

/// `Im⟨Ef, Eg⟩`.
pub fn locality_pairing(f: &TestFunction2, g: &TestFunction2, model: &Arc<FreeFieldModel>) -> f64 {
    embed(f, model)
        .inner(&embed(g, model))
        .expect("same model")
        .im
}

/// Spectral cutoff for the imaginary-shift multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralCutoff {
    /// Largest admitted amplification of the multiplier.
    pub cap: f64,
    /// Coefficients below `floor × max` are treated as rounding noise.
    pub floor: f64,
    /// Tail masses above `10^threshold_log10` are domain violations.
    pub threshold_log10: f64,
}

impl Default for SpectralCutoff {
    fn default() -> Self {
        Self { cap: 1e12, floor: 1e-12, threshold_log10: -8.0 }
    }
}

impl SpectralCutoff {
    /// Frequency band `|ω| ≤ Ω` with `e^{πΩ} = cap`.
    pub fn band(&self) -> f64 {
        self.cap.ln() / PI
    }
}

#[derive(Clone, Debug)]
pub struct ModularHalf {
    pub vector: OneParticleVector,
    /// `log10` of the amplified mass of the cut frequencies relative to `‖φ‖²`;
    /// `-∞` when nothing above the noise floor was cut.
    pub tail_log10: f64,
}

/// `δ^{1/2}` as the multiplier `e^{-direction·π·ω}` with amplified
/// frequencies cut, together with the tail diagnostic. Never fails.
pub fn modular_half_diagnostic(
    phi: &OneParticleVector,
    direction: i8,
    cutoff: &SpectralCutoff,
) -> ModularHalf {
    let model = &phi.model;
    let d = f64::from(direction.signum());
    let log_cap = cutoff.cap.ln();
    let mut c = model.fft(&phi.values);
    let total: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let peak = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let mut logs: Vec<f64> = Vec::new();
    for (ck, &w) in c.iter_mut().zip(&model.omegas) {
        let lm = -d * PI * w;
        if lm > log_cap {
            if ck.norm() > cutoff.floor * peak {
                logs.push(2.0 * ck.norm().ln() + 2.0 * lm);
            }
            *ck = Complex64::new(0.0, 0.0);
        } else {
            *ck *= lm.exp();
        }
    }
    let tail_log10 = if logs.is_empty() || total == 0.0 {
        f64::NEG_INFINITY
    } else {
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        (top + s.ln() - total.ln()) / std::f64::consts::LN_10
    };
    ModularHalf { vector: OneParticleVector { model: model.clone(), values: model.ifft(c) }, tail_log10 }
}

/// As [`modular_half_diagnostic`], failing when the tail exceeds the threshold.
pub fn wedge_modular_half(
    phi: &OneParticleVector,
    direction: i8,
    cutoff: &SpectralCutoff,
) -> Result<ModularHalf> {
    let out = modular_half_diagnostic(phi, direction, cutoff);
    if out.tail_log10 > cutoff.threshold_log10 {
        return Err(Error::DomainViolation {
            tail_log10: out.tail_log10,
            threshold_log10: cutoff.threshold_log10,
        });
    }
    Ok(out)
}

/// Projection onto the frequencies reachable by `conj ∘ δ^{1/2}` under the
/// cutoff: `direction·ω ≤ Ω`.
pub fn band_project(phi: &OneParticleVector, direction: i8, cutoff: &SpectralCutoff) -> OneParticleVector {
    let model = &phi.model;
    let d = f64::from(direction.signum());
    let band = cutoff.band();
    let mut c = model.fft(&phi.values);
    for (ck, &w) in c.iter_mut().zip(&model.omegas) {
        if d * w > band {
            *ck = Complex64::new(0.0, 0.0);
        }
    }
    OneParticleVector { model: model.clone(), values: model.ifft(c) }
}

/// Projection onto `|ω| ≤ Ω`, on which `conj ∘ δ^{1/2}` with the cutoff is an
/// involution.
pub fn symmetric_band_project(phi: &OneParticleVector, cutoff: &SpectralCutoff) -> OneParticleVector {
    let model = &phi.model;
    let band = cutoff.band();
    let mut c = model.fft(&phi.values);
    for (ck, &w) in c.iter_mut().zip(&model.omegas) {
        if w.abs() > band {
            *ck = Complex64::new(0.0, 0.0);
        }
    }
    OneParticleVector { model: model.clone(), values: model.ifft(c) }
}

/// `conj(δ^{1/2} φ)` for the wedge with the given direction at the origin.
pub fn tomita_origin(phi: &OneParticleVector, direction: i8, cutoff: &SpectralCutoff) -> Result<OneParticleVector> {
    Ok(wedge_modular_half(phi, direction, cutoff)?.vector.conj())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BwResidual {
    /// `‖s_W φ - Pφ‖ / ‖Pφ‖` with `P` the [`band_project`]ion.
    pub residual: f64,
    /// `‖Pφ‖ / ‖φ‖`.
    pub band_fraction: f64,
    pub tail_log10: f64,
}

/// Bisognano–Wichmann residual of `Ef` for the right wedge at the origin,
/// measured on the frequency band that the cut multiplier reaches.
pub fn bw_residual(
    f: &TestFunction2,
    model: &Arc<FreeFieldModel>,
    cutoff: &SpectralCutoff,
) -> Result<BwResidual> {
    bw_residual_of(&embed(f, model), RIGHT_WEDGE_DIRECTION, cutoff)
}

pub fn bw_residual_of(
    phi: &OneParticleVector,
    direction: i8,
    cutoff: &SpectralCutoff,
) -> Result<BwResidual> {
    let half = wedge_modular_half(phi, direction, cutoff)?;
    let p = band_project(phi, direction, cutoff);
    let np = p.norm();
    if np == 0.0 {
        return Ok(BwResidual { residual: 0.0, band_fraction: 0.0, tail_log10: half.tail_log10 });
    }
    Ok(BwResidual {
        residual: half.vector.conj().sub(&p)?.norm() / np,
        band_fraction: np / phi.norm(),
        tail_log10: half.tail_log10,
    })
}

/// Lightlike translation `α(1, 1)`, whose phase is `α m e^{-θ}`.
pub fn lightlike(alpha: f64) -> [f64; 2] {
    [alpha, alpha]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BorchersReport {
    /// `max ‖Δ^{it}U(a)Δ^{-it}φ - U(e^{-2πt}a)φ‖ / ‖φ‖`.
    pub modular_deviation: f64,
    /// `max ‖JU(a)Jφ - U(-a)φ‖ / ‖φ‖`.
    pub conjugation_deviation: f64,
}

impl BorchersReport {
    pub fn max(&self) -> f64 {
        self.modular_deviation.max(self.conjugation_deviation)
    }
}

/// Both Borchers relations for the right wedge at the origin: `Δ^{it}` is the
/// θ-shift by `+2πt`, `J` is complex conjugation and `U(a)` the lightlike
/// translation [`lightlike`]`(alpha)`.
pub fn borchers_check(
    alpha: f64,
    t: f64,
    probes: &[OneParticleVector],
    model: &Arc<FreeFieldModel>,
) -> Result<BorchersReport> {
    let delta_it = |phi: &OneParticleVector, t: f64| -> Result<OneParticleVector> {
        poincare_act(&Poincare2::boost(-2.0 * PI * t), phi)
    };
    let u = |phi: &OneParticleVector, alpha: f64| translate(phi, lightlike(alpha));
    let mut rep = BorchersReport { modular_deviation: 0.0, conjugation_deviation: 0.0 };
    for phi in probes {
        if !Arc::ptr_eq(phi.model(), model) {
            return Err(Error::Usage("probe belongs to a different model".into()));
        }
        let n = phi.norm();
        if n == 0.0 {
            continue;
        }
        let lhs = if alpha == 0.0 {
            phi.clone()
        } else {
            delta_it(&u(&delta_it(phi, -t)?, alpha), t)?
        };
        let rhs = u(phi, (-2.0 * PI * t).exp() * alpha);
        rep.modular_deviation = rep.modular_deviation.max(lhs.sub(&rhs)?.norm() / n);
        let lhs = u(&phi.conj(), alpha).conj();
        let rhs = u(phi, -alpha);
        rep.conjugation_deviation = rep.conjugation_deviation.max(lhs.sub(&rhs)?.norm() / n);
    }
    Ok(rep)
}

/// Columns `realify(φ_i)`.
pub fn realify_all(vectors: &[OneParticleVector]) -> RMat {
    let rows = vectors.first().map_or(0, |v| 2 * v.values.len());
    let mut m = RMat::zeros(rows, vectors.len());
    for (c, v) in vectors.iter().enumerate() {
        m.set_column(c, &v.realify());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Arc<FreeFieldModel> {
        FreeFieldModel::new(1.0, 4.0, 256).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(FreeFieldModel::new(0.0, 8.0, 1024).is_err());
        assert!(FreeFieldModel::new(1.0, 3.0, 1024).is_err());
        assert!(FreeFieldModel::new(1.0, 8.0, 1000).is_err());
        let m = small();
        assert_eq!(m.omegas()[1], 2.0 * PI / 8.0);
        assert!(m.omegas()[128] < 0.0);
    }

    #[test]
    fn region_geometry() {
        let rw = Region2::right_wedge([0.0, 0.0]);
        assert!(rw.contains_point([0.0, 1.0]));
        assert!(!rw.contains_point([2.0, 1.0]));
        assert_eq!(rw.causal_complement(), Region2::left_wedge([0.0, 0.0]));
        let dc = Region2::double_cone([0.0, 0.0], 1.0);
        assert!(dc.contains_point([0.5, 0.2]));
        assert!(!dc.contains_point([0.0, 1.2]));
        let dcc = dc.causal_complement();
        assert!(dcc.contains_point([0.0, 1.2]));
        assert!(!dcc.contains_point([0.9, 0.0]));
        assert_eq!(dcc.causal_complement(), dc);
        assert_eq!(
            rw.transform(&Poincare2::reflection()),
            Region2::left_wedge([0.0, 0.0])
        );
    }

    #[test]
    fn bump_support_is_checked() {
        let rw = Region2::right_wedge([0.0, 0.0]);
        assert!(TestFunction2::bump([0.0, 3.0], 0.5, rw.clone()).is_ok());
        assert!(TestFunction2::bump([0.0, 0.6], 0.5, rw.clone()).is_err());
        assert!(TestFunction2::bump([0.0, -3.0], 0.5, rw).is_err());
    }

    #[test]
    fn poincare_group_law() {
        let g = Poincare2 { rapidity: 0.3, translation: [0.2, -0.1], reflect: true };
        let h = Poincare2 { rapidity: -0.7, translation: [1.0, 0.4], reflect: false };
        let x = [0.3, 0.9];
        let a = g.compose(&h).apply_point(x);
        let b = g.apply_point(h.apply_point(x));
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
        let e = g.compose(&g.inverse()).apply_point(x);
        assert!((e[0] - x[0]).abs() < 1e-14 && (e[1] - x[1]).abs() < 1e-14);
    }

    #[test]
    fn shift_by_grid_step_is_exact_rotation() {
        let m = small();
        let phi = OneParticleVector::gaussian(&m, 0.0, 0.5, 0.0);
        let s = shift(&phi, m.spacing());
        for j in 1..m.n_points() {
            assert!((s.values()[j] - phi.values()[j - 1]).norm() < 1e-13);
        }
    }

    #[test]
    fn sampled_embedding_rejects_clipped_support() {
        let m = small();
        let f = SampledFunction2 { x0: vec![0.0, 1.0, 2.0], x1: vec![0.0, 1.0, 2.0], values: vec![1.0; 9] };
        assert!(matches!(embed_sampled(&f, &m), Err(Error::Usage(_))));
    }
}
