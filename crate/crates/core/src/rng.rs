//! Seeded randomness for test instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec, RMat, RVec};
use num_complex::Complex64;

pub type LabRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_c<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(normal(rng), normal(rng)) / std::f64::consts::SQRT_2
}

pub fn normal_rvec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RVec {
    RVec::from_fn(n, |_, _| normal(rng))
}

pub fn normal_rmat<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> RMat {
    RMat::from_fn(r, c, |_, _| normal(rng))
}

pub fn normal_cvec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| normal_c(rng))
}

pub fn normal_cmat<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| normal_c(rng))
}
