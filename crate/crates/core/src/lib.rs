//! Finite-dimensional modular theory for standard subspaces, second
//! quantization on truncated Fock spaces, and modular localization of the
//! massive scalar field in two spacetime dimensions.

pub mod error;
pub mod fock;
pub mod freefield;
pub mod hilbert;
pub mod linalg;
pub mod modloc;
pub mod rng;
pub mod standard;

pub use error::{Error, Result};
pub use num_complex::Complex64;
