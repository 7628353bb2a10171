//! Mode-domain feedforward spatial active noise control in two dimensions,
//! with optional sparse plane-wave estimation of the reference field.

pub mod anc;
pub mod config;
pub mod error;
pub mod field;
pub mod harness;
pub mod metrics;
pub mod modal;
pub mod sparse;
pub mod specfun;

pub use error::{Error, Result};

pub type ComplexVec = nalgebra::DVector<num_complex::Complex64>;
pub type ComplexMat = nalgebra::DMatrix<num_complex::Complex64>;
