//! Exact factorization of birational maps between two-dimensional (log) Mori fiber spaces
//! into Sarkisov links, with independently verifiable certificates.

pub mod certify;
pub mod degree;
pub mod engine;
pub mod error;
pub mod instance;
pub(crate) mod linalg;
pub mod lattice;
pub mod rational;
pub mod surface;

pub use error::{Error, Result};
pub use rational::Q;
