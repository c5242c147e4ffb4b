//! Quantum polar duality toolkit.

pub mod acceptance;
pub mod bounds;
pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod matcore;
pub mod polarity;
pub mod reconstruct;
pub mod sampling;
pub mod symplectic;

pub use error::{Error, ErrorKind, Result};
pub use matcore::{GenMatrix, Pivot, SymMatrix, TolerancePolicy};
