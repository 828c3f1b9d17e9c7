//! Locally free modules over the algebras H(C, kD, Ω) attached to a symmetrizable
//! Cartan matrix, computed exactly over prime fields.

pub mod cartan;
pub mod error;
pub mod flagvar;
pub mod gendecomp;
pub mod hmod;
pub mod homext;
pub mod io;
pub mod linalg;
pub mod reduce;
pub mod rep;
pub mod sampling;

pub use cartan::{CartanDatum, RankVector};
pub use error::{Error, Result};
pub use hmod::HModule;
pub use linalg::{FpMatrix, Subspace};
