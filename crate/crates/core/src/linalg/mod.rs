//! Exact linear algebra over prime fields and subspace combinatorics.

mod interp;
mod matrix;
mod subspace;

pub use interp::{lagrange_interpolate, IntPoly};
pub use matrix::{check_prime, inv_mod, is_prime, reduce_i64, FpMatrix, Rref, MAX_PRIME};
pub use subspace::{
    enumerate_subspaces, free_positions, gaussian_binomial, pivot_patterns, q_multinomial,
    subspaces_with_pivots, Subspace, SubspaceIter,
};
