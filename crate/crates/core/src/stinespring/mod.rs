//! Stinespring dilation of local completely positive multilinear maps.
//!
//! [`dilate`] factors the Gram matrix `G = F^* F` and lets each slot act on
//! the tensor coordinates; the resulting triple satisfies, for odd `k = 2m - 1`,
//!
//! `phi(a) = V^* pi_1(a_m) pi_2(a_{m-1} a_{m+1}) ... pi_m(a_1 a_{2m-1}) V`
//!
//! and for even `k = 2m` the same with `pi_p(a_{m-p+1} a_{m+p})`.

mod construct;
mod gram;
mod triple;

pub use construct::{
    dilate, is_minimal, minimize, random_flag_unitary, unitary_equivalence, DilateOptions, Equivalence,
    EquivalenceResiduals, RANK_TOL,
};
pub(crate) use construct::level_leak;
pub use gram::{gram_arguments, gram_matrix, gram_raw, GramData, TensorIndex};
pub use triple::{verify_dilation, StinespringTriple, TripleResiduals};
