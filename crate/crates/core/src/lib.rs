//! Finite-dimensional local completely positive multilinear maps.
//!
//! The crate models a locally C*-algebra by a finite direct sum of matrix
//! blocks with nested seminorms, a quantized domain by `C^N` with a flag of
//! coordinate subspaces, and a local CP `k`-linear map by its values on basis
//! tuples. On top of that it builds minimal Stinespring triples, decides their
//! unitary equivalence, and computes Radon-Nikodym derivatives in the
//! commutant of the dilation.
//!
//! Heavy sweeps run on rayon when the `parallel` feature is on (the default).

// Tolerance gates are written `!(x <= tol)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod json;
pub mod linalg;
pub mod local_algebra;
pub mod multilinear;
pub mod par;
pub mod radon_nikodym;
pub mod rng;
pub mod stinespring;
pub mod workbench;

pub use error::{Error, Result};
pub use local_algebra::{AlgebraElement, BlockAlgebra, FlagOperator, QuantizedDomain};
pub use multilinear::{AlgebraMatrix, MapCheckReport, MultilinearMap, Verdict};
pub use stinespring::{dilate, DilateOptions, StinespringTriple};
