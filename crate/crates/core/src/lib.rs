//! Random finite-dimensional solvable Lie algebras.
//!
//! A parameter matrix `P` with zero first column and rank `N − 1` fixes an
//! `N`-dimensional solvable Lie algebra through its left null vector `n`:
//! the adjoint matrices are `A_k = n{k}·P − p_k ⊗ n`. The crate samples such
//! matrices reproducibly, builds the algebra, checks the identities it must
//! satisfy, and cross-validates the structure constants against the Jacobi
//! linear system solved directly.

// `!(x <= bound)` is deliberate throughout: a NaN residual must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[macro_use]
pub mod generator;
pub mod analysis;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use generator::{
    generate, generate_any, AdjointRep, AnySample, GenerateConfig, GenerateError, LieAlgebraSample,
    Mode, NullData, ParameterMatrix, StructureTensor, Tolerances,
};
pub use io::{read_sample, write_sample, FormatError, WriteOptions, FORMAT_VERSION};
pub use linalg::{commutator, rank_and_left_null, trace, Matrix};
pub use oracle::{count_equations, oracle_structure_constants, OracleError};
pub use rng::{NormalStream, RNG_ID};
pub use scalar::{Complex64, Field, Scalar};
pub use verify::{verify_all, verify_sample, Check, CheckResult, VerificationReport, VerifyConfig};
