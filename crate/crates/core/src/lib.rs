//! Generalized tensor equations `sum_k A_k x^{m_k - 1} = b`: dense tensors,
//! seeded instance generators, tensor-class checkers, a nonmonotone
//! Levenberg-Marquardt solver with a Newton baseline, and a batch harness.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod classifiers;
pub mod error;
pub mod generators;
pub mod io;
pub mod poly;
pub mod problem;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use problem::GteProblem;
pub use solvers::{lm_solve, newton_solve, SolverConfig, SolverReport, Status};
pub use tensor::{max_abs_entry, DenseTensor};
