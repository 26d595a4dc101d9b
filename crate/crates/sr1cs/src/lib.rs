//! SR1 quasi-Newton methods with the correction strategy.
//!
//! The numerical core is generic over [`Scalar`], which is implemented for
//! `f32`, `f64` and the 256-bit binary float [`f256`]. The aliases below fix
//! the scalar to `f64` for everyday use; the quadratic finite-termination
//! checks run in `f256` because the SR1 recursion amplifies rounding once the
//! update angles become small.
//!
//! ```
//! use sr1cs::{data, solvers, QuadraticProblem, SolveResult};
//! let p: QuadraticProblem = data::gen_quadratic(5, 10.0, 1).unwrap();
//! let cfg = solvers::SolverConfig { update_form: solvers::UpdateForm::Factored, ..Default::default() };
//! let res: SolveResult = solvers::solve_quadratic_sr1(&p, &[0.0; 5], &cfg).unwrap();
//! assert!(res.records.len() <= 7);
//! ```

// `!(x > 0.0)` is used on purpose: it rejects NaN together with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod data;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod potentials;
pub mod report;
pub mod scalar;
pub mod solvers;
pub mod sr1_core;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{f256, Scalar};

pub type SymMatrix = linalg::SymMatrix<f64>;
pub type LowerTriangular = linalg::LowerTriangular<f64>;
pub type DenseMatrix = linalg::DenseMatrix<f64>;
pub type QuadraticProblem = objectives::QuadraticProblem<f64>;
pub type LogisticProblem = objectives::LogisticProblem<f64>;
pub type HessianApprox = sr1_core::HessianApprox<f64>;
pub type UpdateOutcome = sr1_core::UpdateOutcome<f64>;
pub type MeasureReport = potentials::MeasureReport<f64>;
pub type SolveResult = solvers::SolveResult<f64>;
