//! Exact computations with finite, arity-truncated A∞-categories and
//! A∞-pre-categories: relation and functor checkers, Hochschild cohomology,
//! homotopy transfer, obstruction-theoretic lifting and twisted complexes.

pub mod ainf;
pub mod error;
pub mod fixtures;
pub mod graded;
pub mod hochschild;
pub mod linalg;
pub mod obstruction;
pub mod precat;
pub mod transfer;
pub mod twisted;

pub use ainf::{AInfFunctor, AInfInstance, Family, FunctorHomotopy, Violation};
pub use error::{Error, Result};
pub use graded::{GradedSpace, Grading, MultilinearOp, Table};
pub use linalg::{Field, Matrix, Scalar, SparseVec};
