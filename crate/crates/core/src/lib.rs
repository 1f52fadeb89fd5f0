//! Classical and quantum multivariate fidelities with certified numerics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bivariate;
pub mod classical;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod measured;
pub mod multivariate;
pub mod sdp;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianMatrix};
pub use states::{DensityMatrix, Povm, ProbabilityVector, QuantumChannel, StateTuple};
