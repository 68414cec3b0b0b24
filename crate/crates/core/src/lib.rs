//! Superadiabatic bases and exponentially small coupling terms for
//! real-symmetric two-level Hamiltonians.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod combinatorics;
pub mod darboux;
pub mod error;
pub mod fit;
pub mod jet;
pub mod norms;
pub mod propagator;
pub mod quad;
pub mod recursion;
pub mod reparam;
pub mod scalar;
pub mod special;
pub mod theta;

pub use error::{Error, Result};
pub use jet::{Jet, JetSource};
pub use scalar::{DoubleDouble, Real};
