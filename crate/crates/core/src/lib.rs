//! Large-index eigenvalues of Jacobi operators of quantum-Rabi type: models,
//! windowed eigensolvers, auxiliary conjugated operators, closed-form
//! three-term predictions, oscillatory-integral tools, phase algebra and
//! parameter recovery.

pub mod asymptotics;
pub mod banded;
pub mod bessel;
pub mod eigensolve;
pub mod error;
pub mod inverse;
pub mod model;
pub mod oscillatory;
pub mod phase;
pub mod quadrature;
pub mod transform;

pub use error::{Error, Result};
