//! Krylov approximation of `exp(σ t A) v` and `φ_p(σ t A) v` with computable
//! a-posteriori error estimates and step-size control for restarted
//! propagation.

pub mod approximant;
pub mod error;
pub mod estimators;
pub mod krylov;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod stepper;

pub use error::{Error, Result};
pub use linalg::{Prefactor, C64};
