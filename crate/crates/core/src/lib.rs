//! Limit-cycle counting for periodic Riccati equations `x' = x^2 + gamma(t)`.
//!
//! The crate brackets the discriminant `Δ = μ* − mean(γ)` with two
//! functionals evaluated on harmonic-balance candidates, reduces general
//! Riccati equations to the canonical form, and cross-checks every verdict
//! against direct integration of the Poincaré map.

pub mod error;
pub mod exprparse;
pub mod family;
pub mod functionals;
pub mod harmonic_balance;
pub mod oracle;
pub mod periodic;
pub mod reduction;
pub mod search;

pub use error::{Error, Result};
pub use functionals::{Bracket, Classification};
pub use periodic::{PeriodicFn, TrigPoly};
