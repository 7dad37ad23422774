//! Numerical toolkit for second-order difference equations with matrix
//! coefficients (block tridiagonal operators).
//!
//! The crate builds the fundamental matrix-polynomial solutions `P`, `Q`,
//! `P⁺`, `Q⁺` of the right and left three-term recurrences attached to an
//! infinite block tridiagonal matrix, verifies the Wronskian-type identities
//! linking them, solves inhomogeneous problems by variation of constants,
//! and tests Hellinger-type lᵖ-invariance of the solution spaces, including
//! the symmetric (block Jacobi) case and the p > 2 counterexample family.
//!
//! Entry points:
//! - [`operator_model::OperatorFamily`] describes the block coefficients.
//! - [`recurrence::fundamental_system`] runs the forward recursion.
//! - [`voc`] holds the variation-of-constants machinery.
//! - [`lp_analysis`] classifies growth and decides lᵖ membership.
//! - [`experiments`] scripts the theorem-level scenarios with an
//!   exact-rational oracle behind them.

pub mod cli;
pub mod exact;
pub mod experiments;
pub mod linalg;
pub mod lp_analysis;
pub mod operator_model;
pub mod recurrence;
pub mod voc;

pub use linalg::{MatrixC, VectorC};
pub use operator_model::OperatorFamily;
pub use recurrence::FundamentalSystem;
