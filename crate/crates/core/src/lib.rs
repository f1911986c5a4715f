//! Canonical duality for nonconvex hyperelastic potentials of the form
//! `W(gamma) = V(a |gamma|^2 + b)`.
//!
//! The pointwise dual algebraic equation replaces the nonconvex primal
//! minimization with scalar root finding. Each root gives a stationary strain
//! `tau / (2 a zeta)`, and its sign and Hessian determine whether it is the
//! global minimizer. [`oracle`] provides an independent primal finite-element
//! minimizer to check the dual answers against.

pub mod canonical;
pub mod dualsolve;
pub mod energies;
pub mod error;
pub mod fields;
pub mod oracle;
pub mod pipeline;
pub mod problem;
pub mod verify;

pub use canonical::{CanonicalEnergy, OpenInterval, QuadraticMeasure};
pub use dualsolve::{
    dual_curve, dual_residual, fold_threshold, solve_all_roots, solve_point, DualRoot, DualRootSet, FoldThreshold,
    ResidualConvention, SolverOptions, TrialityLabel,
};
pub use error::{CdtError, Result};
pub use problem::ProblemSpec;
