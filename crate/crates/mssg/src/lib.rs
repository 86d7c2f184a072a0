//! Numerical toolkit for multi-species spherical spin glasses.
//!
//! The crate computes the algorithmic threshold `ALG` of a mixture model
//! (the best energy reachable by Lipschitz optimization algorithms) by
//! solving a variational principle over radius/information schedules, and
//! validates the predicted threshold empirically by running a two-stage
//! message-passing optimizer on sampled Hamiltonians at desk scale.
//!
//! Main entry points:
//! - [`mixture::MixtureModel`]: the model `(ξ, λ, h)` and its calculus.
//! - [`solvability`]: classification of points via the smallest eigenvalue
//!   of `M*_sym` and location of solvable endpoints.
//! - [`trajectory`]: the root-finding (type I) and tree-descending (type II)
//!   ODE integrators.
//! - [`variational`]: the functional `𝔸`, the threshold search
//!   [`variational::alg_value`], and closed forms for single-species and
//!   pure models.
//! - [`einfty`]: the spectral-edge threshold `E∞` for pure models.
//! - [`amp`]: finite-`N` Hamiltonian sampling and the two-stage AMP/IAMP
//!   optimizer with state-evolution diagnostics.
//! - [`gs_quadratic`]: closed-form ground state of the quadratic model with
//!   external field and its telescoping recursion.
//!
//! Every numerical routine is deterministic: fixed-step integrators, fixed
//! reduction orders, and counter-based seeded sampling.

pub mod amp;
pub mod cli;
pub mod einfty;
mod error;
pub mod gs_quadratic;
pub mod linalg;
pub mod mixture;
pub mod numeric;
pub mod solvability;
pub mod trajectory;
pub mod variational;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
