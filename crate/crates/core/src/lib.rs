//! Numerical toolkit for the coupled fractional Schrödinger system
//!
//! ```text
//! (-Δ)^s u + u = μ₁ |u|^{2p-2} u + β |v|^p |u|^{p-2} u
//! (-Δ)^s v + v = μ₂ |v|^{2p-2} v + β |u|^p |v|^{p-2} v
//! ```
//!
//! The crate is layered bottom-up:
//!
//! - [`algebra`]: closed-form scalar functions and parameter-regime predicates.
//! - [`tau`]: roots of the coupling function `g`, proportional solutions
//!   `(k₁w, τ₀k₁w)` and the critical-point landscape of `f`.
//! - [`spectral`]: periodic grids, FFT-based fractional Laplacian, quadrature.
//! - [`ground_state`]: the scalar ground state `w` and the Sobolev constant `S`.
//! - [`nondegeneracy`]: linearization coefficients, the weighted eigenproblem
//!   and the numeric kernel of the linearized vector operator.
//! - [`least_energy`]: direct minimization of the coupled Rayleigh quotient.
//! - [`report`]: run configuration, orchestration and machine-readable output.

pub mod algebra;
pub mod eigen;
pub mod error;
pub mod ground_state;
pub mod least_energy;
pub mod nondegeneracy;
pub mod report;
pub mod roots;
pub mod spectral;
pub mod tau;

pub use error::{Error, Result};
