//! Affine process toolkit.
//!
//! Computable building blocks for affine Markov processes on the canonical
//! state space ℝ₊^m × ℝⁿ and on the cone of positive semidefinite matrices:
//!
//! * model parameter sets and admissibility validation ([`model`]);
//! * functional characteristics (F, R) and exponential tilting
//!   ([`exponents`]);
//! * generalized Riccati solving with dense output, blow-up detection and
//!   moment-explosion times ([`riccati`]);
//! * the affine transform formula, Fourier inversion to densities, and
//!   characteristic-function decay diagnostics ([`transform`]);
//! * exact polynomial moments through the generator's matrix action and
//!   weighted-L² density expansions ([`moments`], [`expansion`]);
//! * non-central Wishart transition calculus and parameter-domain
//!   validation ([`wishart`]);
//! * reproducible path simulation with exact CIR sampling ([`simulate`]);
//! * exponential-martingale verification ([`martingale`]).

pub mod error;
pub mod exponents;
pub mod expansion;
pub mod jumps;
pub mod linalg;
pub mod martingale;
pub mod model;
pub mod moments;
pub mod riccati;
pub mod schema;
pub mod simulate;
pub mod transform;
pub mod wishart;

pub use error::{AffineError, Result};
pub use model::{AdmissibilityReport, CanonicalAffineModel, WishartModel};
