//! Discrete fractional Laplacian `(-Δ)^s` on finitely supported sequences
//! over ℤ, for every real order `s > 0`.
//!
//! Three evaluation routes are provided and cross-check each other:
//!
//! - the kernel series `Σ_k K_s(n-k) (u(n) - u(k))` ([`operator::apply_fractional`]),
//! - the binomial stencil for integer powers ([`operator::apply_integer_power`]),
//! - quadrature of the heat-semigroup integral ([`operator::apply_quadrature_oracle`]).
//!
//! On top of the operator sits a small Anderson-localization harness
//! ([`localization`]): random fractional Schrödinger operators, Krylov
//! orbits of `δ_0`, residual diagnostics and a seeded ensemble runner.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernel;
pub mod lattice;
pub mod localization;
pub mod operator;
pub mod special_functions;
pub mod validation;

pub use kernel::KernelTable;
pub use lattice::Sequence;

pub use error::{Error, Result};


