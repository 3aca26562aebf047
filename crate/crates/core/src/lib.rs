//! Solver toolkit for the pantograph-type functional differential equation
//! `u'(t) + u(t) = u^2(alpha t)` with `u(0) = 1` and `alpha > 1`.
//!
//! The crate combines exact q-series machinery for the linearized problem
//! ([`qseries`]), moment identities fixing the perturbation scaling
//! ([`moments`]), truncated Laguerre spectral collocation
//! ([`discretization`]), damped Newton iteration and nullspace solves
//! ([`solver`]), and pseudo-arclength continuation with fold detection
//! ([`continuation`]).

pub mod bigfloat;
pub mod continuation;
pub mod discretization;
pub mod error;
pub mod moments;
pub mod solver;
pub mod qseries;

pub use astro_float::BigFloat;
pub use error::{Error, Result};
