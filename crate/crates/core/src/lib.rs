//! Scenario-wise scaled CVaR approximations for finite-scenario
//! chance-constrained programs.
//!
//! The plain CVaR approximation of `Σ p_i 1[g_i(x) > 0] ≤ ε` is a convex inner
//! approximation. Multiplying scenario `i` by a factor `α_i ≥ 1` leaves the
//! chance constraint unchanged but moves the approximation, and a good choice
//! of `α` can close the gap to the true optimum. This crate provides
//!
//! * the model, exact semantics and JSON formats ([`model`], [`io`]),
//! * CVaR and fixed-`α` scaled CVaR LPs ([`cvar`]),
//! * the closed-form scaling construction and the scaling heuristic ([`scaling`]),
//! * the convex-approximation and hybrid loops ([`sca`]),
//! * budget bisection with and without scaling ([`alsox`]),
//! * enumeration oracles for small instances ([`exact`]),
//! * generators and a benchmark harness ([`bench`]).

// `!(a <= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alsox;
pub mod bench;
pub mod cvar;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod sca;
pub mod scaling;

pub use error::{Error, Result};
pub use model::{CcpInstance, Domain, EpsilonRegularity, ScalingVector, Scenario, Tolerances};
