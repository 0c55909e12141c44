//! # ecs-bounds
//!
//! Precision bounds for simultaneous estimation of `d` phase shifts in a
//! `(d+1)`-mode interferometer, fed either by a generalized entangled coherent
//! state (ECS)
//!
//! ```text
//! |ψ⟩ = b Σ_{j=1..d} |α⟩_j + c |α⟩_0
//! ```
//!
//! or by a generalized NOON state. Phases are imprinted by the local generators
//! `H_j = (a_j† a_j)^m` (`m = 1` linear, `m = 2` nonlinear protocol).
//!
//! The crate is split into
//!
//! - [`moments`]: photon-number moments `f(m, α) = ⟨α|(a†a)^m|α⟩` of a coherent state.
//! - [`states`]: the ECS/NOON parameterization, normalization and the `b` domain.
//! - [`qfim`]: the structured quantum Fisher information matrix `γ(𝟙 + ω𝓘)` and its inverse.
//! - [`bounds`]: Cramér-Rao and Ziv-Zakai bounds, the optimum over `b`, region classification.
//! - [`oracle`]: a brute-force truncated Fock-space simulator that recomputes everything
//!   from first principles.
//! - [`sweep`] and [`verify`]: deterministic figure data and oracle-equivalence suites.
//!
//! Every bound is reported for a single repetition of the experiment.

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod moments;
pub mod oracle;
pub mod qfim;
pub mod states;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
