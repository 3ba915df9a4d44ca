//! Radial bifurcation analysis for a two-species competition system with
//! diffusion on the unit ball,
//!
//! ```text
//! -Δu1 = μ u1 (1 - u1) - β α u1 u2
//! -Δu2 = σ u2 (1 - u2) - β γ u1 u2        (Neumann boundary)
//! ```
//!
//! as the interaction strength `β` grows.

// `!(x > 0.0)` guards are deliberate (they reject NaN); index loops mirror
// the banded storage layout.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::manual_is_multiple_of
)]

pub mod appendix;
pub mod bifurcation;
pub mod continuation;
pub mod elliptic;
pub mod error;
pub mod export;
pub mod grid;
pub mod limit;
pub mod linalg;
pub mod linearization;
pub mod nodal;
pub mod par;
pub mod params;
pub mod spectrum;

pub use error::{Error, Result};
pub use params::{constant_state, ConstantState, Params};
