//! Numerical laboratory for the L²-constrained minimization problem
//!
//! ```text
//! e(a) = inf { ∫|∇u|² + V u² - a/(1+β²) ∫|x|^{-b}|u|^{2+2β²} : u ∈ H¹₀(Ω), ‖u‖₂ = 1 }
//! ```
//!
//! with `β² = (2-b)/N`, on bounded domains containing the origin.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod archive;
pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod discretization;
pub mod error;
pub mod groundstate;
pub mod potential;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
