//! Numerical toolkit for doubled-circle multi-bubble solutions of the critical
//! polyharmonic equation `(-Delta)^m u + V(r, y'') u = u^{m*-1}` in `R^N`.
//!
//! Modules follow the construction bottom-up: bubbles and their coefficient
//! tables, point configurations and lattice sums, quadrature, the energy
//! constants and reduced system, the ansatz with its residual and weighted
//! norms, and Pohozaev-type checks.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod bubble;
pub mod config;
pub mod cutoff;
pub mod energy;
pub mod error;
pub mod fit;
pub mod lattice;
pub mod norms;
pub mod params;
pub mod pohozaev;
pub mod potential;
pub mod quadrature;
pub mod reduced;
pub mod residual;

pub use bubble::{Bubble, BubbleKernel, CoeffTable, RadialGrid};
pub use config::{BalanceLaw, DoubledCircleConfig, Regime, RegimeParams};
pub use error::{Error, Result};
pub use params::SpaceParams;
pub use potential::Potential;
pub use reduced::ReducedState;
