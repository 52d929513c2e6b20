//! Simulation and verification toolkit for a degenerate chemotaxis system
//!
//! ```text
//! u_t = Δu^m − χ∇·(u∇v),   v_t = Δv − αuv,   Neumann boundaries,
//! ```
//!
//! with porous-medium diffusion (`m > 1`). The crate provides a
//! conservative explicit finite-volume solver on 1D and radial grids,
//! free-boundary tracking, the Barenblatt benchmark, and a certificate
//! engine that searches and checks self-similar sub- and supersolutions.

pub mod analysis;
pub mod certificates;
pub mod error;
pub mod harness;
pub mod initial;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
pub use model::{integrate, make_grid, Grid, ModelParams, State};
