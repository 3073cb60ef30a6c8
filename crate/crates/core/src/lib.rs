//! Numerical laboratory for flame quenching by shear flows.
//!
//! The model is the reaction–diffusion–advection equation
//!
//! ```text
//! T_t + A u(y) T_x = κ ΔT + M f(T)
//! ```
//!
//! on the strip `ℝ × [0, h]`, periodic in `y`, with an ignition-type
//! reaction `f`. The crate provides
//!
//! * [`model`]: physical constants, reactions, initial data;
//! * [`profiles`]: periodic shear profiles and their plateaus;
//! * [`pde`]: split-step solvers for `T`, the linear comparison fields `Φ`
//!   and `Ψ`, and Dirichlet strip problems;
//! * [`critical`]: stationary Dirichlet profiles, the critical plateau
//!   length, and quench times on strips;
//! * [`quench`]: quench detection and critical-amplitude searches;
//! * [`stochastic`]: Monte Carlo estimators built on Brownian paths;
//! * [`harness`]: run configs, sweeps, and on-disk artifacts.

pub mod critical;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod pde;
pub mod profiles;
pub mod quench;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{build_reaction, IgnitionReaction, InitialData, InitialShape, PhysParams};
pub use profiles::{normalize_mean_zero, scale_profile, ShearProfile};
