//! Split-step solvers on truncated strips.
//!
//! One step is `D(dt/2) ∘ R(dt) ∘ S(dt) ∘ D(dt/2)` with `D` the exact heat
//! semigroup of the finite-difference Laplacian, `S` the per-row rigid shift
//! and `R` a midpoint step of the reaction. Every stage maps `[0, 1]` into
//! itself, so the discrete maximum principle holds for any `dt` and any `A`.

mod advect;
mod grid;
mod heat;
pub mod io;
mod oned;
mod policy;
mod solver;
mod spectral;

pub use advect::shift_row;
pub use grid::{Field2D, Grid2D, YBoundary};
pub use heat::{Axis1D, HeatOperator};
pub use oned::{solve_1d_dirichlet, Trajectory1D};
pub use policy::{Frame, GridPolicy, Resolved, SchemeChoice, Window};
pub use solver::{
    Equation, Problem, Schedule, Scheme, Solver, Trajectory, CLAMP_EPS, CLIP_LEVEL, OUTFLOW_PECLET,
    OUTFLOW_THETA_FRACTION,
};

use crate::error::{invalid, Result};
use crate::model::{IgnitionReaction, InitialData, PhysParams};
use crate::profiles::ShearProfile;

fn run(
    equation: Equation,
    params: &PhysParams,
    f: Option<&IgnitionReaction>,
    p: Option<&ShearProfile>,
    amplitude: f64,
    init: &InitialData,
    grid: &Grid2D,
    schedule: &Schedule,
) -> Result<Trajectory> {
    let prob = Problem {
        equation,
        params: *params,
        reaction: f,
        profile: p,
        amplitude,
        frame_velocity: 0.0,
        initial: *init,
        y_weight: None,
    };
    Solver::new(*grid, &prob)?.run(schedule)
}

/// Nonlinear temperature `T` in the lab frame.
#[allow(clippy::too_many_arguments)]
pub fn evolve_t(
    params: &PhysParams,
    f: &IgnitionReaction,
    p: &ShearProfile,
    amplitude: f64,
    init: &InitialData,
    grid: &Grid2D,
    schedule: &Schedule,
) -> Result<Trajectory> {
    run(Equation::Reactive, params, Some(f), Some(p), amplitude, init, grid, schedule)
}

/// Linear advection-diffusion comparison field `Φ`.
pub fn evolve_phi(
    params: &PhysParams,
    p: &ShearProfile,
    amplitude: f64,
    init: &InitialData,
    grid: &Grid2D,
    schedule: &Schedule,
) -> Result<Trajectory> {
    run(Equation::Linear, params, None, Some(p), amplitude, init, grid, schedule)
}

/// Comparison field `Ψ` with diffusion in y only.
pub fn evolve_psi(
    params: &PhysParams,
    p: &ShearProfile,
    amplitude: f64,
    init: &InitialData,
    grid: &Grid2D,
    schedule: &Schedule,
) -> Result<Trajectory> {
    run(Equation::YDiffusion, params, None, Some(p), amplitude, init, grid, schedule)
}

/// `φ_t = κΔφ + Mf(φ)` on `ℝ × [0, l]` with `φ = 0` on both edges, started
/// from `χ_[−L, L]`. `grid` must carry `YBoundary::Dirichlet { l }`.
pub fn solve_dirichlet_strip(
    l: f64,
    half_width: f64,
    params: &PhysParams,
    f: &IgnitionReaction,
    grid: &Grid2D,
    schedule: &Schedule,
) -> Result<Trajectory> {
    match grid.bc_y {
        YBoundary::Dirichlet { l: gl } if (gl - l).abs() <= 1e-12 * l => {}
        _ => return Err(invalid("grid", format!("expected a Dirichlet strip of width {l}"))),
    }
    let init = InitialData::sharp(half_width)?;
    run(Equation::Reactive, params, Some(f), None, 0.0, &init, grid, schedule)
}
