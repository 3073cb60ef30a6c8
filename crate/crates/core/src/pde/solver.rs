use serde::{Deserialize, Serialize};

use super::advect::shift_row;
use super::grid::{Field2D, Grid2D, YBoundary};
use super::heat::{Axis1D, HeatOperator};
use super::spectral::{ShearOperator, ShearPropagator};
use crate::error::{invalid, Result};
use crate::model::{IgnitionReaction, InitialData, PhysParams};
use crate::profiles::ShearProfile;

/// Which equation a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    /// `T_t = κΔT − AuT_x + Mf(T)`.
    Reactive,
    /// `Φ_t = κΔΦ − AuΦ_x`.
    Linear,
    /// `Ψ_t = κΨ_yy − AuΨ_x`.
    YDiffusion,
}

/// Everything that defines the continuous problem on a grid.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub equation: Equation,
    pub params: PhysParams,
    pub reaction: Option<&'a IgnitionReaction>,
    pub profile: Option<&'a ShearProfile>,
    pub amplitude: f64,
    /// Velocity `c` of the computational frame; rows move with `A·u(y) − c`.
    pub frame_velocity: f64,
    pub initial: InitialData,
    /// Optional factor multiplying the initial data row by row.
    pub y_weight: Option<Vec<f64>>,
}

/// Time discretization of the linear part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Heat semigroup and row shifts split per step; absorbing x-boundary.
    #[default]
    Split,
    /// Linear part propagated exactly per x-wavenumber on an x-periodic
    /// window; requires a periodic y-boundary.
    Spectral,
}

/// Time stepping and recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_end: f64,
    /// Upper bound on the step; the actual step divides `history_dt`.
    pub dt: f64,
    /// Spacing of the sup/L1 history (and of stop checks).
    pub history_dt: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Stop once a recorded sup-norm is at or below this level.
    #[serde(default)]
    pub stop_below: Option<f64>,
}

impl Schedule {
    pub fn new(t_end: f64, dt: f64, history_dt: f64) -> Self {
        Self {
            t_end,
            dt,
            history_dt,
            snapshot_times: Vec::new(),
            stop_below: None,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn stop_below(mut self, level: f64) -> Self {
        self.stop_below = Some(level);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", "must be nonnegative"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.history_dt > 0.0) {
            return Err(invalid("history_dt", "must be positive"));
        }
        Ok(())
    }
}

/// Overshoot beyond `[0, 1]` that is clamped silently.
pub const CLAMP_EPS: f64 = 1e-10;
/// Boundary value above which a run is treated as touching the window edge.
pub const CLIP_LEVEL: f64 = 1e-8;
/// Rows leaving the window with `|v|·d/κ` above this are exempt from the clip check.
pub const OUTFLOW_PECLET: f64 = 20.0;
/// On a boundary every row flows out of, reactive runs are flagged only when
/// material at or above this fraction of `θ₀` leaves. Colder material
/// cannot react and is carried away from the window.
pub const OUTFLOW_THETA_FRACTION: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid2D,
    pub frame_velocity: f64,
    pub dt: f64,
    pub snapshots: Vec<Field2D>,
    pub sup_history: Vec<(f64, f64)>,
    pub l1_history: Vec<(f64, f64)>,
    /// Mass reached the x-boundary in a row that could carry it back, or
    /// hot material left through an outflow boundary.
    pub domain_clipped: bool,
    /// Largest value seen in the boundary cells of non-exempt rows.
    pub max_boundary: f64,
    /// Largest overshoot outside `[0, 1]` removed by clamping.
    pub max_overshoot: f64,
    /// The run hit `stop_below` before `t_end`.
    pub stopped_early: bool,
    pub final_field: Field2D,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.final_field.time
    }

    /// Snapshot closest to time `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&Field2D> {
        self.snapshots.iter().min_by(|a, b| {
            (a.time - t).abs().total_cmp(&(b.time - t).abs())
        })
    }
}

/// Split-step integrator for one problem on one grid.
pub struct Solver {
    grid: Grid2D,
    equation: Equation,
    kappa: f64,
    big_m: f64,
    reaction: Option<IgnitionReaction>,
    /// Row velocities `A·u(y_j) − c`.
    row_velocity: Vec<f64>,
    heat_x: Option<HeatOperator>,
    heat_y: HeatOperator,
    field: Field2D,
    scratch: Vec<f64>,
    scheme: Scheme,
    op: ShearOperator,
    left_exempt: Vec<bool>,
    right_exempt: Vec<bool>,
    /// Flag thresholds for the left and right boundary.
    clip_level: (f64, f64),
    frame_velocity: f64,
}

impl std::fmt::Debug for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solver")
            .field("grid", &self.grid)
            .field("equation", &self.equation)
            .finish()
    }
}

impl Solver {
    pub fn new(grid: Grid2D, problem: &Problem<'_>) -> Result<Self> {
        Self::with_scheme(grid, problem, Scheme::Split)
    }

    pub fn with_scheme(grid: Grid2D, problem: &Problem<'_>, scheme: Scheme) -> Result<Self> {
        grid.validate()?;
        if scheme == Scheme::Spectral && !matches!(grid.bc_y, YBoundary::Periodic { .. }) {
            return Err(invalid("scheme", "the spectral scheme needs a periodic y-boundary"));
        }
        problem.params.validate()?;
        problem.initial.validate()?;
        if !problem.amplitude.is_finite() || !problem.frame_velocity.is_finite() {
            return Err(invalid("A", "amplitude and frame velocity must be finite"));
        }
        if let (YBoundary::Periodic { h }, Some(p)) = (grid.bc_y, problem.profile) {
            let rel = (h / p.period()).round();
            if rel < 1.0 || ((h / p.period()) - rel).abs() > 1e-9 * rel {
                return Err(invalid(
                    "h",
                    format!("grid period {h} is not a multiple of the profile period {}", p.period()),
                ));
            }
        }
        if let Some(w) = &problem.y_weight {
            if w.len() != grid.ny || w.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid("y_weight", "need ny values in [0, 1]"));
            }
        }
        let kappa = problem.params.kappa;
        let reaction = match problem.equation {
            Equation::Reactive => problem.reaction.filter(|f| !f.is_zero()).cloned(),
            _ => None,
        };
        let ys = grid.ys();
        let row_velocity: Vec<f64> = ys
            .iter()
            .map(|y| {
                let u = problem.profile.map_or(0.0, |p| p.eval(*y));
                problem.amplitude * u - problem.frame_velocity
            })
            .collect();

        let mut field = Field2D::zeros(grid);
        for iy in 0..grid.ny {
            let w = problem.y_weight.as_ref().map_or(1.0, |w| w[iy]);
            for ix in 0..grid.nx {
                field.values[iy * grid.nx + ix] = w * problem.initial.value(grid.x(ix));
            }
        }

        // A row may leak through the left (right) edge unflagged only if
        // every row drifts that way and its own drift beats diffusion over
        // the gap between the edge and the initial support.
        let support = problem.initial.support();
        let vscale = row_velocity.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let all_left = row_velocity.iter().all(|v| *v <= 1e-12 * vscale);
        let all_right = row_velocity.iter().all(|v| *v >= -1e-12 * vscale);
        let gap_left = (-grid.x_lo - support).max(0.0);
        let gap_right = (grid.x_hi - support).max(0.0);
        // A periodic x-window has no outflow: mass at the seam wraps around.
        let absorbing = scheme == Scheme::Split;
        let all_left = all_left && absorbing;
        let all_right = all_right && absorbing;
        let left_exempt = row_velocity
            .iter()
            .map(|v| all_left && -v * gap_left / kappa >= OUTFLOW_PECLET)
            .collect();
        let right_exempt = row_velocity
            .iter()
            .map(|v| all_right && v * gap_right / kappa >= OUTFLOW_PECLET)
            .collect();

        let outflow_level = match &reaction {
            Some(f) => OUTFLOW_THETA_FRACTION * f.theta0(),
            None => CLIP_LEVEL,
        };
        let clip_level = (
            if all_left { outflow_level } else { CLIP_LEVEL },
            if all_right { outflow_level } else { CLIP_LEVEL },
        );

        let heat_x = match problem.equation {
            Equation::YDiffusion => None,
            _ => Some(HeatOperator::new(grid.nx, grid.dx(), Axis1D::Dirichlet)),
        };
        let op = ShearOperator {
            nx: grid.nx,
            dx: grid.dx(),
            ny: grid.ny,
            dy: grid.dy(),
            kappa,
            x_diffusion: problem.equation != Equation::YDiffusion,
            row_velocity: row_velocity.clone(),
        };
        let y_axis = match grid.bc_y {
            YBoundary::Periodic { .. } => Axis1D::Periodic,
            YBoundary::Dirichlet { .. } => Axis1D::Dirichlet,
        };
        Ok(Self {
            heat_x,
            heat_y: HeatOperator::new(grid.ny, grid.dy(), y_axis),
            scratch: vec![0.0; grid.nx],
            grid,
            equation: problem.equation,
            kappa,
            big_m: problem.params.big_m,
            reaction,
            row_velocity,
            field,
            scheme,
            op,
            left_exempt,
            right_exempt,
            clip_level,
            frame_velocity: problem.frame_velocity,
        })
    }

    pub fn field(&self) -> &Field2D {
        &self.field
    }

    fn diffuse(&mut self, tau: f64) {
        let kt = self.kappa * tau;
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        if let Some(hx) = self.heat_x.as_mut() {
            hx.apply_strided(&mut self.field.values, ny, nx, 1, kt);
        }
        self.heat_y.apply_strided(&mut self.field.values, nx, 1, nx, kt);
    }

    fn advect(&mut self, tau: f64) {
        let nx = self.grid.nx;
        let dx = self.grid.dx();
        for (iy, v) in self.row_velocity.iter().enumerate() {
            let s = v * tau / dx;
            if s == 0.0 {
                continue;
            }
            let row = &mut self.field.values[iy * nx..(iy + 1) * nx];
            if row.iter().all(|x| *x == 0.0) {
                continue;
            }
            self.scratch.copy_from_slice(row);
            shift_row(&self.scratch, row, s);
        }
    }

    /// Explicit midpoint step of `T' = M f(T)`, then clamp into `[0, 1]`.
    fn react(&mut self, tau: f64) {
        let Some(f) = self.reaction.as_ref() else {
            return;
        };
        let mt = self.big_m * tau;
        let theta0 = f.theta0();
        for t in self.field.values.iter_mut() {
            if *t <= theta0 {
                continue;
            }
            let mid = *t + 0.5 * mt * f.eval(*t);
            *t = (*t + mt * f.eval(mid)).clamp(0.0, 1.0);
        }
    }

    fn clamp(&mut self) -> f64 {
        let mut over = 0.0_f64;
        for v in self.field.values.iter_mut() {
            if *v < 0.0 {
                over = over.max(-*v);
                *v = 0.0;
            } else if *v > 1.0 {
                over = over.max(*v - 1.0);
                *v = 1.0;
            }
        }
        over
    }

    /// Largest boundary value in non-exempt rows, and whether it crossed
    /// the flag threshold of its side.
    fn boundary_check(&self) -> (f64, bool) {
        let nx = self.grid.nx;
        let (mut left, mut right) = (0.0_f64, 0.0_f64);
        for iy in 0..self.grid.ny {
            let row = self.field.row(iy);
            if !self.left_exempt[iy] {
                left = left.max(row[0]);
            }
            if !self.right_exempt[iy] {
                right = right.max(row[nx - 1]);
            }
        }
        (
            left.max(right),
            left > self.clip_level.0 || right > self.clip_level.1,
        )
    }

    /// Runs the Strang-split scheme, synchronising at every history time.
    pub fn run(mut self, schedule: &Schedule) -> Result<Trajectory> {
        schedule.validate()?;
        // Equal history intervals that end exactly on t_end, each an equal
        // number of steps.
        let n_hist = (schedule.t_end / schedule.history_dt - 1e-9).ceil().max(0.0) as usize;
        let hist_dt = if n_hist == 0 {
            schedule.history_dt
        } else {
            schedule.t_end / n_hist as f64
        };
        let steps_per_hist = (hist_dt / schedule.dt - 1e-9).ceil().max(1.0) as usize;
        let dt = hist_dt / steps_per_hist as f64;
        let mut spectral = match self.scheme {
            Scheme::Spectral if n_hist > 0 => Some(ShearPropagator::new(&self.op, &[0.5 * dt, dt])),
            _ => None,
        };

        let mut snap_due: Vec<f64> = schedule.snapshot_times.clone();
        snap_due.sort_by(f64::total_cmp);
        snap_due.dedup();
        let mut next_snap = 0;

        let mut traj = Trajectory {
            grid: self.grid,
            frame_velocity: self.frame_velocity,
            dt,
            snapshots: Vec::new(),
            sup_history: Vec::new(),
            l1_history: Vec::new(),
            domain_clipped: false,
            max_boundary: 0.0,
            max_overshoot: 0.0,
            stopped_early: false,
            final_field: self.field.clone(),
        };

        let record = |solver: &Solver, traj: &mut Trajectory, next_snap: &mut usize| -> bool {
            let t = solver.field.time;
            let sup = solver.field.sup();
            traj.sup_history.push((t, sup));
            traj.l1_history.push((t, solver.field.l1()));
            let (b, clipped) = solver.boundary_check();
            traj.max_boundary = traj.max_boundary.max(b);
            traj.domain_clipped |= clipped;
            // A snapshot is taken at the first sync time at or after its request.
            while *next_snap < snap_due.len() && snap_due[*next_snap] <= t + 0.5 * dt {
                traj.snapshots.push(solver.field.clone());
                *next_snap += 1;
            }
            schedule.stop_below.is_some_and(|lvl| sup <= lvl)
        };

        let over = self.clamp();
        traj.max_overshoot = traj.max_overshoot.max(over);
        let mut stop = record(&self, &mut traj, &mut next_snap);

        let mut k = 0;
        while !stop && k < n_hist {
            let m = steps_per_hist;
            let h = dt;
            if let Some(prop) = spectral.as_mut() {
                prop.apply(&mut self.field.values, 0.5 * h);
                for i in 0..m {
                    self.react(h);
                    prop.apply(&mut self.field.values, if i + 1 == m { 0.5 * h } else { h });
                }
            } else {
                self.diffuse(0.5 * h);
                for i in 0..m {
                    self.advect(h);
                    self.react(h);
                    self.diffuse(if i + 1 == m { 0.5 * h } else { h });
                }
            }
            self.field.time = if k + 1 == n_hist {
                schedule.t_end
            } else {
                (k + 1) as f64 * hist_dt
            };
            let over = self.clamp();
            traj.max_overshoot = traj.max_overshoot.max(over);
            stop = record(&self, &mut traj, &mut next_snap);
            k += 1;
        }
        traj.stopped_early = stop && self.field.time < schedule.t_end;
        traj.final_field = self.field;
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InitialData;

    fn unit() -> PhysParams {
        PhysParams::unit(0.25, 1.0).unwrap()
    }

    #[test]
    fn zero_velocity_keeps_row_shape_for_psi() {
        let grid = Grid2D::symmetric(4.0, 64, 8, YBoundary::Periodic { h: 1.0 }).unwrap();
        let prob = Problem {
            equation: Equation::YDiffusion,
            params: unit(),
            reaction: None,
            profile: None,
            amplitude: 0.0,
            frame_velocity: 0.0,
            initial: InitialData::sharp(1.0).unwrap(),
            y_weight: None,
        };
        let s = Solver::new(grid, &prob).unwrap();
        let init = s.field().values.clone();
        let tr = s.run(&Schedule::new(3.0, 0.1, 0.5)).unwrap();
        for (a, b) in tr.final_field.values.iter().zip(&init) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((tr.final_time() - 3.0).abs() < 1e-12);
        assert_eq!(tr.sup_history.len(), 7);
    }

    #[test]
    fn stop_below_ends_early() {
        let grid = Grid2D::symmetric(4.0, 64, 8, YBoundary::Periodic { h: 1.0 }).unwrap();
        let prob = Problem {
            equation: Equation::Linear,
            params: unit(),
            reaction: None,
            profile: None,
            amplitude: 0.0,
            frame_velocity: 0.0,
            initial: InitialData::sharp(0.2).unwrap(),
            y_weight: None,
        };
        let tr = Solver::new(grid, &prob)
            .unwrap()
            .run(&Schedule::new(10.0, 0.1, 0.1).stop_below(0.25))
            .unwrap();
        assert!(tr.stopped_early);
        assert!(tr.final_time() < 1.0);
    }

    #[test]
    fn snapshot_times_land_on_sync_points() {
        let grid = Grid2D::symmetric(4.0, 16, 8, YBoundary::Periodic { h: 1.0 }).unwrap();
        let prob = Problem {
            equation: Equation::Linear,
            params: unit(),
            reaction: None,
            profile: None,
            amplitude: 0.0,
            frame_velocity: 0.0,
            initial: InitialData::sharp(1.0).unwrap(),
            y_weight: None,
        };
        let tr = Solver::new(grid, &prob)
            .unwrap()
            .run(&Schedule::new(1.0, 0.05, 0.25).with_snapshots(vec![0.0, 0.5, 1.0]))
            .unwrap();
        let times: Vec<f64> = tr.snapshots.iter().map(|f| f.time).collect();
        assert_eq!(times.len(), 3);
        assert!((times[1] - 0.5).abs() < 1e-12 && (times[2] - 1.0).abs() < 1e-12);
    }
}
