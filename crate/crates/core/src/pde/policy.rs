use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{Grid2D, YBoundary};
use super::solver::{Problem, Schedule, Scheme, Solver, Trajectory};
use crate::error::{invalid, Result};
use crate::model::{InitialData, PhysParams};
use crate::profiles::ShearProfile;

/// Computational frame in x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    #[default]
    Lab,
    /// Moves with the fastest row, so no row drifts forward.
    Crest,
    /// Moves with the slowest row.
    Trough,
    Velocity(f64),
}

/// How far the x-window extends beyond the initial support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// Lab frame: the smaller of ballistic spreading `V·t` and shear
    /// dispersion (`V·t_mix` plus eight Taylor standard deviations), plus
    /// `8√(κt)`. Crest/trough frames: the drift of the band of half-width
    /// `band·√(κ/M)` around the extremal row plus flame travel on the
    /// trailing side, flame travel on the leading side. Faster rows are
    /// covered by the outflow exemption of the solver.
    #[default]
    Auto,
    /// Margins (lengths) to the left and right of the support.
    Margins { left: f64, right: f64 },
}

/// Which scheme a policy picks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    /// Spectral in the lab frame once the step exceeds a fraction of the
    /// y-mixing time `h²/(4π²κ)` and the y-grid is small; split otherwise.
    #[default]
    Auto,
    Split,
    Spectral,
}

/// Rules turning a physical run into a grid and a time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridPolicy {
    /// Explicit dx; otherwise `L/64` clamped to `[w/64, w/4]`, `w` the laminar width.
    pub dx: Option<f64>,
    /// Explicit number of y cells per profile period.
    pub ny: Option<usize>,
    /// y cells per `min(h, ℓ̃)`.
    pub y_cells: usize,
    /// Estimate of ℓ̃ in laminar units, used only for resolution.
    pub ell_hint: f64,
    /// Step bound in units of `1/M`.
    pub dt: f64,
    /// History spacing in units of `1/M`.
    pub history_dt: f64,
    pub frame: Frame,
    pub window: Window,
    /// Hard limit on x cells; a window that would need more is shrunk and
    /// the run relies on clip detection.
    pub max_nx: usize,
    /// Uniform refinement factor applied on top of everything else.
    pub refine: usize,
    /// Bound on flame speed in units of `√(κM)`.
    pub front_speed: f64,
    /// Half-width of the tracked band in crest/trough frames, laminar units.
    pub band: f64,
    pub scheme: SchemeChoice,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            dx: None,
            ny: None,
            y_cells: 32,
            ell_hint: 6.67,
            dt: 0.05,
            history_dt: 0.1,
            frame: Frame::Lab,
            window: Window::Auto,
            max_nx: 1 << 15,
            refine: 1,
            front_speed: 2.0,
            band: 3.5,
            scheme: SchemeChoice::Auto,
        }
    }
}

/// Output of [`GridPolicy::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub grid: Grid2D,
    pub frame_velocity: f64,
    pub schedule: Schedule,
    pub scheme: Scheme,
}

impl Resolved {
    /// Runs `problem` with this grid, frame, and scheme. The problem's own
    /// frame velocity is overridden.
    pub fn simulate(&self, problem: &Problem<'_>, schedule: &Schedule) -> crate::Result<Trajectory> {
        let mut p = problem.clone();
        p.frame_velocity = self.frame_velocity;
        Solver::with_scheme(self.grid, &p, self.scheme)?.run(schedule)
    }
}

/// Mixing time below which a step is treated as unresolved, as a fraction
/// of `h²/(4π²κ)`.
const MIXING_FRACTION: f64 = 0.2;
/// Largest y-grid for which `Auto` picks the spectral scheme.
const SPECTRAL_MAX_NY: usize = 128;

/// Smallest 5-smooth integer at or above `n`.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl GridPolicy {
    pub fn validate(&self) -> Result<()> {
        if let Some(dx) = self.dx {
            if !(dx > 0.0) {
                return Err(invalid("dx", "must be positive"));
            }
        }
        if self.y_cells < 8 || self.ny.is_some_and(|n| n < 8) {
            return Err(invalid("ny", "need at least 8 cells"));
        }
        if !(self.dt > 0.0 && self.history_dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.refine == 0 || self.max_nx < 8 {
            return Err(invalid("refine", "must be at least 1"));
        }
        if let Window::Margins { left, right } = self.window {
            if !(left >= 0.0 && right >= 0.0) {
                return Err(invalid("window", "margins must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn frame_velocity(&self, p: &ShearProfile, amplitude: f64) -> f64 {
        let (hi, lo) = p.range();
        let (fast, slow) = if amplitude >= 0.0 {
            (amplitude * hi, amplitude * lo)
        } else {
            (amplitude * lo, amplitude * hi)
        };
        match self.frame {
            Frame::Lab => 0.0,
            Frame::Crest => fast,
            Frame::Trough => slow,
            Frame::Velocity(c) => c,
        }
    }

    /// Grid, frame and schedule for a periodic-in-y run.
    pub fn resolve(
        &self,
        params: &PhysParams,
        p: &ShearProfile,
        amplitude: f64,
        init: &InitialData,
        t_end: f64,
    ) -> Result<Resolved> {
        self.validate()?;
        let lam = params.laminar();
        let r = self.refine as f64;
        let half = init.half_width;

        let dx_target = self.dx.unwrap_or_else(|| (half / 64.0).clamp(lam / 64.0, lam / 4.0)) / r;
        // Put ±L on cell faces.
        let cells_in = (2.0 * half / dx_target).ceil().max(2.0);
        let dx = 2.0 * half / cells_in;

        let h = p.period();
        let ny = match self.ny {
            Some(n) => n * self.refine,
            None => {
                let dy_max = h.min(self.ell_hint * lam) / self.y_cells as f64 / r;
                let n = (h / dy_max).ceil() as usize;
                n.div_ceil(4) * 4
            }
        }
        .max(8);

        let c = self.frame_velocity(p, amplitude);
        let (hi, lo) = p.range();
        let vmax = (amplitude * hi - c).max(amplitude * lo - c).max(0.0);
        let vmin = (amplitude * hi - c).min(amplitude * lo - c).min(0.0);
        let spread = 8.0 * (params.kappa * t_end).sqrt();
        let extra = init.support() - half;
        let (left, right) = match self.window {
            Window::Auto => {
                let flame = self.front_speed * (params.kappa * params.big_m).sqrt() * t_end;
                match self.frame {
                    Frame::Crest | Frame::Trough => {
                        let drift = band_drift(p, amplitude, self.frame, self.band * lam) * t_end;
                        let (trail, lead) = (drift + flame + spread, flame + spread);
                        let leading_right = (self.frame == Frame::Crest) == (amplitude >= 0.0);
                        if leading_right {
                            (trail + extra, lead + extra)
                        } else {
                            (lead + extra, trail + extra)
                        }
                    }
                    _ => {
                        let t_mix = 4.0 * h * h / (4.0 * PI * PI * params.kappa);
                        let d_taylor = amplitude * amplitude * mean_square_antiderivative(p) / params.kappa;
                        let disp = (vmax.max(-vmin) * t_mix.min(t_end))
                            + 8.0 * (2.0 * d_taylor * t_end).sqrt();
                        (
                            (-vmin * t_end).min(disp) + spread + extra,
                            (vmax * t_end).min(disp) + spread + extra,
                        )
                    }
                }
            }
            Window::Margins { left, right } => (left + extra, right + extra),
        };
        let mut n_left = (left / dx).ceil() as usize + 1;
        let mut n_right = (right / dx).ceil() as usize + 1;
        let n_in = cells_in as usize;
        let budget = self.max_nx.saturating_sub(n_in);
        if n_left + n_right > budget {
            let scale = budget as f64 / (n_left + n_right) as f64;
            n_left = ((n_left as f64 * scale) as usize).max(1);
            n_right = ((n_right as f64 * scale) as usize).max(1);
        }
        let m = params.big_m;
        let dt = self.dt / m / r;
        let t_mix = h * h / (4.0 * PI * PI * params.kappa);
        let scheme = match self.scheme {
            SchemeChoice::Split => Scheme::Split,
            SchemeChoice::Spectral => Scheme::Spectral,
            SchemeChoice::Auto => {
                if self.frame == Frame::Lab && dt > MIXING_FRACTION * t_mix && ny <= SPECTRAL_MAX_NY {
                    Scheme::Spectral
                } else {
                    Scheme::Split
                }
            }
        };
        if scheme == Scheme::Spectral {
            let total = smooth_size(n_left + n_in + n_right);
            let pad = total - (n_left + n_in + n_right);
            n_left += pad / 2;
            n_right += pad - pad / 2;
        }
        let x_lo = -half - n_left as f64 * dx;
        let nx = n_left + n_in + n_right;
        let grid = Grid2D::new(x_lo, x_lo + nx as f64 * dx, nx, ny, YBoundary::Periodic { h })?;

        let schedule = Schedule::new(t_end, dt, self.history_dt / m);
        Ok(Resolved {
            grid,
            frame_velocity: c,
            schedule,
            scheme,
        })
    }
}

const PROFILE_SAMPLES: usize = 4096;

/// `(1/h)∫v²` with `v′ = u − ū`, `∫v = 0`, from uniform samples.
fn mean_square_antiderivative(p: &ShearProfile) -> f64 {
    let h = p.period();
    let n = PROFILE_SAMPLES;
    let dy = h / n as f64;
    let u: Vec<f64> = (0..n).map(|i| p.eval(i as f64 * dy)).collect();
    let mean = u.iter().sum::<f64>() / n as f64;
    let mut v = vec![0.0; n];
    for i in 1..n {
        v[i] = v[i - 1] + 0.5 * dy * (u[i - 1] + u[i] - 2.0 * mean);
    }
    let vm = v.iter().sum::<f64>() / n as f64;
    v.iter().map(|x| (x - vm) * (x - vm)).sum::<f64>() / n as f64
}

/// Largest speed of a row within `band` of the extremal row, relative to it.
/// When the extremum is a plateau the band is centred on its midpoint.
fn band_drift(p: &ShearProfile, amplitude: f64, frame: Frame, band: f64) -> f64 {
    let h = p.period();
    let n = PROFILE_SAMPLES;
    let dy = h / n as f64;
    let w: Vec<f64> = (0..n).map(|i| amplitude * p.eval(i as f64 * dy)).collect();
    let pick = |a: f64, b: f64| if frame == Frame::Crest { a > b } else { a < b };
    let mut star = 0;
    for i in 1..n {
        if pick(w[i], w[star]) {
            star = i;
        }
    }
    let flat = |i: usize| (w[i % n] - w[star]).abs() <= 1e-12 * amplitude.abs();
    let back = (1..n).take_while(|&j| flat(star + n - j)).count();
    let fwd = (1..n).take_while(|&j| flat(star + j)).count();
    let offset = (fwd as i64 - back as i64) / 2;
    let star = (star as i64 + offset).rem_euclid(n as i64) as usize;
    let k = ((band / dy).ceil() as usize).min(n / 2);
    (0..=2 * k)
        .map(|j| w[(star + n + j - k) % n])
        .map(|x| (x - w[star]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn faces_align_with_support() {
        let params = PhysParams::unit(0.25, 2.0 * std::f64::consts::PI).unwrap();
        let p = ShearProfile::sine(params.h, 1.0).unwrap();
        let init = InitialData::sharp(3.0).unwrap();
        let r = GridPolicy::default().resolve(&params, &p, 5.0, &init, 2.0).unwrap();
        let g = r.grid;
        let k = (-3.0 - g.x_lo) / g.dx();
        assert!((k - k.round()).abs() < 1e-9);
        assert!(g.x_hi >= 3.0 + 5.0 * 2.0);
        assert_eq!(g.ny % 4, 0);
        assert!(g.dy() <= 6.67 / 32.0 + 1e-12);
    }

    #[test]
    fn crest_frame_has_no_forward_rows() {
        let params = PhysParams::unit(0.25, 2.0 * std::f64::consts::PI).unwrap();
        let p = ShearProfile::sine(params.h, 1.0).unwrap();
        let pol = GridPolicy {
            frame: Frame::Crest,
            ..Default::default()
        };
        let init = InitialData::sharp(1.0).unwrap();
        let r = pol.resolve(&params, &p, 100.0, &init, 1.0).unwrap();
        assert!((r.frame_velocity - 100.0).abs() < 1e-3);
        // Flame and diffusion room ahead; the whole band lags behind.
        assert!(r.grid.x_hi < 1.0 + 2.0 + 8.0 + 1.0);
        assert!(r.grid.x_lo < -200.0);
    }

    #[test]
    fn band_sits_inside_a_wide_crest_plateau() {
        let p = ShearProfile::sine_with_plateau(10.0, PI / 2.0, None).unwrap();
        assert!(band_drift(&p, 1e6, Frame::Crest, 3.5) < 1e-3);
        let q = ShearProfile::sine(2.0 * PI, 1.0).unwrap();
        let d = band_drift(&q, 1.0, Frame::Crest, 1.0);
        assert!((d - (1.0 - 1f64.cos())).abs() < 1e-2);
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(97), 100);
        assert_eq!(smooth_size(1), 1);
    }

    #[test]
    fn auto_scheme_switches_with_mixing_time() {
        let params = PhysParams::unit(0.25, 2.0 * PI).unwrap();
        let init = InitialData::sharp(4.0).unwrap();
        let slow = ShearProfile::sine(2.0 * PI, 1.0).unwrap();
        let fast = crate::profiles::scale_profile(&slow, 8.0).unwrap();
        let pol = GridPolicy::default();
        assert_eq!(pol.resolve(&params, &slow, 5.0, &init, 20.0).unwrap().scheme, Scheme::Split);
        assert_eq!(pol.resolve(&params, &fast, 5.0, &init, 20.0).unwrap().scheme, Scheme::Spectral);
    }

    #[test]
    fn sine_dispersion_moments() {
        let p = ShearProfile::sine(2.0 * PI, 1.0).unwrap();
        assert!((mean_square_antiderivative(&p) - 0.5).abs() < 1e-6);
        let d = band_drift(&p, 1.0, Frame::Crest, 0.5);
        assert!((d - (1.0 - 0.5f64.cos())).abs() < 1e-3);
    }
}
