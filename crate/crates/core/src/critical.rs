//! Stationary Dirichlet profiles and the critical plateau length.
//!
//! A symmetric solution of `κψ″ + Mf(ψ) = 0` on `[0, l]` with `ψ = 0` at
//! both ends and peak `p` exists exactly when `l = l(p)`, where
//!
//! ```text
//! l(p) = √(2κ/M) ∫₀ᵖ dψ / √(F(p) − F(ψ)),   F(s) = ∫₀ˢ f.
//! ```
//!
//! `ℓ̃ = min_p l(p)` is the narrowest strip carrying a positive stationary
//! state. The strip evolution brackets the threshold `ℓ` between strips
//! that extinguish and strips that keep burning over a finite horizon.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{IgnitionReaction, InitialData, InitialShape, PhysParams};
use crate::numerics::{golden_section, integrate};
use crate::pde::{self, Equation, Grid2D, Problem, Schedule, Solver, YBoundary};

/// Tolerance of the time-map quadrature, absolute where `l(p)` is of order one.
pub const TIME_MAP_TOL: f64 = 1e-10;
/// Level below which a strip counts as extinguished.
pub const EXTINCTION_FRACTION: f64 = 0.5;

fn check_peak(p: f64, f: &IgnitionReaction) -> Result<f64> {
    let th = f.theta0();
    if !(p > th && p < 1.0) {
        return Err(invalid("p", format!("peak {p} must lie in ({th}, 1)")));
    }
    let fp = f.antiderivative(p);
    if !(fp > 0.0) {
        return Err(invalid("p", format!("F({p}) = {fp} is not positive")));
    }
    Ok(fp)
}

/// Length of the interval carrying the symmetric Dirichlet solution with peak `p`.
pub fn stationary_length(p: f64, f: &IgnitionReaction, params: &PhysParams) -> Result<f64> {
    params.validate()?;
    let fp = check_peak(p, f)?;
    // Near the ends of (θ₀, 1) the map blows up; keep the tolerance relative there.
    let tol = TIME_MAP_TOL * (p / fp.sqrt()).max(1.0);
    // ψ = p·sin²s turns the endpoint singularity at ψ = p into a bounded
    // integrand. The kink of f at θ₀ is a breakpoint.
    let integrand = |s: f64| {
        let (sn, cs) = s.sin_cos();
        let psi = p * sn * sn;
        let gap = f.integral(psi, p);
        if gap <= 0.0 {
            return 0.0;
        }
        2.0 * p * sn * cs / gap.sqrt()
    };
    let th = f.theta0();
    let s_kink = (th / p).sqrt().asin();
    let (a, _) = integrate(integrand, 0.0, s_kink, tol / 2.0);
    let (b, _) = integrate(integrand, s_kink, FRAC_PI_2, tol / 2.0);
    Ok((2.0 * params.kappa / params.big_m).sqrt() * (a + b))
}

/// Minimum of the time map and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLength {
    /// `ℓ̃ = min_p l(p)`.
    pub ell: f64,
    pub p_star: f64,
}

/// `ℓ̃` by a 64-point geometric scan of `(θ₀ + 10⁻³, 1 − 10⁻³)` followed by
/// golden-section refinement around the best scan point.
pub fn critical_plateau_length(f: &IgnitionReaction, params: &PhysParams) -> Result<CriticalLength> {
    params.validate()?;
    if !(f.antiderivative(1.0) > 0.0) {
        return Err(invalid("f", "reaction has no positive part"));
    }
    let (a, b) = (f.theta0() + 1e-3, 1.0 - 1e-3);
    const N: usize = 64;
    let ps: Vec<f64> = (0..N)
        .map(|i| a * (b / a).powf(i as f64 / (N - 1) as f64))
        .collect();
    let l = |p: f64| stationary_length(p, f, params).unwrap_or(f64::INFINITY);
    let ls: Vec<f64> = ps.iter().map(|&p| l(p)).collect();
    let best = (0..N).min_by(|&i, &j| ls[i].total_cmp(&ls[j])).expect("non-empty scan");
    if !ls[best].is_finite() {
        return Err(invalid("f", "time map is infinite on the whole scan"));
    }
    let lo = ps[best.saturating_sub(1)];
    let hi = ps[(best + 1).min(N - 1)];
    let (p_star, ell) = golden_section(l, lo, hi, 1e-10);
    if ell <= ls[best] {
        Ok(CriticalLength { ell, p_star })
    } else {
        Ok(CriticalLength {
            ell: ls[best],
            p_star: ps[best],
        })
    }
}

/// Sampled stationary solution on `[0, l(p)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub peak: f64,
    pub length: f64,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl StationaryProfile {
    /// Largest `|κψ′²/2 − M(F(p) − F(ψ))|` over the samples.
    pub fn energy_residual(&self, f: &IgnitionReaction, params: &PhysParams) -> f64 {
        self.values
            .iter()
            .zip(&self.slopes)
            .map(|(&v, &d)| {
                (params.kappa * d * d / 2.0 - params.big_m * f.integral(v.clamp(0.0, 1.0), self.peak)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Linear interpolation, zero outside `[0, l]`.
    pub fn value_at(&self, y: f64) -> f64 {
        if !(y > 0.0 && y < self.length) {
            return 0.0;
        }
        let dy = self.ys[1] - self.ys[0];
        let i = ((y / dy) as usize).min(self.ys.len() - 2);
        let w = (y - self.ys[i]) / dy;
        ((1.0 - w) * self.values[i] + w * self.values[i + 1]).clamp(0.0, 1.0)
    }
}

/// Samples the stationary solution with peak `p` at `n` (odd, ≥ 5) points,
/// integrating `ψ″ = −(M/κ)f(ψ)` with RK4 from `ψ(0) = 0`,
/// `ψ′(0) = √(2M F(p)/κ)` up to `l/2` and mirroring.
pub fn stationary_profile(
    p: f64,
    f: &IgnitionReaction,
    params: &PhysParams,
    n: usize,
) -> Result<StationaryProfile> {
    if n < 5 || n % 2 == 0 {
        return Err(invalid("n", "need an odd sample count of at least 5"));
    }
    let fp = check_peak(p, f)?;
    let length = stationary_length(p, f, params)?;
    let (kappa, m) = (params.kappa, params.big_m);
    let half = n / 2;
    let dy = length / (n - 1) as f64;
    const SUB: usize = 64;
    let h = dy / SUB as f64;
    let acc = |v: f64| -m / kappa * f.eval(v.clamp(0.0, 1.0));
    let mut values = vec![0.0; n];
    let mut slopes = vec![0.0; n];
    let (mut v, mut d) = (0.0, (2.0 * m * fp / kappa).sqrt());
    slopes[0] = d;
    for i in 1..=half {
        for _ in 0..SUB {
            let (k1v, k1d) = (d, acc(v));
            let (k2v, k2d) = (d + 0.5 * h * k1d, acc(v + 0.5 * h * k1v));
            let (k3v, k3d) = (d + 0.5 * h * k2d, acc(v + 0.5 * h * k2v));
            let (k4v, k4d) = (d + h * k3d, acc(v + h * k3v));
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            d += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        }
        values[i] = v;
        slopes[i] = d;
    }
    for i in 0..half {
        values[n - 1 - i] = values[i];
        slopes[n - 1 - i] = -slopes[i];
    }
    let ys = (0..n).map(|i| i as f64 * dy).collect();
    Ok(StationaryProfile {
        peak: p,
        length,
        ys,
        values,
        slopes,
    })
}

/// `l(p)` by shooting down from the peak: `ψ(0) = p`, `ψ′(0) = 0`, RK4 until
/// `ψ` crosses zero, with the crossing located by cubic Hermite interpolation.
pub fn shooting_length(p: f64, f: &IgnitionReaction, params: &PhysParams) -> Result<f64> {
    params.validate()?;
    check_peak(p, f)?;
    let (kappa, m) = (params.kappa, params.big_m);
    let acc = |v: f64| -m / kappa * f.eval(v.clamp(0.0, 1.0));
    let h = 1e-4 * params.laminar();
    let (mut y, mut v, mut d) = (0.0, p, 0.0);
    loop {
        let (k1v, k1d) = (d, acc(v));
        let (k2v, k2d) = (d + 0.5 * h * k1d, acc(v + 0.5 * h * k1v));
        let (k3v, k3d) = (d + 0.5 * h * k2d, acc(v + 0.5 * h * k2v));
        let (k4v, k4d) = (d + h * k3d, acc(v + h * k3v));
        let nv = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        let nd = d + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if nv <= 0.0 {
            // Newton on the Hermite cubic through both ends of the step.
            let herm = |s: f64| {
                let (s2, s3) = (s * s, s * s * s);
                (2.0 * s3 - 3.0 * s2 + 1.0) * v
                    + (s3 - 2.0 * s2 + s) * h * d
                    + (-2.0 * s3 + 3.0 * s2) * nv
                    + (s3 - s2) * h * nd
            };
            let mut s = v / (v - nv);
            for _ in 0..20 {
                let ds = 1e-7;
                let g = (herm(s + ds) - herm(s - ds)) / (2.0 * ds);
                s -= herm(s) / g;
            }
            return Ok(2.0 * (y + s * h));
        }
        y += h;
        v = nv;
        d = nd;
        if y > 1e4 * params.laminar() {
            return Err(invalid("p", "shooting did not reach zero"));
        }
    }
}

/// `ℓ̃` with the data needed to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLengthReport {
    pub ell_tilde: f64,
    pub p_star: f64,
    pub quadrature_tol: f64,
    pub shooting_length: f64,
    /// `|shooting − quadrature| / quadrature` at `p*`.
    pub cross_check_delta: f64,
    pub kappa: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub theta0: f64,
    /// `ℓ̃ / (π√(κ/M))`.
    pub ratio_to_pi_laminar: f64,
}

pub fn critical_length_report(f: &IgnitionReaction, params: &PhysParams) -> Result<CriticalLengthReport> {
    let c = critical_plateau_length(f, params)?;
    let shoot = shooting_length(c.p_star, f, params)?;
    Ok(CriticalLengthReport {
        ell_tilde: c.ell,
        p_star: c.p_star,
        quadrature_tol: TIME_MAP_TOL,
        shooting_length: shoot,
        cross_check_delta: (shoot - c.ell).abs() / c.ell,
        kappa: params.kappa,
        big_m: params.big_m,
        theta0: f.theta0(),
        ratio_to_pi_laminar: c.ell / (std::f64::consts::PI * params.laminar()),
    })
}

impl CriticalLengthReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

/// Discretization of strip runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripResolution {
    /// Interior nodes across the strip.
    pub ny: usize,
    pub dx: f64,
    pub dt: f64,
    pub history_dt: f64,
}

impl StripResolution {
    /// 32 nodes across, `dx = √(κ/M)/4`, `dt = 0.1/M`.
    pub fn standard(params: &PhysParams) -> Self {
        Self {
            ny: 32,
            dx: params.laminar() / 4.0,
            dt: 0.1 / params.big_m,
            history_dt: 0.1 / params.big_m,
        }
    }

    /// Half the spacing in both directions.
    pub fn refined(&self) -> Self {
        Self {
            ny: 2 * self.ny + 1,
            dx: self.dx / 2.0,
            ..*self
        }
    }

    pub fn coarsened(&self) -> Self {
        Self {
            ny: ((self.ny.saturating_sub(1)) / 2).max(8),
            dx: self.dx * 2.0,
            ..*self
        }
    }
}

/// Strip grid on `[−L − margin, L + margin] × [0, l]` with `±L` on cell faces.
fn strip_grid(l: f64, half_width: f64, margin: f64, res: &StripResolution) -> Result<Grid2D> {
    let dx = half_width / (half_width / res.dx).ceil();
    let extra = (margin / dx).ceil();
    let half = half_width + extra * dx;
    let nx = (2.0 * half / dx).round() as usize;
    Grid2D::new(-half, half, nx, res.ny, YBoundary::Dirichlet { l })
}

/// Diffusive margin for a run of length `t_max`.
fn margin(params: &PhysParams, t_max: f64) -> f64 {
    8.0 * (params.kappa * t_max).sqrt()
}

/// Outcome of one strip run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripRun {
    pub l: f64,
    pub half_width: f64,
    /// First time with `sup φ ≤ θ₀/2`, linearly interpolated.
    pub extinction_time: Option<f64>,
    pub horizon: f64,
    pub clipped: bool,
}

fn run_strip(
    l: f64,
    half_width: f64,
    f: &IgnitionReaction,
    params: &PhysParams,
    t_max: f64,
    res: &StripResolution,
) -> Result<StripRun> {
    if !(l > 0.0 && half_width > 0.0) {
        return Err(invalid("l", "strip width and half-width must be positive"));
    }
    let grid = strip_grid(l, half_width, margin(params, t_max), res)?;
    let level = EXTINCTION_FRACTION * f.theta0();
    let schedule = Schedule::new(t_max, res.dt, res.history_dt).stop_below(level);
    let tr = pde::solve_dirichlet_strip(l, half_width, params, f, &grid, &schedule)?;
    Ok(StripRun {
        l,
        half_width,
        extinction_time: first_crossing(&tr.sup_history, level),
        horizon: t_max,
        clipped: tr.domain_clipped,
    })
}

/// First time the history drops to `level`, interpolated linearly.
pub(crate) fn first_crossing(history: &[(f64, f64)], level: f64) -> Option<f64> {
    let i = history.iter().position(|&(_, s)| s <= level)?;
    if i == 0 {
        return Some(history[0].0);
    }
    let (t0, s0) = history[i - 1];
    let (t1, s1) = history[i];
    Some(t0 + (s0 - level) / (s0 - s1) * (t1 - t0))
}

/// Bracket on the strip threshold `ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllBracket {
    /// Largest tested width that extinguished.
    pub l_low: f64,
    /// Smallest tested width that kept burning to the horizon; `None` when
    /// every tested width extinguished.
    pub l_high: Option<f64>,
    pub horizon: f64,
    pub half_width: f64,
    pub resolution: StripResolution,
    /// Every width tried, with whether it extinguished.
    pub tested: Vec<(f64, bool)>,
    pub clipped: bool,
}

impl EllBracket {
    pub fn midpoint(&self) -> Option<f64> {
        self.l_high.map(|h| 0.5 * (self.l_low + h))
    }

    pub fn contains(&self, l: f64) -> bool {
        l >= self.l_low && self.l_high.is_none_or(|h| l <= h)
    }
}

/// Bisection on the strip width with `solve_dirichlet_strip` started from
/// `χ_[−L, L]`, until `l_high − l_low ≤ rel_tol·l_high`.
pub fn bracket_ell(
    f: &IgnitionReaction,
    params: &PhysParams,
    l_probe: f64,
    t_max: f64,
    rel_tol: f64,
    res: &StripResolution,
) -> Result<EllBracket> {
    params.validate()?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid("rel_tol", "must lie in (0, 1)"));
    }
    if !(t_max > 0.0) {
        return Err(invalid("t_max", "must be positive"));
    }
    let lam = params.laminar();
    let mut tested = Vec::new();
    let mut clipped = false;
    let mut probe = |l: f64, tested: &mut Vec<(f64, bool)>| -> Result<bool> {
        let r = run_strip(l, l_probe, f, params, t_max, res)?;
        let ext = r.extinction_time.is_some();
        clipped |= r.clipped && ext;
        tested.push((l, ext));
        Ok(ext)
    };

    let estimate = critical_plateau_length(f, params).map(|c| c.ell).ok();
    let Some(ell_tilde) = estimate else {
        // No positive part: diffusion alone can only decay.
        let l = std::f64::consts::PI * lam;
        probe(l, &mut tested)?;
        return Ok(EllBracket {
            l_low: l,
            l_high: None,
            horizon: t_max,
            half_width: l_probe,
            resolution: *res,
            tested,
            clipped,
        });
    };

    let mut lo = 0.5 * ell_tilde;
    while !probe(lo, &mut tested)? {
        lo *= 0.5;
        if lo < 0.05 * lam {
            return Err(invalid("l", "even very thin strips keep burning"));
        }
    }
    let mut hi = 1.5 * ell_tilde;
    let mut found = false;
    for _ in 0..4 {
        if !probe(hi, &mut tested)? {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return Ok(EllBracket {
            l_low: lo,
            l_high: None,
            horizon: t_max,
            half_width: l_probe,
            resolution: *res,
            tested,
            clipped,
        });
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut tested)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EllBracket {
        l_low: lo,
        l_high: Some(hi),
        horizon: t_max,
        half_width: l_probe,
        resolution: *res,
        tested,
        clipped,
    })
}

/// Brackets at two resolutions and their extrapolated midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllEstimate {
    pub coarse: EllBracket,
    pub fine: EllBracket,
    /// `m_f + (m_f − m_c)/3`, assuming second-order convergence.
    pub extrapolated: Option<f64>,
    /// Set when the two brackets are disjoint beyond their own widths, i.e.
    /// the classification changed under refinement.
    pub inconsistent: bool,
}

pub fn bracket_ell_two_level(
    f: &IgnitionReaction,
    params: &PhysParams,
    l_probe: f64,
    t_max: f64,
    rel_tol: f64,
    fine: &StripResolution,
) -> Result<EllEstimate> {
    let coarse = bracket_ell(f, params, l_probe, t_max, rel_tol, &fine.coarsened())?;
    let fine = bracket_ell(f, params, l_probe, t_max, rel_tol, fine)?;
    let extrapolated = match (coarse.midpoint(), fine.midpoint()) {
        (Some(c), Some(m)) => Some(m + (m - c) / 3.0),
        _ => None,
    };
    let inconsistent = match (coarse.l_high, fine.l_high) {
        (Some(ch), Some(fh)) => {
            let slack = (ch - coarse.l_low) + (fh - fine.l_low);
            fine.l_low > ch + slack || coarse.l_low > fh + slack
        }
        (None, None) => false,
        _ => true,
    };
    Ok(EllEstimate {
        coarse,
        fine,
        extrapolated,
        inconsistent,
    })
}

/// `τ(l, L)`: first time `sup φ ≤ θ₀/2` on the strip of width `l` started
/// from `χ_[−L, L]`, or `None` if not reached by `t_max`.
pub fn quench_time(
    l: f64,
    half_width: f64,
    f: &IgnitionReaction,
    params: &PhysParams,
    t_max: f64,
    res: &StripResolution,
) -> Result<StripRun> {
    params.validate()?;
    run_strip(l, half_width, f, params, t_max, res)
}

/// Table of `τ(l, L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchTimeTable {
    pub entries: Vec<StripRun>,
}

impl QuenchTimeTable {
    pub fn fill(
        ls: &[f64],
        half_widths: &[f64],
        f: &IgnitionReaction,
        params: &PhysParams,
        t_max: f64,
        res: &StripResolution,
    ) -> Result<Self> {
        let mut entries = Vec::with_capacity(ls.len() * half_widths.len());
        for &l in ls {
            for &hw in half_widths {
                entries.push(quench_time(l, hw, f, params, t_max, res)?);
            }
        }
        Ok(Self { entries })
    }

    /// Pairs `(a, b)` of entries sharing `l` or `L`, with `b` larger in the
    /// other coordinate, where `τ(b) < τ(a) − slack`.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<(StripRun, StripRun)> {
        let tau = |r: &StripRun| r.extinction_time.unwrap_or(f64::INFINITY);
        let mut out = Vec::new();
        for a in &self.entries {
            for b in &self.entries {
                let ordered = (a.l == b.l && b.half_width > a.half_width)
                    || (a.half_width == b.half_width && b.l > a.l);
                if ordered && tau(b) < tau(a) - slack {
                    out.push((*a, *b));
                }
            }
        }
        out
    }

    /// Columns `l,L,tau,horizon,quenched_flag`; `tau` is `inf` when the
    /// horizon was reached.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["l", "L", "tau", "horizon", "quenched_flag"])?;
        for e in &self.entries {
            let tau = e.extinction_time.map_or("inf".to_string(), |t| format!("{t}"));
            w.write_record([
                format!("{}", e.l),
                format!("{}", e.half_width),
                tau,
                format!("{}", e.horizon),
                format!("{}", u8::from(e.extinction_time.is_some())),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the strip of width `(1 + widen)·l(p)` started from the stationary
/// profile, centred across the strip and multiplied by a ramped x-bump of
/// half-width `bump`. Returns the run; persistence is `extinction_time == None`.
pub fn seeded_strip_run(
    profile: &StationaryProfile,
    widen: f64,
    bump: f64,
    f: &IgnitionReaction,
    params: &PhysParams,
    t_max: f64,
    res: &StripResolution,
) -> Result<StripRun> {
    let l = profile.length * (1.0 + widen);
    let ramp = 4.0 * params.laminar();
    let grid = strip_grid(l, bump + ramp, margin(params, t_max), res)?;
    let shift = 0.5 * (l - profile.length);
    let weight = (0..grid.ny)
        .map(|j| profile.value_at(grid.y(j) - shift))
        .collect();
    let prob = Problem {
        equation: Equation::Reactive,
        params: *params,
        reaction: Some(f),
        profile: None,
        amplitude: 0.0,
        frame_velocity: 0.0,
        initial: InitialData::new(bump, 1.0, InitialShape::Ramped { width: ramp })?,
        y_weight: Some(weight),
    };
    let level = EXTINCTION_FRACTION * f.theta0();
    let schedule = Schedule::new(t_max, res.dt, res.history_dt).stop_below(level);
    let tr = Solver::new(grid, &prob)?.run(&schedule)?;
    Ok(StripRun {
        l,
        half_width: bump,
        extinction_time: first_crossing(&tr.sup_history, level),
        horizon: t_max,
        clipped: tr.domain_clipped,
    })
}
