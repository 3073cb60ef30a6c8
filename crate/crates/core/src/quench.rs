//! Quench detection and searches over the amplitude `A` and the size `L`.
//!
//! Once `sup T ≤ θ₀` the reaction is off everywhere and stays off, so the
//! run is over: `T` then solves a linear equation and decays. Every verdict
//! here is bounded by a horizon; "not quenched" always means "not quenched
//! by `t_max`".

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::critical::critical_plateau_length;
use crate::error::{invalid, Error, Result};
use crate::model::{IgnitionReaction, InitialData, PhysParams};
use crate::numerics::{fit_line, LineFit};
use crate::pde::{Equation, GridPolicy, Problem, Scheme, Trajectory};
use crate::profiles::{longest_plateau, ShearProfile};

/// Tolerance for the sup-norm to rise after quenching.
pub const PERSISTENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchOutcome {
    pub quenched: bool,
    /// First recorded time with `sup T ≤ θ₀`.
    pub tau_detect: Option<f64>,
    pub horizon: f64,
    /// Slope of `log sup T` against `log t` on the recorded tail after quenching.
    pub decay_exponent: Option<f64>,
    /// Largest rise of the sup-norm after `tau_detect`.
    pub max_rise_after: f64,
    pub clipped: bool,
    /// Clipped, and the verdict is the one clipping can fake: a quench on
    /// an absorbing window or a non-quench on a periodic one.
    #[serde(default)]
    pub suspect: bool,
}

impl QuenchOutcome {
    /// The sup-norm did not rise after quenching beyond [`PERSISTENCE_TOL`].
    pub fn persists(&self) -> bool {
        self.max_rise_after <= PERSISTENCE_TOL
    }
}

/// Reads the quench verdict off a trajectory's sup-norm history.
pub fn detect_quench(traj: &Trajectory, theta0: f64) -> QuenchOutcome {
    let hist = &traj.sup_history;
    let horizon = hist.last().map_or(0.0, |h| h.0).max(traj.final_time());
    let idx = hist.iter().position(|&(_, s)| s <= theta0);
    let (tau, rise, exponent) = match idx {
        None => (None, 0.0, None),
        Some(i) => {
            let tau = hist[i].0;
            let mut rise: f64 = 0.0;
            let mut prev = hist[i].1;
            for &(_, s) in &hist[i + 1..] {
                rise = rise.max(s - prev);
                prev = prev.min(s);
            }
            (Some(tau), rise, tail_exponent(&hist[i..], tau))
        }
    };
    QuenchOutcome {
        quenched: idx.is_some(),
        tau_detect: tau,
        horizon,
        decay_exponent: exponent,
        max_rise_after: rise,
        clipped: traj.domain_clipped,
        suspect: false,
    }
}

/// Fits on the second half of the post-quench record (in `log t`), once the
/// time has at least doubled since quenching.
fn tail_exponent(hist: &[(f64, f64)], tau: f64) -> Option<f64> {
    let t_end = hist.last()?.0;
    let start = (2.0 * tau).max((tau.max(1e-12) * t_end).sqrt());
    let pts: Vec<(f64, f64)> = hist
        .iter()
        .filter(|&&(t, s)| t >= start && t > 0.0 && s > 0.0)
        .map(|&(t, s)| (t.ln(), s.ln()))
        .collect();
    if pts.len() < 4 || t_end < 2.0 * start {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(fit_line(&xs, &ys).slope)
}

/// Everything a quench run needs besides `A` and `L`.
#[derive(Debug, Clone, Copy)]
pub struct QuenchSetup<'a> {
    pub params: &'a PhysParams,
    pub reaction: &'a IgnitionReaction,
    pub profile: &'a ShearProfile,
    pub policy: &'a GridPolicy,
    pub horizon: f64,
}

/// One predicate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub amplitude: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub quenched: bool,
    pub tau_detect: Option<f64>,
    pub clipped: bool,
    #[serde(default)]
    pub suspect: bool,
}

impl QuenchSetup<'_> {
    /// Runs `T` from `χ_[−L, L]` and stops at the first sup `≤ θ₀`.
    pub fn evaluate(&self, amplitude: f64, half_width: f64) -> Result<Evaluation> {
        let init = InitialData::sharp(half_width)?;
        let out = self.run(amplitude, &init, true)?;
        Ok(Evaluation {
            amplitude,
            half_width,
            quenched: out.quenched,
            tau_detect: out.tau_detect,
            clipped: out.clipped,
            suspect: out.suspect,
        })
    }

    /// Full run to the horizon, or to the quench time if `stop` is set.
    pub fn run(&self, amplitude: f64, init: &InitialData, stop: bool) -> Result<QuenchOutcome> {
        let theta0 = self.reaction.theta0();
        let res = self
            .policy
            .resolve(self.params, self.profile, amplitude, init, self.horizon)?;
        let mut schedule = res.schedule.clone();
        if stop {
            schedule = schedule.stop_below(theta0);
        }
        let prob = Problem {
            equation: Equation::Reactive,
            params: *self.params,
            reaction: Some(self.reaction),
            profile: Some(self.profile),
            amplitude,
            frame_velocity: 0.0,
            initial: *init,
            y_weight: None,
        };
        let traj = res.simulate(&prob, &schedule)?;
        let mut out = detect_quench(&traj, theta0);
        out.suspect = out.clipped
            && match res.scheme {
                Scheme::Split => out.quenched,
                Scheme::Spectral => !out.quenched,
            };
        Ok(out)
    }
}

/// Search limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
    /// Largest amplitude tried.
    pub a_cap: f64,
    /// First amplitude of the doubling phase.
    pub a_start: f64,
    /// Probe `2·A_high` and `4·A_high` after bisection.
    pub spot_check: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            rel_tol: 0.05,
            a_cap: 1e6,
            a_start: 1.0,
            spot_check: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    /// `A_low < A₀ ≤ A_high`.
    Bracketed,
    /// The run at `A = 0` already quenches.
    QuenchesAtRest,
    /// No quench up to the cap.
    NoQuenchUpToCap,
}

/// Bracket on `A₀(L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalAmplitude {
    #[serde(rename = "L")]
    pub half_width: f64,
    /// Largest tested amplitude that did not quench.
    pub a_low: f64,
    /// Smallest tested amplitude that quenched; `None` if none did.
    pub a_high: Option<f64>,
    pub status: SearchStatus,
    /// Predicate evaluations, spot checks included.
    pub iterations: usize,
    /// Both spot checks above the bracket quenched.
    pub monotone_verified: bool,
    pub horizon: f64,
    /// Some run touched the window edge.
    pub clipped: bool,
    /// A verdict at or above `a_low` may be an artifact of clipping. Suspect
    /// runs below the bracket do not affect it and are only kept in
    /// `evaluations`.
    #[serde(default)]
    pub suspect: bool,
    pub a_cap: f64,
    pub evaluations: Vec<Evaluation>,
}

impl CriticalAmplitude {
    pub fn midpoint(&self) -> Option<f64> {
        self.a_high.map(|h| 0.5 * (self.a_low + h))
    }

    /// The value used in fits: the bracket midpoint, `0` when the rest
    /// state quenches, `None` when no quench was found.
    pub fn estimate(&self) -> Option<f64> {
        match self.status {
            SearchStatus::QuenchesAtRest => Some(0.0),
            _ => self.midpoint(),
        }
    }
}

/// Brackets `A₀(L)` by doubling from `a_start` and then bisecting.
///
/// If the profile has a plateau at least `ℓ̃` long the cap is tried first,
/// since no quench is expected. Quenching is assumed monotone in `|A|`; the
/// spot checks at `2·A_high` and `4·A_high` test this rather than assume it.
pub fn critical_amplitude(
    half_width: f64,
    setup: &QuenchSetup<'_>,
    opts: &SearchOptions,
) -> Result<CriticalAmplitude> {
    validate_search(setup, opts)?;
    if !(half_width > 0.0) {
        return Err(invalid("L", "must be positive"));
    }
    let mut evals: Vec<Evaluation> = Vec::new();
    let probe = |a: f64, evals: &mut Vec<Evaluation>| -> Result<bool> {
        let e = setup.evaluate(a, half_width)?;
        evals.push(e);
        Ok(e.quenched)
    };
    let finish = |a_low: f64, a_high: Option<f64>, status, monotone, evals: Vec<Evaluation>| {
        CriticalAmplitude {
            half_width,
            a_low,
            a_high,
            status,
            iterations: evals.len(),
            monotone_verified: monotone,
            horizon: setup.horizon,
            clipped: evals.iter().any(|e| e.clipped),
            suspect: evals.iter().any(|e| e.suspect && e.amplitude >= a_low),
            a_cap: opts.a_cap,
            evaluations: evals,
        }
    };

    let rest = setup.evaluate(0.0, half_width)?;
    if rest.quenched {
        return Ok(CriticalAmplitude {
            iterations: 0,
            ..finish(0.0, Some(0.0), SearchStatus::QuenchesAtRest, true, vec![rest])
        });
    }
    evals.push(rest);

    let plateau_limit = critical_plateau_length(setup.reaction, setup.params)
        .map(|c| c.ell)
        .unwrap_or(f64::INFINITY);
    if longest_plateau(setup.profile, 1e-12) >= plateau_limit && !probe(opts.a_cap, &mut evals)? {
        return Ok(finish(opts.a_cap, None, SearchStatus::NoQuenchUpToCap, false, evals));
    }

    let mut lo = 0.0;
    let mut a = opts.a_start.min(opts.a_cap);
    let hi = loop {
        if probe(a, &mut evals)? {
            break a;
        }
        lo = a;
        if a >= opts.a_cap {
            return Ok(finish(lo, None, SearchStatus::NoQuenchUpToCap, false, evals));
        }
        a = (2.0 * a).min(opts.a_cap);
    };
    let mut hi = hi;
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut evals)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let monotone = if opts.spot_check {
        probe(2.0 * hi, &mut evals)? & probe(4.0 * hi, &mut evals)?
    } else {
        false
    };
    Ok(finish(lo, Some(hi), SearchStatus::Bracketed, monotone, evals))
}

fn validate_search(setup: &QuenchSetup<'_>, opts: &SearchOptions) -> Result<()> {
    setup.params.validate()?;
    setup.policy.validate()?;
    if !(setup.horizon > 0.0 && setup.horizon.is_finite()) {
        return Err(invalid("horizon", "must be positive and finite"));
    }
    if !(opts.rel_tol > 0.0 && opts.rel_tol < 1.0) {
        return Err(invalid("rel_tol", "must lie in (0, 1)"));
    }
    if !(opts.a_start > 0.0 && opts.a_cap >= opts.a_start) {
        return Err(invalid("a_cap", "need 0 < a_start ≤ a_cap"));
    }
    Ok(())
}

/// Bracket on the largest quenchable half-width at fixed `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchableSize {
    pub amplitude: f64,
    /// Largest tested `L` that quenched.
    pub l_low: f64,
    /// Smallest tested `L` that did not; `None` if all quenched up to `l_cap`.
    pub l_high: Option<f64>,
    pub horizon: f64,
    pub clipped: bool,
    #[serde(default)]
    pub suspect: bool,
    pub evaluations: Vec<Evaluation>,
}

impl QuenchableSize {
    pub fn midpoint(&self) -> Option<f64> {
        self.l_high.map(|h| 0.5 * (self.l_low + h))
    }
}

/// `L_A` by bracketing from one laminar width and bisecting on `L`.
pub fn max_quenchable_l(
    amplitude: f64,
    setup: &QuenchSetup<'_>,
    rel_tol: f64,
    l_cap: f64,
) -> Result<QuenchableSize> {
    validate_search(
        setup,
        &SearchOptions {
            rel_tol,
            ..Default::default()
        },
    )?;
    let lam = setup.params.laminar();
    let mut evals = Vec::new();
    let probe = |l: f64, evals: &mut Vec<Evaluation>| -> Result<bool> {
        let e = setup.evaluate(amplitude, l)?;
        evals.push(e);
        Ok(e.quenched)
    };
    let (mut lo, mut hi);
    let start = lam;
    if probe(start, &mut evals)? {
        lo = start;
        hi = 2.0 * start;
        loop {
            if hi > l_cap {
                return Ok(QuenchableSize {
                    amplitude,
                    l_low: lo,
                    l_high: None,
                    horizon: setup.horizon,
                    clipped: evals.iter().any(|e| e.clipped),
                    suspect: evals.iter().any(|e| e.suspect && e.half_width >= lo),
                    evaluations: evals,
                });
            }
            if !probe(hi, &mut evals)? {
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = start;
        lo = start / 2.0;
        while !probe(lo, &mut evals)? {
            hi = lo;
            lo /= 2.0;
            if lo < 1e-3 * lam {
                return Err(invalid("L", "no quench even for tiny initial data"));
            }
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut evals)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QuenchableSize {
        amplitude,
        l_low: lo,
        l_high: Some(hi),
        horizon: setup.horizon,
        clipped: evals.iter().any(|e| e.clipped),
        suspect: evals.iter().any(|e| e.suspect && e.half_width >= lo),
        evaluations: evals,
    })
}

/// Linearity report for `A₀(L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongQuenchFit {
    /// Least-squares `C` in `A₀ ≈ C·L`.
    pub c: f64,
    /// Slope of `log A₀` against `log L`.
    pub loglog: LineFit,
    pub max_ratio: f64,
    /// `A₀(L_{i+1})/A₀(L_i)` for consecutive samples sorted by `L`.
    pub adjacent_ratios: Vec<f64>,
}

/// Fits `A₀ = C·L` through the origin. Needs at least four samples spanning
/// a factor 8 in `L`; a sample without an amplitude rejects the fit.
pub fn strong_quench_fit(samples: &[(f64, Option<f64>)]) -> Result<StrongQuenchFit> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: samples.len(),
        });
    }
    let mut pts = Vec::with_capacity(samples.len());
    for &(l, a) in samples {
        match a {
            Some(a) if a > 0.0 && l > 0.0 => pts.push((l, a)),
            Some(_) => return Err(invalid("samples", "L and A₀ must be positive")),
            None => return Err(Error::UndefinedAmplitude { half_width: l }),
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lmin, lmax) = (pts[0].0, pts[pts.len() - 1].0);
    if lmax < 8.0 * lmin {
        return Err(invalid("samples", "L must span at least a factor of 8"));
    }
    let c = pts.iter().map(|(l, a)| l * a).sum::<f64>() / pts.iter().map(|(l, _)| l * l).sum::<f64>();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|(l, a)| (l.ln(), a.ln())).unzip();
    Ok(StrongQuenchFit {
        c,
        loglog: fit_line(&xs, &ys),
        max_ratio: pts.iter().map(|(l, a)| a / l).fold(0.0, f64::max),
        adjacent_ratios: pts.windows(2).map(|w| w[1].1 / w[0].1).collect(),
    })
}

/// Columns `L,A_low,A_high,horizon,quenched_at_cap`.
pub fn write_amplitudes_csv(path: &Path, rows: &[CriticalAmplitude]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["L", "A_low", "A_high", "horizon", "quenched_at_cap"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.half_width),
            format!("{}", r.a_low),
            r.a_high.map_or("inf".into(), |a| format!("{a}")),
            format!("{}", r.horizon),
            format!("{}", u8::from(r.status != SearchStatus::NoQuenchUpToCap)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
