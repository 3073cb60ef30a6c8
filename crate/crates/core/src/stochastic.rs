//! Monte Carlo estimators built on Brownian paths.
//!
//! `Ψ` has the representation
//!
//! ```text
//! Ψ(t, x, y) = P( x − (A/2κ) ∫₀^{2κt} u(W_s^y) ds ∈ [−L, L] )
//! ```
//!
//! with `W^y` a standard Brownian motion started at `y`. The other
//! estimators probe the occupation of plateaus, the anti-concentration of
//! `∫u(W)`, the Itô decomposition `∫u(W) = 2(z(W) − z(y)) − 2∫v(W)dW` with
//! `v′ = u`, `z′ = v`, and the central limit of `(1/α)∫₀^{α²} v(W)dW`.
//!
//! Each path draws from its own ChaCha stream keyed by `(seed, path index)`,
//! so estimates do not depend on how paths are batched.

use std::io::Write;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};
use crate::model::PhysParams;
use crate::numerics::integrate;
use crate::profiles::{Plateau, ShearProfile};

/// How Brownian increments are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IncrementScheme {
    /// Gaussian increments of variance `dt`.
    #[default]
    ExactIncrement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEnsembleConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    #[serde(default)]
    pub scheme: IncrementScheme,
}

impl PathEnsembleConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Result<Self> {
        let c = Self {
            n_paths,
            dt,
            seed,
            scheme: IncrementScheme::ExactIncrement,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(invalid("n_paths", "need at least 100 paths"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        Ok(())
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        path_rng(self.seed, path as u64)
    }
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(path);
    r
}

#[inline]
fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

/// Pairwise summation, deterministic for a given order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

impl MCEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = pairwise_sum(samples) / n as f64;
        let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
            seed,
        }
    }

    /// A value known without sampling.
    pub fn exact(value: f64, n: usize, seed: u64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n,
            seed,
        }
    }

    /// Estimates from the first and second half of the samples.
    pub fn halves(samples: &[f64], seed: u64) -> (Self, Self) {
        let (a, b) = samples.split_at(samples.len() / 2);
        (Self::from_samples(a, seed), Self::from_samples(b, seed))
    }

    /// `|self − other| ≤ k·√(se₁² + se₂²)`.
    pub fn agrees_with(&self, other: &Self, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.stderr.hypot(other.stderr)
    }
}

/// Samples of `∫₀^T u(W_s^y) ds` (trapezoid rule on the path).
pub fn time_integrals(horizon: f64, y: f64, p: &ShearProfile, cfg: &PathEnsembleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let n_steps = (horizon / cfg.dt).ceil().max(1.0) as usize;
    let h = horizon / n_steps as f64;
    let sq = h.sqrt();
    let mut out = Vec::with_capacity(cfg.n_paths);
    for path in 0..cfg.n_paths {
        let mut rng = cfg.rng(path);
        let mut w = y;
        let mut prev = p.eval(w);
        let mut acc = 0.0;
        for _ in 0..n_steps {
            w += sq * gauss(&mut rng);
            let cur = p.eval(w);
            acc += prev + cur;
            prev = cur;
        }
        out.push(0.5 * h * acc);
    }
    Ok(out)
}

/// Monte Carlo `Ψ(t, x, y)` for data `χ_[−L, L]`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_psi_mc(
    t: f64,
    x: f64,
    y: f64,
    amplitude: f64,
    half_width: f64,
    p: &ShearProfile,
    params: &PhysParams,
    cfg: &PathEnsembleConfig,
) -> Result<MCEstimate> {
    Ok(estimate_psi_mc_row(t, &[x], y, amplitude, half_width, p, params, cfg)?[0])
}

/// `Ψ(t, x, y)` at several `x` from one path ensemble.
#[allow(clippy::too_many_arguments)]
pub fn estimate_psi_mc_row(
    t: f64,
    xs: &[f64],
    y: f64,
    amplitude: f64,
    half_width: f64,
    p: &ShearProfile,
    params: &PhysParams,
    cfg: &PathEnsembleConfig,
) -> Result<Vec<MCEstimate>> {
    params.validate()?;
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    let inside = |x: f64| if x.abs() <= half_width { 1.0 } else { 0.0 };
    if amplitude == 0.0 || p.max_abs() == 0.0 {
        return Ok(xs
            .iter()
            .map(|&x| MCEstimate::exact(inside(x), cfg.n_paths, cfg.seed))
            .collect());
    }
    let kappa = params.kappa;
    let ints = time_integrals(2.0 * kappa * t, y, p, cfg)?;
    let scale = amplitude / (2.0 * kappa);
    Ok(xs
        .iter()
        .map(|&x| {
            let s: Vec<f64> = ints.iter().map(|i| inside(x - scale * i)).collect();
            MCEstimate::from_samples(&s, cfg.seed)
        })
        .collect())
}

/// `P(W_s^{y₀} ∈ I for all s ≤ t)`, with each step weighted by the
/// probability that the Brownian bridge between the two samples stays in `I`.
pub fn estimate_plateau_occupancy(
    y0: f64,
    lo: f64,
    hi: f64,
    t: f64,
    cfg: &PathEnsembleConfig,
) -> Result<MCEstimate> {
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(invalid("t", "must be positive"));
    }
    if !(hi > lo) {
        return Err(invalid("plateau", "empty interval"));
    }
    if !(y0 > lo && y0 < hi) {
        return Ok(MCEstimate::exact(0.0, cfg.n_paths, cfg.seed));
    }
    let n_steps = (t / cfg.dt).ceil().max(1.0) as usize;
    let h = t / n_steps as f64;
    let sq = h.sqrt();
    let mut out = Vec::with_capacity(cfg.n_paths);
    for path in 0..cfg.n_paths {
        let mut rng = cfg.rng(path);
        let mut w = y0;
        let mut weight = 1.0;
        for _ in 0..n_steps {
            let nw = w + sq * gauss(&mut rng);
            if nw <= lo || nw >= hi {
                weight = 0.0;
                break;
            }
            let stay_lo = 1.0 - (-2.0 * (w - lo) * (nw - lo) / h).exp();
            let stay_hi = 1.0 - (-2.0 * (hi - w) * (hi - nw) / h).exp();
            weight *= stay_lo * stay_hi;
            w = nw;
        }
        out.push(weight);
    }
    Ok(MCEstimate::from_samples(&out, cfg.seed))
}

/// Plateau of `p` containing `y`, as an absolute interval.
pub fn plateau_containing(p: &ShearProfile, y: f64) -> Option<(f64, f64)> {
    let h = p.period();
    p.plateaus().into_iter().find_map(|Plateau { start, length }| {
        let k = ((y - start) / h).floor();
        let a = start + k * h;
        (y >= a && y <= a + length).then_some((a, a + length))
    })
}

/// `P(∫₀ᵗ u(W^y) ∈ [a, a + ε])` and, separately, the probability of never
/// leaving the plateau through `y` (zero when `y` is on no plateau).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiConcentration {
    pub t: f64,
    pub y: f64,
    pub a: f64,
    pub eps: f64,
    pub estimate: MCEstimate,
    pub plateau_occupancy: MCEstimate,
}

pub fn estimate_anticoncentration(
    t: f64,
    y: f64,
    a: f64,
    eps: f64,
    p: &ShearProfile,
    cfg: &PathEnsembleConfig,
) -> Result<AntiConcentration> {
    if !(eps >= 0.0) {
        return Err(invalid("eps", "must be non-negative"));
    }
    let ints = time_integrals(t, y, p, cfg)?;
    let occ = match plateau_containing(p, y) {
        Some((lo, hi)) if hi - lo >= p.period() => MCEstimate::exact(1.0, cfg.n_paths, cfg.seed),
        Some((lo, hi)) => estimate_plateau_occupancy(y, lo, hi, t, cfg)?,
        None => MCEstimate::exact(0.0, cfg.n_paths, cfg.seed),
    };
    Ok(AntiConcentration {
        t,
        y,
        a,
        eps,
        estimate: window_estimate(&ints, a, eps, cfg.seed),
        plateau_occupancy: occ,
    })
}

fn window_estimate(ints: &[f64], a: f64, eps: f64, seed: u64) -> MCEstimate {
    let s: Vec<f64> = ints
        .iter()
        .map(|&i| if i >= a && i <= a + eps { 1.0 } else { 0.0 })
        .collect();
    MCEstimate::from_samples(&s, seed)
}

/// Supremum of the anti-concentration estimate over a `(y, a)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    pub sup: f64,
    pub stderr_at_sup: f64,
    pub y_at_sup: f64,
    pub a_at_sup: f64,
}

/// For each `ε`, the largest estimate over the grid. One ensemble per `y` is
/// shared by all `a` and `ε`, so the sup is exactly monotone in `ε`.
pub fn anticoncentration_sweep(
    t: f64,
    ys: &[f64],
    a_values: &[f64],
    eps_values: &[f64],
    p: &ShearProfile,
    cfg: &PathEnsembleConfig,
) -> Result<Vec<SweepPoint>> {
    let mut best: Vec<SweepPoint> = eps_values
        .iter()
        .map(|&eps| SweepPoint {
            eps,
            sup: -1.0,
            stderr_at_sup: 0.0,
            y_at_sup: f64::NAN,
            a_at_sup: f64::NAN,
        })
        .collect();
    for &y in ys {
        let ints = time_integrals(t, y, p, cfg)?;
        for &a in a_values {
            for b in best.iter_mut() {
                let e = window_estimate(&ints, a, b.eps, cfg.seed);
                if e.mean > b.sup {
                    *b = SweepPoint {
                        eps: b.eps,
                        sup: e.mean,
                        stderr_at_sup: e.stderr,
                        y_at_sup: y,
                        a_at_sup: a,
                    };
                }
            }
        }
    }
    Ok(best)
}

/// `v′ = u` with `∫v = 0`, `z′ = v` with `z(0) = 0`, tabulated on one period.
#[derive(Debug, Clone)]
pub struct Antiderivatives {
    pub h: f64,
    pub dy: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    /// `max |z|`.
    pub c: f64,
    /// `(1/h)∫₀ʰ v²`.
    pub sigma2: f64,
    /// `|v(h) − v(0)|` and `|z(h) − z(0)|` before wrapping.
    pub periodicity_defect: (f64, f64),
}

/// Table size per period.
pub const ANTIDERIVATIVE_SAMPLES: usize = 4096;

pub fn build_antiderivatives(p: &ShearProfile) -> Result<Antiderivatives> {
    let scale = p.max_abs().max(1.0);
    if p.mean().abs() > 1e-9 * scale {
        return Err(invalid("profile", format!("mean {} is not zero", p.mean())));
    }
    let h = p.period();
    let n = ANTIDERIVATIVE_SAMPLES;
    let dy = h / n as f64;
    let y = |i: usize| i as f64 * dy;
    let u: Vec<f64> = (0..n).map(|i| p.eval(y(i))).collect();
    let tol = 1e-15 * scale * dy;
    // Per cell: ∫u and ∫(y₁ − s)u(s)ds, the latter being ∫v − v(y₀)·dy.
    let mut cell_u = Vec::with_capacity(n);
    let mut cell_m = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (y(i), y(i + 1));
        cell_u.push(integrate(|s| p.eval(s), a, b, tol).0);
        cell_m.push(integrate(|s| (b - s) * p.eval(s), a, b, tol * dy).0);
    }
    let mut v = vec![0.0; n + 1];
    for i in 0..n {
        v[i + 1] = v[i] + cell_u[i];
    }
    let v_defect = (v[n] - v[0]).abs();
    let total: f64 = (0..n).map(|i| v[i] * dy + cell_m[i]).sum();
    let mean = total / h;
    for x in v.iter_mut() {
        *x -= mean;
    }
    let mut z = vec![0.0; n + 1];
    for i in 0..n {
        z[i + 1] = z[i] + v[i] * dy + cell_m[i];
    }
    let z_defect = (z[n] - z[0]).abs();
    v.truncate(n);
    z.truncate(n);
    let c = z.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sigma2 = v.iter().map(|x| x * x).sum::<f64>() / n as f64;
    Ok(Antiderivatives {
        h,
        dy,
        u,
        v,
        z,
        c,
        sigma2,
        periodicity_defect: (v_defect, z_defect),
    })
}

impl Antiderivatives {
    /// Cubic Hermite interpolation of `f` with derivative table `df`.
    fn hermite(&self, f: &[f64], df: &[f64], y: f64) -> f64 {
        let n = f.len();
        let s = y.rem_euclid(self.h) / self.dy;
        let i = (s as usize).min(n - 1);
        let j = (i + 1) % n;
        let t = s - i as f64;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * f[i]
            + (t3 - 2.0 * t2 + t) * self.dy * df[i]
            + (-2.0 * t3 + 3.0 * t2) * f[j]
            + (t3 - t2) * self.dy * df[j]
    }

    pub fn v_at(&self, y: f64) -> f64 {
        self.hermite(&self.v, &self.u, y)
    }

    pub fn z_at(&self, y: f64) -> f64 {
        self.hermite(&self.z, &self.v, y)
    }

    pub fn max_abs_v(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// A sampled Brownian path `W_{k·dt}`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub points: Vec<f64>,
}

impl BrownianPath {
    /// Path `index` of the ensemble keyed by `seed`.
    pub fn sample(y0: f64, horizon: f64, dt: f64, seed: u64, index: u64) -> Result<Self> {
        if !(horizon > 0.0 && dt > 0.0) {
            return Err(invalid("dt", "horizon and step must be positive"));
        }
        let n = (horizon / dt).round().max(1.0) as usize;
        let h = horizon / n as f64;
        let sq = h.sqrt();
        let mut rng = path_rng(seed, index);
        let mut points = Vec::with_capacity(n + 1);
        let mut w = y0;
        points.push(w);
        for _ in 0..n {
            w += sq * gauss(&mut rng);
            points.push(w);
        }
        Ok(Self { dt: h, points })
    }

    /// Every `factor`-th point of the same path.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        let n = self.points.len() - 1;
        if factor == 0 || n % factor != 0 {
            return Err(invalid("factor", "must divide the number of steps"));
        }
        Ok(Self {
            dt: self.dt * factor as f64,
            points: self.points.iter().step_by(factor).copied().collect(),
        })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.points.len() - 1) as f64
    }
}

/// `(1/α)∫₀^{α²} u(W)ds − [(2/α)(z(W_{α²}) − z(y)) − (2/α)∫₀^{α²} v(W)dW]`
/// with left-point sums for both integrals.
pub fn ito_residual(alpha: f64, path: &BrownianPath, antider: &Antiderivatives, p: &ShearProfile) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let horizon = alpha * alpha;
    if (path.horizon() - horizon).abs() > 1e-9 * horizon {
        return Err(invalid("path", format!("horizon {} is not α² = {horizon}", path.horizon())));
    }
    let pts = &path.points;
    let mut riemann = 0.0;
    let mut ito = 0.0;
    for k in 0..pts.len() - 1 {
        riemann += p.eval(pts[k]) * path.dt;
        ito += antider.v_at(pts[k]) * (pts[k + 1] - pts[k]);
    }
    let y = pts[0];
    let end = pts[pts.len() - 1];
    let lhs = riemann / alpha;
    let rhs = 2.0 / alpha * (antider.z_at(end) - antider.z_at(y)) - 2.0 / alpha * ito;
    Ok(lhs - rhs)
}

/// RMS of [`ito_residual`] over `n_paths` paths at the given steps. Coarser
/// levels reuse the finest path, so the levels differ only in the step.
pub fn ito_refinement_study(
    y: f64,
    alpha: f64,
    p: &ShearProfile,
    cfg: &PathEnsembleConfig,
    levels: usize,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    let antider = build_antiderivatives(p)?;
    let finest = cfg.dt / (1usize << (levels - 1)) as f64;
    let mut sums = vec![0.0; levels];
    for path in 0..cfg.n_paths {
        let fine = BrownianPath::sample(y, alpha * alpha, finest, cfg.seed, path as u64)?;
        for (lvl, s) in sums.iter_mut().enumerate() {
            let factor = 1usize << (levels - 1 - lvl);
            let pth = fine.coarsened(factor)?;
            let r = ito_residual(alpha, &pth, &antider, p)?;
            *s += r * r;
        }
    }
    Ok(sums
        .iter()
        .enumerate()
        .map(|(lvl, s)| (cfg.dt / (1usize << lvl) as f64, (s / cfg.n_paths as f64).sqrt()))
        .collect())
}

/// Smallest `α` accepted by [`martingale_clt_sample`].
pub const ALPHA_MIN: f64 = 8.0;

/// Samples of `M = (1/α)∫₀^{α²} v(W^y)dW` and their distance to `N(0, σ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub y: f64,
    pub alpha: f64,
    pub n: usize,
    /// Step on the normalized horizon; the Brownian step is `dt·α²`.
    pub dt: f64,
    pub seed: u64,
    /// `(1/h)∫v²`.
    pub sigma2: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    /// Kolmogorov–Smirnov distance to `N(0, σ²)`; `None` when `σ² = 0`.
    pub ks_distance: Option<f64>,
    /// `1.63/√n`.
    pub ks_critical_1pct: f64,
    pub degenerate: bool,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

pub fn martingale_clt_sample(y: f64, alpha: f64, p: &ShearProfile, cfg: &PathEnsembleConfig) -> Result<CltReport> {
    cfg.validate()?;
    if !(alpha >= ALPHA_MIN) {
        return Err(invalid("alpha", format!("must be at least {ALPHA_MIN}")));
    }
    let antider = build_antiderivatives(p)?;
    let n_steps = (1.0 / cfg.dt).ceil() as usize;
    let h = alpha * alpha / n_steps as f64;
    let sq = h.sqrt();
    let mut samples = Vec::with_capacity(cfg.n_paths);
    for path in 0..cfg.n_paths {
        let mut rng = cfg.rng(path);
        let mut w = y;
        let mut m = 0.0;
        for _ in 0..n_steps {
            let dw = sq * gauss(&mut rng);
            m += antider.v_at(w) * dw;
            w += dw;
        }
        samples.push(m / alpha);
    }
    let est = MCEstimate::from_samples(&samples, cfg.seed);
    let n = samples.len();
    let sample_variance = est.stderr * est.stderr * n as f64;
    let degenerate = antider.sigma2 == 0.0;
    let ks = if degenerate {
        None
    } else {
        Some(ks_distance_normal(&samples, antider.sigma2.sqrt()))
    };
    Ok(CltReport {
        y,
        alpha,
        n,
        dt: cfg.dt,
        seed: cfg.seed,
        sigma2: antider.sigma2,
        sample_mean: est.mean,
        sample_variance,
        ks_distance: ks,
        ks_critical_1pct: 1.63 / (n as f64).sqrt(),
        degenerate,
        samples,
    })
}

/// `sup |F_n − Φ_σ|`.
pub fn ks_distance_normal(samples: &[f64], sigma: f64) -> f64 {
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// One line of estimator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub op: String,
    pub inputs: serde_json::Value,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
    pub dt: f64,
}

impl McRecord {
    pub fn new(op: &str, inputs: serde_json::Value, est: &MCEstimate, dt: f64) -> Self {
        Self {
            op: op.into(),
            inputs,
            mean: est.mean,
            stderr: est.stderr,
            n: est.n,
            seed: est.seed,
            dt,
        }
    }
}

/// Writes records as JSON lines.
pub fn write_records(path: &Path, records: &[McRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

/// Single-column CSV with header `value`.
pub fn write_samples_csv(path: &Path, samples: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value"])?;
    for s in samples {
        w.write_record([format!("{s}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(n: usize, dt: f64) -> PathEnsembleConfig {
        PathEnsembleConfig::new(n, dt, 7).unwrap()
    }

    fn sine() -> ShearProfile {
        ShearProfile::sine(2.0 * PI, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(PathEnsembleConfig::new(99, 0.1, 0).is_err());
        assert!(PathEnsembleConfig::new(100, 0.0, 0).is_err());
    }

    #[test]
    fn psi_without_flow_is_the_indicator() {
        let params = PhysParams::unit(0.25, 2.0 * PI).unwrap();
        let zero = ShearProfile::constant(0.0, 2.0 * PI).unwrap();
        for (p, a) in [(&zero, 5.0), (&sine(), 0.0)] {
            for &(x, want) in &[(0.5, 1.0), (1.5, 0.0)] {
                let e = estimate_psi_mc(1.0, x, 0.3, a, 1.0, p, &params, &cfg(100, 0.1)).unwrap();
                assert_eq!(e.mean, want);
                assert_eq!(e.stderr, 0.0);
            }
        }
    }

    #[test]
    fn estimates_are_reproducible_and_in_range() {
        let params = PhysParams::unit(0.25, 2.0 * PI).unwrap();
        let c = cfg(500, 0.01);
        let a = estimate_psi_mc(1.0, 0.5, 0.3, 3.0, 1.0, &sine(), &params, &c).unwrap();
        let b = estimate_psi_mc(1.0, 0.5, 0.3, 3.0, 1.0, &sine(), &params, &c).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.mean));
    }

    #[test]
    fn stderr_matches_half_ensembles() {
        let ints = time_integrals(1.0, 0.4, &sine(), &cfg(4000, 0.01)).unwrap();
        let (a, b) = MCEstimate::halves(&ints, 7);
        assert!(a.agrees_with(&b, 3.0));
    }

    #[test]
    fn occupancy_edge_cases() {
        let c = cfg(1000, 1e-3);
        assert_eq!(estimate_plateau_occupancy(2.0, -0.5, 0.5, 1.0, &c).unwrap().mean, 0.0);
        let tiny = estimate_plateau_occupancy(0.0, -0.5, 0.5, 1e-6, &c).unwrap();
        assert!(tiny.mean >= 0.999);
    }

    #[test]
    fn occupancy_matches_eigenfunction_series() {
        let series: f64 = (0..50)
            .map(|n| {
                let k = (2 * n + 1) as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * 4.0 / (k * PI) * (-k * k * PI * PI / 2.0).exp()
            })
            .sum();
        let e = estimate_plateau_occupancy(0.0, -0.5, 0.5, 1.0, &cfg(20_000, 1e-3)).unwrap();
        assert!((e.mean - series).abs() <= 3.0 * e.stderr, "{e:?} vs {series}");
    }

    #[test]
    fn constant_flow_integral_is_deterministic() {
        let p = ShearProfile::constant(0.5, 1.0).unwrap();
        let c = cfg(200, 0.01);
        let hit = estimate_anticoncentration(2.0, 0.3, 0.9, 0.2, &p, &c).unwrap();
        assert_eq!(hit.estimate.mean, 1.0);
        let miss = estimate_anticoncentration(2.0, 0.3, 1.1, 0.2, &p, &c).unwrap();
        assert_eq!(miss.estimate.mean, 0.0);
        assert!(hit.plateau_occupancy.mean > 0.999);
    }

    #[test]
    fn antiderivatives_of_sine() {
        let a = build_antiderivatives(&sine()).unwrap();
        for i in (0..ANTIDERIVATIVE_SAMPLES).step_by(97) {
            let y = i as f64 * a.dy;
            assert!((a.v[i] + y.cos()).abs() < 1e-8);
            assert!((a.z[i] + y.sin()).abs() < 1e-8);
        }
        assert!((a.c - 1.0).abs() < 1e-8);
        assert!((a.sigma2 - 0.5).abs() < 1e-10);
        assert!((a.v_at(1.2345) + 1.2345f64.cos()).abs() < 1e-10);
        assert!((a.z_at(-7.0) + (-7.0f64).sin()).abs() < 1e-10);
        assert!(a.periodicity_defect.0 < 1e-10 && a.periodicity_defect.1 < 1e-10);
    }

    #[test]
    fn antiderivatives_of_zero_and_sampled() {
        let a = build_antiderivatives(&ShearProfile::constant(0.0, 3.0).unwrap()).unwrap();
        assert!(a.v.iter().chain(&a.z).all(|x| *x == 0.0));
        let samples: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let p = crate::profiles::normalize_mean_zero(
            &ShearProfile::sampled(samples, 5.0, crate::profiles::Smoothness::C1).unwrap(),
        );
        let a = build_antiderivatives(&p).unwrap();
        let scale = a.max_abs_v().max(a.c);
        assert!(a.periodicity_defect.0 <= 1e-10 * scale.max(1.0));
        assert!(a.periodicity_defect.1 <= 1e-10 * scale.max(1.0));
        assert!(a.v.iter().sum::<f64>().abs() / a.v.len() as f64 <= 1e-6 * scale);
    }

    #[test]
    fn ito_residual_vanishes_without_flow() {
        let p = ShearProfile::constant(0.0, 2.0 * PI).unwrap();
        let a = build_antiderivatives(&p).unwrap();
        let path = BrownianPath::sample(0.3, 4.0, 1e-3, 1, 0).unwrap();
        assert_eq!(ito_residual(2.0, &path, &a, &p).unwrap(), 0.0);
    }

    #[test]
    fn ito_residual_small_on_fine_path() {
        let p = sine();
        let a = build_antiderivatives(&p).unwrap();
        let path = BrownianPath::sample(0.3, 4.0, 1e-5, 3, 0).unwrap();
        let r = ito_residual(2.0, &path, &a, &p).unwrap();
        assert!(r.abs() <= 1e-2 * a.max_abs_v(), "{r}");
    }

    #[test]
    fn ks_distance_of_exact_quantiles_is_small() {
        let normal = Normal::new(0.0, 2.0).unwrap();
        let s: Vec<f64> = (0..1000).map(|i| normal.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        assert!(ks_distance_normal(&s, 2.0) <= 0.5 / 1000.0 + 1e-9);
    }

    #[test]
    fn clt_rejects_small_alpha_and_reports_degenerate() {
        assert!(martingale_clt_sample(0.0, 4.0, &sine(), &cfg(100, 0.01)).is_err());
        let zero = ShearProfile::constant(0.0, 2.0 * PI).unwrap();
        let r = martingale_clt_sample(0.0, 8.0, &zero, &cfg(100, 0.01)).unwrap();
        assert!(r.degenerate && r.ks_distance.is_none());
        assert!(r.samples.iter().all(|x| *x == 0.0));
    }
}
