//! Physical constants, ignition-type reaction terms, and initial data.
//!
//! A reaction `f` on `[0, 1]` is of ignition type when
//!
//! * `f(0) = f(1) = 0` and `f` is Lipschitz,
//! * `f ≡ 0` on `[0, θ₀]` and `f ≥ 0` on `(θ₀, 1)`,
//! * `f(T) ≤ T`.
//!
//! [`build_reaction`] enforces these on a dense validation grid;
//! [`validate_reaction`] reports the violation of each clause without failing.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics;

/// Grid size used by [`build_reaction`] for clause checks and the Lipschitz estimate.
pub const VALIDATION_GRID: usize = 10_000;

/// Physical constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Thermal diffusivity κ.
    pub kappa: f64,
    /// Reaction strength M (inverse time).
    #[serde(rename = "M")]
    pub big_m: f64,
    /// Ignition temperature θ₀.
    pub theta0: f64,
    /// Period of the shear profile in y.
    pub h: f64,
}

impl PhysParams {
    pub fn new(kappa: f64, big_m: f64, theta0: f64, h: f64) -> Result<Self> {
        let p = Self {
            kappa,
            big_m,
            theta0,
            h,
        };
        p.validate()?;
        Ok(p)
    }

    /// Nondimensional units: κ = M = 1.
    pub fn unit(theta0: f64, h: f64) -> Result<Self> {
        Self::new(1.0, 1.0, theta0, h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid("kappa", "must be positive and finite"));
        }
        if !(self.big_m > 0.0 && self.big_m.is_finite()) {
            return Err(invalid("M", "must be positive and finite"));
        }
        if !(self.theta0 > 0.0 && self.theta0 < 1.0) {
            return Err(invalid("theta0", "must lie in (0, 1)"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", "must be positive and finite"));
        }
        Ok(())
    }

    /// Laminar front width √(κ/M).
    pub fn laminar(&self) -> f64 {
        (self.kappa / self.big_m).sqrt()
    }
}

/// Named reaction families.
#[derive(Clone)]
pub enum ReactionFamily {
    /// `scale · max(0, T − θ₀) · (1 − T)`.
    QuadraticIgnition { scale: f64 },
    /// `scale · max(0, T − θ₀)² · (1 − T)`.
    CubicIgnition { scale: f64 },
    /// `f ≡ 0`; pure diffusion, used for degenerate checks.
    Zero,
    /// Arbitrary user-supplied function; not checked at construction.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ReactionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::QuadraticIgnition { scale } => write!(f, "QuadraticIgnition({scale})"),
            Self::CubicIgnition { scale } => write!(f, "CubicIgnition({scale})"),
            Self::Zero => write!(f, "Zero"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Ignition-type reaction `f` with cutoff θ₀.
#[derive(Debug, Clone)]
pub struct IgnitionReaction {
    theta0: f64,
    family: ReactionFamily,
    lipschitz_d: f64,
}

/// Serializable reaction descriptor, as embedded in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Default for ReactionSpec {
    fn default() -> Self {
        Self {
            family: "quadratic-ignition".into(),
            params: Vec::new(),
        }
    }
}

/// Model fragment of a run config:
/// `{"kappa":…, "M":…, "theta0":…, "h":…, "reaction":{"family":…, "params":[…]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: PhysParams,
    #[serde(default)]
    pub reaction: ReactionSpec,
}

impl ModelSpec {
    pub fn build(&self) -> Result<(PhysParams, IgnitionReaction)> {
        self.params.validate()?;
        let f = build_reaction(&self.reaction.family, self.params.theta0, &self.reaction.params)?;
        Ok((self.params, f))
    }
}

impl IgnitionReaction {
    /// Wraps an arbitrary function without validating it. Use
    /// [`validate_reaction`] to inspect it, or [`IgnitionReaction::checked`].
    pub fn from_fn<F>(theta0: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut r = Self {
            theta0,
            family: ReactionFamily::Custom(Arc::new(f)),
            lipschitz_d: 0.0,
        };
        r.lipschitz_d = r.estimate_lipschitz(VALIDATION_GRID);
        r
    }

    /// The zero reaction (pure diffusion).
    pub fn zero(theta0: f64) -> Self {
        Self {
            theta0,
            family: ReactionFamily::Zero,
            lipschitz_d: 0.0,
        }
    }

    /// Validates every clause on the standard grid, naming the first one violated.
    pub fn checked(self) -> Result<Self> {
        let report = validate_reaction(&self, VALIDATION_GRID);
        if let Some((clause, violation)) = report.first_violation(1e-12) {
            return Err(Error::ReactionClause { clause, violation });
        }
        Ok(self)
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn family(&self) -> &ReactionFamily {
        &self.family
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_d
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, ReactionFamily::Zero)
    }

    /// Evaluates `f(T)`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.family {
            ReactionFamily::QuadraticIgnition { scale } => {
                let w = t - self.theta0;
                if w <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    scale * w * (1.0 - t)
                }
            }
            ReactionFamily::CubicIgnition { scale } => {
                let w = t - self.theta0;
                if w <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    scale * w * w * (1.0 - t)
                }
            }
            ReactionFamily::Zero => 0.0,
            ReactionFamily::Custom(f) => f(t),
        }
    }

    /// `∫ₐᵇ f`, evaluated in factored form for the built-in families so that
    /// `F(p) − F(ψ)` keeps full relative accuracy as `ψ → p`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let th = self.theta0;
        match &self.family {
            ReactionFamily::Zero => 0.0,
            ReactionFamily::QuadraticIgnition { scale } => {
                let (wa, wb) = ((a.min(1.0) - th).max(0.0), (b.min(1.0) - th).max(0.0));
                let r = 1.0 - th;
                if wa + wb > r {
                    // Measure from T = 1 instead, where f has its other zero.
                    let (za, zb) = (r - wa, r - wb);
                    return scale * (za - zb) * (r * (za + zb) / 2.0 - (za * za + za * zb + zb * zb) / 3.0);
                }
                scale * (wb - wa) * (r * (wa + wb) / 2.0 - (wa * wa + wa * wb + wb * wb) / 3.0)
            }
            ReactionFamily::CubicIgnition { scale } => {
                let (wa, wb) = ((a.min(1.0) - th).max(0.0), (b.min(1.0) - th).max(0.0));
                let r = 1.0 - th;
                if wa + wb > r {
                    let (za, zb) = (r - wa, r - wb);
                    let z2 = za * za + za * zb + zb * zb;
                    return scale
                        * (za - zb)
                        * (r * r * (za + zb) / 2.0 - 2.0 * r * z2 / 3.0 + (za + zb) * (za * za + zb * zb) / 4.0);
                }
                let s2 = wa * wa + wa * wb + wb * wb;
                scale * (wb - wa) * (r * s2 / 3.0 - (wa + wb) * (wa * wa + wb * wb) / 4.0)
            }
            ReactionFamily::Custom(_) => {
                let (v, _) = numerics::integrate(|s| self.eval(s), a, b, 1e-13);
                v
            }
        }
    }

    /// Antiderivative `F(s) = ∫₀ˢ f`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        self.integral(0.0, s)
    }

    fn estimate_lipschitz(&self, n: usize) -> f64 {
        let step = 1.0 / n as f64;
        let mut prev = self.eval(0.0);
        let mut d: f64 = 0.0;
        for i in 1..=n {
            let v = self.eval(i as f64 * step);
            d = d.max((v - prev).abs() / step);
            prev = v;
        }
        d
    }
}

/// Maximum violation of each ignition clause on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionReport {
    pub n_grid: usize,
    /// `max(|f(0)|, |f(1)|)`.
    pub endpoints: f64,
    /// `max |f|` on `[0, θ₀]`.
    pub cutoff: f64,
    /// `max(−f)` on `(θ₀, 1)`.
    pub nonnegative: f64,
    /// `max(f(T) − T)`.
    pub bounded_by_t: f64,
    /// Largest finite-difference slope; finite means Lipschitz on the grid.
    pub lipschitz: f64,
}

impl ReactionReport {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.first_violation(tol).is_none()
    }

    pub fn first_violation(&self, tol: f64) -> Option<(&'static str, f64)> {
        [
            ("f(0)=f(1)=0", self.endpoints),
            ("f=0 on [0,theta0]", self.cutoff),
            ("f>=0 on (theta0,1)", self.nonnegative),
            ("f(T)<=T", self.bounded_by_t),
        ]
        .into_iter()
        .find(|(_, v)| *v > tol || v.is_nan())
        .or_else(|| (!self.lipschitz.is_finite()).then_some(("Lipschitz", f64::INFINITY)))
    }
}

/// Checks every ignition clause on an `n_grid`-point uniform grid.
pub fn validate_reaction(f: &IgnitionReaction, n_grid: usize) -> ReactionReport {
    let n_grid = n_grid.max(2);
    let th = f.theta0;
    let mut report = ReactionReport {
        n_grid,
        endpoints: f.eval(0.0).abs().max(f.eval(1.0).abs()),
        cutoff: 0.0,
        nonnegative: 0.0,
        bounded_by_t: 0.0,
        lipschitz: 0.0,
    };
    let step = 1.0 / (n_grid - 1) as f64;
    // Grid points plus θ₀ itself, so the cutoff clause sees its boundary
    // and constructed counterexamples at θ₀/2 land on the grid for even splits.
    let mut points: Vec<f64> = (0..n_grid).map(|i| i as f64 * step).collect();
    points.push(th);
    points.push(th / 2.0);
    for &t in &points {
        let v = f.eval(t);
        if t <= th {
            report.cutoff = report.cutoff.max(v.abs());
        } else if t < 1.0 {
            report.nonnegative = report.nonnegative.max(-v);
        }
        report.bounded_by_t = report.bounded_by_t.max(v - t);
    }
    report.lipschitz = f.estimate_lipschitz(n_grid - 1);
    report
}

/// Builds a named reaction family and validates it.
///
/// Known families: `quadratic-ignition` (default; optional `params = [scale]`),
/// `cubic-ignition` (optional `[scale]`), and `none` (`f ≡ 0`).
pub fn build_reaction(family: &str, theta0: f64, params: &[f64]) -> Result<IgnitionReaction> {
    if !(theta0 > 0.0 && theta0 < 1.0) {
        return Err(invalid("theta0", "must lie in (0, 1)"));
    }
    let scale = match params {
        [] => 1.0,
        [s] if *s > 0.0 && s.is_finite() => *s,
        [s] => return Err(invalid("params", format!("scale must be positive, got {s}"))),
        _ => return Err(invalid("params", "expected at most one parameter (scale)")),
    };
    let family = match family {
        "quadratic-ignition" => ReactionFamily::QuadraticIgnition { scale },
        "cubic-ignition" => ReactionFamily::CubicIgnition { scale },
        "none" | "zero" => ReactionFamily::Zero,
        other => {
            return Err(Error::Unknown {
                what: "reaction family",
                name: other.to_string(),
            })
        }
    };
    let mut r = IgnitionReaction {
        theta0,
        family,
        lipschitz_d: 0.0,
    };
    r.lipschitz_d = r.estimate_lipschitz(VALIDATION_GRID);
    r.checked()
}

/// Shape of the initial hot region in x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialShape {
    /// `η·χ_[−L, L](x)`.
    Sharp,
    /// `η` on `|x| ≤ L`, linear ramp to zero over `L < |x| < L + width`.
    Ramped { width: f64 },
}

/// Initial temperature `T₀(x, y)`, constant in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    /// Half-width L of the hot region.
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_shape")]
    pub shape: InitialShape,
}

fn default_eta() -> f64 {
    1.0
}

fn default_shape() -> InitialShape {
    InitialShape::Sharp
}

impl InitialData {
    pub fn sharp(half_width: f64) -> Result<Self> {
        Self::new(half_width, 1.0, InitialShape::Sharp)
    }

    pub fn new(half_width: f64, eta: f64, shape: InitialShape) -> Result<Self> {
        let d = Self {
            half_width,
            eta,
            shape,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(invalid("L", "must be positive and finite"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", "must lie in (0, 1]"));
        }
        if let InitialShape::Ramped { width } = self.shape {
            if !(width > 0.0 && width.is_finite()) {
                return Err(invalid("ramp width", "must be positive"));
            }
        }
        Ok(())
    }

    /// Outer edge of the support.
    pub fn support(&self) -> f64 {
        match self.shape {
            InitialShape::Sharp => self.half_width,
            InitialShape::Ramped { width } => self.half_width + width,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= self.half_width {
            return self.eta;
        }
        match self.shape {
            InitialShape::Sharp => 0.0,
            InitialShape::Ramped { width } => {
                let r = (ax - self.half_width) / width;
                if r >= 1.0 {
                    0.0
                } else {
                    self.eta * (1.0 - r)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_f() -> IgnitionReaction {
        build_reaction("quadratic-ignition", 0.25, &[]).unwrap()
    }

    #[test]
    fn quadratic_ignition_values() {
        let f = default_f();
        assert_eq!(f.eval(0.25), 0.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert!((f.eval(0.625) - 0.140625).abs() < 1e-15);
        for i in 0..=10_000 {
            let t = i as f64 / 10_000.0;
            assert!(f.eval(t) <= t);
        }
    }

    #[test]
    fn default_reaction_report_is_clean() {
        let r = validate_reaction(&default_f(), 1001);
        assert_eq!(r.endpoints, 0.0);
        assert_eq!(r.cutoff, 0.0);
        assert_eq!(r.nonnegative, 0.0);
        assert_eq!(r.bounded_by_t, 0.0);
        assert!((r.lipschitz - 0.75).abs() < 1e-2);
    }

    #[test]
    fn report_flags_counterexamples() {
        let doubled = IgnitionReaction::from_fn(0.25, |t| 2.0 * t);
        let r = validate_reaction(&doubled, 1001);
        assert!(r.bounded_by_t > 0.0);
        assert!(doubled.checked().is_err());

        let th = 0.25;
        let bump = IgnitionReaction::from_fn(th, move |t| {
            if (t - th / 2.0).abs() < 1e-12 {
                0.01
            } else {
                0.0
            }
        });
        let r = validate_reaction(&bump, 1001);
        assert!((r.cutoff - 0.01).abs() < 1e-15);
        match bump.checked() {
            Err(Error::ReactionClause { clause, .. }) => assert_eq!(clause, "f=0 on [0,theta0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        assert!(matches!(
            build_reaction("arrhenius", 0.25, &[]),
            Err(Error::Unknown { .. })
        ));
        assert!(build_reaction("quadratic-ignition", 1.5, &[]).is_err());
        // scale 5 breaks f(T) <= T near T = 1/2
        match build_reaction("quadratic-ignition", 0.25, &[5.0]) {
            Err(Error::ReactionClause { clause, .. }) => assert_eq!(clause, "f(T)<=T"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        for f in [
            default_f(),
            build_reaction("cubic-ignition", 0.3, &[2.0]).unwrap(),
        ] {
            let num = IgnitionReaction::from_fn(f.theta0(), {
                let g = f.clone();
                move |t| g.eval(t)
            });
            for &s in &[0.1, 0.3, 0.5, 0.77, 1.0] {
                let a = f.antiderivative(s);
                let b = num.antiderivative(s);
                assert!((a - b).abs() < 1e-12, "{s}: {a} vs {b}");
            }
            assert_eq!(f.antiderivative(f.theta0()), 0.0);
            assert!(f.antiderivative(1.0) > 0.0);
            for &(a, b) in &[(0.2, 0.6), (0.6, 0.99), (0.9, 0.9999), (0.5, 1.0)] {
                let exact = f.integral(a, b);
                let diff = f.antiderivative(b) - f.antiderivative(a);
                assert!((exact - diff).abs() < 1e-12, "[{a}, {b}]");
            }
            // Short intervals next to T = 1 keep their relative accuracy.
            let (a, b) = (1.0 - 2e-6, 1.0 - 1e-6);
            let mid = f.eval(0.5 * (a + b)) * (b - a);
            assert!((f.integral(a, b) / mid - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn params_validation() {
        assert!(PhysParams::new(1.0, 1.0, 0.25, 1.0).is_ok());
        assert!(PhysParams::new(0.0, 1.0, 0.25, 1.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        let p = PhysParams::new(4.0, 1.0, 0.25, 1.0).unwrap();
        assert_eq!(p.laminar(), 2.0);
    }

    #[test]
    fn model_spec_json_round_trip() {
        let json = r#"{"kappa":1.0,"M":2.0,"theta0":0.25,"h":6.0,"reaction":{"family":"quadratic-ignition","params":[]}}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let (p, f) = spec.build().unwrap();
        assert_eq!(p.big_m, 2.0);
        assert_eq!(f.theta0(), 0.25);
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&back).unwrap(), spec);
    }

    #[test]
    fn initial_data_shapes() {
        let d = InitialData::sharp(2.0).unwrap();
        assert_eq!(d.value(1.99), 1.0);
        assert_eq!(d.value(2.01), 0.0);
        let r = InitialData::new(1.0, 0.8, InitialShape::Ramped { width: 0.5 }).unwrap();
        assert!((r.value(1.25) - 0.4).abs() < 1e-15);
        assert_eq!(r.value(1.5), 0.0);
        assert_eq!(r.support(), 1.5);
        assert!(InitialData::new(1.0, 1.2, InitialShape::Sharp).is_err());
    }
}
