//! Periodic shear profiles `u(y)`: construction, mean removal, rescaling
//! `y ↦ u(αy)`, and plateau detection.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance on `|∫u|` after [`normalize_mean_zero`].
pub const MEAN_TOL: f64 = 1e-12;

/// Claimed smoothness class of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    C0,
    C1,
    /// Smooth enough for every experiment here (`C^{n+1}` for all n used).
    Smooth,
}

/// A maximal interval of constancy `[start, start + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub start: f64,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PieceShape {
    /// `amp·sin(phase0 + (s − start))`
    Sine { amp: f64, phase0: f64 },
    Const(f64),
    /// Cubic Hermite from `(p0, m0)` to `(p1, m1)` (slopes per unit length).
    Hermite { p0: f64, m0: f64, p1: f64, m1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    start: f64,
    len: f64,
    shape: PieceShape,
}

impl Piece {
    fn eval(&self, s: f64) -> f64 {
        let r = s - self.start;
        match self.shape {
            PieceShape::Sine { amp, phase0 } => amp * (phase0 + r).sin(),
            PieceShape::Const(c) => c,
            PieceShape::Hermite { p0, m0, p1, m1 } => {
                let t = r / self.len;
                let (t2, t3) = (t * t, t * t * t);
                (2.0 * t3 - 3.0 * t2 + 1.0) * p0
                    + (t3 - 2.0 * t2 + t) * self.len * m0
                    + (-2.0 * t3 + 3.0 * t2) * p1
                    + (t3 - t2) * self.len * m1
            }
        }
    }

    fn slope(&self, s: f64) -> f64 {
        let r = s - self.start;
        match self.shape {
            PieceShape::Sine { amp, phase0 } => amp * (phase0 + r).cos(),
            PieceShape::Const(_) => 0.0,
            PieceShape::Hermite { p0, m0, p1, m1 } => {
                let t = r / self.len;
                let t2 = t * t;
                ((6.0 * t2 - 6.0 * t) * p0 + (-6.0 * t2 + 6.0 * t) * p1) / self.len
                    + (3.0 * t2 - 4.0 * t + 1.0) * m0
                    + (3.0 * t2 - 2.0 * t) * m1
            }
        }
    }

    fn integral(&self) -> f64 {
        match self.shape {
            PieceShape::Sine { amp, phase0 } => amp * (phase0.cos() - (phase0 + self.len).cos()),
            PieceShape::Const(c) => c * self.len,
            PieceShape::Hermite { p0, m0, p1, m1 } => {
                self.len * (p0 + p1) / 2.0 + self.len * self.len * (m0 - m1) / 12.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Pieces(Vec<Piece>),
    /// Uniform samples over one period, periodic Catmull–Rom in between.
    Sampled(Vec<f64>),
}

/// Profile family tag, for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Sine,
    Constant,
    SineWithPlateau,
    Sawtooth,
    Sampled,
}

/// Periodic shear profile. Evaluates `u(y) = base(α·y mod h₀) − shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    kind: ProfileKind,
    base: Base,
    base_period: f64,
    alpha: f64,
    shift: f64,
    smoothness: Smoothness,
    /// Plateaus of the base profile, in base coordinates.
    base_plateaus: Vec<Plateau>,
}

impl ShearProfile {
    /// `u(y) = amp·sin(2πy/h)`.
    pub fn sine(h: f64, amp: f64) -> Result<Self> {
        check_period(h)?;
        // Represent as a sine in phase units over [0, 2π), then stretch.
        Ok(Self {
            kind: ProfileKind::Sine,
            base: Base::Pieces(vec![Piece {
                start: 0.0,
                len: TAU,
                shape: PieceShape::Sine { amp, phase0: 0.0 },
            }]),
            base_period: TAU,
            alpha: TAU / h,
            shift: 0.0,
            smoothness: Smoothness::Smooth,
            base_plateaus: Vec::new(),
        })
    }

    pub fn constant(value: f64, h: f64) -> Result<Self> {
        check_period(h)?;
        Ok(Self {
            kind: ProfileKind::Constant,
            base: Base::Pieces(vec![Piece {
                start: 0.0,
                len: h,
                shape: PieceShape::Const(value),
            }]),
            base_period: h,
            alpha: 1.0,
            shift: 0.0,
            smoothness: Smoothness::Smooth,
            base_plateaus: vec![Plateau {
                start: 0.0,
                length: h,
            }],
        })
    }

    /// `sin y` with a constant segment of length `plateau` spliced in at sine
    /// phase `position`; period `2π + plateau`. Away from an extremum the
    /// junctions are cubic Hermite blends of width `blend` (default `h/50`).
    pub fn sine_with_plateau(plateau: f64, position: f64, blend: Option<f64>) -> Result<Self> {
        if !(plateau > 0.0 && plateau.is_finite()) {
            return Err(invalid("plateau.length", "must be positive"));
        }
        let h0 = TAU + plateau;
        let at_extremum = position.cos().abs() < 1e-12;
        let w = if at_extremum {
            0.0
        } else {
            blend.unwrap_or(h0 / 50.0)
        };
        if !(position - w > 0.0 && position + w < TAU) {
            return Err(invalid(
                "plateau.position",
                format!("phase must lie in ({w}, 2π − {w})"),
            ));
        }
        let c = position.sin();
        let mut pieces = vec![Piece {
            start: 0.0,
            len: position - w,
            shape: PieceShape::Sine {
                amp: 1.0,
                phase0: 0.0,
            },
        }];
        if w > 0.0 {
            pieces.push(Piece {
                start: position - w,
                len: w,
                shape: PieceShape::Hermite {
                    p0: (position - w).sin(),
                    m0: (position - w).cos(),
                    p1: c,
                    m1: 0.0,
                },
            });
        }
        pieces.push(Piece {
            start: position,
            len: plateau,
            shape: PieceShape::Const(c),
        });
        if w > 0.0 {
            pieces.push(Piece {
                start: position + plateau,
                len: w,
                shape: PieceShape::Hermite {
                    p0: c,
                    m0: 0.0,
                    p1: (position + w).sin(),
                    m1: (position + w).cos(),
                },
            });
        }
        pieces.push(Piece {
            start: position + plateau + w,
            len: TAU - position - w,
            shape: PieceShape::Sine {
                amp: 1.0,
                phase0: position + w,
            },
        });
        Ok(Self {
            kind: ProfileKind::SineWithPlateau,
            base: Base::Pieces(pieces),
            base_period: h0,
            alpha: 1.0,
            shift: 0.0,
            smoothness: Smoothness::C1,
            base_plateaus: vec![Plateau {
                start: position,
                length: plateau,
            }],
        })
    }

    /// C¹ sawtooth on period `h`: linear rise from −1 to 1 over `(1 − s)·h`,
    /// cubic fall back over `s·h`.
    pub fn sawtooth(h: f64, s: f64) -> Result<Self> {
        check_period(h)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("smoothing", "must lie in (0, 1)"));
        }
        let rise = (1.0 - s) * h;
        let m = 2.0 / rise;
        Ok(Self {
            kind: ProfileKind::Sawtooth,
            base: Base::Pieces(vec![
                Piece {
                    start: 0.0,
                    len: rise,
                    shape: PieceShape::Hermite {
                        p0: -1.0,
                        m0: m,
                        p1: 1.0,
                        m1: m,
                    },
                },
                Piece {
                    start: rise,
                    len: s * h,
                    shape: PieceShape::Hermite {
                        p0: 1.0,
                        m0: m,
                        p1: -1.0,
                        m1: m,
                    },
                },
            ]),
            base_period: h,
            alpha: 1.0,
            shift: 0.0,
            smoothness: Smoothness::C1,
            base_plateaus: Vec::new(),
        })
    }

    /// Profile given by uniform samples `u(j·h/n)`, `j = 0..n`.
    pub fn sampled(samples: Vec<f64>, h: f64, smoothness: Smoothness) -> Result<Self> {
        check_period(h)?;
        if samples.len() < 4 {
            return Err(Error::TooFewSamples {
                needed: 4,
                got: samples.len(),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(invalid("samples", "must be finite"));
        }
        let tol = default_plateau_tol(&samples);
        let base_plateaus = detect_plateaus(&samples, h, tol);
        Ok(Self {
            kind: ProfileKind::Sampled,
            base: Base::Sampled(samples),
            base_period: h,
            alpha: 1.0,
            shift: 0.0,
            smoothness,
            base_plateaus,
        })
    }

    /// Reads a two-column `(y, u)` CSV on a uniform grid. A trailing row at
    /// `y = h` duplicating `y = 0` is dropped.
    pub fn from_csv(path: &Path, smoothness: Smoothness) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut ys = Vec::new();
        let mut us = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parsed: Option<(f64, f64)> = match (rec.get(0), rec.get(1)) {
                (Some(a), Some(b)) => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            match parsed {
                Some((y, u)) => {
                    ys.push(y);
                    us.push(u);
                }
                None if i == 0 => continue,
                None => return Err(invalid("csv", format!("bad row {}", i + 1))),
            }
        }
        if ys.len() < 5 {
            return Err(Error::TooFewSamples {
                needed: 5,
                got: ys.len(),
            });
        }
        let dy = ys[1] - ys[0];
        for w in ys.windows(2) {
            if ((w[1] - w[0]) - dy).abs() > 1e-6 * dy.abs().max(1e-300) {
                return Err(invalid("csv", "y grid must be uniform"));
            }
        }
        let n = ys.len();
        let endpoint = (us[n - 1] - us[0]).abs() <= 1e-12 * us[0].abs().max(1.0);
        let (samples, h) = if endpoint {
            (us[..n - 1].to_vec(), ys[n - 1] - ys[0])
        } else {
            (us, dy * n as f64)
        };
        Self::sampled(samples, h, smoothness)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Period `h`.
    pub fn period(&self) -> f64 {
        self.base_period / self.alpha
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// Constant currently subtracted from the base profile.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Plateaus in physical coordinates, sorted and disjoint.
    pub fn plateaus(&self) -> Vec<Plateau> {
        self.base_plateaus
            .iter()
            .map(|p| Plateau {
                start: p.start / self.alpha,
                length: p.length / self.alpha,
            })
            .collect()
    }

    /// Uniform samples of the base profile, if sampled.
    pub fn samples(&self) -> Option<&[f64]> {
        match &self.base {
            Base::Sampled(s) => Some(s),
            Base::Pieces(_) => None,
        }
    }

    fn base_eval(&self, s: f64) -> f64 {
        match &self.base {
            Base::Pieces(pieces) => find_piece(pieces, s).eval(s),
            Base::Sampled(samples) => catmull_rom(samples, self.base_period, s).0,
        }
    }

    fn base_slope(&self, s: f64) -> f64 {
        match &self.base {
            Base::Pieces(pieces) => find_piece(pieces, s).slope(s),
            Base::Sampled(samples) => catmull_rom(samples, self.base_period, s).1,
        }
    }

    #[inline]
    fn to_base(&self, y: f64) -> f64 {
        (self.alpha * y).rem_euclid(self.base_period)
    }

    /// `u(y)`.
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        self.base_eval(self.to_base(y)) - self.shift
    }

    /// `u′(y)`.
    pub fn derivative(&self, y: f64) -> f64 {
        self.alpha * self.base_slope(self.to_base(y))
    }

    /// Mean `(1/h)∫₀ʰ u`, exact for closed forms; for samples it is the
    /// integral of the Catmull–Rom interpolant, which equals the sample mean.
    pub fn mean(&self) -> f64 {
        self.base_mean() - self.shift
    }

    fn base_mean(&self) -> f64 {
        match &self.base {
            Base::Pieces(pieces) => {
                pieces.iter().map(Piece::integral).sum::<f64>() / self.base_period
            }
            Base::Sampled(s) => s.iter().sum::<f64>() / s.len() as f64,
        }
    }

    /// `max |u|` over a fine sampling of one period.
    pub fn max_abs(&self) -> f64 {
        self.sample_extremes(4096).0
    }

    /// `max |u′|` over a fine sampling of one period.
    pub fn max_abs_slope(&self) -> f64 {
        self.sample_extremes(4096).1
    }

    /// `(max u, min u)` over a fine sampling of one period.
    pub fn range(&self) -> (f64, f64) {
        let h = self.period();
        let n = 4096;
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for i in 0..n {
            let v = self.eval(h * i as f64 / n as f64);
            hi = hi.max(v);
            lo = lo.min(v);
        }
        for p in self.plateaus() {
            let v = self.eval(p.start + 0.5 * p.length);
            hi = hi.max(v);
            lo = lo.min(v);
        }
        (hi, lo)
    }

    fn sample_extremes(&self, n: usize) -> (f64, f64) {
        let h = self.period();
        (0..n).fold((0.0f64, 0.0f64), |(a, b), i| {
            let y = h * i as f64 / n as f64;
            (a.max(self.eval(y).abs()), b.max(self.derivative(y).abs()))
        })
    }
}

fn check_period(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(invalid("h", "must be positive and finite"))
    }
}

fn find_piece(pieces: &[Piece], s: f64) -> &Piece {
    let idx = pieces.partition_point(|p| p.start <= s);
    &pieces[idx.saturating_sub(1)]
}

/// Periodic Catmull–Rom interpolation; returns `(value, slope)`.
fn catmull_rom(samples: &[f64], h: f64, s: f64) -> (f64, f64) {
    let n = samples.len();
    let dy = h / n as f64;
    let pos = s / dy;
    let i = pos.floor() as isize;
    let t = pos - i as f64;
    let at = |k: isize| samples[k.rem_euclid(n as isize) as usize];
    let (p0, p1) = (at(i), at(i + 1));
    let m0 = (at(i + 1) - at(i - 1)) / 2.0;
    let m1 = (at(i + 2) - at(i)) / 2.0;
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * m1;
    let d = (6.0 * t2 - 6.0 * t) * p0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * p1
        + (3.0 * t2 - 2.0 * t) * m1;
    (v, d / dy)
}

fn default_plateau_tol(samples: &[f64]) -> f64 {
    1e-9 * samples.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
}

/// Maximal runs of at least three consecutive samples whose spread is at
/// most `tol`, scanned greedily around the circle. Each sample stands for
/// one cell of width `h/n`.
pub fn detect_plateaus(samples: &[f64], h: f64, tol: f64) -> Vec<Plateau> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let dy = h / n as f64;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo <= tol {
        return vec![Plateau {
            start: 0.0,
            length: h,
        }];
    }
    // Start right after a break so that no run wraps across the origin.
    let start = (0..n)
        .find(|&i| (samples[i] - samples[(i + n - 1) % n]).abs() > tol)
        .unwrap_or(0);
    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        let first = (start + k) % n;
        let (mut rmin, mut rmax) = (samples[first], samples[first]);
        let mut len = 1;
        while k + len < n {
            let v = samples[(start + k + len) % n];
            let (a, b) = (rmin.min(v), rmax.max(v));
            if b - a > tol {
                break;
            }
            rmin = a;
            rmax = b;
            len += 1;
        }
        if len >= 3 {
            out.push(Plateau {
                start: first as f64 * dy,
                length: len as f64 * dy,
            });
        }
        k += len;
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    out
}

/// Builds a profile from a family tag and parameters.
///
/// * `sine`: `[amplitude]` (default 1), period `h`.
/// * `constant`: `[value]`.
/// * `sine-with-plateau`: `[length, phase]`; period `2π + length`.
/// * `sawtooth`: `[smoothing]` (default 0.1).
pub fn make_profile(kind: &str, params: &[f64], h: f64) -> Result<ShearProfile> {
    match kind {
        "sine" => ShearProfile::sine(h, params.first().copied().unwrap_or(1.0)),
        "constant" => {
            let c = *params
                .first()
                .ok_or_else(|| invalid("params", "constant needs a value"))?;
            ShearProfile::constant(c, h)
        }
        "sine-with-plateau" => {
            let len = *params
                .first()
                .ok_or_else(|| invalid("params", "sine-with-plateau needs a length"))?;
            let pos = params.get(1).copied().unwrap_or(PI / 2.0);
            let p = ShearProfile::sine_with_plateau(len, pos, None)?;
            if (p.period() - h).abs() > 1e-9 * h {
                return Err(invalid("h", format!("must equal 2π + plateau = {}", p.period())));
            }
            Ok(p)
        }
        "sawtooth" => ShearProfile::sawtooth(h, params.first().copied().unwrap_or(0.1)),
        other => Err(Error::Unknown {
            what: "profile kind",
            name: other.into(),
        }),
    }
}

/// Returns `u − (1/h)∫₀ʰ u`.
pub fn normalize_mean_zero(p: &ShearProfile) -> ShearProfile {
    let mut out = p.clone();
    out.shift = p.base_mean();
    out
}

/// Length of the longest plateau. Closed-form profiles report their exact
/// plateau metadata; sampled profiles are scanned with tolerance `tol`.
pub fn longest_plateau(p: &ShearProfile, tol: f64) -> f64 {
    let base = match &p.base {
        Base::Sampled(s) => detect_plateaus(s, p.base_period, tol),
        Base::Pieces(_) => p.base_plateaus.clone(),
    };
    base.iter().map(|q| q.length).fold(0.0, f64::max) / p.alpha
}

/// `y ↦ u(αy)`, with period `h/α`.
pub fn scale_profile(p: &ShearProfile, alpha: f64) -> Result<ShearProfile> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", "must be positive"));
    }
    let mut out = p.clone();
    out.alpha *= alpha;
    Ok(out)
}

/// Position of a spliced plateau: a sine phase, or a named extremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlateauPosition {
    Named(NamedPosition),
    Phase(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedPosition {
    Crest,
    Trough,
}

impl PlateauPosition {
    pub fn phase(&self) -> f64 {
        match self {
            Self::Named(NamedPosition::Crest) => PI / 2.0,
            Self::Named(NamedPosition::Trough) => 1.5 * PI,
            Self::Phase(p) => *p,
        }
    }
}

impl Default for PlateauPosition {
    fn default() -> Self {
        Self::Named(NamedPosition::Crest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauSpec {
    pub length: f64,
    #[serde(default)]
    pub position: PlateauPosition,
}

/// Profile spec as found in run configs:
/// `{"kind":…, "h":…, "params":{…}, "plateau":{"length":…, "position":…}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau: Option<PlateauSpec>,
    /// Two-column CSV for `kind = "sampled"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Optional input scaling α applied after construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ProfileSpec {
    pub fn sine() -> Self {
        Self {
            kind: "sine".into(),
            h: Some(TAU),
            params: BTreeMap::new(),
            plateau: None,
            csv: None,
            alpha: None,
        }
    }

    pub fn sine_with_plateau(length: f64) -> Self {
        Self {
            kind: "sine-with-plateau".into(),
            h: None,
            params: BTreeMap::new(),
            plateau: Some(PlateauSpec {
                length,
                position: PlateauPosition::default(),
            }),
            csv: None,
            alpha: None,
        }
    }

    /// Builds the profile (not yet normalized).
    pub fn build(&self) -> Result<ShearProfile> {
        let p = match self.kind.as_str() {
            "sine" => ShearProfile::sine(
                self.h.unwrap_or(TAU),
                self.params.get("amplitude").copied().unwrap_or(1.0),
            )?,
            "constant" => ShearProfile::constant(
                *self
                    .params
                    .get("value")
                    .ok_or_else(|| invalid("params.value", "required for constant"))?,
                self.h.unwrap_or(1.0),
            )?,
            "sine-with-plateau" => {
                let spec = self
                    .plateau
                    .as_ref()
                    .ok_or_else(|| invalid("plateau", "required for sine-with-plateau"))?;
                let p = ShearProfile::sine_with_plateau(
                    spec.length,
                    spec.position.phase(),
                    self.params.get("blend").copied(),
                )?;
                if let Some(h) = self.h {
                    if (h - p.period()).abs() > 1e-9 * h {
                        return Err(invalid("h", format!("must equal 2π + plateau = {}", p.period())));
                    }
                }
                p
            }
            "sawtooth" => ShearProfile::sawtooth(
                self.h.unwrap_or(1.0),
                self.params.get("smoothing").copied().unwrap_or(0.1),
            )?,
            "sampled" => {
                let path = self
                    .csv
                    .as_ref()
                    .ok_or_else(|| invalid("csv", "required for sampled profiles"))?;
                ShearProfile::from_csv(Path::new(path), Smoothness::C1)?
            }
            other => {
                return Err(Error::Unknown {
                    what: "profile kind",
                    name: other.into(),
                })
            }
        };
        match self.alpha {
            Some(a) => scale_profile(&p, a),
            None => Ok(p),
        }
    }
}
