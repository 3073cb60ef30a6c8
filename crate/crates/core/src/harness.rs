//! Run configs, experiment orchestration, and on-disk artifacts.
//!
//! A [`RunConfig`] is a JSON document naming the model, the profile, one
//! experiment and its numerics. [`run`] executes it and writes result files
//! plus `manifest.json` (the resolved config and a timestamp) into the
//! output directory. Every file is written to a temporary name and renamed.
//!
//! Result files depend on the config alone; rerunning a manifest's config
//! reproduces them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::critical::{
    bracket_ell, critical_length_report, critical_plateau_length, stationary_length, EllBracket,
    QuenchTimeTable, StripResolution,
};
use crate::error::{invalid, Error, Result};
use crate::model::{IgnitionReaction, InitialData, ModelSpec, PhysParams, ReactionSpec};
use crate::numerics::{fit_line, LineFit};
use crate::pde::{Equation, GridPolicy, Problem};
use crate::profiles::{normalize_mean_zero, ProfileSpec, ShearProfile};
use crate::quench::{
    critical_amplitude, detect_quench, max_quenchable_l, strong_quench_fit, write_amplitudes_csv,
    CriticalAmplitude, QuenchOutcome, QuenchSetup, QuenchableSize, SearchOptions, SearchStatus,
};
use crate::stochastic::{
    anticoncentration_sweep, estimate_psi_mc_row, ito_refinement_study, martingale_clt_sample,
    write_records, write_samples_csv, MCEstimate, McRecord, PathEnsembleConfig,
};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CLIPPED: i32 = 3;
pub const EXIT_NO_BRACKET: i32 = 4;

/// Exit code for an error raised before or during a run.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) => 1,
        _ => EXIT_CONFIG,
    }
}

// ---------------------------------------------------------------------------
// Config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: PhysParams,
    #[serde(default)]
    pub reaction: ReactionSpec,
    #[serde(default = "ProfileSpec::sine")]
    pub profile: ProfileSpec,
    pub experiment: Experiment,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Grid policy, horizon, and search and Monte Carlo tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub grid: GridPolicy,
    /// Time horizon in units of `1/M`.
    pub horizon: f64,
    pub search: SearchOptions,
    /// Largest `L` tried by size searches, laminar units.
    pub l_cap: f64,
    pub n_paths: usize,
    pub mc_dt: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            grid: GridPolicy::default(),
            horizon: 50.0,
            search: SearchOptions::default(),
            l_cap: 256.0,
            n_paths: 10_000,
            mc_dt: 1e-3,
        }
    }
}

/// The experiment a config runs, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// One trajectory with snapshots and the sup-norm history.
    Simulate {
        #[serde(rename = "A", default)]
        amplitude: f64,
        initial: InitialData,
        #[serde(default = "default_equation")]
        equation: Equation,
        #[serde(default)]
        snapshot_times: Vec<f64>,
    },
    /// `A₀(L)` brackets for each `L`.
    CriticalAmplitude {
        #[serde(rename = "L")]
        half_widths: Vec<f64>,
    },
    /// Brackets on the largest quenched `L` for each `A`.
    #[serde(rename = "max-L")]
    MaxL {
        #[serde(rename = "A")]
        amplitudes: Vec<f64>,
    },
    /// `ℓ̃`, the time map, and optionally Dirichlet strip experiments.
    CriticalLength {
        #[serde(default)]
        bracket: Option<StripBracketSpec>,
        #[serde(default)]
        quench_times: Option<QuenchTimeSpec>,
        /// Number of peaks sampled for the time-map curve.
        #[serde(default = "default_time_map_points")]
        time_map_points: usize,
    },
    /// Monte Carlo checks.
    McVerify { checks: Vec<McCheck> },
    AlphaSweep {
        mode: SweepMode,
        /// `L` in `A0-at-fixed-L` mode, `A` in `LA-at-fixed-A` mode.
        fixed: f64,
        regimes: Vec<Regime>,
    },
    /// Critical amplitudes for sine profiles with spliced crest plateaus.
    Dichotomy { entries: Vec<DichotomyEntry> },
}

fn default_equation() -> Equation {
    Equation::Reactive
}

fn default_time_map_points() -> usize {
    64
}

impl Experiment {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Simulate { .. } => "simulate",
            Self::CriticalAmplitude { .. } => "critical-amplitude",
            Self::MaxL { .. } => "max-L",
            Self::CriticalLength { .. } => "critical-length",
            Self::McVerify { .. } => "mc-verify",
            Self::AlphaSweep { .. } => "alpha-sweep",
            Self::Dichotomy { .. } => "dichotomy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripBracketSpec {
    /// Strip half-width of the seeded data, laminar units.
    #[serde(rename = "L")]
    pub half_width: f64,
    pub t_max: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_rel_tol() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchTimeSpec {
    pub l: Vec<f64>,
    #[serde(rename = "L")]
    pub half_widths: Vec<f64>,
    pub t_max: f64,
}

/// One Monte Carlo check, tagged by `op`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum McCheck {
    /// `Ψ(t, x, y)` on a probe grid from the box initial datum.
    Psi {
        t: f64,
        xs: Vec<f64>,
        ys: Vec<f64>,
        #[serde(rename = "A")]
        amplitude: f64,
        #[serde(rename = "L")]
        half_width: f64,
    },
    /// `sup_{y,a} P(∫₀ᵗu(W)ds ∈ [a, a+ε])` for each ε.
    AntiConcentration {
        t: f64,
        ys: Vec<f64>,
        a_values: Vec<f64>,
        eps_values: Vec<f64>,
    },
    /// RMS Itô residual under successive halvings of the step.
    Ito { y: f64, alpha: f64, levels: usize },
    /// Martingale samples against `N(0, σ²)`.
    Clt { y: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepMode {
    #[serde(rename = "A0-at-fixed-L")]
    A0AtFixedL,
    #[serde(rename = "LA-at-fixed-A")]
    LAtFixedA,
}

/// α values sharing a grid policy; `fit` requests a log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub name: String,
    pub alphas: Vec<f64>,
    /// Replaces `numerics.grid` for this regime.
    #[serde(default)]
    pub grid: Option<GridPolicy>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "yes")]
    pub fit: bool,
}

fn yes() -> bool {
    true
}

/// Plateau length and `L`, both in units of `ℓ̃`; plateau 0 is the pure sine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyEntry {
    pub plateau: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(default)]
    pub grid: Option<GridPolicy>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks values and fills defaults that depend on other fields.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        c.params.validate()?;
        if c.profile.h.is_none() && matches!(c.profile.kind.as_str(), "sine" | "sawtooth") {
            c.profile.h = Some(c.params.h);
        }
        c.numerics.grid.validate()?;
        if !(c.numerics.horizon > 0.0 && c.numerics.horizon.is_finite()) {
            return Err(invalid("horizon", "must be positive and finite"));
        }
        let s = &c.numerics.search;
        if !(s.rel_tol > 0.0 && s.rel_tol < 1.0) {
            return Err(invalid("rel_tol", "must lie in (0, 1)"));
        }
        if !(s.a_start > 0.0 && s.a_cap >= s.a_start) {
            return Err(invalid("a_cap", "need 0 < a_start ≤ a_cap"));
        }
        let empty = |name: &'static str, v: &[f64]| {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                Err(invalid(name, "need a nonempty list of positive values"))
            } else {
                Ok(())
            }
        };
        match &c.experiment {
            Experiment::CriticalAmplitude { half_widths } => empty("L", half_widths)?,
            Experiment::MaxL { amplitudes } => empty("A", amplitudes)?,
            Experiment::AlphaSweep { regimes, fixed, .. } => {
                if regimes.is_empty() {
                    return Err(invalid("regimes", "need at least one regime"));
                }
                for r in regimes {
                    empty("alphas", &r.alphas)?;
                    if let Some(g) = &r.grid {
                        g.validate()?;
                    }
                }
                empty("fixed", &[*fixed])?;
            }
            Experiment::Dichotomy { entries } => {
                if entries.is_empty() {
                    return Err(invalid("entries", "need at least one plateau"));
                }
                for e in entries {
                    if !(e.plateau >= 0.0 && e.half_width > 0.0) {
                        return Err(invalid("entries", "need plateau ≥ 0 and L > 0"));
                    }
                }
            }
            Experiment::McVerify { checks } => {
                if checks.is_empty() {
                    return Err(invalid("checks", "need at least one check"));
                }
                PathEnsembleConfig::new(c.numerics.n_paths, c.numerics.mc_dt, c.seed)?;
            }
            _ => {}
        }
        c.model()?;
        build_profile(&c.profile)?;
        Ok(c)
    }

    pub fn model(&self) -> Result<(PhysParams, IgnitionReaction)> {
        ModelSpec {
            params: self.params,
            reaction: self.reaction.clone(),
        }
        .build()
    }

    fn search_setup<'a>(
        &self,
        params: &'a PhysParams,
        f: &'a IgnitionReaction,
        p: &'a ShearProfile,
        grid: &'a GridPolicy,
        horizon: f64,
    ) -> QuenchSetup<'a> {
        QuenchSetup {
            params,
            reaction: f,
            profile: p,
            policy: grid,
            horizon,
        }
    }
}

/// Builds a profile and removes its mean.
pub fn build_profile(spec: &ProfileSpec) -> Result<ShearProfile> {
    Ok(normalize_mean_zero(&spec.build()?))
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub cap: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        if let Some(d) = &self.output_dir {
            c.output_dir = d.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(h) = self.horizon {
            c.numerics.horizon = h;
            if let Experiment::AlphaSweep { regimes, .. } = &mut c.experiment {
                for r in regimes {
                    r.horizon = None;
                }
            }
        }
        if let Some(a) = self.cap {
            c.numerics.search.a_cap = a;
        }
    }
}

// ---------------------------------------------------------------------------
// Running

/// Outcome class of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Success,
    /// A verdict may be an artifact of the window edge.
    DomainClipped,
    /// Some search found no bracket.
    NoBracket,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Success => EXIT_OK,
            Self::DomainClipped => EXIT_CLIPPED,
            Self::NoBracket => EXIT_NO_BRACKET,
        }
    }

    fn from_flags(suspect: bool, missing: bool) -> Self {
        if suspect {
            Self::DomainClipped
        } else if missing {
            Self::NoBracket
        } else {
            Self::Success
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub status: RunStatus,
    pub exit_code: i32,
    /// File names relative to the output directory, manifest excluded.
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    timestamp: u64,
    experiment: &'static str,
    status: RunStatus,
    exit_code: i32,
    outputs: &'a [String],
    config: &'a RunConfig,
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| invalid("output", "path has no file name"))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    match write(&tmp) {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |tmp| {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        fs::write(tmp, s)?;
        Ok(())
    })
}

struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        write_json_atomic(&p, value)
    }

    fn with<F: FnOnce(&Path) -> Result<()>>(&mut self, name: &str, write: F) -> Result<()> {
        let p = self.path(name);
        write_atomic(&p, write)
    }
}

/// Runs the experiment in `config` and writes its artifacts.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let cfg = config.resolved()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::create_dir_all(cfg.output_dir.join("plot"))?;
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        names: Vec::new(),
    };
    let mut plot = ResultSet::default();
    let status = match &cfg.experiment {
        Experiment::Simulate { .. } => run_simulate(&cfg, &mut out, &mut plot)?,
        Experiment::CriticalAmplitude { half_widths } => run_amplitudes(&cfg, half_widths, &mut out, &mut plot)?,
        Experiment::MaxL { amplitudes } => run_max_l(&cfg, amplitudes, &mut out)?,
        Experiment::CriticalLength { .. } => run_critical_length(&cfg, &mut out, &mut plot)?,
        Experiment::McVerify { checks } => run_mc(&cfg, checks, &mut out)?,
        Experiment::AlphaSweep { mode, fixed, regimes } => {
            let sweep = alpha_sweep(&cfg, regimes, *mode, *fixed)?;
            out.with("sweep.csv", |p| write_sweep_csv(p, &sweep.rows))?;
            out.json("sweep.json", &sweep)?;
            let missing = sweep.rows.iter().any(|r| r.high.is_none());
            let suspect = sweep.rows.iter().any(|r| r.suspect);
            plot.sweep = sweep.rows;
            RunStatus::from_flags(suspect, missing)
        }
        Experiment::Dichotomy { .. } => {
            let report = dichotomy_demo(&cfg)?;
            out.with("dichotomy.csv", |p| report.write_csv(p))?;
            out.json("dichotomy.json", &report)?;
            let suspect = report.rows.iter().any(|r| r.suspect);
            RunStatus::from_flags(suspect, false)
        }
    };
    for name in emit_plotdata(&cfg.output_dir.join("plot"), &plot)? {
        out.names.push(format!("plot/{name}"));
    }
    let report = RunReport {
        experiment: cfg.experiment.tag().into(),
        status,
        exit_code: status.exit_code(),
        outputs: out.names,
    };
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let manifest = Manifest {
        tool: "quench",
        version: env!("CARGO_PKG_VERSION"),
        timestamp,
        experiment: cfg.experiment.tag(),
        status,
        exit_code: report.exit_code,
        outputs: &report.outputs,
        config: &cfg,
    };
    write_json_atomic(&cfg.output_dir.join("manifest.json"), &manifest)?;
    Ok(report)
}

/// Reads the resolved config back out of a manifest.
pub fn config_from_manifest(path: &Path) -> Result<RunConfig> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let c = v
        .get("config")
        .cloned()
        .ok_or_else(|| Error::Config("manifest has no `config`".into()))?;
    serde_json::from_value(c).map_err(|e| Error::Config(e.to_string()))
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    grid_nx: usize,
    grid_ny: usize,
    dx: f64,
    dy: f64,
    dt: f64,
    frame_velocity: f64,
    scheme: crate::pde::Scheme,
    final_time: f64,
    final_sup: f64,
    max_boundary: f64,
    domain_clipped: bool,
    outcome: Option<QuenchOutcome>,
}

fn run_simulate(cfg: &RunConfig, out: &mut Outputs, plot: &mut ResultSet) -> Result<RunStatus> {
    let Experiment::Simulate {
        amplitude,
        initial,
        equation,
        snapshot_times,
    } = &cfg.experiment
    else {
        unreachable!()
    };
    initial.validate()?;
    let (params, f) = cfg.model()?;
    let p = build_profile(&cfg.profile)?;
    let res = cfg
        .numerics
        .grid
        .resolve(&params, &p, *amplitude, initial, cfg.numerics.horizon)?;
    let schedule = res.schedule.clone().with_snapshots(snapshot_times.clone());
    let prob = Problem {
        equation: *equation,
        params,
        reaction: (*equation == Equation::Reactive).then_some(&f),
        profile: Some(&p),
        amplitude: *amplitude,
        frame_velocity: 0.0,
        initial: *initial,
        y_weight: None,
    };
    let traj = res.simulate(&prob, &schedule)?;
    let outcome = (*equation == Equation::Reactive).then(|| detect_quench(&traj, params.theta0));
    out.with("snapshots.csv", |path| crate::pde::io::write_snapshots_csv(path, &traj.snapshots))?;
    out.with("sup_history.csv", |path| plotdata::write_sup_histories(path, &[("run".into(), traj.sup_history.clone())]))?;
    let g = traj.grid;
    out.json(
        "summary.json",
        &SimulateSummary {
            grid_nx: g.nx,
            grid_ny: g.ny,
            dx: g.dx(),
            dy: g.dy(),
            dt: traj.dt,
            frame_velocity: traj.frame_velocity,
            scheme: res.scheme,
            final_time: traj.final_time(),
            final_sup: traj.final_field.sup(),
            max_boundary: traj.max_boundary,
            domain_clipped: traj.domain_clipped,
            outcome,
        },
    )?;
    plot.sup_histories.push(("run".into(), traj.sup_history));
    Ok(RunStatus::from_flags(traj.domain_clipped, false))
}

fn run_amplitudes(
    cfg: &RunConfig,
    half_widths: &[f64],
    out: &mut Outputs,
    plot: &mut ResultSet,
) -> Result<RunStatus> {
    let (params, f) = cfg.model()?;
    let p = build_profile(&cfg.profile)?;
    let setup = cfg.search_setup(&params, &f, &p, &cfg.numerics.grid, cfg.numerics.horizon);
    let mut rows = Vec::new();
    for &l in half_widths {
        rows.push(critical_amplitude(l, &setup, &cfg.numerics.search)?);
    }
    rows.sort_by(|a, b| a.half_width.total_cmp(&b.half_width));
    out.with("amplitudes.csv", |path| write_amplitudes_csv(path, &rows))?;
    out.json("amplitudes.json", &rows)?;
    let samples: Vec<(f64, Option<f64>)> = rows.iter().map(|r| (r.half_width, r.estimate())).collect();
    let fit = match strong_quench_fit(&samples) {
        Ok(fit) => json!({ "fit": fit, "horizon": cfg.numerics.horizon, "a_cap": cfg.numerics.search.a_cap }),
        Err(e) => json!({ "error": e.to_string(), "horizon": cfg.numerics.horizon, "a_cap": cfg.numerics.search.a_cap }),
    };
    out.json("strong_fit.json", &fit)?;
    let suspect = rows.iter().any(|r| r.suspect);
    let missing = rows.iter().any(|r| r.status == SearchStatus::NoQuenchUpToCap);
    plot.amplitudes = rows;
    Ok(RunStatus::from_flags(suspect, missing))
}

fn run_max_l(cfg: &RunConfig, amplitudes: &[f64], out: &mut Outputs) -> Result<RunStatus> {
    let (params, f) = cfg.model()?;
    let p = build_profile(&cfg.profile)?;
    let setup = cfg.search_setup(&params, &f, &p, &cfg.numerics.grid, cfg.numerics.horizon);
    let mut rows: Vec<QuenchableSize> = Vec::new();
    for &a in amplitudes {
        rows.push(max_quenchable_l(a, &setup, cfg.numerics.search.rel_tol, cfg.numerics.l_cap)?);
    }
    rows.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    out.with("max_l.csv", |path| {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["A", "L_low", "L_high", "horizon", "l_cap"])?;
        for r in &rows {
            w.write_record([
                r.amplitude.to_string(),
                r.l_low.to_string(),
                r.l_high.map_or(String::new(), |v| v.to_string()),
                r.horizon.to_string(),
                cfg.numerics.l_cap.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.json("max_l.json", &rows)?;
    let suspect = rows.iter().any(|r| r.suspect);
    let missing = rows.iter().any(|r| r.l_high.is_none());
    Ok(RunStatus::from_flags(suspect, missing))
}

fn run_critical_length(cfg: &RunConfig, out: &mut Outputs, plot: &mut ResultSet) -> Result<RunStatus> {
    let Experiment::CriticalLength {
        bracket,
        quench_times,
        time_map_points,
    } = &cfg.experiment
    else {
        unreachable!()
    };
    let (params, f) = cfg.model()?;
    let report = critical_length_report(&f, &params)?;
    out.json("ell_report.json", &report)?;
    plot.time_map = time_map_curve(&f, &params, *time_map_points)?;
    plot.ell = Some(report.ell_tilde);
    let res = StripResolution::standard(&params);
    let mut suspect = false;
    let mut missing = false;
    if let Some(b) = bracket {
        let br: EllBracket = bracket_ell(&f, &params, b.half_width, b.t_max, b.rel_tol, &res)?;
        suspect |= br.clipped;
        missing |= br.l_high.is_none();
        out.json("ell_bracket.json", &br)?;
    }
    if let Some(q) = quench_times {
        let table = QuenchTimeTable::fill(&q.l, &q.half_widths, &f, &params, q.t_max, &res)?;
        suspect |= table.entries.iter().any(|e| e.clipped);
        out.with("quench_times.csv", |path| table.write_csv(path))?;
    }
    Ok(RunStatus::from_flags(suspect, missing))
}

/// `(p, l(p))` on a grid of peaks in `(θ₀, 1)`, skipping values where the
/// quadrature fails.
pub fn time_map_curve(f: &IgnitionReaction, params: &PhysParams, n: usize) -> Result<Vec<(f64, f64)>> {
    let theta0 = params.theta0;
    let mut pts = Vec::with_capacity(n);
    for i in 1..=n {
        let p = theta0 + (1.0 - theta0) * i as f64 / (n + 1) as f64;
        if let Ok(l) = stationary_length(p, f, params) {
            if l.is_finite() {
                pts.push((p, l));
            }
        }
    }
    Ok(pts)
}

fn run_mc(cfg: &RunConfig, checks: &[McCheck], out: &mut Outputs) -> Result<RunStatus> {
    let (params, _) = cfg.model()?;
    let p = build_profile(&cfg.profile)?;
    let ens = PathEnsembleConfig::new(cfg.numerics.n_paths, cfg.numerics.mc_dt, cfg.seed)?;
    let mut records = Vec::new();
    let mut clt_samples = None;
    for (k, check) in checks.iter().enumerate() {
        // Each check gets its own seed so that adding checks changes nothing else.
        let ens = PathEnsembleConfig {
            seed: cfg.seed.wrapping_add(k as u64),
            ..ens
        };
        match check {
            McCheck::Psi {
                t,
                xs,
                ys,
                amplitude,
                half_width,
            } => {
                for &y in ys {
                    let row = estimate_psi_mc_row(*t, xs, y, *amplitude, *half_width, &p, &params, &ens)?;
                    for (x, est) in xs.iter().zip(&row) {
                        let inputs = json!({"t": t, "x": x, "y": y, "A": amplitude, "L": half_width});
                        records.push(McRecord::new("psi", inputs, est, ens.dt));
                    }
                }
            }
            McCheck::AntiConcentration {
                t,
                ys,
                a_values,
                eps_values,
            } => {
                for pt in anticoncentration_sweep(*t, ys, a_values, eps_values, &p, &ens)? {
                    let est = MCEstimate {
                        mean: pt.sup,
                        stderr: pt.stderr_at_sup,
                        n: ens.n_paths,
                        seed: ens.seed,
                    };
                    let inputs = json!({"t": t, "eps": pt.eps, "y": pt.y_at_sup, "a": pt.a_at_sup});
                    records.push(McRecord::new("anticoncentration-sup", inputs, &est, ens.dt));
                }
            }
            McCheck::Ito { y, alpha, levels } => {
                let n = ens.n_paths.min(1000).max(100);
                let ito = PathEnsembleConfig { n_paths: n, ..ens };
                for (dt, rms) in ito_refinement_study(*y, *alpha, &p, &ito, *levels)? {
                    let est = MCEstimate::exact(rms, n, ito.seed);
                    records.push(McRecord::new("ito-rms", json!({"y": y, "alpha": alpha}), &est, dt));
                }
            }
            McCheck::Clt { y, alpha } => {
                let rep = martingale_clt_sample(*y, *alpha, &p, &ens)?;
                let est = MCEstimate::from_samples(&rep.samples, ens.seed);
                let inputs = json!({
                    "y": y, "alpha": alpha, "sigma2": rep.sigma2,
                    "sample_variance": rep.sample_variance, "ks_distance": rep.ks_distance,
                });
                records.push(McRecord::new("clt", inputs, &est, ens.dt));
                clt_samples = Some(rep.samples);
            }
        }
    }
    out.with("mc_records.jsonl", |path| write_records(path, &records))?;
    if let Some(s) = clt_samples {
        out.with("clt_samples.csv", |path| write_samples_csv(path, &s))?;
    }
    Ok(RunStatus::Success)
}

// ---------------------------------------------------------------------------
// α sweeps

/// One α of a sweep. `low`/`high` bracket `A₀` or `L_A` depending on the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub regime: String,
    pub mode: SweepMode,
    pub fixed: f64,
    pub low: f64,
    pub high: Option<f64>,
    pub status: String,
    pub horizon: f64,
    pub a_cap: f64,
    pub clipped: bool,
    pub suspect: bool,
    pub evaluations: usize,
}

impl SweepRow {
    pub fn midpoint(&self) -> Option<f64> {
        self.high.map(|h| 0.5 * (self.low + h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeFit {
    pub regime: String,
    /// Number of bracketed α values in the fit.
    pub n: usize,
    /// Log-log fit of the bracket midpoint against α; `None` with fewer than 4 brackets.
    pub fit: Option<LineFit>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub fixed: f64,
    /// Sorted by α.
    pub rows: Vec<SweepRow>,
    pub fits: Vec<RegimeFit>,
}

/// Minimum bracketed points for a regime slope.
pub const MIN_FIT_POINTS: usize = 4;

/// Critical brackets across α for the profile `u(αy)` of `base`.
///
/// Each α is an independent run; the order of execution does not affect the
/// rows.
pub fn alpha_sweep(base: &RunConfig, regimes: &[Regime], mode: SweepMode, fixed: f64) -> Result<SweepResult> {
    let (params, f) = base.model()?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for reg in regimes {
        let grid = reg.grid.clone().unwrap_or_else(|| base.numerics.grid.clone());
        let horizon = reg.horizon.unwrap_or(base.numerics.horizon);
        let mut pts = Vec::new();
        for &alpha in &reg.alphas {
            let row = sweep_point(base, &params, &f, &grid, horizon, &reg.name, alpha, mode, fixed)?;
            if let Some(m) = row.midpoint() {
                if m > 0.0 {
                    pts.push((alpha.ln(), m.ln()));
                }
            }
            rows.push(row);
        }
        if reg.fit {
            let n = pts.len();
            let (fit, note) = if n >= MIN_FIT_POINTS {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                (Some(fit_line(&xs, &ys)), None)
            } else {
                (None, Some(format!("insufficient brackets: {n} of {MIN_FIT_POINTS}")))
            };
            fits.push(RegimeFit {
                regime: reg.name.clone(),
                n,
                fit,
                note,
            });
        }
    }
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then_with(|| a.regime.cmp(&b.regime)));
    Ok(SweepResult {
        mode,
        fixed,
        rows,
        fits,
    })
}

#[allow(clippy::too_many_arguments)]
fn sweep_point(
    base: &RunConfig,
    params: &PhysParams,
    f: &IgnitionReaction,
    grid: &GridPolicy,
    horizon: f64,
    regime: &str,
    alpha: f64,
    mode: SweepMode,
    fixed: f64,
) -> Result<SweepRow> {
    let mut spec = base.profile.clone();
    spec.alpha = Some(spec.alpha.unwrap_or(1.0) * alpha);
    let p = build_profile(&spec)?;
    let setup = base.search_setup(params, f, &p, grid, horizon);
    let opts = &base.numerics.search;
    Ok(match mode {
        SweepMode::A0AtFixedL => {
            let r: CriticalAmplitude = critical_amplitude(fixed, &setup, opts)?;
            SweepRow {
                alpha,
                regime: regime.into(),
                mode,
                fixed,
                low: r.a_low,
                high: r.a_high,
                status: status_name(r.status).into(),
                horizon,
                a_cap: opts.a_cap,
                clipped: r.clipped,
                suspect: r.suspect,
                evaluations: r.evaluations.len(),
            }
        }
        SweepMode::LAtFixedA => {
            let r = max_quenchable_l(fixed, &setup, opts.rel_tol, base.numerics.l_cap)?;
            SweepRow {
                alpha,
                regime: regime.into(),
                mode,
                fixed,
                low: r.l_low,
                high: r.l_high,
                status: if r.l_high.is_some() { "bracketed" } else { "quenches-up-to-cap" }.into(),
                horizon,
                a_cap: opts.a_cap,
                clipped: r.clipped,
                suspect: r.suspect,
                evaluations: r.evaluations.len(),
            }
        }
    })
}

fn status_name(s: SearchStatus) -> &'static str {
    match s {
        SearchStatus::Bracketed => "bracketed",
        SearchStatus::QuenchesAtRest => "quenches-at-rest",
        SearchStatus::NoQuenchUpToCap => "no-quench-up-to-cap",
    }
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "alpha", "regime", "mode", "fixed", "low", "high", "status", "horizon", "a_cap", "clipped",
    ])?;
    for r in rows {
        let mode = match r.mode {
            SweepMode::A0AtFixedL => "A0-at-fixed-L",
            SweepMode::LAtFixedA => "LA-at-fixed-A",
        };
        w.write_record([
            r.alpha.to_string(),
            r.regime.clone(),
            mode.into(),
            r.fixed.to_string(),
            r.low.to_string(),
            r.high.map_or(String::new(), |v| v.to_string()),
            r.status.clone(),
            r.horizon.to_string(),
            r.a_cap.to_string(),
            r.clipped.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Plateau dichotomy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    /// Plateau length over `ℓ̃`.
    pub plateau_factor: f64,
    pub plateau: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub status: String,
    pub a_low: f64,
    pub a_high: Option<f64>,
    /// Bracket midpoint over `L`.
    pub a_over_l: Option<f64>,
    /// "quench" below `ℓ̃`, "no-quench" above, "undetermined" at `ℓ̃`.
    pub expected: String,
    pub consistent: Option<bool>,
    pub horizon: f64,
    pub a_cap: f64,
    pub clipped: bool,
    pub suspect: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub ell_tilde: f64,
    pub rows: Vec<DichotomyRow>,
}

impl DichotomyReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "plateau_over_ell", "plateau", "L", "status", "A_low", "A_high", "A_over_L", "expected",
            "consistent", "horizon", "a_cap",
        ])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            w.write_record([
                r.plateau_factor.to_string(),
                r.plateau.to_string(),
                r.half_width.to_string(),
                r.status.clone(),
                r.a_low.to_string(),
                opt(r.a_high),
                opt(r.a_over_l),
                r.expected.clone(),
                r.consistent.map_or(String::new(), |c| c.to_string()),
                r.horizon.to_string(),
                r.a_cap.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Critical amplitudes for sine profiles carrying a crest plateau of each
/// listed length, aligned against `ℓ̃`. The config's own profile is not used.
pub fn dichotomy_demo(cfg: &RunConfig) -> Result<DichotomyReport> {
    let Experiment::Dichotomy { entries } = &cfg.experiment else {
        return Err(invalid("experiment", "not a dichotomy config"));
    };
    let (params, f) = cfg.model()?;
    let ell = critical_plateau_length(&f, &params)?.ell;
    let mut rows = Vec::new();
    for e in entries {
        let plateau = e.plateau * ell;
        let spec = if e.plateau == 0.0 {
            ProfileSpec {
                h: Some(std::f64::consts::TAU),
                ..ProfileSpec::sine()
            }
        } else {
            ProfileSpec::sine_with_plateau(plateau)
        };
        let p = build_profile(&spec)?;
        let grid = e.grid.clone().unwrap_or_else(|| cfg.numerics.grid.clone());
        let setup = cfg.search_setup(&params, &f, &p, &grid, cfg.numerics.horizon);
        let l = e.half_width * ell;
        let r = critical_amplitude(l, &setup, &cfg.numerics.search)?;
        let expected = if e.plateau < 1.0 {
            "quench"
        } else if e.plateau > 1.0 {
            "no-quench"
        } else {
            "undetermined"
        };
        let found = r.status != SearchStatus::NoQuenchUpToCap;
        let consistent = match expected {
            "quench" => Some(found),
            "no-quench" => Some(!found),
            _ => None,
        };
        rows.push(DichotomyRow {
            plateau_factor: e.plateau,
            plateau,
            half_width: l,
            status: status_name(r.status).into(),
            a_low: r.a_low,
            a_high: r.a_high,
            a_over_l: r.estimate().map(|a| a / l),
            expected: expected.into(),
            consistent,
            horizon: cfg.numerics.horizon,
            a_cap: cfg.numerics.search.a_cap,
            clipped: r.clipped,
            suspect: r.suspect,
        });
    }
    Ok(DichotomyReport { ell_tilde: ell, rows })
}

// ---------------------------------------------------------------------------
// Plot data

/// Everything [`emit_plotdata`] can draw from.
#[derive(Debug, Clone, Default)]
pub struct ResultSet {
    /// Labelled `(t, sup T)` histories.
    pub sup_histories: Vec<(String, Vec<(f64, f64)>)>,
    pub amplitudes: Vec<CriticalAmplitude>,
    pub sweep: Vec<SweepRow>,
    /// `(p, l(p))` samples of the time map.
    pub time_map: Vec<(f64, f64)>,
    pub ell: Option<f64>,
}

/// Writes tidy CSVs into `dir` and returns their names:
///
/// * `sup_history.csv`: `run,t,sup`
/// * `a0_vs_L.csv`: `L,A_low,A_high`
/// * `a0_vs_alpha.csv`: `alpha,A_low,A_high` (`A0-at-fixed-L` rows)
/// * `la_vs_alpha.csv`: `alpha,L_low,L_high` (`LA-at-fixed-A` rows)
/// * `time_map.csv`: `p,l,ell_tilde`
///
/// Missing values are empty fields. A file with no rows holds its header.
pub fn emit_plotdata(dir: &Path, set: &ResultSet) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    let mut put = |name: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        write_atomic(&dir.join(name), write)?;
        names.push(name.to_string());
        Ok(())
    };
    put("sup_history.csv", &|p| plotdata::write_sup_histories(p, &set.sup_histories))?;
    put("a0_vs_L.csv", &|p| {
        let rows: Vec<_> = set.amplitudes.iter().map(|r| (r.half_width, r.a_low, r.a_high)).collect();
        plotdata::write_brackets(p, ["L", "A_low", "A_high"], &rows)
    })?;
    let by_mode = |m: SweepMode| -> Vec<(f64, f64, Option<f64>)> {
        set.sweep
            .iter()
            .filter(|r| r.mode == m)
            .map(|r| (r.alpha, r.low, r.high))
            .collect()
    };
    put("a0_vs_alpha.csv", &|p| {
        plotdata::write_brackets(p, ["alpha", "A_low", "A_high"], &by_mode(SweepMode::A0AtFixedL))
    })?;
    put("la_vs_alpha.csv", &|p| {
        plotdata::write_brackets(p, ["alpha", "L_low", "L_high"], &by_mode(SweepMode::LAtFixedA))
    })?;
    put("time_map.csv", &|p| plotdata::write_time_map(p, &set.time_map, set.ell))?;
    Ok(names)
}

/// Individual tidy-CSV writers.
pub mod plotdata {
    use std::path::Path;

    use crate::error::Result;

    fn opt(v: Option<f64>) -> String {
        v.map_or(String::new(), |x| x.to_string())
    }

    pub fn write_sup_histories(path: &Path, runs: &[(String, Vec<(f64, f64)>)]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["run", "t", "sup"])?;
        for (label, hist) in runs {
            for &(t, s) in hist {
                w.write_record([label.clone(), t.to_string(), s.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_brackets(path: &Path, header: [&str; 3], rows: &[(f64, f64, Option<f64>)]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(header)?;
        for &(x, lo, hi) in rows {
            w.write_record([x.to_string(), lo.to_string(), opt(hi)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_time_map(path: &Path, pts: &[(f64, f64)], ell: Option<f64>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["p", "l", "ell_tilde"])?;
        for &(p, l) in pts {
            w.write_record([p.to_string(), l.to_string(), opt(ell)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Example configs, one per experiment, used by `quench <cmd> --example`.
pub fn example_config(tag: &str) -> Option<RunConfig> {
    let params = PhysParams::unit(0.25, std::f64::consts::TAU).ok()?;
    let experiment = match tag {
        "simulate" => Experiment::Simulate {
            amplitude: 10.0,
            initial: InitialData::sharp(4.0).ok()?,
            equation: Equation::Reactive,
            snapshot_times: vec![1.0, 5.0],
        },
        "critical-amplitude" => Experiment::CriticalAmplitude {
            half_widths: vec![4.0, 8.0, 16.0, 32.0],
        },
        "max-L" => Experiment::MaxL {
            amplitudes: vec![10.0, 20.0],
        },
        "critical-length" => Experiment::CriticalLength {
            bracket: None,
            quench_times: None,
            time_map_points: 64,
        },
        "mc-verify" => Experiment::McVerify {
            checks: vec![McCheck::Clt { y: 0.3, alpha: 32.0 }],
        },
        "alpha-sweep" => Experiment::AlphaSweep {
            mode: SweepMode::A0AtFixedL,
            fixed: 4.0,
            regimes: vec![Regime {
                name: "large".into(),
                alphas: vec![8.0, 16.0, 32.0, 64.0],
                grid: None,
                horizon: Some(20.0),
                fit: true,
            }],
        },
        "dichotomy" => Experiment::Dichotomy {
            entries: vec![
                DichotomyEntry {
                    plateau: 0.0,
                    half_width: 1.0,
                    grid: None,
                },
                DichotomyEntry {
                    plateau: 2.0,
                    half_width: 10.0,
                    grid: None,
                },
            ],
        },
        _ => return None,
    };
    Some(RunConfig {
        params,
        reaction: ReactionSpec::default(),
        profile: ProfileSpec::sine(),
        experiment,
        numerics: Numerics {
            grid: GridPolicy {
                dx: Some(0.25),
                dt: 0.1,
                ..Default::default()
            },
            horizon: 20.0,
            ..Default::default()
        },
        seed: 0,
        output_dir: default_output_dir(),
    })
}

/// Tags accepted by [`example_config`] and the CLI.
pub const EXPERIMENT_TAGS: [&str; 7] = [
    "simulate",
    "critical-amplitude",
    "max-L",
    "critical-length",
    "mc-verify",
    "alpha-sweep",
    "dichotomy",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        for tag in EXPERIMENT_TAGS {
            let c = example_config(tag).unwrap();
            let text = c.to_json().unwrap();
            let back = RunConfig::from_json(&text).unwrap();
            assert_eq!(c, back, "{tag}");
            let r = c.resolved().unwrap();
            assert_eq!(r, RunConfig::from_json(&r.to_json().unwrap()).unwrap());
        }
    }

    #[test]
    fn missing_kappa_is_named() {
        let text = r#"{"params":{"M":1,"theta0":0.25,"h":6.283185307179586},
                       "experiment":{"kind":"critical-length"}}"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("kappa"), "{err}");
        assert_eq!(exit_code_for(&err), EXIT_CONFIG);
    }

    #[test]
    fn bad_values_are_rejected_by_name() {
        let mut c = example_config("critical-amplitude").unwrap();
        c.params.kappa = -1.0;
        assert!(c.resolved().unwrap_err().to_string().contains("kappa"));
        let mut c = example_config("critical-amplitude").unwrap();
        c.experiment = Experiment::CriticalAmplitude { half_widths: vec![] };
        assert!(c.resolved().unwrap_err().to_string().contains("`L`"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"params":{"kappa":1,"M":1,"theta0":0.25,"h":6.3},"kapa":2,
                       "experiment":{"kind":"critical-length"}}"#;
        assert!(RunConfig::from_json(text).unwrap_err().to_string().contains("kapa"));
    }

    #[test]
    fn overrides_apply() {
        let mut c = example_config("alpha-sweep").unwrap();
        Overrides {
            output_dir: Some("x".into()),
            seed: Some(7),
            horizon: Some(3.0),
            cap: Some(10.0),
        }
        .apply(&mut c);
        assert_eq!(c.seed, 7);
        assert_eq!(c.numerics.horizon, 3.0);
        assert_eq!(c.numerics.search.a_cap, 10.0);
        let Experiment::AlphaSweep { regimes, .. } = &c.experiment else { panic!() };
        assert!(regimes[0].horizon.is_none());
    }

    #[test]
    fn status_precedence() {
        assert_eq!(RunStatus::from_flags(true, true).exit_code(), EXIT_CLIPPED);
        assert_eq!(RunStatus::from_flags(false, true).exit_code(), EXIT_NO_BRACKET);
        assert_eq!(RunStatus::from_flags(false, false).exit_code(), EXIT_OK);
    }

    #[test]
    fn empty_result_set_gives_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        let names = emit_plotdata(dir.path(), &ResultSet::default()).unwrap();
        assert_eq!(names.len(), 5);
        let s = fs::read_to_string(dir.path().join("a0_vs_alpha.csv")).unwrap();
        assert_eq!(s, "alpha,A_low,A_high\n");
        let s = fs::read_to_string(dir.path().join("sup_history.csv")).unwrap();
        assert_eq!(s, "run,t,sup\n");
    }

    #[test]
    fn sweep_rows_become_alpha_csv() {
        let row = |alpha: f64| SweepRow {
            alpha,
            regime: "r".into(),
            mode: SweepMode::A0AtFixedL,
            fixed: 4.0,
            low: alpha,
            high: Some(2.0 * alpha),
            status: "bracketed".into(),
            horizon: 20.0,
            a_cap: 1e6,
            clipped: false,
            suspect: false,
            evaluations: 1,
        };
        let set = ResultSet {
            sweep: vec![row(8.0), row(16.0), row(32.0), row(64.0)],
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        emit_plotdata(dir.path(), &set).unwrap();
        let s = fs::read_to_string(dir.path().join("a0_vs_alpha.csv")).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "alpha,A_low,A_high");
        assert_eq!(lines[1], "8,8,16");
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, |p| Ok(fs::write(p, "x")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x");
        let err = write_atomic(&dir.path().join("b.txt"), |p| {
            fs::write(p, "partial")?;
            Err(invalid("output", "boom"))
        });
        assert!(err.is_err());
        let left: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(left.len(), 1);
    }
}
