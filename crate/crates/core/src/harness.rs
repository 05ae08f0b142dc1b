//! Experiment runner: configuration, the end-to-end pipeline, persisted
//! outputs and parameter sweeps.
//!
//! Pipeline stages, in order: `geometry`, `coupling`, `continuous`,
//! `quantize`, `bisection`, `evaluation`, `output`. Errors carry the stage
//! name so a failed run says where it broke.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alphabet::PhaseAlphabet;
use crate::beam::{self, default_pattern, directivity, max_gain_direction, sidelobe_analysis, BeamPattern, GridSpec};
use crate::bisection::{bisection_solve, BisectionOutcome, BisectionParams, BisectionStep, QuboSolver, SaSolver};
use crate::cache::CouplingCache;
use crate::continuous::{quantize_weights, ratio_objective, solve_continuous_with, DEFAULT_B_REGULARIZATION};
use crate::coupling::{CouplingMatrices, CouplingMeta, CouplingSpec};
use crate::error::{Error, Result};
use crate::exhaustive::ExhaustiveSolver;
use crate::geometry::{build_planar_array, ArrayGeometry, Direction, TargetRegion};
use crate::sa::{EarlyStop, SaParams};

pub const REPORT_SCHEMA: &str = "phasebeam-report/1";
pub const TRACE_SCHEMA: &str = "phasebeam-qubo-trace/1";
pub const DEFAULT_MEMORY_BUDGET: u64 = 8 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Elements per side of the square grid.
    #[serde(rename = "N")]
    pub side: usize,
    #[serde(default = "half")]
    pub spacing_over_lambda: f64,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub theta_deg: f64,
    pub phi_deg: f64,
    #[serde(default = "default_cap_radius")]
    pub cap_radius_rad: f64,
}

fn default_cap_radius() -> f64 {
    0.05
}

impl TargetConfig {
    pub fn direction(&self) -> Direction {
        Direction::from_degrees(self.theta_deg, self.phi_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Sa,
    /// Exact enumeration; only for tiny instances.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub backend: Backend,
    pub tol: f64,
    pub alpha: f64,
    pub verify_upper: bool,
    /// Relative diagonal shift for a numerically singular `B` in the
    /// continuous baseline; `0` turns the fallback off.
    pub b_regularization: f64,
    /// Annealing parameters; `sa.seed` is replaced by the run seed.
    pub sa: SaParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let b = BisectionParams::default();
        Self {
            backend: Backend::Sa,
            tol: b.tol,
            alpha: b.alpha,
            verify_upper: b.verify_upper,
            b_regularization: DEFAULT_B_REGULARIZATION,
            sa: SaParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpiralConfig {
    pub count: usize,
    pub theta_max_deg: f64,
    pub turns: f64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            count: 100,
            theta_max_deg: 25.0,
            turns: beam::DEFAULT_SPIRAL_TURNS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub grid: GridSpec,
    pub spiral: SpiralConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsConfig {
    pub memory_budget_bytes: u64,
    /// Directory for cached coupling matrices; no caching when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Phase count K (2 or 4).
    #[serde(default = "default_phases")]
    pub phases: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub geometry: GeometryConfig,
    pub target: TargetConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
}

fn default_phases() -> usize {
    4
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Minimal config with every other field at its default.
    pub fn new(side: usize, theta_deg: f64, phi_deg: f64) -> Self {
        Self {
            seed: 0,
            phases: default_phases(),
            output_dir: default_output_dir(),
            geometry: GeometryConfig {
                side,
                spacing_over_lambda: half(),
                lambda: one(),
            },
            target: TargetConfig {
                theta_deg,
                phi_deg,
                cap_radius_rad: default_cap_radius(),
            },
            solver: SolverConfig::default(),
            coupling: CouplingSpec::default(),
            evaluation: EvaluationConfig::default(),
            limits: LimitsConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.geometry.side == 0 {
            return cfg("geometry.N must be at least 1".into());
        }
        if !(self.geometry.spacing_over_lambda > 0.0 && self.geometry.lambda > 0.0) {
            return cfg("geometry spacing and wavelength must be positive".into());
        }
        if self.phases != 2 && self.phases != 4 {
            return cfg(format!("phases must be 2 or 4, got {}", self.phases));
        }
        if !(self.target.cap_radius_rad > 0.0 && self.target.cap_radius_rad < std::f64::consts::FRAC_PI_2) {
            return cfg(format!("target.cap_radius_rad must lie in (0, π/2), got {}", self.target.cap_radius_rad));
        }
        if !(0.0..=180.0).contains(&self.target.theta_deg) || !self.target.phi_deg.is_finite() {
            return cfg("target angles out of range".into());
        }
        let reg = self.solver.b_regularization;
        if !(0.0..1.0).contains(&reg) {
            return cfg(format!("solver.b_regularization must lie in [0, 1), got {reg}"));
        }
        let demote = |e: Error| Error::Config(e.to_string());
        self.bisection_params().validate().map_err(demote)?;
        self.sa_params().validate().map_err(demote)?;
        self.coupling.cap_quadrature.validate().map_err(demote)?;
        if let crate::coupling::SphereMethod::Quadrature(q) = self.coupling.sphere {
            q.validate().map_err(demote)?;
        }
        let g = &self.evaluation.grid;
        if g.theta_steps == 0 || g.phi_steps == 0 || !(g.theta_max_deg > 0.0 && g.theta_max_deg <= 180.0) {
            return cfg("evaluation.grid needs positive steps and 0 < theta_max_deg ≤ 180".into());
        }
        if self.solver.backend == Backend::Exhaustive {
            let nv = self.variable_count();
            if nv > crate::exhaustive::MAX_EXHAUSTIVE_VARS {
                return cfg(format!("exhaustive back-end supports at most {} variables, this run has {nv}", crate::exhaustive::MAX_EXHAUSTIVE_VARS));
            }
        }
        Ok(())
    }

    pub fn elements(&self) -> usize {
        self.geometry.side * self.geometry.side
    }

    pub fn variable_count(&self) -> usize {
        self.elements() * if self.phases == 4 { 2 } else { 1 }
    }

    pub fn bisection_params(&self) -> BisectionParams {
        BisectionParams {
            alpha: self.solver.alpha,
            tol: self.solver.tol,
            verify_upper: self.solver.verify_upper,
            ..BisectionParams::default()
        }
    }

    /// Annealing parameters actually used, with the run seed applied.
    pub fn sa_params(&self) -> SaParams {
        SaParams {
            seed: self.seed,
            ..self.solver.sa
        }
    }

    /// Rough peak memory of a run: `A`, `B`, the eigen workspace, both
    /// coefficient forms, the QUBO and the annealer's coupling copy.
    pub fn estimated_memory_bytes(&self) -> u64 {
        let n = self.elements() as u64;
        let nv = self.variable_count() as u64;
        let complex = 16 * n * n;
        let eigen = if n as usize <= crate::continuous::DENSE_EIGEN_LIMIT { 3 * complex } else { complex };
        2 * complex + eigen + 4 * 8 * nv * nv
    }

    pub fn check_memory(&self) -> Result<()> {
        let need = self.estimated_memory_bytes();
        let budget = self.limits.memory_budget_bytes;
        if need > budget {
            return Err(Error::Config(format!(
                "run needs about {:.1} GiB of dense matrices but the budget is {:.1} GiB; \
                 reduce geometry.N, use phases = 2, or raise limits.memory_budget_bytes",
                need as f64 / (1u64 << 30) as f64,
                budget as f64 / (1u64 << 30) as f64
            )));
        }
        Ok(())
    }

    /// Stable identifier: first 16 hex digits of the SHA-256 of the
    /// canonical JSON form (which includes the seed).
    pub fn run_id(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))[..16].to_string()
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let g = &self.geometry;
        build_planar_array(g.side, g.spacing_over_lambda * g.lambda, g.lambda)
    }

    pub fn region(&self) -> Result<TargetRegion> {
        TargetRegion::new(self.target.direction(), self.target.cap_radius_rad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl From<Direction> for Angles {
    fn from(d: Direction) -> Self {
        Self {
            theta_deg: d.theta_deg(),
            phi_deg: d.phi_deg(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub label: String,
    /// `w^H A w / w^H B w`.
    pub ratio: f64,
    /// Directivity at the peak, dBi.
    pub max_gain_db: f64,
    pub max_gain_direction: Angles,
    /// Great-circle distance from the peak to the target, degrees.
    pub pointing_error_deg: f64,
    /// Directivity towards the target, dBi.
    pub target_gain_db: f64,
    pub peak_sidelobe_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Methods {
    pub continuous: MethodReport,
    pub discrete: MethodReport,
    pub quantized: MethodReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub run_id: String,
    pub elements: usize,
    pub variables: usize,
    pub lambda_max: f64,
    pub t_star: f64,
    /// Ratio of the returned discrete configuration.
    pub achieved_ratio: f64,
    pub t_updates: usize,
    pub bits_explored: u64,
    pub solver: String,
    pub methods: Methods,
    pub coupling: CouplingMeta,
    pub bisection: BisectionParams,
    pub sa: SaParams,
    pub warnings: Vec<String>,
    pub config: RunConfig,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboTrace {
    pub schema: String,
    pub run_id: String,
    pub steps: Vec<BisectionStep>,
    pub final_bits: Vec<u8>,
}

/// Everything a run computes, kept in memory for callers that want more than
/// the report.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub trace: QuboTrace,
    pub patterns: Vec<(&'static str, BeamPattern)>,
    pub weights: Vec<(&'static str, DVector<Complex64>)>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

struct Evaluated {
    report: MethodReport,
    pattern: BeamPattern,
}

fn evaluate_method(
    label: &str,
    w: &DVector<Complex64>,
    geometry: &ArrayGeometry,
    matrices: &CouplingMatrices,
    target: &Direction,
    grid: &GridSpec,
) -> Result<Evaluated> {
    let pattern = default_pattern(w, geometry, grid)?;
    let peak = max_gain_direction(&pattern, w, geometry)?;
    let dbi = |d: f64| 10.0 * d.log10();
    Ok(Evaluated {
        report: MethodReport {
            label: label.to_string(),
            ratio: ratio_objective(w, &matrices.a, &matrices.b)?,
            max_gain_db: dbi(directivity(w, geometry, &matrices.b, &peak.direction)?),
            max_gain_direction: peak.direction.into(),
            pointing_error_deg: peak.direction.angle_to(target).to_degrees(),
            target_gain_db: dbi(directivity(w, geometry, &matrices.b, target)?),
            peak_sidelobe_db: sidelobe_analysis(&pattern).peak_sidelobe_db,
        },
        pattern,
    })
}

/// Run the pipeline without touching the filesystem (except the optional
/// coupling cache).
pub fn execute(config: &RunConfig) -> Result<RunArtifacts> {
    let started = Instant::now();
    stage("config", config.validate())?;
    stage("config", config.check_memory())?;
    let geometry = stage("geometry", config.geometry())?;
    let region = stage("geometry", config.region())?;
    let alphabet = stage("geometry", PhaseAlphabet::with_phase_count(config.phases))?;

    let matrices = stage(
        "coupling",
        match &config.limits.cache_dir {
            Some(dir) => CouplingCache::new(dir).get_or_build(&geometry, &region, &config.coupling),
            None => CouplingMatrices::build(&geometry, &region, &config.coupling),
        },
    )?;

    let continuous = stage(
        "continuous",
        solve_continuous_with(&matrices.a, &matrices.b, config.solver.b_regularization),
    )?;
    let quantized = quantize_weights(&continuous.weights, &alphabet);

    let sa = config.sa_params();
    let bisection = config.bisection_params();
    let mut solver: Box<dyn QuboSolver> = match config.solver.backend {
        Backend::Sa => Box::new(SaSolver::new(sa)),
        Backend::Exhaustive => Box::new(ExhaustiveSolver),
    };
    let outcome: BisectionOutcome = stage(
        "bisection",
        bisection_solve(&matrices.a, &matrices.b, &alphabet, solver.as_mut(), &bisection),
    )?;

    let target = config.target.direction();
    let grid = &config.evaluation.grid;
    let k = config.phases;
    let labels = [
        ("continuous", "continuous".to_string(), &continuous.weights.w),
        ("discrete", format!("discrete-{k}"), &outcome.weights.w),
        ("quantized", format!("quantized-{k}"), &quantized.w),
    ];
    let mut evaluated = Vec::with_capacity(3);
    for (_, label, w) in &labels {
        evaluated.push(stage("evaluation", evaluate_method(label, w, &geometry, &matrices, &target, grid))?);
    }
    let mut it = evaluated.into_iter();
    let (c, d, q) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());

    let mut warnings = Vec::new();
    if continuous.b_shift > 0.0 {
        warnings.push(format!(
            "B is numerically singular; continuous baseline solved with B + {:.3e} I",
            continuous.b_shift
        ));
    }
    warnings.extend(outcome.warnings.iter().cloned());

    let run_id = config.run_id();
    let report = RunReport {
        schema: REPORT_SCHEMA.into(),
        run_id: run_id.clone(),
        elements: geometry.len(),
        variables: alphabet.variable_count(geometry.len()),
        lambda_max: continuous.lambda_max,
        t_star: outcome.t_star,
        achieved_ratio: outcome.achieved_ratio,
        t_updates: outcome.t_updates(),
        bits_explored: outcome.total_bits_explored,
        solver: solver.describe(),
        methods: Methods {
            continuous: c.report,
            discrete: d.report,
            quantized: q.report,
        },
        coupling: matrices.meta.clone(),
        bisection,
        sa,
        warnings,
        config: config.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let trace = QuboTrace {
        schema: TRACE_SCHEMA.into(),
        run_id,
        steps: outcome.history,
        final_bits: outcome.bits,
    };
    Ok(RunArtifacts {
        report,
        trace,
        patterns: vec![("continuous", c.pattern), ("discrete", d.pattern), ("quantized", q.pattern)],
        weights: vec![
            ("continuous", continuous.weights.w),
            ("discrete", outcome.weights.w),
            ("quantized", quantized.w),
        ],
    })
}

fn write_outputs(dir: &Path, artifacts: &RunArtifacts, target: &Direction) -> Result<()> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    let report_path = dir.join("report.json");
    fs::write(&report_path, pretty_json(&artifacts.report)).map_err(|e| Error::io(&report_path, e))?;
    let trace_path = dir.join("qubo_trace.json");
    fs::write(&trace_path, pretty_json(&artifacts.trace)).map_err(|e| Error::io(&trace_path, e))?;
    for (name, pattern) in &artifacts.patterns {
        let csv_path = dir.join(format!("pattern_{name}.csv"));
        let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        pattern.write_csv(std::io::BufWriter::new(file))?;
        let svg_path = plots.join(format!("pattern_{name}.svg"));
        let title = format!("{name} weights, normalized gain");
        fs::write(&svg_path, pattern.to_svg(&title, Some(target))).map_err(|e| Error::io(&svg_path, e))?;
    }
    Ok(())
}

pub fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Run the pipeline and persist its outputs under
/// `<output_dir>/<run-id>/`. Outputs are staged in a sibling directory and
/// moved into place only when everything succeeded.
pub fn run_experiment(config: &RunConfig) -> Result<RunReport> {
    let artifacts = execute(config)?;
    let root = &config.output_dir;
    let run_id = &artifacts.report.run_id;
    let final_dir = root.join(run_id);
    let staging = root.join(format!(".{run_id}.partial"));
    let result = (|| {
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        write_outputs(&staging, &artifacts, &config.target.direction())?;
        if final_dir.exists() {
            fs::remove_dir_all(&final_dir).map_err(|e| Error::io(&final_dir, e))?;
        }
        fs::rename(&staging, &final_dir).map_err(|e| Error::io(&final_dir, e))
    })();
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&staging);
        return Err(e.in_stage("output"));
    }
    Ok(artifacts.report)
}

pub fn output_dir_for(config: &RunConfig) -> PathBuf {
    config.output_dir.join(config.run_id())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    ElementCount,
    Spiral,
    Timing,
}

impl SweepMode {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMode::ElementCount => "element-count",
            SweepMode::Spiral => "spiral",
            SweepMode::Timing => "timing",
        }
    }
}

/// A sweep file: one mode and the runs to aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub mode: SweepMode,
    pub runs: Vec<RunConfig>,
}

impl SweepFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for run in &file.runs {
            run.validate()?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Concatenate several sweep files; they must share one mode.
    pub fn merge(files: Vec<SweepFile>) -> Result<SweepFile> {
        let mut iter = files.into_iter();
        let mut merged = iter.next().ok_or_else(|| Error::Config("no sweep files given".into()))?;
        for f in iter {
            if f.mode != merged.mode {
                return Err(Error::Config(format!(
                    "cannot mix sweep modes `{}` and `{}`",
                    merged.mode.name(),
                    f.mode.name()
                )));
            }
            merged.runs.extend(f.runs);
        }
        Ok(merged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementCountRow {
    #[serde(rename = "N")]
    pub side: usize,
    pub elements: usize,
    pub phases: usize,
    pub continuous_gain_db: f64,
    pub discrete_gain_db: f64,
    pub quantized_gain_db: f64,
    pub lambda_max: f64,
    pub t_star: f64,
    pub t_updates: usize,
    pub bits_explored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralRow {
    pub theta: f64,
    pub phi: f64,
    pub max_gain_db: f64,
    pub achieved_theta: f64,
    pub achieved_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    #[serde(rename = "N")]
    pub side: usize,
    pub phases: usize,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub early_stop: String,
    pub t_star: f64,
    pub t_updates: usize,
    pub bits_explored: u64,
    /// Bits explored relative to the `off` run of the same config.
    pub normalized_bits: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRows {
    ElementCount(Vec<ElementCountRow>),
    Spiral(Vec<SpiralRow>),
    Timing(Vec<TimingRow>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub rows: SweepRows,
    pub csv: String,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = wr.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Run every config in memory and aggregate one CSV for the mode.
///
/// * element-count: one row per config.
/// * spiral: each config is expanded into its `evaluation.spiral` targets,
///   one row per target.
/// * timing: each config is run with early stopping off, C1 and C1+C2 on the
///   same seed, one row per mode.
pub fn run_sweep(configs: &[RunConfig], mode: SweepMode) -> Result<SweepResult> {
    if configs.is_empty() {
        return Err(Error::Config("sweep needs at least one config".into()));
    }
    for c in configs {
        c.validate()?;
    }
    let (rows, csv) = match mode {
        SweepMode::ElementCount => {
            let mut rows = Vec::new();
            for c in configs {
                let r = execute(c)?.report;
                rows.push(ElementCountRow {
                    side: c.geometry.side,
                    elements: r.elements,
                    phases: c.phases,
                    continuous_gain_db: r.methods.continuous.max_gain_db,
                    discrete_gain_db: r.methods.discrete.max_gain_db,
                    quantized_gain_db: r.methods.quantized.max_gain_db,
                    lambda_max: r.lambda_max,
                    t_star: r.t_star,
                    t_updates: r.t_updates,
                    bits_explored: r.bits_explored,
                });
            }
            let csv = to_csv(&rows)?;
            (SweepRows::ElementCount(rows), csv)
        }
        SweepMode::Spiral => {
            let mut rows = Vec::new();
            for c in configs {
                let s = &c.evaluation.spiral;
                let targets = beam::spiral_targets(s.count, s.theta_max_deg.to_radians(), s.turns)
                    .map_err(|e| Error::Config(e.to_string()))?;
                for t in targets {
                    let mut run = c.clone();
                    run.target.theta_deg = t.theta_deg();
                    run.target.phi_deg = t.phi_deg();
                    let r = execute(&run)?.report;
                    let m = &r.methods.discrete;
                    rows.push(SpiralRow {
                        theta: run.target.theta_deg,
                        phi: run.target.phi_deg,
                        max_gain_db: m.max_gain_db,
                        achieved_theta: m.max_gain_direction.theta_deg,
                        achieved_phi: m.max_gain_direction.phi_deg,
                    });
                }
            }
            let csv = to_csv(&rows)?;
            (SweepRows::Spiral(rows), csv)
        }
        SweepMode::Timing => {
            let mut rows = Vec::new();
            for c in configs {
                let mut base_bits = None;
                for (name, es) in [("off", EarlyStop::Off), ("c1", EarlyStop::C1), ("c1c2", EarlyStop::C1C2)] {
                    let mut run = c.clone();
                    run.solver.sa.early_stop = es;
                    let r = execute(&run)?.report;
                    let base = *base_bits.get_or_insert(r.bits_explored);
                    rows.push(TimingRow {
                        side: c.geometry.side,
                        phases: c.phases,
                        theta_deg: c.target.theta_deg,
                        phi_deg: c.target.phi_deg,
                        early_stop: name.into(),
                        t_star: r.t_star,
                        t_updates: r.t_updates,
                        bits_explored: r.bits_explored,
                        normalized_bits: r.bits_explored as f64 / base.max(1) as f64,
                        wall_time_s: r.wall_time_s,
                    });
                }
            }
            let csv = to_csv(&rows)?;
            (SweepRows::Timing(rows), csv)
        }
    };
    Ok(SweepResult { mode, rows, csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaustive::brute_force_ratio;

    fn tiny(backend: Backend) -> RunConfig {
        let mut c = RunConfig::new(2, 20.0, 40.0);
        c.phases = 2;
        c.solver.backend = backend;
        c.evaluation.grid = GridSpec {
            theta_steps: 19,
            phi_steps: 37,
            theta_max_deg: 90.0,
        };
        c
    }

    #[test]
    fn toml_round_trip() {
        let mut c = tiny(Backend::Sa);
        c.solver.sa.g_midpoint = Some(3.0);
        c.coupling.sphere = crate::coupling::SphereMethod::Quadrature(crate::quadrature::QuadratureSpec::new(32, 64).unwrap());
        c.limits.cache_dir = Some("cache".into());
        let text = c.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn minimal_toml_fills_defaults() {
        let c = RunConfig::from_toml_str(
            "[geometry]\nN = 4\n[target]\ntheta_deg = 10.0\nphi_deg = 30.0\n",
        )
        .unwrap();
        assert_eq!(c.phases, 4);
        assert_eq!(c.geometry.spacing_over_lambda, 0.5);
        assert_eq!(c.target.cap_radius_rad, 0.05);
        assert_eq!(c.solver.sa, SaParams::default());
        assert_eq!(c.solver.tol, 1e-6);
    }

    #[test]
    fn unknown_keys_rejected() {
        let base = "[geometry]\nN = 4\n[target]\ntheta_deg = 10.0\nphi_deg = 30.0\n";
        for extra in ["bogus = 1\n", "[solver]\nbogus = 1\n", "[solver.sa]\nsweep = 3\n", "[coupling]\nnodes = 3\n"] {
            let text = if extra.starts_with('[') { format!("{base}{extra}") } else { format!("{extra}{base}") };
            let err = RunConfig::from_toml_str(&text).unwrap_err();
            assert!(err.is_config(), "{extra}: {err}");
        }
        assert!(RunConfig::from_toml_str(&format!("phases = 3\n{base}")).unwrap_err().is_config());
    }

    #[test]
    fn exhaustive_run_matches_oracle() {
        let c = tiny(Backend::Exhaustive);
        let art = execute(&c).unwrap();
        let g = c.geometry().unwrap();
        let m = CouplingMatrices::build(&g, &c.region().unwrap(), &c.coupling).unwrap();
        let oracle = brute_force_ratio(&m.a, &m.b, &PhaseAlphabet::binary()).unwrap();
        assert!((art.report.t_star - oracle.ratio).abs() < 1e-6);
        assert!(art.report.t_updates <= 20);
        assert_eq!(art.report.schema, REPORT_SCHEMA);
    }

    #[test]
    fn run_writes_layout_and_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(Backend::Sa);
        c.output_dir = dir.path().to_path_buf();
        let strip = |p: &Path| {
            let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
            v.as_object_mut().unwrap().remove("wall_time_s");
            v.to_string()
        };
        let r1 = run_experiment(&c).unwrap();
        let out = output_dir_for(&c);
        let first = strip(&out.join("report.json"));
        for f in ["report.json", "qubo_trace.json", "pattern_continuous.csv", "pattern_discrete.csv", "pattern_quantized.csv", "plots/pattern_discrete.svg"] {
            assert!(out.join(f).exists(), "{f}");
        }
        let r2 = run_experiment(&c).unwrap();
        assert_eq!(first, strip(&out.join("report.json")));
        assert_eq!(r1.t_star, r2.t_star);
        assert!(!dir.path().join(format!(".{}.partial", r1.run_id)).exists());

        let mut other = c.clone();
        other.seed = 1;
        assert_ne!(other.run_id(), c.run_id());
    }

    #[test]
    fn memory_guard() {
        let mut c = RunConfig::new(100, 10.0, 10.0);
        assert!(c.check_memory().is_err());
        c.limits.memory_budget_bytes = 1 << 40;
        assert!(c.check_memory().is_ok());
        let err = execute(&RunConfig::new(100, 10.0, 10.0)).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("config"));
    }

    #[test]
    fn errors_carry_stage_and_leave_no_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny(Backend::Sa);
        c.output_dir = dir.path().to_path_buf();
        c.solver.sa.batches = 0;
        let err = run_experiment(&c).unwrap_err();
        assert!(err.to_string().contains("stage `config`"));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn dense_spacing_falls_back_to_shifted_b() {
        let mut c = tiny(Backend::Exhaustive);
        c.geometry.spacing_over_lambda = 1e-6;
        let art = execute(&c).unwrap();
        assert!(art.report.warnings.iter().any(|w| w.contains("singular")));
        c.solver.b_regularization = 0.0;
        let err = execute(&c).unwrap_err();
        assert!(err.to_string().contains("stage `continuous`"));
    }

    #[test]
    fn sweep_modes() {
        let mut cfgs: Vec<RunConfig> = [2, 3].iter().map(|&n| {
            let mut c = tiny(Backend::Exhaustive);
            c.geometry.side = n;
            c
        }).collect();
        let r = run_sweep(&cfgs, SweepMode::ElementCount).unwrap();
        assert_eq!(r.csv.lines().count(), 3);
        assert!(r.csv.starts_with("N,elements,phases,continuous_gain_db"));

        cfgs.truncate(1);
        cfgs[0].evaluation.spiral = SpiralConfig { count: 3, theta_max_deg: 20.0, turns: 1.0 };
        let r = run_sweep(&cfgs, SweepMode::Spiral).unwrap();
        assert_eq!(r.csv.lines().next().unwrap(), "theta,phi,max_gain_db,achieved_theta,achieved_phi");
        assert_eq!(r.csv.lines().count(), 4);

        cfgs[0].evaluation.spiral.count = 0;
        assert!(run_sweep(&cfgs, SweepMode::Spiral).unwrap_err().is_config());
        assert!(run_sweep(&[], SweepMode::Timing).is_err());
    }

    #[test]
    fn heterogeneous_sweep_files_rejected() {
        let a = SweepFile { mode: SweepMode::Spiral, runs: vec![tiny(Backend::Sa)] };
        let b = SweepFile { mode: SweepMode::Timing, runs: vec![tiny(Backend::Sa)] };
        assert!(SweepFile::merge(vec![a.clone(), a.clone()]).is_ok());
        assert!(SweepFile::merge(vec![a, b]).unwrap_err().is_config());
    }
}
