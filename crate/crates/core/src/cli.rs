//! Batch front end: reads a JSON run configuration, runs one experiment and
//! writes its outputs into a directory.
//!
//! Exit codes: 0 consistent pass / success, 1 consistent fail, 2
//! indeterminate or inconsistent, 64 configuration error, 70 numerical or
//! I/O failure.
//!
//! Every run writes the configuration verbatim (`config.json`), a
//! deterministic `report.json`, and `run.json` with timing and thread data,
//! which is kept out of the report so that repeated runs compare equal.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::calculus::{delta1, flat_omega, hamiltonian};
use crate::criteria::detection::{detection_integral, limit_target, BumpSpec};
use crate::criteria::{identity_battery, run_criteria_suite, SuiteOptions, Tolerances, Verdict, IDENTITY_TOL, SCHEMA_VERSION};
use crate::error::{GeoError, Result};
use crate::euler_arnold::{evolve, FlowContext, Group, IntegratorConfig};
use crate::fieldexpr::eval_expression;
use crate::fields::{MetricField, OneFormField, ScalarField};
use crate::geometry::{christoffels, gauss_curvature, SymTensorField};
use crate::grid::{DiffMode, GridSpec};
use crate::hodge::{hodge_decompose_with, harmonic_basis, solve_range};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;
pub const EXIT_SOFTWARE: i32 = 70;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "GEOFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "geoflow", version, about = "Geodesic flows and flatness criteria on metric tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every flatness condition and report their verdicts.
    Verify(RunArgs),
    /// Integrate the geodesic equation from a Hamiltonian initial field.
    Evolve(RunArgs),
    /// Hodge-decompose a 1-form.
    Decompose(RunArgs),
    /// Tabulate the concentrated-field detection integral against its limit.
    Detect(RunArgs),
    /// Run the battery of structural identities.
    Identities(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis (overrides `grid.n`).
    #[arg(long)]
    n: Option<usize>,
    /// Differentiation mode (overrides `grid.mode`).
    #[arg(long)]
    mode: Option<DiffMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Verify,
    Evolve,
    Decompose,
    Detect,
    Identities,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::Evolve => "evolve",
            Experiment::Decompose => "decompose",
            Experiment::Detect => "detect",
            Experiment::Identities => "identities",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub mode: DiffMode,
}

fn default_n() -> usize {
    64
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: default_n(), mode: DiffMode::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Flat,
    /// `e^{2φ}(dx² + dy²)`.
    Conformal,
    /// Arbitrary SPD components.
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub kind: MetricKind,
    pub phi: Option<String>,
    pub g11: Option<String>,
    pub g12: Option<String>,
    pub g22: Option<String>,
}

/// A 1-form `dx`, `dy` coefficient pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormConfig {
    pub dx: String,
    pub dy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorConfig {
    pub t11: String,
    pub t12: String,
    pub t22: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub heatmaps: bool,
}

/// The complete run configuration. Experiment-specific fields are optional
/// and ignored by experiments that do not use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub metric: MetricConfig,
    /// Label copied into reports; defaults to the metric kind.
    pub metric_id: Option<String>,
    /// If present, must match the subcommand.
    pub experiment: Option<Experiment>,
    /// Initial stream function for `evolve`.
    pub f0: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub group: Option<Group>,
    pub reproject_every: Option<usize>,
    pub record_every: Option<usize>,
    /// 1-form for `decompose`.
    pub alpha: Option<FormConfig>,
    /// Bump widths for `detect`.
    pub eps: Option<Vec<f64>>,
    /// Tensor probed by `detect`; defaults to the metric.
    pub tensor: Option<TensorConfig>,
    /// Bump centre node for `detect`; defaults to the middle of the grid.
    pub center: Option<[usize; 2]>,
    /// Verdict thresholds for `verify`.
    pub tolerances: Option<Tolerances>,
    /// Pass threshold for `identities`.
    pub identity_tolerance: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeoError::Config(format!("config: {e}")))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.mode)
    }

    fn expr(&self, src: &str, grid: &GridSpec, what: &str) -> Result<ScalarField> {
        eval_expression(src, grid).map_err(|e| GeoError::Config(format!("{what}: {e}")))
    }

    /// Builds and validates the metric.
    pub fn build_metric(&self) -> Result<MetricField> {
        let grid = self.grid_spec()?;
        let need = |v: &Option<String>, name: &str| {
            v.clone().ok_or_else(|| GeoError::Config(format!("metric.{name} is required for kind {:?}", self.metric.kind)))
        };
        let m = &self.metric;
        let metric = match m.kind {
            MetricKind::Flat => Ok(MetricField::flat(grid)),
            MetricKind::Conformal => MetricField::conformal(&self.expr(&need(&m.phi, "phi")?, &grid, "metric.phi")?),
            MetricKind::General => MetricField::from_components(
                &self.expr(&need(&m.g11, "g11")?, &grid, "metric.g11")?,
                &self.expr(&need(&m.g12, "g12")?, &grid, "metric.g12")?,
                &self.expr(&need(&m.g22, "g22")?, &grid, "metric.g22")?,
            ),
        };
        metric.map_err(|e| match e {
            GeoError::NotPositiveDefinite { .. } | GeoError::NonFinite { .. } => GeoError::Config(format!("metric: {e}")),
            other => other,
        })
    }

    pub fn metric_label(&self) -> String {
        self.metric_id.clone().unwrap_or_else(|| {
            match self.metric.kind {
                MetricKind::Flat => "flat",
                MetricKind::Conformal => "conformal",
                MetricKind::General => "general",
            }
            .to_string()
        })
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let d = IntegratorConfig::default();
        IntegratorConfig {
            dt: self.dt.unwrap_or(d.dt),
            t_end: self.t_end.unwrap_or(d.t_end),
            group: self.group.unwrap_or(d.group),
            reproject_every: self.reproject_every.unwrap_or(d.reproject_every),
            record_every: self.record_every.unwrap_or(d.record_every),
            snapshots: self.output.snapshots,
        }
    }
}

/// Maps an error to the exit-code contract.
pub fn exit_code_for(e: &GeoError) -> i32 {
    match e {
        GeoError::InvalidGrid(_)
        | GeoError::ShapeMismatch { .. }
        | GeoError::GridMismatch { .. }
        | GeoError::NonFinite { .. }
        | GeoError::NotPositiveDefinite { .. }
        | GeoError::Parse { .. }
        | GeoError::Eval { .. }
        | GeoError::EpsTooSmall { .. }
        | GeoError::NotHarmonic(_)
        | GeoError::NotClosed(_)
        | GeoError::Config(_) => EXIT_CONFIG,
        GeoError::IncompatibleRhs { .. }
        | GeoError::NoConvergence { .. }
        | GeoError::NotDivergenceFree(_)
        | GeoError::NotSymplectic(_)
        | GeoError::CflViolation { .. }
        | GeoError::NanDetected { .. }
        | GeoError::Io(_) => EXIT_SOFTWARE,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub n: usize,
    pub mode: String,
}

impl GridReport {
    fn of(g: &MetricField) -> Self {
        GridReport { n: g.grid().n(), mode: g.grid().mode().to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub schema_version: u32,
    pub command: String,
    pub metric_id: String,
    pub grid: GridReport,
    pub group: Group,
    pub dt: f64,
    pub steps: usize,
    pub t_end: f64,
    pub max_harmonic_drift: f64,
    pub energy_drift: f64,
    pub max_div_norm: f64,
    pub final_energy: f64,
    pub final_coefficients: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartNorms {
    pub exact: f64,
    pub coexact: f64,
    pub harmonic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub schema_version: u32,
    pub command: String,
    pub metric_id: String,
    pub grid: GridReport,
    /// Gram matrix of (exact, coexact, harmonic).
    pub orthogonality: [[f64; 3]; 3],
    pub orthogonality_defect: f64,
    pub reconstruction_defect: f64,
    pub norms: PartNorms,
    /// `⟨φ, β_i⟩` against the orthonormal harmonic basis.
    pub harmonic_coefficients: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRow {
    pub eps: f64,
    pub value: f64,
    pub limit_target: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub schema_version: u32,
    pub command: String,
    pub metric_id: String,
    pub grid: GridReport,
    pub center: [usize; 2],
    pub rows: Vec<DetectRow>,
    /// Errors strictly decrease as `eps` decreases.
    pub monotone: bool,
    /// Successive error ratios (≈ 4 for halved widths).
    pub error_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitiesReport {
    pub schema_version: u32,
    pub command: String,
    pub metric_id: String,
    pub grid: GridReport,
    pub tolerance: f64,
    pub all_pass: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunInfo {
    command: String,
    version: String,
    threads: usize,
    wall_time_ms: u128,
    exit_code: i32,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| GeoError::Io(e.to_string()))?;
    s.push('\n');
    write(path, s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HeatmapScale {
    field: String,
    n: usize,
    min: f64,
    max: f64,
    /// Image row 0 is the largest `y`; column 0 is `x = 0`.
    orientation: String,
}

/// Writes `<name>.pgm` (8-bit, min–max normalized) and `<name>.json` with
/// the scale.
pub fn write_heatmap(dir: &Path, name: &str, f: &ScalarField) -> Result<()> {
    let n = f.grid().n();
    let v = f.values();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let span = hi - lo;
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    for j in (0..n).rev() {
        for i in 0..n {
            let t = if span > 0.0 { (v[j * n + i] - lo) / span } else { 0.0 };
            bytes.push((t * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    write(&dir.join(format!("{name}.pgm")), bytes)?;
    let scale = HeatmapScale { field: name.into(), n, min: lo, max: hi, orientation: "row 0 = largest y".into() };
    write_json(&dir.join(format!("{name}.json")), &scale)
}

fn write_form(dir: &Path, name: &str, phi: &OneFormField) -> Result<()> {
    write(&dir.join(format!("{name}_dx.csv")), phi.x_field().to_csv(&format!("{name}_dx")))?;
    write(&dir.join(format!("{name}_dy.csv")), phi.y_field().to_csv(&format!("{name}_dy")))
}

fn verdict_code(v: Verdict, consistent: bool) -> i32 {
    match (v, consistent) {
        (Verdict::Pass, true) => EXIT_OK,
        (Verdict::Fail, true) => EXIT_FAIL,
        _ => EXIT_INDETERMINATE,
    }
}

fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let g = cfg.build_metric()?;
    let opts = SuiteOptions {
        metric_id: cfg.metric_label(),
        tolerances: cfg.tolerances.unwrap_or_default(),
        parallel: true,
    };
    let report = run_criteria_suite(&g, &opts)?;
    write_json(&out.join("report.json"), &report)?;
    if cfg.output.heatmaps {
        write_heatmap(out, "gauss_curvature", &gauss_curvature(&g, &christoffels(&g)))?;
    }
    Ok(verdict_code(report.verdict, report.theorem_consistency))
}

/// Stream function of a (nearly) Hamiltonian field: `Δψ = δ♭_ω X`.
fn stream_function(x: &crate::fields::VectorField, g: &MetricField) -> Result<ScalarField> {
    solve_range(&delta1(&flat_omega(x, g), g), g)
}

fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let g = cfg.build_metric()?;
    let src = cfg.f0.as_deref().ok_or_else(|| GeoError::Config("evolve requires f0".into()))?;
    let f0 = cfg.expr(src, g.grid(), "f0")?;
    let icfg = cfg.integrator();
    let ctx = FlowContext::new(g.clone())?;
    let x0 = hamiltonian(&f0, &g);
    let tr = evolve(&x0, &icfg, &ctx)?;
    write(&out.join("trajectory.csv"), tr.to_csv())?;
    if cfg.output.snapshots {
        let dir = out.join("snapshots");
        fs::create_dir_all(&dir).map_err(|e| GeoError::Io(format!("{}: {e}", dir.display())))?;
        for (k, (_, x)) in tr.snapshots.iter().enumerate() {
            write(&dir.join(format!("x1_{k:04}.csv")), x.x_field().to_csv("X1"))?;
            write(&dir.join(format!("x2_{k:04}.csv")), x.y_field().to_csv("X2"))?;
        }
    }
    if cfg.output.heatmaps {
        write_heatmap(out, "stream_initial", &stream_function(&x0, &g)?)?;
        write_heatmap(out, "stream_final", &stream_function(&tr.final_state.x, &g)?)?;
    }
    let report = EvolveReport {
        schema_version: SCHEMA_VERSION,
        command: "evolve".into(),
        metric_id: cfg.metric_label(),
        grid: GridReport::of(&g),
        group: icfg.group,
        dt: tr.dt,
        steps: tr.steps,
        t_end: icfg.t_end,
        max_harmonic_drift: tr.max_abs_coeff(),
        energy_drift: tr.energy_drift(),
        max_div_norm: tr.max_div_norm(),
        final_energy: tr.final_state.energy,
        final_coefficients: tr.final_state.harmonic_coeffs,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(EXIT_OK)
}

fn cmd_decompose(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let g = cfg.build_metric()?;
    let a = cfg.alpha.as_ref().ok_or_else(|| GeoError::Config("decompose requires alpha {dx, dy}".into()))?;
    let phi = OneFormField::from_scalars(&cfg.expr(&a.dx, g.grid(), "alpha.dx")?, &cfg.expr(&a.dy, g.grid(), "alpha.dy")?);
    let basis = harmonic_basis(&g)?;
    let split = hodge_decompose_with(&phi, &g, &basis)?;
    use crate::calculus::{inner_product, norm};
    let report = DecomposeReport {
        schema_version: SCHEMA_VERSION,
        command: "decompose".into(),
        metric_id: cfg.metric_label(),
        grid: GridReport::of(&g),
        orthogonality: split.orthogonality(&g)?,
        orthogonality_defect: split.orthogonality_defect(&g)?,
        reconstruction_defect: split.reconstruction_defect(&phi, &g),
        norms: PartNorms {
            exact: norm(&split.exact, &g),
            coexact: norm(&split.coexact, &g),
            harmonic: norm(&split.harmonic, &g),
        },
        harmonic_coefficients: [inner_product(&phi, &basis.beta[0], &g)?, inner_product(&phi, &basis.beta[1], &g)?],
    };
    write_form(out, "exact", &split.exact)?;
    write_form(out, "coexact", &split.coexact)?;
    write_form(out, "harmonic", &split.harmonic)?;
    if cfg.output.heatmaps {
        write_heatmap(out, "exact_potential", &split.f)?;
        write_heatmap(out, "coexact_potential", &split.a.density_field())?;
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(EXIT_OK)
}

fn cmd_detect(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let g = cfg.build_metric()?;
    let n = g.grid().n();
    let t = match &cfg.tensor {
        Some(tc) => SymTensorField::new(
            &cfg.expr(&tc.t11, g.grid(), "tensor.t11")?,
            &cfg.expr(&tc.t12, g.grid(), "tensor.t12")?,
            &cfg.expr(&tc.t22, g.grid(), "tensor.t22")?,
        ),
        None => SymTensorField::from_metric(&g),
    };
    let center = cfg.center.unwrap_or([n / 2, n / 2]);
    let eps = cfg.eps.clone().unwrap_or_else(|| vec![1.0, 0.5, 0.25]);
    if eps.is_empty() {
        return Err(GeoError::Config("eps list is empty".into()));
    }
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let spec = BumpSpec { center: (center[0], center[1]), eps: e };
        let value = detection_integral(&t, &spec, &g)?;
        let target = limit_target(&t, &spec, &g)?;
        rows.push(DetectRow { eps: e, value, limit_target: target, error: (value - target).abs() });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let monotone = sorted.windows(2).all(|w| w[1].error < w[0].error);
    let error_ratios = sorted.windows(2).map(|w| w[0].error / w[1].error).collect();
    let mut csv = String::from("eps,value,limit_target,error\n");
    for r in &rows {
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", r.eps, r.value, r.limit_target, r.error));
    }
    write(&out.join("detection.csv"), csv)?;
    let report = DetectReport {
        schema_version: SCHEMA_VERSION,
        command: "detect".into(),
        metric_id: cfg.metric_label(),
        grid: GridReport::of(&g),
        center,
        rows,
        monotone,
        error_ratios,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(if monotone { EXIT_OK } else { EXIT_INDETERMINATE })
}

fn cmd_identities(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let g = cfg.build_metric()?;
    let tolerance = cfg.identity_tolerance.unwrap_or(IDENTITY_TOL);
    let rows = identity_battery(&g, tolerance)?;
    write_json(&out.join("residuals.json"), &rows)?;
    let all_pass = rows.iter().all(|r| r.pass);
    let report = IdentitiesReport {
        schema_version: SCHEMA_VERSION,
        command: "identities".into(),
        metric_id: cfg.metric_label(),
        grid: GridReport::of(&g),
        tolerance,
        all_pass,
        worst: rows.iter().fold(0.0, |m, r| m.max(r.residual)),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(if all_pass { EXIT_OK } else { EXIT_FAIL })
}

/// Runs one experiment on a parsed configuration, writing into `out`
/// (which must exist). Returns the exit code for completed runs.
pub fn execute(experiment: Experiment, cfg: &RunConfig, out: &Path) -> Result<i32> {
    if let Some(e) = cfg.experiment {
        if e != experiment {
            return Err(GeoError::Config(format!(
                "config is for experiment {:?} but {:?} was requested",
                e.name(),
                experiment.name()
            )));
        }
    }
    match experiment {
        Experiment::Verify => cmd_verify(cfg, out),
        Experiment::Evolve => cmd_evolve(cfg, out),
        Experiment::Decompose => cmd_decompose(cfg, out),
        Experiment::Detect => cmd_detect(cfg, out),
        Experiment::Identities => cmd_identities(cfg, out),
    }
}

fn configure_threads() -> Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|k| *k > 0)
            .ok_or_else(|| GeoError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // A pool may already exist when running several commands in one
        // process; the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(rayon::current_num_threads())
}

fn prepare(args: &RunArgs) -> Result<(RunConfig, String, PathBuf)> {
    let raw = fs::read_to_string(&args.config)
        .map_err(|e| GeoError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::from_json(&raw)?;
    if let Some(n) = args.n {
        cfg.grid.n = n;
    }
    if let Some(m) = args.mode {
        cfg.grid.mode = m;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("geoflow-out"));
    Ok((cfg, raw, out))
}

fn run_command(experiment: Experiment, args: &RunArgs) -> i32 {
    let start = Instant::now();
    let result = (|| -> Result<(i32, PathBuf, usize)> {
        let threads = configure_threads()?;
        let (cfg, raw, out) = prepare(args)?;
        fs::create_dir_all(&out).map_err(|e| GeoError::Io(format!("{}: {e}", out.display())))?;
        write(&out.join("config.json"), raw)?;
        let code = execute(experiment, &cfg, &out)?;
        Ok((code, out, threads))
    })();
    match result {
        Ok((code, out, threads)) => {
            let info = RunInfo {
                command: experiment.name().into(),
                version: env!("CARGO_PKG_VERSION").into(),
                threads,
                wall_time_ms: start.elapsed().as_millis(),
                exit_code: code,
            };
            if let Err(e) = write_json(&out.join("run.json"), &info) {
                eprintln!("geoflow: error: {e}");
                return EXIT_SOFTWARE;
            }
            code
        }
        Err(e) => {
            eprintln!("geoflow: error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Verify(a) => run_command(Experiment::Verify, a),
        Command::Evolve(a) => run_command(Experiment::Evolve, a),
        Command::Decompose(a) => run_command(Experiment::Decompose, a),
        Command::Detect(a) => run_command(Experiment::Detect, a),
        Command::Identities(a) => run_command(Experiment::Identities, a),
    }
}
