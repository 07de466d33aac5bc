//! Pipeline orchestration. Points run concurrently on a worker pool; every output file is
//! rendered from the ordered result list after the pool finishes.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use cdkit::aqc::{run_aqc, shortest_time, AqcOptions};
use cdkit::lts::run_cd;
use cdkit::models::ModelSpec;
use cdkit::qdrift::run_qdrift;
use cdkit::verify::{check_all, BoundCheck, Fixture, DEFAULT_REFERENCE_TOL};
use cdkit::RunResult;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelConfig, Overrides, Pipeline, SweepConfig, SweepParameter};
use crate::plot::{render_svg, PlotSpec, Table};
use crate::{CliError, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FIT_FILE: &str = "fit.csv";
pub const PLOT_FILE: &str = "sweep.svg";

/// One row of `results.csv` for the cd, aqc, qdrift and sweep pipelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub pipeline: String,
    pub model: String,
    pub grid_parameter: String,
    pub grid_value: Option<f64>,
    pub level: usize,
    pub epsilon: f64,
    pub q: usize,
    pub k: usize,
    pub seed: u64,
    /// `ok` or `failed`; a failed row carries the error in `message`.
    pub status: String,
    pub error: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub inverse_gap: Option<f64>,
    pub gate_count: Option<u64>,
    pub factor_count: Option<u64>,
    pub params_json: String,
    pub margins_json: String,
    pub message: String,
}

/// One row of `results.csv` for verify-bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub lemma: String,
    pub epsilon: f64,
    pub bound: f64,
    pub measured: f64,
    pub margin: f64,
    pub params_json: String,
}

impl From<&BoundCheck> for BoundRow {
    fn from(c: &BoundCheck) -> Self {
        Self {
            lemma: c.lemma.clone(),
            epsilon: c.epsilon,
            bound: c.bound,
            measured: c.measured,
            margin: c.margin,
            params_json: to_json(&c.params),
        }
    }
}

/// Least-squares line through `(ln Δ^{-1}, ln gate_count)` at one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub epsilon: f64,
    pub points: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Root-mean-square residual in log space.
    pub residual: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library: String,
    pub version: String,
    pub pipeline: String,
    pub seed: u64,
    /// Fully resolved configuration, after command-line flags.
    pub config: ExperimentConfig,
    /// Explicitly set parameters that bypass the selection formulas.
    pub overrides: Overrides,
    /// Command-line flags that replaced configuration values.
    pub cli_flags: BTreeMap<String, String>,
    pub files: Vec<String>,
    pub rows: usize,
    pub failures: usize,
    pub fits: Vec<Fit>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub manifest: Manifest,
    /// Output files other than the manifest, in write order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

impl Report {
    /// Writes every file plus the manifest into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        }
        let path = dir.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::Output(e.to_string()))?;
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))
    }

    /// Nonzero when a single-point pipeline failed, a bound was violated, or every sweep
    /// row failed.
    pub fn exit_code(&self) -> u8 {
        let m = &self.manifest;
        let failed = if m.pipeline == Pipeline::Sweep.name() { m.rows > 0 && m.failures == m.rows } else { m.failures > 0 };
        u8::from(failed)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("maps of strings and floats serialize")
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).map_err(|e| CliError::Output(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Output(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

#[derive(Debug, Clone)]
struct Point {
    model: ModelConfig,
    grid: Option<(SweepParameter, f64)>,
    eps: f64,
    pipeline: Pipeline,
}

fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Eps => "eps",
        SweepParameter::NQubits => "n_qubits",
        SweepParameter::Coupling => "coupling",
    }
}

fn run_point(cfg: &ExperimentConfig, point: &Point) -> ResultRow {
    let start = Instant::now();
    let outcome = point.model.build().and_then(|model| run_pipeline(cfg, &model, point.pipeline, point.eps));
    let (parameter, value) = match point.grid {
        Some((p, v)) => (parameter_name(p).to_string(), Some(v)),
        None => (String::new(), None),
    };
    let mut row = ResultRow {
        pipeline: point.pipeline.name().into(),
        model: point.model.name.clone(),
        grid_parameter: parameter,
        grid_value: value,
        level: point.model.level.unwrap_or(0),
        epsilon: point.eps,
        q: cfg.q,
        k: cfg.k,
        seed: cfg.seed,
        status: "ok".into(),
        error: None,
        bound: None,
        gap: None,
        inverse_gap: None,
        gate_count: None,
        factor_count: None,
        params_json: "{}".into(),
        margins_json: "{}".into(),
        message: String::new(),
    };
    match outcome {
        Ok(r) => {
            tracing::info!(pipeline = row.pipeline, eps = point.eps, error = r.error, gates = r.gate_count, seconds = start.elapsed().as_secs_f64(), "point done");
            row.model = r.model.clone();
            row.level = r.level;
            row.error = Some(r.error);
            row.bound = Some(r.bound);
            row.gap = r.param("gap");
            row.inverse_gap = row.gap.map(|g| 1.0 / g);
            row.gate_count = Some(r.gate_count);
            row.factor_count = Some(r.factor_count);
            row.params_json = to_json(&r.params);
            row.margins_json = to_json(&r.margins);
            row.message = r.warnings.join("; ");
        }
        Err(e) => {
            tracing::warn!(pipeline = row.pipeline, eps = point.eps, "point failed: {e}");
            row.status = "failed".into();
            row.message = e.to_string();
        }
    }
    row
}

fn run_pipeline(cfg: &ExperimentConfig, model: &ModelSpec, pipeline: Pipeline, eps: f64) -> cdkit::Result<RunResult> {
    let ov = &cfg.overrides;
    match pipeline {
        Pipeline::Cd => Ok(run_cd(model, eps, cfg.q, cfg.k, &ov.cd_options())?.result),
        Pipeline::Aqc => {
            let opts = AqcOptions { k: cfg.k, r: ov.r, eps, factor_budget: ov.budget() };
            let run = match ov.total_time {
                Some(t) => run_aqc(model, t, &opts)?,
                None => shortest_time(model, &opts, ov.c_t.unwrap_or(1.0))?.1,
            };
            Ok(run.result)
        }
        Pipeline::Qdrift => Ok(run_qdrift(model, eps, cfg.trajectories, cfg.seed)?.0),
        Pipeline::VerifyBounds | Pipeline::Sweep => unreachable!("not a point pipeline"),
    }
}

/// Runs `pipeline` as configured. Only configuration errors and verify-bounds failures
/// abort; per-point failures are recorded on their rows.
pub fn execute(cfg: &ExperimentConfig, pipeline: Pipeline, cli_flags: BTreeMap<String, String>) -> Result<Report> {
    cfg.validate(pipeline)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Output(format!("worker pool: {e}")))?;

    let mut files = Vec::new();
    let mut summary = Vec::new();
    let mut fits = Vec::new();
    let (rows, failures) = match pipeline {
        Pipeline::VerifyBounds => {
            let model = cfg.model.build()?;
            let fx = Fixture::new(&model)?;
            let checks: Vec<Vec<BoundCheck>> = pool.install(|| {
                cfg.eps.par_iter().map(|&eps| check_all(&fx, eps, cfg.q, cfg.k, DEFAULT_REFERENCE_TOL)).collect::<cdkit::Result<_>>()
            })?;
            let rows: Vec<BoundRow> = checks.iter().flatten().map(BoundRow::from).collect();
            for c in checks.iter().flatten() {
                summary.push(format!(
                    "{:<16} eps={:<6} bound={:.3e} measured={:.3e} margin={:.3e} {}",
                    c.lemma,
                    c.epsilon,
                    c.bound,
                    c.measured,
                    c.margin,
                    if c.holds() { "holds" } else { "VIOLATED" }
                ));
            }
            let failures = checks.iter().flatten().filter(|c| !c.holds()).count();
            let header = ["lemma", "epsilon", "bound", "measured", "margin", "params_json"];
            files.push((RESULTS_FILE.to_string(), csv_bytes(&rows, &header)?));
            (rows.len(), failures)
        }
        Pipeline::Cd | Pipeline::Aqc | Pipeline::Qdrift | Pipeline::Sweep => {
            let sweep = match (&cfg.sweep, pipeline) {
                (Some(s), _) => s.clone(),
                (None, Pipeline::Sweep) => SweepConfig { parameter: SweepParameter::Eps, values: Vec::new(), pipeline: Pipeline::Cd },
                (None, p) => SweepConfig { parameter: SweepParameter::Eps, values: Vec::new(), pipeline: p },
            };
            let points = grid(cfg, &sweep, pipeline == Pipeline::Sweep);
            let rows: Vec<ResultRow> = pool.install(|| points.par_iter().map(|p| run_point(cfg, p)).collect());
            for r in &rows {
                summary.push(match r.status.as_str() {
                    "ok" => format!(
                        "{} {} {}eps={} error={:.4e} bound={:.4e} gates={}",
                        r.pipeline,
                        r.model,
                        match r.grid_value {
                            Some(v) if r.grid_parameter != "eps" => format!("{}={v} ", r.grid_parameter),
                            _ => String::new(),
                        },
                        r.epsilon,
                        r.error.unwrap_or(f64::NAN),
                        r.bound.unwrap_or(f64::NAN),
                        r.gate_count.unwrap_or(0)
                    ),
                    _ => format!("{} {} eps={} failed: {}", r.pipeline, r.model, r.epsilon, r.message),
                });
            }
            let failures = rows.iter().filter(|r| r.status != "ok").count();
            let results = csv_bytes(&rows, &[])?;
            if pipeline == Pipeline::Sweep && sweep.parameter != SweepParameter::Eps {
                fits = gap_fits(&rows, &cfg.eps);
                for f in &fits {
                    summary.push(match f.slope {
                        Some(s) => format!(
                            "fit eps={}: log gate_count vs log(1/gap) slope={s:.4} residual={:.3e} over {} points",
                            f.epsilon,
                            f.residual.unwrap_or(f64::NAN),
                            f.points
                        ),
                        None => format!("fit eps={}: {}", f.epsilon, f.message),
                    });
                }
                files.push((FIT_FILE.to_string(), csv_bytes(&fits, &[])?));
            }
            if cfg.plot && pipeline == Pipeline::Sweep {
                let spec = if sweep.parameter == SweepParameter::Eps {
                    PlotSpec::log_log("epsilon", "error", "error vs epsilon")
                } else {
                    PlotSpec::log_log("inverse_gap", "gate_count", "gate count vs inverse gap")
                };
                let table = Table::parse(&results)?;
                files.push((PLOT_FILE.to_string(), render_svg(&table, &spec)?.into_bytes()));
            }
            files.insert(0, (RESULTS_FILE.to_string(), results));
            (rows.len(), failures)
        }
    };

    let mut names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    names.push(MANIFEST_FILE.to_string());
    let manifest = Manifest {
        library: "cdkit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        pipeline: pipeline.name().into(),
        seed: cfg.seed,
        config: cfg.clone(),
        overrides: cfg.overrides.clone(),
        cli_flags,
        files: names,
        rows,
        failures,
        fits,
    };
    Ok(Report { manifest, files, summary })
}

fn grid(cfg: &ExperimentConfig, sweep: &SweepConfig, tagged: bool) -> Vec<Point> {
    let mut points = Vec::new();
    let values: Vec<Option<f64>> = match sweep.parameter {
        SweepParameter::Eps => vec![None],
        _ => sweep.values.iter().map(|&v| Some(v)).collect(),
    };
    for v in values {
        let mut model = cfg.model.clone();
        match (sweep.parameter, v) {
            (SweepParameter::NQubits, Some(n)) => model.n_qubits = Some(n as usize),
            (SweepParameter::Coupling, Some(c)) => model.coupling = Some(c),
            _ => {}
        }
        for &eps in &cfg.eps {
            let grid = match v {
                Some(v) => Some((sweep.parameter, v)),
                None if tagged => Some((SweepParameter::Eps, eps)),
                None => None,
            };
            points.push(Point { model: model.clone(), grid, eps, pipeline: sweep.pipeline });
        }
    }
    points
}

fn gap_fits(rows: &[ResultRow], eps_grid: &[f64]) -> Vec<Fit> {
    eps_grid
        .iter()
        .map(|&eps| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.epsilon == eps && r.status == "ok")
                .filter_map(|r| match (r.inverse_gap, r.gate_count) {
                    (Some(x), Some(y)) if x > 0.0 && y > 0 => Some((x.ln(), (y as f64).ln())),
                    _ => None,
                })
                .collect();
            let mut fit = Fit { epsilon: eps, points: pts.len(), slope: None, intercept: None, residual: None, message: String::new() };
            if pts.len() < 3 {
                fit.message = format!("fit skipped: {} valid points, need 3", pts.len());
            } else {
                match least_squares(&pts) {
                    Some((slope, intercept, residual)) => {
                        fit.slope = Some(slope);
                        fit.intercept = Some(intercept);
                        fit.residual = Some(residual);
                    }
                    None => fit.message = "fit skipped: all points share one gap".into(),
                }
            }
            fit
        })
        .collect()
}

/// `(slope, intercept, rms residual)` of the ordinary least-squares line.
pub fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Some((slope, intercept, (ss / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let (s, c, res) = least_squares(&pts).unwrap();
        assert!((s - 3.0).abs() < 1e-12 && (c + 1.0).abs() < 1e-12 && res < 1e-12);
        assert!(least_squares(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }

    #[test]
    fn single_point_sweep_has_no_fit() {
        let cfg = ExperimentConfig {
            model: ModelConfig { name: "tfim".into(), range: Some([0.05, 0.3]), ..Default::default() },
            eps: vec![0.3],
            sweep: Some(SweepConfig { parameter: SweepParameter::NQubits, values: vec![2.0], pipeline: Pipeline::Cd }),
            ..Default::default()
        };
        let report = execute(&cfg, Pipeline::Sweep, BTreeMap::new()).unwrap();
        assert_eq!(report.manifest.rows, 1);
        assert_eq!(report.manifest.fits.len(), 1);
        assert!(report.manifest.fits[0].slope.is_none());
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn failed_points_are_recorded_not_raised() {
        let cfg = ExperimentConfig {
            eps: vec![0.3],
            overrides: Overrides { factor_budget: Some(10), ..Default::default() },
            ..Default::default()
        };
        let report = execute(&cfg, Pipeline::Cd, BTreeMap::new()).unwrap();
        assert_eq!(report.manifest.failures, 1);
        assert_eq!(report.exit_code(), 1);
        let csv = String::from_utf8(report.files[0].1.clone()).unwrap();
        assert!(csv.contains("failed"), "{csv}");
        assert!(csv.contains("budget"), "{csv}");
    }
}
