//! Trotterized adiabatic evolution, the baseline the counterdiabatic pipeline is priced
//! against.
//!
//! The evolution `𝒯 exp[-i ∫_0^T H(λ(t)) dt]` is split over the LCU terms, so every factor
//! is a single Pauli rotation `e^{-i β_j(λ) P_j δ/2}` of unit gate cost.

use serde::{Deserialize, Serialize};

use crate::error::{domain, CdError, Result};
use crate::hamiltonian::LcuHamiltonian;
use crate::linalg::{sqrt_infidelity, CMat, CVec};
use crate::lts::{derivative_sup_norms, lts_blocks, renormalized, run_cd, select_r, CdOptions, LtsConfig, DEFAULT_FACTOR_BUDGET};
use crate::models::ModelSpec;
use crate::report::{margin, RunResult};
use crate::spectral::{PathSummary, SpectralPath};

const SAMPLE_POINTS: usize = 1025;
/// Relative width at which the evolution-time bisection stops.
const BISECTION_RATIO: f64 = 1.02;
const BISECTION_MAX_STEPS: usize = 40;

/// `T = C_T ε^{-1/K} Δ^{-(2+1/K)} Γ^{1+1/K}`.
pub fn reichardt_time(eps: f64, gap: f64, gamma: f64, big_k: usize, c_t: f64) -> Result<f64> {
    if big_k == 0 || !(eps > 0.0 && gap > 0.0 && gamma > 0.0 && c_t > 0.0) {
        return domain("reichardt_time needs positive inputs and K >= 1");
    }
    let inv = 1.0 / big_k as f64;
    Ok(c_t * eps.powf(-inv) * gap.powf(-(2.0 + inv)) * gamma.powf(1.0 + inv))
}

/// Linear sweep `λ(t) = λ_i + (λ_f - λ_i) t / T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AqcSchedule {
    pub total_time: f64,
    pub lambda_i: f64,
    pub lambda_f: f64,
}

impl AqcSchedule {
    pub fn new(total_time: f64, lambda_i: f64, lambda_f: f64) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return domain(format!("total time {total_time} must be positive"));
        }
        Ok(Self { total_time, lambda_i, lambda_f })
    }

    pub fn lambda(&self, t: f64) -> f64 {
        self.lambda_i + (self.lambda_f - self.lambda_i) * t / self.total_time
    }

    /// `dλ/dt`.
    pub fn rate(&self) -> f64 {
        (self.lambda_f - self.lambda_i) / self.total_time
    }
}

/// `Γ = max_{1 ≤ p ≤ K+1} ‖∂^p H‖_{∞,∞}`.
pub fn gamma_bound(h: &LcuHamiltonian, range: (f64, f64), big_k: usize) -> Result<f64> {
    Ok(derivative_sup_norms(h, range, big_k + 1)?.into_iter().fold(0.0, f64::max))
}

/// `Λ = max_{0 ≤ p ≤ 2k} (max_t Σ_j |∂_t^p β_j|)^{1/(p+1)}` for the linear sweep.
pub fn aqc_lambda(h: &LcuHamiltonian, sched: &AqcSchedule, k: usize) -> Result<f64> {
    let (lo, hi) = (sched.lambda_i, sched.lambda_f);
    let problem_mass: f64 = h.terms().iter().map(|t| t.problem.abs()).sum();
    let mut best = 0.0_f64;
    for p in 0..=2 * k {
        let mut sup = 0.0_f64;
        for j in 0..SAMPLE_POINTS {
            let l = lo + (hi - lo) * j as f64 / (SAMPLE_POINTS - 1) as f64;
            let v = if p == 0 {
                h.beta_one_norm(l)
            } else {
                h.schedule().derivative(l, p)?.abs() * sched.rate().abs().powi(p as i32) * problem_mass
            };
            sup = sup.max(v);
        }
        best = best.max(sup.powf(1.0 / (p + 1) as f64));
    }
    Ok(best)
}

/// Factor count `2ℓ 5^{k-1} r`.
pub fn aqc_factor_count(h: &LcuHamiltonian, cfg: LtsConfig) -> u64 {
    2 * h.n_terms() as u64 * cfg.blocks()
}

/// Applies the `k`-th order, `r`-segment term-split product to every column of `state`.
pub fn apply_aqc(h: &LcuHamiltonian, sched: &AqcSchedule, cfg: LtsConfig, state: &mut CMat) -> Result<()> {
    if state.nrows() != h.dim() {
        return domain(format!("state has {} rows, expected {}", state.nrows(), h.dim()));
    }
    let terms = h.terms();
    for (t0, width) in lts_blocks(cfg, 0.0, sched.total_time) {
        let betas = h.betas(sched.lambda(t0 + 0.5 * width));
        let half = 0.5 * width;
        for mut col in state.column_iter_mut() {
            let psi = col.as_mut_slice();
            for (term, b) in terms.iter().zip(&betas) {
                term.pauli.apply_exp(b * half, psi);
            }
            for (term, b) in terms.iter().zip(&betas).rev() {
                term.pauli.apply_exp(b * half, psi);
            }
        }
    }
    Ok(())
}

pub fn aqc_unitary(h: &LcuHamiltonian, sched: &AqcSchedule, cfg: LtsConfig) -> Result<CMat> {
    let d = h.dim();
    let mut u = CMat::identity(d, d);
    apply_aqc(h, sched, cfg, &mut u)?;
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqcOptions {
    pub k: usize,
    /// Fixed segment count; otherwise chosen from the product-formula bound at `eps`.
    pub r: Option<usize>,
    /// Product-formula error target used to choose `r`.
    pub eps: f64,
    pub factor_budget: u64,
}

impl Default for AqcOptions {
    fn default() -> Self {
        Self { k: 1, r: None, eps: 0.1, factor_budget: DEFAULT_FACTOR_BUDGET }
    }
}

#[derive(Debug, Clone)]
pub struct AqcRun {
    pub result: RunResult,
    pub cfg: LtsConfig,
    pub final_state: CVec,
}

/// Endpoints and target state of a model, tracked once and reused across evolution times.
#[derive(Debug, Clone)]
pub struct AqcTarget {
    pub summary: PathSummary,
    pub initial: CVec,
    pub target: CVec,
}

impl AqcTarget {
    pub fn of(model: &ModelSpec) -> Result<Self> {
        let h = &model.hamiltonian;
        let path = SpectralPath::uniform(h, model.range.0, model.range.1)?;
        let summary = PathSummary::measure(h, &path, model.level)?;
        Ok(Self {
            summary,
            initial: path.state(0, model.level),
            target: path.state(path.len() - 1, model.level),
        })
    }
}

pub fn run_aqc(model: &ModelSpec, total_time: f64, opts: &AqcOptions) -> Result<AqcRun> {
    run_aqc_with(model, &AqcTarget::of(model)?, total_time, opts)
}

pub fn run_aqc_with(model: &ModelSpec, target: &AqcTarget, total_time: f64, opts: &AqcOptions) -> Result<AqcRun> {
    let h = &model.hamiltonian;
    let sched = AqcSchedule::new(total_time, model.range.0, model.range.1)?;
    let lambda = aqc_lambda(h, &sched, opts.k)?;
    let r = match opts.r {
        Some(r) => r,
        None => select_r(opts.k, lambda, total_time, opts.eps)?,
    };
    let cfg = LtsConfig::new(opts.k, r)?;
    let factors = aqc_factor_count(h, cfg);
    if factors > opts.factor_budget {
        return Err(CdError::Resource(format!(
            "{factors} rotations exceed the budget of {} (T = {total_time:.4e}, r = {r})",
            opts.factor_budget
        )));
    }
    let mut state = CMat::from_column_slice(h.dim(), 1, target.initial.as_slice());
    apply_aqc(h, &sched, cfg, &mut state)?;
    let (final_state, norm_defect) = renormalized(&state);
    let error = sqrt_infidelity(&final_state, &target.target)?;
    let gamma = gamma_bound(h, model.range, 2 * opts.k)?;

    let mut result = RunResult {
        pipeline: "aqc".into(),
        model: model.name.clone(),
        level: model.level,
        eps: opts.eps,
        error,
        bound: opts.eps,
        gate_count: factors,
        factor_count: factors,
        ..Default::default()
    };
    for (key, v) in [
        ("total_time", total_time),
        ("k", opts.k as f64),
        ("r", r as f64),
        ("lambda", lambda),
        ("gamma", gamma),
        ("gap", target.summary.gap),
        ("infidelity", error * error),
        ("norm_defect", norm_defect),
        ("reichardt_time", reichardt_time(opts.eps, target.summary.gap, gamma, 2 * opts.k, 1.0)?),
    ] {
        result.set(key, v);
    }
    result.margins.insert("total".into(), margin(result.bound, error));
    Ok(AqcRun { result, cfg, final_state })
}

/// One row of the CD versus AQC comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub eps: f64,
    pub cd_gate_count: Option<u64>,
    pub cd_error: Option<f64>,
    pub aqc_time: Option<f64>,
    pub aqc_gate_count: Option<u64>,
    pub aqc_error: Option<f64>,
    pub aqc_converged: bool,
    pub note: Option<String>,
}

/// For each `ε`, runs CD and finds by bisection in `log T` the shortest evolution time at
/// which AQC reaches `√(1-F) ≤ ε`. Failures are recorded on the row.
pub fn compare_cd_aqc(
    model: &ModelSpec,
    eps_grid: &[f64],
    q: usize,
    k: usize,
    cd_opts: &CdOptions,
    aqc_budget: u64,
) -> Result<Vec<CompareRow>> {
    let target = AqcTarget::of(model)?;
    let gamma = gamma_bound(&model.hamiltonian, model.range, 2 * k)?;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let mut row = CompareRow {
            eps,
            cd_gate_count: None,
            cd_error: None,
            aqc_time: None,
            aqc_gate_count: None,
            aqc_error: None,
            aqc_converged: false,
            note: None,
        };
        let mut notes = Vec::new();
        match run_cd(model, eps, q, k, cd_opts) {
            Ok(run) => {
                row.cd_gate_count = Some(run.result.gate_count);
                row.cd_error = Some(run.result.error);
            }
            Err(e) => notes.push(format!("cd: {e}")),
        }
        let opts = AqcOptions { k, r: None, eps, factor_budget: aqc_budget };
        match shortest_time_with(model, &target, gamma, &opts, 1.0) {
            Ok((t, run)) => {
                row.aqc_time = Some(t);
                row.aqc_gate_count = Some(run.result.gate_count);
                row.aqc_error = Some(run.result.error);
                row.aqc_converged = true;
            }
            Err(e) => notes.push(format!("aqc: {e}")),
        }
        if !notes.is_empty() {
            row.note = Some(notes.join("; "));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Shortest evolution time, to within the bisection ratio, at which AQC reaches
/// `√(1-F) ≤ opts.eps`. The search starts from the gap-condition time with constant `c_t`.
pub fn shortest_time(model: &ModelSpec, opts: &AqcOptions, c_t: f64) -> Result<(f64, AqcRun)> {
    let target = AqcTarget::of(model)?;
    let gamma = gamma_bound(&model.hamiltonian, model.range, 2 * opts.k)?;
    shortest_time_with(model, &target, gamma, opts, c_t)
}

fn shortest_time_with(model: &ModelSpec, target: &AqcTarget, gamma: f64, opts: &AqcOptions, c_t: f64) -> Result<(f64, AqcRun)> {
    let start = reichardt_time(opts.eps, target.summary.gap, gamma, 2 * opts.k, c_t)?;
    bisect_time(model, target, opts, start)
}

fn bisect_time(model: &ModelSpec, target: &AqcTarget, opts: &AqcOptions, start: f64) -> Result<(f64, AqcRun)> {
    let eps = opts.eps;
    let eval = |t: f64| run_aqc_with(model, target, t, opts);
    let mut hi = start;
    let mut hi_run = eval(hi)?;
    let mut lo = hi;
    let mut steps = 0;
    if hi_run.result.error > eps {
        while hi_run.result.error > eps {
            steps += 1;
            if steps > BISECTION_MAX_STEPS {
                return Err(CdError::Convergence { steps, last_delta: hi_run.result.error });
            }
            lo = hi;
            hi *= 2.0;
            hi_run = eval(hi)?;
        }
    } else {
        loop {
            steps += 1;
            if steps > BISECTION_MAX_STEPS {
                // Even very short sweeps meet the target.
                return Ok((hi, hi_run));
            }
            lo = hi / 2.0;
            let run = eval(lo)?;
            if run.result.error > eps {
                break;
            }
            hi = lo;
            hi_run = run;
        }
    }
    while hi / lo > BISECTION_RATIO {
        let mid = (lo * hi).sqrt();
        let run = eval(mid)?;
        if run.result.error <= eps {
            hi = mid;
            hi_run = run;
        } else {
            lo = mid;
        }
    }
    Ok((hi, hi_run))
}
