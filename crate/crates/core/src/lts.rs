//! Lie-Trotter-Suzuki products of the discrete gauge potential and the end-to-end
//! counterdiabatic pipeline.
//!
//! Each discrete term `C_i = b_i e^{-iHτ_i} ∂H e^{iHτ_i}` is exponentiated as
//! `e^{-iHτ_i} e^{-i b_i δ ∂H} e^{iHτ_i}`, so a product formula is a string of two factor
//! kinds: evolutions under `H(λ)` and rotations generated by `∂H(λ)`. Long sequences are
//! never materialized; [`ProductPlan`] streams them block by block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agp::AgpParams;
use crate::error::{domain, CdError, Result};
use crate::hamiltonian::LcuHamiltonian;
use crate::linalg::{eigh, expm_herm, sqrt_infidelity, CMat, CVec, C64};
use crate::models::ModelSpec;
use crate::quadrature::{eta_precondition, select_m, DiscreteTerm, QuadratureScheme};
use crate::report::{margin, RunResult};
use crate::spectral::{PathSummary, SpectralPath};

/// Default cap on the number of applied exponentials in one run.
pub const DEFAULT_FACTOR_BUDGET: u64 = 1_000_000_000;
/// Samples per unit-length grid used for sup norms of schedule derivatives.
const SUP_NORM_POINTS: usize = 1025;

/// `s_k = (4 - 4^{1/(2k+1)})^{-1}`.
pub fn s_coefficient(k: usize) -> Result<f64> {
    if k == 0 {
        return domain("LTS order starts at 1");
    }
    Ok(1.0 / (4.0 - 4f64.powf(1.0 / (2 * k + 1) as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtsConfig {
    pub k: usize,
    pub r: usize,
}

impl LtsConfig {
    pub fn new(k: usize, r: usize) -> Result<Self> {
        if k == 0 || r == 0 {
            return domain(format!("LTS needs k >= 1 and r >= 1, got k = {k}, r = {r}"));
        }
        Ok(Self { k, r })
    }

    /// `5^{k-1} r` first-order blocks.
    pub fn blocks(&self) -> u64 {
        5u64.pow(self.k as u32 - 1) * self.r as u64
    }

    /// `s_1 .. s_{k-1}`, the coefficients used by the recursion.
    pub fn s_table(&self) -> Vec<f64> {
        (1..self.k).map(|j| s_coefficient(j).expect("j >= 1")).collect()
    }
}

/// One exponential of the product, both evaluated at the block midpoint `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    /// `e^{-iH(λ)θ}`.
    HEvolution { lambda: f64, theta: f64 },
    /// `e^{-i angle ∂H(λ)}`.
    BRotation { lambda: f64, angle: f64 },
}

impl Factor {
    pub fn lambda(&self) -> f64 {
        match *self {
            Factor::HEvolution { lambda, .. } | Factor::BRotation { lambda, .. } => lambda,
        }
    }

    pub fn dense(&self, h: &LcuHamiltonian) -> Result<CMat> {
        Ok(match *self {
            Factor::HEvolution { lambda, theta } => expm_herm(&h.dense(lambda)?, theta),
            Factor::BRotation { lambda, angle } => expm_herm(&h.derivative(lambda, 1)?, angle),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorCounts {
    pub h_evolutions: u64,
    pub b_rotations: u64,
}

impl FactorCounts {
    pub fn total(&self) -> u64 {
        self.h_evolutions + self.b_rotations
    }
}

/// Factors in application order: `factors[0]` acts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSequence {
    pub factors: Vec<Factor>,
    pub cancelled: bool,
}

impl GateSequence {
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn counts(&self) -> FactorCounts {
        let mut c = FactorCounts::default();
        for f in &self.factors {
            match f {
                Factor::HEvolution { .. } => c.h_evolutions += 1,
                Factor::BRotation { .. } => c.b_rotations += 1,
            }
        }
        c
    }

    /// Merges runs of adjacent `H` evolutions at equal `λ` and drops those whose merged
    /// duration is exactly zero.
    pub fn cancel(&self) -> GateSequence {
        let mut out: Vec<Factor> = Vec::with_capacity(self.factors.len());
        for &f in &self.factors {
            if let (Factor::HEvolution { lambda, theta }, Some(Factor::HEvolution { lambda: l0, theta: t0 })) =
                (f, out.last().copied())
            {
                if lambda == l0 {
                    out.pop();
                    let merged = t0 + theta;
                    if merged != 0.0 {
                        out.push(Factor::HEvolution { lambda, theta: merged });
                    }
                    continue;
                }
            }
            if let Factor::HEvolution { theta, .. } = f {
                if theta == 0.0 {
                    continue;
                }
            }
            out.push(f);
        }
        GateSequence { factors: out, cancelled: true }
    }

    /// Dense product by exponentiating every factor; meant for small checks only.
    pub fn dense_product(&self, h: &LcuHamiltonian) -> Result<CMat> {
        let mut u = CMat::identity(h.dim(), h.dim());
        for f in &self.factors {
            u = f.dense(h)? * u;
        }
        Ok(u)
    }
}

/// The terms of the discrete gauge potential as `(τ, b)` pairs in application order.
fn term_pairs(terms: &[DiscreteTerm]) -> Vec<(f64, f64)> {
    terms.iter().map(|t| (t.tau, t.b)).collect()
}

/// Streams the factors of a `k`-th order, `r`-segment product over `[λ_i, λ_f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPlan {
    /// `(τ_i, b_i)`, applied in this order in the forward half of each block.
    terms: Vec<(f64, f64)>,
    lambda_i: f64,
    lambda_f: f64,
    cfg: LtsConfig,
}

impl ProductPlan {
    pub fn new(scheme: &QuadratureScheme, lambda_i: f64, lambda_f: f64, cfg: LtsConfig) -> Self {
        Self::from_terms(&scheme.terms(), lambda_i, lambda_f, cfg)
    }

    pub fn from_terms(terms: &[DiscreteTerm], lambda_i: f64, lambda_f: f64, cfg: LtsConfig) -> Self {
        Self { terms: term_pairs(terms), lambda_i, lambda_f, cfg }
    }

    pub fn config(&self) -> LtsConfig {
        self.cfg
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// First-order blocks `(λ_start, signed width)` in application order.
    pub fn blocks(&self) -> Vec<(f64, f64)> {
        lts_blocks(self.cfg, self.lambda_i, self.lambda_f)
    }

    /// Emits the factors of one first-order block over `[λ0, λ0 + width]`.
    pub fn block_factors<F: FnMut(Factor)>(&self, lambda0: f64, width: f64, merged: bool, mut emit: F) {
        let lm = lambda0 + 0.5 * width;
        let half = 0.5 * width;
        let n = self.terms.len();
        let h = |theta: f64, emit: &mut F| {
            if !merged || theta != 0.0 {
                emit(Factor::HEvolution { lambda: lm, theta });
            }
        };
        if n == 0 {
            return;
        }
        if !merged {
            let order = (0..n).chain((0..n).rev());
            for i in order {
                let (tau, b) = self.terms[i];
                h(-tau, &mut emit);
                emit(Factor::BRotation { lambda: lm, angle: b * half });
                h(tau, &mut emit);
            }
            return;
        }
        // Adjacent e^{iHτ_i} e^{-iHτ_{i+1}} pairs collapse into one evolution; the two at
        // the turning point cancel exactly.
        h(-self.terms[0].0, &mut emit);
        for i in 0..n {
            emit(Factor::BRotation { lambda: lm, angle: self.terms[i].1 * half });
            if i + 1 < n {
                h(self.terms[i].0 - self.terms[i + 1].0, &mut emit);
            }
        }
        for i in (0..n).rev() {
            emit(Factor::BRotation { lambda: lm, angle: self.terms[i].1 * half });
            if i > 0 {
                h(self.terms[i].0 - self.terms[i - 1].0, &mut emit);
            }
        }
        h(self.terms[0].0, &mut emit);
    }

    pub fn for_each_factor<F: FnMut(Factor)>(&self, merged: bool, mut emit: F) {
        for (lo, w) in self.blocks() {
            self.block_factors(lo, w, merged, &mut emit);
        }
    }

    /// Exact factor counts without enumerating every block.
    pub fn counts(&self, merged: bool) -> FactorCounts {
        let mut per_block = FactorCounts::default();
        self.block_factors(0.0, 1.0, merged, |f| match f {
            Factor::HEvolution { .. } => per_block.h_evolutions += 1,
            Factor::BRotation { .. } => per_block.b_rotations += 1,
        });
        let blocks = self.cfg.blocks();
        FactorCounts { h_evolutions: per_block.h_evolutions * blocks, b_rotations: per_block.b_rotations * blocks }
    }

    pub fn sequence(&self, merged: bool) -> GateSequence {
        let mut factors = Vec::new();
        self.for_each_factor(merged, |f| factors.push(f));
        GateSequence { factors, cancelled: merged }
    }
}

/// First-order blocks `(start, signed width)` of a `k`-th order, `r`-segment formula over
/// `[lo, hi]`, in application order. Segments are uniform; within a segment the order is
/// raised by the five-step recursion with `s_{k-1}`.
pub fn lts_blocks(cfg: LtsConfig, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let r = cfg.r;
    let seg = (hi - lo) / r as f64;
    let s = cfg.s_table();
    let mut out = Vec::with_capacity(cfg.blocks() as usize);
    for j in 0..r {
        let a = lo + j as f64 * seg;
        let b = if j + 1 == r { hi } else { lo + (j + 1) as f64 * seg };
        recurse(cfg.k, &s, a, b - a, &mut out);
    }
    out
}

fn recurse(k: usize, s: &[f64], t: f64, width: f64, out: &mut Vec<(f64, f64)>) {
    if k == 1 {
        out.push((t, width));
        return;
    }
    let sk = s[k - 2];
    let marks = [0.0, sk, 2.0 * sk, 1.0 - 2.0 * sk, 1.0 - sk, 1.0];
    for w in marks.windows(2) {
        let a = if w[0] == 0.0 { t } else { t + w[0] * width };
        let b = if w[1] == 1.0 { t + width } else { t + w[1] * width };
        recurse(k - 1, s, a, b - a, out);
    }
}

/// Unmerged first-order product over `[λ0, λ0 + δλ]` with all terms at the midpoint.
pub fn first_order_segment(terms: &[DiscreteTerm], lambda0: f64, delta: f64) -> GateSequence {
    let plan = ProductPlan::from_terms(terms, lambda0, lambda0 + delta, LtsConfig { k: 1, r: 1 });
    plan.sequence(false)
}

/// Merged `k`-th order, `r`-segment sequence.
pub fn build_sequence(scheme: &QuadratureScheme, lambda_i: f64, lambda_f: f64, cfg: LtsConfig) -> GateSequence {
    ProductPlan::new(scheme, lambda_i, lambda_f, cfg).sequence(true)
}

/// Applies a product plan to the columns of `state` without forming any factor matrix.
///
/// Within a block everything happens in the eigenbasis `V` of `H(λ_m)`: evolutions are
/// diagonal phases and a rotation is `G e^{-i angle f' μ} G†` with `G = V† W`, where
/// `H_p = W μ W†` is diagonalized once.
pub struct EigenPropagator<'a> {
    h: &'a LcuHamiltonian,
    mu: Vec<f64>,
    w: CMat,
}

impl<'a> EigenPropagator<'a> {
    pub fn new(h: &'a LcuHamiltonian) -> Self {
        let (mu, w) = eigh(h.h_problem());
        Self { h, mu, w }
    }

    pub fn apply(&self, plan: &ProductPlan, state: &mut CMat) -> Result<()> {
        let d = self.h.dim();
        if state.nrows() != d {
            return domain(format!("state has {} rows, expected {d}", state.nrows()));
        }
        let m = state.ncols();
        let mut chi = CMat::zeros(d, m);
        let mut tmp = CMat::zeros(d, m);
        let mut g = CMat::zeros(d, d);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        for (lo, width) in plan.blocks() {
            let lm = lo + 0.5 * width;
            let (energies, v) = eigh(&self.h.dense(lm)?);
            let fp = self.h.schedule().derivative(lm, 1)?;
            g.gemm_ad(one, &v, &self.w, zero);
            chi.gemm_ad(one, &v, state, zero);
            plan.block_factors(lo, width, true, |f| match f {
                Factor::HEvolution { theta, .. } => {
                    for (j, e) in energies.iter().enumerate() {
                        let phase = C64::from_polar(1.0, -e * theta);
                        for c in 0..m {
                            chi[(j, c)] *= phase;
                        }
                    }
                }
                Factor::BRotation { angle, .. } => {
                    tmp.gemm_ad(one, &g, &chi, zero);
                    for (j, mu) in self.mu.iter().enumerate() {
                        let phase = C64::from_polar(1.0, -angle * fp * mu);
                        for c in 0..m {
                            tmp[(j, c)] *= phase;
                        }
                    }
                    chi.gemm(one, &g, &tmp, zero);
                }
            });
            state.gemm(one, &v, &chi, zero);
        }
        Ok(())
    }

    pub fn unitary(&self, plan: &ProductPlan) -> Result<CMat> {
        let d = self.h.dim();
        let mut u = CMat::identity(d, d);
        self.apply(plan, &mut u)?;
        Ok(u)
    }
}

/// First column as a unit vector, with `|‖ψ‖ - 1|` before rescaling. Products of 1e8
/// exact unitaries drift from unit norm by rounding alone.
pub fn renormalized(state: &CMat) -> (CVec, f64) {
    let v = CVec::from_column_slice(&state.as_slice()[..state.nrows()]);
    let n = v.norm();
    (v / C64::new(n, 0.0), (n - 1.0).abs())
}

/// Qubitization cost `ceil(C (‖β‖₁ |θ| + log_b(1/ε̃)) ℓ)` per exponential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateCostModel {
    pub ell: usize,
    pub eps_tilde: f64,
    pub constant: f64,
    pub log_base: f64,
}

impl GateCostModel {
    pub fn new(ell: usize, eps_tilde: f64) -> Self {
        Self { ell, eps_tilde, constant: 1.0, log_base: std::f64::consts::E }
    }

    pub fn factor_cost(&self, norm: f64, theta: f64) -> u64 {
        let log = (1.0 / self.eps_tilde).ln() / self.log_base.ln();
        (self.constant * (norm * theta.abs() + log) * self.ell as f64).ceil() as u64
    }

    fn cost_of(&self, h: &LcuHamiltonian, f: &Factor) -> Result<u64> {
        Ok(match *f {
            Factor::HEvolution { lambda, theta } => self.factor_cost(h.beta_one_norm(lambda), theta),
            Factor::BRotation { lambda, angle } => self.factor_cost(h.dbeta_one_norm(lambda, 1)?, angle),
        })
    }
}

/// `ε̃ = ε / (5^{k-1} r M (q+1))`.
pub fn eps_tilde(eps: f64, k: usize, r: usize, m: usize, q: usize) -> f64 {
    eps / (5f64.powi(k as i32 - 1) * r as f64 * m as f64 * (q + 1) as f64)
}

pub fn gate_cost(seq: &GateSequence, h: &LcuHamiltonian, model: &GateCostModel) -> Result<u64> {
    seq.factors.iter().try_fold(0u64, |acc, f| Ok(acc + model.cost_of(h, f)?))
}

/// Same total as [`gate_cost`] on the merged sequence, streamed.
pub fn plan_gate_cost(plan: &ProductPlan, h: &LcuHamiltonian, model: &GateCostModel) -> Result<u64> {
    let mut total = 0u64;
    let mut err = None;
    plan.for_each_factor(true, |f| match model.cost_of(h, &f) {
        Ok(c) => total += c,
        Err(e) => err = Some(e),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Assumption {
    fn at_most(lhs: f64, rhs: f64) -> Self {
        Self { holds: lhs <= rhs, lhs, rhs }
    }

    fn at_least(lhs: f64, rhs: f64) -> Self {
        Self { holds: lhs >= rhs, lhs, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtsBoundInputs {
    /// `γ_p` for `p = 1 ..= 2k+1`, stored at index `p - 1`.
    pub gammas: Vec<f64>,
    pub p_star: usize,
    /// `ε^{-1/2p*} γ_{p*}`.
    pub lambda_tilde_theorem: f64,
    /// Smallest value meeting the lemma's derivative-sum condition.
    pub lambda_tilde_lemma: f64,
    /// `max_p ‖∂^p H‖_{∞,∞}^{1/p}`.
    pub lambda_big: f64,
    /// `‖∂^p H‖_{∞,∞}` at index `p - 1`.
    pub derivative_norms: Vec<f64>,
    pub delta_lambda: f64,
    /// Upper bound on `ε` in terms of `γ_{p*}`.
    pub assumption_a: Assumption,
    /// Lower bound on `‖∂H‖_{n,1}`.
    pub assumption_b: Assumption,
    /// Lower bound on `min ‖H‖`.
    pub assumption_c: Assumption,
    /// `‖∂H‖_{n,1} ≥ 3^{-(q+1)} η / (1 - e^{-ηa})`.
    pub lemma_premise: Assumption,
}

/// `max_λ ‖∂^p H(λ)‖` for `p = 1 ..= p_max`, exact for interpolating Hamiltonians up to the
/// sampling of `|f^{(p)}|`.
pub fn derivative_sup_norms(h: &LcuHamiltonian, range: (f64, f64), p_max: usize) -> Result<Vec<f64>> {
    let hp = crate::linalg::spectral_norm(h.h_problem());
    let (lo, hi) = range;
    (1..=p_max)
        .map(|p| {
            let mut best = 0.0_f64;
            for j in 0..SUP_NORM_POINTS {
                let l = lo + (hi - lo) * j as f64 / (SUP_NORM_POINTS - 1) as f64;
                best = best.max(h.schedule().derivative(l, p)?.abs());
            }
            Ok(best * hp)
        })
        .collect()
}

pub fn compute_lambda_tilde(
    h: &LcuHamiltonian,
    summary: &PathSummary,
    params: &AgpParams,
    q: usize,
    k: usize,
    eps: f64,
) -> Result<LtsBoundInputs> {
    if k == 0 || !(eps > 0.0) {
        return domain("compute_lambda_tilde needs k >= 1 and eps > 0");
    }
    let p_max = 2 * k + 1;
    let norms = derivative_sup_norms(h, summary.range, p_max)?;
    let (gap, dh) = (summary.gap, summary.dh_norm_n1);
    let mut gammas = Vec::with_capacity(p_max);
    let (mut p_star, mut best) = (1, f64::NEG_INFINITY);
    let mut lambda_big = 0.0_f64;
    let mut lemma = 0.0_f64;
    let mass = 2.0 * params.window_mass();
    for p in 1..=p_max {
        let pf = p as f64;
        let gamma = (std::f64::consts::SQRT_2 * gap.powf(-1.5) * dh.sqrt() * norms[p - 1]).powf(1.0 / pf);
        gammas.push(gamma);
        let scaled = eps.powf(-0.5 / pf) * gamma;
        if scaled > best {
            best = scaled;
            p_star = p;
        }
        lambda_big = lambda_big.max(norms[p - 1].powf(1.0 / pf));
        lemma = lemma.max((mass * norms[p - 1]).powf(1.0 / pf));
    }
    let width = summary.width();
    let ps = p_star as f64;
    let a_rhs = ((0.9 * (5.0f64 / 3.0).powi(k as i32) * gammas[p_star - 1] * width).powf(1.0 - 1.0 / (2.0 * ps + 1.0)))
        .min(1.0);
    let q1 = (q + 1) as f64;
    Ok(LtsBoundInputs {
        gammas,
        p_star,
        lambda_tilde_theorem: best,
        lambda_tilde_lemma: lemma,
        lambda_big,
        derivative_norms: norms,
        delta_lambda: width,
        assumption_a: Assumption::at_most(eps, a_rhs),
        assumption_b: Assumption::at_least(dh, 3f64.powf(-2.0 * q1 / 3.0) * gap * eps.cbrt()),
        assumption_c: Assumption::at_least(summary.min_h_norm, gap.powf(1.5) * eps.sqrt() / dh.sqrt()),
        lemma_premise: Assumption::at_least(dh, 3f64.powf(-q1) / params.window_mass()),
    })
}

/// `r = ceil(5k Λ̃ δλ (5/3)^k (Λ̃ δλ / ε)^{1/2k})`.
pub fn select_r(k: usize, lambda_tilde: f64, delta_lambda: f64, eps: f64) -> Result<usize> {
    if k == 0 || !(lambda_tilde > 0.0 && delta_lambda > 0.0 && eps > 0.0) {
        return domain("select_r needs k >= 1 and positive inputs");
    }
    let kf = k as f64;
    let x = lambda_tilde * delta_lambda;
    let r = (5.0 * kf * x * (5.0f64 / 3.0).powi(k as i32) * (x / eps).powf(0.5 / kf)).ceil();
    if !r.is_finite() || r > u32::MAX as f64 {
        return Err(CdError::Resource(format!("r = {r:.3e} segments")));
    }
    Ok((r as usize).max(1))
}

/// The precondition `ε ≤ min{(9/10)(5/3)^k Λ δ, 1}` of the segment-count bound.
pub fn segment_bound_applies(k: usize, lambda: f64, delta: f64, eps: f64) -> bool {
    eps <= (0.9 * (5.0f64 / 3.0).powi(k as i32) * lambda * delta).min(1.0)
}

/// Which `Λ̃` feeds the segment count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    Theorem,
    Lemma,
    /// The larger of the two, which satisfies both.
    #[default]
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdOptions {
    pub lambda_choice: LambdaChoice,
    pub eta: Option<f64>,
    pub a: Option<f64>,
    pub m: Option<usize>,
    pub r: Option<usize>,
    pub factor_budget: u64,
    pub cost: CostOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostOptions {
    pub constant: f64,
    pub log_base: f64,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self { constant: 1.0, log_base: std::f64::consts::E }
    }
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            lambda_choice: LambdaChoice::Max,
            eta: None,
            a: None,
            m: None,
            r: None,
            factor_budget: DEFAULT_FACTOR_BUDGET,
            cost: CostOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CdRun {
    pub result: RunResult,
    pub summary: PathSummary,
    /// `None` when `∂H` vanishes and no product is needed.
    pub bounds: Option<LtsBoundInputs>,
    pub final_state: CVec,
    pub target_state: CVec,
}

/// Selected parameters of a CD run, before any exponential is applied.
#[derive(Debug, Clone)]
pub struct CdPlan {
    pub summary: PathSummary,
    pub params: AgpParams,
    pub scheme: QuadratureScheme,
    pub bounds: LtsBoundInputs,
    pub lambda_tilde: f64,
    pub cfg: LtsConfig,
    pub counts: FactorCounts,
    pub warnings: Vec<String>,
}

/// Chooses `η, a, M, Λ̃, r` for a tracked path without running anything.
pub fn plan_cd(h: &LcuHamiltonian, summary: &PathSummary, eps: f64, q: usize, k: usize, opts: &CdOptions) -> Result<CdPlan> {
    if !(eps > 0.0 && eps <= 1.0) {
        return domain(format!("eps = {eps} outside (0, 1]"));
    }
    let mut params = AgpParams::select(summary.gap, eps, summary.dh_norm_n1)?;
    if opts.eta.is_some() || opts.a.is_some() {
        params = AgpParams::new(opts.eta.unwrap_or(params.eta), opts.a.unwrap_or(params.a), eps)?;
    }
    let m = match opts.m {
        Some(m) if m > 0 => m,
        Some(_) => return domain("M must be positive"),
        None => select_m(q, params.a, eps, summary.h_norm, summary.dh_norm_n1, params.eta)?,
    };
    let scheme = QuadratureScheme::for_params(&params, m, q)?;
    let bounds = compute_lambda_tilde(h, summary, &params, q, k, eps)?;
    let lambda_tilde = match opts.lambda_choice {
        LambdaChoice::Theorem => bounds.lambda_tilde_theorem,
        LambdaChoice::Lemma => bounds.lambda_tilde_lemma,
        LambdaChoice::Max => bounds.lambda_tilde_theorem.max(bounds.lambda_tilde_lemma),
    };
    let r = match opts.r {
        Some(r) => r,
        None => select_r(k, lambda_tilde, summary.width(), eps)?,
    };
    let cfg = LtsConfig::new(k, r)?;
    let plan = ProductPlan::new(&scheme, summary.range.0, summary.range.1, cfg);
    let counts = plan.counts(true);

    let mut warnings = Vec::new();
    if let Some(w) = eta_precondition(params.eta, summary.min_h_norm) {
        warnings.push(w);
    }
    if !segment_bound_applies(k, lambda_tilde, summary.width(), eps) {
        warnings.push(format!("eps = {eps} exceeds the segment-count precondition"));
    }
    for (name, a) in [
        ("(a)", bounds.assumption_a),
        ("(b)", bounds.assumption_b),
        ("(c)", bounds.assumption_c),
        ("product-formula premise", bounds.lemma_premise),
    ] {
        if !a.holds {
            warnings.push(format!("assumption {name} violated: {:.4e} vs {:.4e}", a.lhs, a.rhs));
        }
    }
    Ok(CdPlan { summary: *summary, params, scheme, bounds, lambda_tilde, cfg, counts, warnings })
}

/// Runs the full pipeline on `model` over its range and level.
pub fn run_cd(model: &ModelSpec, eps: f64, q: usize, k: usize, opts: &CdOptions) -> Result<CdRun> {
    let h = &model.hamiltonian;
    let (lo, hi) = model.range;
    let level = model.level;
    let path = SpectralPath::uniform(h, lo, hi)?;
    let summary = PathSummary::measure(h, &path, level)?;
    let initial = path.state(0, level);
    let target = path.state(path.len() - 1, level);

    let mut result = RunResult {
        pipeline: "cd".into(),
        model: model.name.clone(),
        level,
        eps,
        bound: 3.0 * eps,
        ..Default::default()
    };
    for (key, v) in [
        ("lambda_i", lo),
        ("lambda_f", hi),
        ("q", q as f64),
        ("k", k as f64),
        ("gap", summary.gap),
        ("dh_norm_n1", summary.dh_norm_n1),
        ("h_norm", summary.h_norm),
        ("min_h_norm", summary.min_h_norm),
    ] {
        result.set(key, v);
    }

    if summary.dh_norm_n1 == 0.0 && h.is_constant() {
        // A constant Hamiltonian has a vanishing gauge potential: the transport is the identity.
        result.warnings.push("dH vanishes on the path; no exponentials are applied".into());
        result.error = sqrt_infidelity(&initial, &target)?;
        result.margins.insert("total".into(), margin(result.bound, result.error));
        return Ok(CdRun { result, summary, bounds: None, final_state: initial, target_state: target });
    }

    let plan = plan_cd(h, &summary, eps, q, k, opts)?;
    let total = plan.counts.total();
    if total > opts.factor_budget {
        return Err(CdError::Resource(format!(
            "{total} exponentials exceed the budget of {} (M = {}, r = {}, k = {k})",
            opts.factor_budget, plan.scheme.m, plan.cfg.r
        )));
    }
    let product = ProductPlan::new(&plan.scheme, lo, hi, plan.cfg);
    let mut state = CMat::from_column_slice(h.dim(), 1, initial.as_slice());
    EigenPropagator::new(h).apply(&product, &mut state)?;
    let (final_state, norm_defect) = renormalized(&state);
    result.error = sqrt_infidelity(&final_state, &target)?;
    result.set("norm_defect", norm_defect);

    let et = eps_tilde(eps, k, plan.cfg.r, plan.scheme.m, q);
    let model_cost = GateCostModel { constant: opts.cost.constant, log_base: opts.cost.log_base, ..GateCostModel::new(h.n_terms(), et) };
    result.gate_count = plan_gate_cost(&product, h, &model_cost)?;
    result.factor_count = total;

    let b = &plan.bounds;
    let mut extra: BTreeMap<&str, f64> = BTreeMap::new();
    extra.insert("eta", plan.params.eta);
    extra.insert("a", plan.params.a);
    extra.insert("m", plan.scheme.m as f64);
    extra.insert("r", plan.cfg.r as f64);
    extra.insert("lambda_tilde", plan.lambda_tilde);
    extra.insert("lambda_tilde_theorem", b.lambda_tilde_theorem);
    extra.insert("lambda_tilde_lemma", b.lambda_tilde_lemma);
    extra.insert("lambda_big", b.lambda_big);
    extra.insert("p_star", b.p_star as f64);
    extra.insert("eps_tilde", et);
    extra.insert("h_evolutions", plan.counts.h_evolutions as f64);
    extra.insert("b_rotations", plan.counts.b_rotations as f64);
    extra.insert("remainder_bound", plan.scheme.remainder_bound());
    for (key, v) in extra {
        result.set(key, v);
    }
    result.margins.insert("total".into(), margin(result.bound, result.error));
    result.margins.insert("lambda_tilde_vs_2lambda_over_eta".into(), 2.0 * b.lambda_big / plan.params.eta / b.lambda_tilde_theorem);
    result.warnings = plan.warnings.clone();
    Ok(CdRun { result, summary, bounds: Some(plan.bounds), final_state, target_state: target })
}
