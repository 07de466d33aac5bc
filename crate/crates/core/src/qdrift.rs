//! Randomized counterdiabatic channel.
//!
//! The path is cut into `r` uniform subintervals. In each, one `(λ, τ)` pair is drawn and
//! `e^{-iHτ} exp[-i (1-e^{-ηa}) sgn τ / (p_j(λ) η) ∂H] e^{iHτ}` is applied, where `p_j` is
//! the sampling density of `λ` conditioned on the subinterval. The mean generator of a
//! round is then `∫_j A_{η,a} dλ` for any positive density, so the tabulated density is
//! used both for sampling and in the exponent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::agp::AgpParams;
use crate::error::{domain, Result};
use crate::hamiltonian::LcuHamiltonian;
use crate::linalg::{eigh, hermiticity_defect, projector, spectral_norm, trace_distance, CMat, CVec, C64};
use crate::lts::GateCostModel;
use crate::models::ModelSpec;
use crate::report::{margin, RunResult};
use crate::spectral::{PathSummary, SpectralPath};

pub const DEFAULT_TABLE_POINTS: usize = 2049;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Sampling distributions of the channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub eta: f64,
    pub a: f64,
    pub r: usize,
    pub seed: u64,
    pub range: (f64, f64),
    /// Tabulation nodes for `p(λ)`.
    pub grid: Vec<f64>,
    /// Unnormalized CDF `∫_{λ_i}^{λ} ‖∂H‖`, linear between nodes.
    cumulative: Vec<f64>,
    /// `‖∂H‖_{∞,1}` on the table.
    pub dh_mass: f64,
}

impl SamplingPlan {
    pub fn new(h: &LcuHamiltonian, range: (f64, f64), eta: f64, a: f64, r: usize, seed: u64) -> Result<Self> {
        Self::with_table(h, range, eta, a, r, seed, DEFAULT_TABLE_POINTS)
    }

    pub fn with_table(
        h: &LcuHamiltonian,
        range: (f64, f64),
        eta: f64,
        a: f64,
        r: usize,
        seed: u64,
        points: usize,
    ) -> Result<Self> {
        if !(eta > 0.0 && a > 0.0) || r == 0 || points < 2 {
            return domain("sampling plan needs eta, a > 0, r >= 1 and at least two table points");
        }
        let (lo, hi) = range;
        if !(hi > lo) {
            return domain(format!("empty range [{lo}, {hi}]"));
        }
        let grid: Vec<f64> = (0..points).map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64).collect();
        let norms = grid.iter().map(|&l| Ok(spectral_norm(&h.derivative(l, 1)?))).collect::<Result<Vec<f64>>>()?;
        let mut cumulative = Vec::with_capacity(points);
        cumulative.push(0.0);
        for j in 1..points {
            let step = 0.5 * (grid[j] - grid[j - 1]) * (norms[j] + norms[j - 1]);
            cumulative.push(cumulative[j - 1] + step);
        }
        let dh_mass = cumulative[points - 1];
        Ok(Self { eta, a, r, seed, range, grid, cumulative, dh_mass })
    }

    /// Plan with `r` from [`qdrift_r`].
    pub fn for_eps(h: &LcuHamiltonian, range: (f64, f64), params: &AgpParams, eps: f64, seed: u64) -> Result<Self> {
        let probe = Self::new(h, range, params.eta, params.a, 1, seed)?;
        let r = qdrift_r(params.eta, params.a, eps, probe.dh_mass)?;
        Ok(Self { r, ..probe })
    }

    /// Normalized CDF of `p(λ)` at the table nodes.
    pub fn cdf(&self) -> Vec<f64> {
        self.cumulative.iter().map(|c| c / self.dh_mass).collect()
    }

    /// Subinterval boundaries `λ_0 < … < λ_r`.
    pub fn boundaries(&self) -> Vec<f64> {
        let (lo, hi) = self.range;
        (0..=self.r).map(|j| if j == self.r { hi } else { lo + (hi - lo) * j as f64 / self.r as f64 }).collect()
    }

    fn cumulative_at(&self, l: f64) -> f64 {
        let j = self.cell(l);
        let t = (l - self.grid[j]) / (self.grid[j + 1] - self.grid[j]);
        self.cumulative[j] + t * (self.cumulative[j + 1] - self.cumulative[j])
    }

    fn cell(&self, l: f64) -> usize {
        let j = self.grid.partition_point(|&g| g <= l);
        j.clamp(1, self.grid.len() - 1) - 1
    }

    /// Tabulated density `p(λ)`, constant on each table cell.
    pub fn density(&self, l: f64) -> f64 {
        let j = self.cell(l);
        (self.cumulative[j + 1] - self.cumulative[j]) / (self.grid[j + 1] - self.grid[j]) / self.dh_mass
    }

    /// Probability mass of `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        (self.cumulative_at(hi) - self.cumulative_at(lo)) / self.dh_mass
    }

    fn invert(&self, target: f64) -> f64 {
        let j = self.cumulative.partition_point(|&c| c < target).clamp(1, self.grid.len() - 1) - 1;
        let (c0, c1) = (self.cumulative[j], self.cumulative[j + 1]);
        let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        (self.grid[j] + t.clamp(0.0, 1.0) * (self.grid[j + 1] - self.grid[j])).clamp(self.range.0, self.range.1)
    }
}

/// `τ` from `η e^{-η|τ|} / (2(1 - e^{-ηa}))` on `[-a, a]`.
pub fn sample_tau<R: Rng + ?Sized>(plan: &SamplingPlan, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let window = -(-plan.eta * plan.a).exp_m1();
    let magnitude = (-(-u * window).ln_1p() / plan.eta).min(plan.a);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// `λ` from `p(λ) = ‖∂H(λ)‖ / ‖∂H‖_{∞,1}` on the whole range.
pub fn sample_lambda<R: Rng + ?Sized>(plan: &SamplingPlan, rng: &mut R) -> Result<f64> {
    sample_lambda_in(plan, plan.range.0, plan.range.1, rng)
}

/// `λ` from `p` conditioned on `[lo, hi]`.
pub fn sample_lambda_in<R: Rng + ?Sized>(plan: &SamplingPlan, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(plan.dh_mass > 0.0) {
        return domain("dH vanishes on the range; p(lambda) is undefined");
    }
    let (c0, c1) = (plan.cumulative_at(lo), plan.cumulative_at(hi));
    if !(c1 > c0) {
        return domain(format!("no probability mass on [{lo}, {hi}]"));
    }
    let u: f64 = rng.random();
    Ok(plan.invert(c0 + u * (c1 - c0)).clamp(lo, hi))
}

/// `r = ceil(4 (1-e^{-ηa})² ‖∂H‖²_{∞,1} / (η² ε))`.
pub fn qdrift_r(eta: f64, a: f64, eps: f64, dh_norm_inf1: f64) -> Result<usize> {
    if !(eta > 0.0 && a > 0.0 && eps > 0.0 && dh_norm_inf1 > 0.0) {
        return domain("qdrift_r needs positive inputs");
    }
    let w = -(-eta * a).exp_m1();
    let r = (4.0 * w * w * dh_norm_inf1 * dh_norm_inf1 / (eta * eta * eps)).ceil();
    if r > u32::MAX as f64 {
        return Err(crate::error::CdError::Resource(format!("r = {r:.3e} rounds")));
    }
    Ok(r as usize)
}

/// `B_{η,a}(λ, τ) = e^{-iHτ} ((1-e^{-ηa}) sgn τ / η) ∂H e^{iHτ}`, whose mean over `P(τ)` is
/// the regularized truncated gauge potential.
pub fn b_operator(h: &LcuHamiltonian, lambda: f64, tau: f64, eta: f64, a: f64) -> Result<CMat> {
    let u = crate::linalg::expm_herm(&h.dense(lambda)?, tau);
    let scale = -(-eta * a).exp_m1() * tau.signum() / eta;
    Ok(&u * h.derivative(lambda, 1)? * u.adjoint() * C64::new(scale, 0.0))
}

/// Per-trajectory generator: the plan's master seed with the trajectory index as stream.
pub fn trajectory_rng(master_seed: u64, trajectory: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory);
    rng
}

/// One sampled round of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub lambda: f64,
    pub tau: f64,
    /// Coefficient of `∂H` in the middle exponential.
    pub angle: f64,
}

/// Runs one trajectory of `plan.r` rounds on `psi`.
pub struct ChannelRunner<'a> {
    h: &'a LcuHamiltonian,
    plan: &'a SamplingPlan,
    mu: Vec<f64>,
    w: CMat,
    bounds: Vec<f64>,
    masses: Vec<f64>,
}

impl<'a> ChannelRunner<'a> {
    pub fn new(h: &'a LcuHamiltonian, plan: &'a SamplingPlan) -> Self {
        let (mu, w) = eigh(h.h_problem());
        let bounds = plan.boundaries();
        let masses =
            if plan.dh_mass > 0.0 { bounds.windows(2).map(|b| plan.mass(b[0], b[1])).collect() } else { vec![0.0; plan.r] };
        Self { h, plan, mu, w, bounds, masses }
    }

    pub fn rounds(&self, trajectory: u64) -> Result<Vec<Round>> {
        let mut rng = trajectory_rng(self.plan.seed, trajectory);
        let window = -(-self.plan.eta * self.plan.a).exp_m1();
        let mut out = Vec::with_capacity(self.plan.r);
        for j in 0..self.plan.r {
            if !(self.masses[j] > 0.0) {
                continue;
            }
            let lambda = sample_lambda_in(self.plan, self.bounds[j], self.bounds[j + 1], &mut rng)?;
            let tau = sample_tau(self.plan, &mut rng);
            let p_j = self.plan.density(lambda) / self.masses[j];
            out.push(Round { lambda, tau, angle: window * tau.signum() / (p_j * self.plan.eta) });
        }
        Ok(out)
    }

    pub fn run(&self, trajectory: u64, psi: &mut CVec) -> Result<Vec<Round>> {
        let rounds = self.rounds(trajectory)?;
        for round in &rounds {
            let (e, v) = eigh(&self.h.dense(round.lambda)?);
            let fp = self.h.schedule().derivative(round.lambda, 1)?;
            // e^{iHτ}
            let mut x = v.adjoint() * &*psi;
            for (j, ej) in e.iter().enumerate() {
                x[j] *= C64::from_polar(1.0, ej * round.tau);
            }
            let mut y = self.w.adjoint() * (&v * x);
            for (j, m) in self.mu.iter().enumerate() {
                y[j] *= C64::from_polar(1.0, -round.angle * fp * m);
            }
            let mut z = v.adjoint() * (&self.w * y);
            for (j, ej) in e.iter().enumerate() {
                z[j] *= C64::from_polar(1.0, -ej * round.tau);
            }
            *psi = &v * z;
        }
        Ok(rounds)
    }
}

#[derive(Debug, Clone)]
pub struct ChannelResult {
    pub rho: CMat,
    /// `½ ‖ρ - σ‖₁` against the target projector.
    pub trace_distance: f64,
    /// `‖ρ - σ‖₁`.
    pub trace_norm_error: f64,
    /// Bootstrap standard error of `trace_norm_error`.
    pub bootstrap_sigma: f64,
    pub master_seed: u64,
    /// Trajectory `t` used stream `t` of the master seed.
    pub n_trajectories: usize,
    pub r: usize,
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Mean qubitization gate count per trajectory.
    pub mean_gate_count: f64,
}

/// Averages `n_traj` trajectories started in `|n(λ_i)⟩` and compares with `|n(λ_f)⟩⟨n(λ_f)|`.
pub fn apply_channel(model: &ModelSpec, plan: &SamplingPlan, n_traj: usize) -> Result<ChannelResult> {
    if n_traj == 0 {
        return domain("at least one trajectory is needed");
    }
    let h = &model.hamiltonian;
    let path = SpectralPath::uniform(h, plan.range.0, plan.range.1)?;
    let initial = path.state(0, model.level);
    let target = projector(&path.state(path.len() - 1, model.level));
    let runner = ChannelRunner::new(h, plan);
    let cost = GateCostModel::new(h.n_terms(), 1.0 / plan.r as f64);

    let d = h.dim();
    let mut finals = Vec::with_capacity(n_traj);
    let mut rho = CMat::zeros(d, d);
    let mut gates = 0.0;
    for t in 0..n_traj {
        let mut psi = initial.clone();
        let rounds = runner.run(t as u64, &mut psi)?;
        for r in &rounds {
            let beta = h.beta_one_norm(r.lambda);
            let dbeta = h.dbeta_one_norm(r.lambda, 1)?;
            gates += (2 * cost.factor_cost(beta, r.tau) + cost.factor_cost(dbeta, r.angle)) as f64;
        }
        rho += projector(&psi);
        finals.push(psi);
    }
    rho /= C64::new(n_traj as f64, 0.0);
    let td = trace_distance(&rho, &target);
    let sigma = bootstrap_sigma(&finals, &target, plan.seed);
    let (evals, _) = eigh(&rho);
    Ok(ChannelResult {
        trace_distance: td,
        trace_norm_error: 2.0 * td,
        bootstrap_sigma: sigma,
        master_seed: plan.seed,
        n_trajectories: n_traj,
        r: plan.r,
        trace_defect: (rho.trace().re - 1.0).abs(),
        hermiticity_defect: hermiticity_defect(&rho),
        min_eigenvalue: evals.first().copied().unwrap_or(0.0),
        mean_gate_count: gates / n_traj as f64,
        rho,
    })
}

/// Standard deviation of `‖ρ* - σ‖₁` over trajectory resamples with replacement.
fn bootstrap_sigma(finals: &[CVec], target: &CMat, seed: u64) -> f64 {
    let n = finals.len();
    if n < 2 {
        return 0.0;
    }
    let projectors: Vec<CMat> = finals.iter().map(projector).collect();
    let mut rng = trajectory_rng(seed, u64::MAX);
    let d = target.nrows();
    let mut values = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut rho = CMat::zeros(d, d);
        for _ in 0..n {
            rho += &projectors[rng.random_range(0..n)];
        }
        rho /= C64::new(n as f64, 0.0);
        values.push(2.0 * trace_distance(&rho, target));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// End-to-end randomized run: `η, a` from the regularization lemma, `r` from [`qdrift_r`].
pub fn run_qdrift(model: &ModelSpec, eps: f64, n_traj: usize, seed: u64) -> Result<(RunResult, ChannelResult)> {
    let h = &model.hamiltonian;
    let path = SpectralPath::uniform(h, model.range.0, model.range.1)?;
    let summary = PathSummary::measure(h, &path, model.level)?;
    let params = AgpParams::select(summary.gap, eps, summary.dh_norm_n1)?;
    let plan = SamplingPlan::for_eps(h, model.range, &params, eps, seed)?;
    let channel = apply_channel(model, &plan, n_traj)?;
    let mut result = RunResult {
        pipeline: "qdrift".into(),
        model: model.name.clone(),
        level: model.level,
        eps,
        error: channel.trace_norm_error,
        bound: 2.0 * eps,
        gate_count: channel.mean_gate_count.round() as u64,
        factor_count: 3 * plan.r as u64,
        ..Default::default()
    };
    for (key, v) in [
        ("eta", params.eta),
        ("a", params.a),
        ("r", plan.r as f64),
        ("gap", summary.gap),
        ("dh_norm_inf1", plan.dh_mass),
        ("n_trajectories", n_traj as f64),
        ("seed", seed as f64),
        ("bootstrap_sigma", channel.bootstrap_sigma),
        ("trace_defect", channel.trace_defect),
    ] {
        result.set(key, v);
    }
    result.margins.insert("total".into(), margin(result.bound, result.error));
    Ok((result, channel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agp::reg_trunc_agp_at;
    use crate::hamiltonian::{LcuTerm, Schedule};
    use crate::models::landau_zener;
    use approx::assert_abs_diff_eq;

    fn lz_plan(r: usize) -> (ModelSpec, SamplingPlan) {
        let m = landau_zener();
        let plan = SamplingPlan::new(&m.hamiltonian, m.range, 1.0, 30.0, r, 7).unwrap();
        (m, plan)
    }

    #[test]
    fn r_example_and_scaling() {
        assert_eq!(qdrift_r(0.223607, 20.998, 0.1, 1.0).unwrap(), 786);
        let a = qdrift_r(0.2, 500.0, 0.1, 1.0).unwrap() as f64;
        let b = qdrift_r(0.1, 1000.0, 0.1, 1.0).unwrap() as f64;
        assert_abs_diff_eq!(b / a, 4.0, epsilon = 0.01);
        let c = qdrift_r(0.2, 500.0, 0.05, 1.0).unwrap() as f64;
        assert_abs_diff_eq!(c / a, 2.0, epsilon = 0.01);
        assert!(qdrift_r(0.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn tau_is_symmetric_and_bounded() {
        let (_, mut plan) = lz_plan(1);
        plan.eta = 1.0;
        plan.a = 50.0;
        let mut rng = trajectory_rng(3, 0);
        let n = 100_000;
        let (mut sgn, mut abs, mut abs2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let t = sample_tau(&plan, &mut rng);
            assert!(t.abs() <= plan.a);
            sgn += t.signum();
            abs += t.abs();
            abs2 += t * t;
        }
        let n = n as f64;
        assert!((sgn / n).abs() < 3.0 / n.sqrt());
        let mean = abs / n;
        let sd = (abs2 / n - mean * mean).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd / n.sqrt(), "mean |tau| = {mean}");
    }

    #[test]
    fn constant_norm_gives_uniform_lambda() {
        let h = LcuHamiltonian::new(
            1,
            vec![LcuTerm::new("X".parse().unwrap(), 1.0, 0.0), LcuTerm::new("Z".parse().unwrap(), 0.0, 1.0)],
            Schedule::linear(),
            (0.0, 1.0),
        )
        .unwrap();
        let plan = SamplingPlan::new(&h, (0.2, 0.8), 1.0, 1.0, 1, 0).unwrap();
        let mut rng = trajectory_rng(11, 0);
        let n = 10_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_lambda(&plan, &mut rng).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = (x - 0.2) / 0.6;
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        // 99% critical value 1.628 / sqrt(n).
        assert!(ks < 1.628 / (n as f64).sqrt(), "KS = {ks}");
        assert!(xs[0] >= 0.2 && xs[n - 1] <= 0.8);
    }

    #[test]
    fn cdf_is_monotone_and_normalized() {
        let (_, plan) = lz_plan(4);
        let cdf = plan.cdf();
        assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
        assert_abs_diff_eq!(cdf[cdf.len() - 1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_derivative_is_rejected_for_sampling() {
        let h = LcuHamiltonian::new(
            1,
            vec![LcuTerm::new("X".parse().unwrap(), 1.0, 0.0), LcuTerm::new("Z".parse().unwrap(), 0.0, 0.0)],
            Schedule::linear(),
            (0.0, 1.0),
        )
        .unwrap();
        let plan = SamplingPlan::new(&h, (0.0, 1.0), 1.0, 1.0, 3, 0).unwrap();
        assert!(sample_lambda(&plan, &mut trajectory_rng(0, 0)).is_err());
    }

    #[test]
    fn b_operator_averages_to_potential() {
        let h = landau_zener().hamiltonian;
        let (eta, a, lambda) = (0.8, 6.0, 0.3);
        let plan = SamplingPlan::new(&h, (-1.0, 1.0), eta, a, 1, 0).unwrap();
        let es = crate::spectral::Eigensystem::of(&h, lambda).unwrap();
        let dh = h.derivative(lambda, 1).unwrap();
        let mut rng = trajectory_rng(5, 0);
        let n = 100_000;
        let mut sum = CMat::zeros(2, 2);
        let mut sq = nalgebra::DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let tau = sample_tau(&plan, &mut rng);
            // Evaluated through the eigenbasis for speed; equal to b_operator.
            let phases: Vec<C64> = es.energies.iter().map(|e| C64::from_polar(1.0, -e * tau)).collect();
            let mut b = es.to_eigenbasis(&dh);
            for i in 0..2 {
                for j in 0..2 {
                    b[(i, j)] *= phases[i] * phases[j].conj();
                }
            }
            let b = es.to_computational(&b) * C64::new(-(-eta * a).exp_m1() * tau.signum() / eta, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    sq[(i, j)] += b[(i, j)].norm_sqr();
                }
            }
            sum += b;
        }
        let mean = sum / C64::new(n as f64, 0.0);
        let exact = reg_trunc_agp_at(&h, lambda, &AgpParams::new(eta, a, 0.1).unwrap()).unwrap().matrix;
        for i in 0..2 {
            for j in 0..2 {
                let var = sq[(i, j)] / n as f64 - mean[(i, j)].norm_sqr();
                let se = (var / n as f64).sqrt();
                assert!((mean[(i, j)] - exact[(i, j)]).norm() < 3.0 * se + 1e-12, "{i}{j}");
            }
        }
        let direct = b_operator(&h, lambda, 1.3, eta, a).unwrap();
        assert!(hermiticity_defect(&direct) < 1e-12);
    }

    #[test]
    fn conditional_masses_sum_to_one() {
        let (_, plan) = lz_plan(7);
        let b = plan.boundaries();
        let total: f64 = b.windows(2).map(|w| plan.mass(w[0], w[1])).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        let mut rng = trajectory_rng(9, 1);
        for w in b.windows(2) {
            for _ in 0..50 {
                let l = sample_lambda_in(&plan, w[0], w[1], &mut rng).unwrap();
                assert!(l >= w[0] && l <= w[1]);
            }
        }
    }

    #[test]
    fn channel_output_is_a_state() {
        let (m, plan) = lz_plan(20);
        let out = apply_channel(&m, &plan, 50).unwrap();
        assert!(out.trace_defect < 1e-9);
        assert!(out.hermiticity_defect < 1e-12);
        assert!(out.min_eigenvalue > -1e-9);
        let again = apply_channel(&m, &plan, 50).unwrap();
        assert_eq!(out.trace_distance, again.trace_distance);
    }

    #[test]
    fn vanishing_derivative_gives_identity_channel() {
        let h = LcuHamiltonian::new(
            1,
            vec![LcuTerm::new("Z".parse().unwrap(), 1.0, 0.0), LcuTerm::new("X".parse().unwrap(), 0.0, 0.0)],
            Schedule::linear(),
            (0.0, 1.0),
        )
        .unwrap();
        let model = ModelSpec { name: "const".into(), hamiltonian: h, range: (0.0, 1.0), level: 0, gap_formula: None };
        let plan = SamplingPlan::new(&model.hamiltonian, (0.0, 1.0), 1.0, 1.0, 5, 0).unwrap();
        let out = apply_channel(&model, &plan, 10).unwrap();
        assert!(out.trace_distance < 1e-12);
    }
}
