//! Lagrange quadrature of the damped time integral behind the gauge potential.
//!
//! `[0, a]` is split into `M` subintervals that shrink where `e^{-ητ}` is large. Each
//! subinterval carries `q + 1` Chebyshev-Gauss nodes whose weights integrate the
//! interpolating polynomial exactly. Negative times mirror the positive ones.

use serde::{Deserialize, Serialize};

use crate::agp::{kernel_agp, AgpParams};
use crate::error::{domain, CdError, Result};
use crate::linalg::CMat;
use crate::spectral::Eigensystem;

/// Largest `M` accepted before refusing to build a scheme.
pub const MAX_SUBINTERVALS: f64 = 1e9;

/// `τ_κ = -((q+2)/η) ln(1 - (κ/M)(1 - e^{-ηa/(q+2)}))` for `κ = 0..=M`, with `τ_M = a`.
pub fn make_partition(eta: f64, a: f64, m: usize, q: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return domain("partition needs M >= 1");
    }
    if !(eta > 0.0 && a > 0.0) {
        return domain("partition needs eta > 0 and a > 0");
    }
    let s = (q + 2) as f64;
    // 1 - e^{-ηa/(q+2)} without cancellation.
    let span = -(-eta * a / s).exp_m1();
    let mut tau: Vec<f64> = (0..=m).map(|k| -(s / eta) * (-(k as f64 / m as f64) * span).ln_1p()).collect();
    tau[m] = a;
    Ok(tau)
}

/// `q + 1` Chebyshev-Gauss points of `[lo, hi]`, ascending.
pub fn chebyshev_nodes(lo: f64, hi: f64, q: usize) -> Vec<f64> {
    let n = q + 1;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..n)
        .rev()
        .map(|j| mid + half * ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect()
}

/// `w_α = (1/(hi-lo)) ∫_lo^hi l_α(τ) dτ` for the Lagrange basis on `nodes`, integrated
/// exactly through the monomial expansion of each basis polynomial.
pub fn lagrange_weights(nodes: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if nodes.is_empty() {
        return domain("at least one node required");
    }
    if !(hi > lo) {
        return domain("interval must have positive length");
    }
    if nodes.iter().any(|&x| x < lo || x > hi) {
        return domain("nodes must lie inside the interval");
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("nodes must be strictly increasing (no coincident nodes)");
    }
    // Map to t in [-1, 1]; the normalized weight is half the integral over t.
    let t: Vec<f64> = nodes.iter().map(|&x| (2.0 * x - lo - hi) / (hi - lo)).collect();
    let n = t.len();
    let mut weights = Vec::with_capacity(n);
    for alpha in 0..n {
        // Coefficients of Π_{j≠α} (t - t_j), lowest degree first.
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (j, &tj) in t.iter().enumerate() {
            if j == alpha {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (k, &c) in poly.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= tj * c;
            }
            poly = next;
            denom *= t[alpha] - tj;
        }
        let integral: f64 = poly
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == 0)
            .map(|(k, &c)| c * 2.0 / (k + 1) as f64)
            .sum();
        weights.push(0.5 * integral / denom);
    }
    Ok(weights)
}

/// One term `b · e^{-iHτ} ∂H e^{iHτ}` of the discrete gauge potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTerm {
    /// Signed subinterval index; negative for mirrored times.
    pub kappa: i64,
    pub alpha: usize,
    pub tau: f64,
    /// `½ δτ_κ w_{κ,α} e^{-η|τ|} sgn τ`.
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub eta: f64,
    pub a: f64,
    pub m: usize,
    pub q: usize,
    pub partition: Vec<f64>,
    /// `nodes[κ-1][α]` for the positive half.
    pub nodes: Vec<Vec<f64>>,
    /// `weights[κ-1][α]`, summing to one per subinterval.
    pub weights: Vec<Vec<f64>>,
    /// Positive-half products `δτ_κ w_{κ,α} e^{-ητ_{κ,α}}`, flattened in node order.
    damped: Vec<f64>,
    /// Positive-half nodes, flattened.
    flat_nodes: Vec<f64>,
}

impl QuadratureScheme {
    pub fn new(eta: f64, a: f64, m: usize, q: usize) -> Result<Self> {
        let partition = make_partition(eta, a, m, q)?;
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        let mut damped = Vec::with_capacity(m * (q + 1));
        let mut flat_nodes = Vec::with_capacity(m * (q + 1));
        for k in 1..=m {
            let (lo, hi) = (partition[k - 1], partition[k]);
            let x = chebyshev_nodes(lo, hi, q);
            let w = lagrange_weights(&x, lo, hi)?;
            for (t, wt) in x.iter().zip(&w) {
                damped.push((hi - lo) * wt * (-eta * t).exp());
                flat_nodes.push(*t);
            }
            nodes.push(x);
            weights.push(w);
        }
        Ok(Self { eta, a, m, q, partition, nodes, weights, damped, flat_nodes })
    }

    pub fn for_params(params: &AgpParams, m: usize, q: usize) -> Result<Self> {
        Self::new(params.eta, params.a, m, q)
    }

    /// Number of terms on both halves, `2M(q+1)`.
    pub fn n_terms(&self) -> usize {
        2 * self.m * (self.q + 1)
    }

    /// All terms ordered by ascending `τ`.
    pub fn terms(&self) -> Vec<DiscreteTerm> {
        let mut out = Vec::with_capacity(self.n_terms());
        for k in (1..=self.m).rev() {
            for alpha in (0..=self.q).rev() {
                let i = (k - 1) * (self.q + 1) + alpha;
                out.push(DiscreteTerm { kappa: -(k as i64), alpha, tau: -self.flat_nodes[i], b: -0.5 * self.damped[i] });
            }
        }
        for k in 1..=self.m {
            for alpha in 0..=self.q {
                let i = (k - 1) * (self.q + 1) + alpha;
                out.push(DiscreteTerm { kappa: k as i64, alpha, tau: self.flat_nodes[i], b: 0.5 * self.damped[i] });
            }
        }
        out
    }

    /// `Σ_{κ>0,α} δτ_κ w_{κ,α} e^{-ητ_{κ,α}}`, the quadrature of `∫_0^a e^{-ητ} dτ`.
    pub fn scalar_sum(&self) -> f64 {
        self.damped.iter().sum()
    }

    /// Quadrature of `∫_0^a e^{-ητ} sin(ωτ) dτ`.
    pub fn sine_kernel(&self, omega: f64) -> f64 {
        self.damped.iter().zip(&self.flat_nodes).map(|(c, t)| c * (omega * t).sin()).sum()
    }

    /// `η^{q+1} (2a)^{q+2} / (M^{q+1} (q+1)!)`.
    pub fn remainder_bound(&self) -> f64 {
        let q1 = (self.q + 1) as f64;
        let fact: f64 = (1..=self.q + 1).map(|x| x as f64).product();
        self.eta.powf(q1) * (2.0 * self.a).powf(q1 + 1.0) / ((self.m as f64).powf(q1) * fact)
    }
}

/// `A^{M,q}(λ) = Σ b_{κ,α} e^{-iHτ_{κ,α}} ∂H e^{iHτ_{κ,α}}`, with the conjugations done
/// exactly in the eigenbasis.
pub fn assemble_discrete_agp(es: &Eigensystem, dh: &CMat, scheme: &QuadratureScheme) -> Result<CMat> {
    kernel_agp(es, dh, |w| scheme.sine_kernel(w))
}

/// `M = ceil(max{3e (2a)^{1+1/(q+1)} ‖H‖ ‖∂H‖_{n,1}^{1/(q+1)} / (ε^{1/(q+1)} (q+1)), e^{ηa/(q+2)} - 1})`.
pub fn select_m(q: usize, a: f64, eps: f64, h_norm: f64, dh_norm_n1: f64, eta: f64) -> Result<usize> {
    if !(a > 0.0 && eps > 0.0 && h_norm > 0.0 && dh_norm_n1 > 0.0 && eta > 0.0) {
        return domain("select_m needs positive inputs");
    }
    if eps > 1.0 {
        return domain(format!("eps = {eps} exceeds 1"));
    }
    let q1 = (q + 1) as f64;
    let first = 3.0 * std::f64::consts::E * (2.0 * a).powf(1.0 + 1.0 / q1) / (eps.powf(1.0 / q1) * q1)
        * h_norm
        * dh_norm_n1.powf(1.0 / q1);
    let second = (eta * a / (q + 2) as f64).exp_m1();
    let m = first.max(second).ceil();
    if !m.is_finite() || m > MAX_SUBINTERVALS {
        return Err(CdError::Resource(format!("M = {m:.3e} subintervals exceeds the limit {MAX_SUBINTERVALS:.0e}")));
    }
    Ok((m as usize).max(1))
}

/// Warning text when the cutoff exceeds the smallest Hamiltonian norm on the path.
pub fn eta_precondition(eta: f64, min_h_norm: f64) -> Option<String> {
    (eta > min_h_norm).then(|| format!("eta = {eta:.4e} exceeds min ||H(lambda)|| = {min_h_norm:.4e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agp::damped_sine_integral;
    use crate::hamiltonian::{LcuHamiltonian, LcuTerm, Schedule};
    use crate::linalg::{hermiticity_defect, spectral_norm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn partition_endpoints() {
        let tau = make_partition(0.3, 7.0, 10, 2).unwrap();
        assert_eq!(tau[0], 0.0);
        assert_eq!(tau[10], 7.0);
    }

    #[test]
    fn partition_two_subintervals() {
        let tau = make_partition(1.0, 1.0, 2, 0).unwrap();
        // -2 ln(1 - (1 - e^{-1/2})/2) = 0.438140...
        let oracle = -2.0 * (1.0 - 0.5 * (1.0 - (-0.5_f64).exp())).ln();
        assert_abs_diff_eq!(tau[1], oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(tau[1], 0.43813, epsilon = 2e-5);
    }

    #[test]
    fn single_node_weight_is_one() {
        assert_eq!(lagrange_weights(&[0.3], 0.0, 1.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn endpoint_nodes_give_trapezoid() {
        let w = lagrange_weights(&[0.0, 2.0], 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn coincident_nodes_are_rejected() {
        assert!(lagrange_weights(&[0.2, 0.2], 0.0, 1.0).is_err());
    }

    #[test]
    fn select_m_first_branch() {
        assert_eq!(select_m(0, 1.0, 0.1, 1.0, 1.0, 1e-3).unwrap(), 327);
    }

    #[test]
    fn select_m_second_branch() {
        // ηa = 60: e^{20} - 1 dwarfs the first branch.
        let m = select_m(1, 1.0, 1.0, 1.0, 1.0, 60.0).unwrap();
        assert_eq!(m, (20.0_f64.exp_m1()).ceil() as usize);
    }

    #[test]
    fn commuting_case_gives_zero() {
        let h = LcuHamiltonian::new(1, vec![LcuTerm::new("Z".parse().unwrap(), 0.0, 1.0)], Schedule::linear(), (0.5, 1.0))
            .unwrap();
        let es = Eigensystem::of(&h, 0.7).unwrap();
        let scheme = QuadratureScheme::new(0.5, 3.0, 4, 2).unwrap();
        let a = assemble_discrete_agp(&es, &h.derivative(0.7, 1).unwrap(), &scheme).unwrap();
        assert!(a.camax() < 1e-15);
    }

    #[test]
    fn discrete_agp_is_hermitian_and_close_to_continuous() {
        let h = LcuHamiltonian::new(
            1,
            vec![LcuTerm::new("X".parse().unwrap(), 1.0, 0.0), LcuTerm::new("Z".parse().unwrap(), 0.0, 1.0)],
            Schedule::linear(),
            (-1.0, 1.0),
        )
        .unwrap();
        let params = AgpParams::new(0.4, 8.0, 0.1).unwrap();
        let es = Eigensystem::of(&h, 0.3).unwrap();
        let dh = h.derivative(0.3, 1).unwrap();
        let exact = crate::agp::reg_trunc_agp(&es, &dh, &params).unwrap().matrix;
        let mut last = f64::INFINITY;
        for m in [8, 16, 32, 64] {
            let scheme = QuadratureScheme::for_params(&params, m, 2).unwrap();
            let a = assemble_discrete_agp(&es, &dh, &scheme).unwrap();
            assert!(hermiticity_defect(&a) < 1e-12);
            let err = spectral_norm(&(a - &exact));
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn m_decreases_with_q() {
        let ms: Vec<usize> = (0..=6).map(|q| select_m(q, 20.0, 0.05, 1.5, 2.0, 0.3).unwrap()).collect();
        assert!(ms.windows(2).all(|w| w[1] < w[0]), "{ms:?}");
    }

    proptest! {
        #[test]
        fn partition_is_increasing(eta in 0.01f64..3.0, a in 0.1f64..100.0, m in 1usize..64, q in 0usize..6) {
            let tau = make_partition(eta, a, m, q).unwrap();
            prop_assert!(tau.windows(2).all(|w| w[1] > w[0]));
            prop_assert!((tau[m] - a).abs() <= 1e-12 * a);
        }

        #[test]
        fn weights_sum_to_one(q in 0usize..=6, lo in -3.0f64..3.0, len in 0.01f64..5.0, seed in 0u64..10_000) {
            let hi = lo + len;
            let mut x: Vec<f64> = (0..=q).map(|j| {
                let u = ((seed as f64 + 1.0) * (j as f64 + 1.0) * 0.618_033_988_75).fract();
                lo + len * (0.02 + 0.96 * u)
            }).collect();
            x.sort_by(f64::total_cmp);
            x.dedup();
            prop_assume!(x.windows(2).all(|w| w[1] - w[0] > 0.05 * len));
            let w = lagrange_weights(&x, lo, hi).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn scheme_invariants(eta in 0.05f64..2.0, a in 0.5f64..40.0, m in 1usize..40, q in 0usize..5) {
            let s = QuadratureScheme::new(eta, a, m, q).unwrap();
            for k in 0..m {
                prop_assert!((s.weights[k].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for &x in &s.nodes[k] {
                    prop_assert!(x > s.partition[k] && x < s.partition[k + 1]);
                }
            }
            let terms = s.terms();
            prop_assert_eq!(terms.len(), s.n_terms());
            prop_assert!(terms.iter().all(|t| t.b.signum() == t.tau.signum()));
            let exact = -(-eta * a).exp_m1() / eta;
            let total: f64 = terms.iter().map(|t| t.b.abs()).sum();
            prop_assert!(total <= exact + s.remainder_bound() + 1e-12);
        }

        #[test]
        fn scalar_remainder_bound(eta in 0.05f64..2.0, a in 0.5f64..40.0, m in 1usize..200, q in 0usize..5) {
            let s = QuadratureScheme::new(eta, a, m, q).unwrap();
            let exact = -(-eta * a).exp_m1() / eta;
            prop_assert!((s.scalar_sum() - exact).abs() <= s.remainder_bound() * (1.0 + 1e-9) + 1e-13);
        }

        #[test]
        fn per_interval_lagrange_error(eta in 0.05f64..3.0, lo in 0.0f64..10.0, len in 0.01f64..3.0, q in 0usize..6) {
            let hi = lo + len;
            let x = chebyshev_nodes(lo, hi, q);
            let w = lagrange_weights(&x, lo, hi).unwrap();
            let approx: f64 = len * x.iter().zip(&w).map(|(t, wt)| wt * (-eta * t).exp()).sum::<f64>();
            let exact = ((-eta * lo).exp() - (-eta * hi).exp()) / eta;
            let fact: f64 = (1..=q + 1).map(|v| v as f64).product();
            let bound = len.powi(q as i32 + 2) * eta.powi(q as i32 + 1) * (-eta * lo).exp() / fact;
            prop_assert!((approx - exact).abs() <= bound * (1.0 + 1e-9) + 1e-14);
        }

        #[test]
        fn sine_kernel_converges(omega in 0.1f64..4.0) {
            let s = QuadratureScheme::new(0.3, 10.0, 400, 3).unwrap();
            prop_assert!((s.sine_kernel(omega) - damped_sine_integral(omega, 0.3, 10.0)).abs() < 1e-8);
        }
    }
}
