//! Adiabatic gauge potentials and reference propagators.
//!
//! All gauge potentials are assembled in the instantaneous eigenbasis from
//! `⟨m|∂_λH|n⟩` times a scalar kernel of `ω_mn = E_m - E_n`, then rotated back to the
//! computational basis. The diagonal is always zero.

use serde::{Deserialize, Serialize};

use crate::error::{domain, CdError, Result};
use crate::hamiltonian::LcuHamiltonian;
use crate::linalg::{expm_herm, spectral_norm, CMat, C64};
use crate::spectral::{Eigensystem, SpectralPath};

/// Gaps below this fraction of the spectral scale count as degenerate.
const DEGENERATE_GAP: f64 = 1e-9;
/// Couplings inside a degenerate pair below this fraction of `‖∂H‖` count as zero.
const NULL_COUPLING: f64 = 1e-9;

pub const ORDERED_EXP_START_STEPS: usize = 256;
pub const ORDERED_EXP_MAX_STEPS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgpParams {
    pub eta: f64,
    pub a: f64,
    pub eps: f64,
}

impl AgpParams {
    pub fn new(eta: f64, a: f64, eps: f64) -> Result<Self> {
        if !(eta > 0.0 && a > 0.0 && eps > 0.0) {
            return domain(format!("eta = {eta}, a = {a} and eps = {eps} must be positive"));
        }
        Ok(Self { eta, a, eps })
    }

    /// Cutoff rate and truncation time that bound the transport error by `eps`:
    /// `η = Δ^{3/2} ε^{1/2} ‖∂H‖^{-1/2} / √2`, `a = ln(2(Δ+η)‖∂H‖ / (Δεη)) / η`.
    pub fn select(gap: f64, eps: f64, dh_norm_n1: f64) -> Result<Self> {
        if !(gap > 0.0 && eps > 0.0 && dh_norm_n1 > 0.0) {
            return domain(format!("gap = {gap}, eps = {eps}, dH norm = {dh_norm_n1} must be positive"));
        }
        if eps > 1.0 {
            return domain(format!("eps = {eps} exceeds 1"));
        }
        let eta = gap.powf(1.5) * eps.sqrt() / (dh_norm_n1.sqrt() * std::f64::consts::SQRT_2);
        let a = (2.0 * (gap + eta) * dh_norm_n1 / (gap * eps * eta)).ln() / eta;
        Self::new(eta, a, eps)
    }

    /// `(1 - e^{-ηa}) / η`, the weight of the one-sided damped window.
    pub fn window_mass(&self) -> f64 {
        -(-self.eta * self.a).exp_m1() / self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgpVariant {
    Exact,
    RegularizedTruncated,
    Discrete,
}

/// A gauge potential at one λ, in the computational basis.
#[derive(Debug, Clone)]
pub struct GaugePotential {
    pub lambda: f64,
    pub variant: AgpVariant,
    pub matrix: CMat,
}

/// `1/ω - ω/(ω²+η²) + e^{-aη}(ω cos aω + η sin aω)/(ω²+η²)`, the spectral weight that the
/// regularized truncated potential misses relative to the exact one.
pub fn kernel_c(omega: f64, eta: f64, a: f64) -> Result<f64> {
    if omega == 0.0 {
        return domain("kernel_c is singular at omega = 0");
    }
    if !(eta > 0.0 && a > 0.0) {
        return domain("kernel_c needs eta > 0 and a > 0");
    }
    Ok(1.0 / omega - damped_sine_integral(omega, eta, a))
}

/// Upper bound `η²/|ω|³ + e^{-ηa}(1/|ω| + 1/η)` on `|c_{η,a}(ω)|`.
pub fn kernel_bound(omega: f64, eta: f64, a: f64) -> f64 {
    let w = omega.abs();
    eta * eta / (w * w * w) + (-eta * a).exp() * (1.0 / w + 1.0 / eta)
}

/// `∫_0^a e^{-ητ} sin(ωτ) dτ = (ω - e^{-ηa}(ω cos aω + η sin aω)) / (ω² + η²)`.
pub fn damped_sine_integral(omega: f64, eta: f64, a: f64) -> f64 {
    let (s, c) = (a * omega).sin_cos();
    (omega - (-eta * a).exp() * (omega * c + eta * s)) / (omega * omega + eta * eta)
}

/// Builds `V (K ∘ V†∂H V) V†` with `K_mn = -i k(ω_mn)` off the diagonal.
fn from_kernel<F>(es: &Eigensystem, dh: &CMat, kernel: F) -> Result<CMat>
where
    F: Fn(f64) -> f64,
{
    let d = es.dim();
    let coupling = es.to_eigenbasis(dh);
    let scale = es.spectral_radius().max(1.0);
    let dh_scale = coupling.camax().max(f64::MIN_POSITIVE);
    let mut a = CMat::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            if m == n {
                continue;
            }
            let omega = es.energies[m] - es.energies[n];
            if omega.abs() <= DEGENERATE_GAP * scale {
                if coupling[(m, n)].norm() > NULL_COUPLING * dh_scale {
                    return Err(CdError::Gapless { lambda: es.lambda, gap: omega.abs() });
                }
                continue;
            }
            a[(m, n)] = coupling[(m, n)] * C64::new(0.0, -kernel(omega));
        }
    }
    Ok(es.to_computational(&a))
}

/// `A_mn = ⟨m|∂H|n⟩ / (i ω_mn)`.
pub fn exact_agp(es: &Eigensystem, dh: &CMat) -> Result<GaugePotential> {
    let matrix = from_kernel(es, dh, |w| 1.0 / w)?;
    Ok(GaugePotential { lambda: es.lambda, variant: AgpVariant::Exact, matrix })
}

/// `A_{η,a,mn} = -i ⟨m|∂H|n⟩ ∫_0^a e^{-ητ} sin(ω_mn τ) dτ`.
pub fn reg_trunc_agp(es: &Eigensystem, dh: &CMat, params: &AgpParams) -> Result<GaugePotential> {
    let matrix = from_kernel(es, dh, |w| damped_sine_integral(w, params.eta, params.a))?;
    Ok(GaugePotential { lambda: es.lambda, variant: AgpVariant::RegularizedTruncated, matrix })
}

/// Eigenbasis-kernel potential for an arbitrary odd kernel; used by the discrete variant.
pub(crate) fn kernel_agp<F>(es: &Eigensystem, dh: &CMat, kernel: F) -> Result<CMat>
where
    F: Fn(f64) -> f64,
{
    from_kernel(es, dh, kernel)
}

pub fn exact_agp_at(h: &LcuHamiltonian, lambda: f64) -> Result<GaugePotential> {
    exact_agp(&Eigensystem::of(h, lambda)?, &h.derivative(lambda, 1)?)
}

pub fn reg_trunc_agp_at(h: &LcuHamiltonian, lambda: f64, params: &AgpParams) -> Result<GaugePotential> {
    reg_trunc_agp(&Eigensystem::of(h, lambda)?, &h.derivative(lambda, 1)?, params)
}

/// `Σ_n |n(λ_f)⟩⟨n(λ_i)|` using the path's gauge.
pub fn reference_transport(path: &SpectralPath) -> CMat {
    path.transport()
}

#[derive(Debug, Clone)]
pub struct OrderedExp {
    pub unitary: CMat,
    pub steps: usize,
    pub last_delta: f64,
}

/// `𝒯 exp[-i ∫ A(λ) dλ]` from `lambda_i` to `lambda_f` by midpoint products of exact
/// step exponentials, doubling the step count until successive products differ by less
/// than `tol` in spectral norm.
pub fn ordered_exp_reference<F>(generator: F, lambda_i: f64, lambda_f: f64, tol: f64) -> Result<OrderedExp>
where
    F: Fn(f64) -> Result<CMat>,
{
    ordered_exp_with(generator, lambda_i, lambda_f, tol, ORDERED_EXP_START_STEPS, ORDERED_EXP_MAX_STEPS)
}

pub fn ordered_exp_with<F>(
    generator: F,
    lambda_i: f64,
    lambda_f: f64,
    tol: f64,
    start_steps: usize,
    max_steps: usize,
) -> Result<OrderedExp>
where
    F: Fn(f64) -> Result<CMat>,
{
    if !(tol > 0.0) || start_steps == 0 || max_steps < start_steps {
        return domain("ordered_exp needs tol > 0 and 0 < start_steps <= max_steps");
    }
    let mut steps = start_steps;
    let mut previous = midpoint_product(&generator, lambda_i, lambda_f, steps)?;
    let mut delta = f64::INFINITY;
    while steps * 2 <= max_steps {
        steps *= 2;
        let next = midpoint_product(&generator, lambda_i, lambda_f, steps)?;
        delta = spectral_norm(&(&next - &previous));
        previous = next;
        if delta < tol {
            return Ok(OrderedExp { unitary: previous, steps, last_delta: delta });
        }
    }
    Err(CdError::Convergence { steps, last_delta: delta })
}

fn midpoint_product<F>(generator: &F, lambda_i: f64, lambda_f: f64, steps: usize) -> Result<CMat>
where
    F: Fn(f64) -> Result<CMat>,
{
    let h = (lambda_f - lambda_i) / steps as f64;
    let mut u: Option<CMat> = None;
    for j in 0..steps {
        let mid = lambda_i + (j as f64 + 0.5) * h;
        let step = expm_herm(&generator(mid)?, h);
        u = Some(match u {
            None => step,
            Some(acc) => step * acc,
        });
    }
    Ok(u.expect("steps > 0"))
}
