//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in order and their
//! lines appear in the test log whether they pass or fail. Every reference value is
//! computed here, independently of the code path under test: finite differences,
//! adaptive quadrature, Runge-Kutta propagation and hand-written count formulas.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use cdkit::agp::{exact_agp, kernel_bound, kernel_c, reg_trunc_agp, AgpParams};
use cdkit::aqc::aqc_factor_count;
use cdkit::linalg::{eigh, spectral_norm};
use cdkit::lts::{run_cd, CdOptions, EigenPropagator, LtsConfig, ProductPlan};
use cdkit::models::{landau_zener, tfim, ModelSpec};
use cdkit::qdrift::{b_operator, run_qdrift, sample_tau, trajectory_rng, SamplingPlan};
use cdkit::quadrature::{assemble_discrete_agp, QuadratureScheme};
use cdkit::verify::{check_product_formula, check_quadrature, check_regularization, Fixture, DEFAULT_REFERENCE_TOL};
use cdkit::{CMat, CVec, Eigensystem, LcuHamiltonian, C64};

/// Criterion 1: finite-difference step and element tolerance.
const FD_STEP: f64 = 1e-5;
const AGP_ELEMENT_TOL: f64 = 1e-6;
/// Full default TFIM path; near λ = 0.95 the gap is small and elements grow like 1/Δ,
/// which is the hardest regime for the central difference.
const TFIM_FD_RANGE: (f64, f64) = (0.05, 0.95);
/// Criterion 2.
const KERNEL_TOL: f64 = 1e-8;
const QUADRATURE_TOL: f64 = 1e-12;
/// Criterion 3: agreement between the library measurement and the RK4 cross-check.
const TRANSPORT_CROSSCHECK_TOL: f64 = 1e-6;
const RK4_STEPS: usize = 4000;
/// Criterion 5: allowed deviation of the log-log slope from 2k+1.
const SLOPE_TOL: f64 = 0.4;
/// Criterion 6: end-to-end budget is the sum of the three ε contributions.
const E2E_FACTOR: f64 = 3.0;
/// TFIM window for end-to-end runs; the default range is quasi-degenerate at its end.
const TFIM_WINDOW: (f64, f64) = (0.05, 0.3);
/// Criterion 7.
const MERGE_TOL: f64 = 1e-10;
/// Criterion 8.
const QDRIFT_EPS: f64 = 0.1;
const QDRIFT_TRAJECTORIES: usize = 2000;
const QDRIFT_SEED: u64 = 20_251;
const UNBIASED_SAMPLES: usize = 100_000;
const SIGMAS: f64 = 3.0;

type Verdict = Result<(bool, String), String>;

fn lz() -> ModelSpec {
    landau_zener()
}

fn tfim3() -> ModelSpec {
    tfim(3, 1.0).expect("tfim builds")
}

fn tfim_window() -> ModelSpec {
    tfim3().with_range(TFIM_WINDOW.0, TFIM_WINDOW.1).expect("window inside domain")
}

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn dense_eigensystem(h: &LcuHamiltonian, lambda: f64) -> Result<(Vec<f64>, CMat), String> {
    Ok(eigh(&h.dense(lambda).map_err(e)?))
}

/// Largest `|A_mn - i⟨m|∂n⟩|` over levels and sample points, with the derivative taken by
/// central differences of phase-aligned eigenvectors.
fn agp_fd_error(h: &LcuHamiltonian, points: &[f64]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for &l in points {
        let es = Eigensystem::of(h, l).map_err(e)?;
        let a = es.to_eigenbasis(&exact_agp(&es, &h.derivative(l, 1).map_err(e)?).map_err(e)?.matrix);
        let (_, plus) = dense_eigensystem(h, l + FD_STEP)?;
        let (_, minus) = dense_eigensystem(h, l - FD_STEP)?;
        let d = es.dim();
        for n in 0..d {
            let base = es.vectors.column(n);
            let aligned = |v: &CMat| -> CVec {
                let col = v.column(n).into_owned();
                let ov = base.dotc(&col);
                col * (ov.conj() / ov.norm())
            };
            let deriv = (aligned(&plus) - aligned(&minus)) / C64::new(2.0 * FD_STEP, 0.0);
            for m in 0..d {
                if m == n {
                    continue;
                }
                let fd = C64::i() * es.vectors.column(m).dotc(&deriv);
                worst = worst.max((fd - a[(m, n)]).norm());
            }
        }
    }
    Ok(worst)
}

fn criterion_1() -> Verdict {
    let lz_err = agp_fd_error(&lz().hamiltonian, &linspace(-0.95, 0.95, 20))?;
    let tfim_err = agp_fd_error(&tfim3().hamiltonian, &linspace(TFIM_FD_RANGE.0, TFIM_FD_RANGE.1, 10))?;
    Ok((
        lz_err <= AGP_ELEMENT_TOL && tfim_err <= AGP_ELEMENT_TOL,
        format!("max element error LZ {lz_err:.2e}, TFIM {tfim_err:.2e} (tol {AGP_ELEMENT_TOL:.0e})"),
    ))
}

/// Adaptive Simpson on `[lo, hi]` for a complex integrand.
fn adaptive_simpson(f: &dyn Fn(f64) -> C64, lo: f64, hi: f64, tol: f64) -> C64 {
    fn step(f: &dyn Fn(f64) -> C64, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
        let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
        let diff = left + right - whole;
        if depth == 0 || diff.norm() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
    let whole = (fa + fm * 4.0 + fb) * ((hi - lo) / 6.0);
    step(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

/// `½ ∫_{-a}^{a} e^{-η|τ|} sgn τ e^{-iωτ} dτ`, split at zero and into panels shorter
/// than a quarter period so each panel's integrand is smooth and unimodal.
fn windowed_transform(omega: f64, eta: f64, a: f64) -> C64 {
    let f = |t: f64| C64::from_polar(0.5 * (-eta * t.abs()).exp() * t.signum(), -omega * t);
    let panels = ((a * omega.abs() / (0.5 * std::f64::consts::PI)).ceil() as usize).max(1);
    let mut total = C64::new(0.0, 0.0);
    for (lo, hi) in [(-a, 0.0), (0.0, a)] {
        let w = (hi - lo) / panels as f64;
        for i in 0..panels {
            total += adaptive_simpson(&f, lo + i as f64 * w, lo + (i + 1) as f64 * w, QUADRATURE_TOL / panels as f64);
        }
    }
    total
}

fn criterion_2() -> Verdict {
    let omegas = [-3.0, -0.4, 0.25, 1.0, 7.5];
    let etas = [0.05, 0.2, 0.7, 1.5, 4.0];
    let windows = [0.5, 6.0, 40.0];
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    for &w in &omegas {
        for &eta in &etas {
            for &a in &windows {
                // The full transform is -i c(ω): ½∫ sgn τ e^{-iωτ} = -i/ω minus the window.
                let numeric = C64::i() * (C64::new(0.0, -1.0 / w) - windowed_transform(w, eta, a));
                let c = kernel_c(w, eta, a).map_err(e)?;
                worst = worst.max((numeric - C64::new(c, 0.0)).norm());
                bound_ok &= c.abs() <= kernel_bound(w, eta, a) * (1.0 + 1e-12);
            }
        }
    }
    // Dense scan for the bound, including small |ω| and long windows.
    let mut scanned = 0;
    for i in 1..=400 {
        let w = 0.01 * 1.02f64.powi(i);
        for &eta in &[0.01, 0.1, 1.0, 10.0] {
            for &a in &[0.1, 1.0, 10.0, 1000.0] {
                for sign in [-1.0, 1.0] {
                    let c = kernel_c(sign * w, eta, a).map_err(e)?;
                    bound_ok &= c.abs() <= kernel_bound(sign * w, eta, a) * (1.0 + 1e-12);
                    scanned += 1;
                }
            }
        }
    }
    Ok((
        worst <= KERNEL_TOL && bound_ok,
        format!("max |closed form - quadrature| {worst:.2e} on 5x5x3 grid (tol {KERNEL_TOL:.0e}); |c| <= g on {scanned} scan points: {bound_ok}"),
    ))
}

/// `‖ψ(λ_f) - |n(λ_f)⟩‖` with `ψ' = -i A_{η,a} ψ` integrated by classical RK4.
fn rk4_transport_error(model: &ModelSpec, params: &AgpParams, fx: &Fixture) -> Result<f64, String> {
    let h = &model.hamiltonian;
    let (lo, hi) = model.range;
    let gen = |l: f64| -> Result<CMat, String> {
        let es = Eigensystem::of(h, l).map_err(e)?;
        Ok(reg_trunc_agp(&es, &h.derivative(l, 1).map_err(e)?, params).map_err(e)?.matrix * C64::new(0.0, -1.0))
    };
    let dl = (hi - lo) / RK4_STEPS as f64;
    let mut psi = fx.path.state(0, model.level);
    for i in 0..RK4_STEPS {
        let l = lo + i as f64 * dl;
        let (g0, g1, g2) = (gen(l)?, gen(l + 0.5 * dl)?, gen(l + dl)?);
        let k1 = &g0 * &psi;
        let k2 = &g1 * (&psi + &k1 * C64::new(0.5 * dl, 0.0));
        let k3 = &g1 * (&psi + &k2 * C64::new(0.5 * dl, 0.0));
        let k4 = &g2 * (&psi + &k3 * C64::new(dl, 0.0));
        psi += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dl / 6.0, 0.0);
    }
    Ok((psi - fx.path.state(fx.path.len() - 1, model.level)).norm())
}

fn criterion_3() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in [lz(), tfim3()] {
        let fx = Fixture::new(&model).map_err(e)?;
        let mut margins = Vec::new();
        for eps in [0.1, 0.03, 0.01] {
            let row = check_regularization(&fx, eps, DEFAULT_REFERENCE_TOL).map_err(e)?;
            pass &= row.holds();
            if model.name == "landau_zener" {
                let params = AgpParams::new(row.params["eta"], row.params["a"], eps).map_err(e)?;
                let cross = rk4_transport_error(&model, &params, &fx)?;
                if (cross - row.measured).abs() > TRANSPORT_CROSSCHECK_TOL {
                    pass = false;
                    parts.push(format!("LZ eps={eps}: RK4 {cross:.3e} disagrees with {:.3e}", row.measured));
                }
            }
            margins.push(format!("{eps}:{:.3e}", row.margin));
        }
        parts.push(format!("{} margins [{}]", model.name, margins.join(" ")));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_4() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in [lz(), tfim_window()] {
        let fx = Fixture::new(&model).map_err(e)?;
        for q in [0, 2] {
            for eps in [0.1, 0.03] {
                let row = check_quadrature(&fx, eps, q).map_err(e)?;
                let (err, rem) = (row.params["scalar_error"], row.params["scalar_remainder_bound"]);
                // Independent scalar reference: ∫_0^a e^{-ητ} dτ in closed form.
                let (eta, a) = (row.params["eta"], row.params["a"]);
                let scheme = QuadratureScheme::new(eta, a, row.params["m"] as usize, q).map_err(e)?;
                let scalar = ((1.0 - (-eta * a).exp()) / eta - scheme.scalar_sum()).abs();
                pass &= row.holds() && err <= rem && scalar <= rem;
                parts.push(format!("{} q={q} eps={eps} margin {:.2e} scalar {scalar:.1e}<={rem:.1e}", model.name, row.margin));
            }
        }
    }
    Ok((pass, parts.join("; ")))
}

/// `𝒯 exp[-i ∫ A^{M,q}]` over `[lo, hi]` by RK4 on the unitary.
fn rk4_unitary(h: &LcuHamiltonian, scheme: &QuadratureScheme, lo: f64, hi: f64, steps: usize) -> Result<CMat, String> {
    let gen = |l: f64| -> Result<CMat, String> {
        let es = Eigensystem::of(h, l).map_err(e)?;
        Ok(assemble_discrete_agp(&es, &h.derivative(l, 1).map_err(e)?, scheme).map_err(e)? * C64::new(0.0, -1.0))
    };
    let dl = (hi - lo) / steps as f64;
    let mut u = CMat::identity(h.dim(), h.dim());
    for i in 0..steps {
        let l = lo + i as f64 * dl;
        let (g0, g1, g2) = (gen(l)?, gen(l + 0.5 * dl)?, gen(l + dl)?);
        let k1 = &g0 * &u;
        let k2 = &g1 * (&u + &k1 * C64::new(0.5 * dl, 0.0));
        let k3 = &g1 * (&u + &k2 * C64::new(0.5 * dl, 0.0));
        let k4 = &g2 * (&u + &k3 * C64::new(dl, 0.0));
        u += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dl / 6.0, 0.0);
    }
    Ok(u)
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_5() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    let model = lz();
    let fx = Fixture::new(&model).map_err(e)?;
    for k in [1, 2] {
        for eps in [0.3, 0.1] {
            let row = check_product_formula(&fx, eps, 2, k, DEFAULT_REFERENCE_TOL).map_err(e)?;
            pass &= row.holds();
            parts.push(format!("k={k} eps={eps} r={} margin {:.2e}", row.params["r"], row.margin));
        }
    }
    // Single-segment scaling on a fixed small scheme.
    let h = &model.hamiltonian;
    let scheme = QuadratureScheme::new(1.0, 2.0, 4, 2).map_err(e)?;
    let lambda0 = -0.3;
    for k in [1usize, 2] {
        let mut pts = Vec::new();
        for delta in [0.2, 0.1, 0.05, 0.025] {
            let plan = ProductPlan::new(&scheme, lambda0, lambda0 + delta, LtsConfig::new(k, 1).map_err(e)?);
            let lts = EigenPropagator::new(h).unitary(&plan).map_err(e)?;
            let exact = rk4_unitary(h, &scheme, lambda0, lambda0 + delta, 2000)?;
            pts.push((delta.ln(), spectral_norm(&(lts - exact)).ln()));
        }
        let slope = fit_slope(&pts);
        let target = (2 * k + 1) as f64;
        pass &= (slope - target).abs() <= SLOPE_TOL;
        parts.push(format!("k={k} slope {slope:.3} (target {target})"));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_6() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in [lz(), tfim_window()] {
        let mut last = f64::INFINITY;
        let mut errs = Vec::new();
        for eps in [0.3, 0.1, 0.03] {
            let run = run_cd(&model, eps, 2, 1, &CdOptions::default()).map_err(e)?;
            let overlap = run.final_state.dotc(&run.target_state).norm();
            let independent = (1.0 - overlap * overlap).max(0.0).sqrt();
            let err = run.result.error;
            pass &= err <= E2E_FACTOR * eps && err <= last && (independent - err).abs() <= 1e-9;
            last = err;
            errs.push(format!("{eps}:{err:.3e}"));
        }
        parts.push(format!("{} sqrt-infidelity [{}]", model.name, errs.join(" ")));
    }
    Ok((pass, parts.join("; ")))
}

fn criterion_7() -> Verdict {
    let mut pass = true;
    let mut cases = 0;
    for model in [lz(), tfim_window()] {
        let h = &model.hamiltonian;
        let ell = h.n_terms() as u64;
        for k in 1..=3usize {
            for r in [1usize, 2, 5] {
                let cfg = LtsConfig::new(k, r).map_err(e)?;
                let blocks = 5u64.pow(k as u32 - 1) * r as u64;
                pass &= aqc_factor_count(h, cfg) == 2 * ell * blocks;
                for (m, q) in [(1usize, 0usize), (2, 1), (3, 2)] {
                    let scheme = QuadratureScheme::new(0.7, 3.0, m, q).map_err(e)?;
                    let plan = ProductPlan::new(&scheme, model.range.0, model.range.1, cfg);
                    let terms = 2 * (m * (q + 1)) as u64;
                    let unmerged = plan.counts(false);
                    pass &= unmerged.b_rotations == 2 * terms * blocks;
                    pass &= unmerged.h_evolutions == 4 * terms * blocks;
                    pass &= plan.counts(true).b_rotations == 2 * terms * blocks;
                    cases += 1;
                }
            }
        }
        // Merged and unmerged sequences give the same operator.
        let scheme = QuadratureScheme::new(0.7, 3.0, 2, 1).map_err(e)?;
        for k in [1usize, 2] {
            let plan = ProductPlan::new(&scheme, model.range.0, model.range.1, LtsConfig::new(k, 2).map_err(e)?);
            let a = plan.sequence(true).dense_product(h).map_err(e)?;
            let b = plan.sequence(false).dense_product(h).map_err(e)?;
            pass &= spectral_norm(&(a - b)) <= MERGE_TOL;
        }
    }
    let single = aqc_factor_count(&lz().hamiltonian, LtsConfig::new(1, 1).map_err(e)?);
    pass &= single == 2 * lz().hamiltonian.n_terms() as u64;
    Ok((pass, format!("{cases} (model, k, r, M, q) count cases; single AQC segment = {single} = 2l; merge tol {MERGE_TOL:.0e}")))
}

fn criterion_8() -> Verdict {
    let model = lz();
    let (result, channel) = run_qdrift(&model, QDRIFT_EPS, QDRIFT_TRAJECTORIES, QDRIFT_SEED).map_err(e)?;
    let sigma = channel.bootstrap_sigma;
    let distance_ok = channel.trace_distance <= 2.0 * QDRIFT_EPS + SIGMAS * sigma;
    let mut parts = vec![format!(
        "r={} trace distance {:.4} (trace norm {:.4}) vs 2eps + 3 sigma = {:.4}",
        channel.r,
        channel.trace_distance,
        channel.trace_norm_error,
        2.0 * QDRIFT_EPS + SIGMAS * sigma
    )];

    // Sampled B against A_{η,a} at fixed λ, element by element.
    let h = &model.hamiltonian;
    let (eta, a) = (result.params["eta"], result.params["a"]);
    let plan = SamplingPlan::new(h, model.range, eta, a, 1, QDRIFT_SEED).map_err(e)?;
    let params = AgpParams::new(eta, a, QDRIFT_EPS).map_err(e)?;
    let mut unbiased = true;
    let mut worst_z: f64 = 0.0;
    for (i, lambda) in [-0.6, 0.0, 0.45].into_iter().enumerate() {
        let mut rng = trajectory_rng(QDRIFT_SEED, 100 + i as u64);
        let d = h.dim();
        let mut sum = CMat::zeros(d, d);
        let mut sq = vec![0.0; 2 * d * d];
        for _ in 0..UNBIASED_SAMPLES {
            let b = b_operator(h, lambda, sample_tau(&plan, &mut rng), eta, a).map_err(e)?;
            for (j, z) in b.iter().enumerate() {
                sq[2 * j] += z.re * z.re;
                sq[2 * j + 1] += z.im * z.im;
            }
            sum += b;
        }
        let n = UNBIASED_SAMPLES as f64;
        let mean = sum / C64::new(n, 0.0);
        let es = Eigensystem::of(h, lambda).map_err(e)?;
        let target = reg_trunc_agp(&es, &h.derivative(lambda, 1).map_err(e)?, &params).map_err(e)?.matrix;
        for (j, (m, t)) in mean.iter().zip(target.iter()).enumerate() {
            for (mu, tv, s2) in [(m.re, t.re, sq[2 * j]), (m.im, t.im, sq[2 * j + 1])] {
                let sd = ((s2 / n - mu * mu).max(0.0) / n).sqrt();
                let dev = (mu - tv).abs();
                if dev > SIGMAS * sd + 1e-12 {
                    unbiased = false;
                }
                if sd > 0.0 {
                    worst_z = worst_z.max(dev / sd);
                }
            }
        }
    }
    parts.push(format!("B mean vs A_eta,a over {UNBIASED_SAMPLES} samples at 3 lambdas: max |z| {worst_z:.2}"));
    Ok((distance_ok && unbiased, parts.join("; ")))
}

fn run_verify_bounds(root: &Path, config: &Path) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cdkit"))
        .args(["verify-bounds", "--config", config.to_str().unwrap()])
        .env("CDKIT_OUT_DIR", root)
        .output()
        .map_err(e)?;
    if !out.status.success() {
        return Err(format!("verify-bounds exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let dir = root.join("verify-bounds");
    Ok((
        std::fs::read(dir.join("results.csv")).map_err(e)?,
        std::fs::read(dir.join("manifest.json")).map_err(e)?,
    ))
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().map_err(e)?;
    let config = tmp.path().join("suite.toml");
    std::fs::write(&config, "eps = [0.1, 0.03]\nq = 2\nk = 1\nseed = 7\nworkers = 2\n").map_err(e)?;
    let (csv_a, manifest_a) = run_verify_bounds(&tmp.path().join("a"), &config)?;
    let (csv_b, manifest_b) = run_verify_bounds(&tmp.path().join("b"), &config)?;
    let rows = csv_a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    Ok((
        csv_a == csv_b && manifest_a == manifest_b && rows == 6,
        format!("{rows} rows; results.csv identical: {}; manifest.json identical: {}", csv_a == csv_b, manifest_a == manifest_b),
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 9] = [
        (1, "gauge potential matches finite differences", criterion_1),
        (2, "kernel closed form matches quadrature and its bound", criterion_2),
        (3, "regularization error within eps", criterion_3),
        (4, "quadrature error within eps", criterion_4),
        (5, "product-formula error within eps and order", criterion_5),
        (6, "end-to-end counterdiabatic error within 3 eps", criterion_6),
        (7, "exact factor counts and merge identity", criterion_7),
        (8, "randomized channel accuracy and unbiasedness", criterion_8),
        (9, "bit-identical verify-bounds reruns", criterion_9),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut stdout = std::io::stdout();
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(msg) => (false, format!("error: {msg}")),
        };
        failed += usize::from(!pass);
        let _ = writeln!(
            stdout,
            "criterion {id} {}: {name} | {detail} | {:.1}s",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        let _ = stdout.flush();
    }
    if failed > 0 {
        let _ = writeln!(stdout, "{failed} criteria failed");
        std::process::exit(1);
    }
}
