//! Dense complex linear algebra shared by every module.
//!
//! Hermitian eigendecomposition is the single source of spectra; matrix exponentials of
//! Hermitian generators are built from it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

/// Ascending eigenvalues and matching orthonormal eigenvector columns of a Hermitian matrix.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Rebuilds `V diag(phase(e)) V†`.
pub fn from_spectrum(values: &[f64], vectors: &CMat, phase: impl Fn(f64) -> C64) -> CMat {
    let mut scaled = vectors.clone();
    for (c, &e) in values.iter().enumerate() {
        let p = phase(e);
        for x in scaled.column_mut(c).iter_mut() {
            *x *= p;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_herm(h: &CMat, t: f64) -> CMat {
    let (values, vectors) = eigh(h);
    from_spectrum(&values, &vectors, |e| C64::from_polar(1.0, -e * t))
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn herm_norm(m: &CMat) -> f64 {
    let (values, _) = eigh(m);
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Schatten 1-norm.
pub fn trace_norm(m: &CMat) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

/// Largest element of `|m - m†|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Spectral-norm distance of `u†u` from the identity.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.nrows();
    spectral_norm(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `sqrt(1 - |<psi|phi>|^2)` for normalized states.
pub fn sqrt_infidelity(psi: &CVec, phi: &CVec) -> Result<f64> {
    const TOL: f64 = 1e-10;
    for (name, v) in [("psi", psi), ("phi", phi)] {
        let norm = v.norm();
        if (norm - 1.0).abs() > TOL {
            return domain(format!("{name} has norm {norm}, expected 1"));
        }
    }
    if psi.len() != phi.len() {
        return domain("states have different dimensions");
    }
    let overlap = psi.dotc(phi).norm_sqr();
    Ok((1.0 - overlap).max(0.0).sqrt())
}

/// Pure-state projector `|psi><psi|`.
pub fn projector(psi: &CVec) -> CMat {
    psi * psi.adjoint()
}

/// Trace distance `||rho - sigma||_1 / 2` between Hermitian matrices.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> f64 {
    let (values, _) = eigh(&(rho - sigma));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

pub fn basis_state(dim: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    v
}
