//! Instantaneous eigensystems along a λ path.
//!
//! Levels are labelled by their ascending rank at the first grid point and followed by
//! maximal overlap. Consecutive overlaps of a label are made real and positive; inside a
//! degenerate cluster the new basis is the polar-aligned image of the previous one.

use nalgebra::DMatrix;

use crate::error::{domain, CdError, Result};
use crate::hamiltonian::LcuHamiltonian;
use crate::linalg::{eigh, CMat, CVec, C64};

pub const DEFAULT_GRID_POINTS: usize = 129;
pub const MAX_REFINEMENT_DEPTH: usize = 12;
pub const CONTINUITY_THRESHOLD: f64 = 0.9;
pub const GAPLESS_TOLERANCE: f64 = 1e-12;
/// Relative eigenvalue spread below which levels are treated as one cluster.
const CLUSTER_TOLERANCE: f64 = 1e-9;

/// Eigenvalues and eigenvector columns at one λ, in any consistent order.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub lambda: f64,
    pub energies: Vec<f64>,
    pub vectors: CMat,
}

impl Eigensystem {
    /// Ascending eigensystem of `H(λ)`.
    pub fn of(h: &LcuHamiltonian, lambda: f64) -> Result<Self> {
        Ok(Self::from_matrix(lambda, &h.dense(lambda)?))
    }

    pub fn from_matrix(lambda: f64, m: &CMat) -> Self {
        let (energies, vectors) = eigh(m);
        Self { lambda, energies, vectors }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V† op V`.
    pub fn to_eigenbasis(&self, op: &CMat) -> CMat {
        self.vectors.adjoint() * op * &self.vectors
    }

    /// `V m V†`.
    pub fn to_computational(&self, m: &CMat) -> CMat {
        &self.vectors * m * self.vectors.adjoint()
    }

    /// Largest `|E|`, the spectral norm of the Hamiltonian.
    pub fn spectral_radius(&self) -> f64 {
        self.energies.iter().fold(0.0_f64, |a, e| a.max(e.abs()))
    }
}

/// Norm exponent `p` in `‖O‖_{·,p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    P(u32),
    Inf,
}

/// Whether a path norm acts on a tracked state or uses the operator norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormTarget {
    /// `‖O(λ)|n(λ)⟩‖`.
    Level(usize),
    /// `‖O(λ)‖`.
    Operator,
}

#[derive(Debug, Clone)]
struct Point {
    lambda: f64,
    /// Label order.
    energies: Vec<f64>,
    /// Label-ordered, gauge-fixed columns.
    vectors: CMat,
    /// `rank[label]` is the ascending position of the label.
    rank: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SpectralPath {
    points: Vec<Point>,
    refined: usize,
}

impl SpectralPath {
    /// Tracks on a uniform grid of [`DEFAULT_GRID_POINTS`] points.
    pub fn uniform(h: &LcuHamiltonian, lo: f64, hi: f64) -> Result<Self> {
        Self::uniform_with(h, lo, hi, DEFAULT_GRID_POINTS)
    }

    pub fn uniform_with(h: &LcuHamiltonian, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return domain("a path needs at least two grid points");
        }
        let grid: Vec<f64> = (0..points)
            .map(|j| if j + 1 == points { hi } else { lo + (hi - lo) * j as f64 / (points - 1) as f64 })
            .collect();
        Self::track(h, &grid)
    }

    /// Follows every level across `grid`, bisecting intervals whose overlaps drop below
    /// the continuity threshold.
    pub fn track(h: &LcuHamiltonian, grid: &[f64]) -> Result<Self> {
        if grid.len() < 2 {
            return domain("a path needs at least two grid points");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("grid must be strictly increasing");
        }
        for &l in grid {
            h.check_lambda(l)?;
        }
        let first = initial_point(grid[0], &h.dense(grid[0])?);
        let mut points = vec![first];
        let mut refined = 0;
        for &lb in &grid[1..] {
            let before = points.len();
            advance(h, lb, 0, &mut points)?;
            refined += points.len() - before - 1;
        }
        Ok(Self { points, refined })
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].energies.len()
    }

    /// Number of grid points inserted by refinement.
    pub fn refined_points(&self) -> usize {
        self.refined
    }

    pub fn range(&self) -> (f64, f64) {
        (self.points[0].lambda, self.points[self.points.len() - 1].lambda)
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.points[i].lambda
    }

    /// Label-ordered energies at grid index `i`.
    pub fn energies(&self, i: usize) -> &[f64] {
        &self.points[i].energies
    }

    /// Label-ordered, gauge-fixed eigenvectors at grid index `i`.
    pub fn vectors(&self, i: usize) -> &CMat {
        &self.points[i].vectors
    }

    pub fn state(&self, i: usize, level: usize) -> CVec {
        self.points[i].vectors.column(level).into_owned()
    }

    pub fn eigensystem(&self, i: usize) -> Eigensystem {
        let p = &self.points[i];
        Eigensystem { lambda: p.lambda, energies: p.energies.clone(), vectors: p.vectors.clone() }
    }

    /// Ascending rank of `level` at grid index `i`.
    pub fn rank(&self, i: usize, level: usize) -> usize {
        self.points[i].rank[level]
    }

    /// Smallest distance from `E_n` to its spectral neighbours over the grid.
    pub fn min_gap(&self, level: usize) -> Result<f64> {
        if level >= self.dim() {
            return domain(format!("level {level} out of range for dimension {}", self.dim()));
        }
        if self.dim() == 1 {
            return domain("a one-dimensional spectrum has no gap");
        }
        let mut best = f64::INFINITY;
        let mut at = self.points[0].lambda;
        for p in &self.points {
            let mut sorted = p.energies.clone();
            sorted.sort_by(f64::total_cmp);
            let r = p.rank[level];
            let mut g = f64::INFINITY;
            if r + 1 < sorted.len() {
                g = g.min(sorted[r + 1] - sorted[r]);
            }
            if r > 0 {
                g = g.min(sorted[r] - sorted[r - 1]);
            }
            if g < best {
                best = g;
                at = p.lambda;
            }
        }
        if best < GAPLESS_TOLERANCE {
            return Err(CdError::Gapless { lambda: at, gap: best });
        }
        Ok(best)
    }

    /// Smallest spectral norm `‖H(λ)‖` over the grid.
    pub fn min_spectral_radius(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.energies.iter().fold(0.0_f64, |a, e| a.max(e.abs())))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest spectral norm `‖H(λ)‖` over the grid.
    pub fn max_spectral_radius(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.energies.iter().fold(0.0_f64, |a, e| a.max(e.abs())))
            .fold(0.0, f64::max)
    }

    /// `Σ_n |n(λ_f)⟩⟨n(λ_i)|` with the path's gauge.
    pub fn transport(&self) -> CMat {
        let first = &self.points[0].vectors;
        let last = &self.points[self.points.len() - 1].vectors;
        last * first.adjoint()
    }

    /// `‖O‖_{n,p}` or `‖O‖_{∞,p}` by composite Simpson quadrature on the grid; `p = ∞`
    /// is the grid maximum.
    pub fn norm<F>(&self, op: F, target: NormTarget, p: Exponent) -> Result<f64>
    where
        F: Fn(f64) -> Result<CMat>,
    {
        let mut values = Vec::with_capacity(self.points.len());
        for (i, pt) in self.points.iter().enumerate() {
            let o = op(pt.lambda)?;
            let v = match target {
                NormTarget::Level(n) => {
                    if n >= self.dim() {
                        return domain(format!("level {n} out of range"));
                    }
                    (&o * self.state(i, n)).norm()
                }
                NormTarget::Operator => crate::linalg::spectral_norm(&o),
            };
            values.push(v);
        }
        Ok(match p {
            Exponent::Inf => values.iter().fold(0.0, |a: f64, &b| a.max(b)),
            Exponent::P(k) => {
                if k == 0 {
                    return domain("norm exponent must be positive");
                }
                let powered: Vec<f64> = values.iter().map(|v| v.powi(k as i32)).collect();
                simpson(&self.grid(), &powered).powf(1.0 / k as f64)
            }
        })
    }

    /// Continuity diagnostic: smallest `|⟨n(λ_j)|n(λ_{j+1})⟩|` over labels and steps.
    pub fn min_consecutive_overlap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let o = w[0].vectors.adjoint() * &w[1].vectors;
                (0..o.nrows()).map(|j| o[(j, j)].norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Composite Simpson rule on a possibly non-uniform grid; an odd trailing interval is
/// integrated with the quadratic through its last three nodes.
pub fn simpson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    match x.len() {
        0 | 1 => return 0.0,
        2 => return 0.5 * (x[1] - x[0]) * (y[0] + y[1]),
        _ => {}
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < x.len() {
        let w = quadratic_weights([x[i], x[i + 1], x[i + 2]], x[i], x[i + 2]);
        total += w[0] * y[i] + w[1] * y[i + 1] + w[2] * y[i + 2];
        i += 2;
    }
    if i + 1 < x.len() {
        let j = x.len() - 3;
        let w = quadratic_weights([x[j], x[j + 1], x[j + 2]], x[j + 1], x[j + 2]);
        total += w[0] * y[j] + w[1] * y[j + 1] + w[2] * y[j + 2];
    }
    total
}

/// Weights of `∫_u^v` for the quadratic interpolant through `nodes`.
fn quadratic_weights(nodes: [f64; 3], u: f64, v: f64) -> [f64; 3] {
    let shift = nodes[1];
    let x = nodes.map(|t| t - shift);
    let (u, v) = (u - shift, v - shift);
    let m3 = (v.powi(3) - u.powi(3)) / 3.0;
    let m2 = (v * v - u * u) / 2.0;
    let m1 = v - u;
    let mut w = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let den = (x[i] - x[j]) * (x[i] - x[k]);
        w[i] = (m3 - (x[j] + x[k]) * m2 + x[j] * x[k] * m1) / den;
    }
    w
}

fn initial_point(lambda: f64, m: &CMat) -> Point {
    let (energies, mut vectors) = eigh(m);
    for c in 0..vectors.ncols() {
        let mut col = vectors.column_mut(c);
        let pivot = col.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for x in col.iter_mut() {
            *x *= phase;
        }
    }
    let rank = (0..energies.len()).collect();
    Point { lambda, energies, vectors, rank }
}

fn clusters(sorted: &[f64]) -> Vec<Vec<usize>> {
    let scale = sorted.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (j, e) in sorted.iter().enumerate() {
        match out.last_mut() {
            Some(c) if (e - sorted[*c.last().unwrap()]).abs() <= CLUSTER_TOLERANCE * scale => c.push(j),
            _ => out.push(vec![j]),
        }
    }
    out
}

struct Matched {
    point: Point,
    min_overlap: f64,
    /// Whether labels keep their energy ordering from the previous point.
    order_kept: bool,
    ambiguous: Option<String>,
}

fn match_point(prev: &Point, lambda: f64, m: &CMat) -> Matched {
    let (sorted, w) = eigh(m);
    let dim = sorted.len();
    let groups = clusters(&sorted);
    let overlaps = prev.vectors.adjoint() * &w;

    // weight[label][cluster] = squared projection of the previous label onto the cluster.
    let weight = DMatrix::from_fn(dim, groups.len(), |label, g| {
        groups[g].iter().map(|&c| overlaps[(label, c)].norm_sqr()).sum::<f64>()
    });

    let mut pairs: Vec<(usize, usize)> = (0..dim).flat_map(|l| (0..groups.len()).map(move |g| (l, g))).collect();
    pairs.sort_by(|a, b| weight[(b.0, b.1)].total_cmp(&weight[(a.0, a.1)]).then(a.cmp(b)));
    let mut capacity: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    let mut assigned = vec![usize::MAX; dim];
    for (l, g) in pairs {
        if assigned[l] == usize::MAX && capacity[g] > 0 {
            assigned[l] = g;
            capacity[g] -= 1;
        }
    }

    let mut ambiguous = None;
    let mut vectors = CMat::zeros(dim, dim);
    let mut energies = vec![0.0; dim];
    let mut rank = vec![0; dim];
    for (g, cols) in groups.iter().enumerate() {
        let labels: Vec<usize> = (0..dim).filter(|&l| assigned[l] == g).collect();
        let basis = CMat::from_fn(dim, cols.len(), |r, c| w[(r, cols[c])]);
        let previous = CMat::from_fn(dim, labels.len(), |r, c| prev.vectors[(r, labels[c])]);
        // Polar factor of basis† previous rotates the new cluster basis onto the old one.
        let o = basis.adjoint() * &previous;
        let svd = o.svd(true, true);
        let rotation = svd.u.unwrap() * svd.v_t.unwrap();
        let aligned = &basis * rotation;
        for (c, &l) in labels.iter().enumerate() {
            vectors.set_column(l, &aligned.column(c));
            energies[l] = sorted[cols[c]];
            rank[l] = cols[c];
        }
        if cols.len() > 1 {
            for &l in &labels {
                let own = weight[(l, g)];
                let elsewhere: f64 = (0..groups.len()).filter(|&h| h != g).map(|h| weight[(l, h)]).fold(0.0, f64::max);
                if own < 0.5 && elsewhere > 0.25 {
                    ambiguous = Some(format!("label {l} splits between degenerate clusters"));
                }
            }
        }
    }
    // Degenerate clusters have an arbitrary internal order; energies within a cluster
    // are equal to tolerance, so ranks follow the cluster.
    let o = prev.vectors.adjoint() * &vectors;
    let min_overlap = (0..dim).map(|j| o[(j, j)].norm()).fold(f64::INFINITY, f64::min);
    let scale = sorted.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
    let mut by_prev_rank: Vec<usize> = (0..dim).collect();
    by_prev_rank.sort_by_key(|&l| prev.rank[l]);
    let order_kept = by_prev_rank
        .windows(2)
        .all(|w| energies[w[0]] <= energies[w[1]] + CLUSTER_TOLERANCE * scale);
    Matched { point: Point { lambda, energies, vectors, rank }, min_overlap, order_kept, ambiguous }
}

fn advance(h: &LcuHamiltonian, lb: f64, depth: usize, out: &mut Vec<Point>) -> Result<()> {
    let prev = out.last().expect("path has a first point").clone();
    let m = match_point(&prev, lb, &h.dense(lb)?);
    // A reordering is only accepted once the interval is as fine as refinement allows,
    // since a coarse step across an avoided crossing also looks like one.
    if (m.min_overlap >= CONTINUITY_THRESHOLD && m.order_kept) || depth >= MAX_REFINEMENT_DEPTH {
        if m.min_overlap < CONTINUITY_THRESHOLD {
            if let Some(reason) = m.ambiguous {
                return Err(CdError::Tracking { lo: prev.lambda, hi: lb, reason });
            }
            tracing::warn!(lo = prev.lambda, hi = lb, overlap = m.min_overlap, "continuity threshold not met at refinement cap");
        }
        out.push(m.point);
        return Ok(());
    }
    let mid = 0.5 * (prev.lambda + lb);
    advance(h, mid, depth + 1, out)?;
    advance(h, lb, depth + 1, out)
}

/// Path quantities every pipeline needs, measured once on a tracked path.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathSummary {
    pub range: (f64, f64),
    pub level: usize,
    /// `Δ_n`.
    pub gap: f64,
    /// `‖∂H‖_{n,1} = ∫ ‖∂H |n⟩‖ dλ`.
    pub dh_norm_n1: f64,
    /// `‖∂H‖_{∞,1} = ∫ ‖∂H‖ dλ`.
    pub dh_norm_inf1: f64,
    /// `‖H‖_{∞,∞}`.
    pub h_norm: f64,
    /// `min_λ ‖H(λ)‖`.
    pub min_h_norm: f64,
}

impl PathSummary {
    pub fn measure(h: &LcuHamiltonian, path: &SpectralPath, level: usize) -> Result<Self> {
        let gap = path.min_gap(level)?;
        let dh = |l: f64| h.derivative(l, 1);
        Ok(Self {
            range: path.range(),
            level,
            gap,
            dh_norm_n1: path.norm(dh, NormTarget::Level(level), Exponent::P(1))?,
            dh_norm_inf1: path.norm(dh, NormTarget::Operator, Exponent::P(1))?,
            h_norm: path.max_spectral_radius(),
            min_h_norm: path.min_spectral_radius(),
        })
    }

    pub fn width(&self) -> f64 {
        self.range.1 - self.range.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{LcuTerm, Schedule};
    use crate::linalg::unitarity_defect;
    use approx::assert_abs_diff_eq;

    fn term(p: &str, a: f64, b: f64) -> LcuTerm {
        LcuTerm::new(p.parse().unwrap(), a, b)
    }

    fn lz() -> LcuHamiltonian {
        LcuHamiltonian::new(1, vec![term("X", 1.0, 0.0), term("Z", 0.0, 1.0)], Schedule::linear(), (-1.0, 1.0)).unwrap()
    }

    fn lambda_z(lo: f64, hi: f64) -> LcuHamiltonian {
        LcuHamiltonian::new(1, vec![term("Z", 0.0, 1.0)], Schedule::linear(), (lo, hi)).unwrap()
    }

    #[test]
    fn diagonal_path_has_constant_vectors() {
        let path = SpectralPath::uniform_with(&lambda_z(0.5, 1.0), 0.5, 1.0, 9).unwrap();
        for i in 0..path.len() {
            let l = path.lambda(i);
            assert_abs_diff_eq!(path.energies(i)[0], -l, epsilon = 1e-14);
            assert_abs_diff_eq!(path.energies(i)[1], l, epsilon = 1e-14);
            assert!((path.vectors(i) - path.vectors(0)).norm() < 1e-14);
        }
    }

    #[test]
    fn landau_zener_ground_energy() {
        let path = SpectralPath::uniform(&lz(), -1.0, 1.0).unwrap();
        for i in 0..path.len() {
            let l = path.lambda(i);
            assert_abs_diff_eq!(path.energies(i)[0], -(l * l + 1.0).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unsorted_grid_is_rejected() {
        assert!(matches!(SpectralPath::track(&lz(), &[0.0, -0.5, 0.5]), Err(CdError::Domain(_))));
    }

    #[test]
    fn landau_zener_min_gap() {
        let path = SpectralPath::uniform(&lz(), -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(path.min_gap(0).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_z_min_gap() {
        let path = SpectralPath::uniform(&lambda_z(1.0, 2.0), 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(path.min_gap(0).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_levels_are_gapless() {
        let h = LcuHamiltonian::new(2, vec![term("ZI", 1.0, 0.0), term("IX", 0.0, 0.0)], Schedule::linear(), (0.0, 1.0))
            .unwrap();
        let path = SpectralPath::uniform_with(&h, 0.0, 1.0, 5).unwrap();
        assert!(matches!(path.min_gap(0), Err(CdError::Gapless { .. })));
    }

    #[test]
    fn consecutive_overlaps_are_real_positive() {
        let path = SpectralPath::uniform(&lz(), -1.0, 1.0).unwrap();
        for i in 0..path.len() - 1 {
            let o = path.vectors(i).adjoint() * path.vectors(i + 1);
            for j in 0..2 {
                assert!(o[(j, j)].re > 0.9);
                assert!(o[(j, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coarse_grid_is_refined() {
        let h = LcuHamiltonian::new(1, vec![term("X", 0.05, 0.0), term("Z", 0.0, 1.0)], Schedule::linear(), (-1.0, 1.0))
            .unwrap();
        let path = SpectralPath::track(&h, &[-1.0, 1.0]).unwrap();
        assert!(path.refined_points() > 0);
        assert!(path.min_consecutive_overlap() >= CONTINUITY_THRESHOLD);
    }

    #[test]
    fn identity_norm_integrates_to_length() {
        let path = SpectralPath::uniform(&lambda_z(0.0, 1.0), 0.0, 1.0).unwrap();
        let v = path.norm(|_| Ok(CMat::identity(2, 2)), NormTarget::Level(0), Exponent::P(1)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sup_norm_is_grid_maximum() {
        let path = SpectralPath::uniform(&lambda_z(0.0, 2.0), 0.0, 2.0).unwrap();
        let v = path
            .norm(|l| Ok(CMat::identity(2, 2) * C64::new(l, 0.0)), NormTarget::Operator, Exponent::Inf)
            .unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn simpson_is_exact_for_cubics_on_uneven_pairs() {
        let x = [0.0, 0.1, 0.4, 0.5, 1.0];
        let y: Vec<f64> = x.iter().map(|t| t * t).collect();
        assert_abs_diff_eq!(simpson(&x, &y), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn transport_is_unitary_and_identity_for_constant_path() {
        let h = LcuHamiltonian::new(1, vec![term("X", 1.0, 0.0)], Schedule::linear(), (0.0, 1.0)).unwrap();
        let path = SpectralPath::uniform_with(&h, 0.0, 1.0, 5).unwrap();
        assert!((path.transport() - CMat::identity(2, 2)).norm() < 1e-12);
        let path = SpectralPath::uniform(&lz(), -1.0, 1.0).unwrap();
        assert!(unitarity_defect(&path.transport()) < 1e-10);
    }
}
