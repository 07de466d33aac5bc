//! Built-in benchmark Hamiltonians.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::hamiltonian::{LcuHamiltonian, LcuTerm, Schedule};
use crate::linalg::C64;
use crate::pauli::{Pauli, PauliString};
use crate::spectral::Eigensystem;

pub const REGISTRY: [&str; 3] = ["landau_zener", "tfim", "grover"];

type GapFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub hamiltonian: LcuHamiltonian,
    /// Default path `[λ_i, λ_f]`.
    pub range: (f64, f64),
    /// Default level `n`.
    pub level: usize,
    /// Closed-form gap of the default level, when known.
    pub gap_formula: Option<Arc<GapFn>>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("n_qubits", &self.hamiltonian.n_qubits())
            .field("terms", &self.hamiltonian.n_terms())
            .field("range", &self.range)
            .field("level", &self.level)
            .finish()
    }
}

/// Parameters accepted by [`by_name`]; unset fields take model defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_qubits: Option<usize>,
    pub coupling: Option<f64>,
    pub marked: Option<usize>,
}

impl ModelSpec {
    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.hamiltonian.check_lambda(lo)?;
        self.hamiltonian.check_lambda(hi)?;
        if !(hi > lo) {
            return domain(format!("empty range [{lo}, {hi}]"));
        }
        self.range = (lo, hi);
        Ok(self)
    }

    /// Checks the dense form against the Pauli sum and the gap formula against exact
    /// diagonalization at a few points of the range.
    pub fn verify(&self) -> Result<()> {
        let h = &self.hamiltonian;
        let (lo, hi) = self.range;
        for j in 0..5 {
            let l = lo + (hi - lo) * j as f64 / 4.0;
            let dense = h.dense(l)?;
            let mut sum = crate::linalg::CMat::zeros(h.dim(), h.dim());
            for (t, b) in h.terms().iter().zip(h.betas(l)) {
                sum += t.pauli.to_dense() * C64::new(b, 0.0);
            }
            let defect = (dense - sum).camax();
            if defect > 1e-12 {
                return domain(format!("{}: dense and LCU forms differ by {defect:.3e} at lambda = {l}", self.name));
            }
            if let Some(gap) = &self.gap_formula {
                let es = Eigensystem::of(h, l)?;
                let e = &es.energies;
                let n = self.level;
                let mut numeric = f64::INFINITY;
                if n + 1 < e.len() {
                    numeric = numeric.min(e[n + 1] - e[n]);
                }
                if n > 0 {
                    numeric = numeric.min(e[n] - e[n - 1]);
                }
                let expected = gap(l);
                if (numeric - expected).abs() > 1e-8 {
                    return domain(format!(
                        "{}: gap annotation {expected} disagrees with {numeric} at lambda = {l}",
                        self.name
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `H(λ) = λZ + X` on `[-1, 1]`, ground state.
pub fn landau_zener() -> ModelSpec {
    let terms = vec![
        LcuTerm::new(PauliString::single(1, 0, Pauli::X), 1.0, 0.0),
        LcuTerm::new(PauliString::single(1, 0, Pauli::Z), 0.0, 1.0),
    ];
    let hamiltonian = LcuHamiltonian::new(1, terms, Schedule::linear(), (-1.0, 1.0)).expect("valid model");
    ModelSpec {
        name: "landau_zener".into(),
        hamiltonian,
        range: (-1.0, 1.0),
        level: 0,
        gap_formula: Some(Arc::new(|l: f64| 2.0 * (l * l + 1.0).sqrt())),
    }
}

/// `H(λ) = -(1-λ) Σ X_i + λ J Σ Z_i Z_{i+1}` on an open chain, ground state, `λ ∈ [0.05, 0.95]`.
///
/// The field sign makes `|+…+⟩` the `λ = 0` ground state; conjugating by `Z^{⊗n}` flips it
/// without changing any spectrum.
pub fn tfim(n_qubits: usize, coupling: f64) -> Result<ModelSpec> {
    if !(2..=8).contains(&n_qubits) {
        return domain(format!("tfim supports 2 to 8 qubits, got {n_qubits}"));
    }
    if !coupling.is_finite() {
        return domain("tfim coupling must be finite");
    }
    let mut terms = Vec::new();
    for q in 0..n_qubits {
        terms.push(LcuTerm::new(PauliString::single(n_qubits, q, Pauli::X), -1.0, 1.0));
    }
    for q in 0..n_qubits - 1 {
        let mut ops = vec![Pauli::I; n_qubits];
        ops[q] = Pauli::Z;
        ops[q + 1] = Pauli::Z;
        terms.push(LcuTerm::new(PauliString::new(ops)?, 0.0, coupling));
    }
    let hamiltonian = LcuHamiltonian::new(n_qubits, terms, Schedule::linear(), (0.0, 1.0))?;
    Ok(ModelSpec { name: "tfim".into(), hamiltonian, range: (0.05, 0.95), level: 0, gap_formula: None })
}

/// `H(λ) = (1-λ)(I - |s⟩⟨s|) + λ(I - |m⟩⟨m|)` as an explicit Pauli expansion with
/// `2^{n+1} - 1` terms, ground state, `λ ∈ [0.02, 0.98]`.
pub fn grover(n_qubits: usize, marked: usize) -> Result<ModelSpec> {
    if !(2..=6).contains(&n_qubits) {
        return domain(format!("grover supports 2 to 6 qubits, got {n_qubits}"));
    }
    let dim = 1usize << n_qubits;
    if marked >= dim {
        return domain(format!("marked state {marked} out of range for {n_qubits} qubits"));
    }
    let w = 1.0 / dim as f64;
    let mut terms = vec![LcuTerm::new(PauliString::identity(n_qubits), 1.0 - w, 0.0)];
    for subset in 1..dim {
        let members = |op: Pauli| {
            (0..n_qubits)
                .map(|q| if (subset >> (n_qubits - 1 - q)) & 1 == 1 { op } else { Pauli::I })
                .collect::<Vec<_>>()
        };
        terms.push(LcuTerm::new(PauliString::new(members(Pauli::X))?, -w, w));
        // |m⟩⟨m| = 2^{-n} Σ_S (-1)^{m·S} Z_S.
        let parity = if (subset & marked).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(LcuTerm::new(PauliString::new(members(Pauli::Z))?, 0.0, -w * parity));
    }
    let hamiltonian = LcuHamiltonian::new(n_qubits, terms, Schedule::linear(), (0.0, 1.0))?;
    let overlap = 1.0 - w;
    Ok(ModelSpec {
        name: "grover".into(),
        hamiltonian,
        range: (0.02, 0.98),
        level: 0,
        gap_formula: Some(Arc::new(move |f: f64| (1.0 - 4.0 * f * (1.0 - f) * overlap).sqrt())),
    })
}

/// Looks up a model by registry name.
pub fn by_name(name: &str, params: &ModelParams) -> Result<ModelSpec> {
    let spec = match name {
        "landau_zener" | "lz" => landau_zener(),
        "tfim" => tfim(params.n_qubits.unwrap_or(3), params.coupling.unwrap_or(1.0))?,
        "grover" => grover(params.n_qubits.unwrap_or(3), params.marked.unwrap_or(0))?,
        other => {
            return domain(format!("unknown model '{other}'; available: {}", REGISTRY.join(", ")));
        }
    };
    spec.verify()?;
    Ok(spec)
}
