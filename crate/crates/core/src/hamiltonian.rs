//! Interpolating Hamiltonians `H(λ) = H_i + f(λ) H_p` stored as weighted Pauli sums.
//!
//! Each term carries its weight in `H_i` and in `H_p`, so `β_j(λ) = a_j + f(λ) b_j` and
//! every λ-derivative is `f^(p)(λ) H_p`.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, CdError, Result};
use crate::linalg::{CMat, C64};
use crate::pauli::PauliString;

type DerivFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// Scalar schedule `f(λ)` with derivatives.
#[derive(Clone)]
pub enum Schedule {
    /// `Σ c_j λ^j`; every derivative is exact.
    Polynomial(Vec<f64>),
    /// `eval(λ, p)` returns `f^(p)(λ)` for `p <= max_order`.
    Custom { eval: Arc<DerivFn>, max_order: usize, name: String },
}

impl Schedule {
    /// `f(λ) = λ`.
    pub fn linear() -> Self {
        Schedule::Polynomial(vec![0.0, 1.0])
    }

    pub fn max_order(&self) -> Option<usize> {
        match self {
            Schedule::Polynomial(_) => None,
            Schedule::Custom { max_order, .. } => Some(*max_order),
        }
    }

    /// `f^(p)(λ)`.
    pub fn derivative(&self, lambda: f64, p: usize) -> Result<f64> {
        match self {
            Schedule::Polynomial(c) => {
                let mut acc = 0.0;
                for j in (p..c.len()).rev() {
                    let falling: f64 = ((j - p + 1)..=j).map(|x| x as f64).product();
                    acc = acc * lambda + c[j] * falling;
                }
                Ok(acc)
            }
            Schedule::Custom { eval, max_order, name } => {
                if p > *max_order {
                    return Err(CdError::Capability(format!(
                        "schedule '{name}' supplies derivatives up to order {max_order}, order {p} requested"
                    )));
                }
                Ok(eval(lambda, p))
            }
        }
    }

    pub fn value(&self, lambda: f64) -> f64 {
        self.derivative(lambda, 0).expect("order 0 is always available")
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Schedule::Custom { name, max_order, .. } => write!(f, "Custom({name}, order {max_order})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcuTerm {
    pub pauli: PauliString,
    /// Weight in `H_i`.
    pub initial: f64,
    /// Weight in `H_p`.
    pub problem: f64,
}

impl LcuTerm {
    pub fn new(pauli: PauliString, initial: f64, problem: f64) -> Self {
        Self { pauli, initial, problem }
    }
}

#[derive(Debug, Clone)]
pub struct LcuHamiltonian {
    n_qubits: usize,
    terms: Vec<LcuTerm>,
    schedule: Schedule,
    domain: (f64, f64),
    h_initial: CMat,
    h_problem: CMat,
}

const DOMAIN_SLACK: f64 = 1e-12;

impl LcuHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<LcuTerm>, schedule: Schedule, domain: (f64, f64)) -> Result<Self> {
        if n_qubits == 0 {
            return self::domain("at least one qubit required");
        }
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return self::domain(format!("invalid lambda domain [{}, {}]", domain.0, domain.1));
        }
        let dim = 1usize << n_qubits;
        let mut h_initial = CMat::zeros(dim, dim);
        let mut h_problem = CMat::zeros(dim, dim);
        for t in &terms {
            if t.pauli.n_qubits() != n_qubits {
                return self::domain(format!("term {} does not act on {n_qubits} qubits", t.pauli));
            }
            if !t.initial.is_finite() || !t.problem.is_finite() {
                return self::domain(format!("term {} has a non-finite weight", t.pauli));
            }
            let p = t.pauli.to_dense();
            h_initial += &p * C64::new(t.initial, 0.0);
            h_problem += &p * C64::new(t.problem, 0.0);
        }
        Ok(Self { n_qubits, terms, schedule, domain, h_initial, h_problem })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[LcuTerm] {
        &self.terms
    }

    /// Number of LCU terms `ℓ`.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn h_initial(&self) -> &CMat {
        &self.h_initial
    }

    pub fn h_problem(&self) -> &CMat {
        &self.h_problem
    }

    pub fn check_lambda(&self, lambda: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lambda >= lo - DOMAIN_SLACK && lambda <= hi + DOMAIN_SLACK) {
            return domain(format!("lambda = {lambda} outside domain [{lo}, {hi}]"));
        }
        Ok(())
    }

    /// `H(λ) = Σ_j β_j(λ) V_j`.
    pub fn dense(&self, lambda: f64) -> Result<CMat> {
        self.check_lambda(lambda)?;
        let f = self.schedule.value(lambda);
        Ok(&self.h_initial + &self.h_problem * C64::new(f, 0.0))
    }

    /// `∂_λ^p H(λ)`; `p = 0` is `H(λ)` itself.
    pub fn derivative(&self, lambda: f64, p: usize) -> Result<CMat> {
        if p == 0 {
            return self.dense(lambda);
        }
        self.check_lambda(lambda)?;
        let fp = self.schedule.derivative(lambda, p)?;
        Ok(&self.h_problem * C64::new(fp, 0.0))
    }

    /// `β_j(λ)` for every term.
    pub fn betas(&self, lambda: f64) -> Vec<f64> {
        let f = self.schedule.value(lambda);
        self.terms.iter().map(|t| t.initial + f * t.problem).collect()
    }

    /// `‖β(λ)‖₁`.
    pub fn beta_one_norm(&self, lambda: f64) -> f64 {
        self.betas(lambda).iter().map(|b| b.abs()).sum()
    }

    /// `‖∂_λ^p β(λ)‖₁` for `p >= 1`.
    pub fn dbeta_one_norm(&self, lambda: f64, p: usize) -> Result<f64> {
        let fp = self.schedule.derivative(lambda, p)?;
        Ok(fp.abs() * self.terms.iter().map(|t| t.problem.abs()).sum::<f64>())
    }

    /// True when `H_p = 0`, i.e. the path is constant.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.problem == 0.0)
    }
}
