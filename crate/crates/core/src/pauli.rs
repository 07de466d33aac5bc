//! Pauli strings on `n` qubits.
//!
//! Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, CdError, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// `(phase, result)` with `self * other = phase * result`.
    pub fn mul(self, other: Pauli) -> (C64, Pauli) {
        use Pauli::*;
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match (self, other) {
            (I, p) | (p, I) => (one, p),
            (a, b) if a == b => (one, I),
            (X, Y) => (i, Z),
            (Y, X) => (-i, Z),
            (Y, Z) => (i, X),
            (Z, Y) => (-i, X),
            (Z, X) => (i, Y),
            (X, Z) => (-i, Y),
            _ => unreachable!(),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return domain("a Pauli string needs at least one qubit");
        }
        Ok(Self { ops })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { ops: vec![Pauli::I; n_qubits.max(1)] }
    }

    /// `op` on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, op: Pauli) -> Self {
        let mut s = Self::identity(n_qubits);
        s.ops[qubit] = op;
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    /// `(phase, result)` with `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> Result<(C64, PauliString)> {
        if self.n_qubits() != other.n_qubits() {
            return domain("Pauli strings act on different qubit counts");
        }
        let mut phase = C64::new(1.0, 0.0);
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(&a, &b)| {
                let (p, r) = a.mul(b);
                phase *= p;
                r
            })
            .collect();
        Ok((phase, PauliString { ops }))
    }

    fn flip_mask(&self) -> usize {
        let n = self.n_qubits();
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |m, (q, _)| m | (1 << (n - 1 - q)))
    }

    /// Phase picked up by basis state `x`: `P|x> = phase(x) |x ^ flip_mask>`.
    fn phase_of(&self, x: usize) -> C64 {
        let n = self.n_qubits();
        let mut phase = C64::new(1.0, 0.0);
        for (q, p) in self.ops.iter().enumerate() {
            let bit = (x >> (n - 1 - q)) & 1;
            match p {
                Pauli::I | Pauli::X => {}
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
                Pauli::Y => {
                    phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                }
            }
        }
        phase
    }

    pub fn to_dense(&self) -> CMat {
        let dim = 1usize << self.n_qubits();
        let mask = self.flip_mask();
        let mut m = CMat::zeros(dim, dim);
        for x in 0..dim {
            m[(x ^ mask, x)] = self.phase_of(x);
        }
        m
    }

    /// Applies `exp(-i theta P)` in place.
    pub fn apply_exp(&self, theta: f64, state: &mut [C64]) {
        let mask = self.flip_mask();
        let (s, c) = theta.sin_cos();
        let mis = C64::new(0.0, -s);
        if mask == 0 {
            for (x, amp) in state.iter_mut().enumerate() {
                *amp *= C64::new(c, 0.0) + mis * self.phase_of(x);
            }
            return;
        }
        for x in 0..state.len() {
            let y = x ^ mask;
            if y < x {
                continue;
            }
            let (ax, ay) = (state[x], state[y]);
            // P|x> = phase(x)|y>, P|y> = phase(y)|x>.
            state[x] = ax * c + mis * self.phase_of(y) * ay;
            state[y] = ay * c + mis * self.phase_of(x) * ax;
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            let c = match p {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = CdError;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(CdError::Domain(format!("invalid Pauli label '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(ops)
    }
}
