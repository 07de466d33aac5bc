//! Gate-based counterdiabatic driving at desk scale.
//!
//! The crate builds the regularized, time-truncated adiabatic gauge potential of an
//! interpolating Hamiltonian, discretizes its time integral with Lagrange quadrature,
//! splits the resulting ordered exponential into Lie-Trotter-Suzuki products of
//! time-independent exponentials and prices those with a qubitization cost model.
//! Every approximation step comes with a dense reference propagator so that its error
//! bound can be checked numerically.

pub mod agp;
pub mod aqc;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod lts;
pub mod models;
pub mod pauli;
pub mod qdrift;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod verify;

pub use error::{CdError, Result};
pub use hamiltonian::{LcuHamiltonian, LcuTerm, Schedule};
pub use linalg::{CMat, CVec, C64};
pub use pauli::{Pauli, PauliString};
pub use report::RunResult;
pub use spectral::{Eigensystem, PathSummary, SpectralPath};
