//! Exact diagonalization of particle-number-conserving Hamiltonians on a
//! finite ring of `L` sites, for spinless fermions and bosons.
//!
//! The crate builds n-particle Fock sectors, assembles general m-body and
//! pair-pseudopotential Hamiltonians as sparse operators, and computes the
//! low-lying spectrum of each sector (dense below a configurable dimension,
//! restarted Lanczos with locking above it). On top of that it evaluates the
//! recursive relations between neighbouring particle-number sectors:
//! ground-state and first-excited-state lower bounds in terms of the overlap
//! operators `G_n` and `F_n`, charge versus neutral gap comparisons, the
//! many-body Gram matrix bounds and the translation/charge/dipole symmetry
//! algebra used in fractional quantum Hall models.
//!
//! Site labels run over `1..=L` everywhere in the public API.

pub mod basis;
pub mod config;
mod error;
pub mod relations;
pub mod second_quantization;
pub mod spectra;
pub mod symmetry;

pub use basis::{FillingSpec, FockState, SectorBasis, Statistics};
pub use error::{Error, Result};
pub use second_quantization::{
    HamiltonianSpec, Hermiticity, MBodyTerm, PseudopotentialSpec, SparseOperator, TermEntry,
};
pub use spectra::{SolverOptions, SpectralSummary};

/// Complex scalar used for all operator entries and state vectors.
pub type C64 = num_complex::Complex64;
