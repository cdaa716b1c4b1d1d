//! Creation/annihilation operators on Fock sectors, sparse sector-to-sector
//! operators, m-body and pseudopotential Hamiltonians, and numerical checks of
//! the number-operator identities they satisfy.

mod hamiltonian;
pub mod identities;
mod ladder;
mod sparse;

pub use hamiltonian::{
    assemble_mbody, assemble_pseudopotential, assemble_term, HamiltonianSpec, Hermiticity,
    MBodyTerm, PseudopotentialSpec, TermEntry, HERMITICITY_TOL,
};
pub use ladder::{annihilation_matrix, apply_annihilation, apply_creation, creation_matrix};
pub use sparse::{LinearOperator, SparseOperator};
