//! Variational cluster approximation solver for the attractive
//! Fermi-Hubbard model.
//!
//! The pipeline mirrors the structure of a hybrid quantum-classical cluster
//! solver: a cluster Hamiltonian is mapped to qubits by the Jordan-Wigner
//! transformation, its Nambu Green's function is obtained either from a
//! classical Lehmann exact-diagonalization oracle or from a density-matrix
//! emulation of a Gibbs-state + single-ancilla interferometry circuit, and
//! the grand-potential functional is driven to its saddle point over the
//! Weiss fields. Lattice observables follow from the CPT-periodized
//! Green's function.

pub mod cluster;
pub mod config;
pub mod ed;
pub mod emulator;
pub mod error;
pub mod greens;
pub mod observables;
pub mod output;
pub mod pauli;
pub mod vca;

pub use error::{Result, VcaError};
