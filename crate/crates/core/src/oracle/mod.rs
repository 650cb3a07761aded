//! Brute-force validators for the reduced model.
//!
//! [`full_linear`] keeps every atomic coherence as an unknown and solves the
//! `(N + M)`-dimensional weak-drive system directly. [`lindblad`] builds the
//! master equation for a handful of atoms in a truncated Fock space and finds
//! its steady state without any mean-field assumption.
//!
//! Atom positions enter only through the mode functions `cos(k_m . r_j)`, so
//! both oracles accept these precomputed cosines.

pub mod full_linear;
pub mod lindblad;
pub mod suite;

pub use full_linear::{solve_full_linear, solve_full_linear_cosines, FullLinearSystem};
pub use lindblad::{lindblad_steady_state, LindbladReport, SteadyStateMethod, TinyQuantumSystem};
