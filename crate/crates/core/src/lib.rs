//! Steady-state optical response of two-level atoms shared between several
//! cavity modes.
//!
//! The atomic density profile enters only through the structure-factor
//! matrix `s[m][m']`, the ensemble average of `cos(k_m . r) cos(k_m' . r)`.
//! From it the weak-drive coupled-mode equations give the steady-state mode
//! amplitudes, whose spectra show bright polariton peaks and narrow
//! antiresonances. The [`effective`] module predicts those resonances from
//! small Hermitian matrices, and [`oracle`] re-derives everything by brute
//! force.
//!
//! Units: lengths in `1/k`, wavevectors in `k` (the atomic transition
//! wavenumber), rates and frequencies in the atomic linewidth `Γ`.

pub mod cli;
pub mod effective;
pub mod ensemble;
pub mod error;
pub mod geometry;
mod linalg;
pub mod modes;
pub mod oracle;
pub mod spectra;
pub mod structure;

pub use error::{Error, Result};
pub use geometry::Vec3;
