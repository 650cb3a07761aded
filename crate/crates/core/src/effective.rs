//! Effective Hamiltonians in the single-excitation manifold.
//!
//! Each regime reduces to a small real symmetric matrix over the ground
//! state, one-photon states and collective atomic excitations. The pump only
//! connects the ground state to the pumped photon. Dropping the ground state
//! and setting `Δ = 0` leaves the *core*, whose eigenvalues are the detunings
//! of the bright resonances. Deleting the pumped photon from the core as well
//! leaves the subsystem that the pumped mode cannot reach; its eigenvalues
//! are the antiresonances of the pumped mode.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::modes::SystemParams;
use crate::structure::Regime;

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveMatrix {
    /// Row-major entries.
    entries: Vec<f64>,
    dim: usize,
    pub basis_labels: Vec<String>,
    pub regime: Regime,
    pub delta: f64,
    /// Basis index of the pumped one-photon state.
    pub pumped_state: usize,
}

impl EffectiveMatrix {
    fn zeros(dim: usize, regime: Regime, delta: f64, labels: Vec<String>, pumped_state: usize) -> Self {
        EffectiveMatrix {
            entries: vec![0.0; dim * dim],
            dim,
            basis_labels: labels,
            regime,
            delta,
            pumped_state,
        }
    }

    fn couple(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.dim + j] = value;
        self.entries[j * self.dim + i] = value;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let keep: Vec<usize> = (0..self.dim).collect();
        symmetric_eigenvalues(&self.entries, self.dim, &keep)
    }
}

/// Eigenvalues of the principal submatrix selected by `keep`.
fn symmetric_eigenvalues(entries: &[f64], dim: usize, keep: &[usize]) -> Result<Vec<f64>> {
    let mat = Mat::<f64>::from_fn(keep.len(), keep.len(), |i, j| entries[keep[i] * dim + keep[j]]);
    mat.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

fn require_two_modes(regime: Regime, params: &SystemParams) -> Result<()> {
    if params.mode_count() == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedRegime(format!(
            "{regime:?} effective matrix needs 2 modes, got {}",
            params.mode_count()
        )))
    }
}

/// Effective matrix of `regime` at pump detuning `delta`.
///
/// * `Subwavelength` (2 modes): basis `ψ_g, ψ_c1, ψ_c2, ψ_e` with the
///   symmetric atomic excitation coupled by `g_m √N`.
/// * `WideGaussian` (any mode count): basis `ψ_g, ψ_cp, ψ_e` for the pumped
///   mode `p`, coupled by `g_p √(N/2)`.
/// * `WideGratedBragg` (2 modes): basis `ψ_g, ψ_c1, ψ_c2, ψ_e+, ψ_e-` with
///   couplings `(g1/2)√(N/2)`, `(g1/2)√(3N/2)`, `−(g2/2)√(N/2)`, `(g2/2)√(3N/2)`.
pub fn build_effective_matrix(regime: Regime, params: &SystemParams, delta: f64) -> Result<EffectiveMatrix> {
    params.validate()?;
    let n = params.atom_count as f64;
    let p = params.pumped_mode;
    let eta = params.eta;
    let labels = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match regime {
        Regime::Subwavelength => {
            require_two_modes(regime, params)?;
            let [m1, m2] = [&params.modes[0], &params.modes[1]];
            let mut h = EffectiveMatrix::zeros(
                4,
                regime,
                delta,
                labels(&["psi_g", "psi_c1", "psi_c2", "psi_e"]),
                1 + p,
            );
            h.couple(0, 1 + p, eta);
            h.couple(1, 1, m1.detuning - delta);
            h.couple(2, 2, m2.detuning - delta);
            h.couple(3, 3, -delta);
            h.couple(1, 3, m1.g * n.sqrt());
            h.couple(2, 3, m2.g * n.sqrt());
            Ok(h)
        }
        Regime::WideGaussian => {
            let mode = &params.modes[p];
            let photon = format!("psi_c{}", p + 1);
            let mut h = EffectiveMatrix::zeros(
                3,
                regime,
                delta,
                vec!["psi_g".into(), photon, "psi_e".into()],
                1,
            );
            h.couple(0, 1, eta);
            h.couple(1, 1, mode.detuning - delta);
            h.couple(2, 2, -delta);
            h.couple(1, 2, mode.g * (n / 2.0).sqrt());
            Ok(h)
        }
        Regime::WideGratedBragg => {
            require_two_modes(regime, params)?;
            let [m1, m2] = [&params.modes[0], &params.modes[1]];
            let mut h = EffectiveMatrix::zeros(
                5,
                regime,
                delta,
                labels(&["psi_g", "psi_c1", "psi_c2", "psi_e+", "psi_e-"]),
                1 + p,
            );
            let (short, long) = ((n / 2.0).sqrt(), (1.5 * n).sqrt());
            h.couple(0, 1 + p, eta);
            h.couple(1, 1, m1.detuning - delta);
            h.couple(2, 2, m2.detuning - delta);
            h.couple(3, 3, -delta);
            h.couple(4, 4, -delta);
            h.couple(1, 3, 0.5 * m1.g * short);
            h.couple(1, 4, 0.5 * m1.g * long);
            h.couple(2, 3, -0.5 * m2.g * short);
            h.couple(2, 4, 0.5 * m2.g * long);
            Ok(h)
        }
    }
}

/// Drive-free core at `Δ = 0`.
fn core(regime: Regime, params: &SystemParams) -> Result<EffectiveMatrix> {
    build_effective_matrix(regime, params, 0.0)
}

/// Detunings of the bright resonances: eigenvalues of the core.
pub fn bright_resonances_from_core(regime: Regime, params: &SystemParams) -> Result<Vec<f64>> {
    let h = core(regime, params)?;
    let keep: Vec<usize> = (1..h.dim).collect();
    symmetric_eigenvalues(&h.entries, h.dim, &keep)
}

/// Detunings of the pumped mode's antiresonances: eigenvalues of the core
/// with the pumped photon removed.
pub fn dark_resonances_from_core(regime: Regime, params: &SystemParams) -> Result<Vec<f64>> {
    let h = core(regime, params)?;
    let keep: Vec<usize> = (1..h.dim).filter(|&i| i != h.pumped_state).collect();
    symmetric_eigenvalues(&h.entries, h.dim, &keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::collective_frequencies;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn single_mode_core_without_drive() {
        let mut params = SystemParams::crossed_reference();
        params.eta = 0.0;
        let h = build_effective_matrix(Regime::WideGaussian, &params, 0.0).unwrap();
        let b = 0.8 * 5000f64.sqrt();
        assert!(close(&h.eigenvalues().unwrap(), &[-b, 0.0, b], 1e-10));
    }

    #[test]
    fn subwavelength_core_eigenvalues() {
        let params = SystemParams::crossed_reference();
        let b = 12800f64.sqrt();
        assert!(close(
            &bright_resonances_from_core(Regime::Subwavelength, &params).unwrap(),
            &[-b, 0.0, b],
            1e-9
        ));
        assert!(close(
            &dark_resonances_from_core(Regime::Subwavelength, &params).unwrap(),
            &[-80.0, 80.0],
            1e-9
        ));
    }

    #[test]
    fn wide_gaussian_core_eigenvalues() {
        let params = SystemParams::crossed_reference();
        let b = 0.8 * 5000f64.sqrt();
        assert!(close(
            &bright_resonances_from_core(Regime::WideGaussian, &params).unwrap(),
            &[-b, b],
            1e-9
        ));
        assert!(close(
            &dark_resonances_from_core(Regime::WideGaussian, &params).unwrap(),
            &[0.0],
            1e-12
        ));
    }

    #[test]
    fn grated_core_matches_collective_frequencies() {
        let params = SystemParams::crossed_reference();
        let (gp, gm) = collective_frequencies(0.8, 0.8, 10_000);
        let bright = bright_resonances_from_core(Regime::WideGratedBragg, &params).unwrap();
        assert!(close(&bright, &[-gp, -gm, gm, gp], 1e-9));
        assert!((gp - 69.282).abs() < 1e-3 && (gm - 40.0).abs() < 1e-9);
        let d = 0.8 * 5000f64.sqrt();
        assert!(close(
            &dark_resonances_from_core(Regime::WideGratedBragg, &params).unwrap(),
            &[-d, 0.0, d],
            1e-9
        ));
    }

    #[test]
    fn matrices_are_symmetric_with_pump_on_ground_row() {
        let params = SystemParams::crossed_reference();
        for regime in [Regime::Subwavelength, Regime::WideGaussian, Regime::WideGratedBragg] {
            let h = build_effective_matrix(regime, &params, 12.5).unwrap();
            assert!(h.is_symmetric());
            for j in 1..h.dim() {
                let expected = if j == h.pumped_state { params.eta } else { 0.0 };
                assert_eq!(h.get(0, j), expected);
            }
            assert_eq!(h.get(0, 0), 0.0);
            assert_eq!(h.get(h.dim() - 1, h.dim() - 1), -12.5);
            assert_eq!(h.basis_labels.len(), h.dim());
        }
    }

    #[test]
    fn grated_entries_as_printed() {
        let mut params = SystemParams::crossed_reference();
        params.modes[0].g = 0.6;
        params.modes[1].g = 1.1;
        params.modes[0].detuning = 2.0;
        params.modes[1].detuning = -3.0;
        let h = build_effective_matrix(Regime::WideGratedBragg, &params, 1.0).unwrap();
        let n = 1e4f64;
        assert_eq!(h.get(1, 1), 1.0);
        assert_eq!(h.get(2, 2), -4.0);
        assert!((h.get(1, 3) - 0.3 * (n / 2.0).sqrt()).abs() < 1e-12);
        assert!((h.get(1, 4) - 0.3 * (3.0 * n / 2.0).sqrt()).abs() < 1e-12);
        assert!((h.get(2, 3) + 0.55 * (n / 2.0).sqrt()).abs() < 1e-12);
        assert!((h.get(2, 4) - 0.55 * (3.0 * n / 2.0).sqrt()).abs() < 1e-12);
        assert_eq!(h.get(1, 2), 0.0);
        assert_eq!(h.get(3, 4), 0.0);
    }

    #[test]
    fn two_mode_regimes_reject_other_mode_counts() {
        let mut params = SystemParams::crossed_reference();
        params.modes.truncate(1);
        assert!(matches!(
            build_effective_matrix(Regime::Subwavelength, &params, 0.0),
            Err(Error::UnsupportedRegime(_))
        ));
        assert!(build_effective_matrix(Regime::WideGaussian, &params, 0.0).is_ok());
    }

    #[test]
    fn pump_strength_does_not_move_resonances() {
        let mut params = SystemParams::crossed_reference();
        let base = bright_resonances_from_core(Regime::WideGratedBragg, &params).unwrap();
        params.eta = 3.0;
        assert_eq!(bright_resonances_from_core(Regime::WideGratedBragg, &params).unwrap(), base);
    }

    #[test]
    fn vanishing_second_coupling_recovers_single_mode() {
        let mut params = SystemParams::crossed_reference();
        params.modes[1].g = 1e-9;
        let bright = bright_resonances_from_core(Regime::WideGratedBragg, &params).unwrap();
        let b = 0.8 * 5000f64.sqrt();
        assert!(close(&bright, &[-b, 0.0, 0.0, b], 1e-6));
    }
}
