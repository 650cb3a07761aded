//! Weak-drive steady state of the coupled cavity modes.
//!
//! Conventions. `σ_j` lowers atom `j`, the drive of strength `η` is on one
//! mode (the pumped mode `p`), and all operators are in the frame rotating at
//! the drive. With `⟨σᶻ⟩ = -1` the mean-field equations are linear:
//!
//! ```text
//! 0 = A σ_j − i Σ_m g_m cos(k_m.r_j) a_m                       A   = iΔ − Γ/2
//! 0 = D_m a_m − i g_m Σ_j cos(k_m.r_j) σ_j − i η δ_{m,p}      D_m = i(Δ − Δ_m) − κ_m/2
//! ```
//!
//! Eliminating the coherences, `σ_j = χ Σ_m g_m cos(k_m.r_j) a_m` with
//! `χ = i/A`, leaves the `M x M` system `Σ_m' c[m][m'] a_m' = iΩ δ_{m,p}` where
//! `c[m][m] = 1`,
//!
//! ```text
//! c[m][m'] = N g_m g_m' s[m][m'] / (D_m A + N g_m² s[m][m])
//! Ω        = η A / (D_p A + N g_p² s[p][p])
//! ```
//!
//! The `oracle` module solves the uneliminated system independently; the two
//! must agree to round-off.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::AtomCloud;
use crate::error::{Error, Result};
use crate::geometry::{crossed_pair, Vec3};
use crate::linalg::lu_solve_in_place;
use crate::structure::{StructureFactorMatrix, MAX_MODES};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Denominators below this modulus are treated as singular.
const SINGULAR_MODULUS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Wavevector in units of `k`.
    pub wavevector: Vec3,
    /// Single-atom coupling.
    pub g: f64,
    /// Detuning of the mode from the atomic transition.
    pub detuning: f64,
    /// Field decay rate.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub modes: Vec<ModeParams>,
    pub atom_count: usize,
    /// Atomic linewidth; `1` in natural units.
    pub gamma: f64,
    /// Pump strength.
    pub eta: f64,
    /// Zero-based index of the driven mode.
    pub pumped_mode: usize,
}

impl SystemParams {
    /// Two crossed modes with `g1 = g2 = 0.8`, `κ1 = 1`, `κ2 = 4`,
    /// `η = 0.01`, `N = 10⁴`, both modes resonant with the atoms.
    pub fn crossed_reference() -> Self {
        let [k1, k2] = crossed_pair();
        SystemParams {
            modes: vec![
                ModeParams {
                    wavevector: k1,
                    g: 0.8,
                    detuning: 0.0,
                    kappa: 1.0,
                },
                ModeParams {
                    wavevector: k2,
                    g: 0.8,
                    detuning: 0.0,
                    kappa: 4.0,
                },
            ],
            atom_count: 10_000,
            gamma: 1.0,
            eta: 0.01,
            pumped_mode: 0,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn wavevectors(&self) -> Vec<Vec3> {
        self.modes.iter().map(|m| m.wavevector).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.modes.len();
        if m == 0 || m > MAX_MODES {
            return Err(Error::invalid(
                "modes",
                format!("mode count must be in 1..={MAX_MODES}, got {m}"),
            ));
        }
        for (i, mode) in self.modes.iter().enumerate() {
            let name = |field: &str| format!("modes[{}].{field}", i + 1);
            if !mode.wavevector.is_finite() {
                return Err(Error::invalid(name("wavevector"), "must be finite"));
            }
            if !(mode.g.is_finite() && mode.g >= 0.0) {
                return Err(Error::invalid(name("g"), format!("must be >= 0, got {}", mode.g)));
            }
            if !mode.detuning.is_finite() {
                return Err(Error::invalid(name("detuning"), "must be finite"));
            }
            if !(mode.kappa.is_finite() && mode.kappa > 0.0) {
                return Err(Error::invalid(
                    name("kappa"),
                    format!("must be > 0, got {}", mode.kappa),
                ));
            }
        }
        if self.atom_count == 0 {
            return Err(Error::invalid("atom_count", "must be >= 1"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta", format!("must be >= 0, got {}", self.eta)));
        }
        if self.pumped_mode >= m {
            return Err(Error::invalid(
                "pumped_mode",
                format!("mode {} does not exist", self.pumped_mode + 1),
            ));
        }
        Ok(())
    }

    /// `A = iΔ − Γ/2`
    pub fn atomic_denominator(&self, delta: f64) -> Complex64 {
        Complex64::new(-0.5 * self.gamma, delta)
    }

    /// `D_m = i(Δ − Δ_m) − κ_m/2`
    pub fn mode_denominator(&self, m: usize, delta: f64) -> Complex64 {
        let mode = &self.modes[m];
        Complex64::new(-0.5 * mode.kappa, delta - mode.detuning)
    }

    /// `D_m A + N g_m² s_mm`
    fn dressed_denominator(&self, m: usize, delta: f64, s_mm: f64) -> Result<Complex64> {
        let g = self.modes[m].g;
        let den = self.mode_denominator(m, delta) * self.atomic_denominator(delta)
            + self.atom_count as f64 * g * g * s_mm;
        if den.norm() < SINGULAR_MODULUS {
            return Err(Error::Singularity {
                context: "dressed mode denominator",
                modulus: den.norm(),
            });
        }
        Ok(den)
    }
}

/// Single-atom response `χ = i/(iΔ − Γ/2)` mapping the local field
/// `Σ_m g_m cos(k_m.r) a_m` onto the coherence `σ`.
pub fn atomic_susceptibility(delta: f64, gamma: f64) -> Complex64 {
    I / Complex64::new(-0.5 * gamma, delta)
}

/// Weak-drive solution at one pump detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Mode amplitudes `⟨a_m⟩`.
    pub amplitudes: Vec<Complex64>,
    /// Dimensionless drive strength `Ω`.
    pub omega: Complex64,
    /// Atomic coherences `⟨σ_j⟩`, when computed.
    pub coherences: Option<Vec<Complex64>>,
    pub delta: f64,
    /// Max-norm residual of the coupled-mode equations.
    pub residual: f64,
}

impl SteadyState {
    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }
}

/// Dimensionless drive strength `Ω` seen by the pumped mode.
pub fn drive_strength_omega(params: &SystemParams, delta: f64, s_pp: f64) -> Result<Complex64> {
    let p = params.pumped_mode;
    let den = params.dressed_denominator(p, delta, s_pp)?;
    Ok(params.eta * params.atomic_denominator(delta) / den)
}

/// Row-major coupling matrix `c` with unit diagonal.
pub fn coupling_matrix(
    params: &SystemParams,
    delta: f64,
    s: &StructureFactorMatrix,
) -> Result<Vec<Complex64>> {
    let m = params.mode_count();
    if s.mode_count() != m {
        return Err(Error::invalid(
            "structure_factor",
            format!("{}x{0} matrix for {m} modes", s.mode_count()),
        ));
    }
    let n = params.atom_count as f64;
    let mut c = vec![Complex64::new(0.0, 0.0); m * m];
    for row in 0..m {
        let den = params.dressed_denominator(row, delta, s.get(row, row))?;
        let g_row = params.modes[row].g;
        for col in 0..m {
            c[row * m + col] = if row == col {
                Complex64::new(1.0, 0.0)
            } else {
                g_row * params.modes[col].g * n * s.get(row, col) / den
            };
        }
    }
    Ok(c)
}

/// Solves the coupled-mode equations at pump detuning `delta`.
pub fn solve_steady_state(
    params: &SystemParams,
    delta: f64,
    s: &StructureFactorMatrix,
) -> Result<SteadyState> {
    params.validate()?;
    let m = params.mode_count();
    let p = params.pumped_mode;
    let c = coupling_matrix(params, delta, s)?;
    let omega = drive_strength_omega(params, delta, s.get(p, p))?;
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];
    rhs[p] = I * omega;
    let mut amplitudes = rhs.clone();
    let mut lu = c.clone();
    lu_solve_in_place(&mut lu, &mut amplitudes, "coupled-mode equations")?;
    let residual = (0..m)
        .map(|row| {
            let lhs: Complex64 = (0..m).map(|col| c[row * m + col] * amplitudes[col]).sum();
            (lhs - rhs[row]).norm()
        })
        .fold(0.0, f64::max);
    Ok(SteadyState {
        amplitudes,
        omega,
        coherences: None,
        delta,
        residual,
    })
}

/// Coherences `⟨σ_j⟩ = χ Σ_m g_m cos(k_m.r_j) ⟨a_m⟩` for every atom of `cloud`.
pub fn atomic_coherences(
    state: &SteadyState,
    cloud: &AtomCloud,
    params: &SystemParams,
    delta: f64,
) -> Vec<Complex64> {
    coherences_from_cosines(
        &state.amplitudes,
        &cloud.mode_cosines(&params.wavevectors()),
        params,
        delta,
    )
}

/// As [`atomic_coherences`], from precomputed mode functions (one row per atom).
pub fn coherences_from_cosines(
    amplitudes: &[Complex64],
    cosines: &[Vec<f64>],
    params: &SystemParams,
    delta: f64,
) -> Vec<Complex64> {
    let chi = atomic_susceptibility(delta, params.gamma);
    cosines
        .iter()
        .map(|row| {
            let field: Complex64 = params
                .modes
                .iter()
                .zip(row)
                .zip(amplitudes)
                .map(|((mode, cos), a)| mode.g * cos * a)
                .sum();
            chi * field
        })
        .collect()
}

/// [`solve_steady_state`] with the coherences of `cloud` filled in; the
/// structure factor is computed from the cloud itself.
pub fn solve_with_cloud(params: &SystemParams, delta: f64, cloud: &AtomCloud) -> Result<SteadyState> {
    if cloud.len() != params.atom_count {
        return Err(Error::invalid(
            "atom_count",
            format!("{} does not match cloud size {}", params.atom_count, cloud.len()),
        ));
    }
    let s = crate::structure::structure_factor_discrete(cloud, &params.wavevectors())?;
    let mut state = solve_steady_state(params, delta, &s)?;
    state.coherences = Some(atomic_coherences(&state, cloud, params, delta));
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{structure_factor_limit, Regime};

    fn single_mode(g: f64, kappa: f64, n: usize, eta: f64) -> SystemParams {
        SystemParams {
            modes: vec![ModeParams {
                wavevector: Vec3::new(1.0, 0.0, 0.0),
                g,
                detuning: 0.0,
                kappa,
            }],
            atom_count: n,
            gamma: 1.0,
            eta,
            pumped_mode: 0,
        }
    }

    #[test]
    fn omega_without_atoms_coupling() {
        let params = single_mode(0.0, 2.5, 1, 0.3);
        let omega = drive_strength_omega(&params, 0.0, 1.0).unwrap();
        let expected = Complex64::new(-2.0 * 0.3 / 2.5, 0.0);
        assert!((omega - expected).norm() < 1e-15);
    }

    #[test]
    fn omega_vanishes_without_drive() {
        let mut params = SystemParams::crossed_reference();
        params.eta = 0.0;
        assert_eq!(drive_strength_omega(&params, 12.0, 0.7).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn omega_reference_parameters_at_resonance() {
        let params = SystemParams::crossed_reference();
        let omega = drive_strength_omega(&params, 0.0, 1.0).unwrap();
        let expected = -0.005 / 6400.25;
        assert!((omega.re - expected).abs() < 1e-18);
        assert!(omega.im.abs() < 1e-18);
        assert!((omega.re + 7.8122e-7).abs() < 1e-10);
    }

    #[test]
    fn diagonal_structure_factor_gives_identity_coupling() {
        let params = SystemParams::crossed_reference();
        let s = structure_factor_limit(Regime::WideGaussian, 2).unwrap();
        let c = coupling_matrix(&params, 17.0, &s).unwrap();
        assert_eq!(c[0], Complex64::new(1.0, 0.0));
        assert_eq!(c[3], Complex64::new(1.0, 0.0));
        assert_eq!(c[1], Complex64::new(0.0, 0.0));
        assert_eq!(c[2], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn uncoupled_mode_has_vanishing_cross_terms() {
        let mut params = SystemParams::crossed_reference();
        params.modes[1].g = 0.0;
        let s = structure_factor_limit(Regime::Subwavelength, 2).unwrap();
        let c = coupling_matrix(&params, 3.0, &s).unwrap();
        assert_eq!(c[1], Complex64::new(0.0, 0.0));
        assert_eq!(c[2], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn coupling_matrix_matches_scalar_evaluation() {
        let params = SystemParams::crossed_reference();
        let s = structure_factor_limit(Regime::WideGratedBragg, 2).unwrap();
        let delta = 40.0;
        let c = coupling_matrix(&params, delta, &s).unwrap();
        // c12 = g1 g2 N s12 / ([iΔ − κ1/2](iΔ − 1/2) + N g1² s11), written out by hand
        let (re1, im1) = (-0.5, delta);
        let (re2, im2) = (-0.5, delta);
        let den_re = re1 * re2 - im1 * im2 + 1e4 * 0.64 * 0.5;
        let den_im = re1 * im2 + im1 * re2;
        let num = 0.64 * 1e4 * 0.25;
        let mag2 = den_re * den_re + den_im * den_im;
        let expected = Complex64::new(num * den_re / mag2, -num * den_im / mag2);
        assert!((c[1] - expected).norm() <= 1e-14 * expected.norm());
        // c21 uses κ2 = 4
        let (re1, im1) = (-2.0, delta);
        let den_re = re1 * re2 - im1 * im2 + 1e4 * 0.64 * 0.5;
        let den_im = re1 * im2 + im1 * re2;
        let mag2 = den_re * den_re + den_im * den_im;
        let expected = Complex64::new(num * den_re / mag2, -num * den_im / mag2);
        assert!((c[2] - expected).norm() <= 1e-14 * expected.norm());
    }

    #[test]
    fn single_mode_amplitude_is_i_omega() {
        let params = single_mode(0.8, 1.0, 100, 0.01);
        let s = structure_factor_limit(Regime::Subwavelength, 1).unwrap();
        for delta in [-5.0, 0.0, 2.5, 8.0] {
            let state = solve_steady_state(&params, delta, &s).unwrap();
            assert_eq!(state.amplitudes[0], I * state.omega);
        }
    }

    #[test]
    fn wide_gaussian_confines_light_to_pumped_mode() {
        let params = SystemParams::crossed_reference();
        let s = structure_factor_limit(Regime::WideGaussian, 2).unwrap();
        for delta in [-60.0, -3.0, 0.0, 56.0] {
            let state = solve_steady_state(&params, delta, &s).unwrap();
            assert!(state.amplitudes[1].norm() <= 1e-12);
            assert!((state.amplitudes[0] - I * state.omega).norm() <= 1e-15 * state.omega.norm());
        }
    }

    #[test]
    fn residual_is_small() {
        let params = SystemParams::crossed_reference();
        let s = structure_factor_limit(Regime::WideGratedBragg, 2).unwrap();
        for delta in [-100.0, -40.0, 0.0, 69.0] {
            let state = solve_steady_state(&params, delta, &s).unwrap();
            assert!(state.residual <= 1e-10 * (1.0 + state.omega.norm()));
        }
    }

    #[test]
    fn mismatched_structure_factor_is_rejected() {
        let params = SystemParams::crossed_reference();
        let s = structure_factor_limit(Regime::WideGaussian, 3).unwrap();
        assert!(solve_steady_state(&params, 0.0, &s).is_err());
    }

    #[test]
    fn coherences_of_dark_field_vanish() {
        let params = SystemParams::crossed_reference();
        let state = SteadyState {
            amplitudes: vec![Complex64::new(0.0, 0.0); 2],
            omega: Complex64::new(0.0, 0.0),
            coherences: None,
            delta: 1.0,
            residual: 0.0,
        };
        let cloud = crate::ensemble::sample_gaussian_cloud(20, 1.0, 4).unwrap();
        assert!(atomic_coherences(&state, &cloud, &params, 1.0)
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_atom_coherence() {
        let params = single_mode(0.8, 1.0, 1, 0.01);
        let cloud = AtomCloud::from_positions(vec![Vec3::ZERO]).unwrap();
        let delta = 0.7;
        let state = solve_with_cloud(&params, delta, &cloud).unwrap();
        let sigma = state.coherences.unwrap()[0];
        let expected = 0.8 * state.amplitudes[0] * atomic_susceptibility(delta, 1.0);
        assert!((sigma - expected).norm() < 1e-18);
    }

    #[test]
    fn validation_names_offending_field() {
        let mut params = SystemParams::crossed_reference();
        params.modes[1].kappa = 0.0;
        let err = params.validate().unwrap_err().to_string();
        assert!(err.contains("modes[2].kappa"), "{err}");
        let mut params = SystemParams::crossed_reference();
        params.pumped_mode = 2;
        assert!(params.validate().is_err());
        let mut params = SystemParams::crossed_reference();
        params.eta = -1.0;
        assert!(params.validate().is_err());
    }
}
