//! The full validation chain behind `oracle-check`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::effective::{bright_resonances_from_core, dark_resonances_from_core};
use crate::ensemble::{sample_gaussian_cloud, sample_grated_cloud, AtomCloud};
use crate::error::Result;
use crate::geometry::{bragg_vector, crossed_pair, Vec3};
use crate::modes::{solve_with_cloud, ModeParams, SystemParams};
use crate::oracle::full_linear::{solve_full_linear, solve_full_linear_cosines};
use crate::oracle::lindblad::{lindblad_steady_state, TinyQuantumSystem};
use crate::spectra::{collective_frequencies, predicted_resonances};
use crate::structure::{
    structure_factor_discrete, structure_factor_gaussian, structure_factor_grated, Regime,
};

/// One line of the validation table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            deviation,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_deviation(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn max_relative(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| relative_deviation(*x, *y))
        .fold(0.0, f64::max)
}

/// A random dissipative parameter set with `modes` unit wavevectors and
/// `atoms` atoms spread over a few wavelengths.
pub fn random_problem(rng: &mut ChaCha8Rng, atoms: usize, modes: usize) -> Result<(AtomCloud, SystemParams, f64)> {
    let positions = (0..atoms)
        .map(|_| {
            Vec3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            )
        })
        .collect();
    let cloud = AtomCloud::from_positions(positions)?;
    let modes = (0..modes)
        .map(|_| {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            ModeParams {
                wavevector: Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()),
                g: rng.random_range(0.1..1.5),
                detuning: rng.random_range(-3.0..3.0),
                kappa: rng.random_range(0.5..5.0),
            }
        })
        .collect::<Vec<_>>();
    let pumped_mode = rng.random_range(0..modes.len());
    let params = SystemParams {
        modes,
        atom_count: atoms,
        gamma: 1.0,
        eta: rng.random_range(1e-3..1e-2),
        pumped_mode,
    };
    let delta = rng.random_range(-20.0..20.0);
    Ok((cloud, params, delta))
}

/// Reduced `M`-mode solve against the full `(N + M)` solve over `draws`
/// random problems. Returns the worst relative deviation of the amplitudes
/// and of the reconstructed coherences.
pub fn elimination_equivalence(draws: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut amp, mut coh) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let (cloud, params, delta) = random_problem(&mut rng, 50, 3)?;
        let reduced = solve_with_cloud(&params, delta, &cloud)?;
        let full = solve_full_linear(&cloud, &params, delta)?;
        amp = amp.max(max_relative(&reduced.amplitudes, &full.amplitudes));
        let scale = full
            .coherences
            .as_deref()
            .unwrap_or_default()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let worst = reduced
            .coherences
            .as_deref()
            .unwrap_or_default()
            .iter()
            .zip(full.coherences.as_deref().unwrap_or_default())
            .map(|(a, b)| (a - b).norm() / scale)
            .fold(0.0, f64::max);
        coh = coh.max(worst);
    }
    Ok((amp, coh))
}

/// Two atoms in two crossed modes, used for the master-equation comparison.
pub fn lindblad_reference(eta: f64) -> (SystemParams, Vec<Vec<f64>>) {
    let mut params = SystemParams::crossed_reference();
    params.atom_count = 2;
    params.eta = eta;
    let [k1, k2] = crossed_pair();
    let atoms = [Vec3::new(0.4, -0.3, 0.2), Vec3::new(-1.1, 0.7, 0.0)];
    let cosines = atoms
        .iter()
        .map(|r| vec![k1.dot(*r).cos(), k2.dot(*r).cos()])
        .collect();
    (params, cosines)
}

/// Detunings straddling the upper polariton of [`lindblad_reference`].
pub fn lindblad_detunings(params: &SystemParams, cosines: &[Vec<f64>]) -> Vec<f64> {
    let collective: f64 = cosines
        .iter()
        .map(|row| {
            params
                .modes
                .iter()
                .zip(row)
                .map(|(m, c)| (m.g * c).powi(2))
                .sum::<f64>()
        })
        .sum();
    let center = collective.sqrt();
    (-2..=2).map(|i| center + 0.5 * i as f64).collect()
}

/// Master equation against the linear model: worst relative amplitude
/// deviation at `photon_cutoff`, for the given pump.
pub fn lindblad_deviation(eta: f64, photon_cutoff: usize, cutoff_tolerance: f64) -> Result<f64> {
    let (params, cosines) = lindblad_reference(eta);
    let mut worst = 0.0f64;
    for delta in lindblad_detunings(&params, &cosines) {
        let mut system = TinyQuantumSystem::new(params.clone(), cosines.clone(), photon_cutoff)?;
        system.cutoff_tolerance = cutoff_tolerance;
        let quantum = lindblad_steady_state(&system, delta)?;
        let linear = solve_full_linear_cosines(&cosines, &params, delta)?;
        worst = worst.max(max_relative(&quantum.amplitudes, &linear.amplitudes));
    }
    Ok(worst)
}

/// Worst relative change of the master-equation amplitudes between two
/// photon cutoffs.
pub fn lindblad_cutoff_change(eta: f64, low: usize, high: usize, cutoff_tolerance: f64) -> Result<f64> {
    let (params, cosines) = lindblad_reference(eta);
    let mut worst = 0.0f64;
    for delta in lindblad_detunings(&params, &cosines) {
        let mut a = TinyQuantumSystem::new(params.clone(), cosines.clone(), low)?;
        a.cutoff_tolerance = cutoff_tolerance;
        let mut b = TinyQuantumSystem::new(params.clone(), cosines.clone(), high)?;
        b.cutoff_tolerance = cutoff_tolerance;
        let ra = lindblad_steady_state(&a, delta)?;
        let rb = lindblad_steady_state(&b, delta)?;
        worst = worst.max(max_relative(&ra.amplitudes, &rb.amplitudes));
    }
    Ok(worst)
}

/// Worst entrywise difference between sampled and analytic structure
/// factors over Gaussian and grated clouds of the given widths.
pub fn monte_carlo_structure(atoms: usize, widths: &[f64], seed: u64) -> Result<f64> {
    let [k1, k2] = crossed_pair();
    let modes = [k1, k2];
    let q = bragg_vector(k1, k2);
    let mut worst = 0.0f64;
    for &kr in widths {
        let gauss = structure_factor_discrete(&sample_gaussian_cloud(atoms, kr, seed)?, &modes)?;
        worst = worst.max(gauss.max_abs_diff(&structure_factor_gaussian(&modes, kr)?));
        let grated = structure_factor_discrete(&sample_grated_cloud(atoms, kr, q, seed)?, &modes)?;
        worst = worst.max(grated.max_abs_diff(&structure_factor_grated(&modes, kr, q)?));
    }
    Ok(worst)
}

fn list_deviation(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Effective-matrix resonances against the closed forms, all regimes.
pub fn resonance_cross_check(params: &SystemParams) -> Result<f64> {
    let mut worst = 0.0f64;
    for regime in [Regime::Subwavelength, Regime::WideGaussian, Regime::WideGratedBragg] {
        let predicted = predicted_resonances(regime, params)?;
        worst = worst.max(list_deviation(&bright_resonances_from_core(regime, params)?, &predicted.bright));
        worst = worst.max(list_deviation(&dark_resonances_from_core(regime, params)?, &predicted.dark));
    }
    let (gp, gm) = collective_frequencies(params.modes[0].g, params.modes[1].g, params.atom_count);
    let core = bright_resonances_from_core(Regime::WideGratedBragg, params)?;
    Ok(worst.max(list_deviation(&core, &[-gp, -gm, gm, gp])))
}

/// Runs every check; `seed` drives the random draws and sampled clouds.
pub fn run_validation_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let (amp, coh) = elimination_equivalence(20, seed)?;
    let atoms = 100_000;
    let reference = SystemParams::crossed_reference();
    Ok(vec![
        CheckOutcome::new("elimination equivalence (amplitudes)", amp, 1e-10),
        CheckOutcome::new("coherence reconstruction", coh, 1e-10),
        CheckOutcome::new("master equation vs linear model", lindblad_deviation(1e-3, 2, 1e-6)?, 1e-3),
        CheckOutcome::new("photon cutoff 1 -> 2", lindblad_cutoff_change(1e-3, 1, 2, 1e-6)?, 1e-4),
        CheckOutcome::new(
            "sampled vs analytic structure factor",
            monte_carlo_structure(atoms, &[0.5, 1.0, 5.0], seed)?,
            5.0 / (atoms as f64).sqrt(),
        ),
        CheckOutcome::new("effective-matrix resonances", resonance_cross_check(&reference)?, 1e-9),
    ])
}
