//! Uneliminated weak-drive equations.
//!
//! Unknowns are ordered `(σ_1 … σ_N, a_1 … a_M)`:
//!
//! ```text
//! (iΔ − Γ/2) σ_j − i Σ_m g_m cos(k_m.r_j) a_m                = 0
//! (i(Δ − Δ_m) − κ_m/2) a_m − i g_m Σ_j cos(k_m.r_j) σ_j      = i η δ_{m,p}
//! ```
//!
//! These follow from the Heisenberg equations of the driven Hamiltonian with
//! `σ_j` the atomic lowering operator and `⟨σᶻ_j a_m⟩ → −⟨a_m⟩`.

use faer::Mat;
use num_complex::Complex64;

use crate::ensemble::AtomCloud;
use crate::error::{Error, Result};
use crate::modes::{drive_strength_omega, SteadyState, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Assembled `(N + M)`-dimensional system `A x = b`.
#[derive(Debug, Clone)]
pub struct FullLinearSystem {
    pub matrix: Mat<Complex64>,
    pub rhs: Vec<Complex64>,
    pub atoms: usize,
    pub modes: usize,
}

impl FullLinearSystem {
    /// `cosines[j][m] = cos(k_m . r_j)`.
    pub fn assemble(cosines: &[Vec<f64>], params: &SystemParams, delta: f64) -> Result<Self> {
        params.validate()?;
        let n = cosines.len();
        let m = params.mode_count();
        if n == 0 {
            return Err(Error::invalid("cosines", "need at least one atom"));
        }
        if let Some(j) = cosines.iter().position(|row| row.len() != m) {
            return Err(Error::invalid(
                format!("cosines[{j}]"),
                format!("expected {m} mode functions"),
            ));
        }
        let dim = n + m;
        let atomic = Complex64::new(-0.5 * params.gamma, delta);
        let mut matrix = Mat::<Complex64>::zeros(dim, dim);
        for (j, row) in cosines.iter().enumerate() {
            matrix[(j, j)] = atomic;
            for (k, (mode, &cos)) in params.modes.iter().zip(row).enumerate() {
                matrix[(j, n + k)] = -I * mode.g * cos;
                matrix[(n + k, j)] = -I * mode.g * cos;
            }
        }
        for (k, mode) in params.modes.iter().enumerate() {
            matrix[(n + k, n + k)] = Complex64::new(-0.5 * mode.kappa, delta - mode.detuning);
        }
        let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
        rhs[n + params.pumped_mode] = I * params.eta;
        Ok(FullLinearSystem {
            matrix,
            rhs,
            atoms: n,
            modes: m,
        })
    }

    /// Solution vector and its max-norm residual.
    pub fn solve(&self) -> Result<(Vec<Complex64>, f64)> {
        let dim = self.rhs.len();
        let b = Mat::<Complex64>::from_fn(dim, 1, |i, _| self.rhs[i]);
        let lu = self.matrix.partial_piv_lu();
        let x = faer::linalg::solvers::Solve::solve(&lu, &b);
        let solution: Vec<Complex64> = (0..dim).map(|i| x[(i, 0)]).collect();
        if solution.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::SingularSystem {
                context: "full linear system",
                column: 0,
                pivot: 0.0,
            });
        }
        let residual = (0..dim)
            .map(|i| {
                let lhs: Complex64 = (0..dim).map(|k| self.matrix[(i, k)] * solution[k]).sum();
                (lhs - self.rhs[i]).norm()
            })
            .fold(0.0, f64::max);
        Ok((solution, residual))
    }
}

/// Full solve from precomputed mode functions (one row per atom).
pub fn solve_full_linear_cosines(
    cosines: &[Vec<f64>],
    params: &SystemParams,
    delta: f64,
) -> Result<SteadyState> {
    if cosines.len() != params.atom_count {
        return Err(Error::invalid(
            "atom_count",
            format!("{} does not match {} atoms", params.atom_count, cosines.len()),
        ));
    }
    let system = FullLinearSystem::assemble(cosines, params, delta)?;
    let (solution, residual) = system.solve()?;
    let n = system.atoms;
    let p = params.pumped_mode;
    let s_pp = cosines.iter().map(|row| row[p] * row[p]).sum::<f64>() / n as f64;
    Ok(SteadyState {
        amplitudes: solution[n..].to_vec(),
        omega: drive_strength_omega(params, delta, s_pp)?,
        coherences: Some(solution[..n].to_vec()),
        delta,
        residual,
    })
}

/// Full `(N + M)` solve for the atoms of `cloud`; `params.atom_count` must
/// equal the cloud size.
pub fn solve_full_linear(cloud: &AtomCloud, params: &SystemParams, delta: f64) -> Result<SteadyState> {
    solve_full_linear_cosines(&cloud.mode_cosines(&params.wavevectors()), params, delta)
}
