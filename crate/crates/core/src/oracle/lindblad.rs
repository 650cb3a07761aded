//! Master-equation steady state for a few atoms and photons.
//!
//! The Hamiltonian in the frame of the drive is
//!
//! ```text
//! H = η (a_p† + a_p) + Σ_m (Δ_m − Δ) a_m† a_m − (Δ/2) Σ_j σᶻ_j
//!     + Σ_{j,m} g_m cos(k_m.r_j) (a_m σ_j† + a_m† σ_j)
//! ```
//!
//! with `σ_j` lowering atom `j`, and the dissipators are `√Γ σ_j` and
//! `√κ_m a_m`. Each mode is truncated at `photon_cutoff` photons. The density
//! matrix is column-stacked, `vec(ρ)[i + d j] = ρ[i][j]`, and the Liouvillian
//! is assembled densely.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::SystemParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const MAX_ATOMS: usize = 3;
pub const MAX_MODES: usize = 2;
pub const MAX_DIM: usize = 256;
/// Largest pump for which the comparison with the linear model is meaningful.
pub const MAX_ETA: f64 = 1e-2;
/// Accepted Liouvillian residual of a direct solve before falling back to
/// time integration.
const DIRECT_RESIDUAL: f64 = 1e-10;

/// A truncated-Fock-space model: few atoms, one or two modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyQuantumSystem {
    pub params: SystemParams,
    /// `cosines[j][m] = cos(k_m . r_j)`.
    pub cosines: Vec<Vec<f64>>,
    pub photon_cutoff: usize,
    /// Largest population tolerated in the top Fock level of any mode.
    pub cutoff_tolerance: f64,
}

impl TinyQuantumSystem {
    pub fn new(params: SystemParams, cosines: Vec<Vec<f64>>, photon_cutoff: usize) -> Result<Self> {
        let system = TinyQuantumSystem {
            params,
            cosines,
            photon_cutoff,
            cutoff_tolerance: 1e-6,
        };
        system.validate()?;
        Ok(system)
    }

    pub fn atom_count(&self) -> usize {
        self.cosines.len()
    }

    pub fn hilbert_dim(&self) -> usize {
        (self.photon_cutoff + 1).pow(self.params.mode_count() as u32) * (1 << self.atom_count())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n_a = self.atom_count();
        let m = self.params.mode_count();
        if n_a == 0 || n_a > MAX_ATOMS {
            return Err(Error::invalid("atoms", format!("need 1..={MAX_ATOMS} atoms, got {n_a}")));
        }
        if n_a != self.params.atom_count {
            return Err(Error::invalid(
                "atom_count",
                format!("{} does not match {n_a} atoms", self.params.atom_count),
            ));
        }
        if m > MAX_MODES {
            return Err(Error::invalid("modes", format!("need 1..={MAX_MODES} modes, got {m}")));
        }
        if let Some(j) = self.cosines.iter().position(|row| row.len() != m) {
            return Err(Error::invalid(format!("cosines[{j}]"), format!("expected {m} entries")));
        }
        if !(1..=3).contains(&self.photon_cutoff) {
            return Err(Error::invalid(
                "photon_cutoff",
                format!("must be 1, 2 or 3, got {}", self.photon_cutoff),
            ));
        }
        if self.hilbert_dim() > MAX_DIM {
            return Err(Error::invalid(
                "photon_cutoff",
                format!("Hilbert dimension {} exceeds {MAX_DIM}", self.hilbert_dim()),
            ));
        }
        if self.params.eta > MAX_ETA * self.params.gamma {
            return Err(Error::invalid(
                "eta",
                format!("weak-drive comparison needs eta <= {MAX_ETA} gamma"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyStateMethod {
    /// Trace-constrained LU solve of the Liouvillian.
    Direct,
    /// Fourth-order Runge–Kutta evolution from the vacuum.
    Integrated,
}

/// Expectation values in the steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladReport {
    pub amplitudes: Vec<Complex64>,
    pub coherences: Vec<Complex64>,
    pub inversions: Vec<f64>,
    pub photon_numbers: Vec<f64>,
    /// Population of the highest retained Fock level, per mode.
    pub top_level_population: Vec<f64>,
    /// Max-norm of `L(ρ)`.
    pub residual: f64,
    pub trace: Complex64,
    /// Max-norm of `ρ − ρ†`.
    pub hermiticity_error: f64,
    /// Smallest eigenvalue of the Hermitian part of `ρ`.
    pub min_eigenvalue: f64,
    pub method: SteadyStateMethod,
}

/// Sparse operator: every basis state maps to at most one basis state.
#[derive(Debug, Clone)]
struct Op {
    /// `(row, col, value)` triplets.
    entries: Vec<(usize, usize, Complex64)>,
}

impl Op {
    fn dense(&self, d: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; d * d];
        for &(i, k, v) in &self.entries {
            out[i * d + k] += v;
        }
        out
    }

    fn adjoint(&self) -> Op {
        Op {
            entries: self.entries.iter().map(|&(i, k, v)| (k, i, v.conj())).collect(),
        }
    }

    /// `Tr(op ρ)` for row-major `ρ`.
    fn expect(&self, rho: &[Complex64], d: usize) -> Complex64 {
        self.entries.iter().map(|&(i, k, v)| v * rho[k * d + i]).sum()
    }
}

/// Product basis: photon numbers of each mode, then one bit per atom
/// (set = excited).
struct Space {
    levels: usize,
    modes: usize,
    atoms: usize,
    dim: usize,
}

impl Space {
    fn new(system: &TinyQuantumSystem) -> Self {
        Space {
            levels: system.photon_cutoff + 1,
            modes: system.params.mode_count(),
            atoms: system.atom_count(),
            dim: system.hilbert_dim(),
        }
    }

    fn photons(&self, state: usize, mode: usize) -> usize {
        let fock = state >> self.atoms;
        let stride = self.levels.pow((self.modes - 1 - mode) as u32);
        (fock / stride) % self.levels
    }

    fn excited(&self, state: usize, atom: usize) -> bool {
        state & (1 << atom) != 0
    }

    fn annihilation(&self, mode: usize) -> Op {
        let stride = self.levels.pow((self.modes - 1 - mode) as u32) << self.atoms;
        let entries = (0..self.dim)
            .filter_map(|s| {
                let n = self.photons(s, mode);
                (n > 0).then(|| (s - stride, s, Complex64::new((n as f64).sqrt(), 0.0)))
            })
            .collect();
        Op { entries }
    }

    fn lowering(&self, atom: usize) -> Op {
        let entries = (0..self.dim)
            .filter(|&s| self.excited(s, atom))
            .map(|s| (s & !(1 << atom), s, Complex64::new(1.0, 0.0)))
            .collect();
        Op { entries }
    }

    fn inversion(&self, atom: usize) -> Op {
        let entries = (0..self.dim)
            .map(|s| (s, s, Complex64::new(if self.excited(s, atom) { 1.0 } else { -1.0 }, 0.0)))
            .collect();
        Op { entries }
    }
}

/// Row-major dense matrix product.
fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

struct Model {
    d: usize,
    /// `H − (i/2) Σ c† c`, row-major.
    h_eff: Vec<Complex64>,
    jumps: Vec<Op>,
    annihilators: Vec<Op>,
    lowerings: Vec<Op>,
    inversions: Vec<Op>,
    space: Space,
}

impl Model {
    fn new(system: &TinyQuantumSystem, delta: f64) -> Self {
        let space = Space::new(system);
        let d = space.dim;
        let params = &system.params;
        let annihilators: Vec<Op> = (0..space.modes).map(|m| space.annihilation(m)).collect();
        let lowerings: Vec<Op> = (0..space.atoms).map(|j| space.lowering(j)).collect();
        let inversions: Vec<Op> = (0..space.atoms).map(|j| space.inversion(j)).collect();

        let mut h = vec![ZERO; d * d];
        let mut add = |op: &Op, scale: Complex64| {
            for &(i, k, v) in &op.entries {
                h[i * d + k] += scale * v;
            }
        };
        let pumped = &annihilators[params.pumped_mode];
        add(pumped, params.eta.into());
        add(&pumped.adjoint(), params.eta.into());
        for m in 0..space.modes {
            let detuning = params.modes[m].detuning - delta;
            for s in 0..d {
                h[s * d + s] += detuning * space.photons(s, m) as f64;
            }
        }
        for z in &inversions {
            for &(i, k, v) in &z.entries {
                h[i * d + k] += -0.5 * delta * v;
            }
        }
        for (j, sigma) in lowerings.iter().enumerate() {
            for (m, a) in annihilators.iter().enumerate() {
                let g = params.modes[m].g * system.cosines[j][m];
                if g == 0.0 {
                    continue;
                }
                // a σ† + a† σ
                let term = matmul(&a.dense(d), &sigma.adjoint().dense(d), d);
                for i in 0..d {
                    for k in 0..d {
                        let v = term[i * d + k];
                        if v != ZERO {
                            h[i * d + k] += g * v;
                            h[k * d + i] += g * v.conj();
                        }
                    }
                }
            }
        }

        let mut jumps = Vec::new();
        for sigma in &lowerings {
            jumps.push(scaled(sigma, params.gamma.sqrt()));
        }
        for (m, a) in annihilators.iter().enumerate() {
            jumps.push(scaled(a, params.modes[m].kappa.sqrt()));
        }
        let mut h_eff = h;
        for c in &jumps {
            let cd = c.adjoint().dense(d);
            let cc = matmul(&cd, &c.dense(d), d);
            for (e, v) in h_eff.iter_mut().zip(cc) {
                *e -= 0.5 * I * v;
            }
        }
        Model {
            d,
            h_eff,
            jumps,
            annihilators,
            lowerings,
            inversions,
            space,
        }
    }

    /// `L(ρ) = −i H_eff ρ + i ρ H_eff† + Σ c ρ c†` in matrix form.
    fn apply(&self, rho: &[Complex64]) -> Vec<Complex64> {
        let d = self.d;
        let left = matmul(&self.h_eff, rho, d);
        let mut out = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                // (ρ H_eff†)_ij = Σ_k ρ_ik conj(H_eff_jk)
                let right: Complex64 = (0..d).map(|k| rho[i * d + k] * self.h_eff[j * d + k].conj()).sum();
                out[i * d + j] = -I * left[i * d + j] + I * right;
            }
        }
        for c in &self.jumps {
            for &(i, k, v) in &c.entries {
                for &(j, l, w) in &c.entries {
                    out[i * d + j] += v * rho[k * d + l] * w.conj();
                }
            }
        }
        out
    }

    /// Column-stacked superoperator.
    fn liouvillian(&self) -> Mat<Complex64> {
        let d = self.d;
        let big = d * d;
        let mut l = Mat::<Complex64>::zeros(big, big);
        for j in 0..d {
            for i in 0..d {
                let row = i + d * j;
                for k in 0..d {
                    let v = self.h_eff[i * d + k];
                    if v != ZERO {
                        l[(row, k + d * j)] += -I * v;
                    }
                }
                for m in 0..d {
                    let v = self.h_eff[j * d + m];
                    if v != ZERO {
                        l[(row, i + d * m)] += I * v.conj();
                    }
                }
            }
        }
        for c in &self.jumps {
            for &(i, k, v) in &c.entries {
                for &(j, m, w) in &c.entries {
                    l[(i + d * j, k + d * m)] += v * w.conj();
                }
            }
        }
        l
    }

    fn vacuum(&self) -> Vec<Complex64> {
        let mut rho = vec![ZERO; self.d * self.d];
        rho[0] = Complex64::new(1.0, 0.0);
        rho
    }

    fn residual(&self, rho: &[Complex64]) -> f64 {
        self.apply(rho).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn solve_direct(&self) -> Option<Vec<Complex64>> {
        let d = self.d;
        let big = d * d;
        let mut l = self.liouvillian();
        // Trace preservation makes the (0,0) population row redundant.
        for col in 0..big {
            l[(0, col)] = ZERO;
        }
        for i in 0..d {
            l[(0, i + d * i)] = Complex64::new(1.0, 0.0);
        }
        let mut b = Mat::<Complex64>::zeros(big, 1);
        b[(0, 0)] = Complex64::new(1.0, 0.0);
        let x = faer::linalg::solvers::Solve::solve(&l.partial_piv_lu(), &b);
        let mut rho = vec![ZERO; big];
        for j in 0..d {
            for i in 0..d {
                rho[i * d + j] = x[(i + d * j, 0)];
            }
        }
        rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(rho)
    }

    fn integrate(&self, t_final: f64, dt: f64) -> Vec<Complex64> {
        let steps = (t_final / dt).ceil() as usize;
        let h = t_final / steps as f64;
        let mut rho = self.vacuum();
        let axpy = |x: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> {
            x.iter().zip(k).map(|(x, k)| x + a * k).collect()
        };
        for _ in 0..steps {
            let k1 = self.apply(&rho);
            let k2 = self.apply(&axpy(&rho, &k1, 0.5 * h));
            let k3 = self.apply(&axpy(&rho, &k2, 0.5 * h));
            let k4 = self.apply(&axpy(&rho, &k3, h));
            for (i, r) in rho.iter_mut().enumerate() {
                *r += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        rho
    }

    fn report(&self, rho: &[Complex64], method: SteadyStateMethod) -> Result<LindbladReport> {
        let d = self.d;
        let trace: Complex64 = (0..d).map(|i| rho[i * d + i]).sum();
        let mut hermiticity_error: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                hermiticity_error = hermiticity_error.max((rho[i * d + j] - rho[j * d + i].conj()).norm());
            }
        }
        let hermitian = Mat::<Complex64>::from_fn(d, d, |i, j| 0.5 * (rho[i * d + j] + rho[j * d + i].conj()));
        let eigenvalues = hermitian
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let top = self.space.levels - 1;
        Ok(LindbladReport {
            amplitudes: self.annihilators.iter().map(|a| a.expect(rho, d)).collect(),
            coherences: self.lowerings.iter().map(|s| s.expect(rho, d)).collect(),
            inversions: self.inversions.iter().map(|z| z.expect(rho, d).re).collect(),
            photon_numbers: (0..self.space.modes)
                .map(|m| (0..d).map(|s| self.space.photons(s, m) as f64 * rho[s * d + s].re).sum())
                .collect(),
            top_level_population: (0..self.space.modes)
                .map(|m| {
                    (0..d)
                        .filter(|&s| self.space.photons(s, m) == top)
                        .map(|s| rho[s * d + s].re)
                        .sum()
                })
                .collect(),
            residual: self.residual(rho),
            trace,
            hermiticity_error,
            min_eigenvalue: eigenvalues.first().copied().unwrap_or(0.0),
            method,
        })
    }
}

fn scaled(op: &Op, factor: f64) -> Op {
    Op {
        entries: op.entries.iter().map(|&(i, k, v)| (i, k, v * factor)).collect(),
    }
}

fn check_cutoff(system: &TinyQuantumSystem, report: LindbladReport) -> Result<LindbladReport> {
    if let Some((mode, &population)) = report
        .top_level_population
        .iter()
        .enumerate()
        .find(|(_, &p)| p > system.cutoff_tolerance)
    {
        return Err(Error::CutoffInsufficient {
            mode: mode + 1,
            cutoff: system.photon_cutoff,
            population,
        });
    }
    Ok(report)
}

/// Default evolution time `50 / min(κ, Γ)` and step `10⁻³ / (largest rate)`.
pub fn default_integration(system: &TinyQuantumSystem, delta: f64) -> (f64, f64) {
    let p = &system.params;
    let slowest = p.modes.iter().map(|m| m.kappa).fold(p.gamma, f64::min);
    let mut fastest = p.gamma.max(delta.abs()).max(p.eta);
    for (m, mode) in p.modes.iter().enumerate() {
        let collective: f64 = system.cosines.iter().map(|row| (mode.g * row[m]).powi(2)).sum();
        fastest = fastest
            .max(mode.kappa)
            .max((mode.detuning - delta).abs())
            .max(collective.sqrt());
    }
    (50.0 / slowest, 1e-3 / fastest)
}

/// Steady state by direct solve, falling back to time integration when the
/// direct solution fails or leaves a residual above `1e-10`.
pub fn lindblad_steady_state(system: &TinyQuantumSystem, delta: f64) -> Result<LindbladReport> {
    system.validate()?;
    let model = Model::new(system, delta);
    if let Some(rho) = model.solve_direct() {
        if model.residual(&rho) <= DIRECT_RESIDUAL {
            return check_cutoff(system, model.report(&rho, SteadyStateMethod::Direct)?);
        }
    }
    let (t_final, dt) = default_integration(system, delta);
    let rho = model.integrate(t_final, dt);
    check_cutoff(system, model.report(&rho, SteadyStateMethod::Integrated)?)
}

/// Steady state by explicit RK4 evolution from the vacuum.
pub fn lindblad_integrated(
    system: &TinyQuantumSystem,
    delta: f64,
    t_final: f64,
    dt: f64,
) -> Result<LindbladReport> {
    system.validate()?;
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(Error::invalid("dt", "time span and step must be > 0"));
    }
    let model = Model::new(system, delta);
    let rho = model.integrate(t_final, dt);
    check_cutoff(system, model.report(&rho, SteadyStateMethod::Integrated)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::modes::ModeParams;

    fn params(atoms: usize, modes: usize, eta: f64) -> SystemParams {
        let mode = |kappa| ModeParams {
            wavevector: Vec3::new(1.0, 0.0, 0.0),
            g: 0.8,
            detuning: 0.0,
            kappa,
        };
        SystemParams {
            modes: [mode(1.0), mode(4.0)].into_iter().take(modes).collect(),
            atom_count: atoms,
            gamma: 1.0,
            eta,
            pumped_mode: 0,
        }
    }

    #[test]
    fn basis_bookkeeping() {
        let system = TinyQuantumSystem::new(params(2, 2, 1e-3), vec![vec![1.0, 1.0]; 2], 2).unwrap();
        assert_eq!(system.hilbert_dim(), 36);
        let space = Space::new(&system);
        let a1 = space.annihilation(0);
        let a2 = space.annihilation(1);
        assert_eq!(a1.entries.len(), 2 * 3 * 4);
        for &(to, from, v) in &a1.entries {
            assert_eq!(space.photons(to, 0) + 1, space.photons(from, 0));
            assert_eq!(space.photons(to, 1), space.photons(from, 1));
            assert_eq!(to & 3, from & 3);
            assert!((v.re - (space.photons(from, 0) as f64).sqrt()).abs() < 1e-15);
        }
        for &(to, from, _) in &a2.entries {
            assert_eq!(space.photons(to, 1) + 1, space.photons(from, 1));
            assert_eq!(space.photons(to, 0), space.photons(from, 0));
        }
    }

    #[test]
    fn limits_are_enforced() {
        assert!(TinyQuantumSystem::new(params(4, 1, 1e-3), vec![vec![1.0]; 4], 1).is_err());
        assert!(TinyQuantumSystem::new(params(1, 1, 1e-3), vec![vec![1.0]], 4).is_err());
        assert!(TinyQuantumSystem::new(params(1, 1, 0.5), vec![vec![1.0]], 1).is_err());
        assert!(TinyQuantumSystem::new(params(2, 1, 1e-3), vec![vec![1.0]], 1).is_err());
        // 4² · 2³ = 128 is fine, 4² · 2³ with 3 modes is not allowed at all
        assert!(TinyQuantumSystem::new(params(3, 2, 1e-3), vec![vec![1.0, 0.5]; 3], 3).is_ok());
    }

    #[test]
    fn undriven_steady_state_is_the_vacuum() {
        let system = TinyQuantumSystem::new(params(2, 2, 0.0), vec![vec![1.0, 0.3], vec![-0.4, 1.0]], 1).unwrap();
        let report = lindblad_steady_state(&system, 0.7).unwrap();
        assert_eq!(report.method, SteadyStateMethod::Direct);
        assert!(report.amplitudes.iter().all(|z| z.norm() < 1e-14));
        assert!(report.coherences.iter().all(|z| z.norm() < 1e-14));
        assert!(report.inversions.iter().all(|z| (z + 1.0).abs() < 1e-14));
        assert!(report.photon_numbers.iter().all(|n| n.abs() < 1e-14));
    }

    #[test]
    fn steady_state_is_a_physical_density_matrix() {
        let system = TinyQuantumSystem::new(params(2, 2, 1e-2), vec![vec![0.9, 0.2], vec![-0.5, 0.7]], 2).unwrap();
        let report = lindblad_steady_state(&system, 1.1).unwrap();
        assert!(report.residual <= 1e-10);
        assert!((report.trace - 1.0).norm() < 1e-12);
        assert!(report.hermiticity_error < 1e-12);
        assert!(report.min_eigenvalue >= -1e-9);
    }

    #[test]
    fn superoperator_agrees_with_matrix_form() {
        let system = TinyQuantumSystem::new(params(1, 2, 1e-2), vec![vec![0.6, -0.8]], 1).unwrap();
        let model = Model::new(&system, 0.4);
        let d = model.d;
        let rho: Vec<Complex64> = (0..d * d)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let direct = model.apply(&rho);
        let l = model.liouvillian();
        for j in 0..d {
            for i in 0..d {
                let row = i + d * j;
                let via_super: Complex64 = (0..d * d).map(|c| l[(row, c)] * rho[(c % d) * d + c / d]).sum();
                assert!((via_super - direct[i * d + j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn integration_converges_to_direct_solution() {
        let system = TinyQuantumSystem::new(params(1, 1, 1e-3), vec![vec![1.0]], 1).unwrap();
        let delta = 0.3;
        let direct = lindblad_steady_state(&system, delta).unwrap();
        let (t_final, dt) = default_integration(&system, delta);
        assert_eq!(t_final, 50.0);
        let integrated = lindblad_integrated(&system, delta, t_final, dt).unwrap();
        let a = direct.amplitudes[0];
        assert!((integrated.amplitudes[0] - a).norm() <= 1e-8 * a.norm());
        assert!((integrated.coherences[0] - direct.coherences[0]).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn tight_cutoff_is_reported() {
        let mut system = TinyQuantumSystem::new(params(1, 1, 1e-2), vec![vec![1.0]], 1).unwrap();
        system.cutoff_tolerance = 1e-12;
        assert!(matches!(
            lindblad_steady_state(&system, 0.0),
            Err(Error::CutoffInsufficient { mode: 1, cutoff: 1, .. })
        ));
    }
}
