//! Structure-factor matrices `s[m][m'] = <cos(k_m . r) cos(k_m' . r)>`.
//!
//! Three independent routes are provided: the exact average over a discrete
//! cloud, the closed form for a Gaussian density, and the closed form for a
//! grated Gaussian density. The limiting matrices of the three spectral
//! regimes are exposed as well.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::ensemble::AtomCloud;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Largest supported number of modes.
pub const MAX_MODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Discrete,
    AnalyticGaussian,
    AnalyticGrated,
    Limit,
    /// Supplied directly by the caller.
    External,
}

/// Limiting spectral regimes of a two-mode cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `kR → 0`: every atom sees both mode functions at their maximum.
    Subwavelength,
    /// Wide Gaussian cloud: mode–mode terms interfere away.
    WideGaussian,
    /// Wide cloud with a grating at a Bragg condition.
    WideGratedBragg,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subwavelength" => Ok(Regime::Subwavelength),
            "gaussian" | "wide-gaussian" => Ok(Regime::WideGaussian),
            "grated" | "wide-grated" | "wide-grated-bragg" => Ok(Regime::WideGratedBragg),
            other => Err(Error::UnsupportedRegime(format!(
                "`{other}` (expected subwavelength, gaussian or grated)"
            ))),
        }
    }
}

/// Dense symmetric `M x M` structure-factor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFactorMatrix {
    entries: Vec<f64>,
    mode_count: usize,
    provenance: Provenance,
}

impl StructureFactorMatrix {
    fn from_upper(m: usize, provenance: Provenance, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = entry(i, j);
                entries[i * m + j] = v;
                entries[j * m + i] = v;
            }
        }
        StructureFactorMatrix {
            entries,
            mode_count: m,
            provenance,
        }
    }

    /// Builds a matrix from explicit rows, checking symmetry and bounds.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        check_mode_count(m)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(
                    format!("s[{i}]"),
                    format!("expected {m} entries, got {}", row.len()),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("s[{i}][{j}]"), "must lie in [-1, 1]"));
                }
                if v != rows[j][i] {
                    return Err(Error::invalid(format!("s[{i}][{j}]"), "matrix must be symmetric"));
                }
            }
            if rows[i][i] < 0.0 {
                return Err(Error::invalid(format!("s[{i}][{i}]"), "diagonal must be >= 0"));
            }
        }
        Ok(Self::from_upper(m, Provenance::External, |i, j| rows[i][j]))
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.mode_count + n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.mode_count)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.mode_count)
            .all(|i| (0..self.mode_count).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &StructureFactorMatrix) -> f64 {
        assert_eq!(self.mode_count, other.mode_count, "mode count mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let m = self.mode_count;
        let mat = Mat::<f64>::from_fn(m, m, |i, j| self.get(i, j));
        mat.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))
    }
}

fn check_mode_count(m: usize) -> Result<()> {
    if m == 0 || m > MAX_MODES {
        Err(Error::invalid(
            "modes",
            format!("mode count must be in 1..={MAX_MODES}, got {m}"),
        ))
    } else {
        Ok(())
    }
}

fn check_nonnegative_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("radius", format!("must be >= 0, got {radius}")))
    }
}

/// `exp(x)`, flushed to zero once the result would be subnormal.
fn exp_clamped(x: f64) -> f64 {
    if x <= -745.0 {
        0.0
    } else {
        x.exp()
    }
}

/// `exp(-|v|² R² / 2)`
fn gaussian_overlap(v: Vec3, radius: f64) -> f64 {
    exp_clamped(-0.5 * v.norm_sqr() * radius * radius)
}

/// Exact average over the atoms of `cos(k_m . r) cos(k_m' . r)`.
pub fn structure_factor_discrete(cloud: &AtomCloud, modes: &[Vec3]) -> Result<StructureFactorMatrix> {
    let m = modes.len();
    check_mode_count(m)?;
    let n = cloud.len() as f64;
    let mut sums = vec![0.0; m * m];
    let mut cosines = vec![0.0; m];
    for r in cloud.positions() {
        for (c, k) in cosines.iter_mut().zip(modes) {
            *c = k.dot(*r).cos();
        }
        for i in 0..m {
            for j in i..m {
                sums[i * m + j] += cosines[i] * cosines[j];
            }
        }
    }
    Ok(StructureFactorMatrix::from_upper(m, Provenance::Discrete, |i, j| {
        sums[i * m + j] / n
    }))
}

fn gaussian_entry(km: Vec3, kn: Vec3, radius: f64) -> f64 {
    0.5 * (gaussian_overlap(km - kn, radius) + gaussian_overlap(km + kn, radius))
}

/// Closed form for an isotropic Gaussian cloud of per-axis width `radius`.
pub fn structure_factor_gaussian(modes: &[Vec3], radius: f64) -> Result<StructureFactorMatrix> {
    check_mode_count(modes.len())?;
    check_nonnegative_radius(radius)?;
    Ok(StructureFactorMatrix::from_upper(
        modes.len(),
        Provenance::AnalyticGaussian,
        |i, j| gaussian_entry(modes[i], modes[j], radius),
    ))
}

/// Closed form for a Gaussian cloud modulated by `cos²(q . r)`.
///
/// Besides the Gaussian terms, four Bragg terms survive whenever `2q` matches
/// one of `±k_m ± k_m'`. With `q = 0` this is exactly the Gaussian result.
pub fn structure_factor_grated(modes: &[Vec3], radius: f64, q: Vec3) -> Result<StructureFactorMatrix> {
    check_mode_count(modes.len())?;
    check_nonnegative_radius(radius)?;
    if !q.is_finite() {
        return Err(Error::invalid("q", "grating vector must be finite"));
    }
    let two_q = q.scale(2.0);
    let norm = 4.0 * (1.0 + exp_clamped(-2.0 * q.norm_sqr() * radius * radius));
    Ok(StructureFactorMatrix::from_upper(
        modes.len(),
        Provenance::AnalyticGrated,
        |i, j| {
            let (km, kn) = (modes[i], modes[j]);
            let bragg = gaussian_overlap(two_q + km + kn, radius)
                + gaussian_overlap(two_q - km + kn, radius)
                + gaussian_overlap(two_q + km - kn, radius)
                + gaussian_overlap(two_q - km - kn, radius);
            (4.0 * gaussian_entry(km, kn, radius) + bragg) / norm
        },
    ))
}

/// Off-diagonal `s12` of a grated cloud whose grating is detuned from the
/// Bragg vector: `q = (1 + epsilon)(k1 + k2)/2`.
pub fn bragg_detuning_curve(modes: [Vec3; 2], radius: f64, epsilon: f64) -> Result<f64> {
    let q = (0.5 * (1.0 + epsilon)) * (modes[0] + modes[1]);
    Ok(structure_factor_grated(&modes, radius, q)?.get(0, 1))
}

/// Large-`kR` asymptote `exp(-(ε kR)²)/4` of [`bragg_detuning_curve`] for
/// orthogonal unit wavevectors.
pub fn bragg_asymptote(kr: f64, epsilon: f64) -> f64 {
    0.25 * exp_clamped(-(epsilon * kr).powi(2))
}

/// Limiting matrix of a regime: all ones, `δ/2`, or `1/2` on the diagonal
/// with `1/4` elsewhere.
pub fn structure_factor_limit(regime: Regime, mode_count: usize) -> Result<StructureFactorMatrix> {
    check_mode_count(mode_count)?;
    let (diag, off) = match regime {
        Regime::Subwavelength => (1.0, 1.0),
        Regime::WideGaussian => (0.5, 0.0),
        Regime::WideGratedBragg => (0.5, 0.25),
    };
    Ok(StructureFactorMatrix::from_upper(mode_count, Provenance::Limit, |i, j| {
        if i == j {
            diag
        } else {
            off
        }
    }))
}
