//! Spectra over the pump detuning, feature detection, and the closed-form
//! resonance locations of the two-mode regimes.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample_gaussian_cloud, sample_grated_cloud, AtomCloud, CloudDescriptor};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::modes::{solve_steady_state, SystemParams};
use crate::structure::{
    structure_factor_discrete, structure_factor_gaussian, structure_factor_grated, Regime,
    StructureFactorMatrix,
};

/// Uniform grid specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub const DEFAULT_DELTA: GridSpec = GridSpec {
        min: -150.0,
        max: 150.0,
        points: 3001,
    };
    pub const DEFAULT_KR: GridSpec = GridSpec {
        min: 0.0,
        max: 10.0,
        points: 201,
    };

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.max <= self.min || self.points < 3 {
            return Err(Error::invalid(
                name,
                format!(
                    "need finite min < max and at least 3 points, got [{}, {}] x {}",
                    self.min, self.max, self.points
                ),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::invalid("grid", "need at least 3 points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Mode intensities `|⟨a_m⟩|²` over a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumScan {
    pub deltas: Vec<f64>,
    /// `amplitudes[m][i]` is `⟨a_m⟩` at `deltas[i]`.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub intensities: Vec<Vec<f64>>,
    pub params: SystemParams,
    pub structure: StructureFactorMatrix,
}

/// Solves the coupled-mode equations at every grid point.
pub fn scan_spectrum(
    params: &SystemParams,
    s: &StructureFactorMatrix,
    grid: &[f64],
) -> Result<SpectrumScan> {
    params.validate()?;
    check_grid(grid)?;
    let states = grid
        .par_iter()
        .map(|&delta| solve_steady_state(params, delta, s).map(|st| st.amplitudes))
        .collect::<Result<Vec<_>>>()?;
    let m = params.mode_count();
    let amplitudes: Vec<Vec<Complex64>> = (0..m)
        .map(|mode| states.iter().map(|a| a[mode]).collect())
        .collect();
    let intensities = amplitudes
        .iter()
        .map(|row| row.iter().map(Complex64::norm_sqr).collect())
        .collect();
    Ok(SpectrumScan {
        deltas: grid.to_vec(),
        amplitudes,
        intensities,
        params: params.clone(),
        structure: s.clone(),
    })
}

/// How the structure factor of each cloud width is obtained in [`scan_2d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StructureSource {
    Analytic,
    /// Average over a sampled cloud of `atoms` atoms. A width of zero puts
    /// every atom at the origin.
    MonteCarlo { atoms: usize, seed: u64 },
}

/// Spectra as a function of cloud width and pump detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct Map2d {
    pub krs: Vec<f64>,
    pub deltas: Vec<f64>,
    /// `intensities[k][m][i]`: width `krs[k]`, mode `m`, detuning `deltas[i]`.
    pub intensities: Vec<Vec<Vec<f64>>>,
    pub structures: Vec<StructureFactorMatrix>,
}

impl Map2d {
    /// Spectrum of one mode at one cloud width.
    pub fn column(&self, kr_index: usize, mode: usize) -> &[f64] {
        &self.intensities[kr_index][mode]
    }

    /// Largest intensity of `mode` at width index `kr_index`.
    pub fn peak(&self, kr_index: usize, mode: usize) -> f64 {
        self.column(kr_index, mode).iter().copied().fold(0.0, f64::max)
    }
}

fn structure_for_width(
    family: &CloudDescriptor,
    modes: &[Vec3],
    kr: f64,
    source: StructureSource,
) -> Result<StructureFactorMatrix> {
    match (source, family) {
        (StructureSource::Analytic, CloudDescriptor::Gaussian { .. }) => {
            structure_factor_gaussian(modes, kr)
        }
        (StructureSource::Analytic, CloudDescriptor::Grated { q, .. }) => {
            structure_factor_grated(modes, kr, *q)
        }
        (StructureSource::MonteCarlo { atoms, seed }, family) => {
            let cloud = if kr == 0.0 {
                AtomCloud::from_positions(vec![Vec3::ZERO; atoms])?
            } else {
                match family {
                    CloudDescriptor::Gaussian { .. } => sample_gaussian_cloud(atoms, kr, seed)?,
                    CloudDescriptor::Grated { q, .. } => sample_grated_cloud(atoms, kr, *q, seed)?,
                    _ => unreachable!("family checked by caller"),
                }
            };
            structure_factor_discrete(&cloud, modes)
        }
        _ => unreachable!("family checked by caller"),
    }
}

/// Sweeps the width `kR` of a Gaussian or grated family. Wavevectors are in
/// units of `k`, so `kR` is the cloud radius.
pub fn scan_2d(
    params: &SystemParams,
    family: &CloudDescriptor,
    kr_grid: &[f64],
    delta_grid: &[f64],
    source: StructureSource,
) -> Result<Map2d> {
    params.validate()?;
    check_grid(delta_grid)?;
    if kr_grid.is_empty() || kr_grid.iter().any(|kr| !(kr.is_finite() && *kr >= 0.0)) {
        return Err(Error::invalid("kr_grid", "widths must be finite and >= 0"));
    }
    if !matches!(family, CloudDescriptor::Gaussian { .. } | CloudDescriptor::Grated { .. }) {
        return Err(Error::invalid("family", "width scans need a Gaussian or grated cloud"));
    }
    let modes = params.wavevectors();
    let columns = kr_grid
        .par_iter()
        .map(|&kr| {
            let s = structure_for_width(family, &modes, kr, source)?;
            let scan = scan_spectrum(params, &s, delta_grid)?;
            Ok((scan.intensities, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let (intensities, structures) = columns.into_iter().unzip();
    Ok(Map2d {
        krs: kr_grid.to_vec(),
        deltas: delta_grid.to_vec(),
        intensities,
        structures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    BrightPeak,
    Antiresonance,
}

impl FeatureKind {
    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::BrightPeak => "bright",
            FeatureKind::Antiresonance => "dark",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeature {
    pub kind: FeatureKind,
    /// Zero-based mode index.
    pub mode: usize,
    /// Sub-grid location from a parabola through the three nearest samples.
    pub delta: f64,
    /// Peak prominence, or depth of a dip below its shoulders.
    pub prominence: f64,
}

/// Detection thresholds for [`find_features`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureThresholds {
    /// Minimum peak prominence as a fraction of the global maximum.
    pub peak: f64,
    /// Minimum dip depth as a fraction of the mean of its two neighbouring
    /// maxima. `0.9` asks for a minimum ten times below its shoulders.
    pub dip: f64,
}

impl Default for FeatureThresholds {
    fn default() -> Self {
        FeatureThresholds { peak: 1e-3, dip: 0.9 }
    }
}

/// Vertex offset, in grid steps, of the parabola through three samples.
fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let curvature = left - 2.0 * mid + right;
    if curvature == 0.0 {
        0.0
    } else {
        (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
    }
}

fn refined_location(x: &[f64], y: &[f64], i: usize) -> f64 {
    let offset = parabolic_offset(y[i - 1], y[i], y[i + 1]);
    if offset >= 0.0 {
        x[i] + offset * (x[i + 1] - x[i])
    } else {
        x[i] + offset * (x[i] - x[i - 1])
    }
}

/// Topographic prominence of the strict maximum at `i`.
fn prominence(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for &v in y[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Level of the nearest maximum reached by climbing from the minimum at `i`.
fn shoulder(y: &[f64], i: usize, step: isize) -> f64 {
    let mut j = i as isize;
    loop {
        let next = j + step;
        if next < 0 || next as usize >= y.len() || y[next as usize] < y[j as usize] {
            return y[j as usize];
        }
        j = next;
    }
}

/// Bright peaks and antiresonances of one mode's spectrum, ordered by location.
pub fn find_features(
    scan: &SpectrumScan,
    mode: usize,
    thresholds: FeatureThresholds,
) -> Result<Vec<SpectralFeature>> {
    if mode >= scan.intensities.len() {
        return Err(Error::invalid("mode", format!("mode {} not in scan", mode + 1)));
    }
    features_of(&scan.deltas, &scan.intensities[mode], mode, thresholds)
}

/// [`find_features`] on a bare intensity series.
pub fn features_of(
    deltas: &[f64],
    y: &[f64],
    mode: usize,
    thresholds: FeatureThresholds,
) -> Result<Vec<SpectralFeature>> {
    if !(thresholds.peak > 0.0 && thresholds.dip > 0.0) {
        return Err(Error::invalid("thresholds", "must be > 0"));
    }
    if deltas.len() != y.len() {
        return Err(Error::invalid("intensities", "length differs from grid"));
    }
    let global_max = y.iter().copied().fold(0.0, f64::max);
    let mut features = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let (l, c, r) = (y[i - 1], y[i], y[i + 1]);
        if c > l && c > r {
            let prom = prominence(y, i);
            if prom >= thresholds.peak * global_max && prom > 0.0 {
                features.push(SpectralFeature {
                    kind: FeatureKind::BrightPeak,
                    mode,
                    delta: refined_location(deltas, y, i),
                    prominence: prom,
                });
            }
        } else if c < l && c < r {
            let level = 0.5 * (shoulder(y, i, -1) + shoulder(y, i, 1));
            let depth = level - c;
            if depth >= thresholds.dip * level && depth > 0.0 {
                features.push(SpectralFeature {
                    kind: FeatureKind::Antiresonance,
                    mode,
                    delta: refined_location(deltas, y, i),
                    prominence: depth,
                });
            }
        }
    }
    Ok(features)
}

/// Collective frequencies `(G₊, G₋)` of two modes sharing a grated cloud:
/// `G± = ½ √(N (g1² + g2² ± √((g1² + g2²)² − 3 g1² g2²)))`.
pub fn collective_frequencies(g1: f64, g2: f64, n: usize) -> (f64, f64) {
    let (a, b) = (g1 * g1, g2 * g2);
    let sum = a + b;
    // (g1² − g2²)² + g1² g2², the same radicand without cancellation
    let root = ((a - b).powi(2) + a * b).sqrt();
    let n = n as f64;
    let plus = 0.5 * (n * (sum + root)).sqrt();
    // G₋² = N(sum − root)/4 = 3 N a b / (4 (sum + root)) avoids cancellation
    let minus = if sum + root > 0.0 {
        (0.75 * n * a * b / (sum + root)).sqrt()
    } else {
        0.0
    };
    (plus, minus)
}

/// Predicted resonance locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonances {
    pub bright: Vec<f64>,
    pub dark: Vec<f64>,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Closed-form resonances of a two-mode system with resonant modes. `g1` is
/// the pumped mode's coupling.
pub fn predicted_resonances(regime: Regime, params: &SystemParams) -> Result<Resonances> {
    if params.mode_count() != 2 {
        return Err(Error::UnsupportedRegime(format!(
            "closed-form resonances need 2 modes, got {}",
            params.mode_count()
        )));
    }
    let p = params.pumped_mode;
    let (g1, g2) = (params.modes[p].g, params.modes[1 - p].g);
    let n = params.atom_count as f64;
    Ok(match regime {
        Regime::Subwavelength => {
            let b = (n * (g1 * g1 + g2 * g2)).sqrt();
            let d = g2 * n.sqrt();
            Resonances {
                bright: sorted(vec![-b, 0.0, b]),
                dark: sorted(vec![-d, d]),
            }
        }
        Regime::WideGaussian => {
            let b = g1 * (n / 2.0).sqrt();
            Resonances {
                bright: vec![-b, b],
                dark: vec![0.0],
            }
        }
        Regime::WideGratedBragg => {
            let (gp, gm) = collective_frequencies(g1, g2, params.atom_count);
            let d = g2 * (n / 2.0).sqrt();
            Resonances {
                bright: sorted(vec![-gp, -gm, gm, gp]),
                dark: sorted(vec![-d, 0.0, d]),
            }
        }
    })
}

/// Fifteen significant digits.
pub fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

/// `delta,re_a1,im_a1,abs2_a1,...`
pub fn write_spectrum_csv<W: Write>(scan: &SpectrumScan, mut out: W) -> std::io::Result<()> {
    let m = scan.amplitudes.len();
    let mut header = String::from("delta");
    for mode in 1..=m {
        header.push_str(&format!(",re_a{mode},im_a{mode},abs2_a{mode}"));
    }
    writeln!(out, "{header}")?;
    for (i, &delta) in scan.deltas.iter().enumerate() {
        let mut line = fmt15(delta);
        for mode in 0..m {
            let a = scan.amplitudes[mode][i];
            line.push_str(&format!(
                ",{},{},{}",
                fmt15(a.re),
                fmt15(a.im),
                fmt15(scan.intensities[mode][i])
            ));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Long-format map `kR,delta,abs2_a<m>...` restricted to the given zero-based
/// modes.
pub fn write_map2d_csv<W: Write>(map: &Map2d, modes: &[usize], mut out: W) -> std::io::Result<()> {
    let mut header = String::from("kR,delta");
    for m in modes {
        header.push_str(&format!(",abs2_a{}", m + 1));
    }
    writeln!(out, "{header}")?;
    for (k, &kr) in map.krs.iter().enumerate() {
        let kr_text = fmt15(kr);
        for (i, &delta) in map.deltas.iter().enumerate() {
            let mut line = format!("{kr_text},{}", fmt15(delta));
            for &m in modes {
                line.push(',');
                line.push_str(&fmt15(map.intensities[k][m][i]));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// `kind,mode,delta,prominence` with one-based mode numbers.
pub fn write_features_csv<W: Write>(features: &[SpectralFeature], mut out: W) -> std::io::Result<()> {
    writeln!(out, "kind,mode,delta,prominence")?;
    for f in features {
        writeln!(
            out,
            "{},{},{},{}",
            f.kind.label(),
            f.mode + 1,
            fmt15(f.delta),
            fmt15(f.prominence)
        )?;
    }
    Ok(())
}
