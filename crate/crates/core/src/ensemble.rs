//! Atomic position distributions.
//!
//! Clouds are sampled in three dimensions even when every mode wavevector
//! lies in a plane. Sampling is deterministic for a fixed seed: every sampler
//! draws from a ChaCha8 stream seeded with `seed_from_u64`.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Which extrema of the two standing waves a checkerboard lattice occupies.
///
/// A site `r` solves `k1.r = a π`, `k2.r = b π`. On `EvenParity` sites
/// (`a + b` even) the two mode functions have equal sign, which are the
/// intensity maxima of the in-phase checkerboard field and give an all-ones
/// structure factor. `OddParity` sites have opposite signs (`s12 = -1`).
/// `All` keeps every site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckerboardSites {
    #[default]
    EvenParity,
    OddParity,
    All,
}

impl CheckerboardSites {
    fn admits(self, a: i64, b: i64) -> bool {
        match self {
            CheckerboardSites::EvenParity => (a + b).rem_euclid(2) == 0,
            CheckerboardSites::OddParity => (a + b).rem_euclid(2) == 1,
            CheckerboardSites::All => true,
        }
    }
}

/// Analytic description of how a cloud was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CloudDescriptor {
    PointCloud,
    Gaussian {
        radius: f64,
    },
    Grated {
        radius: f64,
        q: Vec3,
    },
    Checkerboard {
        k1: Vec3,
        k2: Vec3,
        extent: u32,
        sites: CheckerboardSites,
    },
}

impl CloudDescriptor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CloudDescriptor::PointCloud => Ok(()),
            CloudDescriptor::Gaussian { radius } => check_radius(radius),
            CloudDescriptor::Grated { radius, q } => {
                check_radius(radius)?;
                if !q.is_finite() {
                    return Err(Error::invalid("q", "grating vector must be finite"));
                }
                Ok(())
            }
            CloudDescriptor::Checkerboard { k1, k2, .. } => lattice_basis(k1, k2).map(|_| ()),
        }
    }

    /// The same family with its envelope width replaced. Only meaningful for
    /// Gaussian and grated clouds.
    pub fn with_radius(&self, radius: f64) -> Option<CloudDescriptor> {
        match *self {
            CloudDescriptor::Gaussian { .. } => Some(CloudDescriptor::Gaussian { radius }),
            CloudDescriptor::Grated { q, .. } => Some(CloudDescriptor::Grated { radius, q }),
            _ => None,
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("radius", format!("must be > 0, got {radius}")))
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("n", "atom count must be at least 1"))
    } else {
        Ok(())
    }
}

/// An immutable set of atomic positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloud {
    positions: Vec<Vec3>,
    descriptor: CloudDescriptor,
    seed: Option<u64>,
}

impl AtomCloud {
    /// Wraps user-supplied positions.
    pub fn from_positions(positions: Vec<Vec3>) -> Result<Self> {
        Self::build(positions, CloudDescriptor::PointCloud, None)
    }

    fn build(positions: Vec<Vec3>, descriptor: CloudDescriptor, seed: Option<u64>) -> Result<Self> {
        check_count(positions.len())?;
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::invalid(
                format!("positions[{i}]"),
                "position must be finite",
            ));
        }
        Ok(AtomCloud {
            positions,
            descriptor,
            seed,
        })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn descriptor(&self) -> &CloudDescriptor {
        &self.descriptor
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Mode functions `cos(k_m . r_j)`, one row per atom.
    pub fn mode_cosines(&self, wavevectors: &[Vec3]) -> Vec<Vec<f64>> {
        self.positions
            .iter()
            .map(|r| wavevectors.iter().map(|k| k.dot(*r).cos()).collect())
            .collect()
    }

    /// Reads a point cloud from CSV with header `x,y,z`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let format_err = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| format_err(e.to_string()))?;
        let headers = reader.headers().map_err(|e| format_err(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "z"] {
            return Err(format_err(format!(
                "expected header `x,y,z`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut positions = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| format_err(e.to_string()))?;
            if record.len() != 3 {
                return Err(format_err(format!("row {}: expected 3 fields", line + 2)));
            }
            let mut xyz = [0.0; 3];
            for (slot, field) in xyz.iter_mut().zip(record.iter()) {
                *slot = field.trim().parse().map_err(|_| {
                    format_err(format!("row {}: cannot parse `{field}`", line + 2))
                })?;
            }
            positions.push(Vec3::from(xyz));
        }
        Self::from_positions(positions).map_err(|e| format_err(e.to_string()))
    }

    /// Writes the positions as CSV with header `x,y,z` at 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,y,z\n");
        for p in &self.positions {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.x, p.y, p.z));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn gaussian_point<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vec3::new(x, y, z).scale(radius)
}

/// `n` i.i.d. points from the isotropic normal distribution with per-axis
/// standard deviation `radius`.
pub fn sample_gaussian_cloud(n: usize, radius: f64, seed: u64) -> Result<AtomCloud> {
    check_count(n)?;
    check_radius(radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n).map(|_| gaussian_point(&mut rng, radius)).collect();
    AtomCloud::build(positions, CloudDescriptor::Gaussian { radius }, Some(seed))
}

/// `n` i.i.d. points from the grated density `∝ cos²(q.r) exp(-|r|²/2R²)`.
///
/// Proposals come from the Gaussian envelope and are accepted with
/// probability `cos²(q.r) ≤ 1`, so the sampler is exact.
pub fn sample_grated_cloud(n: usize, radius: f64, q: Vec3, seed: u64) -> Result<AtomCloud> {
    check_count(n)?;
    let descriptor = CloudDescriptor::Grated { radius, q };
    descriptor.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    while positions.len() < n {
        let r = gaussian_point(&mut rng, radius);
        let accept = q.dot(r).cos().powi(2);
        if rng.random::<f64>() < accept {
            positions.push(r);
        }
    }
    AtomCloud::build(positions, descriptor, Some(seed))
}

/// Inverse of the in-plane 2x2 block `[[k1x, k1y], [k2x, k2y]]`.
fn lattice_basis(k1: Vec3, k2: Vec3) -> Result<[[f64; 2]; 2]> {
    if !k1.is_finite() || !k2.is_finite() {
        return Err(Error::invalid("k1/k2", "wavevectors must be finite"));
    }
    let det = k1.x * k2.y - k1.y * k2.x;
    let scale = (k1.x.hypot(k1.y) * k2.x.hypot(k2.y)).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-12 * scale {
        return Err(Error::invalid(
            "k1/k2",
            "in-plane components must be linearly independent",
        ));
    }
    Ok([[k2.y / det, -k1.y / det], [-k2.x / det, k1.x / det]])
}

/// In-phase checkerboard lattice: the intensity maxima of the two standing
/// waves inside `|a|, |b| ≤ extent`, all at `z = 0`.
pub fn generate_checkerboard(k1: Vec3, k2: Vec3, extent: u32) -> Result<AtomCloud> {
    generate_checkerboard_sites(k1, k2, extent, CheckerboardSites::EvenParity)
}

/// Lattice of points with `k1.r = a π` and `k2.r = b π` for integers
/// `a, b ∈ [-extent, extent]`, filtered by `sites`.
pub fn generate_checkerboard_sites(
    k1: Vec3,
    k2: Vec3,
    extent: u32,
    sites: CheckerboardSites,
) -> Result<AtomCloud> {
    let inv = lattice_basis(k1, k2)?;
    let e = i64::from(extent);
    let mut positions = Vec::new();
    for a in -e..=e {
        for b in -e..=e {
            if !sites.admits(a, b) {
                continue;
            }
            let (u, v) = (a as f64 * PI, b as f64 * PI);
            positions.push(Vec3::new(
                inv[0][0] * u + inv[0][1] * v,
                inv[1][0] * u + inv[1][1] * v,
                0.0,
            ));
        }
    }
    if positions.is_empty() {
        return Err(Error::invalid(
            "extent",
            "no lattice site of the requested parity in range",
        ));
    }
    AtomCloud::build(
        positions,
        CloudDescriptor::Checkerboard {
            k1,
            k2,
            extent,
            sites,
        },
        None,
    )
}

/// Grated number density `ρ(r)`, normalized so that it integrates to `n`.
pub fn density_grated(r: Vec3, n: usize, radius: f64, q: Vec3) -> Result<f64> {
    check_radius(radius)?;
    let norm = (2.0 * PI.powi(3)).sqrt()
        * radius.powi(3)
        * (1.0 + (-2.0 * q.norm_sqr() * radius * radius).exp());
    let envelope = (-0.5 * r.norm_sqr() / (radius * radius)).exp();
    Ok(n as f64 * q.dot(r).cos().powi(2) * envelope / norm)
}
