//! Command-line front end: configuration, dispatch and CSV artifacts.
//!
//! Configuration is TOML with the sections `[system]`, `[[modes]]`,
//! `[cloud]`, `[scan]`, `[features]` and `[eigen]`. Every key is optional
//! except the per-mode `wavevector`, `g` and `kappa` once a `[[modes]]`
//! table is present. Unknown keys are rejected.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::effective::{bright_resonances_from_core, build_effective_matrix, dark_resonances_from_core};
use crate::ensemble::{
    generate_checkerboard_sites, sample_gaussian_cloud, sample_grated_cloud, AtomCloud, CheckerboardSites,
    CloudDescriptor,
};
use crate::error::{Error, Result};
use crate::geometry::{bragg_vector, Vec3};
use crate::modes::{ModeParams, SystemParams};
use crate::oracle::suite::run_validation_suite;
use crate::spectra::{
    features_of, find_features, fmt15, scan_2d, scan_spectrum, write_features_csv, write_map2d_csv,
    write_spectrum_csv, FeatureThresholds, GridSpec, SpectralFeature, StructureSource,
};
use crate::structure::{
    structure_factor_discrete, structure_factor_gaussian, structure_factor_grated, structure_factor_limit,
    Regime, StructureFactorMatrix,
};

const DEFAULTS_HELP: &str = "\
Defaults (any key may be overridden in the --config TOML file):
  [system]   atom_count = 10000, gamma = 1, eta = 0.01, pumped_mode = 1
  [[modes]]  k1 = (-1,1,0)/sqrt2, k2 = (1,1,0)/sqrt2, g = 0.8, detuning = 0, kappa = 1 and 4
  [cloud]    kind = \"gaussian\", radius = 1, q = (k1+k2)/2, atoms = 100000, seed = 1,
             analytic = true, extent = 2, sites = \"even-parity\", regime = \"subwavelength\"
  [scan]     delta in [-150, 150] with 3001 points, kR in [0, 10] with 201 points
  [features] peak_threshold = 1e-3, dip_threshold = 0.9
  [eigen]    regime = \"subwavelength\", delta = 0";

#[derive(Debug, Parser)]
#[command(name = "mmcavity", version, about = "Atoms shared between cavity modes: spectra, resonances and oracles", after_help = DEFAULTS_HELP)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or directory for `reproduce-fig2`. Standard output when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for sampled clouds and random oracle draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// M x M structure-factor matrix of the configured cloud.
    StructureFactor,
    /// Mode amplitudes over the detuning grid.
    Spectrum {
        /// Also write detected peaks and antiresonances here.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        peak_threshold: Option<f64>,
        #[arg(long)]
        dip_threshold: Option<f64>,
    },
    /// Intensities over cloud width and detuning.
    Map2d {
        /// Sample the structure factor instead of using the closed form.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Effective matrix, its eigenvalues and the predicted resonances.
    Eigen {
        /// subwavelength, gaussian or grated.
        #[arg(long)]
        regime: Option<Regime>,
    },
    /// Full validation chain; exits nonzero if any check fails.
    OracleCheck,
    /// Gaussian and grated width maps plus a feature summary.
    ReproduceFig2 {
        #[arg(long)]
        monte_carlo: bool,
        #[arg(long)]
        peak_threshold: Option<f64>,
        #[arg(long)]
        dip_threshold: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::StructureFactor => "structure-factor",
            Command::Spectrum { .. } => "spectrum",
            Command::Map2d { .. } => "map2d",
            Command::Eigen { .. } => "eigen",
            Command::OracleCheck => "oracle-check",
            Command::ReproduceFig2 { .. } => "reproduce-fig2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudKind {
    Gaussian,
    Grated,
    Checkerboard,
    PointCloud,
    Limit,
}

/// Resolved cloud settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudConfig {
    pub kind: CloudKind,
    pub radius: f64,
    /// Grating vector; the Bragg vector of the first two modes by default.
    pub q: Option<Vec3>,
    pub atoms: usize,
    pub seed: u64,
    pub analytic: bool,
    pub k1: Option<Vec3>,
    pub k2: Option<Vec3>,
    pub extent: u32,
    pub sites: CheckerboardSites,
    pub path: Option<PathBuf>,
    pub regime: Regime,
}

/// Fully validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub cloud: CloudConfig,
    pub delta_grid: GridSpec,
    pub kr_grid: GridSpec,
    pub thresholds: FeatureThresholds,
    pub eigen_regime: Regime,
    pub eigen_delta: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<SystemSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<ModeSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cloud: Option<CloudSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<ScanSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<FeaturesSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigen: Option<EigenSection>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    atom_count: Option<usize>,
    gamma: Option<f64>,
    eta: Option<f64>,
    pumped_mode: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeSection {
    wavevector: Option<Vec3>,
    g: Option<f64>,
    detuning: Option<f64>,
    kappa: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CloudSection {
    kind: Option<CloudKind>,
    radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<Vec3>,
    atoms: Option<usize>,
    seed: Option<u64>,
    analytic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<Vec3>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<Vec3>,
    extent: Option<u32>,
    sites: Option<CheckerboardSites>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
    regime: Option<Regime>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    delta_min: Option<f64>,
    delta_max: Option<f64>,
    delta_points: Option<usize>,
    kr_min: Option<f64>,
    kr_max: Option<f64>,
    kr_points: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesSection {
    peak_threshold: Option<f64>,
    dip_threshold: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenSection {
    regime: Option<Regime>,
    delta: Option<f64>,
}

fn resolve_modes(modes: Option<Vec<ModeSection>>) -> Result<Vec<ModeParams>> {
    let Some(modes) = modes else {
        return Ok(SystemParams::crossed_reference().modes);
    };
    modes
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let missing = |key: &str| Error::invalid(format!("modes[{}].{key}", i + 1), "missing");
            Ok(ModeParams {
                wavevector: m.wavevector.ok_or_else(|| missing("wavevector"))?,
                g: m.g.ok_or_else(|| missing("g"))?,
                detuning: m.detuning.unwrap_or(0.0),
                kappa: m.kappa.ok_or_else(|| missing("kappa"))?,
            })
        })
        .collect()
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_named(text, "<config>")
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_named(&text, &path.display().to_string())
}

fn parse_config_named(text: &str, origin: &str) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Format {
        path: origin.to_string(),
        reason: e.to_string().trim_end().replace('\n', " "),
    })?;
    resolve(file)
}

fn resolve(file: ConfigFile) -> Result<RunConfig> {
    let reference = SystemParams::crossed_reference();
    let system = file.system.unwrap_or_default();
    let modes = resolve_modes(file.modes)?;
    let pumped = system.pumped_mode.unwrap_or(1);
    if pumped == 0 || pumped > modes.len() {
        return Err(Error::invalid(
            "system.pumped_mode",
            format!("must be in 1..={}, got {pumped}", modes.len()),
        ));
    }
    let params = SystemParams {
        atom_count: system.atom_count.unwrap_or(reference.atom_count),
        gamma: system.gamma.unwrap_or(reference.gamma),
        eta: system.eta.unwrap_or(reference.eta),
        pumped_mode: pumped - 1,
        modes,
    };
    params.validate()?;

    let pair = (params.modes.len() >= 2).then(|| (params.modes[0].wavevector, params.modes[1].wavevector));
    let c = file.cloud.unwrap_or_default();
    let cloud = CloudConfig {
        kind: c.kind.unwrap_or(CloudKind::Gaussian),
        radius: c.radius.unwrap_or(1.0),
        q: c.q.or(pair.map(|(a, b)| bragg_vector(a, b))),
        atoms: c.atoms.unwrap_or(100_000),
        seed: c.seed.unwrap_or(1),
        analytic: c.analytic.unwrap_or(true),
        k1: c.k1.or(pair.map(|p| p.0)),
        k2: c.k2.or(pair.map(|p| p.1)),
        extent: c.extent.unwrap_or(2),
        sites: c.sites.unwrap_or_default(),
        path: c.path,
        regime: c.regime.unwrap_or(Regime::Subwavelength),
    };
    positive("cloud.radius", cloud.radius)?;
    if cloud.atoms == 0 {
        return Err(Error::invalid("cloud.atoms", "must be at least 1"));
    }
    if let Some(q) = cloud.q {
        if !q.is_finite() {
            return Err(Error::invalid("cloud.q", "must be finite"));
        }
    }
    if cloud.kind == CloudKind::PointCloud && cloud.path.is_none() {
        return Err(Error::invalid("cloud.path", "required for a point cloud"));
    }

    let s = file.scan.unwrap_or_default();
    let delta_grid = GridSpec {
        min: s.delta_min.unwrap_or(GridSpec::DEFAULT_DELTA.min),
        max: s.delta_max.unwrap_or(GridSpec::DEFAULT_DELTA.max),
        points: s.delta_points.unwrap_or(GridSpec::DEFAULT_DELTA.points),
    };
    let kr_grid = GridSpec {
        min: s.kr_min.unwrap_or(GridSpec::DEFAULT_KR.min),
        max: s.kr_max.unwrap_or(GridSpec::DEFAULT_KR.max),
        points: s.kr_points.unwrap_or(GridSpec::DEFAULT_KR.points),
    };
    delta_grid.validate("scan.delta")?;
    kr_grid.validate("scan.kr")?;
    if kr_grid.min < 0.0 {
        return Err(Error::invalid("scan.kr_min", "widths must be >= 0"));
    }

    let f = file.features.unwrap_or_default();
    let defaults = FeatureThresholds::default();
    let thresholds = FeatureThresholds {
        peak: f.peak_threshold.unwrap_or(defaults.peak),
        dip: f.dip_threshold.unwrap_or(defaults.dip),
    };
    positive("features.peak_threshold", thresholds.peak)?;
    positive("features.dip_threshold", thresholds.dip)?;

    let e = file.eigen.unwrap_or_default();
    let eigen_delta = e.delta.unwrap_or(0.0);
    if !eigen_delta.is_finite() {
        return Err(Error::invalid("eigen.delta", "must be finite"));
    }
    Ok(RunConfig {
        system: params,
        cloud,
        delta_grid,
        kr_grid,
        thresholds,
        eigen_regime: e.regime.unwrap_or(Regime::Subwavelength),
        eigen_delta,
    })
}

impl Default for RunConfig {
    fn default() -> Self {
        resolve(ConfigFile::default()).expect("built-in defaults are valid")
    }
}

impl RunConfig {
    /// The resolved configuration as a TOML document that parses back to
    /// the same value.
    pub fn to_toml(&self) -> String {
        let c = &self.cloud;
        let file = ConfigFile {
            system: Some(SystemSection {
                atom_count: Some(self.system.atom_count),
                gamma: Some(self.system.gamma),
                eta: Some(self.system.eta),
                pumped_mode: Some(self.system.pumped_mode + 1),
            }),
            modes: Some(
                self.system
                    .modes
                    .iter()
                    .map(|m| ModeSection {
                        wavevector: Some(m.wavevector),
                        g: Some(m.g),
                        detuning: Some(m.detuning),
                        kappa: Some(m.kappa),
                    })
                    .collect(),
            ),
            cloud: Some(CloudSection {
                kind: Some(c.kind),
                radius: Some(c.radius),
                q: c.q,
                atoms: Some(c.atoms),
                seed: Some(c.seed),
                analytic: Some(c.analytic),
                k1: c.k1,
                k2: c.k2,
                extent: Some(c.extent),
                sites: Some(c.sites),
                path: c.path.clone(),
                regime: Some(c.regime),
            }),
            scan: Some(ScanSection {
                delta_min: Some(self.delta_grid.min),
                delta_max: Some(self.delta_grid.max),
                delta_points: Some(self.delta_grid.points),
                kr_min: Some(self.kr_grid.min),
                kr_max: Some(self.kr_grid.max),
                kr_points: Some(self.kr_grid.points),
            }),
            features: Some(FeaturesSection {
                peak_threshold: Some(self.thresholds.peak),
                dip_threshold: Some(self.thresholds.dip),
            }),
            eigen: Some(EigenSection {
                regime: Some(self.eigen_regime),
                delta: Some(self.eigen_delta),
            }),
        };
        toml::to_string(&file).expect("config serializes")
    }

    fn grating(&self) -> Result<Vec3> {
        self.cloud
            .q
            .ok_or_else(|| Error::invalid("cloud.q", "required with fewer than two modes"))
    }

    /// Structure-factor matrix of the configured cloud.
    pub fn structure(&self) -> Result<StructureFactorMatrix> {
        let c = &self.cloud;
        let modes = self.system.wavevectors();
        match c.kind {
            CloudKind::Gaussian if c.analytic => structure_factor_gaussian(&modes, c.radius),
            CloudKind::Gaussian => {
                structure_factor_discrete(&sample_gaussian_cloud(c.atoms, c.radius, c.seed)?, &modes)
            }
            CloudKind::Grated if c.analytic => structure_factor_grated(&modes, c.radius, self.grating()?),
            CloudKind::Grated => structure_factor_discrete(
                &sample_grated_cloud(c.atoms, c.radius, self.grating()?, c.seed)?,
                &modes,
            ),
            CloudKind::Checkerboard => {
                let (Some(k1), Some(k2)) = (c.k1, c.k2) else {
                    return Err(Error::invalid("cloud.k1", "lattice vectors required with fewer than two modes"));
                };
                structure_factor_discrete(&generate_checkerboard_sites(k1, k2, c.extent, c.sites)?, &modes)
            }
            CloudKind::PointCloud => {
                let path = c.path.as_deref().expect("validated");
                structure_factor_discrete(&AtomCloud::read_csv(path)?, &modes)
            }
            CloudKind::Limit => structure_factor_limit(c.regime, modes.len()),
        }
    }

    fn structure_source(&self, monte_carlo: bool) -> StructureSource {
        if monte_carlo || !self.cloud.analytic {
            StructureSource::MonteCarlo {
                atoms: self.cloud.atoms,
                seed: self.cloud.seed,
            }
        } else {
            StructureSource::Analytic
        }
    }

    fn with_thresholds(&mut self, peak: Option<f64>, dip: Option<f64>) -> Result<()> {
        if let Some(p) = peak {
            positive("peak_threshold", p)?;
            self.thresholds.peak = p;
        }
        if let Some(d) = dip {
            positive("dip_threshold", d)?;
            self.thresholds.dip = d;
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes through `body` to `path`, or to standard output.
fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
    }
}

fn csv_line(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt15).collect::<Vec<_>>().join(",")
}

/// Writes the matrix as `M` comma-separated rows.
pub fn write_structure_csv<W: Write + ?Sized>(s: &StructureFactorMatrix, out: &mut W) -> std::io::Result<()> {
    for row in s.rows() {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}

fn write_eigen<W: Write + ?Sized>(config: &RunConfig, regime: Regime, out: &mut W) -> Result<()> {
    let h = build_effective_matrix(regime, &config.system, config.eigen_delta)?;
    let eigenvalues = h.eigenvalues()?;
    let bright = bright_resonances_from_core(regime, &config.system)?;
    let dark = dark_resonances_from_core(regime, &config.system)?;
    let io = |e| Error::io(Path::new("<eigen>"), e);
    writeln!(out, "basis,{}", h.basis_labels.join(",")).map_err(io)?;
    for (label, row) in h.basis_labels.iter().zip(h.rows()) {
        writeln!(out, "{label},{}", csv_line(row)).map_err(io)?;
    }
    writeln!(out, "eigenvalues,{}", csv_line(eigenvalues)).map_err(io)?;
    writeln!(out, "bright,{}", csv_line(bright)).map_err(io)?;
    writeln!(out, "dark,{}", csv_line(dark)).map_err(io)?;
    Ok(())
}

/// Widths at which `reproduce-fig2` lists features.
pub const FIG2_FEATURE_WIDTHS: [f64; 2] = [0.01, 10.0];

/// Writes `<family>_mode<m>.csv` maps for the Gaussian and grated families
/// plus `features.csv` into `dir`. Returns the written paths.
pub fn reproduce_fig2(config: &RunConfig, dir: &Path, monte_carlo: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let params = &config.system;
    let source = config.structure_source(monte_carlo);
    let families = [
        ("gaussian", CloudDescriptor::Gaussian { radius: 1.0 }),
        (
            "grated",
            CloudDescriptor::Grated {
                radius: 1.0,
                q: config.grating()?,
            },
        ),
    ];
    let deltas = config.delta_grid.values();
    let krs = config.kr_grid.values();
    let mut written = Vec::new();
    let mut features: Vec<(&str, f64, SpectralFeature)> = Vec::new();
    for (name, family) in &families {
        let map = scan_2d(params, family, &krs, &deltas, source)?;
        for m in 0..params.mode_count() {
            let path = dir.join(format!("{name}_mode{}.csv", m + 1));
            emit(Some(&path), |w| write_map2d_csv(&map, &[m], w))?;
            written.push(path);
        }
        let edges = scan_2d(params, family, &FIG2_FEATURE_WIDTHS, &deltas, source)?;
        for (k, &kr) in edges.krs.iter().enumerate() {
            for m in 0..params.mode_count() {
                for f in features_of(&deltas, edges.column(k, m), m, config.thresholds)? {
                    features.push((name, kr, f));
                }
            }
        }
    }
    let path = dir.join("features.csv");
    emit(Some(&path), |w| {
        writeln!(w, "family,kR,kind,mode,delta,prominence")?;
        for (name, kr, f) in &features {
            writeln!(
                w,
                "{name},{},{},{},{},{}",
                fmt15(*kr),
                f.kind.label(),
                f.mode + 1,
                fmt15(f.delta),
                fmt15(f.prominence)
            )?;
        }
        Ok(())
    })?;
    written.push(path);
    Ok(written)
}

/// Where the resolved configuration of a run is recorded.
pub fn sidecar_path(command: &Command, output: Option<&Path>) -> PathBuf {
    match (command, output) {
        (Command::ReproduceFig2 { .. }, Some(dir)) => dir.join("config.toml"),
        (Command::ReproduceFig2 { .. }, None) => Path::new("fig2").join("config.toml"),
        (_, Some(file)) => {
            let mut name = file.as_os_str().to_owned();
            name.push(".config.toml");
            PathBuf::from(name)
        }
        (cmd, None) => PathBuf::from(format!("mmcavity-{}.config.toml", cmd.name())),
    }
}

/// Whether every requested computation succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ChecksFailed,
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.cloud.seed = seed;
    }
    let threads = match cli.threads {
        Some(0) => return Err(Error::invalid("threads", "must be at least 1")),
        Some(n) => n,
        None => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    pool.install(|| dispatch(cli, config))
}

fn dispatch(cli: &Cli, mut config: RunConfig) -> Result<Outcome> {
    let output = cli.output.as_deref();
    let mut outcome = Outcome::Success;
    match &cli.command {
        Command::StructureFactor => {
            let s = config.structure()?;
            emit(output, |w| write_structure_csv(&s, w))?;
        }
        Command::Spectrum {
            features,
            peak_threshold,
            dip_threshold,
        } => {
            config.with_thresholds(*peak_threshold, *dip_threshold)?;
            let s = config.structure()?;
            let scan = scan_spectrum(&config.system, &s, &config.delta_grid.values())?;
            emit(output, |w| write_spectrum_csv(&scan, w))?;
            if let Some(path) = features {
                let mut all = Vec::new();
                for m in 0..config.system.mode_count() {
                    all.extend(find_features(&scan, m, config.thresholds)?);
                }
                emit(Some(path), |w| write_features_csv(&all, w))?;
            }
        }
        Command::Map2d { monte_carlo } => {
            let family = match config.cloud.kind {
                CloudKind::Gaussian => CloudDescriptor::Gaussian {
                    radius: config.cloud.radius,
                },
                CloudKind::Grated => CloudDescriptor::Grated {
                    radius: config.cloud.radius,
                    q: config.grating()?,
                },
                _ => return Err(Error::invalid("cloud.kind", "map2d needs a gaussian or grated cloud")),
            };
            let map = scan_2d(
                &config.system,
                &family,
                &config.kr_grid.values(),
                &config.delta_grid.values(),
                config.structure_source(*monte_carlo),
            )?;
            let modes: Vec<usize> = (0..config.system.mode_count()).collect();
            emit(output, |w| write_map2d_csv(&map, &modes, w))?;
        }
        Command::Eigen { regime } => {
            if let Some(r) = regime {
                config.eigen_regime = *r;
            }
            let mut text = Vec::new();
            write_eigen(&config, config.eigen_regime, &mut text)?;
            emit(output, |w| w.write_all(&text))?;
        }
        Command::OracleCheck => {
            let checks = run_validation_suite(config.cloud.seed)?;
            emit(output, |w| {
                writeln!(w, "check,max_deviation,tolerance,status")?;
                for c in &checks {
                    let status = if c.passed() { "pass" } else { "FAIL" };
                    writeln!(w, "{},{:.3e},{:.3e},{status}", c.name, c.deviation, c.tolerance)?;
                }
                Ok(())
            })?;
            if !checks.iter().all(|c| c.passed()) {
                outcome = Outcome::ChecksFailed;
            }
        }
        Command::ReproduceFig2 {
            monte_carlo,
            peak_threshold,
            dip_threshold,
        } => {
            config.with_thresholds(*peak_threshold, *dip_threshold)?;
            let dir = output.unwrap_or(Path::new("fig2"));
            reproduce_fig2(&config, dir, *monte_carlo)?;
        }
    }
    write_sidecar(&config, &cli.command, output)?;
    Ok(outcome)
}

fn write_sidecar(config: &RunConfig, command: &Command, output: Option<&Path>) -> Result<()> {
    let path = sidecar_path(command, output);
    let text = format!("# mmcavity {}\n{}", command.name(), config.to_toml());
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
