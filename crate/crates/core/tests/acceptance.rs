//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mmcavity::effective::bright_resonances_from_core;
use mmcavity::geometry::{bragg_vector, crossed_pair};
use mmcavity::modes::{solve_steady_state, SystemParams};
use mmcavity::oracle::suite::{
    elimination_equivalence, lindblad_cutoff_change, lindblad_deviation, monte_carlo_structure,
};
use mmcavity::spectra::{
    collective_frequencies, find_features, scan_spectrum, FeatureKind, FeatureThresholds, GridSpec, SpectralFeature,
    SpectrumScan,
};
use mmcavity::structure::{
    bragg_asymptote, bragg_detuning_curve, structure_factor_gaussian, structure_factor_grated,
    structure_factor_limit, Regime, StructureFactorMatrix,
};

const SEED: u64 = 20240611;

type Check = fn() -> Verdict;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }

    fn and_runtime(self, elapsed: Duration, limit: f64) -> Self {
        let secs = elapsed.as_secs_f64();
        Verdict {
            passed: self.passed && secs < limit,
            detail: format!("{}; runtime {secs:.2} s (limit {limit} s)", self.detail),
        }
    }
}

fn failure(e: impl std::fmt::Display) -> Verdict {
    Verdict::new(false, format!("error: {e}"))
}

fn locations(features: &[SpectralFeature], kind: FeatureKind) -> Vec<f64> {
    features.iter().filter(|f| f.kind == kind).map(|f| f.delta).collect()
}

/// Worst distance from each expected value to its nearest detection, or
/// infinity when the counts differ.
fn match_error(found: &[f64], expected: &[f64]) -> f64 {
    if found.len() != expected.len() {
        return f64::INFINITY;
    }
    expected
        .iter()
        .map(|e| found.iter().map(|f| (f - e).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn pumped_features(s: &StructureFactorMatrix) -> mmcavity::Result<(SpectrumScan, Vec<f64>, Vec<f64>)> {
    let params = SystemParams::crossed_reference();
    let scan = scan_spectrum(&params, s, &GridSpec::DEFAULT_DELTA.values())?;
    let features = find_features(&scan, 0, FeatureThresholds::default())?;
    let bright = locations(&features, FeatureKind::BrightPeak);
    let dark = locations(&features, FeatureKind::Antiresonance);
    Ok((scan, bright, dark))
}

fn fmt_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:.3}")).collect();
    format!("[{}]", items.join(", "))
}

fn spectrum_check(
    s: mmcavity::Result<StructureFactorMatrix>,
    bright: &[f64],
    bright_tol: f64,
    dark: &[f64],
    dark_tol: f64,
) -> mmcavity::Result<(Verdict, SpectrumScan)> {
    let (scan, found_bright, found_dark) = pumped_features(&s?)?;
    let (eb, ed) = (match_error(&found_bright, bright), match_error(&found_dark, dark));
    let verdict = Verdict::new(
        eb <= bright_tol && ed <= dark_tol,
        format!(
            "bright {} (err {eb:.3}), dark {} (err {ed:.3})",
            fmt_list(&found_bright),
            fmt_list(&found_dark)
        ),
    );
    Ok((verdict, scan))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let root = (1e4f64 * (0.64 + 0.64)).sqrt();
    let s = structure_factor_gaussian(&crossed_pair(), 0.01);
    match spectrum_check(s, &[-root, 0.0, root], 1.0, &[-80.0, 80.0], 1.0) {
        Ok((v, _)) => v.and_runtime(start.elapsed(), 5.0),
        Err(e) => failure(e),
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let side = 0.8 * 5000f64.sqrt();
    let s = structure_factor_gaussian(&crossed_pair(), 10.0);
    match spectrum_check(s, &[-side, side], 1.0, &[0.0], 0.5) {
        Ok((v, scan)) => {
            let max = |m: usize| scan.intensities[m].iter().copied().fold(0.0, f64::max);
            let ratio = max(1) / max(0);
            Verdict::new(v.passed && ratio <= 1e-12, format!("{}, |a2|²/|a1|² = {ratio:.3e}", v.detail))
                .and_runtime(start.elapsed(), 5.0)
        }
        Err(e) => failure(e),
    }
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let (gp, gm) = collective_frequencies(0.8, 0.8, 10_000);
    let side = 0.8 * 5000f64.sqrt();
    let [k1, k2] = crossed_pair();
    let s = structure_factor_grated(&[k1, k2], 10.0, bragg_vector(k1, k2));
    match spectrum_check(s, &[-gp, -gm, gm, gp], 1.0, &[-side, 0.0, side], 1.0) {
        Ok((v, _)) => v.and_runtime(start.elapsed(), 5.0),
        Err(e) => failure(e),
    }
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let atoms = 100_000;
    let tol = 5.0 / (atoms as f64).sqrt();
    match monte_carlo_structure(atoms, &[0.5, 1.0, 5.0], SEED) {
        Ok(dev) => Verdict::new(dev <= tol, format!("max |discrete - analytic| = {dev:.3e} (tol {tol:.4})"))
            .and_runtime(start.elapsed(), 10.0),
        Err(e) => failure(e),
    }
}

fn criterion_5() -> Verdict {
    let mut worst = 0.0f64;
    for eps in [0.0, 0.02, 0.05] {
        match bragg_detuning_curve(crossed_pair(), 10.0, eps) {
            Ok(value) => {
                let target = bragg_asymptote(10.0, eps);
                worst = worst.max((value - target).abs() / target);
            }
            Err(e) => return failure(e),
        }
    }
    Verdict::new(worst <= 0.05, format!("worst relative deviation {worst:.3e} (tol 5e-2)"))
}

fn criterion_6() -> Verdict {
    match elimination_equivalence(20, SEED) {
        Ok((amp, _)) => Verdict::new(amp <= 1e-10, format!("max relative amplitude deviation {amp:.3e} (tol 1e-10)")),
        Err(e) => failure(e),
    }
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let agreement = lindblad_deviation(1e-3, 2, 1e-6);
    let cutoff = lindblad_cutoff_change(1e-3, 1, 2, 1e-6);
    match (agreement, cutoff) {
        (Ok(dev), Ok(change)) => Verdict::new(
            dev <= 1e-3 && change <= 1e-4,
            format!("master vs linear {dev:.3e} (tol 1e-3), cutoff 1->2 change {change:.3e} (tol 1e-4)"),
        )
        .and_runtime(start.elapsed(), 60.0),
        (Err(e), _) | (_, Err(e)) => failure(e),
    }
}

fn criterion_8() -> Verdict {
    let n = 10_000usize;
    let nf = n as f64;
    let (mut identity, mut eigen) = (0.0f64, 0.0f64);
    for i in 1..=20 {
        for j in 1..=20 {
            let (g1, g2) = (0.1 * i as f64, 0.1 * j as f64);
            let (gp, gm) = collective_frequencies(g1, g2, n);
            let sum = nf * (g1 * g1 + g2 * g2) / 2.0;
            let product = 3f64.sqrt() / 4.0 * nf * g1 * g2;
            identity = identity
                .max((gp * gp + gm * gm - sum).abs() / sum)
                .max((gp * gm - product).abs() / product);
            let mut params = SystemParams::crossed_reference();
            params.modes[0].g = g1;
            params.modes[1].g = g2;
            match bright_resonances_from_core(Regime::WideGratedBragg, &params) {
                Ok(core) => {
                    for (c, e) in core.iter().zip([-gp, -gm, gm, gp]) {
                        eigen = eigen.max((c - e).abs());
                    }
                }
                Err(e) => return failure(e),
            }
        }
    }
    Verdict::new(
        identity <= 1e-12 && eigen <= 1e-9,
        format!("identities {identity:.3e} (tol 1e-12 rel), core eigenvalues {eigen:.3e} (tol 1e-9)"),
    )
}

fn criterion_9() -> Verdict {
    let params = SystemParams::crossed_reference();
    let grid = GridSpec::DEFAULT_DELTA.values();
    let mut worst = 0.0f64;
    for regime in [Regime::Subwavelength, Regime::WideGaussian, Regime::WideGratedBragg] {
        let s = match structure_factor_limit(regime, 2) {
            Ok(s) => s,
            Err(e) => return failure(e),
        };
        for &delta in &grid {
            let (up, down) = match (solve_steady_state(&params, delta, &s), solve_steady_state(&params, -delta, &s)) {
                (Ok(u), Ok(d)) => (u, d),
                (Err(e), _) | (_, Err(e)) => return failure(e),
            };
            for (a, b) in up.amplitudes.iter().zip(&down.amplitudes) {
                let scale = a.norm().max(b.norm());
                if scale > 0.0 {
                    worst = worst.max((a.norm() - b.norm()).abs() / scale);
                }
            }
        }
    }
    Verdict::new(worst <= 1e-10, format!("max relative |a(-Δ)| vs |a(Δ)| {worst:.3e} (tol 1e-10)"))
}

fn fig2_run(dir: &Path, threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mmcavity"))
        .args(["reproduce-fig2", "--monte-carlo", "--seed", "7", "--threads", threads, "--output"])
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn criterion_10() -> Verdict {
    let root = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return failure(e),
    };
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    if let Err(e) = fig2_run(&a, "1").and_then(|_| fig2_run(&b, "4")) {
        return failure(e);
    }
    let mut names: Vec<_> = match std::fs::read_dir(&a) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .map(|e| e.file_name())
            .filter(|n| n.to_string_lossy().ends_with(".csv"))
            .collect(),
        Err(e) => return failure(e),
    };
    names.sort();
    let mut differing = Vec::new();
    for name in &names {
        if std::fs::read(a.join(name)).ok() != std::fs::read(b.join(name)).ok() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    Verdict::new(
        names.len() == 5 && differing.is_empty(),
        format!("{} CSV files compared, {} differ {:?}", names.len(), differing.len(), differing),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("subwavelength spectrum", criterion_1),
        ("wide-Gaussian spectrum", criterion_2),
        ("wide-grated spectrum", criterion_3),
        ("structure-factor Monte Carlo", criterion_4),
        ("Bragg robustness", criterion_5),
        ("elimination equivalence", criterion_6),
        ("master-equation agreement", criterion_7),
        ("collective-frequency identities", criterion_8),
        ("mirror symmetry", criterion_9),
        ("reproduce-fig2 determinism", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failures += 1;
        }
        println!("{} {:>2} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
