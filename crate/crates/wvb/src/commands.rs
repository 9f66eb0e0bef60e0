use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use wvb_core::analysis::{
    analyze_campaign, verify_commutator, AnalysisError, AnalysisParams, CommutatorRow, CommutatorSummary,
    VisibilityEstimate,
};
use wvb_core::campaign::ExperimentConfig;
use wvb_core::selftest::{run_selftest, SelftestOptions};
use wvb_core::Complex64;

use crate::io::{self, Layout};
use crate::manifest::RunManifest;
use crate::sampling::generate_dataset;
use crate::CliError;

pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    /// Defaults are used when absent.
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub noiseless: bool,
    pub layout: Layout,
}

#[derive(Debug, Clone)]
pub struct AnalyzeArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    /// Falls back to `config.json` in the data directory.
    pub config: Option<PathBuf>,
    /// Rotation angle assumed by the analysis, overriding the config.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    pub rms_bound: Option<f64>,
    pub theory_overlay: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestArgs {
    pub perturb_prefactor: bool,
    pub seed: Option<u64>,
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn refuse_in_place(input: &Path, out: &Path) -> Result<(), CliError> {
    if same_dir(input, out) {
        return Err(CliError::Config(format!(
            "--out {} is the input directory; outputs go elsewhere",
            out.display()
        )));
    }
    Ok(())
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::MissingChannels(_)
        | AnalysisError::InsufficientData { .. }
        | AnalysisError::MissingReference { .. }
        | AnalysisError::ChannelMismatch(_) => CliError::MissingData(e.to_string()),
        AnalysisError::BinMismatch(_) => CliError::Io(e.to_string()),
        AnalysisError::DegenerateFit(_) | AnalysisError::VisibilityZero { .. } | AnalysisError::InvalidVisibility(_) => {
            CliError::Acceptance(e.to_string())
        }
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    io::write_atomic(&path, bytes)?;
    written.push(path);
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let mut config = match &args.config {
        Some(p) => io::load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.noiseless |= args.noiseless;
    let data = generate_dataset(&config).map_err(|e| CliError::Config(format!("field `{}`: {}", e.field, e.message)))?;

    io::ensure_dir(&args.out)?;
    let mut written = io::write_campaign(&args.out, &data, args.layout)?;
    write_file(&args.out, CONFIG_FILE, &io::to_json(&config), &mut written)?;

    let mut manifest = RunManifest::new("simulate", &config);
    manifest.inputs = args.config.iter().map(|p| p.display().to_string()).collect();
    manifest.record(&args.out, &written)?;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&args.out)?;
    println!(
        "simulated {} histograms over {} χ settings into {}",
        data.len(),
        config.chi_grid.len(),
        args.out.display()
    );
    Ok(manifest)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    refuse_in_place(&args.data, &args.out)?;
    let config_path = match &args.config {
        Some(p) => p.clone(),
        None => {
            let p = args.data.join(CONFIG_FILE);
            if !p.is_file() {
                return Err(CliError::MissingData(format!(
                    "{}: missing; pass --config",
                    p.display()
                )));
            }
            p
        }
    };
    let mut config = io::load_config(&config_path)?;
    if let Some(alpha) = args.alpha {
        config.analysis.alpha = Some(alpha);
        config
            .validate()
            .map_err(|e| CliError::Config(format!("--alpha: field `{}`: {}", e.field, e.message)))?;
    }
    let data = io::read_campaign(&args.data)?;
    let params = AnalysisParams::from_config(&config);
    let analysis = analyze_campaign(&data, &params).map_err(analysis_error)?;

    io::ensure_dir(&args.out)?;
    let mut written = Vec::new();
    let out = &args.out;
    write_file(out, "fits.csv", &io::fits_csv(&analysis), &mut written)?;
    write_file(out, "weak_values.csv", &io::weak_values_csv(&analysis.weak_values), &mut written)?;
    write_file(out, "corrected.csv", &io::corrected_csv(&analysis), &mut written)?;
    write_file(
        out,
        "postselection.csv",
        &io::postselection_csv(&analysis.postselection_x, &analysis.postselection_y),
        &mut written,
    )?;
    write_file(out, "visibility.json", &io::to_json(&analysis.visibility), &mut written)?;
    write_file(out, CONFIG_FILE, &io::to_json(&config), &mut written)?;

    let mut manifest = RunManifest::new("analyze", &config);
    manifest.inputs = vec![args.data.display().to_string(), config_path.display().to_string()];
    manifest.record(out, &written)?;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(out)?;

    let VisibilityEstimate { eta, sigma_eta, .. } = analysis.visibility;
    let excluded = analysis.weak_values.iter().filter(|w| w.excluded).count();
    println!(
        "visibility η = {eta:.4} ± {sigma_eta:.4}; {} weak values ({excluded} excluded) in {}",
        analysis.weak_values.len(),
        out.display()
    );
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub rms_bound: f64,
    pub passed: bool,
    pub summary: CommutatorSummary,
    pub rows: Vec<CommutatorRow>,
}

fn theory_csv() -> Vec<u8> {
    // midpoints keep χ = π, where the weak value diverges, off the grid
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["chi_rad", "sin_chi", "re_w", "im_w"]).expect("in-memory csv");
    for k in 0..360 {
        let chi = std::f64::consts::TAU * (k as f64 + 0.5) / 360.0;
        let wv = Complex64::new(1.0, 0.0) / (Complex64::cis(chi) + 1.0);
        w.write_record([chi, chi.sin(), wv.re, wv.im].map(io::fmt_f64))
            .expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn verify(args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    refuse_in_place(&args.data, &args.out)?;
    let weak_values = io::read_weak_values(&args.data.join("weak_values.csv"))?;
    let (px, py) = io::read_postselection(&args.data.join("postselection.csv"))?;
    let config_path = args.data.join(CONFIG_FILE);
    let bound = match args.rms_bound {
        Some(b) => b,
        None if config_path.is_file() => io::load_config(&config_path)?.analysis.rms_bound,
        None => wvb_core::analysis::AnalysisConfig::default().rms_bound,
    };
    if !(bound.is_finite() && bound > 0.0) {
        return Err(CliError::Config(format!("--rms-bound {bound}: must be positive")));
    }
    let report = verify_commutator(&weak_values, &px, &py).map_err(analysis_error)?;
    let passed = report.passes(bound);
    let out = VerifyReport {
        rms_bound: bound,
        passed,
        summary: report.summary,
        rows: report.rows,
    };

    io::ensure_dir(&args.out)?;
    io::write_json(&args.out.join("report.json"), &out)?;
    io::write_atomic(&args.out.join("commutator.csv"), &io::commutator_csv(&out.rows))?;
    if args.theory_overlay {
        io::write_atomic(&args.out.join("theory.csv"), &theory_csv())?;
    }

    let s = &out.summary;
    println!(
        "rms(lhs - rhs) = {:.3e} over {} points ({} excluded), bound {bound:.3e}: {}",
        s.rms_residual,
        s.n_points,
        s.n_excluded,
        if passed { "PASS" } else { "FAIL" }
    );
    if passed {
        Ok(out)
    } else {
        Err(CliError::Acceptance(format!(
            "rms residual {:.3e} not below {bound:.3e}",
            s.rms_residual
        )))
    }
}

pub fn selftest(args: &SelftestArgs) -> Result<(), CliError> {
    let mut opts = SelftestOptions::default();
    if args.perturb_prefactor {
        opts.prefactor_scale = 1.0 + 1e-6;
    }
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    let report = run_selftest(&opts);
    for c in &report.checks {
        println!(
            "{:<5} {:<36} cases {:>5}  max error {:.3e} (tol {:.0e})",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.cases,
            c.max_error,
            c.tolerance
        );
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::Acceptance(format!("selftest failed: {}", failed.join(", "))))
    }
}
