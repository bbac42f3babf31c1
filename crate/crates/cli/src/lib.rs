//! Command-line driver: scenario files, operator application, identity suites and curvature dumps.

pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use conformal_forms::curvature::ricci_fd;
use conformal_forms::error::Error as CoreError;
use conformal_forms::exterior::quadrature_inner;
use conformal_forms::fields::{FormField, ScalarField};
use conformal_forms::io::{save, write_field, Field};
use conformal_forms::solver::apply_named;
use conformal_forms::verification::{run_suite, MetricSpec, Setting, SuiteReport, SUITES};
use sha2::{Digest, Sha256};

pub use config::{InputSpec, ScenarioConfig};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_GUARD: i32 = 2;
pub const EXIT_IDENTITY: i32 = 3;

/// Default bound for `curvature --fd-check`.
pub const FD_TOLERANCE: f64 = 1e-6;
const FD_STEP: f64 = 1e-2;
const FD_POINTS: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "cforms", version, about = "Conformally covariant operators on forms from formal harmonic extensions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply one operator to an input form and write the result as FBIN1.
    Compute {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of a random input.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an identity suite and write a JSON report.
    Verify {
        /// One of quick, full, dim4, dim6, covariance.
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replaces every identity tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump the curvature tensors of the configured metric as FBIN1 files.
    Curvature {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare Ricci against a finite-difference oracle at a few grid points.
        #[arg(long)]
        fd_check: bool,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn guard(message: impl Into<String>) -> Self {
        Failure { code: EXIT_GUARD, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Grid(_)
            | CoreError::Axis { .. }
            | CoreError::Degree(_)
            | CoreError::Dimension(_)
            | CoreError::Params(_)
            | CoreError::NotClosed(_)
            | CoreError::Io(_)
            | CoreError::Format(_) => EXIT_CONFIG,
            CoreError::NonFinite(_)
            | CoreError::SingularMetric(_)
            | CoreError::Imaginary { .. }
            | CoreError::Truncation(_)
            | CoreError::LogCap(_)
            | CoreError::IndicialRoot { .. }
            | CoreError::Guard(_) => EXIT_GUARD,
        };
        Failure { code, message: e.to_string() }
    }
}

pub type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Compute { config, seed, out } => {
            let cfg = ScenarioConfig::read(&config).map_err(Failure::config)?;
            cmd_compute(&cfg, seed, out.as_deref()).map(|line| println!("{line}"))
        }
        Command::Verify { suite, seed, out, tolerance, config } => {
            let tol = match config {
                Some(p) => tolerance.or(ScenarioConfig::read(&p).map_err(Failure::config)?.tolerance.identity),
                None => tolerance,
            };
            let report = cmd_verify(&suite, seed, tol, out.as_deref())?;
            for s in &report.scenarios {
                for i in &s.identities {
                    let mark = if i.pass { "ok  " } else { "FAIL" };
                    println!("{mark} {} | {}: {:.2e} (tol {:.0e})", s.scenario, i.name, i.residual, i.tolerance);
                }
            }
            println!("suite {}: {} passed, {} failed", report.suite, report.summary.passed, report.summary.failed);
            if report.passed() {
                Ok(())
            } else {
                Err(Failure { code: EXIT_IDENTITY, message: format!("{} scenario(s) failed", report.summary.failed) })
            }
        }
        Command::Curvature { config, out, fd_check, tolerance } => {
            let cfg = ScenarioConfig::read(&config).map_err(Failure::config)?;
            let tol = tolerance.or(cfg.tolerance.fd).unwrap_or(FD_TOLERANCE);
            cmd_curvature(&cfg, out.as_deref(), fd_check.then_some(tol)).map(|lines| lines.iter().for_each(|l| println!("{l}")))
        }
    }
}

/// SHA-256 of the FBIN1 encoding of a form.
pub fn form_hash(w: &FormField) -> String {
    let mut bytes = Vec::new();
    write_field(&mut bytes, &Field::Form(w.clone())).expect("writing to memory");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn setting(cfg: &ScenarioConfig) -> Result<Setting, Failure> {
    if cfg.sizes.iter().any(|&s| s != cfg.sizes[0]) {
        return Err(Failure::config("only cubic grids are supported"));
    }
    Ok(Setting::new(cfg.n, cfg.sizes[0], &cfg.metric)?)
}

fn output_path(cfg: &ScenarioConfig, out: Option<&Path>, default: &str) -> PathBuf {
    if let Some(p) = &cfg.output.path {
        return match out {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.clone(),
        };
    }
    out.map(Path::to_path_buf).or(cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from(".")).join(default)
}

/// Applies the configured operator and writes its output; returns the summary line.
pub fn cmd_compute(cfg: &ScenarioConfig, seed: Option<u64>, out: Option<&Path>) -> Result<String, Failure> {
    cfg.validate_operator().map_err(Failure::config)?;
    let grid = cfg.grid().map_err(Failure::config)?;
    let w0 = cfg.input_form(&grid, seed).map_err(Failure::config)?;
    let s = setting(cfg)?;
    let w = apply_named(&cfg.operator, &w0, cfg.ell, &s.star)?;
    if w.data.iter().any(|v| !v.is_finite()) {
        return Err(Failure::guard(format!("{} produced non-finite values", cfg.operator)));
    }
    let norm = quadrature_inner(&w, &w, s.metric())?.sqrt();
    let path = output_path(cfg, out, &format!("{}_k{}.fbin", cfg.operator, cfg.k));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
    }
    save(&path, &Field::Form(w))?;
    let ell = cfg.ell.filter(|_| cfg.operator == "Lk_ell").map(|l| format!(" ell={l}")).unwrap_or_default();
    Ok(format!(
        "{} k={}{ell} n={} grid={:?} input_sha256={} output_l2={:.12e} -> {}",
        cfg.operator,
        cfg.k,
        cfg.n,
        cfg.sizes,
        form_hash(&w0),
        norm,
        path.display()
    ))
}

/// Runs a suite, re-judges it under `tolerance` if given, and writes `<suite>.json` into `out`.
pub fn cmd_verify(suite: &str, seed: Option<u64>, tolerance: Option<f64>, out: Option<&Path>) -> Result<SuiteReport, Failure> {
    if !SUITES.contains(&suite) {
        return Err(Failure::config(format!("unknown suite {suite}; expected one of {SUITES:?}")));
    }
    if let Some(t) = tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::config(format!("tolerance must be positive, got {t}")));
        }
    }
    let mut report = run_suite(suite, seed.unwrap_or(0))?;
    if let Some(t) = tolerance {
        for s in &mut report.scenarios {
            for i in &mut s.identities {
                i.tolerance = t;
                i.pass = i.residual.is_finite() && i.residual <= t;
            }
        }
        report = SuiteReport::new(suite, report.scenarios);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{suite}.json"));
        let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::config(e.to_string()))?;
        std::fs::write(&path, json).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    }
    Ok(report)
}

/// Largest relative discrepancy between the spectral Ricci tensor and the finite-difference oracle.
pub fn fd_discrepancy(s: &Setting) -> f64 {
    let n = s.n();
    let phi = match &s.spec {
        MetricSpec::Flat => None,
        MetricSpec::Conformal { phi } => Some(phi.clone()),
    };
    let h = move |y: &[f64]| -> Vec<f64> {
        let e = phi.as_ref().map_or(1.0, |p| (2.0 * p.eval_at(y)).exp());
        (0..n * n).map(|i| if i / n == i % n { e } else { 0.0 }).collect()
    };
    let len = s.grid.len();
    let scale = s.curv.ricci.max_abs().max(1e-300);
    let mut worst: f64 = 0.0;
    for q in 0..FD_POINTS {
        let p = (q * 7919 + q * q * 104729) % len;
        let y = s.grid.point(p);
        let fd = ricci_fd(&h, &y, FD_STEP);
        for a in 0..n {
            for b in 0..n {
                let diff = (s.curv.ricci.comp(&[a, b])[p] - fd[a * n + b]).abs();
                worst = worst.max(if s.curv.ricci.max_abs() == 0.0 { diff } else { diff / scale });
            }
        }
    }
    worst
}

/// Dumps φ, the metric and every curvature tensor; returns the printed summary lines.
pub fn cmd_curvature(cfg: &ScenarioConfig, out: Option<&Path>, fd_tolerance: Option<f64>) -> Result<Vec<String>, Failure> {
    let s = setting(cfg)?;
    let dir = out.map(Path::to_path_buf).or(cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
    let c = &s.curv;
    let phi = s.phi.clone().unwrap_or_else(|| ScalarField::zeros(&s.grid));
    let fields: Vec<(&str, Field)> = vec![
        ("phi", Field::Scalar(phi)),
        ("metric", Field::Tensor(c.metric.h.clone())),
        ("christoffel", Field::Tensor(c.christoffel.clone())),
        ("ricci", Field::Tensor(c.ricci.clone())),
        ("scal", Field::Scalar(c.scal.clone())),
        ("schouten", Field::Tensor(c.schouten.clone())),
        ("cotton", Field::Tensor(c.cotton.clone())),
        ("bach", Field::Tensor(c.bach.clone())),
    ];
    let mut lines = Vec::new();
    for (name, f) in &fields {
        let path = dir.join(format!("{name}.fbin"));
        save(&path, f)?;
        lines.push(format!("wrote {}", path.display()));
    }
    let (lo, hi) = c.scal.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    lines.push(format!("Scal range [{lo:.12e}, {hi:.12e}]  |Bach|_max {:.6e}", c.bach.max_abs()));
    if let Some(tol) = fd_tolerance {
        let r = fd_discrepancy(&s);
        lines.push(format!("fd-check Ricci relative discrepancy {r:.3e} (tol {tol:.0e})"));
        if !(r <= tol) {
            lines.iter().for_each(|l| println!("{l}"));
            return Err(Failure::guard(format!("finite-difference Ricci check failed: {r:e} > {tol:e}")));
        }
    }
    Ok(lines)
}
