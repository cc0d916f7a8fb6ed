//! Command-line options, config files and their merge.
//!
//! Precedence is flag > config file > built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use matern_contact::analytic::{Case, ProcessParams, DEFAULT_ABS_TOL, DEFAULT_GRID_POINTS};
use matern_contact::estimate::{ExperimentConfig, GridSpec};
use matern_contact::simulate::Window;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_CASE: Case = Case::MhcToMhc;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_WINDOW: f64 = 100.0;
pub const DEFAULT_REPS: usize = 20;
pub const DEFAULT_SEED: u64 = 20_160_101;

/// Sup-distance threshold used by `compare` when none is given.
pub fn default_threshold(case: Case) -> f64 {
    match case {
        Case::PppToPpp => 0.01,
        Case::MhcToMhc | Case::PppToMhc => 0.02,
        Case::CmhcToMhc => 0.04,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Comma-separated curve (analytic, simulate, density)
    Csv,
    /// Every pooled sample as a CSV row (simulate)
    Samples,
    Json,
    Toml,
}

fn parse_case(s: &str) -> Result<Case, String> {
    s.parse::<Case>().map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<Window, String> {
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w, h),
        None => (s, s),
    };
    let w: f64 = w.trim().parse().map_err(|e| format!("bad window width '{w}': {e}"))?;
    let h: f64 = h.trim().parse().map_err(|e| format!("bad window height '{h}': {e}"))?;
    Window::new(w, h).map_err(|e| e.to_string())
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// TOML or JSON config file; a `compare` report also works (its embedded config is used)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// mhc-mhc | ppp-mhc | cmhc-mhc | ppp-ppp [default: mhc-mhc]
    #[arg(long, value_parser = parse_case)]
    pub case: Option<Case>,

    /// Parent intensity λ_p [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Hard-core distance(s), comma separated for a sweep [default: 1]
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub delta: Option<Vec<f64>>,

    /// Torus window, `WxH` or a single side [default: 100x100]
    #[arg(long, value_parser = parse_window)]
    pub window: Option<Window>,

    /// Monte-Carlo replications [default: 20]
    #[arg(long)]
    pub reps: Option<usize>,

    /// Base RNG seed [default: 20160101]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Smallest grid radius [default: lower support of the CDF]
    #[arg(long)]
    pub rmin: Option<f64>,

    /// Largest grid radius [default: rmin + 4/sqrt(target intensity)]
    #[arg(long)]
    pub rmax: Option<f64>,

    /// Number of grid radii [default: 200]
    #[arg(long)]
    pub points: Option<usize>,

    /// Absolute quadrature tolerance [default: 1e-9]
    #[arg(long)]
    pub tol: Option<f64>,

    /// Output file; with several deltas `{delta}` is substituted or a suffix added [default: stdout]
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Output format [default: csv, json for compare]
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Maximum sup distance before `compare` exits with 1
    /// [default: 0.02 mhc-mhc/ppp-mhc, 0.04 cmhc-mhc, 0.01 ppp-ppp]
    #[arg(long)]
    pub threshold: Option<f64>,

    /// Directory to write every simulated pattern to
    #[arg(long, value_name = "DIR")]
    pub dump_patterns: Option<PathBuf>,
}

/// Config file contents; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub case: Option<Case>,
    pub lambda: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub window: Option<Window>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
    pub points: Option<usize>,
    pub tol: Option<f64>,
    pub threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub dump_patterns: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
            || text.trim_start().starts_with('{');
        let bad = |e: String| CliError::Usage(format!("invalid config {}: {e}", path.display()));
        if is_json {
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let value = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(value).map_err(|e| bad(e.to_string()))
        } else {
            let value: toml::Value = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let value = value.get("config").cloned().unwrap_or(value);
            value.try_into().map_err(|e: toml::de::Error| bad(e.to_string()))
        }
    }
}

/// Fully resolved experiment parameters, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: Case,
    pub lambda: f64,
    pub deltas: Vec<f64>,
    pub window: Window,
    pub reps: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmax: Option<f64>,
    pub points: usize,
    pub tol: f64,
    pub threshold: f64,
}

/// Where and how results are written; not part of the reproducible config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputOptions {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub dump_patterns: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(opts: &Options) -> Result<(Self, OutputOptions), CliError> {
        let file = match &opts.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let case = opts.case.or(file.case).unwrap_or(DEFAULT_CASE);
        let cfg = RunConfig {
            case,
            lambda: opts.lambda.or(file.lambda).unwrap_or(DEFAULT_LAMBDA),
            deltas: opts.delta.clone().or(file.deltas).unwrap_or_else(|| vec![DEFAULT_DELTA]),
            window: opts.window.or(file.window).unwrap_or(Window {
                width: DEFAULT_WINDOW,
                height: DEFAULT_WINDOW,
            }),
            reps: opts.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
            seed: opts.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            rmin: opts.rmin.or(file.rmin),
            rmax: opts.rmax.or(file.rmax),
            points: opts.points.or(file.points).unwrap_or(DEFAULT_GRID_POINTS),
            tol: opts.tol.or(file.tol).unwrap_or(DEFAULT_ABS_TOL),
            threshold: opts.threshold.or(file.threshold).unwrap_or_else(|| default_threshold(case)),
        };
        cfg.validate()?;
        let output = OutputOptions {
            out: opts.out.clone().or(file.out),
            format: opts.format.or(file.format),
            dump_patterns: opts.dump_patterns.clone().or(file.dump_patterns),
        };
        Ok((cfg, output))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return usage(format!("--lambda must be > 0, got {}", self.lambda));
        }
        if self.deltas.is_empty() {
            return usage("--delta list is empty".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return usage(format!("--delta values must be >= 0, got {d}"));
        }
        if Window::new(self.window.width, self.window.height).is_err() {
            return usage("--window sides must be > 0".into());
        }
        if self.reps == 0 {
            return usage("--reps must be >= 1".into());
        }
        if self.points == 0 {
            return usage("--points must be >= 1".into());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return usage(format!("--tol must be > 0, got {}", self.tol));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return usage(format!("--threshold must be >= 0, got {}", self.threshold));
        }
        for r in [self.rmin, self.rmax].into_iter().flatten() {
            if !(r.is_finite() && r >= 0.0) {
                return usage(format!("grid radii must be >= 0, got {r}"));
            }
        }
        if let (Some(lo), Some(hi)) = (self.rmin, self.rmax) {
            if hi < lo {
                return usage(format!("--rmax {hi} is below --rmin {lo}"));
            }
        }
        Ok(())
    }

    pub fn params(&self, delta: f64) -> Result<ProcessParams, CliError> {
        ProcessParams::new(self.lambda, delta).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn experiment(&self, delta: f64) -> Result<ExperimentConfig, CliError> {
        let mut exp = ExperimentConfig::new(self.case, self.params(delta)?, self.window, self.reps, self.seed);
        exp.grid = GridSpec { min: self.rmin, max: self.rmax, count: self.points };
        exp.abs_tol = self.tol;
        Ok(exp)
    }
}
