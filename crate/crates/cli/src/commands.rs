use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use matern_contact::analytic::{contact_cdf, CdfCurve, EtaFunction};
use matern_contact::estimate::{
    estimate_mhc_density, run_experiment, simulate_distances, ComparisonReport, DensityEstimate,
    EmpiricalSummary, Replication,
};
use matern_contact::simulate::{write_pattern, PatternHeader};
use serde::{Deserialize, Serialize};

use crate::config::{Format, Options, OutputOptions, RunConfig};
use crate::CliError;

/// One file per delta, or stdout when no `--out` is given.
struct Sink<'a> {
    out: Option<&'a Path>,
    multiple: bool,
}

impl<'a> Sink<'a> {
    fn new(output: &'a OutputOptions, deltas: usize) -> Self {
        Self { out: output.out.as_deref(), multiple: deltas > 1 }
    }

    fn write(&self, delta: f64, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
        match self.out {
            Some(base) => {
                let path = per_delta_path(base, delta, self.multiple);
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("creating {}", parent.display()))?;
                }
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(file);
                write(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                if self.multiple {
                    writeln!(w, "# delta={delta}")?;
                }
                write(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// `out` itself for a single delta; otherwise `{delta}` is substituted, or
/// `_delta<δ>` is inserted before the extension.
pub fn per_delta_path(out: &Path, delta: f64, multiple: bool) -> PathBuf {
    if !multiple {
        return out.to_path_buf();
    }
    let s = out.to_string_lossy();
    if s.contains("{delta}") {
        return PathBuf::from(s.replace("{delta}", &delta.to_string()));
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_delta{delta}.{}", ext.to_string_lossy()),
        None => format!("{stem}_delta{delta}"),
    };
    out.with_file_name(name)
}

fn pick_format(requested: Option<Format>, default: Format, allowed: &[Format], cmd: &str) -> Result<Format, CliError> {
    let f = requested.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!("--format {f:?} is not supported by {cmd}").to_lowercase()))
    }
}

fn json_error(e: serde_json::Error) -> io::Error {
    io::Error::other(e)
}

pub fn write_curve_csv(w: &mut dyn Write, curve: &CdfCurve) -> io::Result<()> {
    writeln!(w, "r,F,abs_error")?;
    for ((r, f), e) in curve.radii.iter().zip(&curve.values).zip(&curve.abs_error) {
        writeln!(w, "{r},{f},{e:.3e}")?;
    }
    Ok(())
}

/// Evaluates and writes the analytic CDF for every delta.
pub fn cmd_analytic(opts: &Options) -> Result<Vec<CdfCurve>, CliError> {
    let (cfg, output) = RunConfig::resolve(opts)?;
    let format = pick_format(output.format, Format::Csv, &[Format::Csv, Format::Json], "analytic")?;
    let sink = Sink::new(&output, cfg.deltas.len());
    let mut curves = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let exp = cfg.experiment(delta)?;
        let eta = EtaFunction::new(cfg.case, exp.params);
        let curve = contact_cdf(&eta, &exp.grid.radii(&eta)?, cfg.tol)?;
        sink.write(delta, |w| match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &curve).map_err(json_error)?;
                writeln!(w)
            }
            _ => write_curve_csv(w, &curve),
        })?;
        curves.push(curve);
    }
    Ok(curves)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub config: RunConfig,
    pub delta: f64,
    pub empirical: EmpiricalSummary,
    pub seeds: Vec<Vec<u64>>,
}

fn dump_patterns(dir: &Path, cfg: &RunConfig, delta: f64) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let exp = cfg.experiment(delta)?;
    let header = PatternHeader { lambda_p: Some(cfg.lambda), delta: Some(delta) };
    for k in 0..cfg.reps {
        let rep = Replication::generate(&exp, k)?;
        let stem = format!("{}_delta{delta}_rep{k:03}", cfg.case);
        let mut patterns = vec![(dir.join(format!("{stem}.txt")), &rep.main)];
        if let Some(src) = &rep.source {
            patterns.push((dir.join(format!("{stem}_source.txt")), src));
        }
        for (path, pattern) in patterns {
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_pattern(&mut w, pattern, header)
                .and_then(|_| w.flush())
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(())
}

/// Simulates every delta and writes the pooled empirical CDF.
pub fn cmd_simulate(opts: &Options) -> Result<Vec<SimulationRecord>, CliError> {
    let (cfg, output) = RunConfig::resolve(opts)?;
    let format = pick_format(
        output.format,
        Format::Csv,
        &[Format::Csv, Format::Samples, Format::Json],
        "simulate",
    )?;
    let sink = Sink::new(&output, cfg.deltas.len());
    let mut records = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let exp = cfg.experiment(delta)?;
        let sim = simulate_distances(&exp)?;
        if let Some(dir) = &output.dump_patterns {
            dump_patterns(dir, &cfg, delta)?;
        }
        let grid = exp.grid.radii(&exp.eta())?;
        let record = SimulationRecord {
            config: cfg.clone(),
            delta,
            empirical: EmpiricalSummary::new(&sim.empirical, &grid),
            seeds: sim.seeds.clone(),
        };
        let n = sim.empirical.len();
        sink.write(delta, |w| match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &record).map_err(json_error)?;
                writeln!(w)
            }
            Format::Samples => {
                writeln!(w, "r,F_hat,n")?;
                for (i, r) in sim.empirical.samples.iter().enumerate() {
                    writeln!(w, "{r},{},{n}", (i + 1) as f64 / n as f64)?;
                }
                Ok(())
            }
            _ => {
                writeln!(w, "r,F_hat,n")?;
                for (r, f) in record.empirical.radii.iter().zip(&record.empirical.f_hat) {
                    writeln!(w, "{r},{f},{n}")?;
                }
                Ok(())
            }
        })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    pub delta: f64,
    pub sup_distance: f64,
    pub threshold: f64,
    pub passed: bool,
    pub report: ComparisonReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: RunConfig,
    pub passed: bool,
    pub results: Vec<DeltaResult>,
}

impl CompareReport {
    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.into()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Runtime(e.into()))
    }

    /// Copy with every wall-clock field zeroed, for byte comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.results.iter_mut().for_each(|d| d.report.wall_time_s = 0.0);
        r
    }
}

/// Full pipeline for every delta; the report is written once, at the end.
pub fn cmd_compare(opts: &Options) -> Result<CompareReport, CliError> {
    let (cfg, output) = RunConfig::resolve(opts)?;
    let format = pick_format(output.format, Format::Json, &[Format::Json, Format::Toml], "compare")?;
    let mut results = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let exp = cfg.experiment(delta)?;
        let report = run_experiment(&exp)?;
        if let Some(dir) = &output.dump_patterns {
            dump_patterns(dir, &cfg, delta)?;
        }
        let passed = report.sup_distance <= cfg.threshold;
        eprintln!(
            "{} lambda_p={} delta={delta}: sup_distance={:.5} threshold={} n={} {}",
            cfg.case,
            cfg.lambda,
            report.sup_distance,
            cfg.threshold,
            report.empirical.n,
            if passed { "PASS" } else { "FAIL" }
        );
        results.push(DeltaResult { delta, sup_distance: report.sup_distance, threshold: cfg.threshold, passed, report });
    }
    let report = CompareReport { passed: results.iter().all(|r| r.passed), config: cfg, results };
    let text = match format {
        Format::Toml => report.to_toml()?,
        _ => report.to_json()? + "\n",
    };
    match &output.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(report)
}

/// Closed-form MHC intensity next to the simulated one, per delta.
pub fn cmd_density(opts: &Options) -> Result<Vec<DensityEstimate>, CliError> {
    let (cfg, output) = RunConfig::resolve(opts)?;
    let format = pick_format(output.format, Format::Csv, &[Format::Csv, Format::Json], "density")?;
    let estimates = cfg
        .deltas
        .iter()
        .map(|&d| Ok(estimate_mhc_density(cfg.params(d)?, cfg.window, cfg.reps.max(2), cfg.seed)?))
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut text = Vec::new();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut text, &estimates).map_err(|e| CliError::Runtime(e.into()))?;
            writeln!(text)?;
        }
        _ => {
            writeln!(text, "delta,lambda_p,analytic,mc_mean,mc_std_error,z,mc_retention")?;
            for e in &estimates {
                writeln!(
                    text,
                    "{},{},{},{},{},{:.3},{}",
                    e.params.delta,
                    e.params.lambda_p,
                    e.analytic,
                    e.mean,
                    e.std_error,
                    e.z_score(),
                    e.mean_retention
                )?;
            }
        }
    }
    match &output.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(&text)?,
    }
    Ok(estimates)
}
