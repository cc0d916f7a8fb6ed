//! Nearest-neighbour distances, empirical CDFs, and analytic-vs-simulated
//! comparison.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    contact_cdf, mhc_intensity, uniform_grid, Case, CdfCurve, EtaFunction, ProcessParams,
    DEFAULT_ABS_TOL, DEFAULT_GRID_POINTS,
};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::simulate::{sample_ppp, stream_seed, thin_mhc_type2, Label, MarkedPattern, Window};

fn search_grid(window: Window, points: &[(f64, f64)]) -> TorusGrid {
    // cell side ≈ mean nearest-neighbour distance of a PPP of the same density
    let density = points.len() as f64 / window.area();
    TorusGrid::new(window, points, 0.5 / density.sqrt())
}

/// Distance from each `label` point to the nearest other `label` point.
pub fn nn_distances_within(pattern: &MarkedPattern, label: Label) -> Result<Vec<f64>> {
    let pts = pattern.positions(label);
    if pts.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 {label} points, found {}",
            pts.len()
        )));
    }
    let window = pattern.window;
    let grid = search_grid(window, &pts);
    pts.iter()
        .enumerate()
        .map(|(i, &p)| {
            grid.nearest(p.0, p.1, Some(i), |j| window.distance(p, pts[j]))
                .map(|(_, d)| d)
                .ok_or_else(|| Error::InsufficientData("no neighbour found".into()))
        })
        .collect()
}

/// Distance from each `source_label` point of `source` to the nearest
/// `target_label` point of `target`. Both patterns must share a window.
pub fn nn_distances_cross(
    source: &MarkedPattern,
    source_label: Label,
    target: &MarkedPattern,
    target_label: Label,
) -> Result<Vec<f64>> {
    if source.window != target.window {
        return Err(Error::InvalidParams("source and target windows differ".into()));
    }
    let src = source.positions(source_label);
    let tgt = target.positions(target_label);
    if src.is_empty() {
        return Err(Error::InsufficientData(format!("no {source_label} source points")));
    }
    if tgt.is_empty() {
        return Err(Error::InsufficientData(format!("no {target_label} target points")));
    }
    let window = target.window;
    let grid = search_grid(window, &tgt);
    Ok(src
        .iter()
        .map(|&p| {
            grid.nearest(p.0, p.1, None, |j| window.distance(p, tgt[j]))
                .map(|(_, d)| d)
                .expect("target is nonempty")
        })
        .collect())
}

/// Sorted sample with a right-continuous step CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    pub samples: Vec<f64>,
    pub case: Option<Case>,
    pub replications: usize,
}

pub fn empirical_cdf(mut samples: Vec<f64>) -> Result<EmpiricalDistribution> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("empirical CDF of an empty sample".into()));
    }
    if samples.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParams("sample contains NaN".into()));
    }
    samples.sort_by(f64::total_cmp);
    Ok(EmpiricalDistribution { samples, case: None, replications: 1 })
}

impl EmpiricalDistribution {
    /// Pools per-replication samples.
    pub fn pooled(parts: Vec<Vec<f64>>) -> Result<Self> {
        let replications = parts.len();
        let mut emp = empirical_cdf(parts.into_iter().flatten().collect())?;
        emp.replications = replications;
        Ok(emp)
    }

    pub fn with_case(mut self, case: Case) -> Self {
        self.case = Some(case);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `#{samples ≤ x} / n`
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.len() as f64
    }

    /// `#{samples < x} / n`
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s < x) as f64 / self.len() as f64
    }

    /// Distinct sample values in ascending order.
    pub fn support(&self) -> Vec<f64> {
        let mut v = self.samples.clone();
        v.dedup();
        v
    }
}

/// Sup distance between the step CDF and `analytic`, checked on both sides of
/// every jump: `max(|F̂(x) - F(x)|, |F̂(x⁻) - F(x⁻)|)` over sample values `x`.
/// For a continuous `F` the left limit is just `F(x)`. Returns the distance
/// and where it is attained.
pub fn ks_sup_distance_at(emp: &EmpiricalDistribution, analytic: &CdfCurve) -> Result<(f64, f64)> {
    let n = emp.len() as f64;
    let (mut sup, mut at) = (0.0f64, emp.samples.first().copied().unwrap_or(0.0));
    let mut i = 0;
    while i < emp.samples.len() {
        let x = emp.samples[i];
        let mut j = i;
        while j < emp.samples.len() && emp.samples[j] == x {
            j += 1;
        }
        let out_of_span = || {
            Error::Range(format!(
                "sample {x} outside analytic span [{}, {}]",
                analytic.radii.first().copied().unwrap_or(f64::NAN),
                analytic.radii.last().copied().unwrap_or(f64::NAN)
            ))
        };
        let f = analytic.eval(x).ok_or_else(out_of_span)?;
        let f_left = analytic.eval_left(x).ok_or_else(out_of_span)?;
        let gap = (j as f64 / n - f).abs().max((i as f64 / n - f_left).abs());
        if gap > sup {
            sup = gap;
            at = x;
        }
        i = j;
    }
    Ok((sup, at))
}

pub fn ks_sup_distance(emp: &EmpiricalDistribution, analytic: &CdfCurve) -> Result<f64> {
    ks_sup_distance_at(emp, analytic).map(|(d, _)| d)
}

/// Radius grid; `None` bounds fall back to the curve's default span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { min: None, max: None, count: DEFAULT_GRID_POINTS }
    }
}

impl GridSpec {
    pub fn radii(&self, eta: &EtaFunction) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidParams("grid needs at least one point".into()));
        }
        let default = eta.default_grid(2);
        let min = self.min.unwrap_or(default[0]);
        let max = self.max.unwrap_or(default[1]);
        if !(min.is_finite() && max.is_finite() && min >= 0.0 && max >= min) {
            return Err(Error::InvalidParams(format!("bad radius range [{min}, {max}]")));
        }
        Ok(uniform_grid(min, max, self.count))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub case: Case,
    pub params: ProcessParams,
    pub window: Window,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    pub abs_tol: f64,
}

impl ExperimentConfig {
    pub fn new(case: Case, params: ProcessParams, window: Window, replications: usize, seed: u64) -> Self {
        Self { case, params, window, replications, seed, grid: GridSpec::default(), abs_tol: DEFAULT_ABS_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        Window::new(self.window.width, self.window.height)?;
        if self.replications == 0 {
            return Err(Error::InvalidParams("need at least one replication".into()));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidParams(format!("tolerance must be > 0, got {}", self.abs_tol)));
        }
        Ok(())
    }

    pub fn eta(&self) -> EtaFunction {
        EtaFunction::new(self.case, self.params)
    }
}

/// Patterns generated for one replication.
#[derive(Debug, Clone)]
pub struct Replication {
    /// Parent pattern, thinned unless the case is PPP→PPP.
    pub main: MarkedPattern,
    /// Independent unthinned source pattern (PPP→MHC only).
    pub source: Option<MarkedPattern>,
}

impl Replication {
    pub fn generate(config: &ExperimentConfig, index: usize) -> Result<Self> {
        let seed_main = stream_seed(config.seed, index as u64, 0);
        let parent = sample_ppp(config.params.lambda_p, config.window, seed_main)?;
        let main = match config.case {
            Case::PppToPpp => parent,
            _ => thin_mhc_type2(&parent, config.params.delta)?,
        };
        let source = match config.case {
            Case::PppToMhc => {
                let seed_src = stream_seed(config.seed, index as u64, 1);
                Some(sample_ppp(config.params.lambda_p, config.window, seed_src)?)
            }
            _ => None,
        };
        Ok(Self { main, source })
    }

    pub fn distances(&self, case: Case) -> Result<Vec<f64>> {
        match case {
            Case::MhcToMhc => nn_distances_within(&self.main, Label::Mhc),
            Case::PppToPpp => nn_distances_within(&self.main, Label::Parent),
            Case::CmhcToMhc => nn_distances_cross(&self.main, Label::Cmhc, &self.main, Label::Mhc),
            Case::PppToMhc => {
                let src = self.source.as_ref().expect("PPP->MHC replications carry a source");
                nn_distances_cross(src, Label::Parent, &self.main, Label::Mhc)
            }
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        std::iter::once(self.main.seed).chain(self.source.as_ref().map(|s| s.seed)).collect()
    }
}

/// Pooled simulated distances plus the per-replication stream seeds.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub empirical: EmpiricalDistribution,
    pub seeds: Vec<Vec<u64>>,
    pub target_counts: Vec<usize>,
}

/// Runs all replications (in parallel) and pools their distances in
/// replication order.
pub fn simulate_distances(config: &ExperimentConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let target_label = if config.case.targets_mhc() { Label::Mhc } else { Label::Parent };
    let per_rep: Vec<(Vec<f64>, Vec<u64>, usize)> = (0..config.replications)
        .into_par_iter()
        .map(|k| {
            let rep = Replication::generate(config, k)
                .and_then(|rep| Ok((rep.distances(config.case)?, rep)))
                .map_err(|e| Error::Replication { replication: k, source: Box::new(e) })?;
            let (d, rep) = rep;
            Ok((d, rep.seeds(), rep.main.count(target_label)))
        })
        .collect::<Result<_>>()?;

    let mut parts = Vec::with_capacity(per_rep.len());
    let mut seeds = Vec::with_capacity(per_rep.len());
    let mut counts = Vec::with_capacity(per_rep.len());
    for (d, s, c) in per_rep {
        parts.push(d);
        seeds.push(s);
        counts.push(c);
    }
    let empirical = EmpiricalDistribution::pooled(parts)?.with_case(config.case);
    Ok(SimulationOutput { empirical, seeds, target_counts: counts })
}

/// Step CDF summarised on a radius grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub n: usize,
    pub replications: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub radii: Vec<f64>,
    pub f_hat: Vec<f64>,
}

impl EmpiricalSummary {
    pub fn new(emp: &EmpiricalDistribution, radii: &[f64]) -> Self {
        let n = emp.len();
        Self {
            n,
            replications: emp.replications,
            min: emp.samples[0],
            max: emp.samples[n - 1],
            mean: emp.samples.iter().sum::<f64>() / n as f64,
            radii: radii.to_vec(),
            f_hat: radii.iter().map(|&r| emp.cdf(r)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub analytic: CdfCurve,
    pub empirical: EmpiricalSummary,
    pub sup_distance: f64,
    pub sup_at: f64,
    pub seeds: Vec<Vec<u64>>,
    pub mean_target_points: f64,
    pub wall_time_s: f64,
}

/// Full simulate-and-compare pipeline for one parameter set.
///
/// The sup distance uses the analytic CDF recomputed exactly at every
/// distinct sample value, not the interpolated report grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ComparisonReport> {
    let started = Instant::now();
    config.validate()?;
    let eta = config.eta();

    let sim = simulate_distances(config)?;
    let emp = &sim.empirical;

    let report_grid = config.grid.radii(&eta)?;
    let analytic = contact_cdf(&eta, &report_grid, config.abs_tol)?;
    let exact = contact_cdf(&eta, &emp.support(), config.abs_tol)?;
    let (sup_distance, sup_at) = ks_sup_distance_at(emp, &exact)?;

    let mean_target_points =
        sim.target_counts.iter().sum::<usize>() as f64 / sim.target_counts.len() as f64;
    Ok(ComparisonReport {
        config: config.clone(),
        empirical: EmpiricalSummary::new(emp, &report_grid),
        analytic,
        sup_distance,
        sup_at,
        seeds: sim.seeds,
        mean_target_points,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Monte-Carlo estimate of the MHC intensity next to the closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub params: ProcessParams,
    pub analytic: f64,
    pub mean: f64,
    pub std_error: f64,
    pub mean_retention: f64,
    pub replications: usize,
}

impl DensityEstimate {
    /// `(mean - analytic) / std_error`
    pub fn z_score(&self) -> f64 {
        (self.mean - self.analytic) / self.std_error
    }
}

pub fn estimate_mhc_density(
    params: ProcessParams,
    window: Window,
    replications: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    params.validate()?;
    if replications < 2 {
        return Err(Error::InvalidParams("need at least 2 replications for a standard error".into()));
    }
    let per_rep: Vec<(f64, f64)> = (0..replications)
        .into_par_iter()
        .map(|k| {
            let parent = sample_ppp(params.lambda_p, window, stream_seed(seed, k as u64, 0))?;
            let thinned = thin_mhc_type2(&parent, params.delta)?;
            let kept = thinned.count(Label::Mhc) as f64;
            let total = parent.points.len().max(1) as f64;
            Ok((kept / window.area(), kept / total))
        })
        .collect::<Result<_>>()?;
    let n = replications as f64;
    let mean = per_rep.iter().map(|r| r.0).sum::<f64>() / n;
    let var = per_rep.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(DensityEstimate {
        params,
        analytic: mhc_intensity(&params),
        mean,
        std_error: (var / n).sqrt(),
        mean_retention: per_rep.iter().map(|r| r.1).sum::<f64>() / n,
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::MarkedPoint;

    fn pat(window: Window, pts: &[(f64, f64, Label)]) -> MarkedPattern {
        MarkedPattern {
            window,
            points: pts.iter().map(|&(x, y, label)| MarkedPoint { x, y, mark: 0.5, label }).collect(),
            seed: 0,
        }
    }

    #[test]
    fn two_point_distances() {
        let w = Window::new(10.0, 10.0).unwrap();
        let p = pat(w, &[(0.5, 5.0, Label::Mhc), (9.0, 5.0, Label::Mhc), (4.0, 4.0, Label::Cmhc)]);
        let d = nn_distances_within(&p, Label::Mhc).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[0] - 1.5).abs() < 1e-12 && (d[1] - 1.5).abs() < 1e-12);
        let c = nn_distances_cross(&p, Label::Cmhc, &p, Label::Mhc).unwrap();
        assert!((c[0] - (3.5f64.powi(2) + 1.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn insufficient_data() {
        let w = Window::new(10.0, 10.0).unwrap();
        let p = pat(w, &[(1.0, 1.0, Label::Mhc), (2.0, 2.0, Label::Cmhc)]);
        assert!(matches!(nn_distances_within(&p, Label::Mhc), Err(Error::InsufficientData(_))));
        assert!(matches!(
            nn_distances_cross(&p, Label::Mhc, &p, Label::Parent),
            Err(Error::InsufficientData(_))
        ));
        let other = pat(Window::new(5.0, 5.0).unwrap(), &[(1.0, 1.0, Label::Mhc)]);
        assert!(nn_distances_cross(&p, Label::Cmhc, &other, Label::Mhc).is_err());
    }

    #[test]
    fn step_cdf() {
        let e = empirical_cdf(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.samples, vec![1.0, 2.0, 3.0]);
        assert!((e.cdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.cdf(3.0), 1.0);
        assert_eq!(e.cdf(10.0), 1.0);
        assert!((e.cdf_left(2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!(empirical_cdf(vec![]).is_err());
        assert!(empirical_cdf(vec![f64::NAN]).is_err());
    }

    fn curve_from(radii: Vec<f64>, values: Vec<f64>) -> CdfCurve {
        CdfCurve {
            case: Case::PppToPpp,
            params: ProcessParams::new(1.0, 0.0).unwrap(),
            abs_error: vec![0.0; radii.len()],
            radii,
            values,
        }
    }

    #[test]
    fn sup_distance_trivial_cases() {
        let e = empirical_cdf(vec![1.0, 2.0, 3.0]).unwrap();
        // the same step function, jumps encoded as repeated radii
        let stair = curve_from(
            vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0],
            vec![0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0],
        );
        assert_eq!(ks_sup_distance(&e, &stair).unwrap(), 0.0);

        let zero = curve_from(vec![0.0, 5.0], vec![0.0, 0.0]);
        assert_eq!(ks_sup_distance(&e, &zero).unwrap(), 1.0);
        let one = curve_from(vec![0.5, 5.0], vec![1.0, 1.0]);
        assert_eq!(ks_sup_distance(&e, &one).unwrap(), 1.0);

        let short = curve_from(vec![0.0, 2.5], vec![0.0, 1.0]);
        assert!(matches!(ks_sup_distance(&e, &short), Err(Error::Range(_))));
    }

    #[test]
    fn sup_distance_continuous_curve() {
        let e = empirical_cdf(vec![0.5, 1.5]).unwrap();
        let c = curve_from(vec![0.0, 2.0], vec![0.25, 0.75]);
        // F(0.5) = 0.375 vs F̂ ∈ {0, 0.5}; F(1.5) = 0.625 vs F̂ ∈ {0.5, 1}
        let (d, at) = ks_sup_distance_at(&e, &c).unwrap();
        assert!((d - 0.375).abs() < 1e-15);
        assert_eq!(at, 0.5);
    }

    #[test]
    fn grid_spec_defaults() {
        let eta = EtaFunction::new(Case::MhcToMhc, ProcessParams::new(1.0, 1.0).unwrap());
        let g = GridSpec::default().radii(&eta).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1.0);
        let g = GridSpec { min: Some(0.0), max: Some(1.0), count: 2 }.radii(&eta).unwrap();
        assert_eq!(g, vec![0.0, 1.0]);
        assert!(GridSpec { min: Some(2.0), max: Some(1.0), count: 3 }.radii(&eta).is_err());
        assert!(GridSpec { count: 0, ..Default::default() }.radii(&eta).is_err());
    }

    #[test]
    fn small_experiment_runs() {
        let params = ProcessParams::new(1.0, 1.0).unwrap();
        let w = Window::new(30.0, 30.0).unwrap();
        for case in Case::ALL {
            let cfg = ExperimentConfig::new(case, params, w, 2, 11);
            let r = run_experiment(&cfg).unwrap();
            assert!((0.0..=1.0).contains(&r.sup_distance));
            assert_eq!(r.seeds.len(), 2);
            assert_eq!(r.seeds[0].len(), if case == Case::PppToMhc { 2 } else { 1 });
            assert!(r.empirical.f_hat.windows(2).all(|w| w[1] >= w[0]));
        }
        let bad = ExperimentConfig { replications: 0, ..ExperimentConfig::new(Case::MhcToMhc, params, w, 1, 0) };
        assert!(run_experiment(&bad).is_err());
        let tiny = ExperimentConfig::new(Case::MhcToMhc, params, Window::new(5.0, 5.0).unwrap(), 1, 0);
        assert!(matches!(run_experiment(&tiny), Err(Error::Replication { replication: 0, .. })));
    }
}
