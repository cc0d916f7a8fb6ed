//! Conditional thinning probabilities and the contact-distance CDF.
//!
//! For a reference point `x_o` of the measuring process and a parent point
//! `x` at distance `r`, `η(r)` is the probability that `x` survives into the
//! target process given that no target point lies closer to `x_o`. Any such
//! `η` yields the contact-distance CDF
//!
//! ```text
//! F(R) = 1 - exp(-∫_{r0}^{R} 2π r λ_p η(r) dr)
//! ```
//!
//! where `r0 = δ` for MHC→MHC (the hard core guarantees an empty ball) and
//! `r0 = 0` otherwise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lens_asymmetric, lens_symmetric};
use crate::quadrature::integrate;

pub const DEFAULT_ABS_TOL: f64 = 1e-9;
pub const DEFAULT_GRID_POINTS: usize = 200;

/// Parent intensity `λ_p` and hard-core distance `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub lambda_p: f64,
    pub delta: f64,
}

impl ProcessParams {
    pub fn new(lambda_p: f64, delta: f64) -> Result<Self> {
        let p = Self { lambda_p, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_p.is_finite() && self.lambda_p > 0.0) {
            return Err(Error::InvalidParams(format!(
                "parent intensity must be finite and > 0, got {}",
                self.lambda_p
            )));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "hard-core distance must be finite and >= 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// `π δ²`, the exclusion-ball area.
    pub fn ball_area(&self) -> f64 {
        PI * self.delta * self.delta
    }
}

/// Which pair of processes the contact distance is measured between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "mhc-mhc")]
    MhcToMhc,
    #[serde(rename = "ppp-mhc")]
    PppToMhc,
    #[serde(rename = "cmhc-mhc")]
    CmhcToMhc,
    #[serde(rename = "ppp-ppp")]
    PppToPpp,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::MhcToMhc, Case::PppToMhc, Case::CmhcToMhc, Case::PppToPpp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Case::MhcToMhc => "mhc-mhc",
            Case::PppToMhc => "ppp-mhc",
            Case::CmhcToMhc => "cmhc-mhc",
            Case::PppToPpp => "ppp-ppp",
        }
    }

    /// Whether the target process is the Matérn-thinned one.
    pub fn targets_mhc(&self) -> bool {
        !matches!(self, Case::PppToPpp)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown case '{s}'")))
    }
}

/// `(1 - e^{-x}) / x`, stable down to `x = 0`.
pub fn one_minus_exp_ratio(x: f64) -> f64 {
    if x < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Intensity of the type-II Matérn process, `(1 - e^{-λ_p π δ²}) / (π δ²)`.
pub fn mhc_intensity(params: &ProcessParams) -> f64 {
    params.lambda_p * mhc_retention(params)
}

/// Probability that a parent point survives type-II thinning.
pub fn mhc_retention(params: &ProcessParams) -> f64 {
    one_minus_exp_ratio(params.lambda_p * params.ball_area())
}

/// Intensity of the process the contact distance is measured to.
pub fn target_intensity(case: Case, params: &ProcessParams) -> f64 {
    if case.targets_mhc() {
        mhc_intensity(params)
    } else {
        params.lambda_p
    }
}

/// Two-point retention probability of the reference point `x_o` and a parent
/// point `x` at distance `r > δ`, given the annulus `δ < |y - x_o| < r` is
/// void of parent points.
///
/// With `a = λπδ²`, `c = λ(πδ² - l₂)`, `d = λ(πδ² - l₂ + l₁)`,
/// `e = λ(πδ² - l₁)` and `g(x) = (1 - e^{-x})/x` the three closed-form terms
/// read `g(a)/c`, `-g(a + c)/c` and `(g(d) - g(a + c))/e`; note `d + e = a + c`.
pub fn kappa1(r: f64, params: &ProcessParams) -> Result<f64> {
    let v = kappa1_unchecked(r, params);
    if !v.is_finite() {
        return Err(Error::Numeric(format!(
            "kappa1 is {v} at r = {r} (lambda_p = {}, delta = {})",
            params.lambda_p, params.delta
        )));
    }
    Ok(v)
}

fn kappa1_unchecked(r: f64, params: &ProcessParams) -> f64 {
    let delta = params.delta;
    if delta == 0.0 {
        return 1.0;
    }
    if r <= delta || r.is_nan() {
        return 0.0;
    }
    let Ok((l1, l2)) = lens_symmetric(r, delta).and_then(|l1| Ok((l1, lens_asymmetric(r, delta)?)))
    else {
        return f64::NAN;
    };
    let area = params.ball_area();
    let lam = params.lambda_p;

    let floor = 1e-14 * area * area;
    debug_assert!((area - l2) * (2.0 * area - l2) > floor, "πδ² - l2 vanished at r = {r}");
    debug_assert!(area - l1 > floor, "πδ² - l1 vanished at r = {r}");
    debug_assert!(l1 - l2 + area > floor, "l1 - l2 + πδ² vanished at r = {r}");

    let a = lam * area;
    let c = lam * (area - l2);
    let d = lam * (area - l2 + l1);
    let e = lam * (area - l1);
    let g_ac = one_minus_exp_ratio(a + c);

    (one_minus_exp_ratio(a) - g_ac) / c + (one_minus_exp_ratio(d) - g_ac) / e
}

/// The same quantity as [`kappa1`], by direct 2-D quadrature of the two mark
/// integrals (`t < t_o` and `t_o < t`). Used to check the closed form.
pub fn kappa1_numeric(r: f64, params: &ProcessParams) -> Result<f64> {
    let delta = params.delta;
    if delta == 0.0 {
        return Ok(1.0);
    }
    if r <= delta {
        return Ok(0.0);
    }
    let l1 = lens_symmetric(r, delta)?;
    let l2 = lens_asymmetric(r, delta)?;
    let area = params.ball_area();
    let lam = params.lambda_p;
    let (inner_tol, outer_tol) = (1e-13, 4e-11);

    // x_o holds the larger mark: x's exposed area is its ball minus the void lens
    let first = |t_o: f64| -> f64 {
        let inner = integrate(
            |t| (-t_o * lam * area).exp() * (-t * lam * (area - l2)).exp(),
            0.0,
            t_o,
            &[],
            inner_tol,
        );
        inner.map(|i| i.value).unwrap_or(f64::NAN)
    };
    // x holds the larger mark: the shared lens l1 is already covered by x_o's test
    let second = |t: f64| -> f64 {
        let inner = integrate(
            |t_o| (-t * lam * (area - (l2 - l1))).exp() * (-t_o * lam * (area - l1)).exp(),
            0.0,
            t,
            &[],
            inner_tol,
        );
        inner.map(|i| i.value).unwrap_or(f64::NAN)
    };
    let i1 = integrate(first, 0.0, 1.0, &[], outer_tol)?;
    let i2 = integrate(second, 0.0, 1.0, &[], outer_tol)?;
    Ok(i1.value + i2.value)
}

/// `η` for MHC→MHC: `κ₁(r) / ρ_MHC`, zero inside the hard core.
pub fn eta_mhc_mhc(r: f64, params: &ProcessParams) -> f64 {
    if params.delta == 0.0 {
        return 1.0;
    }
    if r <= params.delta {
        return 0.0;
    }
    kappa1_unchecked(r, params) / mhc_retention(params)
}

/// `η` for PPP→MHC: the parent point at distance `r` survives unless a
/// lower-marked parent point lies in the part of its ball outside `b(x_o, r)`.
pub fn eta_ppp_mhc(r: f64, params: &ProcessParams) -> f64 {
    if params.delta == 0.0 {
        return 1.0;
    }
    let l2 = if r > 0.0 { lens_asymmetric(r, params.delta).unwrap_or(f64::NAN) } else { 0.0 };
    let exposed = (params.ball_area() - l2).max(0.0);
    one_minus_exp_ratio(params.lambda_p * exposed)
}

/// `η` for CMHC→MHC, approximated by treating the complementary point as if
/// it came from an independent PPP. Agreement is judged only by simulation.
pub fn eta_cmhc_mhc(r: f64, params: &ProcessParams) -> f64 {
    eta_ppp_mhc(r, params)
}

/// A case-tagged conditional thinning probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaFunction {
    pub case: Case,
    pub params: ProcessParams,
}

impl EtaFunction {
    pub fn new(case: Case, params: ProcessParams) -> Self {
        Self { case, params }
    }

    /// Radius below which the target process is known to be empty.
    pub fn lower_support(&self) -> f64 {
        match self.case {
            Case::MhcToMhc => self.params.delta,
            _ => 0.0,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.case {
            Case::MhcToMhc => eta_mhc_mhc(r, &self.params),
            Case::PppToMhc => eta_ppp_mhc(r, &self.params),
            Case::CmhcToMhc => eta_cmhc_mhc(r, &self.params),
            Case::PppToPpp => 1.0,
        }
    }

    /// Points where the lens areas change branch.
    fn breakpoints(&self) -> [f64; 3] {
        let d = self.params.delta;
        [0.5 * d, d, 2.0 * d]
    }

    /// Uniform grid over `[r0, r0 + 4/√λ_target]`.
    pub fn default_grid(&self, count: usize) -> Vec<f64> {
        let lo = self.lower_support();
        let span = 4.0 / target_intensity(self.case, &self.params).sqrt();
        uniform_grid(lo, lo + span, count)
    }
}

/// `count` evenly spaced values from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (count - 1) as f64;
            (0..count).map(|i| if i + 1 == count { max } else { min + step * i as f64 }).collect()
        }
    }
}

/// Sampled contact-distance CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub case: Case,
    pub params: ProcessParams,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub abs_error: Vec<f64>,
}

impl CdfCurve {
    pub fn lower_support(&self) -> f64 {
        EtaFunction::new(self.case, self.params).lower_support()
    }

    /// Linear interpolation between grid nodes; exact at the nodes.
    ///
    /// Returns `None` outside the sampled span, except below the lower
    /// support where `F` is identically zero. A radius listed twice encodes a
    /// jump; `eval` returns the right-hand value there.
    pub fn eval(&self, x: f64) -> Option<f64> {
        self.eval_side(x, true)
    }

    /// Left limit `F(x⁻)`; equals [`eval`](Self::eval) except at encoded jumps.
    pub fn eval_left(&self, x: f64) -> Option<f64> {
        self.eval_side(x, false)
    }

    fn eval_side(&self, x: f64, right: bool) -> Option<f64> {
        if x <= self.lower_support() {
            return Some(0.0);
        }
        let (first, last) = (*self.radii.first()?, *self.radii.last()?);
        if x < first || x > last {
            return None;
        }
        let i = self.radii.partition_point(|&r| r < x);
        if self.radii[i] == x {
            if right {
                let j = self.radii.partition_point(|&r| r <= x);
                return Some(self.values[j - 1]);
            }
            return Some(self.values[i]);
        }
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let (f0, f1) = (self.values[i - 1], self.values[i]);
        Some(f0 + (f1 - f0) * (x - r0) / (r1 - r0))
    }
}

/// Evaluates `F(R)` at every grid radius.
///
/// The cumulative integral is carried from one grid point to the next, each
/// panel getting a share of `abs_tol` proportional to its length, so the curve
/// is non-decreasing by construction.
pub fn contact_cdf(eta: &EtaFunction, grid: &[f64], abs_tol: f64) -> Result<CdfCurve> {
    eta.params.validate()?;
    if !(abs_tol > 0.0 && abs_tol.is_finite()) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {abs_tol}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParams("radius grid is empty".into()));
    }
    if grid.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidParams("radii must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("radius grid must be ascending".into()));
    }

    let lo = eta.lower_support();
    let span = (grid[grid.len() - 1] - lo).max(0.0);
    let breaks = eta.breakpoints();
    let lambda = eta.params.lambda_p;
    let integrand = |r: f64| 2.0 * PI * r * lambda * eta.eval(r);

    let mut values = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    let (mut prev, mut acc, mut acc_err) = (lo, 0.0f64, 0.0f64);
    for &r in grid {
        if r > prev {
            let tol = abs_tol * (r - prev) / span;
            let panel = integrate(integrand, prev, r, &breaks, tol)?;
            acc += panel.value;
            acc_err += panel.abs_error;
            prev = r;
        }
        if r <= lo {
            values.push(0.0);
            errors.push(0.0);
        } else {
            values.push(-(-acc).exp_m1());
            errors.push((-acc).exp() * acc_err);
        }
    }

    Ok(CdfCurve { case: eta.case, params: eta.params, radii: grid.to_vec(), values, abs_error: errors })
}

/// Void probability `V(R)` as the product of `N` thin-annulus void
/// probabilities `1 - 2π r_n λ_p η(r_n) Δr`, with `r_n` the inner radius of
/// annulus `n`. Converges to `1 - F(R)` at first order in `1/N`.
pub fn void_probability_discretized(eta: &EtaFunction, radius: f64, annuli: usize) -> Result<f64> {
    eta.params.validate()?;
    if annuli < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 annuli, got {annuli}")));
    }
    let lo = eta.lower_support();
    if !(radius.is_finite() && radius >= lo) {
        return Err(Error::InvalidParams(format!(
            "radius {radius} must be finite and >= lower support {lo}"
        )));
    }
    if radius == lo {
        return Ok(1.0);
    }
    let dr = (radius - lo) / annuli as f64;
    let lambda = eta.params.lambda_p;
    let mut product = 1.0f64;
    for n in 0..annuli {
        let r = lo + n as f64 * dr;
        let factor = 1.0 - 2.0 * PI * r * lambda * eta.eval(r) * dr;
        if factor.is_nan() {
            return Err(Error::Numeric(format!("annulus factor is NaN at r = {r}")));
        }
        if factor < 0.0 {
            return Err(Error::Resolution(format!(
                "annulus {n} at r = {r} has factor {factor}; {annuli} annuli are too coarse"
            )));
        }
        product *= factor.clamp(0.0, 1.0);
    }
    Ok(product)
}
