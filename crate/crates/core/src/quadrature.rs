//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval is first split at caller-supplied breakpoints, so no panel
//! ever straddles a point where the integrand's derivatives jump. The panel
//! with the largest error estimate is then bisected until the summed
//! estimate drops below the requested absolute tolerance.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod abscissae XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_PANELS: usize = 2000;

/// Result of an integration: value plus an (upper-bound style) error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error).is_eq()
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod evaluation with the embedded 7-point Gauss estimate.
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(non_finite(lo, hi, center, fc));
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(non_finite(lo, hi, x1, f1));
        }
        if !f2.is_finite() {
            return Err(non_finite(lo, hi, x2, f2));
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs() + 50.0 * f64::EPSILON * value.abs();
    Ok(Panel { lo, hi, value, error })
}

fn non_finite(lo: f64, hi: f64, x: f64, fx: f64) -> Error {
    Error::Quadrature { lo, hi, reason: format!("integrand is {fx} at x = {x}") }
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `abs_tol`.
///
/// Breakpoints outside the open interval are ignored.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<Integral> {
    integrate_with_limit(f, lo, hi, breakpoints, abs_tol, DEFAULT_MAX_PANELS)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Quadrature { lo, hi, reason: "invalid interval".into() });
    }
    if abs_tol.is_nan() || abs_tol <= 0.0 {
        return Err(Error::Quadrature { lo, hi, reason: format!("tolerance {abs_tol} must be > 0") });
    }
    if hi == lo {
        return Ok(Integral { value: 0.0, abs_error: 0.0 });
    }

    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut err = 0.0;
    for w in edges.windows(2) {
        let p = gk15(&f, w[0], w[1])?;
        err += p.error;
        heap.push(p);
    }

    while err > abs_tol {
        if heap.len() >= max_panels {
            let worst = heap.peek().copied().expect("heap is never empty");
            return Err(Error::Quadrature {
                lo: worst.lo,
                hi: worst.hi,
                reason: format!(
                    "no convergence after {} panels (error estimate {err:.3e} > {abs_tol:.3e})",
                    heap.len()
                ),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            return Err(Error::Quadrature {
                lo: worst.lo,
                hi: worst.hi,
                reason: "panel cannot be bisected further".into(),
            });
        }
        let left = gk15(&f, worst.lo, mid)?;
        let right = gk15(&f, mid, worst.hi)?;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    let (value, abs_error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
    Ok(Integral { value, abs_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| 2.0 * PI * x, 0.0, 1.0, &[], 1e-12).unwrap();
        assert!((r.value - PI).abs() < 1e-14);
        let r = integrate(|x| x.powi(20), 0.0, 1.0, &[], 1e-13).unwrap();
        assert!((r.value - 1.0 / 21.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_transcendental() {
        let r = integrate(|x| (-x).exp(), 0.0, 10.0, &[], 1e-12).unwrap();
        assert!((r.value - (1.0 - (-10f64).exp())).abs() < 1e-12);
        assert!(r.abs_error <= 1e-12);
    }

    #[test]
    fn kink_handled_by_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let exact = 0.5 * 0.09 + 0.5 * 0.49;
        let r = integrate(f, 0.0, 1.0, &[0.3], 1e-13).unwrap();
        assert!((r.value - exact).abs() < 1e-14);
        // without the breakpoint the adaptive loop still gets there
        let r = integrate(f, 0.0, 1.0, &[], 1e-10).unwrap();
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, &[], 1e-10).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x| x, 2.0, 2.0, &[], 1e-9).unwrap().value, 0.0);
    }

    #[test]
    fn reports_failing_panel() {
        let err = integrate_with_limit(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &[], 1e-14, 20).unwrap_err();
        match err {
            Error::Quadrature { lo, .. } => assert_eq!(lo, 0.0),
            other => panic!("unexpected {other:?}"),
        }
        let err = integrate(|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &[], 1e-9);
        assert!(matches!(err, Err(Error::Quadrature { .. })));
        assert!(integrate(|x| x, 1.0, 0.0, &[], 1e-9).is_err());
        assert!(integrate(|x| x, 0.0, 1.0, &[], 0.0).is_err());
    }
}
