//! Planar lens (circle-intersection) areas.
//!
//! Two lenses appear in the Matérn thinning probabilities:
//!
//! * the symmetric lens `b(x_o, δ) ∩ b(x, δ)` with the two centres `r` apart;
//! * the asymmetric lens `b(x_o, r) ∩ b(x, δ)`, where the second centre sits
//!   on the boundary of the first disk.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_inputs(r: f64, delta: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Domain(format!("separation must be finite and > 0, got {r}")));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Domain(format!(
            "hard-core distance must be finite and > 0, got {delta}"
        )));
    }
    Ok(())
}

/// Area of `b(x_o, δ) ∩ b(x, δ)` for centres at distance `r`.
///
/// Zero once the disks separate (`r > 2δ`).
pub fn lens_symmetric(r: f64, delta: f64) -> Result<f64> {
    check_inputs(r, delta)?;
    if r > 2.0 * delta {
        return Ok(0.0);
    }
    // 2δ² acos(r/2δ) - ½ r √(4δ² - r²), written as two circular segments of
    // central angle φ so the result keeps full relative precision near r = 2δ
    let phi = 4.0 * ((2.0 * delta - r) / (4.0 * delta)).sqrt().asin();
    Ok(delta * delta * phi_minus_sin(phi))
}

/// `φ - sin φ` without cancellation for small `φ`.
fn phi_minus_sin(phi: f64) -> f64 {
    if phi >= 1.0 {
        return phi - phi.sin();
    }
    let p2 = phi * phi;
    let mut term = phi * p2 / 6.0;
    let mut sum = 0.0;
    for k in 1..12 {
        sum += term;
        term *= -p2 / ((2 * k + 2) as f64 * (2 * k + 3) as f64);
    }
    sum
}

/// Area of `b(x_o, r) ∩ b(x, δ)` where `|x - x_o| = r`.
///
/// For `r < δ/2` the small disk lies entirely inside `b(x, δ)`.
pub fn lens_asymmetric(r: f64, delta: f64) -> Result<f64> {
    check_inputs(r, delta)?;
    if r < 0.5 * delta {
        return Ok(PI * r * r);
    }
    // b = acos(δ/2r) and a = asin(δ/2r) = acos(1 - δ²/2r²)/2, both from
    // half-angle forms so neither the tangent point r = δ/2 nor large r loses digits
    let ratio = delta / (2.0 * r);
    let b = 2.0 * ((2.0 * r - delta) / (4.0 * r)).sqrt().asin();
    let a = if ratio > 0.5 { 0.5 * PI - b } else { ratio.asin() };
    let root = ((2.0 * r - delta) * (2.0 * r + delta)).sqrt();
    let area = 2.0 * r * r * a + delta * delta * b - 0.5 * delta * root;
    Ok(area.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Generic two-circle intersection area, written independently of the
    /// specialised formulas above.
    pub(crate) fn two_circle_lens(d: f64, r1: f64, r2: f64) -> f64 {
        if d >= r1 + r2 {
            return 0.0;
        }
        if d <= (r1 - r2).abs() {
            let m = r1.min(r2);
            return PI * m * m;
        }
        // sum of two circular segments; 1 - cos(half angle) is factored so
        // near-tangent configurations keep their digits
        let gap = r1 + r2 - d;
        let segment = |ra: f64, rb: f64| {
            let one_minus_cos = gap * (rb + d - ra) / (2.0 * d * ra);
            let phi = 4.0 * (0.5 * one_minus_cos).sqrt().min(1.0).asin();
            let small = phi.powi(3) / 6.0 - phi.powi(5) / 120.0 + phi.powi(7) / 5040.0
                - phi.powi(9) / 362_880.0
                + phi.powi(11) / 39_916_800.0;
            let phi_minus_sin = if phi < 0.1 { small } else { phi - phi.sin() };
            0.5 * ra * ra * phi_minus_sin
        };
        segment(r1, r2) + segment(r2, r1)
    }

    /// Midpoint-lattice rasterisation of the intersection of two disks.
    fn rasterized_lens(d: f64, r1: f64, r2: f64, cells_per_unit: f64) -> f64 {
        // disk 1 at the origin, disk 2 at (d, 0); scan the bounding box of the smaller
        let (cx, rad) = if r1 <= r2 { (0.0, r1) } else { (d, r2) };
        let h = 1.0 / cells_per_unit;
        let n = (2.0 * rad / h).ceil() as usize;
        let (x0, y0) = (cx - rad, -rad);
        let mut count = 0usize;
        for i in 0..n {
            let x = x0 + (i as f64 + 0.5) * h;
            for j in 0..n {
                let y = y0 + (j as f64 + 0.5) * h;
                if x * x + y * y <= r1 * r1 && (x - d) * (x - d) + y * y <= r2 * r2 {
                    count += 1;
                }
            }
        }
        count as f64 * h * h
    }

    #[test]
    fn symmetric_lens_examples() {
        assert_eq!(lens_symmetric(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(lens_symmetric(2.5, 1.0).unwrap(), 0.0);
        assert!((lens_symmetric(1e-12, 1.0).unwrap() - PI).abs() < 1e-9);
        let expected = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((lens_symmetric(1.0, 1.0).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 1.228369698608757).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_lens_examples() {
        assert!((lens_asymmetric(0.2, 1.0).unwrap() - PI * 0.04).abs() < 1e-15);
        let at_half = lens_asymmetric(0.5, 1.0).unwrap();
        assert!((at_half - PI / 4.0).abs() < 1e-12 * PI);
        assert!((lens_asymmetric(0.5 - 1e-15, 1.0).unwrap() - at_half).abs() < 1e-12);
        assert!((lens_asymmetric(1.0, 1.0).unwrap() - lens_symmetric(1.0, 1.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn rasterization_oracle_at_unit_separation() {
        let raster = rasterized_lens(1.0, 1.0, 1.0, 4000.0);
        assert!((lens_symmetric(1.0, 1.0).unwrap() - raster).abs() < 1e-4);
        assert!((lens_asymmetric(1.0, 1.0).unwrap() - raster).abs() < 1e-4);
    }

    #[test]
    fn large_separation_tends_to_half_disk() {
        let l2 = lens_asymmetric(1e3, 1.0).unwrap();
        assert!((l2 - PI / 2.0).abs() < 1e-3);
        assert!(l2 < PI / 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        for (r, d) in [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (f64::NAN, 1.0), (1.0, f64::INFINITY)] {
            assert!(matches!(lens_symmetric(r, d), Err(Error::Domain(_))));
            assert!(matches!(lens_asymmetric(r, d), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn continuous_across_tangency() {
        for delta in [0.3, 1.0, 7.0] {
            let h = 0.5 * delta;
            for r in [h * (1.0 - 1e-15), h, h * (1.0 + 1e-15), h * (1.0 + 1e-9)] {
                let l2 = lens_asymmetric(r, delta).unwrap();
                assert!((l2 - PI * r * r).abs() <= 1e-12 * delta * delta, "r = {r}: {l2}");
            }
            let near = lens_symmetric(2.0 * delta * (1.0 - 1e-12), delta).unwrap();
            assert!(near >= 0.0 && near < 1e-17 * delta * delta);
        }
    }

    #[test]
    fn symmetric_lens_is_non_increasing() {
        let mut prev = f64::INFINITY;
        for i in 1..=2000 {
            let r = i as f64 * 1e-3;
            let v = lens_symmetric(r, 1.0).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert_eq!(prev, 0.0);
    }

    proptest::proptest! {
        #[test]
        fn areas_scale_with_delta_squared(r in 0.01f64..4.0, delta in 0.1f64..10.0) {
            let s1 = lens_symmetric(r * delta, delta).unwrap();
            let a1 = lens_asymmetric(r * delta, delta).unwrap();
            let s0 = lens_symmetric(r, 1.0).unwrap() * delta * delta;
            let a0 = lens_asymmetric(r, 1.0).unwrap() * delta * delta;
            proptest::prop_assert!((s1 - s0).abs() <= 1e-11 * delta * delta);
            proptest::prop_assert!((a1 - a0).abs() <= 1e-11 * delta * delta);
        }

        #[test]
        fn asymmetric_lens_bounds(r in 1e-3f64..100.0, delta in 0.1f64..5.0) {
            let l2 = lens_asymmetric(r, delta).unwrap();
            proptest::prop_assert!(l2 >= 0.0);
            proptest::prop_assert!(l2 < PI * delta * delta);
            proptest::prop_assert!(l2 <= PI * r * r * (1.0 + 1e-12));
        }

        #[test]
        fn lenses_match_generic_formula(r in 1e-3f64..4.0, delta in 0.1f64..5.0) {
            let r = r * delta;
            let s = lens_symmetric(r, delta).unwrap();
            let a = lens_asymmetric(r, delta).unwrap();
            let gs = two_circle_lens(r, delta, delta);
            let ga = two_circle_lens(r, r, delta);
            proptest::prop_assert!((s - gs).abs() <= 1e-12 * gs, "{s} vs {gs}");
            proptest::prop_assert!((a - ga).abs() <= 1e-12 * ga, "{a} vs {ga}");
        }
    }
}
