//! Seeded Poisson patterns on a torus and Matérn type-II thinning.

mod dump;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

pub use dump::{read_pattern, write_pattern, PatternHeader};

/// Largest expected point count `sample_ppp` will attempt.
pub const MAX_EXPECTED_POINTS: f64 = 1e8;

/// Smallest allowed ratio of window side to hard-core distance for thinning.
pub const MIN_SIDE_OVER_DELTA: f64 = 10.0;

/// Rectangular window with wrap-around (toroidal) metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub width: f64,
    pub height: f64,
}

impl Window {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(Error::InvalidParams(format!(
                "window sides must be finite and > 0, got {width} x {height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Minimum-image displacement components.
    pub fn wrapped_delta(&self, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
        let mut dx = (a.0 - b.0).abs();
        let mut dy = (a.1 - b.1).abs();
        if dx > 0.5 * self.width {
            dx = self.width - dx;
        }
        if dy > 0.5 * self.height {
            dy = self.height - dy;
        }
        (dx, dy)
    }

    /// Toroidal distance.
    pub fn distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = self.wrapped_delta(a, b);
        dx.hypot(dy)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..self.width).contains(&x) && (0.0..self.height).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "PARENT")]
    Parent,
    #[serde(rename = "MHC")]
    Mhc,
    #[serde(rename = "CMHC")]
    Cmhc,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Parent => "PARENT",
            Label::Mhc => "MHC",
            Label::Cmhc => "CMHC",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PARENT" => Ok(Label::Parent),
            "MHC" => Ok(Label::Mhc),
            "CMHC" => Ok(Label::Cmhc),
            _ => Err(Error::InvalidParams(format!("unknown label '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub x: f64,
    pub y: f64,
    pub mark: f64,
    pub label: Label,
}

impl MarkedPoint {
    pub fn pos(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Point pattern on a toroidal window; `seed` reproduces it via [`sample_ppp`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPattern {
    pub window: Window,
    pub points: Vec<MarkedPoint>,
    pub seed: u64,
}

impl MarkedPattern {
    pub fn count(&self, label: Label) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }

    pub fn positions(&self, label: Label) -> Vec<(f64, f64)> {
        self.points.iter().filter(|p| p.label == label).map(MarkedPoint::pos).collect()
    }
}

/// Derives an independent 64-bit seed for `(base, replication, role)`.
///
/// SplitMix64 finalisation over the packed inputs; distinct inputs give
/// well-separated ChaCha seeds.
pub fn stream_seed(base: u64, replication: u64, role: u64) -> u64 {
    let mut z = base
        ^ replication.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ role.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(29);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Homogeneous Poisson pattern of intensity `lambda`, all points labelled
/// [`Label::Parent`] with i.i.d. uniform marks.
pub fn sample_ppp(lambda: f64, window: Window, seed: u64) -> Result<MarkedPattern> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParams(format!("intensity must be finite and > 0, got {lambda}")));
    }
    let expected = lambda * window.area();
    if expected > MAX_EXPECTED_POINTS {
        return Err(Error::Capacity { expected, limit: MAX_EXPECTED_POINTS });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let poisson = Poisson::new(expected)
        .map_err(|e| Error::InvalidParams(format!("poisson mean {expected}: {e}")))?;
    let n = poisson.sample(&mut rng) as usize;
    let points = (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * window.width;
            let y = rng.random::<f64>() * window.height;
            let mark = rng.random::<f64>();
            // random::<f64>() < 1, but the product can round up to the side
            MarkedPoint {
                x: if x < window.width { x } else { 0.0 },
                y: if y < window.height { y } else { 0.0 },
                mark,
                label: Label::Parent,
            }
        })
        .collect();
    Ok(MarkedPattern { window, points, seed })
}

/// Matérn type-II thinning.
///
/// A point becomes [`Label::Mhc`] iff its mark is strictly the smallest among
/// all parent points within toroidal distance `delta` (ties broken by point
/// index); every other point becomes [`Label::Cmhc`]. All comparisons use the
/// full parent pattern, so removal of one point never rescues another.
pub fn thin_mhc_type2(pattern: &MarkedPattern, delta: f64) -> Result<MarkedPattern> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidParams(format!("hard-core distance must be >= 0, got {delta}")));
    }
    if pattern.points.iter().any(|p| p.label != Label::Parent) {
        return Err(Error::InvalidParams("thinning needs an unthinned (all PARENT) pattern".into()));
    }
    let window = pattern.window;
    let min_side = window.width.min(window.height);
    if min_side < MIN_SIDE_OVER_DELTA * delta {
        return Err(Error::InvalidParams(format!(
            "window side {min_side} is below {MIN_SIDE_OVER_DELTA} x delta = {}",
            MIN_SIDE_OVER_DELTA * delta
        )));
    }

    let pts = &pattern.points;
    let mut out = pattern.clone();
    if delta == 0.0 {
        out.points.iter_mut().for_each(|p| p.label = Label::Mhc);
        return Ok(out);
    }

    let positions: Vec<(f64, f64)> = pts.iter().map(MarkedPoint::pos).collect();
    let grid = TorusGrid::new(window, &positions, delta);
    let beats = |i: usize, j: usize| (pts[i].mark, i) < (pts[j].mark, j);

    for (i, p) in pts.iter().enumerate() {
        let (cx, cy) = grid.cell_of(p.x, p.y);
        let mut smallest = true;
        grid.for_each_near(cx, cy, 1, |j| {
            if smallest && j != i && window.distance(p.pos(), pts[j].pos()) <= delta && !beats(i, j) {
                smallest = false;
            }
        });
        out.points[i].label = if smallest { Label::Mhc } else { Label::Cmhc };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(window: Window, pts: &[(f64, f64, f64)]) -> MarkedPattern {
        MarkedPattern {
            window,
            points: pts
                .iter()
                .map(|&(x, y, mark)| MarkedPoint { x, y, mark, label: Label::Parent })
                .collect(),
            seed: 0,
        }
    }

    fn labels(p: &MarkedPattern) -> Vec<Label> {
        p.points.iter().map(|p| p.label).collect()
    }

    #[test]
    fn torus_distance_wraps() {
        let w = Window::new(10.0, 4.0).unwrap();
        assert!((w.distance((0.5, 0.5), (9.5, 3.5)) - 2f64.sqrt()).abs() < 1e-12);
        assert!((w.distance((1.0, 1.0), (4.0, 1.0)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_rule() {
        let w = Window::new(20.0, 20.0).unwrap();
        let p = pattern(w, &[(5.0, 5.0, 0.2), (5.5, 5.0, 0.7)]);
        let t = thin_mhc_type2(&p, 1.0).unwrap();
        assert_eq!(labels(&t), vec![Label::Mhc, Label::Cmhc]);
    }

    #[test]
    fn simultaneous_flagging_on_a_chain() {
        let w = Window::new(20.0, 20.0).unwrap();
        let p = pattern(w, &[(5.0, 5.0, 0.1), (5.8, 5.0, 0.2), (6.6, 5.0, 0.3)]);
        let t = thin_mhc_type2(&p, 1.0).unwrap();
        assert_eq!(labels(&t), vec![Label::Mhc, Label::Cmhc, Label::Cmhc]);
    }

    #[test]
    fn neighbourhood_wraps_across_edges() {
        let w = Window::new(20.0, 20.0).unwrap();
        let p = pattern(w, &[(0.1, 10.0, 0.6), (19.8, 10.0, 0.3)]);
        let t = thin_mhc_type2(&p, 1.0).unwrap();
        assert_eq!(labels(&t), vec![Label::Cmhc, Label::Mhc]);
    }

    #[test]
    fn ties_broken_by_index() {
        let w = Window::new(20.0, 20.0).unwrap();
        let p = pattern(w, &[(5.0, 5.0, 0.4), (5.5, 5.0, 0.4)]);
        let t = thin_mhc_type2(&p, 1.0).unwrap();
        assert_eq!(labels(&t), vec![Label::Mhc, Label::Cmhc]);
    }

    #[test]
    fn thinning_preconditions() {
        let w = Window::new(5.0, 50.0).unwrap();
        let p = pattern(w, &[(1.0, 1.0, 0.5)]);
        assert!(thin_mhc_type2(&p, 1.0).is_err());
        let ok = thin_mhc_type2(&p, 0.5).unwrap();
        assert!(thin_mhc_type2(&ok, 0.5).is_err());
        assert_eq!(labels(&thin_mhc_type2(&p, 0.0).unwrap()), vec![Label::Mhc]);
    }

    #[test]
    fn ppp_is_deterministic_and_in_window() {
        let w = Window::new(30.0, 20.0).unwrap();
        let a = sample_ppp(1.0, w, 42).unwrap();
        let b = sample_ppp(1.0, w, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, sample_ppp(1.0, w, 43).unwrap().points);
        assert!(a.points.iter().all(|p| w.contains(p.x, p.y) && (0.0..1.0).contains(&p.mark)));
    }

    #[test]
    fn ppp_count_moments() {
        let w = Window::new(100.0, 100.0).unwrap();
        let counts: Vec<f64> = (0..200)
            .map(|k| sample_ppp(1.0, w, stream_seed(7, k, 0)).unwrap().points.len() as f64)
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // sd of the mean is 100/√200 ≈ 7; of the variance ≈ 1e4·√(2/199) ≈ 1000
        assert!((mean - 1e4).abs() < 30.0, "{mean}");
        assert!((var - 1e4).abs() < 4000.0, "{var}");
    }

    #[test]
    fn sparse_and_oversized_requests() {
        let w = Window::new(1.0, 1.0).unwrap();
        assert!(sample_ppp(1e-9, w, 1).unwrap().points.is_empty());
        let big = Window::new(1e5, 1e5).unwrap();
        assert!(matches!(sample_ppp(1.0, big, 1), Err(Error::Capacity { .. })));
        assert!(sample_ppp(0.0, w, 1).is_err());
    }

    #[test]
    fn stream_seeds_differ() {
        let mut seen = std::collections::HashSet::new();
        for rep in 0..100 {
            for role in 0..3 {
                assert!(seen.insert(stream_seed(42, rep, role)));
            }
        }
    }
}
