//! Uniform bucket grid on a rectangular torus.
//!
//! Points are binned into `nx × ny` cells stored in compressed (CSR) form.
//! Cell indices wrap around in both directions.

use crate::simulate::Window;

#[derive(Debug, Clone)]
pub struct TorusGrid {
    window: Window,
    nx: usize,
    ny: usize,
    cell_w: f64,
    cell_h: f64,
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl TorusGrid {
    /// Bins `points` into cells whose sides are at least `min_cell_side`
    /// (as close to it as the window allows).
    pub fn new(window: Window, points: &[(f64, f64)], min_cell_side: f64) -> Self {
        let side = if min_cell_side.is_finite() && min_cell_side > 0.0 {
            min_cell_side
        } else {
            window.width.max(window.height)
        };
        // cap cell count near the point count so sparse patterns don't allocate huge grids
        let cap = (4 * points.len()).max(1) as f64;
        let mut nx = ((window.width / side).floor() as usize).max(1);
        let mut ny = ((window.height / side).floor() as usize).max(1);
        while (nx as f64) * (ny as f64) > cap && (nx > 1 || ny > 1) {
            nx = (nx / 2).max(1);
            ny = (ny / 2).max(1);
        }
        let cell_w = window.width / nx as f64;
        let cell_h = window.height / ny as f64;

        let mut grid = Self { window, nx, ny, cell_w, cell_h, starts: Vec::new(), items: Vec::new() };
        let cells: Vec<usize> = points.iter().map(|&(x, y)| grid.cell_index(x, y)).collect();
        let mut counts = vec![0usize; nx * ny + 1];
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; points.len()];
        for (i, &c) in cells.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        grid
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_sides(&self) -> (f64, f64) {
        (self.cell_w, self.cell_h)
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = ((x / self.cell_w).floor() as isize).rem_euclid(self.nx as isize) as usize;
        let cy = ((y / self.cell_h).floor() as isize).rem_euclid(self.ny as isize) as usize;
        (cx, cy)
    }

    fn cell_index(&self, x: f64, y: f64) -> usize {
        let (cx, cy) = self.cell_of(x, y);
        cy * self.nx + cx
    }

    /// Indices of the points binned in cell `(cx, cy)`, wrapped.
    pub fn cell(&self, cx: isize, cy: isize) -> &[usize] {
        let cx = cx.rem_euclid(self.nx as isize) as usize;
        let cy = cy.rem_euclid(self.ny as isize) as usize;
        let c = cy * self.nx + cx;
        &self.items[self.starts[c]..self.starts[c + 1]]
    }

    /// Visits every distinct cell within Chebyshev offset `reach` of `(cx, cy)`.
    pub fn for_each_near<F: FnMut(usize)>(&self, cx: usize, cy: usize, reach: usize, mut f: F) {
        let (xs, ys) = (offsets(reach, self.nx), offsets(reach, self.ny));
        for &dy in &ys {
            for &dx in &xs {
                for &i in self.cell(cx as isize + dx, cy as isize + dy) {
                    f(i);
                }
            }
        }
    }

    /// Nearest point to `(x, y)` under the torus metric, skipping `exclude`.
    ///
    /// Rings of cells are scanned outward; the search stops once the best
    /// candidate is no farther than the closest any unscanned cell could be.
    pub fn nearest<F>(&self, x: f64, y: f64, exclude: Option<usize>, dist: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> f64,
    {
        let (cx, cy) = self.cell_of(x, y);
        let (cx, cy) = (cx as isize, cy as isize);
        let side = self.cell_w.min(self.cell_h);
        let full = self.nx.max(self.ny) / 2 + 1;
        let mut best: Option<(usize, f64)> = None;
        let mut ring = Vec::new();
        for k in 0..=full as isize {
            ring.clear();
            if k == 0 {
                ring.push((cx, cy));
            } else {
                for d in -k..=k {
                    ring.push((cx + d, cy - k));
                    ring.push((cx + d, cy + k));
                }
                for d in -k + 1..k {
                    ring.push((cx - k, cy + d));
                    ring.push((cx + k, cy + d));
                }
            }
            for &(gx, gy) in &ring {
                for &i in self.cell(gx, gy) {
                    if Some(i) == exclude {
                        continue;
                    }
                    let d = dist(i);
                    match best {
                        Some((bi, bd)) if bd < d || (bd == d && bi <= i) => {}
                        _ => best = Some((i, d)),
                    }
                }
            }
            // every point within k·side of the query sits in rings 0..=k
            if let Some((_, bd)) = best {
                if bd <= k as f64 * side {
                    break;
                }
            }
        }
        best
    }

    pub fn window(&self) -> Window {
        self.window
    }
}

/// Cell offsets `-reach..=reach`, trimmed so no cell is visited twice on a
/// small torus.
fn offsets(reach: usize, n: usize) -> Vec<isize> {
    if 2 * reach + 1 >= n {
        (0..n as isize).collect()
    } else {
        (-(reach as isize)..=reach as isize).collect()
    }
}
