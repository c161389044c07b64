//! Occupancy grids and 8-connected geodesic distance fields.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::geom::{point_in_convex, Vec2};

/// Cell layout: `width × height` cells of side `resolution`, cell (0, 0)
/// has its lower-left corner at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    /// Smallest grid covering `[0, extent.x] × [0, extent.y]`.
    pub fn covering(extent: Vec2, resolution: f64) -> GridSpec {
        assert!(resolution > 0.0);
        let width = (extent.x / resolution - 1e-9).ceil().max(1.0) as usize;
        let height = (extent.y / resolution - 1e-9).ceil().max(1.0) as usize;
        GridSpec { origin: Vec2::ZERO, resolution, width, height }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.resolution,
            self.origin.y + (row as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, if it lies on the grid.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    /// Inclusive cell range overlapped by the box `[lo, hi]`, clamped to the grid.
    pub fn cell_range(&self, lo: Vec2, hi: Vec2) -> Option<(usize, usize, usize, usize)> {
        let c0 = ((lo.x - self.origin.x) / self.resolution).floor().max(0.0);
        let r0 = ((lo.y - self.origin.y) / self.resolution).floor().max(0.0);
        let c1 = ((hi.x - self.origin.x) / self.resolution).floor().min(self.width as f64 - 1.0);
        let r1 = ((hi.y - self.origin.y) / self.resolution).floor().min(self.height as f64 - 1.0);
        if c1 < c0 || r1 < r0 {
            return None;
        }
        Some((c0 as usize, r0 as usize, c1 as usize, r1 as usize))
    }
}

/// Bit-per-cell obstacle map. Cells off the grid count as blocked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(spec: GridSpec) -> Self {
        Self { spec, blocked: vec![false; spec.len()] }
    }

    #[inline]
    pub fn is_blocked(&self, col: usize, row: usize) -> bool {
        self.blocked[self.spec.index(col, row)]
    }

    #[inline]
    pub fn is_blocked_index(&self, index: usize) -> bool {
        self.blocked[index]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        let i = self.spec.index(col, row);
        self.blocked[i] = value;
    }

    /// Blocks every cell whose center lies in the convex polygon.
    pub fn fill_convex(&mut self, vertices: &[Vec2]) {
        let (lo, hi) = bounds(vertices);
        self.fill_where(lo, hi, |p| point_in_convex(vertices, p));
    }

    /// Blocks every cell whose center lies within `radius` of `center`.
    pub fn fill_disc(&mut self, center: Vec2, radius: f64) {
        let r = Vec2::new(radius, radius);
        self.fill_where(center - r, center + r, |p| p.distance(center) <= radius);
    }

    fn fill_where(&mut self, lo: Vec2, hi: Vec2, inside: impl Fn(Vec2) -> bool) {
        let Some((c0, r0, c1, r1)) = self.spec.cell_range(lo, hi) else { return };
        for row in r0..=r1 {
            for col in c0..=c1 {
                if inside(self.spec.cell_center(col, row)) {
                    self.set(col, row, true);
                }
            }
        }
    }

    /// Blocks every cell within `radius` of a blocked cell.
    pub fn inflated(&self, radius: f64) -> OccupancyGrid {
        let k = (radius / self.spec.resolution).ceil() as isize;
        let r2 = (radius / self.spec.resolution).powi(2);
        let mut offsets = Vec::new();
        for dy in -k..=k {
            for dx in -k..=k {
                if (dx * dx + dy * dy) as f64 <= r2 {
                    offsets.push((dx, dy));
                }
            }
        }
        let mut out = self.clone();
        let (w, h) = (self.spec.width as isize, self.spec.height as isize);
        for row in 0..h {
            for col in 0..w {
                if !self.is_blocked(col as usize, row as usize) {
                    continue;
                }
                for &(dx, dy) in &offsets {
                    let (c, r) = (col + dx, row + dy);
                    if c >= 0 && r >= 0 && c < w && r < h {
                        out.set(c as usize, r as usize, true);
                    }
                }
            }
        }
        // the grid border is a wall too
        for row in 0..h {
            for col in 0..w {
                let edge = col.min(row).min(w - 1 - col).min(h - 1 - row);
                if ((edge as f64) + 0.5) * self.spec.resolution < radius {
                    out.set(col as usize, row as usize, true);
                }
            }
        }
        out
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// Whether the point's cell is free; off-grid points are blocked.
    pub fn is_free_at(&self, p: Vec2) -> bool {
        match self.spec.cell_of(p) {
            Some((c, r)) => !self.is_blocked(c, r),
            None => false,
        }
    }
}

fn bounds(points: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

/// Path cost counted as `straight` unit steps plus `diagonal` √2 steps.
/// Comparing these pairs exactly keeps the search independent of
/// floating-point summation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StepCount {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCount {
    pub const ZERO: StepCount = StepCount { straight: 0, diagonal: 0 };

    /// Length in cells.
    pub fn cells(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }
}

impl Ord for StepCount {
    fn cmp(&self, other: &Self) -> Ordering {
        // a1 + b1√2 vs a2 + b2√2  ⇔  da vs db√2
        let da = self.straight as i64 - other.straight as i64;
        let db = other.diagonal as i64 - self.diagonal as i64;
        let sign = |x: i64| x.cmp(&0);
        match (sign(da), sign(db)) {
            (Ordering::Equal, Ordering::Equal) => Ordering::Equal,
            (sa, Ordering::Equal) => sa,
            (Ordering::Equal, sb) => sb.reverse(),
            (Ordering::Less, Ordering::Greater) => Ordering::Less,
            (Ordering::Greater, Ordering::Less) => Ordering::Greater,
            (Ordering::Greater, Ordering::Greater) => (da * da).cmp(&(2 * db * db)),
            (Ordering::Less, Ordering::Less) => (2 * db * db).cmp(&(da * da)),
        }
    }
}

impl PartialOrd for StepCount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(isize, isize, bool); 8] = [
    (1, 0, false),
    (-1, 0, false),
    (0, 1, false),
    (0, -1, false),
    (1, 1, true),
    (-1, 1, true),
    (1, -1, true),
    (-1, -1, true),
];

/// Free neighbors of a cell with their step kind. A diagonal step needs both
/// orthogonal cells it passes between to be free.
pub fn neighbors(grid: &OccupancyGrid, index: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
    let spec = grid.spec;
    let (col, row) = spec.coords(index);
    let free = move |c: isize, r: isize| {
        c >= 0 && r >= 0 && (c as usize) < spec.width && (r as usize) < spec.height && !grid.is_blocked(c as usize, r as usize)
    };
    NEIGHBORS.iter().filter_map(move |&(dx, dy, diag)| {
        let (c, r) = (col as isize + dx, row as isize + dy);
        if !free(c, r) {
            return None;
        }
        if diag && !(free(col as isize + dx, row as isize) && free(col as isize, row as isize + dy)) {
            return None;
        }
        Some((spec.index(c as usize, r as usize), diag))
    })
}

/// Per-cell geodesic distance in meters; `f64::INFINITY` where unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub spec: GridSpec,
    values: Vec<f64>,
}

impl DistanceField {
    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[self.spec.index(col, row)]
    }

    #[inline]
    pub fn get_index(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the cell containing `p`; infinite off the grid.
    pub fn at(&self, p: Vec2) -> f64 {
        match self.spec.cell_of(p) {
            Some((c, r)) => self.get(c, r),
            None => f64::INFINITY,
        }
    }

    /// Bilinear interpolation between the four surrounding cell centers,
    /// using only finite neighbors. Infinite if none is finite.
    pub fn sample(&self, p: Vec2) -> f64 {
        let res = self.spec.resolution;
        let gx = (p.x - self.spec.origin.x) / res - 0.5;
        let gy = (p.y - self.spec.origin.y) / res - 0.5;
        let x0 = gx.floor();
        let y0 = gy.floor();
        let (tx, ty) = (gx - x0, gy - y0);
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (dx, dy, w) in [(0.0, 0.0, (1.0 - tx) * (1.0 - ty)), (1.0, 0.0, tx * (1.0 - ty)), (0.0, 1.0, (1.0 - tx) * ty), (1.0, 1.0, tx * ty)] {
            let (c, r) = (x0 + dx, y0 + dy);
            if c < 0.0 || r < 0.0 || c >= self.spec.width as f64 || r >= self.spec.height as f64 {
                continue;
            }
            let v = self.get(c as usize, r as usize);
            if v.is_finite() && w > 0.0 {
                acc += w * v;
                wsum += w;
            }
        }
        if wsum > 0.0 {
            acc / wsum
        } else {
            self.at(p)
        }
    }

    pub fn max_finite(&self) -> f64 {
        self.values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }

    /// Central-difference gradient of the interpolated field.
    pub fn gradient(&self, p: Vec2) -> Vec2 {
        let h = self.spec.resolution;
        let fx = |dx: f64, dy: f64| self.sample(p + Vec2::new(dx, dy));
        let (xp, xm, yp, ym) = (fx(h, 0.0), fx(-h, 0.0), fx(0.0, h), fx(0.0, -h));
        let c = self.sample(p);
        let diff = |plus: f64, minus: f64| match (plus.is_finite(), minus.is_finite()) {
            (true, true) => (plus - minus) / (2.0 * h),
            (true, false) if c.is_finite() => (plus - c) / h,
            (false, true) if c.is_finite() => (c - minus) / h,
            _ => 0.0,
        };
        Vec2::new(diff(xp, xm), diff(yp, ym))
    }
}

#[derive(PartialEq, Eq)]
struct Entry {
    cost: StepCount,
    index: usize,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.cmp(&self.cost).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra returning exact step counts per cell.
pub fn step_counts(grid: &OccupancyGrid, sources: &[usize]) -> Vec<Option<StepCount>> {
    let mut best: Vec<Option<StepCount>> = vec![None; grid.spec.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if grid.is_blocked_index(s) || best[s].is_some() {
            continue;
        }
        best[s] = Some(StepCount::ZERO);
        heap.push(Entry { cost: StepCount::ZERO, index: s });
    }
    while let Some(Entry { cost, index }) = heap.pop() {
        if best[index].is_some_and(|b| b < cost) {
            continue;
        }
        for (next, diag) in neighbors(grid, index) {
            let mut c = cost;
            if diag {
                c.diagonal += 1;
            } else {
                c.straight += 1;
            }
            if best[next].is_none_or(|b| c < b) {
                best[next] = Some(c);
                heap.push(Entry { cost: c, index: next });
            }
        }
    }
    best
}

/// Geodesic distance from every cell to the nearest of `sources`.
pub fn geodesic_distance_field(grid: &OccupancyGrid, sources: &[usize]) -> DistanceField {
    let res = grid.spec.resolution;
    let values = step_counts(grid, sources)
        .into_iter()
        .map(|c| c.map_or(f64::INFINITY, |c| c.cells() * res))
        .collect();
    DistanceField { spec: grid.spec, values }
}
