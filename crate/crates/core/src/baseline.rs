//! Grid A* over the traversability costmap.
//!
//! Cells are indexed `(row, col)` with row 0 at the bottom (smallest `y`).
//! Moving between 8-neighbours costs `len · (p_from + p_to) / 2 + κ · len`.
//! The heuristic is `weight · κ · |n - goal|`: admissible for weights up to
//! one, Dijkstra at zero, and plain Euclidean distance in metres at `1/κ`.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::terrain::{Domain, Region, TerrainGrid};

pub const DEFAULT_KAPPA: f64 = 1e-3;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct CostmapGraph {
    pub n_rows: usize,
    pub n_cols: usize,
    pub origin: Vec2,
    pub cell_w: f64,
    pub cell_h: f64,
    pub cost: Vec<f64>,
    pub blocked: Vec<bool>,
}

impl CostmapGraph {
    /// Builds a costmap directly from per-cell costs (row-major, row 0 at the bottom).
    pub fn from_costs(n_rows: usize, n_cols: usize, origin: Vec2, cell_w: f64, cell_h: f64, cost: Vec<f64>, blocked: Vec<bool>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 || cost.len() != n_rows * n_cols || blocked.len() != cost.len() {
            return Err(Error::Validation("costmap dimensions are inconsistent".into()));
        }
        if cost.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Validation("costmap costs must lie in [0, 1]".into()));
        }
        Ok(Self { n_rows, n_cols, origin, cell_w, cell_h, cost, blocked })
    }

    #[inline]
    fn idx(&self, (row, col): Cell) -> usize {
        row * self.n_cols + col
    }

    pub fn cost_at(&self, cell: Cell) -> f64 {
        self.cost[self.idx(cell)]
    }

    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.blocked[self.idx(cell)]
    }

    pub fn cell_center(&self, (row, col): Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_w,
            self.origin.y + (row as f64 + 0.5) * self.cell_h,
        )
    }

    /// Cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: Vec2) -> Cell {
        let col = libm::floor((x.x - self.origin.x) / self.cell_w);
        let row = libm::floor((x.y - self.origin.y) / self.cell_h);
        let clamp = |v: f64, n: usize| if v < 0.0 { 0 } else { (v as usize).min(n - 1) };
        (clamp(row, self.n_rows), clamp(col, self.n_cols))
    }

    /// Unblocked 8-neighbours with their step lengths, in `(row, col)` order.
    pub fn neighbors(&self, (row, col): Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const STEPS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
        STEPS.iter().filter_map(move |&(dr, dc)| {
            let r = row as isize + dr;
            let c = col as isize + dc;
            if r < 0 || c < 0 || r >= self.n_rows as isize || c >= self.n_cols as isize {
                return None;
            }
            let cell = (r as usize, c as usize);
            if self.is_blocked(cell) {
                return None;
            }
            let len = libm::hypot(dr as f64 * self.cell_h, dc as f64 * self.cell_w);
            Some((cell, len))
        })
    }

    /// `len · (p_a + p_b) / 2 + κ · len`
    pub fn edge_cost(&self, a: Cell, b: Cell, len: f64, kappa: f64) -> f64 {
        len * 0.5 * (self.cost_at(a) + self.cost_at(b)) + kappa * len
    }
}

/// Cell costs are `p` at cell centres; cells touching an obstacle are blocked.
pub fn build_costmap(grid: &TerrainGrid, domain: &Domain, resolution: (usize, usize)) -> Result<CostmapGraph> {
    let (n_cols, n_rows) = resolution;
    if n_cols < 2 || n_rows < 2 {
        return Err(Error::Validation(alloc::format!("costmap resolution must be at least 2x2, got {n_cols}x{n_rows}")));
    }
    let lo = domain.bounds_min;
    let cell_w = (domain.bounds_max.x - lo.x) / n_cols as f64;
    let cell_h = (domain.bounds_max.y - lo.y) / n_rows as f64;
    let mut cost = Vec::with_capacity(n_rows * n_cols);
    let mut blocked = Vec::with_capacity(n_rows * n_cols);
    for row in 0..n_rows {
        for col in 0..n_cols {
            let min = Vec2::new(lo.x + col as f64 * cell_w, lo.y + row as f64 * cell_h);
            let max = Vec2::new(min.x + cell_w, min.y + cell_h);
            let center = (min + max) * 0.5;
            cost.push(grid.traversability(center)?);
            blocked.push(domain.obstacles.iter().any(|o| o.intersects_box(min, max)));
        }
    }
    CostmapGraph::from_costs(n_rows, n_cols, lo, cell_w, cell_h, cost, blocked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub points: Vec<Vec2>,
    /// Accumulated edge cost of the search.
    pub total_cost: f64,
}

impl GridPath {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AStarParams {
    pub heuristic_weight: f64,
    pub kappa: f64,
}

impl Default for AStarParams {
    fn default() -> Self {
        Self { heuristic_weight: 1.0, kappa: DEFAULT_KAPPA }
    }
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    cell: Cell,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap: lowest f, then smallest (row, col).
        other.f.total_cmp(&self.f).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn astar(map: &CostmapGraph, start: Cell, goal: Cell, params: AStarParams) -> Result<GridPath> {
    let in_grid = |(r, c): Cell| r < map.n_rows && c < map.n_cols;
    if !in_grid(start) || !in_grid(goal) {
        return Err(Error::Precondition("start or goal cell outside the costmap".into()));
    }
    if map.is_blocked(start) || map.is_blocked(goal) {
        return Err(Error::Precondition("start or goal cell is blocked".into()));
    }
    let goal_pt = map.cell_center(goal);
    let h = |cell: Cell| params.heuristic_weight * params.kappa * map.cell_center(cell).dist(goal_pt);
    let n = map.n_rows * map.n_cols;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut open = BinaryHeap::new();
    g[map.idx(start)] = 0.0;
    open.push(Entry { f: h(start), cell: start });
    while let Some(Entry { f, cell }) = open.pop() {
        let ci = map.idx(cell);
        if f > g[ci] + h(cell) {
            continue;
        }
        if cell == goal {
            let mut cells = vec![goal];
            let mut cur = ci;
            while cur != map.idx(start) {
                cur = parent[cur];
                cells.push((cur / map.n_cols, cur % map.n_cols));
            }
            cells.reverse();
            let points = cells.iter().map(|c| map.cell_center(*c)).collect();
            return Ok(GridPath { cells, points, total_cost: g[ci] });
        }
        for (nb, len) in map.neighbors(cell) {
            let ni = map.idx(nb);
            let cand = g[ci] + map.edge_cost(cell, nb, len, params.kappa);
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = ci;
                open.push(Entry { f: cand + h(nb), cell: nb });
            }
        }
    }
    Err(Error::NoPath)
}

/// `∫ p dt` along the polyline at constant `speed`, one trapezoid per segment.
pub fn path_traversability_cost(points: &[Vec2], grid: &TerrainGrid, speed: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Precondition("path is empty".into()));
    }
    if !(speed > 0.0) {
        return Err(Error::Validation(alloc::format!("speed must be positive, got {speed}")));
    }
    let p: Vec<f64> = points.iter().map(|x| grid.traversability(*x)).collect::<Result<_>>()?;
    Ok(points
        .windows(2)
        .zip(p.windows(2))
        .map(|(s, pp)| s[0].dist(s[1]) / speed * 0.5 * (pp[0] + pp[1]))
        .sum())
}

/// Truncates a polyline where it first enters `region`, locating the crossing
/// on the entering segment by bisection. Unchanged if it never enters.
pub fn clip_at_region(points: &[Vec2], region: &Region) -> Vec<Vec2> {
    let Some(first) = points.iter().position(|x| region.contains(*x)) else {
        return points.to_vec();
    };
    let mut out = points[..first].to_vec();
    if first == 0 {
        out.push(points[0]);
        return out;
    }
    let (a, b) = (points[first - 1], points[first]);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if region.contains(a + (b - a) * mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.push(a + (b - a) * hi);
    out
}
