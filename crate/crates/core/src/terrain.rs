//! Heightmap terrain, the traversability field `p(x) = h(x) / h_max`, and the
//! planar regions used for the initial, target and obstacle sets.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Snap tolerance (in cell units) used to land exactly on grid nodes.
const NODE_SNAP: f64 = 1e-9;

/// Regular heightmap. Row 0 of `heights` is the top (largest `y`) row.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGrid {
    n_rows: usize,
    n_cols: usize,
    cell_size: f64,
    origin: Vec2,
    heights: Vec<f64>,
    h_max: f64,
}

impl TerrainGrid {
    pub fn new(n_rows: usize, n_cols: usize, cell_size: f64, origin: Vec2, heights: Vec<f64>) -> Result<Self> {
        if n_rows < 2 || n_cols < 2 {
            return Err(Error::Validation(format!("terrain must be at least 2x2, got {n_rows}x{n_cols}")));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::Validation(format!("cell size must be positive, got {cell_size}")));
        }
        if !origin.is_finite() {
            return Err(Error::Validation("terrain origin must be finite".to_string()));
        }
        if heights.len() != n_rows * n_cols {
            return Err(Error::Validation(format!(
                "expected {} heights for a {n_rows}x{n_cols} grid, got {}",
                n_rows * n_cols,
                heights.len()
            )));
        }
        if let Some((idx, h)) = heights.iter().enumerate().find(|(_, h)| !h.is_finite() || **h < 0.0) {
            return Err(Error::Validation(format!(
                "height {h} at row {}, column {} is negative or not finite",
                idx / n_cols,
                idx % n_cols
            )));
        }
        let h_max = heights.iter().copied().fold(0.0, f64::max);
        Ok(Self { n_rows, n_cols, cell_size, origin, heights, h_max })
    }

    /// Parses comma-separated heights. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn parse_csv(text: &str, cell_size: f64, origin: Vec2) -> Result<Self> {
        let mut heights = Vec::new();
        let mut n_cols = 0usize;
        let mut n_rows = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut count = 0usize;
            for field in line.split(',') {
                let field = field.trim();
                let h: f64 = field.parse().map_err(|_| Error::Format {
                    line: lineno + 1,
                    message: format!("cannot parse `{field}` as a number"),
                })?;
                if !h.is_finite() {
                    return Err(Error::Format { line: lineno + 1, message: format!("non-finite value `{field}`") });
                }
                if h < 0.0 {
                    return Err(Error::Validation(format!("negative height {h} on line {}", lineno + 1)));
                }
                heights.push(h);
                count += 1;
            }
            if n_rows == 0 {
                n_cols = count;
            } else if count != n_cols {
                return Err(Error::Format {
                    line: lineno + 1,
                    message: format!("ragged row: expected {n_cols} values, found {count}"),
                });
            }
            n_rows += 1;
        }
        if n_rows == 0 {
            return Err(Error::Format { line: 0, message: "heightmap contains no data rows".to_string() });
        }
        Self::new(n_rows, n_cols, cell_size, origin, heights)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Height at file row `row` (0 = top) and column `col`.
    pub fn height(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.n_cols + col]
    }

    /// World position of the node at file row `row`, column `col`.
    pub fn node_position(&self, row: usize, col: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + col as f64 * self.cell_size,
            self.origin.y + (self.n_rows - 1 - row) as f64 * self.cell_size,
        )
    }

    /// Lower-left and upper-right corners of the terrain.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let max = Vec2::new(
            self.origin.x + (self.n_cols - 1) as f64 * self.cell_size,
            self.origin.y + (self.n_rows - 1) as f64 * self.cell_size,
        );
        (self.origin, max)
    }

    pub fn in_bounds(&self, x: Vec2) -> bool {
        let (lo, hi) = self.bounds();
        let slack = NODE_SNAP * self.cell_size;
        x.x >= lo.x - slack && x.x <= hi.x + slack && x.y >= lo.y - slack && x.y <= hi.y + slack
    }

    fn local_coord(&self, value: f64, origin: f64, n: usize) -> (usize, f64) {
        let mut u = (value - origin) / self.cell_size;
        let r = libm::round(u);
        if libm::fabs(u - r) < NODE_SNAP {
            u = r;
        }
        let u = u.clamp(0.0, (n - 1) as f64);
        let i0 = (libm::floor(u) as usize).min(n - 2);
        (i0, u - i0 as f64)
    }

    /// Bilinear height at `x`. Errors when `x` is outside the grid.
    pub fn height_at(&self, x: Vec2) -> Result<f64> {
        if !self.in_bounds(x) || !x.is_finite() {
            return Err(Error::OutOfDomain { x: x.x, y: x.y });
        }
        let (col, fx) = self.local_coord(x.x, self.origin.x, self.n_cols);
        let (k, fy) = self.local_coord(x.y, self.origin.y, self.n_rows);
        Ok(self.bilinear(k, col, fx, fy))
    }

    /// Bilinear height inside the cell whose lower-left node is bottom-row
    /// index `k` (0 = bottom) and column `col`, at local offsets in `[0,1]`.
    pub fn height_in_cell(&self, k: usize, col: usize, x: Vec2) -> f64 {
        let fx = (x.x - self.origin.x) / self.cell_size - col as f64;
        let fy = (x.y - self.origin.y) / self.cell_size - k as f64;
        self.bilinear(k, col, fx, fy)
    }

    fn bilinear(&self, k: usize, col: usize, fx: f64, fy: f64) -> f64 {
        let hb = |kk: usize, c: usize| self.height(self.n_rows - 1 - kk, c);
        let h00 = hb(k, col);
        let h10 = hb(k, col + 1);
        let h01 = hb(k + 1, col);
        let h11 = hb(k + 1, col + 1);
        (1.0 - fx) * (1.0 - fy) * h00 + fx * (1.0 - fy) * h10 + (1.0 - fx) * fy * h01 + fx * fy * h11
    }

    /// Traversability `p(x) = h(x) / h_max`, clamped to `[0, 1]`; zero on flat
    /// ground (`h_max = 0`).
    pub fn traversability(&self, x: Vec2) -> Result<f64> {
        let h = self.height_at(x)?;
        if self.h_max == 0.0 {
            return Ok(0.0);
        }
        Ok((h / self.h_max).clamp(0.0, 1.0))
    }
}

/// Axis-aligned box or disc. Boundaries count as inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Box { min: Vec2, max: Vec2 },
    Disc { center: Vec2, radius: f64 },
}

impl Region {
    pub fn new_box(min: Vec2, max: Vec2) -> Result<Self> {
        let r = Region::Box { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn new_disc(center: Vec2, radius: f64) -> Result<Self> {
        let r = Region::Disc { center, radius };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Box { min, max } => {
                if !(min.x < max.x && min.y < max.y) || !min.is_finite() || !max.is_finite() {
                    return Err(Error::Validation(format!(
                        "box min ({}, {}) must be below max ({}, {}) componentwise",
                        min.x, min.y, max.x, max.y
                    )));
                }
            }
            Region::Disc { center, radius } => {
                if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
                    return Err(Error::Validation(format!("disc radius must be positive, got {radius}")));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: Vec2) -> bool {
        match *self {
            Region::Box { min, max } => x.x >= min.x && x.x <= max.x && x.y >= min.y && x.y <= max.y,
            Region::Disc { center, radius } => (x - center).norm_sq() <= radius * radius,
        }
    }

    /// Membership excluding the boundary.
    pub fn contains_strict(&self, x: Vec2) -> bool {
        match *self {
            Region::Box { min, max } => x.x > min.x && x.x < max.x && x.y > min.y && x.y < max.y,
            Region::Disc { center, radius } => (x - center).norm_sq() < radius * radius,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Box { min, max } => (max.x - min.x) * (max.y - min.y),
            Region::Disc { radius, .. } => core::f64::consts::PI * radius * radius,
        }
    }

    pub fn center(&self) -> Vec2 {
        match *self {
            Region::Box { min, max } => (min + max) * 0.5,
            Region::Disc { center, .. } => center,
        }
    }

    /// Axis-aligned bounding box.
    pub fn aabb(&self) -> (Vec2, Vec2) {
        match *self {
            Region::Box { min, max } => (min, max),
            Region::Disc { center, radius } => {
                (center - Vec2::new(radius, radius), center + Vec2::new(radius, radius))
            }
        }
    }

    /// Closest point of the closed region to `x`.
    pub fn closest_point(&self, x: Vec2) -> Vec2 {
        match *self {
            Region::Box { min, max } => Vec2::new(x.x.clamp(min.x, max.x), x.y.clamp(min.y, max.y)),
            Region::Disc { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= radius {
                    x
                } else {
                    center + d * (radius / n)
                }
            }
        }
    }

    /// Closed-set intersection test against the box `[min, max]`.
    pub fn intersects_box(&self, min: Vec2, max: Vec2) -> bool {
        match *self {
            Region::Box { min: a, max: b } => a.x <= max.x && b.x >= min.x && a.y <= max.y && b.y >= min.y,
            Region::Disc { center, radius } => {
                let c = Vec2::new(center.x.clamp(min.x, max.x), center.y.clamp(min.y, max.y));
                (c - center).norm_sq() <= radius * radius
            }
        }
    }

    /// Closed-set intersection test between two regions.
    pub fn intersects(&self, other: &Region) -> bool {
        match (*self, *other) {
            (Region::Box { min, max }, r) | (r, Region::Box { min, max }) => r.intersects_box(min, max),
            (Region::Disc { center: c1, radius: r1 }, Region::Disc { center: c2, radius: r2 }) => {
                (c1 - c2).norm() <= r1 + r2
            }
        }
    }

    /// True when the region lies inside the box `[min, max]`.
    pub fn within_box(&self, min: Vec2, max: Vec2) -> bool {
        let (a, b) = self.aabb();
        a.x >= min.x && a.y >= min.y && b.x <= max.x && b.y <= max.y
    }
}

/// Navigation domain: state bounds, initial set, target set and hard obstacles.
/// The optimisation domain is the bounds minus the target set.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub bounds_min: Vec2,
    pub bounds_max: Vec2,
    pub initial: Region,
    pub target: Region,
    pub obstacles: Vec<Region>,
}

impl Domain {
    pub fn new(bounds_min: Vec2, bounds_max: Vec2, initial: Region, target: Region, obstacles: Vec<Region>) -> Result<Self> {
        let d = Self { bounds_min, bounds_max, initial, target, obstacles };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        Region::Box { min: self.bounds_min, max: self.bounds_max }.validate()?;
        self.initial.validate()?;
        self.target.validate()?;
        let (lo, hi) = (self.bounds_min, self.bounds_max);
        if !self.initial.within_box(lo, hi) {
            return Err(Error::Validation("initial set is not inside the domain bounds".to_string()));
        }
        if !self.target.within_box(lo, hi) {
            return Err(Error::Validation("target set is not inside the domain bounds".to_string()));
        }
        if self.initial.intersects(&self.target) {
            return Err(Error::Validation("initial and target sets overlap".to_string()));
        }
        for (i, obs) in self.obstacles.iter().enumerate() {
            obs.validate()?;
            if !obs.within_box(lo, hi) {
                return Err(Error::Validation(format!("obstacle {i} is not inside the domain bounds")));
            }
            if obs.intersects(&self.initial) {
                return Err(Error::Validation(format!("obstacle {i} overlaps the initial set")));
            }
        }
        Ok(())
    }

    pub fn bounds_region(&self) -> Region {
        Region::Box { min: self.bounds_min, max: self.bounds_max }
    }

    pub fn in_bounds(&self, x: Vec2) -> bool {
        self.bounds_region().contains(x)
    }

    pub fn area(&self) -> f64 {
        self.bounds_region().area()
    }

    pub fn in_obstacle(&self, x: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.contains(x))
    }
}
