//! Synthetic scenario terrains and their configurations.
//!
//! Every terrain is a 101×101 heightmap with 0.1 m cells over a 10 m square.
//! Except for the flat one they keep a positive base height, so `p > 0`
//! everywhere and the program has a cost to trade off in every cell.

use std::path::{Path, PathBuf};

use pfnav_core::terrain::TerrainGrid;
use pfnav_core::Vec2;

use crate::config::{
    BaselineSection, BasisSection, ControlSection, DomainSection, LpSection, OperatorSection, OutputSection, PlannerConfig, RegionSpec,
    TerrainSection,
};
use crate::error::CliError;
use crate::io::{heightmap_csv, write_file};

pub const GRID_N: usize = 101;
pub const CELL: f64 = 0.1;
pub const SIDE: f64 = 10.0;

fn gauss(d: f64, s: f64) -> f64 {
    (-(d * d) / (2.0 * s * s)).exp()
}

/// Centre line of the road between the two ridges.
pub fn road_center(y: f64) -> f64 {
    5.0 + 1.5 * (std::f64::consts::PI * y / SIDE).sin()
}

/// Two ridges 2.6 m either side of a bending road.
pub fn mountain_pass_height(x: f64, y: f64) -> f64 {
    let c = road_center(y);
    0.2 + 2.0 * gauss(x - (c - 2.6), 0.9) + 1.6 * gauss(x - (c + 2.6), 0.9)
}

/// Ring ridge of radius 2.2 around (4, 5), open towards -x.
pub fn c_shape_height(x: f64, y: f64) -> f64 {
    let (dx, dy) = (x - 4.0, y - 5.0);
    let r = dx.hypot(dy);
    let ang = dy.atan2(dx).abs();
    let arc = if ang < 2.3 { 1.0 } else { gauss(ang - 2.3, 0.15) };
    0.05 + 2.0 * gauss(r - 2.2, 0.35) * arc
}

/// Gentle hills; the pit itself is the obstacle in the configuration.
pub fn pit_height(x: f64, y: f64) -> f64 {
    1.0 + 0.3 * gauss((x - 4.0).hypot(y - 1.5), 1.2) + 0.2 * gauss((x - 6.5).hypot(y - 8.5), 1.2)
}

pub fn flat_height(_x: f64, _y: f64) -> f64 {
    0.0
}

/// Straight valley along `y = 5` between two ridges.
pub fn corridor_height(_x: f64, y: f64) -> f64 {
    0.3 + 2.0 * (gauss(y - 2.0, 0.9) + gauss(y - 8.0, 0.9))
}

pub struct Fixture {
    pub name: &'static str,
    pub height: fn(f64, f64) -> f64,
    pub config: PlannerConfig,
}

/// Heights at the grid nodes, row 0 at the top.
pub fn sample_heights(f: fn(f64, f64) -> f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(GRID_N * GRID_N);
    for row in 0..GRID_N {
        let y = (GRID_N - 1 - row) as f64 * CELL;
        for col in 0..GRID_N {
            h.push(f(col as f64 * CELL, y));
        }
    }
    h
}

fn disc(x: f64, y: f64, radius: f64) -> RegionSpec {
    RegionSpec::Disc { center: [x, y], radius }
}

fn config(name: &str, initial: RegionSpec, target: RegionSpec, obstacles: Vec<RegionSpec>) -> PlannerConfig {
    PlannerConfig {
        terrain: TerrainSection { path: PathBuf::from(format!("{name}.csv")), cell_size: CELL, origin: [0.0, 0.0] },
        domain: DomainSection { bounds_min: [0.0, 0.0], bounds_max: [SIDE, SIDE], initial, target, obstacles },
        basis: BasisSection::default(),
        operator: OperatorSection::default(),
        lp: LpSection::default(),
        control: ControlSection::default(),
        baseline: BaselineSection::default(),
        output: OutputSection { dir: PathBuf::from(format!("out/{name}")) },
    }
}

impl Fixture {
    pub fn grid(&self) -> TerrainGrid {
        TerrainGrid::new(GRID_N, GRID_N, CELL, Vec2::ZERO, sample_heights(self.height)).expect("fixture terrain is valid")
    }

    /// Writes `<name>.csv` and `<name>.toml` into `dir`; returns the config path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        write_file(&dir.join(format!("{}.csv", self.name)), &heightmap_csv(GRID_N, GRID_N, &sample_heights(self.height)))?;
        let path = dir.join(format!("{}.toml", self.name));
        write_file(&path, &self.config.to_toml())?;
        Ok(path)
    }
}

pub fn mountain_pass() -> Fixture {
    let config = config("mountain_pass", disc(5.0, 1.0, 0.6), disc(5.0, 9.0, 0.9), vec![]);
    Fixture { name: "mountain_pass", height: mountain_pass_height, config }
}

/// A* runs with a plain Euclidean-distance heuristic in metres, which is
/// far from admissible against costs of order `p · length`.
pub fn c_shape() -> Fixture {
    let mut config = config("c_shape", disc(4.0, 5.0, 0.5), disc(8.3, 5.0, 0.9), vec![]);
    config.basis.sigma_scale = 0.5;
    config.baseline.heuristic_weight = 1.0 / config.baseline.kappa;
    Fixture { name: "c_shape", height: c_shape_height, config }
}

pub fn pit() -> Fixture {
    let mut config = config("pit", disc(1.0, 5.0, 0.5), disc(9.0, 5.0, 0.9), vec![disc(5.0, 5.3, 0.5)]);
    config.basis.sigma_scale = 0.5;
    Fixture { name: "pit", height: pit_height, config }
}

/// `p ≡ 0`; the planner needs a cost floor to prefer anything.
pub fn flat() -> Fixture {
    let mut config = config("flat", disc(2.0, 2.0, 0.5), disc(8.0, 8.0, 0.9), vec![]);
    config.basis.p_floor = 0.05;
    Fixture { name: "flat", height: flat_height, config }
}

pub fn corridor() -> Fixture {
    let config = config("corridor", disc(1.5, 5.0, 0.5), disc(8.5, 5.0, 0.9), vec![]);
    Fixture { name: "corridor", height: corridor_height, config }
}

pub fn all() -> Vec<Fixture> {
    vec![mountain_pass(), c_shape(), pit(), flat(), corridor()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
