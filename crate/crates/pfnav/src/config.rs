//! TOML run configuration.
//!
//! Only `[terrain]` and `[domain]` are required; every other section falls
//! back to the defaults below. Relative terrain paths are resolved against
//! the directory holding the configuration file.

use std::path::{Path, PathBuf};

use pfnav_core::baseline::AStarParams;
use pfnav_core::planner::PlannerParams;
use pfnav_core::terrain::{Domain, Region};
use pfnav_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Overrides `[output].dir` when set.
pub const OUT_DIR_ENV: &str = "PFNAV_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub terrain: TerrainSection,
    pub domain: DomainSection,
    #[serde(default)]
    pub basis: BasisSection,
    #[serde(default)]
    pub operator: OperatorSection,
    #[serde(default)]
    pub lp: LpSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerrainSection {
    pub path: PathBuf,
    pub cell_size: f64,
    #[serde(default)]
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Disc { center: [f64; 2], radius: f64 },
    Box { min: [f64; 2], max: [f64; 2] },
}

impl RegionSpec {
    pub fn to_region(self) -> Region {
        match self {
            RegionSpec::Disc { center, radius } => Region::Disc { center: vec2(center), radius },
            RegionSpec::Box { min, max } => Region::Box { min: vec2(min), max: vec2(max) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub bounds_min: [f64; 2],
    pub bounds_max: [f64; 2],
    pub initial: RegionSpec,
    pub target: RegionSpec,
    #[serde(default)]
    pub obstacles: Vec<RegionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub grid_counts: [usize; 2],
    pub sigma_scale: f64,
    pub exclude_target: bool,
    pub quadrature: [usize; 2],
    /// Additive floor on `p` in the cost vectors.
    pub p_floor: f64,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self { grid_counts: [15, 15], sigma_scale: 0.7, exclude_target: true, quadrature: [60, 60], p_floor: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    pub samples: usize,
    pub dt: f64,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub split_flux: bool,
    pub mass_weighting: bool,
    /// In lattice spacings; 0 disables the cut.
    pub locality: f64,
    pub upwind: bool,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self { samples: 20000, dt: 0.2, seed: 0, lambda: None, split_flux: true, mass_weighting: true, locality: 1.5, upwind: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpSection {
    pub tol: f64,
    pub max_iter: usize,
    pub couple_speed: bool,
    pub obstacle_support_tol: f64,
}

impl Default for LpSection {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, couple_speed: true, obstacle_support_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub dt: f64,
    pub t_max: f64,
    pub epsilon_scale: f64,
    pub u_max: f64,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self { dt: 0.05, t_max: 60.0, epsilon_scale: 1e-6, u_max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub resolution: [usize; 2],
    pub heuristic_weight: f64,
    pub kappa: f64,
    /// Cut the A* path where it first enters the target, like the rollout.
    pub clip_at_target: bool,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self { resolution: [100, 100], heuristic_weight: 1.0, kappa: 1e-3, clip_at_target: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn vec2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn in_range(name: &str, v: f64, lo: f64, hi: f64, lo_open: bool) -> Result<(), CliError> {
    let above = if lo_open { v > lo } else { v >= lo };
    check(above && v <= hi, || {
        let open = if lo_open { "(" } else { "[" };
        format!("{name} = {v} is outside {open}{lo}, {hi}]")
    })
}

fn count_range(name: &str, v: [usize; 2], lo: usize, hi: usize) -> Result<(), CliError> {
    check(v.iter().all(|c| (lo..=hi).contains(c)), || format!("{name} = {v:?}: each count must lie in [{lo}, {hi}]"))
}

impl PlannerConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serialises")
    }

    /// Reads, resolves the terrain path and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.terrain.path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.terrain.path = dir.join(&cfg.terrain.path);
            }
        }
        cfg.validate()?;
        check(cfg.terrain.path.is_file(), || format!("terrain file {} does not exist", cfg.terrain.path.display()))?;
        Ok(cfg)
    }

    /// Numeric ranges and set relations. File existence is checked by `load`.
    pub fn validate(&self) -> Result<(), CliError> {
        in_range("terrain.cell_size", self.terrain.cell_size, 0.0, 1e6, true)?;
        check(self.terrain.origin.iter().all(|v| v.is_finite()), || "terrain.origin must be finite".into())?;

        let b = &self.basis;
        count_range("basis.grid_counts", b.grid_counts, 2, 40)?;
        check(b.grid_counts[0] * b.grid_counts[1] <= 900, || format!("basis.grid_counts = {:?} exceeds 900 functions", b.grid_counts))?;
        in_range("basis.sigma_scale", b.sigma_scale, 0.0, 5.0, true)?;
        count_range("basis.quadrature", b.quadrature, 2, 400)?;
        in_range("basis.p_floor", b.p_floor, 0.0, 1.0, false)?;

        let o = &self.operator;
        check((1..=10_000_000).contains(&o.samples), || format!("operator.samples = {} is outside [1, 10000000]", o.samples))?;
        in_range("operator.dt", o.dt, 0.0, 10.0, true)?;
        if let Some(l) = o.lambda {
            in_range("operator.lambda", l, 0.0, 1e6, true)?;
        }
        in_range("operator.locality", o.locality, 0.0, 100.0, false)?;

        in_range("lp.tol", self.lp.tol, 0.0, 1e-2, true)?;
        check((1..=10_000).contains(&self.lp.max_iter), || format!("lp.max_iter = {} is outside [1, 10000]", self.lp.max_iter))?;
        check((0.0..1.0).contains(&self.lp.obstacle_support_tol), || format!("lp.obstacle_support_tol = {} is outside [0, 1)", self.lp.obstacle_support_tol))?;

        let c = &self.control;
        in_range("control.dt", c.dt, 0.0, 1.0, true)?;
        in_range("control.t_max", c.t_max, 0.0, 1e4, true)?;
        check(c.epsilon_scale > 0.0 && c.epsilon_scale < 1.0, || format!("control.epsilon_scale = {} is outside (0, 1)", c.epsilon_scale))?;
        in_range("control.u_max", c.u_max, 0.0, 100.0, true)?;

        count_range("baseline.resolution", self.baseline.resolution, 2, 2000)?;
        in_range("baseline.heuristic_weight", self.baseline.heuristic_weight, 0.0, 1e9, false)?;
        in_range("baseline.kappa", self.baseline.kappa, 0.0, 1.0, true)?;

        self.domain().map(|_| ())
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let d = &self.domain;
        let obstacles = d.obstacles.iter().map(|o| o.to_region()).collect();
        Domain::new(vec2(d.bounds_min), vec2(d.bounds_max), d.initial.to_region(), d.target.to_region(), obstacles)
            .map_err(|e| CliError::Config(format!("domain: {e}")))
    }

    pub fn origin(&self) -> Vec2 {
        vec2(self.terrain.origin)
    }

    pub fn planner_params(&self) -> PlannerParams {
        let (b, o, c) = (&self.basis, &self.operator, &self.control);
        PlannerParams {
            basis_counts: (b.grid_counts[0], b.grid_counts[1]),
            sigma_scale: b.sigma_scale,
            exclude_target: b.exclude_target,
            quad_resolution: (b.quadrature[0], b.quadrature[1]),
            samples: o.samples,
            op_dt: o.dt,
            seed: o.seed,
            lambda_reg: o.lambda,
            drift: None,
            split_flux: o.split_flux,
            mass_weighting: o.mass_weighting,
            locality: o.locality,
            upwind: o.upwind,
            couple_speed: self.lp.couple_speed,
            lp_tol: self.lp.tol,
            max_iter: self.lp.max_iter,
            p_floor: b.p_floor,
            obstacle_support_tol: self.lp.obstacle_support_tol,
            rollout_dt: c.dt,
            t_max: c.t_max,
            epsilon_scale: c.epsilon_scale,
            u_max: c.u_max,
        }
    }

    pub fn astar_params(&self) -> AStarParams {
        AStarParams { heuristic_weight: self.baseline.heuristic_weight, kappa: self.baseline.kappa }
    }

    /// `PFNAV_OUT_DIR` if set, else `[output].dir`.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}
