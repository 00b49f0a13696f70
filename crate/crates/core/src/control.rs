//! Feedback `u = ρ̄ / ρ`, closed-loop rollouts of the single integrator and
//! traversability cost metering.

use alloc::vec::Vec;

use crate::basis::{BasisSet, Quadrature};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::operator::rk4_step;
use crate::terrain::{Domain, TerrainGrid};

/// Smallest admissible density floor.
const EPSILON_ABS_MIN: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub basis: BasisSet,
    pub r: Vec<f64>,
    /// One coefficient vector per control direction; only planar controls are
    /// integrated, so at most two are read.
    pub z: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub u_max: f64,
}

impl ControlField {
    pub fn new(basis: BasisSet, r: Vec<f64>, z: Vec<Vec<f64>>, epsilon: f64, u_max: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Validation(alloc::format!("density floor must be positive, got {epsilon}")));
        }
        if !(u_max > 0.0) {
            return Err(Error::Validation(alloc::format!("speed cap must be positive, got {u_max}")));
        }
        if r.len() != basis.len() || z.iter().any(|zj| zj.len() != basis.len()) || z.is_empty() || z.len() > 2 {
            return Err(Error::Validation("coefficient vectors do not match the basis".into()));
        }
        Ok(Self { basis, r, z, epsilon, u_max })
    }

    /// Density floor `scale × max_i ρ(x_i)` over the quadrature nodes.
    pub fn default_epsilon(basis: &BasisSet, r: &[f64], quad: &Quadrature, scale: f64) -> f64 {
        let peak = quad.nodes.iter().map(|x| basis.expand(r, *x)).fold(0.0, f64::max);
        (scale * peak).max(EPSILON_ABS_MIN)
    }

    /// `ρ(x) = Φ(x) · r`
    pub fn eval_density(&self, x: Vec2) -> f64 {
        self.basis.expand(&self.r, x)
    }

    /// `ρ̄(x)`, one component per control direction.
    pub fn eval_flux(&self, x: Vec2) -> Vec2 {
        let phi = self.basis.eval(x);
        let comp = |j: usize| self.z.get(j).map_or(0.0, |zj| crate::linalg::dot(&phi, zj));
        Vec2::new(comp(0), comp(1))
    }

    /// `u_j = ρ̄_j / max(ρ, ε)`, then scaled down to norm `u_max` if faster.
    pub fn feedback(&self, x: Vec2) -> Vec2 {
        let phi = self.basis.eval(x);
        let rho = crate::linalg::dot(&phi, &self.r);
        let denom = rho.max(self.epsilon);
        let comp = |j: usize| self.z.get(j).map_or(0.0, |zj| crate::linalg::dot(&phi, zj) / denom);
        let u = Vec2::new(comp(0), comp(1));
        let speed = u.norm();
        if speed > self.u_max {
            u * (self.u_max / speed)
        } else {
            u
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec2>,
    pub controls: Vec<Vec2>,
    /// Traversability at each state.
    pub p: Vec<f64>,
    /// Running `∫ p dt`, one entry per sample.
    pub cost: Vec<f64>,
    /// `∫ p |u|₁ dt` over the whole run.
    pub effort_cost: f64,
    pub reached_target: bool,
    pub exited_bounds: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.cost.last().copied().unwrap_or(0.0)
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn length(&self) -> f64 {
        self.states.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

/// Integrates `ẋ = u(x)` with classical Runge-Kutta steps from `x0`. Stops on
/// contact with the target set, at `t_max`, or when a step leaves the bounds.
pub fn rollout(field: &ControlField, x0: Vec2, dt: f64, t_max: f64, domain: &Domain, grid: &TerrainGrid) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::Validation(alloc::format!("rollout step must be positive, got {dt}")));
    }
    if !domain.in_bounds(x0) {
        return Err(Error::Precondition(alloc::format!("start ({}, {}) is outside the domain", x0.x, x0.y)));
    }
    if domain.obstacles.iter().any(|o| o.contains(x0)) {
        return Err(Error::Precondition(alloc::format!("start ({}, {}) lies inside an obstacle", x0.x, x0.y)));
    }
    let mut x = x0;
    let mut u = field.feedback(x);
    let mut p = grid.traversability(x)?;
    let mut traj = Trajectory {
        times: alloc::vec![0.0],
        states: alloc::vec![x],
        controls: alloc::vec![u],
        p: alloc::vec![p],
        cost: alloc::vec![0.0],
        effort_cost: 0.0,
        reached_target: domain.target.contains(x),
        exited_bounds: false,
    };
    let mut step = 0usize;
    while !traj.reached_target {
        let t = step as f64 * dt;
        if t >= t_max - 1e-12 * dt {
            break;
        }
        let next = rk4_step(|s| field.feedback(s), x, dt);
        if !domain.in_bounds(next) || !grid.in_bounds(next) {
            traj.exited_bounds = true;
            break;
        }
        step += 1;
        let u_next = field.feedback(next);
        let p_next = grid.traversability(next)?;
        let cost = traj.total_cost() + 0.5 * dt * (p + p_next);
        traj.effort_cost += 0.5 * dt * (p * u.norm1() + p_next * u_next.norm1());
        traj.times.push(step as f64 * dt);
        traj.states.push(next);
        traj.controls.push(u_next);
        traj.p.push(p_next);
        traj.cost.push(cost);
        x = next;
        u = u_next;
        p = p_next;
        traj.reached_target = domain.target.contains(x);
    }
    Ok(traj)
}

/// Trapezoidal `∫ p(x(t)) dt` over the recorded samples.
pub fn trajectory_cost(traj: &Trajectory, grid: &TerrainGrid) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Precondition("trajectory is empty".into()));
    }
    let p: Vec<f64> = traj.states.iter().map(|x| grid.traversability(*x)).collect::<Result<_>>()?;
    Ok(traj.times.windows(2).zip(p.windows(2)).map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1])).sum())
}
