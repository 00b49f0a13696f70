//! End-to-end density planner: basis, operators, LP, feedback and rollout.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{basis_masses, build_basis, build_quadrature, cost_vectors, fit_h0_nonneg, BasisSet, CostVectors, Quadrature};
use crate::control::{rollout, ControlField, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::lp::{InteriorPoint, LpSolution, LpSolver, LpStandardForm};
use crate::nav::{assemble, extract_density, obstacle_row, truncate_support, DensitySolution, NavProgram};
use crate::operator::{estimate_generator, FieldTag, GeneratorMatrix, VectorField};
use crate::terrain::{Domain, TerrainGrid};

#[derive(Debug, Clone)]
pub struct PlannerParams {
    pub basis_counts: (usize, usize),
    pub sigma_scale: f64,
    pub exclude_target: bool,
    pub quad_resolution: (usize, usize),
    pub samples: usize,
    pub op_dt: f64,
    pub seed: u64,
    /// `None` picks the trace-scaled default.
    pub lambda_reg: Option<f64>,
    /// `None` is the zero drift of a single integrator.
    pub drift: Option<VectorField>,
    /// Sign-split flux with reverse generators instead of a free signed flux.
    pub split_flux: bool,
    /// Rescale generators so they conserve `∫ Φᵀc` rather than `Σ c`.
    pub mass_weighting: bool,
    /// Transfers between centres farther apart than this many lattice
    /// spacings are dropped (see `GeneratorMatrix::localized`); 0 keeps all.
    pub locality: f64,
    /// Drop transfers that do not point ahead of the field.
    pub upwind: bool,
    /// Couple density and flux through `|ρ̄|₁ ≤ u_max ρ`.
    pub couple_speed: bool,
    pub lp_tol: f64,
    pub max_iter: usize,
    pub p_floor: f64,
    pub obstacle_support_tol: f64,
    pub rollout_dt: f64,
    pub t_max: f64,
    pub epsilon_scale: f64,
    pub u_max: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            basis_counts: (15, 15),
            sigma_scale: 1.0,
            exclude_target: true,
            quad_resolution: (80, 80),
            samples: 20000,
            op_dt: 0.02,
            seed: 0,
            lambda_reg: None,
            drift: None,
            split_flux: true,
            mass_weighting: true,
            couple_speed: true,
            locality: 1.5,
            upwind: true,
            lp_tol: 1e-8,
            max_iter: 200,
            p_floor: 0.0,
            obstacle_support_tol: 1e-7,
            rollout_dt: 0.01,
            t_max: 20.0,
            epsilon_scale: 1e-6,
            u_max: 1.0,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation(msg.into()));
        if self.samples == 0 {
            return bad("sample count must be positive");
        }
        for (name, v) in [("op_dt", self.op_dt), ("rollout_dt", self.rollout_dt), ("t_max", self.t_max), ("u_max", self.u_max), ("lp_tol", self.lp_tol), ("epsilon_scale", self.epsilon_scale)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(alloc::format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.p_floor >= 0.0) {
            return bad("p_floor must be non-negative");
        }
        if !(0.0..1.0).contains(&self.obstacle_support_tol) {
            return bad("obstacle_support_tol must lie in [0, 1)");
        }
        if !(self.locality >= 0.0) || !self.locality.is_finite() {
            return bad("locality must be non-negative");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }
}

/// Everything the LP needs, kept together for diagnostics and exports.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub basis: BasisSet,
    pub quad: Quadrature,
    pub costs: CostVectors,
    /// Untruncated obstacle rows, one per obstacle.
    pub raw_obstacle_rows: Vec<Vec<f64>>,
    pub program: NavProgram,
}

/// Centers of the absorbing target basis: excluded lattice points, or the
/// target centre when none fell inside.
pub fn sink_centers(basis: &BasisSet, domain: &Domain) -> Vec<Vec2> {
    if basis.excluded().is_empty() {
        vec![domain.target.center()]
    } else {
        basis.excluded().to_vec()
    }
}

/// Generators are fitted on the basis extended by sink functions inside the
/// target and then restricted to the leading block. Mass carried onto the
/// sinks leaves the program, which makes the target absorbing.
pub fn prepare(grid: &TerrainGrid, domain: &Domain, params: &PlannerParams) -> Result<Prepared> {
    params.validate()?;
    domain.validate()?;
    let basis = build_basis(domain, params.basis_counts, params.sigma_scale, params.exclude_target)?;
    let quad = build_quadrature(domain, params.quad_resolution)?;
    let costs = cost_vectors(&basis, grid, &quad, params.p_floor)?;
    let t = fit_h0_nonneg(&basis, domain, &quad, None)?;
    let q = basis.len();
    let sinks = sink_centers(&basis, domain);
    let ext = basis.extended(&sinks)?;
    let spacing = basis.sigma() / params.sigma_scale;

    let mass = if params.mass_weighting {
        Some(basis_masses(&basis, domain.bounds_min, domain.bounds_max, params.quad_resolution))
    } else {
        None
    };
    let fit = |field: &VectorField, tag: FieldTag, seed: u64| -> Result<GeneratorMatrix> {
        let g = estimate_generator(field, tag, domain, &ext, params.samples, params.op_dt, seed, params.lambda_reg)?;
        let g = if params.locality > 0.0 { g.localized(ext.centers(), params.locality * spacing) } else { g };
        let g = if params.upwind { g.upwind(ext.centers(), field) } else { g }.restrict(q);
        Ok(match &mass {
            Some(m) => g.mass_weighted(m),
            None => g,
        })
    };
    let direction = |j: usize, sign: f64, seed: u64| fit(&VectorField::Constant(Vec2::unit(j) * sign), FieldTag::Control(j), seed);
    let s = params.seed;
    let p_g = vec![direction(0, 1.0, s.wrapping_add(1))?, direction(1, 1.0, s.wrapping_add(2))?];
    let p_g_rev = if params.split_flux {
        vec![direction(0, -1.0, s.wrapping_add(3))?, direction(1, -1.0, s.wrapping_add(4))?]
    } else {
        Vec::new()
    };
    let p_f = match &params.drift {
        Some(f) => fit(f, FieldTag::Drift, s)?,
        None => GeneratorMatrix::zero(q, FieldTag::Drift),
    };

    let raw_obstacle_rows: Vec<Vec<f64>> = domain.obstacles.iter().map(|o| obstacle_row(&basis, o, &quad)).collect();
    let obstacle_rows = raw_obstacle_rows.iter().map(|r| truncate_support(r, params.obstacle_support_tol)).collect();
    let program = NavProgram { b1: costs.b1.clone(), b2: costs.b2.clone(), t, p_f, p_g, p_g_rev, obstacle_rows, speed_limit: params.couple_speed.then_some(params.u_max) };
    program.validate()?;
    Ok(Prepared { basis, quad, costs, raw_obstacle_rows, program })
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub lp: LpStandardForm,
    pub solution: LpSolution,
    pub density: DensitySolution,
}

pub fn solve_program<S: LpSolver + ?Sized>(program: &NavProgram, solver: &S) -> Result<Solved> {
    let lp = assemble(program);
    let solution = solver.solve(&lp);
    let density = extract_density(&solution, program)?;
    Ok(Solved { lp, solution, density })
}

pub fn control_field(prepared: &Prepared, density: &DensitySolution, params: &PlannerParams) -> Result<ControlField> {
    let eps = ControlField::default_epsilon(&prepared.basis, &density.r, &prepared.quad, params.epsilon_scale);
    ControlField::new(prepared.basis.clone(), density.r.clone(), density.z.clone(), eps, params.u_max)
}

/// `∫ (p + p₀) (ρ + Σ_j Γ_j) dx` evaluated node by node on the planner's
/// quadrature, with `Γ_j = Φᵀ w_j`. Matches the LP objective up to rounding.
pub fn objective_by_quadrature(prepared: &Prepared, density: &DensitySolution, grid: &TerrainGrid, p_floor: f64) -> Result<f64> {
    let basis = &prepared.basis;
    let mut total = 0.0;
    for (x, w) in prepared.quad.nodes.iter().zip(&prepared.quad.weights) {
        let p = grid.traversability(*x)? + p_floor;
        let mass = basis.expand(&density.r, *x) + density.w.iter().map(|wj| basis.expand(wj, *x)).sum::<f64>();
        total += w * p * mass;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub prepared: Prepared,
    pub solved: Solved,
    pub field: ControlField,
    pub trajectory: Trajectory,
}

/// Full pipeline with the embedded interior-point solver, rolled out from
/// the centre of the initial set.
pub fn plan(grid: &TerrainGrid, domain: &Domain, params: &PlannerParams) -> Result<PlanOutcome> {
    let prepared = prepare(grid, domain, params)?;
    let solver = InteriorPoint { tol: params.lp_tol, max_iter: params.max_iter };
    let solved = solve_program(&prepared.program, &solver)?;
    let field = control_field(&prepared, &solved.density, params)?;
    let trajectory = rollout(&field, domain.initial.center(), params.rollout_dt, params.t_max, domain, grid)?;
    Ok(PlanOutcome { prepared, solved, field, trajectory })
}
