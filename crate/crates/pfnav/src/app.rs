//! Command implementations behind the binary.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 infeasible
//! program or no A* path, 3 target not reached, 4 partial comparison.

use std::path::Path;
use std::time::Instant;

use pfnav_core::baseline::{astar, build_costmap, clip_at_region, path_traversability_cost, GridPath};
use pfnav_core::control::{trajectory_cost, ControlField, Trajectory};
use pfnav_core::lp::{ConflictRow, InteriorPoint, LpSolution, LpSolver, LpStandardForm, LpStatus};
use pfnav_core::nav::{assemble, extract_density, DensitySolution};
use pfnav_core::operator::{generate_snapshots, VectorField};
use pfnav_core::planner::{control_field, objective_by_quadrature, prepare, Prepared};
use pfnav_core::terrain::{Domain, TerrainGrid};
use pfnav_core::Vec2;

use crate::config::PlannerConfig;
use crate::error::CliError;
use crate::io::{density_dump, load_heightmap, lp_dump, path_csv, snapshots_csv, trajectory_csv, write_file, Report};
use crate::svg::{self, Polyline};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NOT_REACHED: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

/// A failed planner run together with the code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        use pfnav_core::Error as E;
        let code = match &e {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(E::Format { .. } | E::Validation(_) | E::OutOfDomain { .. } | E::Precondition(_)) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_INFEASIBLE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<pfnav_core::Error> for Failure {
    fn from(e: pfnav_core::Error) -> Self {
        CliError::Core(e).into()
    }
}

pub struct Scenario {
    pub config: PlannerConfig,
    pub grid: TerrainGrid,
    pub domain: Domain,
}

impl Scenario {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, Failure> {
        let mut config = PlannerConfig::load(path)?;
        if let Some(s) = seed {
            config.operator.seed = s;
        }
        Self::from_config(config)
    }

    pub fn from_config(config: PlannerConfig) -> Result<Self, Failure> {
        config.validate()?;
        let grid = load_heightmap(&config.terrain.path, config.terrain.cell_size, config.origin())?;
        let domain = config.domain()?;
        let (lo, hi) = grid.bounds();
        let inside = |v: Vec2| v.x >= lo.x && v.y >= lo.y && v.x <= hi.x && v.y <= hi.y;
        if !inside(domain.bounds_min) || !inside(domain.bounds_max) {
            return Err(Failure { code: EXIT_CONFIG, message: "domain bounds extend beyond the terrain".into() });
        }
        Ok(Self { config, grid, domain })
    }
}

pub struct PfRun {
    pub prepared: Prepared,
    pub lp: LpStandardForm,
    pub solution: LpSolution,
    pub density: DensitySolution,
    pub field: ControlField,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub solve_seconds: f64,
    pub total_seconds: f64,
}

/// Names the constraint family behind a non-optimal solve.
pub fn diagnose(solution: &LpSolution, prepared: &Prepared) -> String {
    let q = prepared.basis.len();
    match (solution.status, solution.conflict) {
        (_, Some(ConflictRow::Equality(i))) if i < q => {
            let c = prepared.basis.centers()[i];
            format!("infeasible: transport equality row {i} (basis centre {:.3}, {:.3}) cannot be balanced", c.x, c.y)
        }
        (_, Some(ConflictRow::Equality(i))) => format!("infeasible: obstacle row {} conflicts with the transport equalities", i - q),
        (_, Some(ConflictRow::Inequality(i))) => format!("infeasible: inequality row {i} (flux bound) cannot hold"),
        (LpStatus::Infeasible, None) => "infeasible: interior-point certificate over the transport and obstacle equalities".into(),
        (LpStatus::Unbounded, None) => "unbounded objective".into(),
        (status, None) => format!("no optimal solution ({status:?}) within the iteration limit"),
    }
}

pub fn run_pf(s: &Scenario) -> Result<PfRun, Failure> {
    let start = Instant::now();
    let params = s.config.planner_params();
    let prepared = prepare(&s.grid, &s.domain, &params)?;
    let lp = assemble(&prepared.program);
    let t0 = Instant::now();
    let solution = InteriorPoint { tol: params.lp_tol, max_iter: params.max_iter }.solve(&lp);
    let solve_seconds = t0.elapsed().as_secs_f64();
    if solution.status != LpStatus::Optimal {
        return Err(Failure { code: EXIT_INFEASIBLE, message: diagnose(&solution, &prepared) });
    }
    let density = extract_density(&solution, &prepared.program)?;
    let field = control_field(&prepared, &density, &params)?;
    let trajectory = pfnav_core::control::rollout(&field, s.domain.initial.center(), params.rollout_dt, params.t_max, &s.domain, &s.grid)?;
    let cost = trajectory_cost(&trajectory, &s.grid)?;
    Ok(PfRun { prepared, lp, solution, density, field, trajectory, cost, solve_seconds, total_seconds: start.elapsed().as_secs_f64() })
}

pub struct AStarRun {
    pub path: GridPath,
    /// Path actually costed: clipped at the target when configured.
    pub points: Vec<Vec2>,
    pub cost: f64,
    pub seconds: f64,
}

impl AStarRun {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

pub fn run_astar(s: &Scenario) -> Result<AStarRun, Failure> {
    let t0 = Instant::now();
    let [nx, ny] = s.config.baseline.resolution;
    let map = build_costmap(&s.grid, &s.domain, (nx, ny))?;
    let start = map.cell_of(s.domain.initial.center());
    let goal = map.cell_of(s.domain.target.center());
    let path = astar(&map, start, goal, s.config.astar_params())?;
    let mut points = path.points.clone();
    // The rollout starts at the initial centre; start the path there too.
    points[0] = s.domain.initial.center();
    if s.config.baseline.clip_at_target {
        points = clip_at_region(&points, &s.domain.target);
    }
    let cost = path_traversability_cost(&points, &s.grid, s.config.control.u_max)?;
    Ok(AStarRun { path, points, cost, seconds: t0.elapsed().as_secs_f64() })
}

fn max_p(traj: &Trajectory) -> f64 {
    traj.p.iter().copied().fold(0.0, f64::max)
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest `raw_row · r / ‖r‖₁` over the obstacles.
pub fn obstacle_ratio(run: &PfRun) -> f64 {
    let r1: f64 = run.density.r.iter().map(|v| v.abs()).sum();
    run.prepared
        .raw_obstacle_rows
        .iter()
        .map(|row| row.iter().zip(&run.density.r).map(|(a, b)| a * b).sum::<f64>() / r1.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn pf_report(s: &Scenario, run: &PfRun) -> Result<Report, Failure> {
    let program = &run.prepared.program;
    let d = &run.density;
    let residual = norm_inf(&program.equality_residual(&d.r, &d.z, &d.w));
    let quad_obj = objective_by_quadrature(&run.prepared, d, &s.grid, s.config.basis.p_floor)?;
    let t = &run.trajectory;
    let mut r = Report::default();
    r.add("planner", "pf")
        .add("lp_status", format!("{:?}", run.solution.status))
        .add("objective", d.objective)
        .add("objective_quadrature", quad_obj)
        .add("dual_objective", run.solution.dual_objective)
        .add("duality_gap", run.solution.gap)
        .add("equality_residual", residual)
        .add("primal_residual", run.solution.primal_residual)
        .add("dual_residual", run.solution.dual_residual)
        .add("obstacle_ratio", obstacle_ratio(run))
        .add("iterations", run.solution.iterations)
        .add("basis_functions", program.q())
        .add("variables", run.lp.num_vars())
        .add("reached_target", t.reached_target)
        .add("exited_bounds", t.exited_bounds)
        .add("trajectory_cost", run.cost)
        .add("trajectory_length", t.length())
        .add("trajectory_duration", t.duration())
        .add("max_p", max_p(t))
        .add("solve_seconds", format!("{:.3}", run.solve_seconds))
        .add("wall_seconds", format!("{:.3}", run.total_seconds));
    Ok(r)
}

pub fn write_pf_exports(dir: &Path, run: &PfRun, report: &Report) -> Result<(), Failure> {
    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&run.trajectory))?;
    write_file(&dir.join("density.txt"), &density_dump(&run.density, &run.prepared.basis))?;
    write_file(&dir.join("report.txt"), &report.render())?;
    Ok(())
}

pub fn write_snapshot_dumps(s: &Scenario, dir: &Path) -> Result<(), Failure> {
    let o = &s.config.operator;
    let dirs = [("e1", Vec2::new(1.0, 0.0), 1), ("e2", Vec2::new(0.0, 1.0), 2), ("-e1", Vec2::new(-1.0, 0.0), 3), ("-e2", Vec2::new(0.0, -1.0), 4)];
    let count = if o.split_flux { 4 } else { 2 };
    for &(name, v, offset) in dirs.iter().take(count) {
        let data = generate_snapshots(&VectorField::Constant(v), &s.domain, o.samples, o.dt, o.seed.wrapping_add(offset))?;
        write_file(&dir.join(format!("snapshots_{name}.csv")), &snapshots_csv(&data))?;
    }
    Ok(())
}

pub fn cmd_plan(s: &Scenario, out: &Path, snapshots: bool) -> Result<String, Failure> {
    let run = run_pf(s)?;
    let report = pf_report(s, &run)?;
    write_pf_exports(out, &run, &report)?;
    if snapshots {
        write_snapshot_dumps(s, out)?;
    }
    let t = &run.trajectory;
    let msg = format!(
        "objective {:.6}, cost {:.6}, length {:.3} m, {} iterations, {:.2} s",
        run.density.objective,
        run.cost,
        t.length(),
        run.solution.iterations,
        run.total_seconds
    );
    if t.reached_target {
        Ok(msg)
    } else {
        Err(Failure { code: EXIT_NOT_REACHED, message: format!("target not reached after {:.2} s ({msg})", t.duration()) })
    }
}

pub fn astar_report(s: &Scenario, run: &AStarRun) -> Report {
    let mut r = Report::default();
    r.add("planner", "astar")
        .add("heuristic_weight", s.config.baseline.heuristic_weight)
        .add("cells", run.path.cells.len())
        .add("graph_cost", run.path.total_cost)
        .add("clipped_at_target", s.config.baseline.clip_at_target)
        .add("path_cost", run.cost)
        .add("path_length", run.length())
        .add("wall_seconds", format!("{:.3}", run.seconds));
    r
}

pub fn cmd_baseline(s: &Scenario, out: &Path) -> Result<String, Failure> {
    let run = run_astar(s)?;
    write_file(&out.join("path.csv"), &path_csv(&run.points, &s.grid, s.config.control.u_max)?)?;
    write_file(&out.join("baseline_report.txt"), &astar_report(s, &run).render())?;
    Ok(format!("path cost {:.6}, length {:.3} m, {} cells", run.cost, run.length(), run.path.cells.len()))
}

pub fn cmd_compare(s: &Scenario, out: &Path) -> Result<String, Failure> {
    let pf = run_pf(s);
    let astar = run_astar(s);
    let mut table = String::from("planner,path_cost,length,runtime_s,reached\n");
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    match &pf {
        Ok(run) => {
            let t = &run.trajectory;
            table += &format!("pf,{},{},{:.3},{}\n", run.cost, t.length(), run.total_seconds, t.reached_target);
            let report = pf_report(s, run)?;
            write_pf_exports(out, run, &report)?;
            lines.push(Polyline { points: &t.states, color: "#1060ff", label: "density planner" });
            if !t.reached_target {
                failed.push("pf: target not reached".to_string());
            }
        }
        Err(f) => {
            table += "pf,nan,nan,nan,false\n";
            failed.push(format!("pf: {}", f.message));
        }
    }
    match &astar {
        Ok(run) => {
            table += &format!("astar,{},{},{:.3},true\n", run.cost, run.length(), run.seconds);
            write_file(&out.join("path.csv"), &path_csv(&run.points, &s.grid, s.config.control.u_max)?)?;
            write_file(&out.join("baseline_report.txt"), &astar_report(s, run).render())?;
            lines.push(Polyline { points: &run.points, color: "#ff8000", label: "A*" });
        }
        Err(f) => {
            table += "astar,nan,nan,nan,false\n";
            failed.push(format!("astar: {}", f.message));
        }
    }
    write_file(&out.join("comparison.csv"), &table)?;
    write_file(&out.join("overlay.svg"), &svg::render(&s.grid, &s.domain, &lines))?;
    if failed.is_empty() {
        let (pf, astar) = (pf.as_ref().unwrap(), astar.as_ref().unwrap());
        Ok(format!("pf cost {:.6} vs A* cost {:.6}", pf.cost, astar.cost))
    } else {
        Err(Failure { code: EXIT_PARTIAL, message: failed.join("; ") })
    }
}

pub fn cmd_dump_lp(s: &Scenario, out: &Path) -> Result<String, Failure> {
    let prepared = prepare(&s.grid, &s.domain, &s.config.planner_params())?;
    let lp = assemble(&prepared.program);
    write_file(&out.join("lp.txt"), &lp_dump(&lp))?;
    Ok(format!("{} variables, {} equality rows, {} inequality rows", lp.num_vars(), lp.num_eq(), lp.num_ineq()))
}
