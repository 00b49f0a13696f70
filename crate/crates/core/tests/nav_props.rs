//! Program assembly against hand-built feasible points, and a small
//! end-to-end plan checked against its own certificates.

use pfnav_core::linalg::norm_inf;
use pfnav_core::nav::{assemble, stack_variables, NavProgram};
use pfnav_core::operator::{FieldTag, GeneratorMatrix};
use pfnav_core::planner::{objective_by_quadrature, plan, PlannerParams};
use pfnav_core::terrain::{Domain, Region, TerrainGrid};
use pfnav_core::{Matrix, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_generator(rng: &mut ChaCha8Rng, q: usize, tag: FieldTag) -> GeneratorMatrix {
    let mut p = Matrix::zeros(q, q);
    for k in 0..q {
        let mut s = 0.0;
        for i in (0..q).filter(|i| *i != k) {
            p[(i, k)] = rng.gen_range(0.0..2.0);
            s += p[(i, k)];
        }
        p[(k, k)] = -s;
    }
    GeneratorMatrix { p, field: tag }
}

#[test]
fn feasible_point_reproduces_equality_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let q = 9;
    let p_g = vec![random_generator(&mut rng, q, FieldTag::Control(0)), random_generator(&mut rng, q, FieldTag::Control(1))];
    let z: Vec<Vec<f64>> = (0..2).map(|_| (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let r: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..1.0)).collect();
    let w: Vec<Vec<f64>> = z.iter().map(|zj| zj.iter().map(|v| v.abs() + 0.1).collect()).collect();
    // Under zero drift the equality reads -Σ_j P_gj z_j = t.
    let mut t = vec![0.0; q];
    for (g, zj) in p_g.iter().zip(&z) {
        for (ti, v) in t.iter_mut().zip(g.apply(zj)) {
            *ti -= v;
        }
    }
    let program = NavProgram {
        b1: vec![1.0; q],
        b2: vec![1.0; q],
        t,
        p_f: GeneratorMatrix::zero(q, FieldTag::Drift),
        p_g,
        p_g_rev: vec![],
        obstacle_rows: vec![],
        speed_limit: None,
    };
    let lp = assemble(&program);
    assert_eq!(lp.num_vars(), 45);
    assert_eq!(lp.num_eq(), 9);
    assert_eq!(lp.num_ineq(), 36);
    let v = stack_variables(&r, &z, &w);
    let av = lp.a_eq.mul_vec(&v);
    for (a, b) in av.iter().zip(&lp.b_eq) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
    assert!(lp.max_violation(&v) <= 1e-12);
    assert!(norm_inf(&program.equality_residual(&r, &z, &w)) <= 1e-12);
}

fn hill(x: f64, y: f64) -> f64 {
    0.2 + (-((x - 3.0).powi(2) + (y - 1.0).powi(2)) / 0.8).exp()
}

fn small_scene() -> (TerrainGrid, Domain) {
    let n = 61;
    let cell = 0.1;
    let heights = (0..n).flat_map(|row| (0..n).map(move |col| hill(col as f64 * cell, (n - 1 - row) as f64 * cell))).collect();
    let grid = TerrainGrid::new(n, n, cell, Vec2::ZERO, heights).unwrap();
    let domain = Domain::new(
        Vec2::ZERO,
        Vec2::new(6.0, 6.0),
        Region::Disc { center: Vec2::new(0.8, 3.0), radius: 0.4 },
        Region::Disc { center: Vec2::new(5.2, 3.0), radius: 0.7 },
        // The truncated support of this row reaches about 1.5 m further out.
        vec![Region::Disc { center: Vec2::new(3.0, 3.5), radius: 0.3 }],
    )
    .unwrap();
    (grid, domain)
}

#[test]
fn small_plan_is_certified_and_consistent() {
    let (grid, domain) = small_scene();
    let params = PlannerParams {
        basis_counts: (12, 12),
        sigma_scale: 0.5,
        quad_resolution: (48, 48),
        samples: 4000,
        op_dt: 0.1,
        obstacle_support_tol: 1e-6,
        ..PlannerParams::default()
    };
    let out = plan(&grid, &domain, &params).unwrap();
    let sol = &out.solved.solution;
    assert!(sol.is_optimal());
    assert!(sol.gap <= 1e-6);
    let program = &out.prepared.program;
    let d = &out.solved.density;

    for (zj, wj) in d.z.iter().zip(&d.w) {
        for (z, w) in zj.iter().zip(wj) {
            assert!(z.abs() <= w + 1e-9);
        }
    }
    assert!(d.r.iter().all(|v| *v >= -1e-9));

    let res = norm_inf(&program.equality_residual(&d.r, &d.z, &d.w));
    assert!(res <= 1e-6 * (1.0 + norm_inf(&program.t)), "equality residual {res}");

    let quad = objective_by_quadrature(&out.prepared, d, &grid, params.p_floor).unwrap();
    assert!((quad - d.objective).abs() <= 1e-8 * d.objective.abs(), "{quad} vs {}", d.objective);

    let r1: f64 = d.r.iter().map(|v| v.abs()).sum();
    for row in &out.prepared.raw_obstacle_rows {
        let mass: f64 = row.iter().zip(&d.r).map(|(a, b)| a * b).sum();
        assert!(mass <= 1e-6 * r1, "obstacle mass {mass} against ‖r‖₁ {r1}");
    }
}
