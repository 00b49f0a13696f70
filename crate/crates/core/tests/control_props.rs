//! Feedback evaluation, rollout kinematics and cost metering.

use pfnav_core::basis::{build_basis, BasisSet};
use pfnav_core::control::{rollout, trajectory_cost, ControlField, Trajectory};
use pfnav_core::terrain::{Domain, Region, TerrainGrid};
use pfnav_core::Vec2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn strip_domain() -> Domain {
    Domain {
        bounds_min: Vec2::new(-0.5, -0.5),
        bounds_max: Vec2::new(1.5, 0.5),
        initial: Region::Disc { center: Vec2::new(0.0, 0.0), radius: 0.02 },
        target: Region::Disc { center: Vec2::new(1.0, 0.0), radius: 0.05 },
        obstacles: Vec::new(),
    }
}

/// Terrain over the strip with `h = x + 0.5`, so `p` is affine in `x`.
fn ramp() -> TerrainGrid {
    TerrainGrid::new(3, 5, 0.5, Vec2::new(-0.5, -0.5), (0..15).map(|i| (i % 5) as f64 * 0.5).collect()).unwrap()
}

fn strip_basis() -> BasisSet {
    build_basis(&strip_domain(), (9, 5), 0.8, false).unwrap()
}

#[test]
fn density_matches_dot_product() {
    let b = strip_basis();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r: Vec<f64> = (0..b.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
    let f = ControlField::new(b.clone(), r.clone(), vec![vec![0.0; b.len()]; 2], 1e-9, 1.0).unwrap();
    for _ in 0..50 {
        let x = Vec2::new(rng.gen_range(-0.5..1.5), rng.gen_range(-0.5..0.5));
        let mut want = 0.0;
        for (k, c) in b.centers().iter().enumerate() {
            let d2 = (x.x - c.x).powi(2) + (x.y - c.y).powi(2);
            want += r[k] * (-d2 / (2.0 * b.sigma().powi(2))).exp();
        }
        assert!((f.eval_density(x) - want).abs() <= 1e-14 * want.max(1.0));
    }
}

#[test]
fn unit_flow_arrives_on_schedule() {
    let b = strip_basis();
    let q = b.len();
    // Equal expansions give u = (1, 0) everywhere.
    let f = ControlField::new(b, vec![1.0; q], vec![vec![1.0; q], vec![0.0; q]], 1e-9, 1.0).unwrap();
    let tr = rollout(&f, Vec2::ZERO, 0.01, 5.0, &strip_domain(), &ramp()).unwrap();
    assert!(tr.reached_target);
    let arrival = tr.duration();
    assert!((arrival - 0.95).abs() <= 0.01, "arrival {arrival}");
}

#[test]
fn cost_of_a_linear_profile() {
    // p(x) = x₁ on [0, 1], traversed at unit speed.
    let grid = TerrainGrid::new(2, 2, 1.0, Vec2::ZERO, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    let dt = 0.1;
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * dt).collect();
    let states: Vec<Vec2> = times.iter().map(|t| Vec2::new(*t, 0.0)).collect();
    let n = times.len();
    let tr = Trajectory {
        times,
        states,
        controls: vec![Vec2::new(1.0, 0.0); n],
        p: vec![0.0; n],
        cost: vec![0.0; n],
        effort_cost: 0.0,
        reached_target: true,
        exited_bounds: false,
    };
    let c = trajectory_cost(&tr, &grid).unwrap();
    assert!((c - 0.5).abs() <= dt * dt, "cost {c}");
}

/// Strip whose target is its whole right end.
fn finish_line_domain() -> Domain {
    Domain { target: Region::Box { min: Vec2::new(1.0, -0.5), max: Vec2::new(1.5, 0.5) }, ..strip_domain() }
}

/// Closed loop with a sideways component that changes across the strip.
fn curved_field() -> ControlField {
    let b = strip_basis();
    let z2: Vec<f64> = b.centers().iter().map(|c| 0.4 * (3.0 * c.x).sin() - 0.8 * c.y).collect();
    let q = b.len();
    ControlField::new(b, vec![1.0; q], vec![vec![0.9; q], z2], 1e-9, 1.0).unwrap()
}

#[test]
fn rollout_converges_as_the_step_halves() {
    let f = curved_field();
    let (d, g) = (finish_line_domain(), ramp());
    let run = |dt: f64| rollout(&f, Vec2::ZERO, dt, 5.0, &d, &g).unwrap();
    let runs: Vec<Trajectory> = [0.02, 0.01, 0.005, 0.0025].iter().map(|dt| run(*dt)).collect();
    assert!(runs.iter().all(|t| t.reached_target));
    // Costs at a fixed horizon avoid the step quantisation of the arrival time.
    let horizon_cost = |t: &Trajectory| {
        let i = t.times.iter().position(|s| *s >= 0.5 - 1e-12).unwrap();
        t.cost[i]
    };
    let costs: Vec<f64> = runs.iter().map(horizon_cost).collect();
    let arrivals: Vec<f64> = runs.iter().map(|t| t.duration()).collect();
    for w in costs.windows(3) {
        assert!((w[2] - w[1]).abs() <= 4.0 * (w[1] - w[0]).abs() + 1e-15, "costs {costs:?}");
    }
    // Arrival is only resolved to one step.
    for (t, dt) in arrivals.iter().zip([0.02, 0.01, 0.005, 0.0025]) {
        assert!((t - arrivals[3]).abs() <= dt + 0.0025, "arrivals {arrivals:?}");
    }
}

#[test]
fn running_cost_never_decreases() {
    let tr = rollout(&curved_field(), Vec2::ZERO, 0.01, 5.0, &finish_line_domain(), &ramp()).unwrap();
    assert!(tr.reached_target);
    assert!(tr.cost.windows(2).all(|w| w[1] >= w[0]));
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(tr.states.len(), tr.times.len());
}

proptest! {
    #[test]
    fn feedback_respects_the_speed_cap(
        seed in any::<u64>(),
        u_max in 0.1f64..3.0,
        x in -0.5f64..1.5,
        y in -0.5f64..0.5,
    ) {
        let b = strip_basis();
        let q = b.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..1.0)).collect();
        let z: Vec<Vec<f64>> = (0..2).map(|_| (0..q).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let f = ControlField::new(b, r, z, 1e-6, u_max).unwrap();
        prop_assert!(f.feedback(Vec2::new(x, y)).norm() <= u_max * (1.0 + 1e-12));
    }
}
