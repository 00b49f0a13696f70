//! Oracles shared by the test suites. Each binary uses a subset.
#![allow(dead_code)]

use pfnav_core::baseline::CostmapGraph;
use pfnav_core::basis::{build_basis, build_quadrature, BasisSet};
use pfnav_core::linalg::Cholesky;
use pfnav_core::lp::LpStandardForm;
use pfnav_core::operator::{estimate_generator, FieldTag, SnapshotData, VectorField};
use pfnav_core::terrain::{Domain, Region};
use pfnav_core::{Matrix, Vec2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `cᵀx` over the vertices of `{A_eq x = b, G x ≥ h, x ≥ 0}`.
/// Every vertex makes all equalities and `n - k_eq` further constraints tight.
pub fn vertex_oracle(lp: &LpStandardForm) -> Option<f64> {
    let n = lp.num_vars();
    let k_eq = lp.num_eq();
    let k_in = lp.num_ineq();
    if k_eq > n {
        return None;
    }
    // Candidate tight rows: inequalities then the bounds x_i ≥ 0.
    let row = |i: usize| -> (Vec<f64>, f64) {
        if i < k_in {
            (lp.a_ineq.row(i).to_vec(), lp.b_ineq[i])
        } else {
            let mut e = vec![0.0; n];
            e[i - k_in] = 1.0;
            (e, 0.0)
        }
    };
    let mut best: Option<f64> = None;
    for active in combinations(k_in + n, n - k_eq) {
        let mut a: Vec<Vec<f64>> = (0..k_eq).map(|i| lp.a_eq.row(i).to_vec()).collect();
        let mut b = lp.b_eq.clone();
        for &i in &active {
            let (r, v) = row(i);
            a.push(r);
            b.push(v);
        }
        let Some(x) = gauss_solve(a, b) else { continue };
        if lp.max_violation(&x) > 1e-9 {
            continue;
        }
        let obj = lp.objective(&x);
        best = Some(best.map_or(obj, |o: f64| o.min(obj)));
    }
    best
}

/// Random bounded feasible LP with `n` non-negative variables, `k_eq`
/// equalities and `k_in` inequalities, the last of which caps `Σx`.
pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, k_eq: usize, k_in: usize) -> LpStandardForm {
    let x0: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect();
    let mut a_eq = Matrix::zeros(k_eq, n);
    let mut b_eq = vec![0.0; k_eq];
    for i in 0..k_eq {
        for j in 0..n {
            a_eq[(i, j)] = rng.gen_range(-1.0..1.0);
        }
        b_eq[i] = (0..n).map(|j| a_eq[(i, j)] * x0[j]).sum();
    }
    let mut a_in = Matrix::zeros(k_in, n);
    let mut b_in = vec![0.0; k_in];
    for i in 0..k_in - 1 {
        for j in 0..n {
            a_in[(i, j)] = rng.gen_range(-1.0..1.0);
        }
        b_in[i] = (0..n).map(|j| a_in[(i, j)] * x0[j]).sum::<f64>() - rng.gen_range(0.0..0.5);
    }
    let cap = k_in - 1;
    for j in 0..n {
        a_in[(cap, j)] = -1.0;
    }
    b_in[cap] = -(x0.iter().sum::<f64>() + rng.gen_range(0.5..2.0));
    LpStandardForm {
        c: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        a_eq,
        b_eq,
        a_ineq: a_in,
        b_ineq: b_in,
        lower: vec![0.0; n],
    }
}

/// O(V²) Dijkstra over the 8-connected grid with its own edge-cost formula.
pub fn dijkstra(map: &CostmapGraph, start: (usize, usize), goal: (usize, usize), kappa: f64) -> Option<f64> {
    let (nr, nc) = (map.n_rows, map.n_cols);
    let idx = |r: usize, c: usize| r * nc + c;
    let mut dist = vec![f64::INFINITY; nr * nc];
    let mut done = vec![false; nr * nc];
    dist[idx(start.0, start.1)] = 0.0;
    loop {
        let mut u = None;
        for i in 0..nr * nc {
            if !done[i] && dist[i].is_finite() && u.map_or(true, |j: usize| dist[i] < dist[j]) {
                u = Some(i);
            }
        }
        let u = u?;
        if u == idx(goal.0, goal.1) {
            return Some(dist[u]);
        }
        done[u] = true;
        let (ur, uc) = (u / nc, u % nc);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (vr, vc) = (ur as i64 + dr, uc as i64 + dc);
                if vr < 0 || vc < 0 || vr >= nr as i64 || vc >= nc as i64 {
                    continue;
                }
                let v = idx(vr as usize, vc as usize);
                if map.blocked[v] {
                    continue;
                }
                let len = ((dr as f64 * map.cell_h).powi(2) + (dc as f64 * map.cell_w).powi(2)).sqrt();
                let w = len * 0.5 * (map.cost[u] + map.cost[v]) + kappa * len;
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            }
        }
    }
}

pub fn random_map(rng: &mut ChaCha8Rng) -> CostmapGraph {
    let nr = rng.gen_range(2..=15);
    let nc = rng.gen_range(2..=15);
    let cost = (0..nr * nc).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let density = rng.gen_range(0.0..0.35);
    let blocked = (0..nr * nc).map(|_| rng.gen_bool(density)).collect();
    CostmapGraph::from_costs(nr, nc, Vec2::ZERO, 0.5, 0.5, cost, blocked).unwrap()
}

pub fn free_cell(rng: &mut ChaCha8Rng, map: &CostmapGraph) -> (usize, usize) {
    loop {
        let c = (rng.gen_range(0..map.n_rows), rng.gen_range(0..map.n_cols));
        if !map.is_blocked(c) {
            return c;
        }
    }
}

pub fn unit_domain() -> Domain {
    Domain {
        bounds_min: Vec2::ZERO,
        bounds_max: Vec2::new(1.0, 1.0),
        initial: Region::Disc { center: Vec2::new(0.1, 0.1), radius: 0.05 },
        target: Region::Disc { center: Vec2::new(0.9, 0.9), radius: 0.05 },
        obstacles: Vec::new(),
    }
}

pub fn lattice(n: usize, sigma_scale: f64) -> BasisSet {
    build_basis(&unit_domain(), (n, n), sigma_scale, false).unwrap()
}

pub fn gaussian_rbf(c: Vec2, sigma: f64, x: Vec2) -> f64 {
    let d2 = (x.x - c.x).powi(2) + (x.y - c.y).powi(2);
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// `U` from the normal equations with every sum written out and a
/// Gauss-Jordan solve, sharing nothing with the library path.
pub fn normal_equation_oracle(data: &SnapshotData, basis: &BasisSet, lambda: f64) -> Vec<Vec<f64>> {
    let q = basis.len();
    let p = data.x.len() as f64;
    let c = basis.centers();
    let s = basis.sigma();
    let mut g = vec![vec![0.0; q]; q];
    let mut a = vec![vec![0.0; q]; q];
    for (x, y) in data.x.iter().zip(&data.y) {
        for i in 0..q {
            let fi = gaussian_rbf(c[i], s, *x);
            for j in 0..q {
                g[i][j] += fi * gaussian_rbf(c[j], s, *x) / p;
                a[i][j] += fi * gaussian_rbf(c[j], s, *y) / p;
            }
        }
    }
    for (i, row) in g.iter_mut().enumerate() {
        row[i] += lambda;
    }
    // Gauss-Jordan on [G | A].
    for col in 0..q {
        let piv = (col..q).max_by(|&i, &j| g[i][col].abs().total_cmp(&g[j][col].abs())).unwrap();
        g.swap(col, piv);
        a.swap(col, piv);
        let d = g[col][col];
        for k in 0..q {
            g[col][k] /= d;
            a[col][k] /= d;
        }
        for r in 0..q {
            if r != col {
                let f = g[r][col];
                if f != 0.0 {
                    for k in 0..q {
                        g[r][k] -= f * g[col][k];
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    a
}

pub fn rel_frobenius(u: &Matrix, oracle: &[Vec<f64>]) -> f64 {
    let (mut diff, mut norm) = (0.0, 0.0);
    for (i, row) in oracle.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            diff += (u[(i, j)] - v).powi(2);
            norm += v * v;
        }
    }
    (diff / norm).sqrt()
}

/// Relative L² error of `Φᵀ(P c)` against `-∂ψ/∂x` on interior quadrature
/// nodes, where `Φᵀc` is the least-squares fit of a Gaussian bump `ψ`.
pub fn derivative_error(samples: usize, dt: f64, seed: u64) -> f64 {
    let domain = unit_domain();
    let basis = lattice(15, 0.4);
    let q = basis.len();
    let p = estimate_generator(&VectorField::Constant(Vec2::new(1.0, 0.0)), FieldTag::Control(0), &domain, &basis, samples, dt, seed, None)
        .unwrap();
    let (c0, w) = (Vec2::new(0.5, 0.5), 0.15);
    let psi = |x: Vec2| gaussian_rbf(c0, w, x);
    let dpsi_dx = |x: Vec2| -(x.x - c0.x) / (w * w) * psi(x);

    let quad = build_quadrature(&domain, (80, 80)).unwrap();
    let mut normal = Matrix::zeros(q, q);
    let mut rhs = vec![0.0; q];
    for (x, wt) in quad.nodes.iter().zip(&quad.weights) {
        let phi = basis.eval(*x);
        for i in 0..q {
            rhs[i] += wt * phi[i] * psi(*x);
            for j in 0..q {
                normal[(i, j)] += wt * phi[i] * phi[j];
            }
        }
    }
    let reg = 1e-10 * normal.trace() / q as f64;
    for i in 0..q {
        normal[(i, i)] += reg;
    }
    let coeffs = Cholesky::factor(&normal).unwrap().solve(&rhs);
    let rate = p.apply(&coeffs);

    let (mut num, mut den) = (0.0, 0.0);
    for x in quad.nodes.iter().filter(|x| (0.2..=0.8).contains(&x.x) && (0.2..=0.8).contains(&x.y)) {
        let exact = -dpsi_dx(*x);
        num += (basis.expand(&rate, *x) - exact).powi(2);
        den += exact * exact;
    }
    (num / den).sqrt()
}
