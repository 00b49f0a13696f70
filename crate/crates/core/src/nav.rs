//! Assembly of the finite-dimensional navigation program.
//!
//! Decision variables are stacked as `v = (r, z₁…z_m, w₁…w_m)`: `r` holds the
//! density coefficients, `z_j` the flux coefficients along control direction
//! `j`, and `w_j` the epigraph coefficients bounding `|z_j|`.
//!
//! When reverse generators are supplied the flux is split by sign instead:
//! `v = (r, z₁⁺…z_m⁺, z₁⁻…z_m⁻)`, all non-negative, with `z_j⁺` transported by
//! the generator of `+e_j` and `z_j⁻` by that of `-e_j`. Upwind generators
//! only move mass along their own direction, so a negative multiple of the
//! forward generator is a poor stand-in for reverse transport. The split form
//! has the same variable count, and `z_j = z_j⁺ - z_j⁻`, `w_j = z_j⁺ + z_j⁻`
//! recover the signed quantities.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{BasisSet, Quadrature};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::lp::{LpSolution, LpStandardForm, LpStatus};
use crate::operator::GeneratorMatrix;
use crate::terrain::Region;

#[derive(Debug, Clone, PartialEq)]
pub struct NavProgram {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub t: Vec<f64>,
    pub p_f: GeneratorMatrix,
    pub p_g: Vec<GeneratorMatrix>,
    /// Generators of `-e_j`; empty for the signed layout.
    pub p_g_rev: Vec<GeneratorMatrix>,
    pub obstacle_rows: Vec<Vec<f64>>,
    /// Adds `v_max · r - Σ_j w_j ≥ 0` coefficient-wise, so `|ρ̄|₁ ≤ v_max ρ`
    /// pointwise. Without it `r` is absent from the constraints under zero
    /// drift and the optimum is `r = 0`.
    pub speed_limit: Option<f64>,
}

impl NavProgram {
    pub fn q(&self) -> usize {
        self.t.len()
    }

    pub fn m(&self) -> usize {
        self.p_g.len()
    }

    pub fn num_vars(&self) -> usize {
        (1 + 2 * self.m()) * self.q()
    }

    pub fn is_split(&self) -> bool {
        !self.p_g_rev.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.q();
        let ok = self.b1.len() == q
            && self.b2.len() == q
            && self.p_f.dim() == q
            && self.p_f.p.is_square()
            && self.p_g.iter().all(|g| g.dim() == q && g.p.is_square())
            && (self.p_g_rev.is_empty() || self.p_g_rev.len() == self.p_g.len())
            && self.p_g_rev.iter().all(|g| g.dim() == q && g.p.is_square())
            && self.obstacle_rows.iter().all(|r| r.len() == q);
        if !ok {
            return Err(Error::Validation("navigation program dimensions are inconsistent".into()));
        }
        if self.p_g.is_empty() {
            return Err(Error::Validation("at least one control direction is required".into()));
        }
        if let Some(v) = self.speed_limit {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(alloc::format!("speed limit must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `-P_f r - Σ_j P_gj z_j - t` for the signed layout. In the split layout
    /// the flux parts are `(w ± z) / 2`.
    pub fn equality_residual(&self, r: &[f64], z: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<f64> {
        let mut res = self.p_f.apply(r);
        let mut add = |g: &GeneratorMatrix, v: &[f64]| {
            let gz = g.apply(v);
            res.iter_mut().zip(gz).for_each(|(a, b)| *a += b);
        };
        for j in 0..self.m() {
            if self.is_split() {
                let plus: Vec<f64> = w[j].iter().zip(&z[j]).map(|(w, z)| 0.5 * (w + z)).collect();
                let minus: Vec<f64> = w[j].iter().zip(&z[j]).map(|(w, z)| 0.5 * (w - z)).collect();
                add(&self.p_g[j], &plus);
                add(&self.p_g_rev[j], &minus);
            } else {
                add(&self.p_g[j], &z[j]);
            }
        }
        res.iter().zip(&self.t).map(|(a, t)| -a - t).collect()
    }
}

/// `∫_{X_b} Φ dx` by quadrature: entry `k` sums `w_i φ_k(x_i)` over the nodes
/// inside the obstacle. An all-zero row means no node fell inside.
pub fn obstacle_row(basis: &BasisSet, obstacle: &Region, quad: &Quadrature) -> Vec<f64> {
    let q = basis.len();
    let mut row = vec![0.0; q];
    let mut phi = vec![0.0; q];
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        if obstacle.contains(*x) {
            basis.eval_into(*x, &mut phi);
            crate::linalg::axpy(*w, &phi, &mut row);
        }
    }
    row
}

/// Zeroes entries below `rel_tol × max(row)`. Gaussian tails never vanish,
/// so without a cut every coefficient would be pinned to zero.
pub fn truncate_support(row: &[f64], rel_tol: f64) -> Vec<f64> {
    let max = row.iter().copied().fold(0.0, f64::max);
    row.iter().map(|&v| if v >= rel_tol * max { v } else { 0.0 }).collect()
}

/// Builds the LP. Constraint layout for the signed form:
///
/// * `Q` equality rows `-P_f r - Σ_j P_gj z_j = t`;
/// * one equality row per obstacle, `row · (r + Σ_j w_j) = 0`; all three
///   factors are non-negative, so both the density and the flux magnitude
///   vanish on the obstacle;
/// * `2mQ` inequality rows `w_j - z_j ≥ 0` and `w_j + z_j ≥ 0`;
/// * bounds `r ≥ 0`, `w ≥ 0`, `z` free.
///
/// The split form replaces `P_gj z_j` by `P_gj z_j⁺ + P⁻_gj z_j⁻`, drops the
/// epigraph rows and bounds every variable below by zero. A speed limit
/// appends `Q` rows `v_max r - Σ_j w_j ≥ 0` after the epigraph rows.
pub fn assemble(program: &NavProgram) -> LpStandardForm {
    let q = program.q();
    let m = program.m();
    let n = (1 + 2 * m) * q;
    let split = program.is_split();
    let z_off = |j: usize| q + j * q;
    let w_off = |j: usize| q + m * q + j * q;

    let mut c = vec![0.0; n];
    c[..q].copy_from_slice(&program.b1);
    for j in 0..m {
        c[w_off(j)..w_off(j) + q].copy_from_slice(&program.b2);
        if split {
            c[z_off(j)..z_off(j) + q].copy_from_slice(&program.b2);
        }
    }

    let k = q + program.obstacle_rows.len();
    let mut a_eq = Matrix::zeros(k, n);
    let mut b_eq = vec![0.0; k];
    let put = |row: &mut [f64], off: usize, src: &[f64]| {
        for (dst, s) in row[off..off + q].iter_mut().zip(src) {
            *dst = -s;
        }
    };
    for i in 0..q {
        let row = a_eq.row_mut(i);
        put(row, 0, program.p_f.p.row(i));
        for (j, g) in program.p_g.iter().enumerate() {
            put(row, z_off(j), g.p.row(i));
        }
        for (j, g) in program.p_g_rev.iter().enumerate() {
            put(row, w_off(j), g.p.row(i));
        }
        b_eq[i] = program.t[i];
    }
    for (o, orow) in program.obstacle_rows.iter().enumerate() {
        let row = a_eq.row_mut(q + o);
        row[..q].copy_from_slice(orow);
        for j in 0..m {
            row[w_off(j)..w_off(j) + q].copy_from_slice(orow);
            if split {
                row[z_off(j)..z_off(j) + q].copy_from_slice(orow);
            }
        }
    }

    let epigraph = if split { 0 } else { 2 * m * q };
    let speed = if program.speed_limit.is_some() { q } else { 0 };
    let l = epigraph + speed;
    let mut a_ineq = Matrix::zeros(l, n);
    if !split {
        for j in 0..m {
            for i in 0..q {
                let minus = 2 * j * q + i;
                let plus = minus + q;
                a_ineq[(minus, w_off(j) + i)] = 1.0;
                a_ineq[(minus, z_off(j) + i)] = -1.0;
                a_ineq[(plus, w_off(j) + i)] = 1.0;
                a_ineq[(plus, z_off(j) + i)] = 1.0;
            }
        }
    }
    if let Some(v) = program.speed_limit {
        for i in 0..q {
            let row = epigraph + i;
            a_ineq[(row, i)] = v;
            for j in 0..m {
                a_ineq[(row, w_off(j) + i)] = -1.0;
                if split {
                    a_ineq[(row, z_off(j) + i)] = -1.0;
                }
            }
        }
    }
    let b_ineq = vec![0.0; l];

    let mut lower = vec![0.0; n];
    if !split {
        for j in 0..m {
            lower[z_off(j)..z_off(j) + q].fill(f64::NEG_INFINITY);
        }
    }
    LpStandardForm { c, a_eq, b_eq, a_ineq, b_ineq, lower }
}

/// Coefficients of `ρ = Φᵀr`, `ρ̄_j = Φᵀz_j` and `Γ_j = Φᵀw_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySolution {
    pub r: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub objective: f64,
}

/// Stacks coefficient blocks into the LP variable vector.
pub fn stack_variables(r: &[f64], z: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<f64> {
    let mut v = r.to_vec();
    z.iter().for_each(|zj| v.extend_from_slice(zj));
    w.iter().for_each(|wj| v.extend_from_slice(wj));
    v
}

/// Slices an optimal LP solution back into coefficient blocks.
pub fn extract_density(sol: &LpSolution, program: &NavProgram) -> Result<DensitySolution> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status));
    }
    let q = program.q();
    let m = program.m();
    if sol.primal.len() != (1 + 2 * m) * q {
        return Err(Error::Validation("solution length does not match the program".into()));
    }
    let v = &sol.primal;
    let mut r = v[..q].to_vec();
    for x in r.iter_mut() {
        if *x < 0.0 && *x >= -1e-9 {
            *x = 0.0;
        }
    }
    let first = |j: usize| &v[q + j * q..q + (j + 1) * q];
    let second = |j: usize| &v[q + (m + j) * q..q + (m + j + 1) * q];
    let (z, w): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if program.is_split() {
        (0..m)
            .map(|j| {
                let (p, n) = (first(j), second(j));
                (p.iter().zip(n).map(|(a, b)| a - b).collect(), p.iter().zip(n).map(|(a, b)| a + b).collect())
            })
            .unzip()
    } else {
        (0..m).map(|j| (first(j).to_vec(), second(j).to_vec())).unzip()
    };
    let w_sum: Vec<f64> = (0..q).map(|i| w.iter().map(|wj| wj[i]).sum()).collect();
    let objective = dot(&program.b1, &r) + dot(&program.b2, &w_sum);
    Ok(DensitySolution { r, z, w, objective })
}
