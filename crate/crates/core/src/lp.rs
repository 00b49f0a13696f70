//! Linear programs in the form
//!
//! ```text
//!   min  cᵀv
//!   s.t. A_eq v   = b_eq
//!        A_ineq v ≥ b_ineq
//!        v_i ≥ ℓ_i        (ℓ_i = -∞ for free variables)
//! ```
//!
//! solved by a Mehrotra predictor-corrector primal-dual interior-point
//! method. Inequality rows are eliminated blockwise: variables coupled by
//! inequality rows form small independent components, so the reduced KKT
//! matrix only needs a dense factorisation on the equality rows.
//!
//! A presolve pass first removes forcing rows: an equality whose bounded
//! variables all carry coefficients of one sign and whose right-hand side
//! equals the activity at the bounds pins every one of them. Such rows leave
//! the feasible set without interior, which sends the dual iterates to
//! infinity, so they are eliminated to a fixpoint before the iterations.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::linalg::{dot, norm_inf, Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LpStandardForm {
    pub c: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    /// Rows read as `A_ineq v ≥ b_ineq`.
    pub a_ineq: Matrix,
    pub b_ineq: Vec<f64>,
    /// Per-variable lower bound, `f64::NEG_INFINITY` for free variables.
    pub lower: Vec<f64>,
}

impl LpStandardForm {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.b_ineq.len()
    }

    /// Checks dimensions and that every entry is finite (lower bounds may be `-∞`).
    pub fn validate(&self) -> Result<(), String> {
        let n = self.c.len();
        let mut msg = String::new();
        if self.a_eq.rows() != self.b_eq.len() || (self.a_eq.rows() > 0 && self.a_eq.cols() != n) {
            let _ = write!(msg, "equality block is {}x{} for {} rows and {n} variables", self.a_eq.rows(), self.a_eq.cols(), self.b_eq.len());
            return Err(msg);
        }
        if self.a_ineq.rows() != self.b_ineq.len() || (self.a_ineq.rows() > 0 && self.a_ineq.cols() != n) {
            let _ = write!(msg, "inequality block is {}x{} for {} rows and {n} variables", self.a_ineq.rows(), self.a_ineq.cols(), self.b_ineq.len());
            return Err(msg);
        }
        if self.lower.len() != n {
            let _ = write!(msg, "{} lower bounds for {n} variables", self.lower.len());
            return Err(msg);
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.c) || !finite(&self.b_eq) || !finite(&self.b_ineq) || !self.a_eq.is_finite() || !self.a_ineq.is_finite() {
            return Err("NaN or infinite coefficient".into());
        }
        if self.lower.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err("lower bounds must be finite or -inf".into());
        }
        Ok(())
    }

    pub fn objective(&self, v: &[f64]) -> f64 {
        dot(&self.c, v)
    }

    /// Largest violation of equalities, inequalities and bounds at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.num_eq() {
            worst = worst.max(libm::fabs(dot(self.a_eq.row(i), v) - self.b_eq[i]));
        }
        for i in 0..self.num_ineq() {
            worst = worst.max(self.b_ineq[i] - dot(self.a_ineq.row(i), v));
        }
        for (x, l) in v.iter().zip(&self.lower) {
            worst = worst.max(l - x);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual_eq: Vec<f64>,
    /// Multipliers of the `≥` rows, non-negative.
    pub dual_ineq: Vec<f64>,
    /// Multipliers of the lower bounds.
    pub dual_bounds: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// Row proven unsatisfiable by presolve, when that is how infeasibility
    /// was found.
    pub conflict: Option<ConflictRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictRow {
    Equality(usize),
    Inequality(usize),
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Seam for swapping LP back ends.
pub trait LpSolver {
    fn solve(&self, lp: &LpStandardForm) -> LpSolution;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPoint {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

impl LpSolver for InteriorPoint {
    fn solve(&self, lp: &LpStandardForm) -> LpSolution {
        solve_lp(lp, self.tol, self.max_iter)
    }
}

type Sparse = Vec<Vec<(usize, f64)>>;

fn sparse_rows(m: &Matrix, keep: &[usize]) -> Sparse {
    keep.iter()
        .map(|&i| m.row(i).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect())
        .collect()
}

fn transpose_sparse(rows: &Sparse, ncols: usize) -> Sparse {
    let mut cols = vec![Vec::new(); ncols];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            cols[j].push((i, v));
        }
    }
    cols
}

fn spmv(rows: &Sparse, x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
}

/// Group of variables coupled through inequality rows.
struct Component {
    vars: Vec<usize>,
    /// Inequality rows touching these variables.
    ineq_rows: Vec<usize>,
    /// Equality rows touching these variables.
    eq_rows: Vec<usize>,
}

struct Problem {
    n: usize,
    c: Vec<f64>,
    b: Vec<f64>,
    h: Vec<f64>,
    a_rows: Sparse,
    a_cols: Sparse,
    g_rows: Sparse,
    g_cols: Sparse,
    lower: Vec<f64>,
    bounded: Vec<bool>,
    components: Vec<Component>,
    eq_index: Vec<usize>,
    ineq_index: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl Problem {
    fn build(lp: &LpStandardForm) -> Result<Self, LpStatus> {
        let n = lp.num_vars();
        // Empty rows are either vacuous or make the program infeasible.
        let mut eq_index = Vec::new();
        for i in 0..lp.num_eq() {
            if lp.a_eq.row(i).iter().any(|v| *v != 0.0) {
                eq_index.push(i);
            } else if lp.b_eq[i] != 0.0 {
                return Err(LpStatus::Infeasible);
            }
        }
        let mut ineq_index = Vec::new();
        for i in 0..lp.num_ineq() {
            if lp.a_ineq.row(i).iter().any(|v| *v != 0.0) {
                ineq_index.push(i);
            } else if lp.b_ineq[i] > 0.0 {
                return Err(LpStatus::Infeasible);
            }
        }
        let a_rows = sparse_rows(&lp.a_eq, &eq_index);
        let g_rows = sparse_rows(&lp.a_ineq, &ineq_index);
        let a_cols = transpose_sparse(&a_rows, n);
        let g_cols = transpose_sparse(&g_rows, n);
        let bounded: Vec<bool> = lp.lower.iter().map(|l| l.is_finite()).collect();

        let mut parent: Vec<usize> = (0..n).collect();
        for row in &g_rows {
            if let Some(&(first, _)) = row.first() {
                for &(j, _) in &row[1..] {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut comp_of = vec![usize::MAX; n];
        let mut components: Vec<Component> = Vec::new();
        for j in 0..n {
            let root = find(&mut parent, j);
            if comp_of[root] == usize::MAX {
                comp_of[root] = components.len();
                components.push(Component { vars: Vec::new(), ineq_rows: Vec::new(), eq_rows: Vec::new() });
            }
            let ci = comp_of[root];
            comp_of[j] = ci;
            components[ci].vars.push(j);
        }
        for (r, row) in g_rows.iter().enumerate() {
            if let Some(&(j, _)) = row.first() {
                components[comp_of[j]].ineq_rows.push(r);
            }
        }
        let mut mark = vec![usize::MAX; a_rows.len()];
        for (ci, comp) in components.iter_mut().enumerate() {
            for &j in &comp.vars {
                for &(r, _) in &a_cols[j] {
                    if mark[r] != ci {
                        mark[r] = ci;
                        comp.eq_rows.push(r);
                    }
                }
            }
            comp.eq_rows.sort_unstable();
        }
        let b = eq_index.iter().map(|&i| lp.b_eq[i]).collect();
        let h = ineq_index.iter().map(|&i| lp.b_ineq[i]).collect();
        Ok(Self {
            n,
            c: lp.c.clone(),
            b,
            h,
            a_rows,
            a_cols,
            g_rows,
            g_cols,
            lower: lp.lower.clone(),
            bounded,
            components,
            eq_index,
            ineq_index,
        })
    }

    fn k(&self) -> usize {
        self.a_rows.len()
    }

    fn l(&self) -> usize {
        self.g_rows.len()
    }

    fn at_mul(&self, cols: &Sparse, y: &[f64]) -> Vec<f64> {
        cols.iter().map(|c| c.iter().map(|&(i, v)| v * y[i]).sum()).collect()
    }
}

/// Factorised reduced KKT system for one interior-point iterate.
struct Kkt {
    /// Cholesky factors of each component block of `H`.
    blocks: Vec<Cholesky>,
    normal: Option<Cholesky>,
}

struct Iterate {
    x: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    lam: Vec<f64>,
    zx: Vec<f64>,
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dy: Vec<f64>,
    dlam: Vec<f64>,
    dzx: Vec<f64>,
}

const FREE_REG: f64 = 1e-9;

/// Cholesky of a symmetric positive semidefinite matrix, adding a growing
/// multiple of the largest diagonal entry until the factorisation succeeds.
fn factor_regularized(m: &Matrix) -> Option<Cholesky> {
    if let Ok(ch) = Cholesky::factor(m) {
        return Some(ch);
    }
    let k = m.rows();
    let scale = (0..k).map(|i| m[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut reg = 1e-14 * scale;
    for _ in 0..8 {
        let mut r = m.clone();
        for i in 0..k {
            r[(i, i)] += reg;
        }
        if let Ok(ch) = Cholesky::factor(&r) {
            return Some(ch);
        }
        reg *= 100.0;
    }
    None
}

impl Kkt {
    fn factor(p: &Problem, it: &Iterate) -> Option<Self> {
        let k = p.k();
        let mut dvec = vec![0.0; p.n];
        for j in 0..p.n {
            dvec[j] = if p.bounded[j] { it.zx[j] / (it.x[j] - p.lower[j]) } else { FREE_REG };
        }
        let dls: Vec<f64> = it.lam.iter().zip(&it.s).map(|(l, s)| l / s).collect();
        let mut normal = Matrix::zeros(k, k);
        let mut blocks = Vec::with_capacity(p.components.len());
        let mut local = vec![usize::MAX; p.n];
        let mut eq_local = vec![usize::MAX; k];
        for comp in &p.components {
            let nc = comp.vars.len();
            for (a, &j) in comp.vars.iter().enumerate() {
                local[j] = a;
            }
            let mut hc = Matrix::zeros(nc, nc);
            for (a, &j) in comp.vars.iter().enumerate() {
                hc[(a, a)] = dvec[j];
            }
            for &r in &comp.ineq_rows {
                let row = &p.g_rows[r];
                let d = dls[r];
                for &(ja, va) in row {
                    for &(jb, vb) in row {
                        hc[(local[ja], local[jb])] += va * d * vb;
                    }
                }
            }
            let ch = factor_regularized(&hc)?;
            if !comp.eq_rows.is_empty() {
                // Dense slice of A on (eq_rows × vars), then A_C H_C⁻¹ A_Cᵀ.
                let ne = comp.eq_rows.len();
                for (a, &r) in comp.eq_rows.iter().enumerate() {
                    eq_local[r] = a;
                }
                let mut ac = Matrix::zeros(nc, ne);
                for (a, &j) in comp.vars.iter().enumerate() {
                    for &(r, v) in &p.a_cols[j] {
                        ac[(a, eq_local[r])] = v;
                    }
                }
                let w = ch.solve_matrix(&ac);
                for a in 0..ne {
                    let ra = comp.eq_rows[a];
                    for b in 0..=a {
                        let rb = comp.eq_rows[b];
                        let mut s = 0.0;
                        for t in 0..nc {
                            s += ac[(t, a)] * w[(t, b)];
                        }
                        if s != 0.0 {
                            normal[(ra, rb)] += s;
                        }
                    }
                }
            }
            blocks.push(ch);
        }
        let normal = if k > 0 { Some(factor_regularized(&normal)?) } else { None };
        Some(Self { blocks, normal })
    }

    fn h_solve(&self, p: &Problem, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.n];
        for (comp, ch) in p.components.iter().zip(&self.blocks) {
            let mut v: Vec<f64> = comp.vars.iter().map(|&j| rhs[j]).collect();
            ch.solve_in_place(&mut v);
            for (a, &j) in comp.vars.iter().enumerate() {
                out[j] = v[a];
            }
        }
        out
    }

    /// Solves the Newton system for the given residuals and complementarity targets.
    #[allow(clippy::too_many_arguments)]
    fn direction(&self, p: &Problem, it: &Iterate, r_p: &[f64], r_g: &[f64], r_d: &[f64], r_cx: &[f64], r_cs: &[f64]) -> Direction {
        let n = p.n;
        // ρ = r_d - X⁻¹ r_cx - Gᵀ S⁻¹ (r_cs + Λ r_g)
        let tmp: Vec<f64> = (0..p.l()).map(|j| (r_cs[j] + it.lam[j] * r_g[j]) / it.s[j]).collect();
        let gt = p.at_mul(&p.g_cols, &tmp);
        let mut rho = vec![0.0; n];
        for j in 0..n {
            let cx = if p.bounded[j] { r_cx[j] / (it.x[j] - p.lower[j]) } else { 0.0 };
            rho[j] = r_d[j] - cx - gt[j];
        }
        let hinv_rho = self.h_solve(p, &rho);
        let dy = match &self.normal {
            Some(ch) => {
                let ah = spmv(&p.a_rows, &hinv_rho);
                let mut rhs: Vec<f64> = r_p.iter().zip(&ah).map(|(a, b)| a + b).collect();
                ch.solve_in_place(&mut rhs);
                rhs
            }
            None => Vec::new(),
        };
        let aty = p.at_mul(&p.a_cols, &dy);
        let diff: Vec<f64> = aty.iter().zip(&rho).map(|(a, b)| a - b).collect();
        let dx = self.h_solve(p, &diff);
        let gdx = spmv(&p.g_rows, &dx);
        let ds: Vec<f64> = gdx.iter().zip(r_g).map(|(a, b)| a - b).collect();
        let dlam: Vec<f64> = (0..p.l()).map(|j| (r_cs[j] - it.lam[j] * ds[j]) / it.s[j]).collect();
        let dzx: Vec<f64> = (0..n)
            .map(|j| if p.bounded[j] { (r_cx[j] - it.zx[j] * dx[j]) / (it.x[j] - p.lower[j]) } else { 0.0 })
            .collect();
        Direction { dx, ds, dy, dlam, dzx }
    }
}

fn max_step(v: &[f64], dv: &[f64], mask: Option<(&[bool], &[f64])>) -> f64 {
    let mut alpha: f64 = 1.0;
    for i in 0..v.len() {
        let (cur, active) = match mask {
            Some((bounded, lower)) => (v[i] - lower[i], bounded[i]),
            None => (v[i], true),
        };
        if active && dv[i] < 0.0 {
            alpha = alpha.min(-cur / dv[i]);
        }
    }
    alpha
}

fn unsolved(lp: &LpStandardForm, status: LpStatus) -> LpSolution {
    let n = lp.num_vars();
    LpSolution {
        status,
        primal: vec![0.0; n],
        dual_eq: vec![0.0; lp.num_eq()],
        dual_ineq: vec![0.0; lp.num_ineq()],
        dual_bounds: vec![0.0; n],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::INFINITY,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        iterations: 0,
        conflict: None,
    }
}

/// Outcome of the forcing-row presolve.
struct Presolved {
    reduced: LpStandardForm,
    /// Fixed value per original variable, `None` when kept.
    fixed: Vec<Option<f64>>,
    kept_vars: Vec<usize>,
    kept_eq: Vec<usize>,
    offset: f64,
}

fn presolve(lp: &LpStandardForm) -> Result<Option<Presolved>, ConflictRow> {
    let n = lp.num_vars();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let mut active = vec![true; lp.num_eq()];
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..lp.num_eq() {
            if !active[i] {
                continue;
            }
            let row = lp.a_eq.row(i);
            let mut rhs = lp.b_eq[i];
            let (mut pos, mut neg, mut free, mut any) = (false, false, false, false);
            let mut act = 0.0;
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match fixed[j] {
                    Some(v) => rhs -= a * v,
                    None => {
                        any = true;
                        free |= !lp.lower[j].is_finite();
                        pos |= a > 0.0;
                        neg |= a < 0.0;
                        act += a * lp.lower[j];
                    }
                }
            }
            let tol = 1e-12 * (1.0 + libm::fabs(rhs) + libm::fabs(act));
            if !any {
                if libm::fabs(rhs) > tol {
                    return Err(ConflictRow::Equality(i));
                }
                active[i] = false;
                changed = true;
                continue;
            }
            if free || (pos && neg) {
                continue;
            }
            // act is the least (pos) or greatest (neg) attainable activity.
            let gap = if pos { rhs - act } else { act - rhs };
            if gap < -tol {
                return Err(ConflictRow::Equality(i));
            }
            if gap <= tol {
                for (j, &a) in row.iter().enumerate() {
                    if a != 0.0 && fixed[j].is_none() {
                        fixed[j] = Some(lp.lower[j]);
                    }
                }
                active[i] = false;
                changed = true;
            }
        }
    }
    if active.iter().all(|a| *a) {
        return Ok(None);
    }
    let kept_vars: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
    let kept_eq: Vec<usize> = (0..lp.num_eq()).filter(|&i| active[i]).collect();
    let value = |j: usize| fixed[j].unwrap_or(0.0);
    let reduce = |m: &Matrix, rows: &[usize], rhs: &[f64]| {
        let mut out = Matrix::zeros(rows.len(), kept_vars.len());
        let mut b = Vec::with_capacity(rows.len());
        for (a, &i) in rows.iter().enumerate() {
            let row = m.row(i);
            for (c, &j) in kept_vars.iter().enumerate() {
                out[(a, c)] = row[j];
            }
            b.push(rhs[i] - (0..n).filter(|&j| fixed[j].is_some()).map(|j| row[j] * value(j)).sum::<f64>());
        }
        (out, b)
    };
    let (a_eq, b_eq) = reduce(&lp.a_eq, &kept_eq, &lp.b_eq);
    let all_ineq: Vec<usize> = (0..lp.num_ineq()).collect();
    let (a_ineq, b_ineq) = reduce(&lp.a_ineq, &all_ineq, &lp.b_ineq);
    let offset = (0..n).map(|j| lp.c[j] * value(j)).sum();
    let reduced = LpStandardForm {
        c: kept_vars.iter().map(|&j| lp.c[j]).collect(),
        a_eq,
        b_eq,
        a_ineq,
        b_ineq,
        lower: kept_vars.iter().map(|&j| lp.lower[j]).collect(),
    };
    Ok(Some(Presolved { reduced, fixed, kept_vars, kept_eq, offset }))
}

/// Primal-dual interior-point solve. Terminates `Optimal` once the relative
/// primal and dual residuals and the relative duality gap are all below `tol`.
/// Residuals and gap refer to the presolved program; multipliers of rows
/// removed by presolve are reported as zero, and fixed variables carry
/// their reduced cost as bound multiplier.
pub fn solve_lp(lp: &LpStandardForm, tol: f64, max_iter: usize) -> LpSolution {
    let n = lp.num_vars();
    if lp.validate().is_err() {
        return solve_reduced(lp, tol, max_iter);
    }
    let pre = match presolve(lp) {
        Ok(Some(pre)) => pre,
        Ok(None) => return solve_reduced(lp, tol, max_iter),
        Err(row) => {
            return LpSolution { conflict: Some(row), ..unsolved(lp, LpStatus::Infeasible) };
        }
    };
    let inner = solve_reduced(&pre.reduced, tol, max_iter);
    let mut primal = vec![0.0; n];
    for j in 0..n {
        if let Some(v) = pre.fixed[j] {
            primal[j] = v;
        }
    }
    for (a, &j) in pre.kept_vars.iter().enumerate() {
        primal[j] = inner.primal[a];
    }
    let mut dual_eq = vec![0.0; lp.num_eq()];
    for (a, &i) in pre.kept_eq.iter().enumerate() {
        dual_eq[i] = inner.dual_eq[a];
    }
    let mut dual_bounds = vec![0.0; n];
    for (a, &j) in pre.kept_vars.iter().enumerate() {
        dual_bounds[j] = inner.dual_bounds[a];
    }
    let aty = lp.a_eq.tr_mul_vec(&dual_eq);
    let gtl = if lp.num_ineq() > 0 { lp.a_ineq.tr_mul_vec(&inner.dual_ineq) } else { vec![0.0; n] };
    for j in (0..n).filter(|&j| pre.fixed[j].is_some()) {
        dual_bounds[j] = lp.c[j] - aty[j] - gtl[j];
    }
    LpSolution {
        status: inner.status,
        primal,
        dual_eq,
        dual_ineq: inner.dual_ineq,
        dual_bounds,
        objective: inner.objective + pre.offset,
        dual_objective: inner.dual_objective + pre.offset,
        conflict: None,
        ..inner
    }
}

fn solve_reduced(lp: &LpStandardForm, tol: f64, max_iter: usize) -> LpSolution {
    let n = lp.num_vars();

    if lp.validate().is_err() {
        return unsolved(lp, LpStatus::Infeasible);
    }
    let p = match Problem::build(lp) {
        Ok(p) => p,
        Err(status) => return unsolved(lp, status),
    };
    let (k, l) = (p.k(), p.l());
    let nb = p.bounded.iter().filter(|b| **b).count();
    let ncomp = (nb + l) as f64;

    let bnorm = 1.0 + norm_inf(&p.b).max(norm_inf(&p.h));
    let cnorm = 1.0 + norm_inf(&p.c);

    let mut it = Iterate {
        x: (0..n).map(|j| if p.bounded[j] { p.lower[j] + 1.0 } else { 0.0 }).collect(),
        s: vec![1.0; l],
        y: vec![0.0; k],
        lam: vec![1.0; l],
        zx: (0..n).map(|j| if p.bounded[j] { 1.0 } else { 0.0 }).collect(),
    };
    // Inequality slacks start no smaller than the row activity suggests.
    let gx0 = spmv(&p.g_rows, &it.x);
    for j in 0..l {
        it.s[j] = (gx0[j] - p.h[j]).max(1.0);
    }

    let mut status = LpStatus::IterationLimit;
    let mut iterations = 0;
    let (mut pres, mut dres, mut gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let (mut pobj, mut dobj) = (f64::NAN, f64::NAN);

    for iter in 0..=max_iter {
        iterations = iter;
        let ax = spmv(&p.a_rows, &it.x);
        let gx = spmv(&p.g_rows, &it.x);
        let r_p: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let r_g: Vec<f64> = (0..l).map(|j| p.h[j] - gx[j] + it.s[j]).collect();
        let aty = p.at_mul(&p.a_cols, &it.y);
        let gtl = p.at_mul(&p.g_cols, &it.lam);
        let r_d: Vec<f64> = (0..n).map(|j| p.c[j] - aty[j] - gtl[j] - it.zx[j]).collect();

        pobj = dot(&p.c, &it.x);
        let lower_term: f64 = (0..n).filter(|&j| p.bounded[j]).map(|j| p.lower[j] * it.zx[j]).sum();
        let dual_lin = dot(&p.b, &it.y) + dot(&p.h, &it.lam) + lower_term;
        dobj = dual_lin;
        pres = norm_inf(&r_p).max(norm_inf(&r_g)) / bnorm;
        dres = norm_inf(&r_d) / cnorm;
        gap = libm::fabs(pobj - dobj) / (1.0 + libm::fabs(pobj).max(libm::fabs(dobj)));
        let comp_sum: f64 = (0..n).filter(|&j| p.bounded[j]).map(|j| (it.x[j] - p.lower[j]) * it.zx[j]).sum::<f64>()
            + dot(&it.s, &it.lam);
        let mu = if ncomp > 0.0 { comp_sum / ncomp } else { 0.0 };

        if pres <= tol && dres <= tol && gap <= tol {
            status = LpStatus::Optimal;
            break;
        }

        // Farkas-type certificates read off diverging iterates.
        if dual_lin > 0.0 {
            let ray = (0..n).map(|j| aty[j] + gtl[j] + it.zx[j]).map(libm::fabs).fold(0.0, f64::max);
            if ray / dual_lin < 1e-9 && pres > tol {
                status = LpStatus::Infeasible;
                break;
            }
        }
        let shifted: Vec<f64> = (0..n).map(|j| if p.bounded[j] { it.x[j] - p.lower[j] } else { it.x[j] }).collect();
        let cdir = dot(&p.c, &shifted);
        if cdir < 0.0 {
            let ax_dir = spmv(&p.a_rows, &shifted);
            let gx_dir = spmv(&p.g_rows, &shifted);
            let viol = norm_inf(&ax_dir).max(gx_dir.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max));
            if viol / -cdir < 1e-9 && dres > tol {
                status = LpStatus::Unbounded;
                break;
            }
        }
        if iter == max_iter {
            break;
        }

        let kkt = match Kkt::factor(&p, &it) {
            Some(kkt) => kkt,
            None => break,
        };

        // Predictor.
        let r_cx_aff: Vec<f64> =
            (0..n).map(|j| if p.bounded[j] { -(it.x[j] - p.lower[j]) * it.zx[j] } else { 0.0 }).collect();
        let r_cs_aff: Vec<f64> = (0..l).map(|j| -it.s[j] * it.lam[j]).collect();
        let aff = kkt.direction(&p, &it, &r_p, &r_g, &r_d, &r_cx_aff, &r_cs_aff);
        let ap = max_step(&it.x, &aff.dx, Some((&p.bounded, &p.lower))).min(max_step(&it.s, &aff.ds, None));
        let ad = max_step(&it.zx, &aff.dzx, Some((&p.bounded, &vec![0.0; n]))).min(max_step(&it.lam, &aff.dlam, None));
        let mu_aff = if ncomp > 0.0 {
            ((0..n)
                .filter(|&j| p.bounded[j])
                .map(|j| (it.x[j] - p.lower[j] + ap * aff.dx[j]) * (it.zx[j] + ad * aff.dzx[j]))
                .sum::<f64>()
                + (0..l).map(|j| (it.s[j] + ap * aff.ds[j]) * (it.lam[j] + ad * aff.dlam[j])).sum::<f64>())
                / ncomp
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { { let s = (mu_aff / mu).clamp(0.0, 1.0); s * s * s } } else { 0.0 };

        // Corrector.
        let r_cx: Vec<f64> = (0..n)
            .map(|j| {
                if p.bounded[j] {
                    sigma * mu - (it.x[j] - p.lower[j]) * it.zx[j] - aff.dx[j] * aff.dzx[j]
                } else {
                    0.0
                }
            })
            .collect();
        let r_cs: Vec<f64> = (0..l).map(|j| sigma * mu - it.s[j] * it.lam[j] - aff.ds[j] * aff.dlam[j]).collect();
        let dir = kkt.direction(&p, &it, &r_p, &r_g, &r_d, &r_cx, &r_cs);
        let eta = 0.99;
        let ap = (eta * max_step(&it.x, &dir.dx, Some((&p.bounded, &p.lower))).min(max_step(&it.s, &dir.ds, None))).min(1.0);
        let ad = (eta * max_step(&it.zx, &dir.dzx, Some((&p.bounded, &vec![0.0; n]))).min(max_step(&it.lam, &dir.dlam, None)))
            .min(1.0);

        for j in 0..n {
            it.x[j] += ap * dir.dx[j];
            it.zx[j] += ad * dir.dzx[j];
        }
        for j in 0..l {
            it.s[j] += ap * dir.ds[j];
            it.lam[j] += ad * dir.dlam[j];
        }
        for j in 0..k {
            it.y[j] += ad * dir.dy[j];
        }
        if !it.x.iter().chain(&it.y).chain(&it.lam).all(|v| v.is_finite()) {
            break;
        }
    }

    let mut dual_eq = vec![0.0; lp.num_eq()];
    for (a, &i) in p.eq_index.iter().enumerate() {
        dual_eq[i] = it.y[a];
    }
    let mut dual_ineq = vec![0.0; lp.num_ineq()];
    for (a, &i) in p.ineq_index.iter().enumerate() {
        dual_ineq[i] = it.lam[a];
    }
    LpSolution {
        status,
        primal: it.x,
        dual_eq,
        dual_ineq,
        dual_bounds: it.zx,
        objective: pobj,
        dual_objective: dobj,
        gap,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
        conflict: None,
    }
}
