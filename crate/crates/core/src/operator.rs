//! Data-driven Koopman and Perron-Frobenius generator matrices.
//!
//! The Koopman matrix is the least-squares fit of `Φ(y) ≈ Uᵀ Φ(x)` over
//! snapshot pairs. Clipping negative entries and normalising rows makes it
//! row stochastic; the Perron-Frobenius generator is then `(Ûᵀ - I) / Δt`,
//! acting on density coefficients.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linalg::{Cholesky, Matrix};
use crate::terrain::Domain;

const MAX_RESAMPLES: usize = 100;

/// Planar vector field `ẋ = F(x)`.
#[derive(Debug, Clone, Copy)]
pub enum VectorField {
    /// `F(x) = v`; flows are exact translations.
    Constant(Vec2),
    /// `F(x) = A x + b` with `A` row-major.
    Affine { a: [[f64; 2]; 2], b: Vec2 },
    Custom(fn(Vec2) -> Vec2),
}

impl VectorField {
    pub const ZERO: VectorField = VectorField::Constant(Vec2::ZERO);

    pub fn eval(&self, x: Vec2) -> Vec2 {
        match *self {
            VectorField::Constant(v) => v,
            VectorField::Affine { a, b } => {
                Vec2::new(a[0][0] * x.x + a[0][1] * x.y + b.x, a[1][0] * x.x + a[1][1] * x.y + b.y)
            }
            VectorField::Custom(f) => f(x),
        }
    }

    /// State after `dt`: exact for constant fields, one classical
    /// Runge-Kutta step otherwise.
    pub fn flow(&self, x: Vec2, dt: f64) -> Vec2 {
        match *self {
            VectorField::Constant(v) => x + v * dt,
            _ => rk4_step(|p| self.eval(p), x, dt),
        }
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<F: Fn(Vec2) -> Vec2>(f: F, x: Vec2, dt: f64) -> Vec2 {
    let k1 = f(x);
    let k2 = f(x + k1 * (dt / 2.0));
    let k3 = f(x + k2 * (dt / 2.0));
    let k4 = f(x + k3 * dt);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Snapshot pairs `y_i = s_Δt(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub x: Vec<Vec2>,
    pub y: Vec<Vec2>,
    pub dt: f64,
}

impl SnapshotData {
    pub fn new(x: Vec<Vec2>, y: Vec<Vec2>, dt: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Validation(alloc::format!("{} states but {} successors", x.len(), y.len())));
        }
        if !(dt > 0.0) {
            return Err(Error::Validation(alloc::format!("time step must be positive, got {dt}")));
        }
        Ok(Self { x, y, dt })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Samples `count` states uniformly in the domain bounds and advances each by
/// `dt` along `field`. States whose successor leaves the bounds are redrawn;
/// after 100 failed draws the successor is clamped into the bounds.
pub fn generate_snapshots(field: &VectorField, domain: &Domain, count: usize, dt: f64, seed: u64) -> Result<SnapshotData> {
    if !(dt > 0.0) {
        return Err(Error::Validation(alloc::format!("time step must be positive, got {dt}")));
    }
    let (lo, hi) = (domain.bounds_min, domain.bounds_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    let inside = |p: Vec2| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    for _ in 0..count {
        let mut attempt = 0;
        loop {
            let x = Vec2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
            let y = field.flow(x, dt);
            if inside(y) {
                xs.push(x);
                ys.push(y);
                break;
            }
            attempt += 1;
            if attempt > MAX_RESAMPLES {
                xs.push(x);
                ys.push(Vec2::new(y.x.clamp(lo.x, hi.x), y.y.clamp(lo.y, hi.y)));
                break;
            }
        }
    }
    SnapshotData::new(xs, ys, dt)
}

/// Finite-dimensional Koopman matrix; `normalized` marks the row-stochastic form.
#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanMatrix {
    pub u: Matrix,
    pub normalized: bool,
}

/// Gram matrices `G = Φ(X)Φ(X)ᵀ / P` and `A = Φ(X)Φ(Y)ᵀ / P`.
pub fn gram_matrices(data: &SnapshotData, basis: &BasisSet) -> (Matrix, Matrix) {
    let q = basis.len();
    let mut g = Matrix::zeros(q, q);
    let mut a = Matrix::zeros(q, q);
    let mut px = alloc::vec![0.0; q];
    let mut py = alloc::vec![0.0; q];
    for (x, y) in data.x.iter().zip(&data.y) {
        basis.eval_into(*x, &mut px);
        basis.eval_into(*y, &mut py);
        for i in 0..q {
            let pi = px[i];
            let grow = &mut g.row_mut(i)[..=i];
            for (gij, pj) in grow.iter_mut().zip(&px[..=i]) {
                *gij += pi * pj;
            }
            for (aij, pj) in a.row_mut(i).iter_mut().zip(&py) {
                *aij += pi * pj;
            }
        }
    }
    let inv = 1.0 / data.len().max(1) as f64;
    for i in 0..q {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    g.scale(inv);
    a.scale(inv);
    (g, a)
}

/// Least-squares Koopman matrix from `(G + λI) U = A`. `lambda_reg = None`
/// selects `1e-8 · trace(G) / Q`.
pub fn edmd_fit(data: &SnapshotData, basis: &BasisSet, lambda_reg: Option<f64>) -> Result<KoopmanMatrix> {
    if let Some(l) = lambda_reg {
        if !(l >= 0.0) {
            return Err(Error::Validation(alloc::format!("regularisation must be non-negative, got {l}")));
        }
    }
    let (mut g, a) = gram_matrices(data, basis);
    let q = basis.len();
    let lambda = lambda_reg.unwrap_or(1e-8 * g.trace() / q as f64);
    for i in 0..q {
        g[(i, i)] += lambda;
    }
    let scale = g.trace() / q as f64;
    let floor = 1e-14 * scale;
    let ch = Cholesky::factor_with_floor(&g, floor)
        .map_err(|e| Error::Conditioning { smallest_eigenvalue: e.pivot })?;
    let u = ch.solve_matrix(&a);
    if !u.is_finite() {
        return Err(Error::Conditioning { smallest_eigenvalue: ch.min_pivot() });
    }
    Ok(KoopmanMatrix { u, normalized: false })
}

/// Clips negative entries to zero and scales every row to unit sum. Rows with
/// nothing left after clipping become identity rows.
pub fn normalize_rows(k: &KoopmanMatrix) -> Result<KoopmanMatrix> {
    if !k.u.is_square() {
        return Err(Error::Contract("Koopman matrix must be square"));
    }
    let n = k.u.rows();
    let mut u = k.u.clone();
    for i in 0..n {
        let row = u.row_mut(i);
        for v in row.iter_mut() {
            if !(*v > 0.0) {
                *v = 0.0;
            }
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 && s.is_finite() {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[i] = 1.0;
        }
    }
    Ok(KoopmanMatrix { u, normalized: true })
}

/// Which vector field a generator was estimated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    Drift,
    Control(usize),
}

/// Perron-Frobenius generator acting on density coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub p: Matrix,
    pub field: FieldTag,
}

impl GeneratorMatrix {
    pub fn zero(q: usize, field: FieldTag) -> Self {
        Self { p: Matrix::zeros(q, q), field }
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    /// `1ᵀ P`; zero for a mass-conserving generator.
    pub fn column_sums(&self) -> Vec<f64> {
        self.p.tr_mul_vec(&alloc::vec![1.0; self.p.rows()])
    }

    /// Restriction to the leading `q` basis functions. Mass carried to the
    /// dropped functions leaves the system, which turns them into sinks.
    pub fn restrict(&self, q: usize) -> GeneratorMatrix {
        GeneratorMatrix { p: self.p.leading_block(q), field: self.field }
    }

    /// `D⁻¹ P D` with `D = diag(mass)`. The Markov construction conserves the
    /// plain coefficient sum; after this change of units it conserves
    /// `Σ_k mass_k c_k`, which is `∫ Φᵀc` when `mass_k = ∫ φ_k`.
    pub fn mass_weighted(&self, mass: &[f64]) -> GeneratorMatrix {
        let q = self.dim();
        assert_eq!(mass.len(), q);
        let mut p = self.p.clone();
        for i in 0..q {
            let row = p.row_mut(i);
            for (k, v) in row.iter_mut().enumerate() {
                *v *= mass[k] / mass[i];
            }
        }
        GeneratorMatrix { p, field: self.field }
    }

    /// Drops transfers between basis functions whose centres are farther
    /// apart than `radius` and rebalances the diagonal, so column sums are
    /// unchanged. Over one short step mass can only reach nearby functions;
    /// distant positive entries are regression noise that survived clipping.
    pub fn localized(&self, centers: &[Vec2], radius: f64) -> GeneratorMatrix {
        let q = self.dim();
        assert_eq!(centers.len(), q);
        let mut p = self.p.clone();
        for j in 0..q {
            let mut removed = 0.0;
            for k in (0..q).filter(|&k| k != j) {
                if centers[k].dist(centers[j]) > radius {
                    removed += p[(k, j)];
                    p[(k, j)] = 0.0;
                }
            }
            p[(j, j)] += removed;
        }
        GeneratorMatrix { p, field: self.field }
    }

    /// Keeps only transfers from `c_j` into the open half-plane ahead of the
    /// field at `c_j` and rebalances the diagonal. Pure transport never
    /// moves mass backwards or sideways; those entries are sampling noise,
    /// and they let every function leak into all of its neighbours.
    pub fn upwind(&self, centers: &[Vec2], field: &VectorField) -> GeneratorMatrix {
        let q = self.dim();
        assert_eq!(centers.len(), q);
        let mut p = self.p.clone();
        for j in 0..q {
            let v = field.eval(centers[j]);
            let mut removed = 0.0;
            for k in (0..q).filter(|&k| k != j) {
                if (centers[k] - centers[j]).dot(v) <= 1e-12 * v.norm() && p[(k, j)] != 0.0 {
                    removed += p[(k, j)];
                    p[(k, j)] = 0.0;
                }
            }
            p[(j, j)] += removed;
        }
        GeneratorMatrix { p, field: self.field }
    }

    pub fn apply(&self, coeffs: &[f64]) -> Vec<f64> {
        self.p.mul_vec(coeffs)
    }
}

/// `P = (Ûᵀ - I) / Δt`.
pub fn pf_generator(u_hat: &KoopmanMatrix, dt: f64, field: FieldTag) -> Result<GeneratorMatrix> {
    if !u_hat.normalized {
        return Err(Error::Contract("generator requires a row-normalised Koopman matrix"));
    }
    if !(dt > 0.0) {
        return Err(Error::Validation(alloc::format!("time step must be positive, got {dt}")));
    }
    let mut p = u_hat.u.transpose();
    for i in 0..p.rows() {
        p[(i, i)] -= 1.0;
    }
    p.scale(1.0 / dt);
    Ok(GeneratorMatrix { p, field })
}

/// Snapshots, EDMD fit, normalisation and generator in one call.
pub fn estimate_generator(
    field: &VectorField,
    tag: FieldTag,
    domain: &Domain,
    basis: &BasisSet,
    samples: usize,
    dt: f64,
    seed: u64,
    lambda_reg: Option<f64>,
) -> Result<GeneratorMatrix> {
    let data = generate_snapshots(field, domain, samples, dt, seed)?;
    let u = edmd_fit(&data, basis, lambda_reg)?;
    pf_generator(&normalize_rows(&u)?, dt, tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::Region;

    fn unit_domain() -> Domain {
        Domain {
            bounds_min: Vec2::ZERO,
            bounds_max: Vec2::new(1.0, 1.0),
            initial: Region::Disc { center: Vec2::new(0.2, 0.2), radius: 0.05 },
            target: Region::Disc { center: Vec2::new(0.8, 0.8), radius: 0.05 },
            obstacles: Vec::new(),
        }
    }

    #[test]
    fn upwind_drops_backward_and_lateral() {
        let p = Matrix::from_rows(&[vec![-2.0, 0.5, 1.0], vec![1.5, -1.0, 0.0], vec![0.5, 0.5, -1.0]]);
        let centers = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let g = GeneratorMatrix { p, field: FieldTag::Control(0) }.upwind(&centers, &VectorField::Constant(Vec2::new(1.0, 0.0)));
        assert_eq!(g.p[(1, 0)], 1.5);
        assert_eq!(g.p[(2, 0)], 0.0);
        assert_eq!(g.p[(0, 1)], 0.0);
        assert_eq!(g.p[(0, 2)], 0.0);
        assert_eq!(g.p[(1, 2)], 0.0);
        for s in g.column_sums() {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn localization_keeps_column_sums() {
        let p = Matrix::from_rows(&[vec![-2.0, 0.5, 1.0], vec![1.9, -1.0, 0.0], vec![0.1, 0.5, -1.0]]);
        let centers = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        let g = GeneratorMatrix { p, field: FieldTag::Drift }.localized(&centers, 1.5);
        assert_eq!(g.p[(2, 0)], 0.0);
        assert_eq!(g.p[(0, 2)], 0.0);
        assert_eq!(g.p[(0, 0)], -1.9);
        assert_eq!(g.p[(2, 2)], 0.0);
        assert_eq!(g.p[(1, 2)], 0.0);
        for s in g.column_sums() {
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_translates() {
        let f = VectorField::Constant(Vec2::new(1.0, 0.0));
        assert!((f.flow(Vec2::new(0.2, 0.2), 0.1) - Vec2::new(0.3, 0.2)).norm() < 1e-15);
    }

    #[test]
    fn rk4_on_linear_decay() {
        let f = VectorField::Affine { a: [[-1.0, 0.0], [0.0, -1.0]], b: Vec2::ZERO };
        let y = f.flow(Vec2::new(1.0, 0.0), 0.01);
        assert!((y.x - (-0.01f64).exp()).abs() < 1e-10);
        assert_eq!(y.y, 0.0);
    }

    #[test]
    fn zero_field_snapshots_are_fixed_points() {
        let s = generate_snapshots(&VectorField::ZERO, &unit_domain(), 50, 0.1, 7).unwrap();
        assert_eq!(s.x, s.y);
    }

    #[test]
    fn snapshots_stay_inside_bounds() {
        let f = VectorField::Constant(Vec2::new(3.0, -2.0));
        let s = generate_snapshots(&f, &unit_domain(), 200, 0.05, 1).unwrap();
        for y in &s.y {
            assert!((0.0..=1.0).contains(&y.x) && (0.0..=1.0).contains(&y.y));
        }
        // A field that always exits falls back to clamping.
        let s = generate_snapshots(&VectorField::Constant(Vec2::new(50.0, 0.0)), &unit_domain(), 5, 1.0, 1).unwrap();
        assert!(s.y.iter().all(|y| y.x == 1.0));
    }

    #[test]
    fn snapshots_are_seeded() {
        let f = VectorField::Constant(Vec2::new(1.0, 0.0));
        let a = generate_snapshots(&f, &unit_domain(), 30, 0.05, 42).unwrap();
        let b = generate_snapshots(&f, &unit_domain(), 30, 0.05, 42).unwrap();
        let c = generate_snapshots(&f, &unit_domain(), 30, 0.05, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn normalize_examples() {
        let id = KoopmanMatrix { u: Matrix::identity(3), normalized: false };
        assert_eq!(normalize_rows(&id).unwrap().u, Matrix::identity(3));
        let k = KoopmanMatrix { u: Matrix::from_rows(&[vec![2.0, 2.0, 0.0], vec![-1.0, -1.0, 0.0], vec![0.0, 0.0, 4.0]]), normalized: false };
        let n = normalize_rows(&k).unwrap();
        assert!(n.normalized);
        assert_eq!(n.u.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(n.u.row(1), &[0.0, 1.0, 0.0]);
        let k = KoopmanMatrix { u: Matrix::from_rows(&[vec![-1.0, 3.0], vec![1.0, 1.0]]), normalized: false };
        assert_eq!(normalize_rows(&k).unwrap().u.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn generator_examples() {
        let id = KoopmanMatrix { u: Matrix::identity(4), normalized: true };
        let p = pf_generator(&id, 0.1, FieldTag::Drift).unwrap();
        assert!(p.p.as_slice().iter().all(|v| *v == 0.0));
        let swap = KoopmanMatrix { u: Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]), normalized: true };
        let p = pf_generator(&swap, 1.0, FieldTag::Control(0)).unwrap();
        assert_eq!(p.p, Matrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]));
        let raw = KoopmanMatrix { u: Matrix::identity(2), normalized: false };
        assert!(matches!(pf_generator(&raw, 1.0, FieldTag::Drift), Err(Error::Contract(_))));
    }

    #[test]
    fn restriction_leaks_mass_to_sinks() {
        let u = KoopmanMatrix { u: Matrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]), normalized: true };
        let p = pf_generator(&u, 1.0, FieldTag::Control(0)).unwrap();
        assert_eq!(p.column_sums(), vec![0.0, 0.0]);
        let r = p.restrict(1);
        assert_eq!(r.column_sums(), vec![-0.5]);
    }

    #[test]
    fn singular_gram_is_reported() {
        let basis = BasisSet::new(
            vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)],
            0.5,
        )
        .unwrap();
        // A single sample gives a rank-one Gram matrix.
        let data = SnapshotData::new(vec![Vec2::new(0.5, 0.5)], vec![Vec2::new(0.5, 0.5)], 0.1).unwrap();
        let err = edmd_fit(&data, &basis, Some(0.0)).unwrap_err();
        assert!(matches!(err, Error::Conditioning { .. }));
    }
}
