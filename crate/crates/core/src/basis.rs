//! Gaussian radial basis, midpoint quadrature over the optimisation domain,
//! and the coefficient vectors of the finite program.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linalg::{axpy, Cholesky, Matrix};
use crate::terrain::{Domain, TerrainGrid};

/// Isotropic Gaussian basis `φ_k(x) = exp(-|x - c_k|² / (2σ²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    centers: Vec<Vec2>,
    sigma: f64,
    /// Lattice points dropped because they fall inside the target set.
    excluded: Vec<Vec2>,
}

impl BasisSet {
    pub fn new(centers: Vec<Vec2>, sigma: f64) -> Result<Self> {
        Self::with_excluded(centers, sigma, Vec::new())
    }

    fn with_excluded(centers: Vec<Vec2>, sigma: f64, excluded: Vec<Vec2>) -> Result<Self> {
        if centers.len() < 4 {
            return Err(Error::Validation(format!("basis needs at least 4 centers, got {}", centers.len())));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Validation(format!("basis width must be positive, got {sigma}")));
        }
        let mut sorted: Vec<(f64, f64)> = centers.iter().map(|c| (c.x, c.y)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("basis centers must be pairwise distinct".into()));
        }
        Ok(Self { centers, sigma, excluded })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn excluded(&self) -> &[Vec2] {
        &self.excluded
    }

    /// Same width, centers followed by `extra` centers.
    pub fn extended(&self, extra: &[Vec2]) -> Result<BasisSet> {
        let mut centers = self.centers.clone();
        centers.extend_from_slice(extra);
        BasisSet::new(centers, self.sigma)
    }

    #[inline]
    pub fn eval_one(&self, k: usize, x: Vec2) -> f64 {
        gaussian(x, self.centers[k], self.sigma)
    }

    pub fn eval_into(&self, x: Vec2, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.centers.len());
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        for (o, c) in out.iter_mut().zip(&self.centers) {
            *o = libm::exp(-(x - *c).norm_sq() * inv).max(f64::MIN_POSITIVE);
        }
    }

    /// `Φ(x)`: every component lies in `(0, 1]`.
    pub fn eval(&self, x: Vec2) -> Vec<f64> {
        let mut out = vec![0.0; self.centers.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// `Φ(x) · coeffs`
    pub fn expand(&self, coeffs: &[f64], x: Vec2) -> f64 {
        debug_assert_eq!(coeffs.len(), self.centers.len());
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        self.centers
            .iter()
            .zip(coeffs)
            .map(|(c, a)| a * libm::exp(-(x - *c).norm_sq() * inv).max(f64::MIN_POSITIVE))
            .sum()
    }
}

#[inline]
fn gaussian(x: Vec2, c: Vec2, sigma: f64) -> f64 {
    libm::exp(-(x - c).norm_sq() / (2.0 * sigma * sigma)).max(f64::MIN_POSITIVE)
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + i as f64 * step })
}

/// Places centers on a uniform `counts.0 × counts.1` lattice spanning the
/// domain bounds, with `σ = sigma_scale × spacing`. When `exclude_target` is
/// set, lattice points inside the target set are dropped and kept aside in
/// [`BasisSet::excluded`].
pub fn build_basis(domain: &Domain, counts: (usize, usize), sigma_scale: f64, exclude_target: bool) -> Result<BasisSet> {
    let (nx, ny) = counts;
    if nx < 2 || ny < 2 {
        return Err(Error::Validation(format!("basis lattice must be at least 2x2, got {nx}x{ny}")));
    }
    if !(sigma_scale > 0.0) {
        return Err(Error::Validation(format!("sigma scale must be positive, got {sigma_scale}")));
    }
    let (lo, hi) = (domain.bounds_min, domain.bounds_max);
    let hx = (hi.x - lo.x) / (nx - 1) as f64;
    let hy = (hi.y - lo.y) / (ny - 1) as f64;
    let sigma = sigma_scale * hx.max(hy);
    let mut centers = Vec::with_capacity(nx * ny);
    let mut excluded = Vec::new();
    for y in linspace(lo.y, hi.y, ny) {
        for x in linspace(lo.x, hi.x, nx) {
            let c = Vec2::new(x, y);
            if exclude_target && domain.target.contains(c) {
                excluded.push(c);
            } else {
                centers.push(c);
            }
        }
    }
    BasisSet::with_excluded(centers, sigma, excluded)
}

/// Weighted nodes realising `∫_{X₁} f dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(Vec2) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Midpoint rule on a uniform cell partition of the domain bounds. Cells whose
/// midpoint lies in the target set are dropped.
pub fn build_quadrature(domain: &Domain, resolution: (usize, usize)) -> Result<Quadrature> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::Validation(format!("quadrature resolution must be at least 2x2, got {nx}x{ny}")));
    }
    let (lo, hi) = (domain.bounds_min, domain.bounds_max);
    let hx = (hi.x - lo.x) / nx as f64;
    let hy = (hi.y - lo.y) / ny as f64;
    let area = hx * hy;
    let mut nodes = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = lo.y + (j as f64 + 0.5) * hy;
        for i in 0..nx {
            let x = Vec2::new(lo.x + (i as f64 + 0.5) * hx, y);
            if !domain.target.contains(x) {
                nodes.push(x);
            }
        }
    }
    let weights = vec![area; nodes.len()];
    Ok(Quadrature { nodes, weights })
}

/// `B₁` and `B₂`, both `∫ (p + p₀) Φ dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVectors {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Quadrature of `(p(x) + p_floor) Φ(x)`. `p_floor` is an optional uniform
/// additive penalty, zero for the plain traversability cost.
pub fn cost_vectors(basis: &BasisSet, grid: &TerrainGrid, quad: &Quadrature, p_floor: f64) -> Result<CostVectors> {
    let q = basis.len();
    let mut b1 = vec![0.0; q];
    let mut phi = vec![0.0; q];
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        let p = grid.traversability(*x)? + p_floor;
        if p == 0.0 {
            continue;
        }
        basis.eval_into(*x, &mut phi);
        axpy(w * p, &phi, &mut b1);
    }
    let b2 = b1.clone();
    Ok(CostVectors { b1, b2 })
}

/// `∫ φ_k dx` over the box `[min, max]` by the midpoint rule.
pub fn basis_masses(basis: &BasisSet, min: Vec2, max: Vec2, resolution: (usize, usize)) -> Vec<f64> {
    let (nx, ny) = resolution;
    let hx = (max.x - min.x) / nx as f64;
    let hy = (max.y - min.y) / ny as f64;
    let mut mass = vec![0.0; basis.len()];
    let mut phi = vec![0.0; basis.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let x = Vec2::new(min.x + (ix as f64 + 0.5) * hx, min.y + (iy as f64 + 0.5) * hy);
            basis.eval_into(x, &mut phi);
            axpy(hx * hy, &phi, &mut mass);
        }
    }
    mass
}

/// Regularised normal equations `(N + λI, b)` of the initial-density fit.
fn h0_normal_equations(basis: &BasisSet, domain: &Domain, quad: &Quadrature, lambda_fit: Option<f64>) -> Result<(Matrix, Vec<f64>)> {
    let area = domain.initial.area();
    if !(area > 0.0) {
        return Err(Error::Precondition("initial set must have positive area".into()));
    }
    let q = basis.len();
    let level = 1.0 / area;
    let mut normal = Matrix::zeros(q, q);
    let mut rhs = vec![0.0; q];
    let mut phi = vec![0.0; q];
    for (x, w) in quad.nodes.iter().zip(&quad.weights) {
        basis.eval_into(*x, &mut phi);
        for i in 0..q {
            let a = w * phi[i];
            let row = &mut normal.row_mut(i)[..=i];
            axpy(a, &phi[..=i], row);
        }
        if domain.initial.contains(*x) {
            axpy(w * level, &phi, &mut rhs);
        }
    }
    for i in 0..q {
        for j in 0..i {
            normal[(j, i)] = normal[(i, j)];
        }
    }
    let mut lambda = lambda_fit.unwrap_or(1e-8 * normal.trace() / q as f64);
    if !(lambda > 0.0) {
        lambda = f64::EPSILON * normal.trace().max(1.0) / q as f64;
    }
    loop {
        let mut reg = normal.clone();
        for i in 0..q {
            reg[(i, i)] += lambda;
        }
        if Cholesky::factor(&reg).is_ok() {
            return Ok((reg, rhs));
        }
        lambda *= 10.0;
    }
}

/// Coefficients `t` of the initial density `h₀ = Φᵀ t`, fitted by Tikhonov
/// regularised least squares to the normalised indicator of the initial set.
/// `lambda_fit = None` selects `1e-8 · trace(N) / Q` for the normal matrix `N`.
pub fn fit_h0(basis: &BasisSet, domain: &Domain, quad: &Quadrature, lambda_fit: Option<f64>) -> Result<Vec<f64>> {
    let (reg, rhs) = h0_normal_equations(basis, domain, quad, lambda_fit)?;
    let ch = Cholesky::factor(&reg).map_err(|e| Error::Conditioning { smallest_eigenvalue: e.pivot })?;
    Ok(ch.solve(&rhs))
}

/// Same fit restricted to `t ≥ 0`, then rescaled to unit mass on `quad`.
/// Negative coefficients of the unconstrained fit ring around the initial
/// set and act as spurious sinks in the program; without them the fit
/// overshoots the mass, hence the rescaling.
pub fn fit_h0_nonneg(basis: &BasisSet, domain: &Domain, quad: &Quadrature, lambda_fit: Option<f64>) -> Result<Vec<f64>> {
    let (reg, rhs) = h0_normal_equations(basis, domain, quad, lambda_fit)?;
    let mut t = nnls_normal(&reg, &rhs)?;
    let mass = quad.integrate(|x| basis.expand(&t, x));
    if !(mass > 0.0) {
        return Err(Error::Precondition("initial density fit has no mass on the quadrature".into()));
    }
    t.iter_mut().for_each(|v| *v /= mass);
    Ok(t)
}

/// Lawson-Hanson active set for `min ½ tᵀ N t - bᵀ t` subject to `t ≥ 0`,
/// with `N` symmetric positive definite.
pub fn nnls_normal(n: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let q = b.len();
    let tol = 1e-13 * b.iter().fold(0.0_f64, |m, v| m.max(libm::fabs(*v))).max(f64::MIN_POSITIVE);
    let mut t = vec![0.0; q];
    let mut passive = vec![false; q];
    let solve_passive = |passive: &[bool]| -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..q).filter(|&i| passive[i]).collect();
        let mut sub = Matrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                sub[(a, c)] = n[(i, j)];
            }
        }
        let rhs: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
        let ch = Cholesky::factor(&sub).map_err(|e| Error::Conditioning { smallest_eigenvalue: e.pivot })?;
        let sol = ch.solve(&rhs);
        let mut full = vec![0.0; q];
        for (a, &i) in idx.iter().enumerate() {
            full[i] = sol[a];
        }
        Ok(full)
    };
    for _ in 0..3 * q + 10 {
        let nt = n.mul_vec(&t);
        let grad: Vec<f64> = (0..q).map(|i| b[i] - nt[i]).collect();
        let next = (0..q).filter(|&i| !passive[i] && grad[i] > tol).max_by(|&a, &c| grad[a].total_cmp(&grad[c]));
        let Some(j) = next else { break };
        passive[j] = true;
        loop {
            let s = solve_passive(&passive)?;
            if (0..q).all(|i| !passive[i] || s[i] > 0.0) {
                t = s;
                break;
            }
            let mut alpha = 1.0_f64;
            for i in 0..q {
                if passive[i] && s[i] <= 0.0 {
                    alpha = alpha.min(t[i] / (t[i] - s[i]));
                }
            }
            for i in 0..q {
                t[i] += alpha * (s[i] - t[i]);
                if passive[i] && t[i] <= 0.0 {
                    passive[i] = false;
                    t[i] = 0.0;
                }
            }
            if !passive.iter().any(|p| *p) {
                break;
            }
        }
    }
    Ok(t)
}

/// Indicator of the initial set normalised to unit mass.
pub fn h0_value(domain: &Domain, x: Vec2) -> f64 {
    if domain.initial.contains(x) {
        1.0 / domain.initial.area()
    } else {
        0.0
    }
}
