//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's matrix builders; everything is recomputed from the
//! polynomial definitions.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use amtraj::problem::{ProblemSpec, SolverSettings, Waypoint};
use amtraj::poly::DerivStack;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn falling(k: usize, r: usize) -> f64 {
    if r > k {
        return 0.0;
    }
    ((k - r + 1)..=k).map(|x| x as f64).product()
}

/// `d^r/dt^r` of `Σ c_k t^k` at `t`, by direct power sums.
pub fn deriv(c: &[f64], t: f64, r: usize) -> f64 {
    c.iter()
        .enumerate()
        .skip(r)
        .map(|(k, &ck)| ck * falling(k, r) * t.powi((k - r) as i32))
        .sum()
}

/// Column `axis` of a coefficient matrix as a slice-friendly vector.
pub fn column(c: &DMatrix<f64>, axis: usize) -> Vec<f64> {
    c.column(axis).iter().copied().collect()
}

/// Boundary stack `[d(0); d(T)]` of monomial coefficients `c`.
pub fn boundary_of(c: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = c.nrows() - 1;
    let s = (n + 1) / 2;
    DMatrix::from_fn(2 * s, c.ncols(), |i, j| {
        let col = column(c, j);
        if i < s { deriv(&col, 0.0, i) } else { deriv(&col, t, i - s) }
    })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

fn gl_rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
    nodes.0.iter().zip(&nodes.1).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Adaptive 5-point Gauss-Legendre with interval bisection.
pub fn adaptive_integral(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let nodes = gauss_legendre(5);
    let whole = gl_rule(f, a, b, &nodes);
    fn go(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
        nodes: &(Vec<f64>, Vec<f64>),
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl_rule(f, a, m, nodes), gl_rule(f, m, b, nodes));
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        go(f, a, m, l, 0.5 * tol, depth - 1, nodes) + go(f, m, b, r, 0.5 * tol, depth - 1, nodes)
    }
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    go(f, a, b, whole, tol, 40, &nodes)
}

/// `Σ_r w_r ∫₀ᵀ ‖p^(r)‖²` by adaptive quadrature.
pub fn quadrature_cost(c: &DMatrix<f64>, t: f64, weights: &BTreeMap<usize, f64>) -> f64 {
    let cols: Vec<Vec<f64>> = (0..c.ncols()).map(|j| column(c, j)).collect();
    let f = |x: f64| {
        weights
            .iter()
            .map(|(&r, &w)| w * cols.iter().map(|col| deriv(col, x, r).powi(2)).sum::<f64>())
            .sum::<f64>()
    };
    adaptive_integral(&f, 0.0, t, 1e-14)
}

/// Hermite matrix `A(T)` mapping coefficients to `[d(0); d(T)]`.
pub fn mapping(t: f64, n: usize) -> DMatrix<f64> {
    let s = (n + 1) / 2;
    DMatrix::from_fn(n + 1, n + 1, |i, k| {
        let (tt, r) = if i < s { (0.0, i) } else { (t, i - s) };
        if k < r {
            0.0
        } else if k == r {
            falling(k, r)
        } else {
            falling(k, r) * tt.powi((k - r) as i32)
        }
    })
}

/// `Q(T)` from fixed-order Gauss-Legendre, exact for these degrees.
pub fn q_matrix(t: f64, n: usize, weights: &BTreeMap<usize, f64>) -> DMatrix<f64> {
    let (x, w) = gauss_legendre(16);
    let mut q = DMatrix::zeros(n + 1, n + 1);
    for (xi, wi) in x.iter().zip(&w) {
        let tau = 0.5 * t * (xi + 1.0);
        for (&r, &wr) in weights {
            let b: Vec<f64> = (0..=n)
                .map(|k| if k < r { 0.0 } else { falling(k, r) * tau.powi((k - r) as i32) })
                .collect();
            for j in 0..=n {
                for k in 0..=n {
                    q[(j, k)] += 0.5 * t * wi * wr * b[j] * b[k];
                }
            }
        }
    }
    q
}

/// Boundary-form block `A⁻ᵀ Q A⁻¹` for one segment.
pub fn segment_h(t: f64, n: usize, weights: &BTreeMap<usize, f64>) -> DMatrix<f64> {
    let a_inv = mapping(t, n).try_inverse().expect("nonsingular Hermite matrix");
    let h = a_inv.transpose() * q_matrix(t, n, weights) * &a_inv;
    (&h + h.transpose()) * 0.5
}

/// Quadratic cost of a boundary stack on one segment.
pub fn segment_quadratic(d: &DMatrix<f64>, t: f64, n: usize, weights: &BTreeMap<usize, f64>) -> f64 {
    (d.transpose() * segment_h(t, n, weights) * d).trace()
}

/// Full `(M+1)s` square `R` over the waypoint-major stack.
pub fn full_r(spec: &ProblemSpec, t: &[f64]) -> DMatrix<f64> {
    let s = (spec.degree + 1) / 2;
    let size = spec.waypoints.len() * s;
    let mut r = DMatrix::zeros(size, size);
    for (m, &tm) in t.iter().enumerate() {
        let h = segment_h(tm, spec.degree, &spec.weights);
        let mut view = r.view_mut((m * s, m * s), (2 * s, 2 * s));
        view += h;
    }
    r
}

/// Waypoint-major stack of all boundary values and the free-row mask.
pub fn full_stack(spec: &ProblemSpec) -> (DMatrix<f64>, Vec<bool>) {
    let s = (spec.degree + 1) / 2;
    let mut d = DMatrix::zeros(spec.waypoints.len() * s, 3);
    let mut free = Vec::new();
    for (w, wp) in spec.waypoints.iter().enumerate() {
        for r in 0..s {
            for j in 0..3 {
                d[(w * s + r, j)] = wp.stack.values()[(r, j)];
            }
            free.push(!wp.fixed[r]);
        }
    }
    (d, free)
}

pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Index lists of fixed and free rows.
pub fn split_rows(free: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let f = (0..free.len()).filter(|&i| !free[i]).collect();
    let p = (0..free.len()).filter(|&i| free[i]).collect();
    (f, p)
}

/// Full cost `ρΣT + tr(Dᵀ R D)` with the free rows replaced by `d_p`.
pub fn total_cost(spec: &ProblemSpec, d_p: &DMatrix<f64>, t: &[f64]) -> f64 {
    let (mut d, free) = full_stack(spec);
    let (_, p) = split_rows(&free);
    for (i, &row) in p.iter().enumerate() {
        for j in 0..3 {
            d[(row, j)] = d_p[(i, j)];
        }
    }
    spec.rho * t.iter().sum::<f64>() + (d.transpose() * full_r(spec, t) * &d).trace()
}

/// Minimizer of the quadratic over the free rows via a symmetric eigen
/// decomposition of `R_PP`.
pub fn eigen_qp(spec: &ProblemSpec, t: &[f64]) -> DMatrix<f64> {
    let (d, free) = full_stack(spec);
    let (f, p) = split_rows(&free);
    let r = full_r(spec, t);
    let r_pp = select(&r, &p, &p);
    let r_pf = select(&r, &p, &f);
    let d_f = select_rows(&d, &f);
    let eig = r_pp.symmetric_eigen();
    let rhs = eig.eigenvectors.transpose() * (r_pf * d_f);
    let scaled = DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |i, j| -rhs[(i, j)] / eig.eigenvalues[i]);
    &eig.eigenvectors * scaled
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { x1 } else { x2 }
}

/// Minimum of `f` over a log grid on `[lo, hi]`, polished by golden section
/// between the neighbours of the best grid point. Returns `(t, f(t))`.
pub fn log_grid_min(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let grid: Vec<f64> = (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, f(t)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(points - 1)];
    let t = golden(f, a, b, 200);
    let (ft, fg) = (f(t), f(grid[best]));
    if ft <= fg { (t, ft) } else { (grid[best], fg) }
}

pub fn stack(rows: &[[f64; 3]]) -> DerivStack {
    DerivStack::from_rows(rows).unwrap()
}

/// Two-segment min-acceleration problem along x: positions 0, 1, 2 at rest
/// at the ends, middle velocity free.
pub fn three_point(rho: f64) -> ProblemSpec {
    let wp = |p: f64, v: Option<f64>| {
        Waypoint::new(stack(&[[p, 0.0, 0.0], [v.unwrap_or(0.0), 0.0, 0.0]]), vec![true, v.is_some()])
    };
    ProblemSpec {
        degree: 3,
        d_min: 2,
        d_max: 2,
        weights: BTreeMap::from([(2, 1.0)]),
        rho,
        waypoints: vec![wp(0.0, Some(0.0)), wp(1.0, None), wp(2.0, Some(0.0))],
        settings: SolverSettings::default(),
    }
}

/// Random `(N+1) × 3` coefficient matrix with entries in `[-1, 1]`.
pub fn random_coeffs<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, 3, |_, _| rng.random_range(-1.0..1.0))
}

/// Random boundary stack for one segment.
pub fn random_boundary<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let s = (n + 1) / 2;
    DMatrix::from_fn(2 * s, 3, |i, _| {
        let scale = if i % s == 0 { 2.0 } else { 1.0 };
        rng.random_range(-scale..scale)
    })
}

/// Random weights on `d_min..=d_max` with a positive top weight.
pub fn random_weights<R: Rng>(rng: &mut R, d_min: usize, d_max: usize) -> BTreeMap<usize, f64> {
    (d_min..=d_max)
        .map(|r| (r, if r == d_max { rng.random_range(0.5..2.0) } else { rng.random_range(0.0..1.0) }))
        .collect()
}

/// Relative Frobenius distance with a unit floor on the scale.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

pub fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Quadratic segment cost from boundary values: solve for coefficients,
/// then integrate the derivatives with a 16-point Gauss-Legendre rule,
/// which is exact for polynomial integrands of degree ≤ 31.
pub struct GlCost {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GlCost {
    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre(16);
        Self { nodes, weights }
    }

    pub fn eval(&self, d: &DMatrix<f64>, t: f64, n: usize, w: &BTreeMap<usize, f64>) -> f64 {
        let c = mapping(t, n).lu().solve(d).expect("nonsingular Hermite matrix");
        let cols: Vec<Vec<f64>> = (0..c.ncols()).map(|j| column(&c, j)).collect();
        let mut total = 0.0;
        for (x, gw) in self.nodes.iter().zip(&self.weights) {
            let tau = 0.5 * t * (x + 1.0);
            for (&r, &wr) in w {
                let sq: f64 = cols.iter().map(|col| deriv(col, tau, r).powi(2)).sum();
                total += 0.5 * t * gw * wr * sq;
            }
        }
        total
    }
}

/// One-segment problem with zero boundary values, for calls that only read
/// the objective definition.
pub fn segment_spec(n: usize, d_min: usize, d_max: usize, weights: BTreeMap<usize, f64>, rho: f64) -> ProblemSpec {
    let s = (n + 1) / 2;
    let wp = || Waypoint::new(DerivStack::zeros(s), vec![true; s]);
    ProblemSpec {
        degree: n,
        d_min,
        d_max,
        weights,
        rho,
        waypoints: vec![wp(), wp()],
        settings: SolverSettings::default(),
    }
}
