//! Monomial segment representation.
//!
//! A segment of degree `N` (odd) is `p(t) = cᵀ β(t)` on `[0, T]`, with
//! `β(t) = (1, t, …, t^N)` and `c` an `(N+1) × 3` coefficient matrix. The
//! boundary form stacks the value and the first `(N-1)/2` derivatives at both
//! ends; the mapping matrix `A(T)` converts between the two and is square and
//! nonsingular because `N` is odd.
//!
//! Only the monomial basis is provided. Degrees up to 11 are supported; past
//! that `A(T)` becomes too ill-conditioned in `f64` for durations far from 1.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};

/// Spatial dimension of every trajectory.
pub const AXES: usize = 3;

/// Largest polynomial degree the crate accepts.
pub const MAX_DEGREE: usize = 11;

/// Number of rows in a derivative stack for degree `n`: orders `0..=(n-1)/2`.
pub fn stack_rows(n: usize) -> usize {
    (n + 1) / 2
}

pub(crate) fn check_degree(n: usize) -> Result<()> {
    if n % 2 == 0 || n == 0 {
        return Err(Error::domain(format!("polynomial degree must be odd and >= 1, got {n}")));
    }
    if n > MAX_DEGREE {
        return Err(Error::domain(format!(
            "polynomial degree {n} exceeds supported maximum {MAX_DEGREE}"
        )));
    }
    Ok(())
}

fn check_duration(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("duration must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `j! / (j - r)!`, zero when `r > j`.
pub(crate) fn falling_factorial(j: usize, r: usize) -> f64 {
    if r > j {
        return 0.0;
    }
    ((j - r + 1)..=j).fold(1.0, |acc, k| acc * k as f64)
}

/// The `r`-th derivative of the monomial basis `β(t)` of degree `n`.
pub fn basis(t: f64, n: usize, r: usize) -> DVector<f64> {
    DVector::from_fn(n + 1, |j, _| {
        if j < r {
            0.0
        } else {
            falling_factorial(j, r) * t.powi((j - r) as i32)
        }
    })
}

/// `A(T)`: rows `0..s` are `β^(r)(0)`, rows `s..2s` are `β^(r)(T)`.
pub fn mapping_matrix(t: f64, n: usize) -> Result<DMatrix<f64>> {
    check_degree(n)?;
    check_duration(t)?;
    Ok(mapping_matrix_unchecked(t, n))
}

fn mapping_matrix_unchecked(t: f64, n: usize) -> DMatrix<f64> {
    let s = stack_rows(n);
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for r in 0..s {
        a.set_row(r, &basis(0.0, n, r).transpose());
        a.set_row(s + r, &basis(t, n, r).transpose());
    }
    a
}

/// `A(T)⁻¹` via a partial-pivot LU factorization.
pub fn mapping_inverse(t: f64, n: usize) -> Result<DMatrix<f64>> {
    let a = mapping_matrix(t, n)?;
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::domain(format!("mapping matrix singular at T = {t}")))?;
    debug_assert!(
        a.lp_norm(1) * inv.lp_norm(1) < 1.0 / f64::EPSILON,
        "mapping matrix numerically singular at T = {t}, N = {n}"
    );
    Ok(inv)
}

pub(crate) fn check_orders(
    n: usize,
    weights: &BTreeMap<usize, f64>,
    d_min: usize,
    d_max: usize,
) -> Result<()> {
    if d_min > d_max || d_max > n {
        return Err(Error::domain(format!(
            "derivative order range [{d_min}, {d_max}] invalid for degree {n}"
        )));
    }
    for (&r, &w) in weights {
        if r < d_min || r > d_max {
            return Err(Error::domain(format!(
                "weight on order {r} outside [{d_min}, {d_max}]"
            )));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::domain(format!("weight on order {r} must be finite and >= 0, got {w}")));
        }
    }
    Ok(())
}

/// `Q(T) = Σ_r w_r G_r(T)`, the Gram matrix of `∫₀ᵀ Σ w_r ‖p^(r)‖² dt` in
/// monomial coefficients.
pub fn cost_matrix(
    t: f64,
    n: usize,
    weights: &BTreeMap<usize, f64>,
    d_min: usize,
    d_max: usize,
) -> Result<DMatrix<f64>> {
    check_degree(n)?;
    check_duration(t)?;
    check_orders(n, weights, d_min, d_max)?;
    let mut q = DMatrix::zeros(n + 1, n + 1);
    for (&r, &w) in weights {
        if w == 0.0 {
            continue;
        }
        for j in r..=n {
            let fj = falling_factorial(j, r);
            for k in r..=n {
                let p = (j + k - 2 * r + 1) as i32;
                q[(j, k)] += w * fj * falling_factorial(k, r) * t.powi(p) / p as f64;
            }
        }
    }
    Ok(q)
}

/// Value and derivatives up to order `(N-1)/2` at one point, one row per
/// order and one column per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivStack(DMatrix<f64>);

impl DerivStack {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != AXES || values.nrows() == 0 {
            return Err(Error::domain(format!(
                "derivative stack must be k x {AXES}, got {} x {}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("derivative stack has non-finite entries"));
        }
        Ok(Self(values))
    }

    pub fn zeros(rows: usize) -> Self {
        Self(DMatrix::zeros(rows, AXES))
    }

    pub fn from_rows(rows: &[[f64; AXES]]) -> Result<Self> {
        Self::new(DMatrix::from_fn(rows.len(), AXES, |i, j| rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    /// Polynomial degree this stack belongs to.
    pub fn degree(&self) -> usize {
        2 * self.rows() - 1
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn order(&self, r: usize) -> Vector3<f64> {
        Vector3::new(self.0[(r, 0)], self.0[(r, 1)], self.0[(r, 2)])
    }
}

/// Start and end derivative stacks of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub start: DerivStack,
    pub end: DerivStack,
}

impl BoundaryPair {
    pub fn new(start: DerivStack, end: DerivStack) -> Result<Self> {
        if start.rows() != end.rows() {
            return Err(Error::domain("boundary stacks have different derivative counts"));
        }
        Ok(Self { start, end })
    }

    /// Builds a pair from a `2s × 3` matrix, start rows first.
    pub fn from_stacked(d: &DMatrix<f64>) -> Result<Self> {
        if d.nrows() % 2 != 0 {
            return Err(Error::domain("stacked boundary must have an even row count"));
        }
        let s = d.nrows() / 2;
        Self::new(
            DerivStack::new(d.rows(0, s).into_owned())?,
            DerivStack::new(d.rows(s, s).into_owned())?,
        )
    }

    pub fn degree(&self) -> usize {
        self.start.degree()
    }

    /// `(d_startᵀ, d_endᵀ)ᵀ`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let s = self.start.rows();
        let mut d = DMatrix::zeros(2 * s, AXES);
        d.rows_mut(0, s).copy_from(self.start.values());
        d.rows_mut(s, s).copy_from(self.end.values());
        d
    }
}

/// One polynomial piece: ascending coefficients per axis and a duration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySegment {
    coeffs: DMatrix<f64>,
    duration: f64,
}

impl PolySegment {
    pub fn new(coeffs: DMatrix<f64>, duration: f64) -> Result<Self> {
        if coeffs.ncols() != AXES {
            return Err(Error::domain(format!("coefficients must have {AXES} columns")));
        }
        if coeffs.nrows() < 2 {
            return Err(Error::domain("segment needs at least two coefficients"));
        }
        check_degree(coeffs.nrows() - 1)?;
        check_duration(duration)?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("segment coefficients are not finite"));
        }
        Ok(Self { coeffs, duration })
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn degree(&self) -> usize {
        self.coeffs.nrows() - 1
    }

    /// `p^(r)(t)` for `t ∈ [0, duration]`.
    pub fn eval(&self, t: f64, r: usize) -> Result<Vector3<f64>> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        let b = basis(t, self.degree(), r);
        let v = self.coeffs.tr_mul(&b);
        Ok(Vector3::new(v[0], v[1], v[2]))
    }

    /// Boundary stacks of this segment, the inverse of
    /// [`coeffs_from_boundary`].
    pub fn boundary(&self) -> BoundaryPair {
        let d = mapping_matrix_unchecked(self.duration, self.degree()) * &self.coeffs;
        BoundaryPair::from_stacked(&d).expect("mapping preserves shape")
    }
}

/// Solves `A(T) c = (d_start; d_end)` for the coefficient matrix.
pub fn coeffs_from_boundary(bp: &BoundaryPair, t: f64) -> Result<PolySegment> {
    let n = bp.degree();
    let a = mapping_matrix(t, n)?;
    let c = a
        .lu()
        .solve(&bp.stacked())
        .ok_or_else(|| Error::domain(format!("mapping matrix singular at T = {t}")))?;
    PolySegment::new(c, t)
}

/// Free-function form of [`PolySegment::eval`].
pub fn eval_segment(seg: &PolySegment, t: f64, r: usize) -> Result<Vector3<f64>> {
    seg.eval(t, r)
}
