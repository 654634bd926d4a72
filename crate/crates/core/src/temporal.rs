//! Per-segment duration optimization with the boundary derivatives fixed.
//!
//! With its boundary stack `d` fixed, a segment costs
//! `J_m(T) = ρT + T^{-p_n} Σ_{i=0}^{p_d} α_i T^i` where `p_n = 2·D_max − 1`
//! and `p_d = 2(D_max − D_min) + N − 1`. The coefficients come from a time
//! rescaling: on `τ = t/T` the boundary data of order `k` picks up a factor
//! `T^k` and the order-`r` cost a factor `T^{1−2r}`, so every `α_i` is a
//! fixed quadratic form in `d` precomputed once at `T = 1`. Each extraction
//! is cross-checked against the direct `A⁻ᵀQA⁻¹` evaluation at held-out
//! durations.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::objective::{segment_block, Objective, TimeAllocation};
use crate::poly::{cost_matrix, mapping_inverse, stack_rows, BoundaryPair};
use crate::problem::ProblemSpec;
use crate::roots::{eval_compensated, positive_real_roots};

/// Relative residual allowed between the rational form and direct
/// evaluation at the held-out durations.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Relative tolerance handed to the root solver.
pub const ROOT_TOL: f64 = 1e-12;

const HELD_OUT: [f64; 3] = [0.8, 1.25, 1.6];

/// `J_m(T) = ρT + T^{-p_n} Σ α_i T^i` for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalCost {
    pub alpha: Vec<f64>,
    pub p_n: i32,
    pub p_d: usize,
    pub rho: f64,
}

impl RationalCost {
    pub fn new(alpha: Vec<f64>, p_n: i32, rho: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::domain("rational cost needs at least one coefficient"));
        }
        if !(rho > 0.0) {
            return Err(Error::domain(format!("time weight must be positive, got {rho}")));
        }
        Ok(Self {
            p_d: alpha.len() - 1,
            alpha,
            p_n,
            rho,
        })
    }

    /// `Σ α_i T^i`.
    pub fn numerator(&self, t: f64) -> f64 {
        eval_compensated(&self.alpha, t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.rho * t + self.numerator(t) * t.powi(-self.p_n)
    }

    /// `dJ_m/dT = q(T) / T^{p_n+1}`.
    pub fn derivative(&self, t: f64) -> f64 {
        eval_compensated(&self.stationarity_polynomial(), t) * t.powi(-(self.p_n + 1))
    }

    /// `q(T) = ρ T^{p_n+1} + Σ (i − p_n) α_i T^i`, ascending and trimmed.
    ///
    /// Requires `p_n ≥ −1` so that `q` is a polynomial.
    pub fn stationarity_polynomial(&self) -> Vec<f64> {
        let lead = (self.p_n + 1).max(0) as usize;
        let mut q = vec![0.0; lead.max(self.p_d) + 1];
        for (i, &a) in self.alpha.iter().enumerate() {
            q[i] = (i as f64 - self.p_n as f64) * a;
        }
        q[lead] += self.rho;
        while q.len() > 1 && *q.last().unwrap() == 0.0 {
            q.pop();
        }
        q
    }

    /// The positive duration minimizing `J_m`.
    ///
    /// Candidates are the positive roots of the stationarity polynomial; the
    /// cheapest wins and equal costs go to the shorter duration. Fails when
    /// the infimum is only approached as `T → 0⁺`.
    pub fn optimal_duration(&self) -> Result<f64> {
        let q = self.stationarity_polynomial();
        let roots = positive_real_roots(&q, ROOT_TOL)?;
        let mut best: Option<(f64, f64)> = None;
        for t in roots {
            let j = self.eval(t);
            match best {
                Some((_, bj)) if !(j < bj - 4.0 * f64::EPSILON * bj.abs()) => {}
                _ => best = Some((t, j)),
            }
        }
        let (t, j) = best.ok_or(Error::NoInteriorMinimizer)?;
        // When no α_i with i < p_n is nonzero the cost stays bounded as
        // T → 0⁺; an interior root only counts if it beats that limit.
        let low = self.p_n.clamp(0, self.alpha.len() as i32) as usize;
        if self.alpha[..low].iter().all(|&a| a == 0.0) {
            let limit = self.alpha.get(self.p_n.max(0) as usize).copied().unwrap_or(0.0);
            if self.p_n >= 0 && limit <= j {
                return Err(Error::NoInteriorMinimizer);
            }
        }
        Ok(t)
    }
}

/// The `α` quadratic forms of one problem: `α_i = tr(dᵀ W_i d)` for the
/// stacked segment boundary `d`.
#[derive(Debug, Clone)]
pub struct SegmentKernel {
    forms: Vec<DMatrix<f64>>,
    /// `A(T)⁻ᵀQ(T)A(T)⁻¹` at the held-out durations, built directly.
    held_out: Vec<(f64, DMatrix<f64>)>,
    p_n: i32,
    rho: f64,
}

impl SegmentKernel {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let n = spec.degree;
        let s = stack_rows(n);
        let p_d = 2 * (spec.d_max - spec.d_min) + n - 1;
        let a_inv = mapping_inverse(1.0, n)?;
        let mut forms = vec![DMatrix::zeros(2 * s, 2 * s); p_d + 1];
        for (&r, &w) in &spec.weights {
            if w == 0.0 {
                continue;
            }
            let single = BTreeMap::from([(r, w)]);
            let g = cost_matrix(1.0, n, &single, spec.d_min, spec.d_max)?;
            let k = a_inv.tr_mul(&(g * &a_inv));
            for j in 0..2 * s {
                for l in 0..2 * s {
                    let e = 2 * (spec.d_max - r) + j % s + l % s;
                    forms[e][(j, l)] += 0.5 * (k[(j, l)] + k[(l, j)]);
                }
            }
        }
        let held_out = HELD_OUT
            .iter()
            .map(|&t| Ok((t, segment_block(spec, t)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            forms,
            held_out,
            p_n: 2 * spec.d_max as i32 - 1,
            rho: spec.rho,
        })
    }

    /// Rational cost of a segment with stacked boundary `d` (`2s × 3`),
    /// without the held-out check.
    pub fn rational(&self, d: &DMatrix<f64>) -> RationalCost {
        let alpha = self.forms.iter().map(|w| d.dot(&(w * d))).collect();
        RationalCost::new(alpha, self.p_n, self.rho).expect("kernel is nonempty and rho validated")
    }

    /// Rational cost after checking it against direct evaluation at the
    /// held-out durations.
    pub fn checked(&self, d: &DMatrix<f64>) -> Result<RationalCost> {
        let rc = self.rational(d);
        for (t, h) in &self.held_out {
            check_residual(&rc, *t, d.dot(&(h * d)))?;
        }
        Ok(rc)
    }
}

/// Quadratic part of a segment cost evaluated through `A(T)⁻ᵀQ(T)A(T)⁻¹`.
pub fn direct_quadratic(spec: &ProblemSpec, d: &DMatrix<f64>, t: f64) -> Result<f64> {
    let h = segment_block(spec, t)?;
    Ok(d.dot(&(h * d)))
}

fn check_residual(rc: &RationalCost, t: f64, direct: f64) -> Result<()> {
    let scale = rc.alpha.iter().enumerate().fold(0.0, |acc, (i, a)| acc + (a * t.powi(i as i32)).abs())
        * t.powi(-rc.p_n);
    let residual = (rc.numerator(t) * t.powi(-rc.p_n) - direct).abs();
    let tolerance = RESIDUAL_TOL * scale.max(direct.abs());
    if residual > tolerance {
        return Err(Error::Conditioning {
            residual,
            tolerance,
        });
    }
    Ok(())
}

/// `α`, `p_n`, `p_d` and `ρ` of one segment's duration cost.
pub fn extract_rational(spec: &ProblemSpec, bp: &BoundaryPair) -> Result<RationalCost> {
    if bp.degree() != spec.degree {
        return Err(Error::domain("boundary pair degree does not match problem"));
    }
    SegmentKernel::new(spec)?.checked(&bp.stacked())
}

/// Free-function form of [`RationalCost::stationarity_polynomial`].
pub fn stationarity_polynomial(rc: &RationalCost) -> Vec<f64> {
    rc.stationarity_polynomial()
}

/// Free-function form of [`RationalCost::optimal_duration`].
pub fn optimal_duration(rc: &RationalCost) -> Result<f64> {
    rc.optimal_duration()
}

/// Duration phase bound to one problem.
#[derive(Debug, Clone)]
pub struct TemporalSolver<'a> {
    objective: Objective<'a>,
    kernel: SegmentKernel,
}

impl<'a> TemporalSolver<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Result<Self> {
        Ok(Self {
            objective: Objective::new(spec),
            kernel: SegmentKernel::new(spec)?,
        })
    }

    pub fn objective(&self) -> &Objective<'a> {
        &self.objective
    }

    /// Checked rational costs of every segment for a given free block.
    pub fn rational_costs(&self, d_p: &DMatrix<f64>) -> Result<Vec<RationalCost>> {
        let spec = self.objective.spec();
        let d = self.objective.full_stack(d_p);
        (0..spec.segments())
            .map(|m| {
                let dm = d.rows_range(self.objective.partition().segment_rows(m)).into_owned();
                self.kernel.checked(&dm)
            })
            .collect()
    }

    pub fn solve(&self, d_p: &DMatrix<f64>) -> Result<TimeAllocation> {
        let costs = self.rational_costs(d_p)?;
        let durations = costs
            .iter()
            .enumerate()
            .map(|(m, rc)| {
                rc.optimal_duration().map_err(|e| match e {
                    Error::NoInteriorMinimizer => Error::DegenerateSegment { segment: m },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TimeAllocation::new(durations)
    }
}

/// `argmin_T J(D_P, T)`, one independent root solve per segment.
pub fn solve_temporal(spec: &ProblemSpec, d_p: &DMatrix<f64>) -> Result<TimeAllocation> {
    TemporalSolver::new(spec)?.solve(d_p)
}
