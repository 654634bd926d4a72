//! The alternating-minimization outer loop and its convergence diagnostics.
//!
//! Starting from `D_P⁰`, the loop computes `T⁰ = argmin_T J(D_P⁰, T)` and then
//! alternates `D_P^{k+1} = argmin J(·, T^k)`, `T^{k+1} = argmin J(D_P^{k+1}, ·)`
//! until two consecutive costs differ by less than `δ`. Both partial
//! minimizations are exact, so `∇_T J` vanishes at every recorded iterate and
//! the spatial gradient is the full gradient there.
//!
//! Unlike a literal reading of the loop's bookkeeping, the returned iterate
//! is the last one computed, which is never costlier than its predecessor.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::objective::{Objective, ObjectiveMatrices, TimeAllocation};
use crate::poly::{coeffs_from_boundary, BoundaryPair, PolySegment, AXES};
use crate::problem::{Notice, ProblemSpec};
use crate::spatial::solve_with;
use crate::temporal::TemporalSolver;

/// Relative slack on the per-iteration sufficient-decrease inequality.
pub const DECREASE_TOL: f64 = 1e-8;

/// Relative slack on cost monotonicity.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Default stopping tolerance relative to `1 + J₀`.
pub const DEFAULT_DELTA_REL: f64 = 1e-9;

/// Diagnostics of one iterate `(D_P^k, T^k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub cost: f64,
    /// `‖∇_{D_P} J‖_F`, equal to the full gradient norm at iterates.
    pub grad_norm: f64,
    /// `σ_P(T^k)`; zero when nothing is free.
    pub sigma_p: f64,
    /// `(J_k − J_{k+1}) − ‖∇J_k‖²_F / (4σ_P(T^k))`; absent on the last iterate.
    pub decrease_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ToleranceMet,
    MaxIterations,
    Degenerate,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ToleranceMet => "tolerance_met",
            Termination::MaxIterations => "max_iterations",
            Termination::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub d_p: DMatrix<f64>,
    pub durations: TimeAllocation,
    pub segments: Vec<PolySegment>,
    pub records: Vec<ConvergenceRecord>,
    pub termination: Termination,
    /// Segment whose duration problem had no interior minimizer.
    pub degenerate_segment: Option<usize>,
    /// Stopping tolerance actually used.
    pub delta: f64,
    pub notices: Vec<Notice>,
}

impl SolveResult {
    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }

    /// Number of spatial/temporal passes after the initial duration solve.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn total_duration(&self) -> f64 {
        self.durations.total()
    }
}

struct Iterate {
    d_p: DMatrix<f64>,
    t: TimeAllocation,
    mats: ObjectiveMatrices,
}

fn record(obj: &Objective<'_>, it: &Iterate, iteration: usize) -> Result<ConvergenceRecord> {
    let d_f = obj.d_f();
    let cost = obj.spec().rho * it.t.total() + it.mats.quadratic(d_f, &it.d_p);
    let (grad_norm, sigma_p) = if it.d_p.nrows() == 0 {
        (0.0, 0.0)
    } else {
        (it.mats.gradient(d_f, &it.d_p).norm(), it.mats.sigma_p()?)
    };
    Ok(ConvergenceRecord {
        iteration,
        cost,
        grad_norm,
        sigma_p,
        decrease_residual: None,
    })
}

fn build_segments(obj: &Objective<'_>, d_p: &DMatrix<f64>, t: &TimeAllocation) -> Result<Vec<PolySegment>> {
    let d = obj.full_stack(d_p);
    t.iter()
        .enumerate()
        .map(|(m, &tm)| {
            let bp = BoundaryPair::from_stacked(&d.rows_range(obj.partition().segment_rows(m)).into_owned())?;
            coeffs_from_boundary(&bp, tm)
        })
        .collect()
}

/// Runs the loop with the limits stored in `spec.settings`.
pub fn optimize(spec: &ProblemSpec, d_p0: &DMatrix<f64>) -> Result<SolveResult> {
    optimize_with(spec, d_p0, spec.settings.max_iterations, spec.settings.delta)
}

/// Runs at most `max_iterations` alternations, stopping once consecutive
/// costs differ by less than `delta` (default `1e-9 · (1 + J₀)`).
pub fn optimize_with(
    spec: &ProblemSpec,
    d_p0: &DMatrix<f64>,
    max_iterations: usize,
    delta: Option<f64>,
) -> Result<SolveResult> {
    let notices = spec.validate()?;
    if max_iterations == 0 {
        return Err(Error::domain("iteration limit must be at least 1"));
    }
    if let Some(d) = delta {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("stopping tolerance must be positive, got {d}")));
        }
    }
    let temporal = TemporalSolver::new(spec)?;
    let obj = temporal.objective();
    let n_free = obj.partition().n_free();
    if d_p0.shape() != (n_free, AXES) {
        return Err(Error::domain(format!(
            "initial free block must be {n_free} x {AXES}, got {} x {}",
            d_p0.nrows(),
            d_p0.ncols()
        )));
    }

    let t0 = temporal.solve(d_p0)?;
    let mut current = Iterate {
        mats: obj.matrices(&t0)?,
        d_p: d_p0.clone(),
        t: t0,
    };
    let mut records = vec![record(obj, &current, 0)?];
    let j0 = records[0].cost;
    let delta = delta.unwrap_or(DEFAULT_DELTA_REL * (1.0 + j0.abs()));
    let mut termination = Termination::MaxIterations;
    let mut degenerate_segment = None;

    if n_free == 0 {
        termination = Termination::ToleranceMet;
    } else {
        let mut j_last = j0;
        for k in 0..max_iterations {
            let d_next = solve_with(&current.mats, obj.d_f())?;
            let t_next = match temporal.solve(&d_next) {
                Ok(t) => t,
                Err(Error::DegenerateSegment { segment }) => {
                    termination = Termination::Degenerate;
                    degenerate_segment = Some(segment);
                    break;
                }
                Err(e) => return Err(e),
            };
            let next = Iterate {
                mats: obj.matrices(&t_next)?,
                d_p: d_next,
                t: t_next,
            };
            let rec = record(obj, &next, k + 1)?;
            let j_cur = rec.cost;
            let prev = &mut records[k];
            let bound = if prev.sigma_p > 0.0 {
                prev.grad_norm * prev.grad_norm / (4.0 * prev.sigma_p)
            } else {
                0.0
            };
            prev.decrease_residual = Some((prev.cost - j_cur) - bound);
            records.push(rec);
            current = next;
            if (j_last - j_cur).abs() < delta {
                termination = Termination::ToleranceMet;
                break;
            }
            j_last = j_cur;
        }
    }

    let segments = build_segments(obj, &current.d_p, &current.t)?;
    Ok(SolveResult {
        d_p: current.d_p,
        durations: current.t,
        segments,
        records,
        termination,
        degenerate_segment,
        delta,
        notices,
    })
}

/// Starting free block: interior first derivatives from central differences
/// of the neighbouring positions over unit time, everything else zero.
pub fn default_initial_guess(spec: &ProblemSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let partition = Objective::new(spec).partition().clone();
    let s = spec.stack_rows();
    let last = spec.segments();
    let mut d_p = DMatrix::zeros(partition.n_free(), AXES);
    for (i, &row) in partition.free_rows().iter().enumerate() {
        let (w, r) = (row / s, row % s);
        if r == 1 && w > 0 && w < last {
            let next = spec.waypoints[w + 1].stack.order(0);
            let prev = spec.waypoints[w - 1].stack.order(0);
            let v = (next - prev) * 0.5;
            for j in 0..AXES {
                d_p[(i, j)] = v[j];
            }
        }
    }
    Ok(d_p)
}

/// One prefix of the global-rate inequality
/// `min_{k<K} ‖∇J_k‖² ≤ M_c (J₀ − J_K) / K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixCheck {
    pub k: usize,
    pub min_grad_sq: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Heuristic probe of the local `O(1/K)` rate: over the second half of the
/// run, `k · (J_k − J_final)` should stay within twice its median over the
/// first half. Sublinear stalls make that product grow and trip the check;
/// it is not a proof of anything.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    pub applicable: bool,
    pub median: f64,
    pub tail_max: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// `max_k 4σ_P(T^k)`.
    pub m_c: f64,
    pub decrease_violations: Vec<usize>,
    pub monotonicity_violations: Vec<usize>,
    pub prefix: Vec<PrefixCheck>,
    pub envelope: EnvelopeCheck,
}

impl RateReport {
    /// All rigorous checks hold; the envelope heuristic is not included.
    pub fn passed(&self) -> bool {
        self.decrease_violations.is_empty()
            && self.monotonicity_violations.is_empty()
            && self.prefix.iter().all(|p| p.passed)
    }

    pub fn prefix_violations(&self) -> Vec<usize> {
        self.prefix.iter().filter(|p| !p.passed).map(|p| p.k).collect()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Checks the recorded run against the per-iteration decrease inequality,
/// monotonicity, every prefix of the global rate bound, and the local-rate
/// envelope heuristic.
pub fn rate_report(records: &[ConvergenceRecord]) -> Result<RateReport> {
    if records.len() < 2 {
        return Err(Error::domain(format!(
            "rate report needs at least 2 records, got {}",
            records.len()
        )));
    }
    let m_c = records.iter().fold(0.0_f64, |m, r| m.max(4.0 * r.sigma_p));
    let j0 = records[0].cost;

    let decrease_violations = records
        .iter()
        .filter(|r| matches!(r.decrease_residual, Some(res) if res < -DECREASE_TOL * (1.0 + r.cost.abs())))
        .map(|r| r.iteration)
        .collect();
    let monotonicity_violations = records
        .windows(2)
        .filter(|w| w[1].cost > w[0].cost + MONOTONE_TOL * (1.0 + w[0].cost.abs()))
        .map(|w| w[1].iteration)
        .collect();

    let mut prefix = Vec::with_capacity(records.len() - 1);
    let mut min_grad_sq = f64::INFINITY;
    for (k, r) in records.iter().enumerate().skip(1) {
        min_grad_sq = min_grad_sq.min(records[k - 1].grad_norm.powi(2));
        let bound = m_c * ((j0 - r.cost) / k as f64 + DECREASE_TOL * (1.0 + j0.abs()));
        prefix.push(PrefixCheck {
            k,
            min_grad_sq,
            bound,
            passed: min_grad_sq <= bound,
        });
    }

    let last = records.len() - 1;
    let j_final = records[last].cost;
    let excess: Vec<(usize, f64)> = (1..last)
        .map(|k| (k, k as f64 * (records[k].cost - j_final).max(0.0)))
        .collect();
    let envelope = if excess.len() < 4 {
        EnvelopeCheck {
            applicable: false,
            median: 0.0,
            tail_max: 0.0,
            passed: true,
        }
    } else {
        let (head, tail): (Vec<&(usize, f64)>, Vec<_>) = excess.iter().partition(|(k, _)| 2 * k < last);
        let med = median(head.iter().map(|e| e.1).collect());
        let tail_max = tail.iter().fold(0.0_f64, |m, e| m.max(e.1));
        EnvelopeCheck {
            applicable: true,
            median: med,
            tail_max,
            passed: tail_max <= 2.0 * med,
        }
    };

    Ok(RateReport {
        m_c,
        decrease_violations,
        monotonicity_violations,
        prefix,
        envelope,
    })
}
