//! The global objective `J(D_P, T) = ρ‖T‖₁ + tr(Dᵀ Cᵀ H(T) C D)`.
//!
//! Waypoint derivative rows are stacked waypoint-major into `D`
//! (`(M+1)·s × 3`, row `w·s + r` is order `r` at waypoint `w`). Segment `m`
//! reads the contiguous rows `m·s .. m·s + 2s`, so interior waypoints are
//! shared by two segments. `C` is never materialized: [`Partition`] records
//! which stacked rows are fixed (`D_F`) and which are free (`D_P`).

use std::ops::{Deref, Range};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{cost_matrix, mapping_inverse, AXES};
use crate::problem::ProblemSpec;
use crate::spectral::spectral_norm_psd;

/// Strictly positive per-segment durations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAllocation(Vec<f64>);

impl TimeAllocation {
    pub fn new(durations: Vec<f64>) -> Result<Self> {
        if durations.is_empty() {
            return Err(Error::domain("time allocation is empty"));
        }
        if let Some((i, t)) = durations
            .iter()
            .enumerate()
            .find(|(_, t)| !(**t > 0.0) || !t.is_finite())
        {
            return Err(Error::domain(format!("duration {i} must be positive, got {t}")));
        }
        Ok(Self(durations))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for TimeAllocation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Where a stacked row lives in the `(D_F; D_P)` ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Fixed(usize),
    Free(usize),
}

/// Gather/scatter map between the waypoint-major stack `D` and `(D_F, D_P)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    stack_rows: usize,
    segments: usize,
    sources: Vec<Source>,
    fixed_rows: Vec<usize>,
    free_rows: Vec<usize>,
}

impl Partition {
    pub fn new(spec: &ProblemSpec) -> Self {
        let s = spec.stack_rows();
        let mut sources = Vec::with_capacity(spec.waypoints.len() * s);
        let mut fixed_rows = Vec::new();
        let mut free_rows = Vec::new();
        for (w, wp) in spec.waypoints.iter().enumerate() {
            for r in 0..s {
                let row = w * s + r;
                if wp.fixed[r] {
                    sources.push(Source::Fixed(fixed_rows.len()));
                    fixed_rows.push(row);
                } else {
                    sources.push(Source::Free(free_rows.len()));
                    free_rows.push(row);
                }
            }
        }
        Self {
            stack_rows: s,
            segments: spec.segments(),
            sources,
            fixed_rows,
            free_rows,
        }
    }

    pub fn stack_rows(&self) -> usize {
        self.stack_rows
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn total_rows(&self) -> usize {
        self.sources.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.fixed_rows.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_rows.len()
    }

    /// Stacked row indices belonging to `D_F`, ascending.
    pub fn fixed_rows(&self) -> &[usize] {
        &self.fixed_rows
    }

    /// Stacked row indices belonging to `D_P`, ascending.
    pub fn free_rows(&self) -> &[usize] {
        &self.free_rows
    }

    pub fn source(&self, stacked_row: usize) -> Source {
        self.sources[stacked_row]
    }

    /// Stacked rows read by segment `m`: its start stack then its end stack.
    pub fn segment_rows(&self, m: usize) -> Range<usize> {
        m * self.stack_rows..(m + 2) * self.stack_rows
    }

    /// Source of row `local` (in `0..2s`) of segment `m`'s boundary vector.
    pub fn segment_source(&self, m: usize, local: usize) -> Source {
        self.sources[m * self.stack_rows + local]
    }

    /// Splits a full stack into `(D_F, D_P)`.
    pub fn gather(&self, d: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (d.select_rows(&self.fixed_rows), d.select_rows(&self.free_rows))
    }

    /// Reassembles the full stack from `(D_F, D_P)`.
    pub fn scatter(&self, d_f: &DMatrix<f64>, d_p: &DMatrix<f64>) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.total_rows(), d_f.ncols().max(d_p.ncols()));
        for (i, &row) in self.fixed_rows.iter().enumerate() {
            d.set_row(row, &d_f.row(i));
        }
        for (i, &row) in self.free_rows.iter().enumerate() {
            d.set_row(row, &d_p.row(i));
        }
        d
    }

    /// `D_F` read from the waypoint templates.
    pub fn fixed_values(&self, spec: &ProblemSpec) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_fixed(), AXES, |i, j| {
            let row = self.fixed_rows[i];
            spec.waypoints[row / self.stack_rows].stack.values()[(row % self.stack_rows, j)]
        })
    }
}

/// Free-function form of [`Partition::new`].
pub fn build_partition(spec: &ProblemSpec) -> Partition {
    Partition::new(spec)
}

/// `A(T)⁻ᵀ Q(T) A(T)⁻¹`, the quadratic form of one segment in boundary
/// coordinates.
pub fn segment_block(spec: &ProblemSpec, t: f64) -> Result<DMatrix<f64>> {
    let q = cost_matrix(t, spec.degree, &spec.weights, spec.d_min, spec.d_max)?;
    let a_inv = mapping_inverse(t, spec.degree)?;
    let h = a_inv.tr_mul(&(q * &a_inv));
    Ok((&h + h.transpose()) * 0.5)
}

/// Partition blocks of `R(T) = Cᵀ H(T) C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveMatrices {
    pub r_ff: DMatrix<f64>,
    pub r_fp: DMatrix<f64>,
    pub r_pf: DMatrix<f64>,
    pub r_pp: DMatrix<f64>,
}

impl ObjectiveMatrices {
    /// `tr((D_F; D_P)ᵀ R (D_F; D_P))`.
    pub fn quadratic(&self, d_f: &DMatrix<f64>, d_p: &DMatrix<f64>) -> f64 {
        let ff = d_f.dot(&(&self.r_ff * d_f));
        if d_p.nrows() == 0 {
            return ff;
        }
        ff + 2.0 * d_p.dot(&(&self.r_pf * d_f)) + d_p.dot(&(&self.r_pp * d_p))
    }

    /// `∇_{D_P} = 2 R_FPᵀ D_F + 2 R_PPᵀ D_P`.
    pub fn gradient(&self, d_f: &DMatrix<f64>, d_p: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.r_pf * d_f + &self.r_pp * d_p) * 2.0
    }

    /// Largest singular value of `R_PP`. Large banded blocks return an
    /// upper bound within `1e-11` relative.
    pub fn sigma_p(&self) -> Result<f64> {
        if self.r_pp.nrows() == 0 {
            return Err(Error::NoFreeVariables);
        }
        Ok(spectral_norm_psd(&self.r_pp))
    }
}

/// A problem bound to its partition and fixed values, so repeated
/// evaluations do not rebuild them.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    spec: &'a ProblemSpec,
    partition: Partition,
    d_f: DMatrix<f64>,
}

impl<'a> Objective<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Self {
        let partition = Partition::new(spec);
        let d_f = partition.fixed_values(spec);
        Self {
            spec,
            partition,
            d_f,
        }
    }

    pub fn spec(&self) -> &'a ProblemSpec {
        self.spec
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn d_f(&self) -> &DMatrix<f64> {
        &self.d_f
    }

    /// Full stacked `D` for a given free block.
    pub fn full_stack(&self, d_p: &DMatrix<f64>) -> DMatrix<f64> {
        self.partition.scatter(&self.d_f, d_p)
    }

    fn check_shapes(&self, d_p: Option<&DMatrix<f64>>, t: &TimeAllocation) -> Result<()> {
        if t.len() != self.partition.segments() {
            return Err(Error::domain(format!(
                "time allocation has {} entries, problem has {} segments",
                t.len(),
                self.partition.segments()
            )));
        }
        if let Some(d_p) = d_p {
            if d_p.nrows() != self.partition.n_free() || d_p.ncols() != AXES {
                return Err(Error::domain(format!(
                    "free block must be {} x {AXES}, got {} x {}",
                    self.partition.n_free(),
                    d_p.nrows(),
                    d_p.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn matrices(&self, t: &TimeAllocation) -> Result<ObjectiveMatrices> {
        self.check_shapes(None, t)?;
        let rows = self.partition.total_rows();
        let s = self.partition.stack_rows();
        let mut r = DMatrix::zeros(rows, rows);
        for (m, &tm) in t.iter().enumerate() {
            let h = segment_block(self.spec, tm)?;
            let mut view = r.view_mut((m * s, m * s), (2 * s, 2 * s));
            view += h;
        }
        let fixed = self.partition.fixed_rows();
        let free = self.partition.free_rows();
        let r_f = r.select_rows(fixed);
        let r_p = r.select_rows(free);
        Ok(ObjectiveMatrices {
            r_ff: r_f.select_columns(fixed),
            r_fp: r_f.select_columns(free),
            r_pf: r_p.select_columns(fixed),
            r_pp: r_p.select_columns(free),
        })
    }

    pub fn cost(&self, d_p: &DMatrix<f64>, t: &TimeAllocation) -> Result<f64> {
        self.check_shapes(Some(d_p), t)?;
        let d = self.full_stack(d_p);
        let mut quad = 0.0;
        for (m, &tm) in t.iter().enumerate() {
            let h = segment_block(self.spec, tm)?;
            let dm = d.rows_range(self.partition.segment_rows(m));
            quad += dm.dot(&(&h * dm));
        }
        Ok(self.spec.rho * t.total() + quad)
    }

    pub fn gradient(&self, d_p: &DMatrix<f64>, t: &TimeAllocation) -> Result<DMatrix<f64>> {
        self.check_shapes(Some(d_p), t)?;
        Ok(self.matrices(t)?.gradient(&self.d_f, d_p))
    }

    pub fn sigma_p(&self, t: &TimeAllocation) -> Result<f64> {
        if self.partition.n_free() == 0 {
            return Err(Error::NoFreeVariables);
        }
        self.matrices(t)?.sigma_p()
    }
}

/// `R(T)` blocks for a problem.
pub fn assemble_r(spec: &ProblemSpec, t: &TimeAllocation) -> Result<ObjectiveMatrices> {
    Objective::new(spec).matrices(t)
}

/// `J(D_P, T)`.
pub fn total_cost(spec: &ProblemSpec, d_p: &DMatrix<f64>, t: &TimeAllocation) -> Result<f64> {
    Objective::new(spec).cost(d_p, t)
}

/// `∇_{D_P} J(D_P, T)`.
pub fn spatial_gradient(
    spec: &ProblemSpec,
    d_p: &DMatrix<f64>,
    t: &TimeAllocation,
) -> Result<DMatrix<f64>> {
    Objective::new(spec).gradient(d_p, t)
}

/// `σ_P(T)`, the spectral norm of `R_PP(T)`.
pub fn sigma_p(spec: &ProblemSpec, t: &TimeAllocation) -> Result<f64> {
    Objective::new(spec).sigma_p(t)
}
