//! Problem definition and the legality checks run before any solve.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Clause, Error, Result, Violation};
use crate::poly::{stack_rows, DerivStack, MAX_DEGREE};

/// A waypoint's derivative stack and which of its orders are fixed.
///
/// The mask is per derivative order and applies to all three axes. Values in
/// free rows are ignored by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub stack: DerivStack,
    pub fixed: Vec<bool>,
}

impl Waypoint {
    pub fn new(stack: DerivStack, fixed: Vec<bool>) -> Self {
        Self { stack, fixed }
    }

    /// Every order fixed.
    pub fn fully_fixed(&self) -> bool {
        self.fixed.iter().all(|&f| f)
    }
}

/// Outer-loop limits. `delta = None` selects `1e-9 * (1 + J₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub delta: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 64,
            delta: None,
        }
    }
}

/// Everything that determines the objective: polynomial degree, penalized
/// derivative orders and their weights, the time weight `rho`, and the
/// waypoints with their fixed/free split.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub degree: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub weights: BTreeMap<usize, f64>,
    pub rho: f64,
    pub waypoints: Vec<Waypoint>,
    pub settings: SolverSettings,
}

/// Non-fatal observations about a valid problem.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Notice {
    /// Penalized orders exceed the derivatives shared at the knots, so those
    /// derivatives may jump between segments.
    DiscontinuousDerivatives { d_max: usize, continuous_up_to: usize },
}

impl fmt::Display for Notice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Notice::DiscontinuousDerivatives {
                d_max,
                continuous_up_to,
            } => write!(
                f,
                "d_max = {d_max} exceeds the shared boundary order {continuous_up_to}; \
                 derivatives above order {continuous_up_to} may be discontinuous at knots"
            ),
        }
    }
}

impl ProblemSpec {
    /// Number of segments `M`.
    pub fn segments(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    /// Rows per derivative stack, `(N+1)/2`.
    pub fn stack_rows(&self) -> usize {
        stack_rows(self.degree)
    }

    pub fn weight(&self, order: usize) -> f64 {
        self.weights.get(&order).copied().unwrap_or(0.0)
    }

    /// Checks the conditions under which the objective is meaningful.
    ///
    /// Only necessary conditions are tested: positive time weight,
    /// nonnegative and not identically zero derivative weights, and no pair of
    /// consecutive waypoints that are fully fixed to the same values. Bounded
    /// sublevel sets in general are not decided here.
    pub fn validate(&self) -> Result<Vec<Notice>> {
        let violations = self.violations();
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        let mut notices = Vec::new();
        let shared = (self.degree - 1) / 2;
        if self.d_max > shared {
            notices.push(Notice::DiscontinuousDerivatives {
                d_max: self.d_max,
                continuous_up_to: shared,
            });
        }
        Ok(notices)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.degree;
        if n % 2 == 0 || n > MAX_DEGREE {
            out.push(Violation::new(
                "degree",
                Clause::Structure,
                format!("degree must be odd in [1, {MAX_DEGREE}], got {n}"),
            ));
            // Everything below depends on a usable degree.
            return out;
        }
        if self.waypoints.len() < 2 {
            out.push(Violation::new(
                "waypoints",
                Clause::Structure,
                format!("need at least 2 waypoints, got {}", self.waypoints.len()),
            ));
        }
        if self.d_min > self.d_max || self.d_max > n {
            out.push(Violation::new(
                "d_min/d_max",
                Clause::Structure,
                format!("order range [{}, {}] invalid for degree {n}", self.d_min, self.d_max),
            ));
        }

        if !self.rho.is_finite() {
            out.push(Violation::new("rho", Clause::Structure, "time weight is not finite"));
        } else if self.rho <= 0.0 {
            out.push(Violation::new(
                "rho",
                Clause::Boundedness,
                format!("nonpositive time weight {}", self.rho),
            ));
        }

        let mut any_positive = false;
        for (&r, &w) in &self.weights {
            let field = format!("weights.{r}");
            if r < self.d_min || r > self.d_max {
                out.push(Violation::new(
                    field,
                    Clause::Structure,
                    format!("order {r} outside [{}, {}]", self.d_min, self.d_max),
                ));
            } else if !w.is_finite() {
                out.push(Violation::new(field, Clause::Structure, "weight is not finite"));
            } else if w < 0.0 {
                out.push(Violation::new(
                    field,
                    Clause::Boundedness,
                    format!("negative derivative weight {w}"),
                ));
            } else if w > 0.0 {
                any_positive = true;
            }
        }
        if !any_positive {
            out.push(Violation::new(
                "weights",
                Clause::StrictPositiveness,
                "all derivative weights are zero",
            ));
        }

        let s = stack_rows(n);
        let mut shapes_ok = true;
        for (i, wp) in self.waypoints.iter().enumerate() {
            if wp.stack.rows() != s || wp.fixed.len() != s {
                shapes_ok = false;
                out.push(Violation::new(
                    format!("waypoints[{i}]"),
                    Clause::Structure,
                    format!(
                        "expected {s} derivative rows, got {} values and {} flags",
                        wp.stack.rows(),
                        wp.fixed.len()
                    ),
                ));
            } else if !wp.fixed[0] {
                out.push(Violation::new(
                    format!("waypoints[{i}].fixed[0]"),
                    Clause::Structure,
                    "waypoint positions must be fixed",
                ));
            }
        }
        if shapes_ok {
            for (i, pair) in self.waypoints.windows(2).enumerate() {
                if pair[0].fully_fixed() && pair[1].fully_fixed() && pair[0].stack == pair[1].stack {
                    out.push(Violation::new(
                        format!("waypoints[{i}..={}]", i + 1),
                        Clause::StrictPositiveness,
                        "consecutive waypoints repeat identical fixed boundary conditions; \
                         the segment between them would have zero optimal duration",
                    ));
                }
            }
        }

        if self.settings.max_iterations == 0 {
            out.push(Violation::new(
                "solver.max_iterations",
                Clause::Structure,
                "iteration limit must be at least 1",
            ));
        }
        if let Some(delta) = self.settings.delta {
            if !(delta > 0.0) || !delta.is_finite() {
                out.push(Violation::new(
                    "solver.delta",
                    Clause::Structure,
                    format!("stopping tolerance must be positive, got {delta}"),
                ));
            }
        }
        out
    }
}

/// Free-function form of [`ProblemSpec::validate`].
pub fn validate_spec(spec: &ProblemSpec) -> Result<Vec<Notice>> {
    spec.validate()
}
