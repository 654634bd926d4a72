//! TOML problem files.
//!
//! ```toml
//! version = 1
//!
//! [objective]
//! degree = 3
//! d_min = 2
//! d_max = 2
//! rho = 36.0
//! weights = { 2 = 1.0 }
//!
//! [solver]                      # optional
//! max_iterations = 64
//! delta = 1e-9                  # optional, default 1e-9 * (1 + J0)
//! initial_guess = "default"     # or one [x, y, z] row per free entry
//!
//! [[waypoints]]
//! rows = [
//!   { order = 0, value = [0.0, 0.0, 0.0], fixed = true },
//!   { order = 1, value = [0.0, 0.0, 0.0], fixed = true },
//! ]
//! ```
//!
//! Orders left out of a waypoint are free with value zero. Unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::am::default_initial_guess;
use crate::error::{Clause, Error, Result, Violation};
use crate::objective::Partition;
use crate::poly::{stack_rows, DerivStack, AXES, MAX_DEGREE};
use crate::problem::{ProblemSpec, SolverSettings, Waypoint};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    version: u32,
    objective: ObjectiveSection,
    #[serde(default)]
    solver: SolverSection,
    waypoints: Vec<WaypointSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSection {
    degree: usize,
    d_min: usize,
    d_max: usize,
    rho: f64,
    weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    #[serde(default = "default_max_iterations")]
    max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default)]
    initial_guess: GuessSection,
}

fn default_max_iterations() -> usize {
    SolverSettings::default().max_iterations
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_iterations: default_max_iterations(),
            delta: None,
            initial_guess: GuessSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum GuessSection {
    Keyword(String),
    Rows(Vec<[f64; AXES]>),
}

impl Default for GuessSection {
    fn default() -> Self {
        GuessSection::Keyword("default".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointSection {
    rows: Vec<RowSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowSection {
    order: usize,
    value: [f64; AXES],
    fixed: bool,
}

/// Starting point for the free block.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Default,
    Explicit(DMatrix<f64>),
}

impl InitialGuess {
    pub fn resolve(&self, spec: &ProblemSpec) -> Result<DMatrix<f64>> {
        match self {
            InitialGuess::Default => default_initial_guess(spec),
            InitialGuess::Explicit(m) => Ok(m.clone()),
        }
    }
}

/// A validated problem plus its starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedProblem {
    pub spec: ProblemSpec,
    pub initial_guess: InitialGuess,
}

fn structure(field: impl Into<String>, msg: impl Into<String>) -> Violation {
    Violation::new(field, Clause::Structure, msg)
}

/// Parses and validates problem text. `context` names the source in errors.
pub fn parse_problem(text: &str, context: &str) -> Result<LoadedProblem> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    })?;
    let mut violations = Vec::new();
    if file.version != FORMAT_VERSION {
        violations.push(structure(
            "version",
            format!("unsupported format version {}, expected {FORMAT_VERSION}", file.version),
        ));
    }

    let obj = &file.objective;
    let mut weights = BTreeMap::new();
    for (key, &w) in &obj.weights {
        match key.parse::<usize>() {
            Ok(r) => {
                weights.insert(r, w);
            }
            Err(_) => violations.push(structure(
                format!("objective.weights.{key}"),
                "weight keys must be derivative orders",
            )),
        }
    }

    if obj.degree % 2 == 0 || obj.degree > MAX_DEGREE {
        violations.push(structure(
            "objective.degree",
            format!("degree must be odd in [1, {MAX_DEGREE}], got {}", obj.degree),
        ));
        return Err(Error::Validation(violations));
    }
    let s = stack_rows(obj.degree);
    let mut waypoints = Vec::with_capacity(file.waypoints.len());
    for (i, wp) in file.waypoints.iter().enumerate() {
        let mut values = DMatrix::zeros(s, AXES);
        let mut fixed = vec![false; s];
        let mut seen = vec![false; s];
        for (j, row) in wp.rows.iter().enumerate() {
            let field = format!("waypoints[{i}].rows[{j}]");
            if row.order >= s {
                violations.push(structure(
                    field,
                    format!("order {} exceeds {} for degree {}", row.order, s - 1, obj.degree),
                ));
                continue;
            }
            if seen[row.order] {
                violations.push(structure(field, format!("order {} given twice", row.order)));
                continue;
            }
            if row.value.iter().any(|v| !v.is_finite()) {
                violations.push(structure(field, "value is not finite"));
                continue;
            }
            seen[row.order] = true;
            fixed[row.order] = row.fixed;
            for (a, &v) in row.value.iter().enumerate() {
                values[(row.order, a)] = v;
            }
        }
        if !seen[0] {
            violations.push(structure(format!("waypoints[{i}]"), "missing position row (order 0)"));
        }
        waypoints.push(Waypoint::new(
            DerivStack::new(values).expect("checked finite"),
            fixed,
        ));
    }

    let spec = ProblemSpec {
        degree: obj.degree,
        d_min: obj.d_min,
        d_max: obj.d_max,
        weights,
        rho: obj.rho,
        waypoints,
        settings: SolverSettings {
            max_iterations: file.solver.max_iterations,
            delta: file.solver.delta,
        },
    };
    if violations.is_empty() {
        violations.extend(spec.violations().into_iter().map(|mut v| {
            v.field = qualify(&v.field);
            v
        }));
    }

    let initial_guess = match &file.solver.initial_guess {
        GuessSection::Keyword(k) if k == "default" => InitialGuess::Default,
        GuessSection::Keyword(k) => {
            violations.push(structure(
                "solver.initial_guess",
                format!("expected \"default\" or a list of rows, got \"{k}\""),
            ));
            InitialGuess::Default
        }
        GuessSection::Rows(rows) => {
            if violations.is_empty() {
                let n_free = Partition::new(&spec).n_free();
                if rows.len() != n_free {
                    violations.push(structure(
                        "solver.initial_guess",
                        format!("expected {n_free} rows (one per free entry), got {}", rows.len()),
                    ));
                }
            }
            InitialGuess::Explicit(DMatrix::from_fn(rows.len(), AXES, |i, j| rows[i][j]))
        }
    };

    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(LoadedProblem {
        spec,
        initial_guess,
    })
}

/// Maps a problem-level field name onto its location in the file.
fn qualify(field: &str) -> String {
    match field {
        "rho" | "degree" | "d_min/d_max" => format!("objective.{field}"),
        f if f.starts_with("weights") => format!("objective.{f}"),
        f => f.to_string(),
    }
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text, &path.display().to_string())
}

/// Normalized TOML for a problem: every order listed, sorted, with explicit
/// solver settings.
pub fn write_problem(problem: &LoadedProblem) -> String {
    let spec = &problem.spec;
    let file = ProblemFile {
        version: FORMAT_VERSION,
        objective: ObjectiveSection {
            degree: spec.degree,
            d_min: spec.d_min,
            d_max: spec.d_max,
            rho: spec.rho,
            weights: spec.weights.iter().map(|(r, w)| (r.to_string(), *w)).collect(),
        },
        solver: SolverSection {
            max_iterations: spec.settings.max_iterations,
            delta: spec.settings.delta,
            initial_guess: match &problem.initial_guess {
                InitialGuess::Default => GuessSection::default(),
                InitialGuess::Explicit(m) => GuessSection::Rows(
                    m.row_iter().map(|r| [r[0], r[1], r[2]]).collect(),
                ),
            },
        },
        waypoints: spec
            .waypoints
            .iter()
            .map(|wp| WaypointSection {
                rows: (0..wp.stack.rows())
                    .map(|r| {
                        let v = wp.stack.order(r);
                        RowSection {
                            order: r,
                            value: [v[0], v[1], v[2]],
                            fixed: wp.fixed[r],
                        }
                    })
                    .collect(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("problem file serializes")
}
