//! Problem files, trajectory export and convergence reports.

mod export;
mod problem_file;
mod report;

pub use export::{export_trajectory, TrajectorySamples};
pub use problem_file::{
    load_problem, parse_problem, write_problem, InitialGuess, LoadedProblem, FORMAT_VERSION,
};
pub use report::{emit_report, Report, Verdicts};
