//! Piecewise-polynomial trajectory generation by alternating minimization.
//!
//! A trajectory through fixed waypoints is parametrized by its free boundary
//! derivatives `D_P` and per-segment durations `T`. The cost
//! `J = ρ‖T‖₁ + Σ_r w_r ∫‖p^(r)‖²` is minimized by alternating two exact
//! partial minimizations: a linear solve for `D_P` with `T` fixed
//! ([`spatial`]), then one polynomial root solve per segment for `T` with
//! `D_P` fixed ([`temporal`], [`roots`]). The driver in [`am`] records the
//! sufficient-decrease quantities behind the `O(1/√K)` stationarity rate on
//! every iteration, and [`am::rate_report`] checks them.
//!
//! ```
//! use amtraj::prelude::*;
//!
//! let stack = |p: f64| DerivStack::from_rows(&[[p, 0.0, 0.0], [0.0; 3]]).unwrap();
//! let spec = ProblemSpec {
//!     degree: 3,
//!     d_min: 2,
//!     d_max: 2,
//!     weights: [(2, 1.0)].into_iter().collect(),
//!     rho: 36.0,
//!     waypoints: vec![
//!         Waypoint::new(stack(0.0), vec![true, true]),
//!         Waypoint::new(stack(1.0), vec![true, false]),
//!         Waypoint::new(stack(2.0), vec![true, true]),
//!     ],
//!     settings: SolverSettings::default(),
//! };
//! let d0 = default_initial_guess(&spec).unwrap();
//! let result = optimize(&spec, &d0).unwrap();
//! assert_eq!(result.termination, Termination::ToleranceMet);
//! ```
//!
//! Convergence is only to stationary points. Strict saddles are unstable
//! under this first-order scheme, so in practice the iterates settle at
//! local minima, where the driver's envelope check probes the local
//! `O(1/K)` behaviour.

pub mod am;
pub mod error;
pub mod instances;
pub mod io;
pub mod objective;
pub mod poly;
pub mod problem;
pub mod roots;
pub mod spatial;
mod spectral;
pub mod temporal;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::am::{
        default_initial_guess, optimize, optimize_with, rate_report, ConvergenceRecord, RateReport,
        SolveResult, Termination,
    };
    pub use crate::error::{Error, Result};
    pub use crate::objective::{Objective, Partition, TimeAllocation};
    pub use crate::poly::{BoundaryPair, DerivStack, PolySegment};
    pub use crate::problem::{ProblemSpec, SolverSettings, Waypoint};
}
