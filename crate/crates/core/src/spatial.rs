//! Closed-form minimization over the free boundary derivatives for fixed
//! durations: `D_P* = -R_PP⁻¹ R_PF D_F` with `R_PF = R_FPᵀ`.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::objective::{Objective, ObjectiveMatrices, TimeAllocation};
use crate::poly::AXES;
use crate::problem::ProblemSpec;

/// Relative pivot threshold below which `R_PP` is treated as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;

/// Minimizes the quadratic part given the `R(T)` blocks and `D_F`.
pub fn solve_with(m: &ObjectiveMatrices, d_f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.r_pp.nrows();
    if n == 0 {
        return Err(Error::NoFreeVariables);
    }
    let norm = m.r_pp.norm();
    let chol = Cholesky::new(m.r_pp.clone()).ok_or(Error::DegenerateFreeBlock { pivot: 0.0, norm })?;
    let pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &l| a.min(l * l));
    if !(pivot > SINGULAR_PIVOT_TOL * norm) {
        return Err(Error::DegenerateFreeBlock { pivot, norm });
    }
    let rhs = -(&m.r_pf * d_f);
    let d_p = chol.solve(&rhs);
    debug_assert_eq!(d_p.shape(), (n, AXES));
    Ok(d_p)
}

impl Objective<'_> {
    pub fn solve_spatial(&self, t: &TimeAllocation) -> Result<DMatrix<f64>> {
        solve_with(&self.matrices(t)?, self.d_f())
    }
}

/// `argmin_{D_P} J(D_P, T)`.
pub fn solve_spatial(spec: &ProblemSpec, t: &TimeAllocation) -> Result<DMatrix<f64>> {
    Objective::new(spec).solve_spatial(t)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::poly::DerivStack;
    use crate::problem::{SolverSettings, Waypoint};

    fn wp(p: f64, v: Option<f64>) -> Waypoint {
        Waypoint::new(
            DerivStack::from_rows(&[[p, 0.0, 0.0], [v.unwrap_or(0.0), 0.0, 0.0]]).unwrap(),
            vec![true, v.is_some()],
        )
    }

    fn spec(waypoints: Vec<Waypoint>) -> ProblemSpec {
        ProblemSpec {
            degree: 3,
            d_min: 2,
            d_max: 2,
            weights: BTreeMap::from([(2, 1.0)]),
            rho: 1.0,
            waypoints,
            settings: SolverSettings::default(),
        }
    }

    #[test]
    fn interior_velocity_of_three_point_min_accel() {
        let s = spec(vec![wp(0.0, Some(0.0)), wp(1.0, None), wp(2.0, Some(0.0))]);
        let t = TimeAllocation::new(vec![1.0, 1.0]).unwrap();
        let d_p = solve_spatial(&s, &t).unwrap();
        assert!((d_p[(0, 0)] - 1.5).abs() < 1e-10);
        assert_eq!(d_p[(0, 1)], 0.0);
    }

    #[test]
    fn homogeneous_fixed_part_gives_zero() {
        let s = spec(vec![wp(0.0, Some(0.0)), wp(0.0, None), wp(0.0, None), wp(0.0, Some(0.0))]);
        let t = TimeAllocation::new(vec![0.5, 1.0, 2.0]).unwrap();
        let d_p = solve_spatial(&s, &t).unwrap();
        assert_eq!(d_p.norm(), 0.0);
    }

    #[test]
    fn all_fixed_has_no_free_variables() {
        let s = spec(vec![wp(0.0, Some(0.0)), wp(1.0, Some(0.0))]);
        let t = TimeAllocation::new(vec![1.0]).unwrap();
        assert!(matches!(solve_spatial(&s, &t), Err(Error::NoFreeVariables)));
    }

    #[test]
    fn annihilated_free_order_is_degenerate() {
        // Minimum jerk on a single quintic with free end velocity and
        // acceleration: t(T - t) changes them without changing jerk.
        let stack = |p: f64| DerivStack::from_rows(&[[p, 0.0, 0.0], [0.0; 3], [0.0; 3]]).unwrap();
        let s = ProblemSpec {
            degree: 5,
            d_min: 3,
            d_max: 3,
            weights: BTreeMap::from([(3, 1.0)]),
            rho: 1.0,
            waypoints: vec![
                Waypoint::new(stack(0.0), vec![true, false, false]),
                Waypoint::new(stack(1.0), vec![true, false, false]),
            ],
            settings: SolverSettings::default(),
        };
        let t = TimeAllocation::new(vec![1.0]).unwrap();
        assert!(matches!(
            solve_spatial(&s, &t),
            Err(Error::DegenerateFreeBlock { .. })
        ));
    }
}
