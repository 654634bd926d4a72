use std::fmt::Write;

use crate::am::SolveResult;
use crate::error::{Error, Result};

/// Samples of the trajectory on a uniform global timeline.
///
/// Columns are `t`, then `x,y,z` for position, then `x_d{r},y_d{r},z_d{r}`
/// for each derivative order `r = 1..=max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySamples {
    pub max_order: usize,
    pub rows: Vec<Vec<f64>>,
}

impl TrajectorySamples {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for r in 0..=self.max_order {
            for axis in ["x", "y", "z"] {
                h.push(if r == 0 {
                    axis.to_string()
                } else {
                    format!("{axis}_d{r}")
                });
            }
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }
}

/// Samples position and derivatives up to `max_order` every `dt` seconds,
/// from `t = 0` to the last sample not past the total duration.
pub fn export_trajectory(result: &SolveResult, dt: f64, max_order: usize) -> Result<TrajectorySamples> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("sample interval must be positive, got {dt}")));
    }
    let Some(first) = result.segments.first() else {
        return Err(Error::domain("result has no segments"));
    };
    let degree = first.degree();
    if max_order > degree {
        return Err(Error::domain(format!(
            "max_order {max_order} exceeds polynomial degree {degree}"
        )));
    }

    let starts: Vec<f64> = result
        .segments
        .iter()
        .scan(0.0, |acc, s| {
            let start = *acc;
            *acc += s.duration();
            Some(start)
        })
        .collect();
    let total: f64 = result.segments.iter().map(|s| s.duration()).sum();

    let mut count = (total / dt).floor() as usize;
    while count > 0 && count as f64 * dt > total {
        count -= 1;
    }
    while ((count + 1) as f64) * dt <= total {
        count += 1;
    }

    let mut rows = Vec::with_capacity(count + 1);
    let mut m = 0;
    for i in 0..=count {
        let t = i as f64 * dt;
        while m + 1 < result.segments.len() && t >= starts[m + 1] {
            m += 1;
        }
        let seg = &result.segments[m];
        let local = (t - starts[m]).clamp(0.0, seg.duration());
        let mut row = Vec::with_capacity(1 + 3 * (max_order + 1));
        row.push(t);
        for r in 0..=max_order {
            row.extend(seg.eval(local, r)?.iter());
        }
        rows.push(row);
    }
    Ok(TrajectorySamples { max_order, rows })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use nalgebra::DMatrix;

    use super::*;
    use crate::am::{default_initial_guess, optimize};
    use crate::poly::DerivStack;
    use crate::problem::{ProblemSpec, SolverSettings, Waypoint};

    fn wp(p: f64, fix_v: bool) -> Waypoint {
        Waypoint::new(
            DerivStack::from_rows(&[[p, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap(),
            vec![true, fix_v],
        )
    }

    fn spec(waypoints: Vec<Waypoint>) -> ProblemSpec {
        ProblemSpec {
            degree: 3,
            d_min: 2,
            d_max: 2,
            weights: BTreeMap::from([(2, 1.0)]),
            rho: 36.0,
            waypoints,
            settings: SolverSettings::default(),
        }
    }

    #[test]
    fn rest_to_rest_cubic() {
        let r = optimize(&spec(vec![wp(0.0, true), wp(1.0, true)]), &DMatrix::zeros(0, 3)).unwrap();
        let s = export_trajectory(&r, 0.25, 1).unwrap();
        assert_eq!(s.header(), ["t", "x", "y", "z", "x_d1", "y_d1", "z_d1"]);
        let x: Vec<f64> = s.rows.iter().map(|row| row[1]).collect();
        let want = [0.0, 0.15625, 0.5, 0.84375, 1.0];
        assert_eq!(x.len(), want.len());
        for (a, b) in x.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(s.rows.iter().all(|row| row[2] == 0.0 && row[3] == 0.0));
        assert!((s.rows[2][4] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn continuous_across_the_knot() {
        let sp = spec(vec![wp(0.0, true), wp(1.0, false), wp(2.0, true)]);
        let r = optimize(&sp, &default_initial_guess(&sp).unwrap()).unwrap();
        let knot = r.segments[0].duration();
        let first = &r.segments[0];
        let second = &r.segments[1];
        // Degree 3 shares position and velocity at the knot.
        for order in 0..=1 {
            let a = first.eval(knot, order).unwrap();
            let b = second.eval(0.0, order).unwrap();
            assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "order {order}");
        }
        let s = export_trajectory(&r, 1e-3, 2).unwrap();
        assert_eq!(&s.rows[0][1..4], &[0.0, 0.0, 0.0]);
        let last = s.rows.last().unwrap()[0];
        assert!(last <= r.total_duration() && r.total_duration() < last + 1e-3);
        let jump = s
            .rows
            .windows(2)
            .map(|w| (w[1][1] - w[0][1]).abs())
            .fold(0.0_f64, f64::max);
        assert!(jump < 1e-2);
    }

    #[test]
    fn rejects_bad_arguments() {
        let r = optimize(&spec(vec![wp(0.0, true), wp(1.0, true)]), &DMatrix::zeros(0, 3)).unwrap();
        assert!(export_trajectory(&r, 0.0, 1).is_err());
        assert!(export_trajectory(&r, f64::NAN, 1).is_err());
        assert!(export_trajectory(&r, 0.1, 4).is_err());
        let csv = export_trajectory(&r, 0.5, 0).unwrap().to_csv();
        assert_eq!(csv.lines().next(), Some("t,x,y,z"));
        assert_eq!(csv.lines().count(), 4);
    }
}
