//! Seeded random problems for diagnostics and tests.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::{stack_rows, DerivStack, AXES};
use crate::problem::{ProblemSpec, SolverSettings, Waypoint};

#[derive(Debug, Clone)]
pub struct InstanceConfig {
    pub degrees: Vec<usize>,
    pub min_segments: usize,
    pub max_segments: usize,
    /// Probability that an interior waypoint fixes its velocity.
    pub fixed_velocity_prob: f64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            degrees: vec![3, 5, 7],
            min_segments: 2,
            max_segments: 6,
            fixed_velocity_prob: 0.2,
        }
    }
}

fn random_vec<R: Rng>(rng: &mut R, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.random_range(-scale..scale))
}

/// A legal problem: distinct positions from a random walk, fully fixed
/// end stacks, free interior derivatives, and the top penalized order in
/// `{s − 1, s}` for `s = (N+1)/2`.
pub fn random_instance<R: Rng>(rng: &mut R, cfg: &InstanceConfig) -> ProblemSpec {
    let degree = cfg.degrees[rng.random_range(0..cfg.degrees.len())];
    let s = stack_rows(degree);
    let d_max = if s > 1 && rng.random_bool(0.3) { s - 1 } else { s };
    let d_min = rng.random_range(1..=d_max);
    let mut weights = BTreeMap::new();
    for r in d_min..=d_max {
        let w = if r == d_max {
            rng.random_range(0.5..2.0)
        } else {
            rng.random_range(0.0..1.0)
        };
        weights.insert(r, w);
    }
    let segments = rng.random_range(cfg.min_segments..=cfg.max_segments);

    let mut position = random_vec(rng, 2.0);
    let mut waypoints = Vec::with_capacity(segments + 1);
    for w in 0..=segments {
        let mut values = DMatrix::zeros(s, AXES);
        values.set_row(0, &position.transpose());
        let end = w == 0 || w == segments;
        let mut fixed = vec![end; s];
        fixed[0] = true;
        if end {
            for r in 1..s {
                values.set_row(r, &(random_vec(rng, 1.0) * 0.5).transpose());
            }
        } else if s > 1 && rng.random_bool(cfg.fixed_velocity_prob) {
            fixed[1] = true;
            values.set_row(1, &random_vec(rng, 1.0).transpose());
        }
        waypoints.push(Waypoint::new(DerivStack::new(values).expect("finite"), fixed));

        let dir = random_vec(rng, 1.0);
        let dir = if dir.norm() > 1e-3 { dir.normalize() } else { Vector3::x() };
        position += dir * rng.random_range(0.5..3.0);
    }

    ProblemSpec {
        degree,
        d_min,
        d_max,
        weights,
        rho: rng.random_range(0.5..50.0),
        waypoints,
        settings: SolverSettings::default(),
    }
}

/// `count` instances from a fixed seed.
pub fn seeded_instances(seed: u64, count: usize, cfg: &InstanceConfig) -> Vec<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, cfg)).collect()
}
