//! Largest eigenvalue of the banded positive semidefinite free block.
//!
//! Small or wide-band matrices go straight to a dense symmetric eigen
//! solve. Otherwise `λ_max` is bracketed by bisection on `μ`, using the
//! fact that `μI − A` has a Cholesky factorization exactly when every
//! eigenvalue lies below `μ`. Each test is a banded factorization, so the
//! whole search costs `O(n b²)` per step instead of `O(n³)` once.

use nalgebra::DMatrix;

/// Relative width of the final bracket; the upper end is returned.
pub const BRACKET_REL: f64 = 1e-11;

const DENSE_BELOW: usize = 48;

fn dense(a: &DMatrix<f64>) -> f64 {
    let ev = a.clone().symmetric_eigenvalues();
    ev.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
}

fn bandwidth(a: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let mut b = 0;
    for j in 0..n {
        for i in (j + b + 1)..n {
            if a[(i, j)] != 0.0 {
                b = i - j;
            }
        }
    }
    b
}

/// True when `μI − A` has a banded Cholesky factorization with positive
/// pivots. `l` is scratch space of `n · (b + 1)` entries, row `j` holding
/// `L[j, j-b..=j]`.
fn below(a: &DMatrix<f64>, b: usize, mu: f64, l: &mut [f64]) -> bool {
    let n = a.nrows();
    let w = b + 1;
    // L[i, k] lives at l[i * w + (k + b - i)] for i - b <= k <= i.
    let at = |i: usize, k: usize| i * w + k + b - i;
    for j in 0..n {
        let lo = j.saturating_sub(b);
        for i in j..(j + w).min(n) {
            let mut v = if i == j { mu - a[(j, j)] } else { -a[(i, j)] };
            for k in i.saturating_sub(b).max(lo)..j {
                v -= l[at(i, k)] * l[at(j, k)];
            }
            if i == j {
                if !(v > 0.0) {
                    return false;
                }
                l[at(j, j)] = v.sqrt();
            } else {
                l[at(i, j)] = v / l[at(j, j)];
            }
        }
    }
    true
}

/// `max |λ|` of a symmetric positive semidefinite matrix. For large banded
/// input this is an upper bound within [`BRACKET_REL`] of the true value.
pub(crate) fn spectral_norm_psd(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n < DENSE_BELOW {
        return dense(a);
    }
    let band = bandwidth(a);
    if 4 * band > n {
        return dense(a);
    }
    // λ_max is at least the largest diagonal entry and at most the largest
    // absolute row sum.
    let mut lo = (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
    let mut hi = (0..n)
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if hi == 0.0 {
        return 0.0;
    }
    hi *= 1.0 + BRACKET_REL;
    let mut scratch = vec![0.0; n * (band + 1)];
    if !below(a, band, hi, &mut scratch) {
        return dense(a);
    }
    while hi - lo > BRACKET_REL * hi {
        let mid = 0.5 * (lo + hi);
        if below(a, band, mid, &mut scratch) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
