//! Positive real roots of a univariate polynomial.
//!
//! Roots are isolated by Descartes-rule subdivision of `(0, B]`, where `B` is
//! Fujiwara's bound on root magnitudes. The sign-variation count of a
//! polynomial on an interval is read off its Bernstein coefficients there,
//! and subintervals come from de Casteljau splits, which keep every step a
//! convex combination. Both are carried in double-double arithmetic, since
//! near the roots of a high-degree polynomial the coefficients can sit many
//! decades below their maximum on `(0, B]`. Isolated roots are then bisected to full precision
//! with a compensated Horner scheme.
//!
//! Clusters narrower than `1e-12 · B` that never separate are reported once,
//! so multiple roots collapse to a single value.

use crate::error::{Error, Result};

/// Intervals narrower than this fraction of the root bound stop subdividing.
pub const COLLAPSE_REL: f64 = 1e-12;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Horner evaluation with error-free transformations; as accurate as
/// plain Horner in twice the working precision.
pub fn eval_compensated(coeffs: &[f64], x: f64) -> f64 {
    let Some((&last, rest)) = coeffs.split_last() else {
        return 0.0;
    };
    let mut s = last;
    let mut c = 0.0_f64;
    for &a in rest.iter().rev() {
        let (p, pe) = two_prod(s, x);
        let (t, se) = two_sum(p, a);
        s = t;
        c = c.mul_add(x, pe + se);
    }
    s + c
}

/// Plain Horner evaluation of ascending coefficients.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc.mul_add(x, c))
}

/// `Σ |c_i x^i|`, the scale against which residuals are judged.
pub fn abs_scale(coeffs: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    coeffs.iter().rev().fold(0.0, |acc, &c| acc.mul_add(ax, c.abs()))
}

/// Fujiwara's bound: every complex root has modulus at most the result.
fn root_bound(c: &[f64]) -> f64 {
    let n = c.len() - 1;
    let lead = c[n];
    let mut b: f64 = 0.0;
    for k in 1..=n {
        let mut ratio = (c[n - k] / lead).abs();
        if k == n {
            ratio *= 0.5;
        }
        b = b.max(ratio.powf(1.0 / k as f64));
    }
    2.0 * b
}

fn binomials(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    row
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    /// Exact quotient of two floats to double-double accuracy.
    fn ratio(a: f64, b: f64) -> Self {
        let q = a / b;
        let (p, pe) = two_prod(q, b);
        Dd::norm(q, ((a - p) - pe) / b)
    }

    fn add(self, o: Dd) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        Dd::norm(s, e + self.lo + o.lo)
    }

    fn mul(self, o: Dd) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::norm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn scale(self, x: f64) -> Self {
        let (p, e) = two_prod(self.hi, x);
        Dd::norm(p, e + self.lo * x)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Bernstein coefficients on `[0, 1]` of `Σ a_j y^j`.
fn to_bernstein(a: &[f64]) -> Vec<Dd> {
    let n = a.len() - 1;
    let cn = binomials(n);
    let rows: Vec<Vec<f64>> = (0..=n).map(binomials).collect();
    (0..=n)
        .map(|i| {
            (0..=i).fold(Dd::default(), |acc, j| {
                acc.add(Dd::ratio(rows[i][j], cn[j]).mul(Dd::new(a[j])))
            })
        })
        .collect()
}

/// De Casteljau split of a Bernstein polynomial at parameter `lam`.
fn split(b: &[Dd], lam: f64) -> (Vec<Dd>, Vec<Dd>) {
    let n = b.len() - 1;
    let mut w = b.to_vec();
    let mut left = vec![Dd::default(); n + 1];
    let mut right = vec![Dd::default(); n + 1];
    left[0] = w[0];
    right[n] = w[n];
    for k in 1..=n {
        for i in 0..=(n - k) {
            w[i] = w[i].scale(1.0 - lam).add(w[i + 1].scale(lam));
        }
        left[k] = w[0];
        right[n - k] = w[n - k];
    }
    (left, right)
}

fn sign_variations(b: &[f64]) -> usize {
    let mut count = 0;
    let mut prev = 0.0;
    for &x in b {
        if x == 0.0 {
            continue;
        }
        if prev != 0.0 && (x > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = x;
    }
    count
}

/// Nearest power of two at or above `x`.
fn pow2_ceil(x: f64) -> f64 {
    let p = 2f64.powi(x.log2().ceil() as i32);
    if p < x { 2.0 * p } else { p }
}

/// Bisects a sign-changing bracket down to adjacent floats.
fn refine(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = eval_compensated(c, lo);
    if f_lo == 0.0 {
        return lo;
    }
    if eval_compensated(c, hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval_compensated(c, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of `|p|` on `[lo, hi]`.
fn min_abs(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let f = |x: f64| eval_compensated(c, x).abs();
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if !(a > lo && b < hi && a < b) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb { a } else { b }
}

/// Roots on an interval where the Bernstein coefficients are all rounding
/// noise, typically around a multiple root. Sign changes of the compensated
/// values are bisected; local minima of `|p|` count when their residual is
/// negligible.
fn flat_roots(c: &[f64], lo: f64, hi: f64, tol: f64, out: &mut Vec<f64>) {
    const SAMPLES: usize = 64;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| eval_compensated(c, x)).collect();
    let accept = tol.max(1e3 * f64::EPSILON);
    for i in 0..SAMPLES {
        if fs[i] == 0.0 {
            out.push(xs[i]);
        } else if fs[i] * fs[i + 1] < 0.0 {
            out.push(refine(c, xs[i], xs[i + 1]));
        }
    }
    if fs[SAMPLES] == 0.0 {
        out.push(xs[SAMPLES]);
    }
    for i in 1..SAMPLES {
        let (l, m, r) = (fs[i - 1].abs(), fs[i].abs(), fs[i + 1].abs());
        if m > 0.0 && m <= l && m <= r && fs[i - 1] * fs[i + 1] > 0.0 {
            let x = min_abs(c, xs[i - 1], xs[i + 1]);
            if eval_compensated(c, x).abs() <= accept * abs_scale(c, x) {
                out.push(x);
            }
        }
    }
}

struct Pending {
    lo: f64,
    hi: f64,
    bern: Vec<Dd>,
}

/// All positive real roots of `Σ coeffs[i] T^i`, ascending, each reported
/// once.
///
/// Zero leading coefficients are ignored. Small ones are kept: a degree-16
/// polynomial with roots near 10 legitimately spans sixteen decades.
pub fn positive_real_roots(coeffs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("root tolerance must be positive, got {tol}")));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::domain("polynomial has non-finite coefficients"));
    }
    let max = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return Err(Error::domain("zero polynomial has no isolated roots"));
    }
    let mut top = coeffs.len() - 1;
    while coeffs[top] == 0.0 {
        top -= 1;
    }
    // A zero constant term only contributes the root T = 0.
    let bottom = coeffs.iter().position(|&c| c != 0.0).expect("nonzero polynomial");
    if top <= bottom {
        return Ok(Vec::new());
    }
    let c = &coeffs[bottom..=top];
    let n = c.len() - 1;

    // Powers of two keep the rescaling exact.
    let bound = pow2_ceil(root_bound(c) * 1.0625);
    let scaled: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(j, &cj)| cj * bound.powi(j as i32))
        .collect();
    let norm = pow2_ceil(scaled.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    let scaled: Vec<f64> = scaled.iter().map(|x| x / norm).collect();

    let collapse = COLLAPSE_REL * bound;
    let mut roots = Vec::new();
    let mut stack = vec![Pending {
        lo: 0.0,
        hi: bound,
        bern: to_bernstein(&scaled),
    }];
    let eps2 = f64::EPSILON * f64::EPSILON;
    let flat = 64.0 * ((n + 1) * (n + 1)) as f64 * eps2;
    while let Some(Pending { lo, hi, bern }) = stack.pop() {
        let vals: Vec<f64> = bern.iter().map(|b| b.value()).collect();
        if vals.iter().all(|b| b.abs() <= flat) {
            flat_roots(c, lo, hi, tol, &mut roots);
            continue;
        }
        let mut v = sign_variations(&vals);
        let changes = vals[0] * vals[n] < 0.0;
        // Rounding can blur the count; endpoint signs are authoritative.
        if v == 0 && changes {
            v = 1;
        } else if v == 1 && !changes {
            v = 2;
        }
        match v {
            0 => {}
            1 => roots.push(refine(c, lo, hi)),
            _ if hi - lo < collapse => {
                let mid = 0.5 * (lo + hi);
                let scale = abs_scale(c, mid);
                if eval_compensated(c, mid).abs() <= tol.max(1e3 * f64::EPSILON) * scale {
                    roots.push(mid);
                }
            }
            _ => {
                // Avoid splitting exactly on a root, which would leave it on
                // the shared endpoint of both halves.
                let noise = 16.0 * (n * n) as f64 * eps2;
                let mut pick = None;
                for lam in [0.5, 0.4375, 0.5625, 0.40625, 0.59375] {
                    let (l, r) = split(&bern, lam);
                    let at = l[n].value();
                    if at.abs() > noise || pick.is_none() {
                        let keep = at.abs() > noise;
                        pick = Some((lam, l, r));
                        if keep {
                            break;
                        }
                    }
                }
                let (lam, left, right) = pick.expect("at least one split");
                let mid = lo + lam * (hi - lo);
                stack.push(Pending {
                    lo: mid,
                    hi,
                    bern: right,
                });
                stack.push(Pending {
                    lo,
                    hi: mid,
                    bern: left,
                });
            }
        }
    }

    roots.retain(|&r| r > 0.0);
    roots.sort_by(f64::total_cmp);
    let merge = tol.max(collapse);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match out.last() {
            Some(&prev) if r - prev <= merge * r.max(1.0) => {}
            _ => out.push(r),
        }
    }
    Ok(out)
}
