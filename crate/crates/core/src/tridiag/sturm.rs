//! Sturm counts and bisection on slices.
//!
//! All routines take the diagonal of a symmetric tridiagonal matrix whose
//! off-diagonal entries are 1, which is the only case the operators here need.

/// Replacement for a vanishing pivot. Small enough not to move any count
/// that a nonzero pivot would give, large enough that `1/q` stays finite.
pub(crate) const PIVMIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;

/// Relative bisection tolerance; absolute width is this times [`scale`].
pub const BISECTION_RTOL: f64 = 1e-12;

#[inline]
fn guard(q: f64) -> f64 {
    if q.abs() < PIVMIN {
        if q < 0.0 {
            -PIVMIN
        } else {
            PIVMIN
        }
    } else {
        q
    }
}

/// `‖diag‖_∞ + 2`, the Gershgorin radius of the whole matrix around 0.
pub fn scale(diag: &[f64]) -> f64 {
    diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 2.0
}

/// Absolute bracket width targeted by bisection.
pub fn bisection_tolerance(diag: &[f64]) -> f64 {
    BISECTION_RTOL * scale(diag)
}

/// Number of eigenvalues strictly below `e`.
pub fn sturm_count(diag: &[f64], e: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - e } else { (d - e) - 1.0 / q };
        q = guard(q);
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// True when every eigenvalue lies strictly below `e`; exits at the first
/// nonnegative pivot.
pub fn all_below(diag: &[f64], e: f64) -> bool {
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 { d - e } else { (d - e) - 1.0 / q };
        q = guard(q);
        if q >= 0.0 {
            return false;
        }
    }
    true
}

/// Gershgorin interval `[min d − 2, max d + 2]`, slightly widened.
pub fn gershgorin(diag: &[f64]) -> (f64, f64) {
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    let pad = 2.0 + 4.0 * f64::EPSILON * scale(diag);
    (lo - pad, hi + pad)
}

/// Bisects `[lo, hi]` for eigenvalue `k` (ascending, 0-based), assuming
/// `count(lo) ≤ k < count(hi)`. Returns the final bracket.
pub fn bisect(diag: &[f64], k: usize, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Bracket of eigenvalue `k`.
pub fn kth_eigenvalue(diag: &[f64], k: usize) -> (f64, f64) {
    let (lo, hi) = gershgorin(diag);
    bisect(diag, k, lo, hi, bisection_tolerance(diag))
}

/// Brackets of every eigenvalue, ascending. Brackets are shared: each count
/// refines the brackets of all later eigenvalues too.
pub fn all_brackets(diag: &[f64]) -> Vec<(f64, f64)> {
    let n = diag.len();
    let (lo, hi) = gershgorin(diag);
    let tol = bisection_tolerance(diag);
    let mut lower = vec![lo; n];
    let mut upper = vec![hi; n];
    for k in 0..n {
        let (mut a, mut b) = (lower[k], upper[k].max(lower[k]));
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let c = sturm_count(diag, mid);
            if c > k {
                b = mid;
                for u in &mut upper[k + 1..c.max(k + 1)] {
                    *u = u.min(mid);
                }
            } else {
                a = mid;
            }
            for l in &mut lower[c.max(k + 1)..] {
                *l = l.max(mid);
            }
        }
        lower[k] = a;
        upper[k] = b;
    }
    lower.into_iter().zip(upper).collect()
}

/// Largest eigenvalue if it is at least `threshold`, else `None`; costs a
/// single pass when the answer is `None`.
pub fn largest_at_least(diag: &[f64], threshold: f64) -> Option<(f64, f64)> {
    if all_below(diag, threshold) {
        return None;
    }
    let (lo, hi) = gershgorin(diag);
    let lo = lo.max(threshold);
    if hi <= lo {
        return Some((lo, lo));
    }
    Some(bisect(
        diag,
        diag.len() - 1,
        lo,
        hi,
        bisection_tolerance(diag),
    ))
}
