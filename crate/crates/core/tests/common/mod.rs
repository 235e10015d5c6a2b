//! Independent reference implementations used as test oracles. None of them
//! shares code with the library's Sturm/inverse-iteration path.
#![allow(dead_code)]

/// Dense symmetric matrix `diag(v) + shift` with unit off-diagonals.
pub fn dense_schrodinger(diag: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = diag[i];
        if i + 1 < n {
            a[i][i + 1] = 1.0;
            a[i + 1][i] = 1.0;
        }
    }
    a
}

/// Cyclic Jacobi rotations. Returns ascending eigenvalues and the matching
/// eigenvectors (as columns, i.e. `vectors[k]` is the k-th eigenvector).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (row_p, row_q) = (a[p].clone(), a[q].clone());
                for (k, (apk, aqk)) in row_p.iter().zip(&row_q).enumerate() {
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    (values, vectors)
}

/// Leading principal minors `p_k(E) = det(diag[..k] − E)` by the three-term
/// recurrence `p_k = (d_k − E) p_{k−1} − p_{k−2}`.
pub fn char_poly(diag: &[f64], k: usize, e: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0);
    for (i, d) in diag[..k].iter().enumerate() {
        let next = if i == 0 { d - e } else { (d - e) * cur - prev };
        prev = cur;
        cur = next;
    }
    cur
}

/// Roots of the characteristic polynomial, found Givens-style: the roots of
/// `p_k` are separated by those of `p_{k−1}`, so each lies in a bracket on
/// which `p_k` changes sign and is refined by plain bisection on that sign.
pub fn char_poly_roots(diag: &[f64]) -> Vec<f64> {
    let bound = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + 3.0;
    let mut roots: Vec<f64> = Vec::new();
    for k in 1..=diag.len() {
        let mut fences = vec![-bound];
        fences.extend(&roots);
        fences.push(bound);
        roots = fences
            .windows(2)
            .map(|w| {
                let (mut lo, mut hi) = (w[0], w[1]);
                let sign_lo = char_poly(diag, k, lo).signum();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if char_poly(diag, k, mid).signum() == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
    }
    roots
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
