//! Inverse iteration for eigenvectors at bisected eigenvalues.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const START_SEED: u64 = 0x5eed_0f1e_c70e;

/// Number of restarts after the first attempt.
pub const MAX_RESTARTS: usize = 3;
const MAX_ITERATIONS: usize = 6;

/// Eigenvalues closer than this (relative to scale) share a cluster and get
/// Gram-Schmidt orthogonalized vectors.
pub const CLUSTER_RTOL: f64 = 1e-8;
/// Residual accepted for an eigenpair, relative to scale.
pub const RESIDUAL_RTOL: f64 = 1e-10;
const SHIFT_PERTURBATION: f64 = 1e-11;

/// LU factors of `T − σI` with partial pivoting (row interchanges only
/// between neighbors, so `U` has two superdiagonals).
struct Factorization {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl Factorization {
    fn new(diag: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut du = vec![1.0; n.saturating_sub(1)];
        let mut dl = vec![1.0f64; n.saturating_sub(1)];
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let l = dl[i] / d[i];
                dl[i] = l;
                d[i + 1] -= l * du[i];
            } else {
                let l = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = l;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - l * d[i + 1];
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -l;
                }
                swapped[i] = true;
            }
        }
        for v in &mut d {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            d,
            du,
            du2,
            dl,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let tmp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tmp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

pub(crate) fn apply(diag: &[f64], v: &[f64]) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut s = diag[i] * v[i];
            if i > 0 {
                s += v[i - 1];
            }
            if i + 1 < n {
                s += v[i + 1];
            }
            s
        })
        .collect()
}

pub(crate) fn residual(diag: &[f64], v: &[f64], e: f64) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut s = (diag[i] - e) * v[i];
        if i > 0 {
            s += v[i - 1];
        }
        if i + 1 < n {
            s += v[i + 1];
        }
        acc += s * s;
    }
    acc.sqrt()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn orthogonalize(v: &mut [f64], against: &[&[f64]]) {
    for u in against {
        let dot: f64 = v.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(u.iter()).for_each(|(a, b)| *a -= dot * b);
    }
}

/// Largest-magnitude component made positive.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenvector for eigenvalue `value` (index `index`, used to seed the start
/// vector), orthogonal to the vectors already computed for its cluster.
pub(crate) fn eigenvector(
    diag: &[f64],
    index: usize,
    value: f64,
    cluster: &[&[f64]],
) -> Result<(Vec<f64>, f64)> {
    let n = diag.len();
    let scale = super::sturm::scale(diag);
    let accept = RESIDUAL_RTOL * scale;
    let target = 64.0 * f64::EPSILON * scale * (n as f64).sqrt();
    let tiny = f64::EPSILON * scale;
    if n == 1 {
        return Ok((vec![1.0], residual(diag, &[1.0], value)));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for attempt in 0..=MAX_RESTARTS {
        let offset = match attempt {
            0 => 0.0,
            1 => SHIFT_PERTURBATION,
            2 => -SHIFT_PERTURBATION,
            _ => 2.0 * SHIFT_PERTURBATION,
        };
        let lu = Factorization::new(diag, value + offset * scale, tiny);
        let mut rng =
            ChaCha8Rng::seed_from_u64(START_SEED ^ ((index as u64) << 8) ^ attempt as u64);
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, cluster);
        if !normalize(&mut v) {
            continue;
        }
        let mut r = f64::INFINITY;
        for it in 0..MAX_ITERATIONS {
            lu.solve(&mut v);
            orthogonalize(&mut v, cluster);
            if !normalize(&mut v) {
                break;
            }
            r = residual(diag, &v, value);
            if r <= target && it >= 1 {
                break;
            }
        }
        if best.as_ref().map_or(true, |(_, br)| r < *br) {
            best = Some((v, r));
        }
        if r <= accept {
            break;
        }
    }
    match best {
        Some((mut v, r)) if r <= accept => {
            fix_sign(&mut v);
            Ok((v, r))
        }
        other => Err(Error::Stagnated {
            index,
            residual: other.map_or(f64::INFINITY, |(_, r)| r),
            attempts: MAX_RESTARTS + 1,
        }),
    }
}
