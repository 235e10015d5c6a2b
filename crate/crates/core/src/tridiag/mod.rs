//! Finite restrictions `H_I` and a bisection/inverse-iteration eigensolver.
//!
//! `H_I` is the `N × N` symmetric tridiagonal matrix with the sampled
//! potential on the diagonal, unit off-diagonals, and Dirichlet truncation at
//! both ends of `I = [n0, n0 + N − 1]`.
//!
//! Eigenvalues come from Sturm-count bisection, so every value carries a
//! certified bracket of width at most `1e-12·(‖diag‖_∞ + 2)`. Eigenvectors
//! come from inverse iteration at the bisected value.

pub mod inverse;
pub mod sturm;

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;

/// An eigenvalue of `H_I` with its unit eigenvector.
#[derive(Clone, Debug, Serialize)]
pub struct EigenPair {
    /// 0-based position in ascending order.
    pub index: usize,
    pub value: f64,
    pub vector: Vec<f64>,
    /// `|ξ_0| + |ξ_{N−1}|`.
    pub boundary_weight: f64,
    /// Width of the Sturm bracket containing the exact eigenvalue.
    pub bracket_width: f64,
    /// `‖H_I ξ − value·ξ‖₂` as computed.
    pub residual: f64,
}

impl EigenPair {
    /// Bracket width plus residual: the `ε` that enters distance bounds.
    pub fn certification_error(&self) -> f64 {
        self.bracket_width + self.residual
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalOperator {
    diag: Vec<f64>,
    n0: i64,
}

/// `H_I` for `I = [n0, n0 + len − 1]`.
pub fn build_restriction(spec: &PotentialSpec, n0: i64, len: usize) -> Result<TridiagonalOperator> {
    TridiagonalOperator::new(spec.potential_window(n0, len)?, n0)
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, n0: i64) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("restriction must have N ≥ 1".into()));
        }
        if let Some(bad) = diag.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite diagonal entry {bad}"
            )));
        }
        Ok(Self { diag, n0 })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn n0(&self) -> i64 {
        self.n0
    }

    /// `‖diag‖_∞ + 2`; every tolerance in this module is relative to it.
    pub fn scale(&self) -> f64 {
        sturm::scale(&self.diag)
    }

    pub fn bisection_tolerance(&self) -> f64 {
        sturm::bisection_tolerance(&self.diag)
    }

    /// Number of eigenvalues strictly below `e`.
    pub fn sturm_count(&self, e: f64) -> usize {
        sturm::sturm_count(&self.diag, e)
    }

    /// Ascending eigenvalues (bracket midpoints).
    pub fn all_eigenvalues(&self) -> Vec<f64> {
        sturm::all_brackets(&self.diag)
            .into_iter()
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Ascending eigenvalue brackets `[lo, hi]`.
    pub fn eigenvalue_brackets(&self) -> Vec<(f64, f64)> {
        sturm::all_brackets(&self.diag)
    }

    /// `(λ_min, λ_max)` by two independent bisections.
    pub fn extreme_eigenvalues(&self) -> (f64, f64) {
        let (a, b) = sturm::kth_eigenvalue(&self.diag, 0);
        let (c, d) = sturm::kth_eigenvalue(&self.diag, self.len() - 1);
        (0.5 * (a + b), 0.5 * (c + d))
    }

    /// `H_I v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        inverse::apply(&self.diag, v)
    }

    /// `‖H_I v − e v‖₂`.
    pub fn residual_norm(&self, v: &[f64], e: f64) -> f64 {
        inverse::residual(&self.diag, v, e)
    }

    /// Eigenpair `index` (0-based, ascending).
    pub fn eigenpair(&self, index: usize) -> Result<EigenPair> {
        if index >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "eigenpair index {index} out of range for N = {}",
                self.len()
            )));
        }
        let brackets = sturm::all_brackets(&self.diag);
        let (start, end) = cluster_of(&brackets, index, self.cluster_tolerance());
        let mut pairs = Vec::with_capacity(end - start);
        for (k, &bracket) in brackets.iter().enumerate().take(index + 1).skip(start) {
            let prior: Vec<&[f64]> = pairs
                .iter()
                .map(|p: &EigenPair| p.vector.as_slice())
                .collect();
            let pair = self.solve_pair(k, bracket, &prior)?;
            pairs.push(pair);
        }
        Ok(pairs.pop().expect("nonempty"))
    }

    /// Every eigenpair, ascending.
    pub fn eigenpairs(&self) -> Result<Vec<EigenPair>> {
        let brackets = sturm::all_brackets(&self.diag);
        let tol = self.cluster_tolerance();
        let mut out: Vec<EigenPair> = Vec::with_capacity(self.len());
        let mut cluster_start = 0;
        for k in 0..self.len() {
            if k > 0 && mid(brackets[k]) - mid(brackets[k - 1]) > tol {
                cluster_start = k;
            }
            let prior: Vec<&[f64]> = out[cluster_start..k]
                .iter()
                .map(|p| p.vector.as_slice())
                .collect();
            let pair = self.solve_pair(k, brackets[k], &prior)?;
            out.push(pair);
        }
        Ok(out)
    }

    fn cluster_tolerance(&self) -> f64 {
        inverse::CLUSTER_RTOL * self.scale()
    }

    fn solve_pair(&self, index: usize, bracket: (f64, f64), prior: &[&[f64]]) -> Result<EigenPair> {
        let value = mid(bracket);
        let (vector, residual) = inverse::eigenvector(&self.diag, index, value, prior)?;
        let boundary_weight = vector[0].abs() + vector[vector.len() - 1].abs();
        Ok(EigenPair {
            index,
            value,
            vector,
            boundary_weight,
            bracket_width: bracket.1 - bracket.0,
            residual,
        })
    }

    /// Debug dump: header `n,diag`, one row per site.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,diag")?;
        for (i, d) in self.diag.iter().enumerate() {
            writeln!(w, "{},{}", self.n0 + i as i64, crate::io::fmt_real(*d))?;
        }
        Ok(())
    }
}

fn mid((a, b): (f64, f64)) -> f64 {
    0.5 * (a + b)
}

/// Index range `[start, end)` of the cluster containing `index`.
fn cluster_of(brackets: &[(f64, f64)], index: usize, tol: f64) -> (usize, usize) {
    let mut start = index;
    while start > 0 && mid(brackets[start]) - mid(brackets[start - 1]) <= tol {
        start -= 1;
    }
    let mut end = index + 1;
    while end < brackets.len() && mid(brackets[end]) - mid(brackets[end - 1]) <= tol {
        end += 1;
    }
    (start, end)
}
