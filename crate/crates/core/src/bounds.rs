//! Certified enclosures of `Spec H` from finite restrictions.
//!
//! Two kinds of statement live here:
//!
//! * distance bounds: an approximate eigenvector `ξ` of `H_I` with
//!   residual `ε` certifies `dist(E, Spec H) ≤ ε + |ξ_first| + |ξ_last|`;
//! * endpoint bounds: `σ₊ = max Spec H ≤ max over phases of λ₊ + 2/N`, where
//!   `λ₊` is the top eigenvalue of the length-`N` window at a given phase.
//!
//! The maximum over the phase torus is taken on a finite grid and completed
//! to a torus maximum by enclosing every grid cell. Over a cell of half-widths
//! `(h_x, h_y)` the phase of site `n` moves by at most `r_n` turns, so
//! `V_n ≤ W_n = min(2|λ|, 2λc_n + 4π|λ| r_n |s_n| + 4π²|λ| r_n²)` with
//! `(c_n, s_n)` the cosine and sine at the cell center. Since `H_I` is
//! monotone in its diagonal, the top eigenvalue of `diag(W) + Δ` bounds `λ₊`
//! over the whole cell.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{Family, PhasePoint, PotentialSpec, Turn};
use crate::tridiag::{sturm, EigenPair, TridiagonalOperator};

/// `ε + |ξ_first| + |ξ_last|` for a computed eigenpair, with `ε` the bracket
/// width plus the residual.
pub fn eigenpair_distance_bound(pair: &EigenPair) -> f64 {
    pair.certification_error() + pair.boundary_weight
}

/// Unit-norm tolerance accepted by [`approx_eigenvector_bound`].
pub const NORM_TOLERANCE: f64 = 1e-12;

/// `‖H_I ξ − Eξ‖₂ + |ξ_first| + |ξ_last|`, an upper bound on `dist(E, Spec H)`.
pub fn approx_eigenvector_bound(op: &TridiagonalOperator, xi: &[f64], e: f64) -> Result<f64> {
    if xi.len() != op.len() {
        return Err(Error::InvalidArgument(format!(
            "vector has length {}, operator has N = {}",
            xi.len(),
            op.len()
        )));
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
        return Err(Error::NotNormalized(norm));
    }
    Ok(op.residual_norm(xi, e) + xi[0].abs() + xi[xi.len() - 1].abs())
}

/// Uniform grid `{(i/nx, j/ny)}` on the phase torus. Each point is the center
/// of a cell of half-widths `(1/2nx, 1/2ny)`; the cells tile the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseGrid {
    pub nx: usize,
    pub ny: usize,
}

impl PhaseGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "phase grid must be at least 1×1, got {nx}×{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    /// Collapses the axes the family does not depend on.
    pub fn for_family(family: &Family, nx: usize, ny: usize) -> Result<Self> {
        match family.phase_dims() {
            Some(0) => Self::new(1, 1),
            Some(1) => Self::new(nx, 1),
            Some(_) => Self::new(nx, ny),
            None => Err(Error::NotErgodic(family.name())),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize, j: usize) -> PhasePoint {
        PhasePoint::new(i as f64 / self.nx as f64, j as f64 / self.ny as f64)
    }

    /// All points, `x` outer and `y` inner.
    pub fn points(&self) -> Vec<PhasePoint> {
        (0..self.nx)
            .flat_map(|i| (0..self.ny).map(move |j| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    pub fn half_widths(&self) -> (f64, f64) {
        (0.5 / self.nx as f64, 0.5 / self.ny as f64)
    }
}

/// How the grid maximum is completed to a maximum over the torus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlackMode {
    /// Per-cell diagonal envelope (tight; the default).
    #[default]
    CellEnclosure,
    /// Global Lipschitz constant `4π|λ|·max_n r_n` added to the grid maximum.
    Lipschitz,
}

impl std::str::FromStr for SlackMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell-enclosure" => Ok(Self::CellEnclosure),
            "lipschitz" => Ok(Self::Lipschitz),
            other => Err(Error::Parse {
                key: "slack_mode".into(),
                msg: format!("expected `cell-enclosure` or `lipschitz`, got `{other}`"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaOptions {
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub slack_mode: SlackMode,
}

impl SigmaOptions {
    /// 4096 points for one-dimensional phase spaces; 256 × min(256·N, 2¹⁶)
    /// for two-dimensional ones, which keeps the `y`-direction phase spread
    /// `(N − 1)/2ny` comparable to the `x` one.
    pub fn default_for(family: &Family, n: usize) -> Self {
        let (grid_nx, grid_ny) = match family.phase_dims() {
            Some(2) => (256, (256 * n).clamp(1, 1 << 16)),
            _ => (4096, 1),
        };
        Self {
            grid_nx,
            grid_ny,
            slack_mode: SlackMode::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlackBreakdown {
    /// The `2/N` term.
    pub two_over_n: f64,
    /// Cell enclosure (or Lipschitz) excess over the grid maximum, including
    /// bisection brackets.
    pub discretization: f64,
}

/// Certified `σ₋ ≥ sigma_minus_lower` and `σ₊ ≤ sigma_plus_upper`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumBound {
    pub sigma_plus_upper: f64,
    pub sigma_minus_lower: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub slack_mode: SlackMode,
    /// `sigma_plus_upper − window_max`.
    pub slack: f64,
    pub slack_breakdown: SlackBreakdown,
    /// Phase attaining `window_max` (smallest `(x, y)` on ties).
    pub argmax_phase: PhasePoint,
    /// Largest `λ₊` over the grid; a lower bound for `σ₊`.
    pub window_max: f64,
    /// Smallest `λ₋` over the grid; an upper bound for `σ₋`.
    pub window_min: f64,
    /// Whether the lower side came from the `x ↦ x + ½` symmetry.
    pub lower_by_symmetry: bool,
}

/// Certified enclosure `[σ₋, σ₊]` from windows `[0, N − 1]` over a phase grid.
/// The phase stored in `spec` is ignored; the whole torus is swept.
pub fn sigma_plus_bound(
    spec: &PotentialSpec,
    n: usize,
    opts: &SigmaOptions,
) -> Result<SpectrumBound> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "sigma bound needs N ≥ 2, got {n}"
        )));
    }
    let grid = PhaseGrid::for_family(&spec.family, opts.grid_nx, opts.grid_ny)?;
    let top = sweep(spec, n, grid, opts.slack_mode)?;
    let two_over_n = 2.0 / n as f64;
    let discretization = top.enclosure - top.grid_max;
    let slack = two_over_n + discretization;
    let sigma_plus_upper = top.grid_max + slack;
    let lower_by_symmetry = spec.family.has_sign_flip();
    let (sigma_minus_lower, window_min) = if lower_by_symmetry {
        (-sigma_plus_upper, -top.grid_max)
    } else {
        let bottom = sweep(&negated(spec), n, grid, opts.slack_mode)?;
        (-(bottom.enclosure + two_over_n), -bottom.grid_max)
    };
    Ok(SpectrumBound {
        sigma_plus_upper,
        sigma_minus_lower,
        n,
        grid_nx: grid.nx,
        grid_ny: grid.ny,
        slack_mode: opts.slack_mode,
        slack,
        slack_breakdown: SlackBreakdown {
            two_over_n,
            discretization,
        },
        argmax_phase: grid.point(top.argmax.0, top.argmax.1),
        window_max: top.grid_max,
        window_min,
        lower_by_symmetry,
    })
}

/// `−V`, whose top window eigenvalues are minus the bottom ones of `V`
/// (conjugating by `(−1)ⁿ` flips the sign of `Δ`).
fn negated(spec: &PotentialSpec) -> PotentialSpec {
    let mut out = spec.clone();
    match &mut out.family {
        Family::Constant(c) => *c = -*c,
        _ => out.lambda = -out.lambda,
    }
    out
}

/// `(λ₋, λ₊)` of the window `[0, N − 1]` at `phase`.
pub fn window_extremes(spec: &PotentialSpec, n: usize, phase: PhasePoint) -> Result<(f64, f64)> {
    let op = crate::tridiag::build_restriction(&spec.with_phase(phase), 0, n)?;
    Ok(op.extreme_eigenvalues())
}

/// `max |λ₋(x, y) + λ₊(x + ½, y)|` over `phases`.
pub fn verify_sign_flip_symmetry(
    spec: &PotentialSpec,
    n: usize,
    phases: &[PhasePoint],
) -> Result<f64> {
    require_sign_flip(spec)?;
    phases.iter().try_fold(0.0f64, |worst, p| {
        let (lo, _) = window_extremes(spec, n, *p)?;
        let (_, hi) = window_extremes(spec, n, p.half_turn_x())?;
        Ok(worst.max((lo + hi).abs()))
    })
}

/// Full-spectrum form: sorted eigenvalues at `(x + ½, y)` against the
/// negated, reversed eigenvalues at `(x, y)`.
pub fn verify_sign_flip_spectrum(
    spec: &PotentialSpec,
    n: usize,
    phases: &[PhasePoint],
) -> Result<f64> {
    require_sign_flip(spec)?;
    phases.iter().try_fold(0.0f64, |worst, p| {
        let a = crate::tridiag::build_restriction(&spec.with_phase(*p), 0, n)?.all_eigenvalues();
        let b = crate::tridiag::build_restriction(&spec.with_phase(p.half_turn_x()), 0, n)?
            .all_eigenvalues();
        let dev = a
            .iter()
            .rev()
            .zip(&b)
            .fold(0.0f64, |m, (u, v)| m.max((u + v).abs()));
        Ok(worst.max(dev))
    })
}

fn require_sign_flip(spec: &PotentialSpec) -> Result<()> {
    if spec.family.has_sign_flip() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "family `{}` has no x ↦ x + ½ sign flip",
            spec.family.name()
        )))
    }
}

// Grid sweep

struct SweepResult {
    /// Midpoint of the best grid bracket.
    grid_max: f64,
    argmax: (usize, usize),
    /// Certified upper bound on `λ₊` over the whole torus (before `2/N`).
    enclosure: f64,
}

/// Max of `f64`s held as bits; CAS loop, monotone.
struct SharedMax(AtomicU64);

impl SharedMax {
    fn new(v: f64) -> Self {
        Self(AtomicU64::new(v.to_bits()))
    }
    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }
    fn raise(&self, v: f64) {
        let mut cur = self.0.load(Ordering::Relaxed);
        while v > f64::from_bits(cur) {
            match self.0.compare_exchange_weak(
                cur,
                v.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => return,
                Err(seen) => cur = seen,
            }
        }
    }
}

/// Per-site envelope coefficients: `W_n = min(cap, V_n + a_n|s_n| + b_n)`.
struct Envelope {
    a: Vec<f64>,
    b: Vec<f64>,
    cap: f64,
}

impl Envelope {
    fn new(spec: &PotentialSpec, n: usize, grid: PhaseGrid) -> Self {
        let (hx, hy) = grid.half_widths();
        let lam = spec.lambda.abs();
        let radii: Vec<f64> = (0..n as i64)
            .map(|k| spec.phase_radius(k, hx, hy))
            .collect();
        Self {
            a: radii.iter().map(|r| 4.0 * PI * lam * r).collect(),
            b: radii.iter().map(|r| 4.0 * PI * PI * lam * r * r).collect(),
            cap: 2.0 * lam,
        }
    }

    fn max_radius_term(&self) -> f64 {
        // 4π|λ| r, the sup-norm Lipschitz change of 2λcos over radius r.
        self.a.iter().fold(0.0f64, |m, v| m.max(*v))
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    i: usize,
    j: usize,
}

impl Best {
    const NONE: Best = Best {
        value: f64::NEG_INFINITY,
        i: usize::MAX,
        j: usize::MAX,
    };

    /// Larger value wins; ties go to the lexicographically smaller `(i, j)`.
    fn merge(self, other: Best) -> Best {
        if other.value > self.value
            || (other.value == self.value && (other.i, other.j) < (self.i, self.j))
        {
            other
        } else {
            self
        }
    }
}

fn sweep(spec: &PotentialSpec, n: usize, grid: PhaseGrid, mode: SlackMode) -> Result<SweepResult> {
    if let Family::Constant(c) = spec.family {
        let op = TridiagonalOperator::new(vec![c; n], 0)?;
        let (lo, hi) = sturm::kth_eigenvalue(op.diag(), n - 1);
        return Ok(SweepResult {
            grid_max: 0.5 * (lo + hi),
            argmax: (0, 0),
            enclosure: hi,
        });
    }
    let env = Envelope::new(spec, n, grid);
    let two_lambda = 2.0 * spec.lambda;
    // Every cell's bisection tolerance is at most this, so pruning against
    // `best − 2·tol` cannot discard a cell whose bracket could still win.
    let tol = sturm::BISECTION_RTOL * (spec.sup_norm() + 2.0);
    let guard = 2.0 * tol;
    let want_cells = mode == SlackMode::CellEnclosure;

    // Seed the thresholds with the origin so most cells prune immediately.
    let seed_phase = grid.point(0, 0);
    let seed_diag = spec.with_phase(seed_phase).potential_window(0, n)?;
    let (seed_lo, seed_hi) = sturm::kth_eigenvalue(&seed_diag, n - 1);
    let grid_best = SharedMax::new(0.5 * (seed_lo + seed_hi));
    let cell_best = SharedMax::new(seed_hi);

    let additive = spec.family.is_additive_in_x();
    let x_trig: Vec<(f64, f64)> = (0..grid.nx)
        .map(|i| Turn::from_f64(i as f64 / grid.nx as f64).cos_sin())
        .collect();

    let rows: Vec<(Best, f64)> = (0..grid.ny)
        .into_par_iter()
        .map(|j| -> Result<(Best, f64)> {
            let mut best = Best::NONE;
            let mut cell_hi = f64::NEG_INFINITY;
            let mut trig = vec![(0.0, 0.0); n];
            let mut v = vec![0.0; n];
            let mut w = vec![0.0; n];
            let base: Option<Vec<(f64, f64)>> = if additive {
                Some(turn_trig(spec, grid.point(0, j), n)?)
            } else {
                None
            };
            for (i, &(cx, sx)) in x_trig.iter().enumerate() {
                match &base {
                    Some(b) => {
                        for (t, &(c, s)) in trig.iter_mut().zip(b) {
                            *t = (c * cx - s * sx, s * cx + c * sx);
                        }
                    }
                    None => trig = turn_trig(spec, grid.point(i, j), n)?,
                }
                let g_thr = grid_best.get() - guard;
                let c_thr = if want_cells {
                    cell_best.get() - guard
                } else {
                    f64::INFINITY
                };
                let (g_hit, c_hit) = probe(&trig, two_lambda, &env, g_thr, c_thr);
                if g_hit {
                    for (d, &(c, _)) in v.iter_mut().zip(&trig) {
                        *d = two_lambda * c;
                    }
                    let (lo, hi) = sturm::kth_eigenvalue(&v, n - 1);
                    let mid = 0.5 * (lo + hi);
                    best = best.merge(Best { value: mid, i, j });
                    grid_best.raise(mid);
                    if !want_cells {
                        cell_hi = cell_hi.max(hi);
                    }
                }
                if c_hit {
                    for (k, (d, &(c, s))) in w.iter_mut().zip(&trig).enumerate() {
                        *d = envelope_value(two_lambda * c, s, &env, k);
                    }
                    let (_, hi) = sturm::kth_eigenvalue(&w, n - 1);
                    cell_hi = cell_hi.max(hi);
                    cell_best.raise(hi);
                }
            }
            Ok((best, cell_hi))
        })
        .collect::<Result<_>>()?;

    let (best, cell_hi) = rows
        .into_iter()
        .fold((Best::NONE, f64::NEG_INFINITY), |(b, c), (rb, rc)| {
            (b.merge(rb), c.max(rc))
        });
    // The seed point is re-found by the sweep, so `best` is never empty.
    debug_assert!(best.value.is_finite());
    let enclosure = match mode {
        SlackMode::CellEnclosure => cell_hi.max(seed_hi).max(best.value),
        SlackMode::Lipschitz => cell_hi.max(seed_hi) + env.max_radius_term(),
    };
    Ok(SweepResult {
        grid_max: best.value,
        argmax: (best.i, best.j),
        enclosure,
    })
}

/// `(cos, sin)` of every window phase at `phase`.
fn turn_trig(spec: &PotentialSpec, phase: PhasePoint, n: usize) -> Result<Vec<(f64, f64)>> {
    let turns = spec
        .with_phase(phase)
        .phase_window(0, n)?
        .ok_or(Error::NotErgodic(spec.family.name()))?;
    Ok(turns.into_iter().map(Turn::cos_sin).collect())
}

#[inline]
fn envelope_value(v: f64, s: f64, env: &Envelope, k: usize) -> f64 {
    env.cap.min(v + env.a[k] * s.abs() + env.b[k])
}

#[inline]
fn pivot(q: f64, d: f64, e: f64, first: bool) -> f64 {
    let q = if first { d - e } else { (d - e) - 1.0 / q };
    if q.abs() < sturm::PIVMIN {
        if q < 0.0 {
            -sturm::PIVMIN
        } else {
            sturm::PIVMIN
        }
    } else {
        q
    }
}

/// Whether the window (`V`) and the cell envelope (`W`) have an eigenvalue at
/// or above their thresholds. Runs both Sturm recurrences in one pass.
fn probe(
    trig: &[(f64, f64)],
    two_lambda: f64,
    env: &Envelope,
    g_thr: f64,
    c_thr: f64,
) -> (bool, bool) {
    let check_cells = c_thr.is_finite();
    let (mut qv, mut qw) = (1.0, 1.0);
    let (mut g_hit, mut c_hit) = (false, !check_cells);
    for (k, &(c, s)) in trig.iter().enumerate() {
        let v = two_lambda * c;
        if !g_hit {
            qv = pivot(qv, v, g_thr, k == 0);
            g_hit = qv >= 0.0;
        }
        if !c_hit {
            qw = pivot(qw, envelope_value(v, s, env, k), c_thr, k == 0);
            c_hit = qw >= 0.0;
        }
        if g_hit && c_hit {
            break;
        }
    }
    (g_hit, c_hit && check_cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_eigenvector_without_boundary_mass() {
        let pair = EigenPair {
            index: 0,
            value: 0.0,
            vector: vec![0.0, 1.0, 0.0],
            boundary_weight: 0.0,
            bracket_width: 0.0,
            residual: 0.0,
        };
        assert_eq!(eigenpair_distance_bound(&pair), 0.0);
    }

    #[test]
    fn unit_site_vector() {
        let op = TridiagonalOperator::new(vec![0.3, -0.2, 0.9, 0.1], 0).unwrap();
        let mut xi = vec![0.0; 4];
        xi[2] = 1.0;
        let b = approx_eigenvector_bound(&op, &xi, 0.9).unwrap();
        assert!((b - 2f64.sqrt()).abs() < 1e-15);
        xi[2] = 1.1;
        assert!(matches!(
            approx_eigenvector_bound(&op, &xi, 0.9),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn constant_family_sigma() {
        let b = sigma_plus_bound(
            &PotentialSpec::constant(0.0),
            100,
            &SigmaOptions::default_for(&Family::Constant(0.0), 100),
        )
        .unwrap();
        let top = 2.0 * (PI / 101.0).cos();
        assert!((b.window_max - top).abs() < 1e-11);
        assert!(b.sigma_plus_upper >= 2.0);
        assert!(b.sigma_minus_lower <= -2.0);
        assert_eq!((b.grid_nx, b.grid_ny), (1, 1));
    }

    #[test]
    fn grid_collapses_unused_axes() {
        assert_eq!(
            PhaseGrid::for_family(&Family::Harper, 8, 9).unwrap(),
            PhaseGrid { nx: 8, ny: 1 }
        );
        assert_eq!(
            PhaseGrid::for_family(&Family::SkewShift, 8, 9).unwrap(),
            PhaseGrid { nx: 8, ny: 9 }
        );
        assert!(PhaseGrid::for_family(&Family::PowerBeta(1.5), 8, 9).is_err());
    }

    #[test]
    fn pruned_sweep_matches_brute_force() {
        let spec = PotentialSpec::skew_shift(1.0);
        let n = 12;
        let grid = PhaseGrid::new(8, 20).unwrap();
        let r = sweep(&spec, n, grid, SlackMode::CellEnclosure).unwrap();
        let mut brute = Best::NONE;
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let (_, hi) = window_extremes(&spec, n, grid.point(i, j)).unwrap();
                brute = brute.merge(Best { value: hi, i, j });
            }
        }
        assert!((r.grid_max - brute.value).abs() < 1e-11);
        assert!(r.enclosure >= r.grid_max);
    }

    #[test]
    fn two_site_sign_flip() {
        let d =
            verify_sign_flip_symmetry(&PotentialSpec::skew_shift(1.0), 2, &[PhasePoint::origin()])
                .unwrap();
        assert!(d <= 1e-12);
        assert!(verify_sign_flip_symmetry(
            &PotentialSpec::constant(1.0),
            2,
            &[PhasePoint::origin()]
        )
        .is_err());
    }
}
