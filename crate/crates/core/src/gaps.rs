//! Distance-to-spectrum profiles, spectral gap bounds, and gap certificates.
//!
//! For any window eigenpair `(λ_j, ξ_j)`, `dist(t, Spec H) ≤ |t − λ_j| + w_j`
//! with `w_j` the boundary weight plus the certification error. The profile
//! `d(t)` is the minimum of these over all eigenpairs of all windows in a
//! phase set. Since `dist(·, Spec H)` is 1-Lipschitz, a grid maximum of `d`
//! plus half the grid step bounds the maximum over the continuum, and twice
//! that bounds the largest gap `Γ`.
//!
//! The converse direction certifies that an interval contains no spectrum:
//! every `E ∈ Spec H` lies within `√(2/N)` of the spectrum of some length-`N`
//! window, and every window is a phase-torus point, so it suffices that all
//! phase cells keep their eigenvalues farther than `√(2/N)` from the interval.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{PhaseGrid, SpectrumBound};
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::potentials::{Family, PhasePoint, PotentialSpec};
use crate::tridiag::{build_restriction, sturm};

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid needs count ≥ 2 and finite lo < hi, got {count} points on [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

/// Grid points plus the extra phases, first occurrence kept.
pub fn phase_set(grid: PhaseGrid, extra: &[PhasePoint]) -> Vec<PhasePoint> {
    let mut out = grid.points();
    for p in extra {
        if !out.contains(p) {
            out.push(*p);
        }
    }
    out
}

/// Side of the default profile phase grid.
pub const DEFAULT_PROFILE_GRID: usize = 64;
/// Default number of t-grid points.
pub const DEFAULT_T_POINTS: usize = 1 << 16;

/// Profile phase set: an `nx × ny` grid (collapsed to the family's phase
/// dimension) plus the origin, the `λ₊` argmax and its `x + ½` image. With
/// `nx` even the set is closed under `x ↦ x + ½`.
pub fn profile_phase_set(
    spec: &PotentialSpec,
    bound: Option<&SpectrumBound>,
    nx: usize,
    ny: usize,
) -> Result<Vec<PhasePoint>> {
    let grid = PhaseGrid::for_family(&spec.family, nx, ny)?;
    let mut extra = vec![PhasePoint::origin()];
    if let Some(b) = bound {
        extra.push(b.argmax_phase);
        extra.push(b.argmax_phase.half_turn_x());
    }
    if grid.ny == 1 {
        extra = extra
            .into_iter()
            .map(|p| PhasePoint::new(p.x(), 0.0))
            .collect();
    }
    if spec.family.phase_dims() == Some(0) {
        extra.clear();
    }
    Ok(phase_set(grid, &extra))
}

/// Profile on `nt` points spanning the window hull of `bound`.
pub fn profile_over_hull(
    spec: &PotentialSpec,
    bound: &SpectrumBound,
    phases: &[PhasePoint],
    nt: usize,
) -> Result<DistanceProfile> {
    let t = uniform_grid(bound.window_min, bound.window_max, nt)?;
    distance_profile(spec, bound.n, phases, &t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// Index into the profile's phase set.
    pub phase: usize,
    /// 0-based eigenpair index within that window.
    pub j: usize,
}

/// `d(t) = min over phases, j of |t − λ_j| + boundary_weight_j + ε_j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceProfile {
    pub t_grid: Vec<f64>,
    pub d_values: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub phase_set: Vec<PhasePoint>,
    pub witnesses: Vec<Witness>,
    /// Largest bracket-plus-residual folded into any `w_j`.
    pub max_certification_error: f64,
}

impl DistanceProfile {
    /// Largest spacing of the t grid.
    pub fn step(&self) -> f64 {
        self.t_grid
            .windows(2)
            .fold(0.0f64, |m, w| m.max(w[1] - w[0]))
    }

    /// Largest `|Δd| − |Δt|` over adjacent grid pairs; ≤ 0 up to rounding.
    pub fn lipschitz_excess(&self) -> f64 {
        self.t_grid
            .windows(2)
            .zip(self.d_values.windows(2))
            .fold(f64::NEG_INFINITY, |m, (t, d)| {
                m.max((d[1] - d[0]).abs() - (t[1] - t[0]))
            })
    }

    /// CSV with header `t,d,phase_index,j`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,d,phase_index,j")?;
        for ((t, d), wit) in self.t_grid.iter().zip(&self.d_values).zip(&self.witnesses) {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_real(*t),
                fmt_real(*d),
                wit.phase,
                wit.j
            )?;
        }
        Ok(())
    }
}

/// Eigenvalues and weights `w_j` of one window, ascending in `λ`.
struct WindowTerms {
    values: Vec<f64>,
    weights: Vec<f64>,
    max_eps: f64,
}

fn window_terms(spec: &PotentialSpec, n: usize, phase: PhasePoint) -> Result<WindowTerms> {
    let op = build_restriction(&spec.with_phase(phase), 0, n)?;
    let pairs = op.eigenpairs()?;
    let max_eps = pairs
        .iter()
        .fold(0.0f64, |m, p| m.max(p.certification_error()));
    Ok(WindowTerms {
        values: pairs.iter().map(|p| p.value).collect(),
        weights: pairs
            .iter()
            .map(|p| p.boundary_weight + p.certification_error())
            .collect(),
        max_eps,
    })
}

/// Distance profile over `t_grid` (sorted) from windows `[0, N − 1]` at
/// every phase of `phases`.
pub fn distance_profile(
    spec: &PotentialSpec,
    n: usize,
    phases: &[PhasePoint],
    t_grid: &[f64],
) -> Result<DistanceProfile> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "profile needs N ≥ 2, got {n}"
        )));
    }
    if phases.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty phase set or t grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "t grid must be strictly increasing".into(),
        ));
    }
    let terms: Vec<WindowTerms> = phases
        .par_iter()
        .map(|p| window_terms(spec, n, *p))
        .collect::<Result<_>>()?;

    let mut d_values = vec![f64::INFINITY; t_grid.len()];
    let mut witnesses = vec![Witness { phase: 0, j: 0 }; t_grid.len()];
    let mut max_eps = 0.0f64;
    // Phases in index order with strict improvement: ties keep the smaller index.
    for (pi, wt) in terms.iter().enumerate() {
        max_eps = max_eps.max(wt.max_eps);
        merge_window(wt, pi, t_grid, &mut d_values, &mut witnesses);
    }
    Ok(DistanceProfile {
        t_grid: t_grid.to_vec(),
        d_values,
        n,
        phase_set: phases.to_vec(),
        witnesses,
        max_certification_error: max_eps,
    })
}

/// Pointwise-min one window's `min_j |t − λ_j| + w_j` into the profile in
/// `O(N + len(t))` via prefix minima of `w_j − λ_j` and suffix minima of
/// `w_j + λ_j`.
fn merge_window(
    wt: &WindowTerms,
    phase: usize,
    t_grid: &[f64],
    d: &mut [f64],
    wit: &mut [Witness],
) {
    let m = wt.values.len();
    let mut prefix = Vec::with_capacity(m);
    let mut best = (f64::INFINITY, 0);
    for j in 0..m {
        let key = wt.weights[j] - wt.values[j];
        if key < best.0 {
            best = (key, j);
        }
        prefix.push(best.1);
    }
    let mut suffix = vec![0; m];
    let mut best = (f64::INFINITY, m - 1);
    for j in (0..m).rev() {
        let key = wt.weights[j] + wt.values[j];
        if key <= best.0 {
            best = (key, j);
        }
        suffix[j] = best.1;
    }
    let term = |t: f64, j: usize| (t - wt.values[j]).abs() + wt.weights[j];
    let mut k = 0;
    for (i, &t) in t_grid.iter().enumerate() {
        while k < m && wt.values[k] <= t {
            k += 1;
        }
        let mut cand = (f64::INFINITY, usize::MAX);
        for j in [
            k.checked_sub(1).map(|k| prefix[k]),
            (k < m).then(|| suffix[k]),
        ]
        .into_iter()
        .flatten()
        {
            let v = term(t, j);
            if v < cand.0 || (v == cand.0 && j < cand.1) {
                cand = (v, j);
            }
        }
        if cand.0 < d[i] {
            d[i] = cand.0;
            wit[i] = Witness { phase, j: cand.1 };
        }
    }
}

/// Upper bounds on the largest spectral gap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapBound {
    /// `2·(max d + step/2)` over t in the window hull `[window_min, window_max]`.
    pub gamma_upper: f64,
    /// Location of the profile maximum.
    pub t_star: f64,
    pub t_grid_step: f64,
    /// Certification error folded into `d` plus the `step/2` completion.
    pub rigor_slack: f64,
    /// The part of the certified enclosure not covered by the hull.
    pub edge_bands: [(f64, f64); 2],
    /// Bound on the distance to the spectrum inside each edge band.
    pub edge_distance: [f64; 2],
    /// `max(gamma_upper, 2·edge_distance)`: bounds `Γ` over the whole
    /// certified enclosure `[σ₋, σ₊]`.
    pub gamma_enclosure: f64,
}

/// Twice the Lipschitz-completed profile maximum over the window hull.
///
/// The hull `[window_min, window_max]` lies inside `[σ₋, σ₊]`, so this is the
/// quantity a finite computation can make small. Between the hull and the
/// certified enclosure, `dist(t, Spec H)` is bounded by combining the profile
/// value at the hull end with the fact that `σ₊` itself is spectrum.
pub fn gap_upper_bound(profile: &DistanceProfile, bound: &SpectrumBound) -> Result<GapBound> {
    let (lo, hi) = (bound.window_min, bound.window_max);
    let t = &profile.t_grid;
    let step = profile.step();
    let slack = step.max(f64::EPSILON * hi.abs().max(lo.abs()));
    if t.len() < 2 || t[0] > lo + slack * 1e-9 || t[t.len() - 1] < hi - slack * 1e-9 {
        return Err(Error::Coverage {
            lo: t[0],
            hi: t[t.len() - 1],
            need_lo: lo,
            need_hi: hi,
        });
    }
    let half = 0.5 * step;
    let (mut d_max, mut t_star) = (f64::NEG_INFINITY, t[0]);
    for (&ti, &di) in t.iter().zip(&profile.d_values) {
        if ti + half >= lo && ti - half <= hi && di > d_max {
            d_max = di;
            t_star = ti;
        }
    }
    let gamma_upper = 2.0 * (d_max + half);

    let at = |x: f64| -> f64 {
        t.iter()
            .zip(&profile.d_values)
            .fold(f64::INFINITY, |m, (ti, di)| m.min(di + (ti - x).abs()))
    };
    let band = |a: f64, width: f64| -> f64 {
        if width <= 0.0 {
            0.0
        } else {
            (0.5 * (a + width)).min(width)
        }
    };
    let edge_hi = band(at(hi), bound.sigma_plus_upper - hi);
    let edge_lo = band(at(lo), lo - bound.sigma_minus_lower);
    Ok(GapBound {
        gamma_upper,
        t_star,
        t_grid_step: step,
        rigor_slack: profile.max_certification_error + half,
        edge_bands: [(bound.sigma_minus_lower, lo), (hi, bound.sigma_plus_upper)],
        edge_distance: [edge_lo, edge_hi],
        gamma_enclosure: gamma_upper.max(2.0 * edge_lo).max(2.0 * edge_hi),
    })
}

/// Outcome of a gap certification attempt.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapCertificate {
    pub interval: (f64, f64),
    #[serde(rename = "N")]
    pub n: usize,
    /// `min over cells of (dist(interval, window spectrum) − cell slack) − √(2/N)`.
    pub margin: f64,
    /// `√(2/N)`.
    pub threshold: f64,
    /// Cell center attaining the minimum.
    pub worst_phase: PhasePoint,
    /// Largest per-cell perturbation slack used.
    pub max_cell_slack: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
}

impl GapCertificate {
    pub fn certified(&self) -> bool {
        self.margin > 0.0
    }
}

/// Tries to certify `(t_lo, t_hi) ∩ Spec H = ∅` using every window of length
/// `N`, parameterized by the cells of `grid`.
///
/// Inside a cell the diagonal moves by at most
/// `min(4|λ|, 4π|λ| r_n |s_n| + 4π²|λ| r_n²)` per site, so each eigenvalue
/// moves by at most the largest of these (Weyl).
pub fn certify_gap(
    spec: &PotentialSpec,
    n: usize,
    interval: (f64, f64),
    grid: PhaseGrid,
) -> Result<GapCertificate> {
    spec.validate()?;
    let (t_lo, t_hi) = interval;
    if !(t_hi > t_lo) {
        return Err(Error::InvalidArgument(format!(
            "empty interval ({t_lo}, {t_hi})"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let grid = PhaseGrid::for_family(&spec.family, grid.nx, grid.ny)?;
    let threshold = (2.0 / n as f64).sqrt();
    let (hx, hy) = grid.half_widths();
    let lam = spec.lambda.abs();
    let radii: Vec<f64> = (0..n as i64)
        .map(|k| spec.phase_radius(k, hx, hy))
        .collect();
    let constant = matches!(spec.family, Family::Constant(_));

    let cells: Vec<(usize, usize)> = (0..grid.nx)
        .flat_map(|i| (0..grid.ny).map(move |j| (i, j)))
        .collect();
    let per_cell: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let at = spec.with_phase(grid.point(i, j));
            let diag = at.potential_window(0, n)?;
            let dist = distance_to_interval(&diag, (t_lo, t_hi));
            let slack = if constant {
                0.0
            } else {
                let sines: Vec<f64> = match at.phase_window(0, n)? {
                    Some(turns) => turns.into_iter().map(|t| t.cos_sin().1).collect(),
                    None => return Err(Error::NotErgodic(spec.family.name())),
                };
                radii
                    .iter()
                    .zip(&sines)
                    .map(|(r, s)| {
                        (4.0 * lam).min(4.0 * PI * lam * r * s.abs() + 4.0 * PI * PI * lam * r * r)
                    })
                    .fold(0.0f64, f64::max)
            };
            Ok((dist - slack, slack))
        })
        .collect::<Result<_>>()?;

    let (mut worst, mut at_cell, mut max_slack) = (f64::INFINITY, 0, 0.0f64);
    for (k, (m, s)) in per_cell.iter().enumerate() {
        max_slack = max_slack.max(*s);
        if *m < worst {
            worst = *m;
            at_cell = k;
        }
    }
    let (i, j) = cells[at_cell];
    Ok(GapCertificate {
        interval,
        n,
        margin: worst - threshold,
        threshold,
        worst_phase: grid.point(i, j),
        max_cell_slack: max_slack,
        grid_nx: grid.nx,
        grid_ny: grid.ny,
    })
}

/// Lower bound on the distance from `[t_lo, t_hi]` to the spectrum of the
/// window with diagonal `diag`. Only the eigenvalues bordering the interval
/// are bisected.
fn distance_to_interval(diag: &[f64], (t_lo, t_hi): (f64, f64)) -> f64 {
    let below = sturm::sturm_count(diag, t_lo);
    if sturm::sturm_count(diag, t_hi) != below {
        return 0.0;
    }
    let mut dist = f64::INFINITY;
    if below > 0 {
        dist = dist.min(interval_gap(
            (t_lo, t_hi),
            sturm::kth_eigenvalue(diag, below - 1),
        ));
    }
    if below < diag.len() {
        dist = dist.min(interval_gap(
            (t_lo, t_hi),
            sturm::kth_eigenvalue(diag, below),
        ));
    }
    dist
}

/// Distance between a closed interval and an eigenvalue bracket, taking the
/// bracket end nearest the interval.
fn interval_gap((t_lo, t_hi): (f64, f64), (a, b): (f64, f64)) -> f64 {
    if b < t_lo {
        t_lo - b
    } else if a > t_hi {
        a - t_hi
    } else {
        0.0
    }
}

/// A gap between consecutive eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmpiricalGap {
    pub lo: f64,
    pub hi: f64,
}

impl EmpiricalGap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Gaps wider than `min_width` between consecutive sorted eigenvalues that
/// lie in `[lo, hi]`.
pub fn empirical_gaps(sorted: &[f64], lo: f64, hi: f64, min_width: f64) -> Vec<EmpiricalGap> {
    let inside: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v >= lo && *v <= hi)
        .collect();
    inside
        .windows(2)
        .map(|w| EmpiricalGap { lo: w[0], hi: w[1] })
        .filter(|g| g.width() > min_width)
        .collect()
}

/// Widest gap between consecutive sorted eigenvalues (lowest on ties).
pub fn largest_empirical_gap(sorted: &[f64]) -> Option<EmpiricalGap> {
    sorted
        .windows(2)
        .map(|w| EmpiricalGap { lo: w[0], hi: w[1] })
        .fold(None, |best: Option<EmpiricalGap>, g| match best {
            Some(b) if b.width() >= g.width() => Some(b),
            _ => Some(g),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{sigma_plus_bound, SigmaOptions};

    #[test]
    fn free_three_site_profile_at_zero() {
        let spec = PotentialSpec::constant(0.0);
        let p = distance_profile(&spec, 3, &[PhasePoint::origin()], &[-0.5, 0.0, 0.5]).unwrap();
        assert!((p.d_values[1] - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(p.witnesses[1].j, 1);
    }

    #[test]
    fn far_from_gershgorin() {
        let spec = PotentialSpec::constant(0.0);
        let p = distance_profile(&spec, 10, &[PhasePoint::origin()], &[-4.0, 3.5, 5.0]).unwrap();
        assert!(p.d_values.iter().all(|d| *d >= 1.0));
    }

    #[test]
    fn zero_profile_gives_step() {
        let spec = PotentialSpec::constant(0.0);
        let mut b =
            sigma_plus_bound(&spec, 10, &SigmaOptions::default_for(&spec.family, 10)).unwrap();
        b.window_min = -1.0;
        b.window_max = 1.0;
        let t = uniform_grid(-1.0, 1.0, 201).unwrap();
        let p = DistanceProfile {
            d_values: vec![0.0; t.len()],
            witnesses: vec![Witness { phase: 0, j: 0 }; t.len()],
            t_grid: t,
            n: 10,
            phase_set: vec![PhasePoint::origin()],
            max_certification_error: 0.0,
        };
        let g = gap_upper_bound(&p, &b).unwrap();
        assert!((g.gamma_upper - p.step()).abs() < 1e-15);
        assert!(g.gamma_enclosure >= g.gamma_upper);
    }

    #[test]
    fn coverage_is_enforced() {
        let spec = PotentialSpec::constant(0.0);
        let b = sigma_plus_bound(&spec, 10, &SigmaOptions::default_for(&spec.family, 10)).unwrap();
        let t = uniform_grid(-1.0, 1.0, 11).unwrap();
        let p = distance_profile(&spec, 10, &[PhasePoint::origin()], &t).unwrap();
        assert!(matches!(
            gap_upper_bound(&p, &b),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn far_interval_is_certified() {
        let spec = PotentialSpec::skew_shift(1.0);
        let c = certify_gap(&spec, 50, (10.0, 11.0), PhaseGrid::new(4, 4).unwrap()).unwrap();
        assert!(c.certified());
    }

    #[test]
    fn interval_distance_matches_full_spectrum() {
        let diag = [0.3, -1.2, 2.0, 0.0, 0.7, -0.4];
        let op = crate::TridiagonalOperator::new(diag.to_vec(), 0).unwrap();
        for (lo, hi) in [
            (-5.0, -4.0),
            (-0.2, 0.1),
            (0.5, 0.6),
            (3.0, 3.5),
            (-3.0, 3.0),
        ] {
            let full = op
                .eigenvalue_brackets()
                .into_iter()
                .map(|b| interval_gap((lo, hi), b))
                .fold(f64::INFINITY, f64::min);
            assert!((distance_to_interval(&diag, (lo, hi)) - full).abs() < 1e-11);
        }
    }

    #[test]
    fn interval_gap_cases() {
        assert_eq!(interval_gap((0.0, 1.0), (0.5, 0.5)), 0.0);
        assert_eq!(interval_gap((0.0, 1.0), (1.5, 1.5)), 0.5);
        assert_eq!(interval_gap((0.0, 1.0), (-2.0, -1.0)), 1.0);
    }

    #[test]
    fn gaps_of_sorted_values() {
        let v = [-1.0, -0.9, 0.5, 0.6, 2.0];
        assert_eq!(
            largest_empirical_gap(&v).unwrap(),
            EmpiricalGap { lo: -0.9, hi: 0.5 }
        );
        assert_eq!(
            empirical_gaps(&v, -1.0, 1.0, 0.2),
            vec![EmpiricalGap { lo: -0.9, hi: 0.5 }]
        );
    }
}
