//! Finite-scale Lyapunov exponents from transfer-matrix products.
//!
//! The product `M_n = A_n ⋯ A_1`, `A_k = [[V_k − E, −1], [1, 0]]`, is kept as
//! `Q · diag(e^L, e^{L₂₂}) · R̃`-style factors: a rotation `Q = [[c, −s], [s, c]]`
//! times an upper-triangular `[[e^L r₁₁, e^L r₁₂], [0, e^{L₂₂} r₂₂]]`. Each
//! step re-triangularizes a 2×2, so the stored entries stay bounded, and the
//! two diagonal scales are tracked separately in log form. That keeps the
//! determinant `e^{L + L₂₂} r₁₁ r₂₂` observable without cancellation, which a
//! single overall rescaling would not.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::potentials::{Family, PhasePoint, PotentialSpec};

/// Stored entries are renormalized once they exceed this.
pub const DEFAULT_CAP: f64 = 1_125_899_906_842_624.0; // 2^50

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferState {
    c: f64,
    s: f64,
    r11: f64,
    r12: f64,
    r22: f64,
    /// Accumulated log of the scale extracted from the first row of `R`.
    log_scale: f64,
    /// Same for `r₂₂`.
    log_scale_22: f64,
    /// `e^{L₂₂ − L}`, cached.
    ratio: f64,
    cap: f64,
    steps: u64,
}

impl Default for TransferState {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransferState {
    pub fn identity() -> Self {
        Self::with_cap(DEFAULT_CAP)
    }

    /// Identity with a custom renormalization cap (must exceed 1).
    pub fn with_cap(cap: f64) -> Self {
        assert!(
            cap > 1.0 && cap.is_finite(),
            "renormalization cap must be finite and > 1"
        );
        Self {
            c: 1.0,
            s: 0.0,
            r11: 1.0,
            r12: 0.0,
            r22: 1.0,
            log_scale: 0.0,
            log_scale_22: 0.0,
            ratio: 1.0,
            cap,
            steps: 0,
        }
    }

    /// Left-multiplies by `[[v − E, −1], [1, 0]]`.
    pub fn step(&mut self, v: f64, e: f64) {
        let a = v - e;
        let (c, s) = (self.c, self.s);
        let (x1, y1) = (a * c - s, c);
        let p = (x1 * x1 + y1 * y1).sqrt();
        let (c1, s1) = (x1 / p, y1 / p);
        let (x2, y2) = (-a * s - c, -s);
        let q = c1 * x2 + s1 * y2;
        // Equals 1/p in exact arithmetic; computed independently so that
        // drift shows up in the determinant.
        let z = c1 * y2 - s1 * x2;
        self.c = c1;
        self.s = s1;
        self.r12 = p * self.r12 + q * self.r22 * self.ratio;
        self.r11 *= p;
        self.r22 *= z;
        self.steps += 1;
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let mut changed = false;
        let nu = (self.r11 * self.r11 + self.r12 * self.r12).sqrt();
        if nu > self.cap {
            self.r11 /= nu;
            self.r12 /= nu;
            self.log_scale += nu.ln();
            changed = true;
        }
        let d = self.r22.abs();
        if d > self.cap || d < 1.0 / self.cap {
            self.r22 /= d;
            self.log_scale_22 += d.ln();
            changed = true;
        }
        if changed {
            self.ratio = (self.log_scale_22 - self.log_scale).exp();
        }
    }

    /// `log ‖M‖₂`.
    pub fn log_norm(&self) -> f64 {
        let (a, b, d) = (self.r11, self.r12, self.r22 * self.ratio);
        let sigma = 0.5 * (((a + d) * (a + d) + b * b).sqrt() + ((a - d) * (a - d) + b * b).sqrt());
        self.log_scale + sigma.ln()
    }

    /// `det M`, evaluated in log form.
    pub fn determinant(&self) -> f64 {
        let sign = (self.r11 * self.r22).signum();
        sign * (self.r11.abs().ln() + self.r22.abs().ln() + self.log_scale + self.log_scale_22)
            .exp()
    }

    /// `|det M − 1|`.
    pub fn det_deviation(&self) -> f64 {
        (self.determinant() - 1.0).abs()
    }

    /// `e^{−L} M`, the stored (renormalized) product.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (a, b, d) = (self.r11, self.r12, self.r22 * self.ratio);
        let (c, s) = (self.c, self.s);
        [[c * a, c * b - s * d], [s * a, s * b + c * d]]
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Largest stored entry, bounded by the cap.
    pub fn max_stored_entry(&self) -> f64 {
        self.r11.abs().max(self.r12.abs()).max(self.r22.abs())
    }
}

/// Functional form of [`TransferState::step`].
pub fn transfer_step(mut state: TransferState, v: f64, e: f64) -> TransferState {
    state.step(v, e);
    state
}

/// `log ‖M_N(E)‖ / N` over the window `[0, N − 1]`.
pub fn finite_lyapunov(spec: &PotentialSpec, e: f64, n: usize) -> Result<f64> {
    finite_lyapunov_with_cap(spec, e, n, DEFAULT_CAP)
}

pub fn finite_lyapunov_with_cap(spec: &PotentialSpec, e: f64, n: usize, cap: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if !e.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "energy must be finite, got {e}"
        )));
    }
    Ok(lyapunov_of_window(&spec.potential_window(0, n)?, e, cap))
}

fn lyapunov_of_window(window: &[f64], e: f64, cap: f64) -> f64 {
    let mut st = TransferState::with_cap(cap);
    for &v in window {
        st.step(v, e);
    }
    st.log_norm() / window.len() as f64
}

/// Finite-`N` Lyapunov exponents over an energy grid, averaged over phases.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovCurve {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub num_phases: usize,
    pub seed: u64,
    pub family: String,
    /// Phases averaged over (or IID seeds, for `iid-random`).
    pub phases: Vec<PhasePoint>,
    pub iid_seeds: Vec<u64>,
}

impl LyapunovCurve {
    /// CSV with header `E,L`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "E,L")?;
        for (e, l) in self.energies.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt_real(*e), fmt_real(*l))?;
        }
        Ok(())
    }

    /// `(E, L)` with the smallest `L` (lowest `E` on ties).
    pub fn minimum(&self) -> Option<(f64, f64)> {
        self.energies
            .iter()
            .zip(&self.values)
            .fold(None, |best, (&e, &l)| match best {
                Some((_, bl)) if bl <= l => best,
                _ => Some((e, l)),
            })
    }
}

/// Realizations averaged over: `num_phases == 1` uses `spec` as given;
/// otherwise phases (or IID seeds) are drawn from a seeded generator.
fn realizations(spec: &PotentialSpec, num_phases: usize, seed: u64) -> Result<Vec<PotentialSpec>> {
    if num_phases == 1 {
        return Ok(vec![spec.clone()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match (&spec.family, spec.family.phase_dims()) {
        (Family::IidRandom { lo, hi, .. }, _) => Ok((0..num_phases)
            .map(|_| PotentialSpec {
                family: Family::IidRandom {
                    lo: *lo,
                    hi: *hi,
                    seed: rng.random(),
                },
                ..spec.clone()
            })
            .collect()),
        (_, None) => Err(Error::NotErgodic(spec.family.name())),
        (_, Some(0)) => Ok(vec![spec.clone(); num_phases]),
        (_, Some(dims)) => Ok((0..num_phases)
            .map(|_| {
                let x: f64 = rng.random();
                let y: f64 = if dims >= 2 { rng.random() } else { 0.0 };
                spec.with_phase(PhasePoint::new(x, y))
            })
            .collect()),
    }
}

/// Average of [`finite_lyapunov`] over `num_phases` realizations at each
/// energy. Reduction runs in phase order, so results do not depend on the
/// thread count.
pub fn lyapunov_curve(
    spec: &PotentialSpec,
    energies: &[f64],
    n: usize,
    num_phases: usize,
    seed: u64,
) -> Result<LyapunovCurve> {
    spec.validate()?;
    if num_phases == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "N and num_phases must be positive".into(),
        ));
    }
    if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "energy must be finite, got {e}"
        )));
    }
    let specs = realizations(spec, num_phases, seed)?;
    let windows: Vec<Vec<f64>> = specs
        .iter()
        .map(|s| s.potential_window(0, n))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = energies
        .par_iter()
        .map(|&e| {
            let sum = windows
                .iter()
                .map(|w| lyapunov_of_window(w, e, DEFAULT_CAP))
                .fold(0.0, |acc, l| acc + l);
            sum / windows.len() as f64
        })
        .collect();
    let iid_seeds = specs
        .iter()
        .filter_map(|s| match s.family {
            Family::IidRandom { seed, .. } => Some(seed),
            _ => None,
        })
        .collect();
    Ok(LyapunovCurve {
        energies: energies.to_vec(),
        values,
        n,
        num_phases,
        seed,
        family: spec.family.name().to_string(),
        phases: specs.iter().map(|s| s.phase).collect(),
        iid_seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_at_zero_potential() {
        let st = transfer_step(TransferState::identity(), 0.7, 0.7);
        let m = st.matrix();
        let want = [[0.0, -1.0], [1.0, 0.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((m[r][c] - want[r][c]).abs() < 1e-15);
            }
        }
        assert_eq!(st.log_scale(), 0.0);
    }

    #[test]
    fn matches_direct_product() {
        let vs = [0.3, -1.1, 2.0, 0.4, -0.7, 1.5, 0.0, -2.2, 0.9, 1.1];
        let e = 0.35;
        let mut st = TransferState::with_cap(4.0);
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for k in 0..20 {
            let v = vs[k % vs.len()];
            st.step(v, e);
            let a = v - e;
            m = [
                [a * m[0][0] - m[1][0], a * m[0][1] - m[1][1]],
                [m[0][0], m[0][1]],
            ];
        }
        let direct = {
            let f = m.iter().flatten().map(|x| x * x).sum::<f64>();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            (0.5 * (f + (f * f - 4.0 * det * det).max(0.0).sqrt()))
                .sqrt()
                .ln()
        };
        assert!((st.log_norm() - direct).abs() < 1e-10);
        assert!(st.det_deviation() < 1e-12);
    }

    #[test]
    fn free_energy_three() {
        let l = finite_lyapunov(&PotentialSpec::constant(0.0), 3.0, 1000).unwrap();
        assert!((l - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 0.01);
    }

    #[test]
    fn free_band_center() {
        assert!(finite_lyapunov(&PotentialSpec::constant(0.0), 0.0, 1000).unwrap() <= 0.01);
    }

    #[test]
    fn curve_is_deterministic() {
        let spec = PotentialSpec::skew_shift(1.0);
        let e = [-1.0, 0.0, 1.0];
        let a = lyapunov_curve(&spec, &e, 200, 4, 9).unwrap();
        let b = lyapunov_curve(&spec, &e, 200, 4, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.phases.len(), 4);
    }

    #[test]
    fn non_ergodic_average_rejected() {
        let spec = PotentialSpec::new(
            Family::PowerBeta(1.5),
            1.0,
            crate::Frequency::golden(),
            PhasePoint::origin(),
        )
        .unwrap();
        assert!(lyapunov_curve(&spec, &[0.0], 10, 2, 0).is_err());
        assert!(lyapunov_curve(&spec, &[0.0], 10, 1, 0).is_ok());
    }
}
