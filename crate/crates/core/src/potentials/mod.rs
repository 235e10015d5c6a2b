//! Potential sequences `V_n` generated by dynamical orbits.
//!
//! Every cosine family has the form `V_n = 2λ·cos(2π·θ_n)` where `θ_n` is the
//! family's phase at step `n`:
//!
//! | family             | θ_n                              | phase used |
//! |--------------------|----------------------------------|------------|
//! | Harper             | `nω + x`                         | x          |
//! | skew-shift         | `n²ω + ny + x`                   | x, y       |
//! | skew-shift order k | `nᵏω + ny + x`                   | x, y       |
//! | doubling map       | `2ⁿ(ω/2 + x)`                    | x          |
//! | cat map            | first coordinate of `Aⁿ(x, y)`   | x, y       |
//! | power β            | `nᵝ / 2π`                        | none       |
//!
//! The constant family returns `c` and the i.i.d. family returns
//! `λ·X_n` with `X_n` uniform on `[lo, hi]`.

mod kv;
pub mod phase;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::kv::{FAMILY_NAMES, POTENTIAL_KEYS};
pub use self::phase::{Frequency, PhasePoint, Turn};

use self::phase::int_pow_mod;
use crate::error::{Error, Result};

/// Doubling-map phases come from the 53 bits of the input frequency; past this
/// step the orbit no longer depends on them.
pub const DOUBLING_PRECISION_STEPS: i64 = 50;

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Harper,
    SkewShift,
    /// `θ_n = nᵏω + ny + x` with `k ≥ 2`.
    SkewShiftOrder(u32),
    /// `V_n = 2λ cos(nᵝ)` with non-integer `β > 1`, defined for `n ≥ 0`.
    PowerBeta(f64),
    /// Defined for `n ≥ 0`.
    DoublingMap,
    /// Integer matrix with determinant 1 acting on the torus.
    CatMap([[i64; 2]; 2]),
    Constant(f64),
    IidRandom {
        lo: f64,
        hi: f64,
        seed: u64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Harper => "harper",
            Family::SkewShift => "skew-shift",
            Family::SkewShiftOrder(_) => "skew-shift-order",
            Family::PowerBeta(_) => "power-beta",
            Family::DoublingMap => "doubling-map",
            Family::CatMap(_) => "cat-map",
            Family::Constant(_) => "constant",
            Family::IidRandom { .. } => "iid-random",
        }
    }

    /// Polynomial phase `θ_n = Σ c_k nᵏ`, as (degree, coefficient source).
    fn polynomial_degree(&self) -> Option<u32> {
        match self {
            Family::Harper => Some(1),
            Family::SkewShift => Some(2),
            Family::SkewShiftOrder(k) => Some(*k),
            _ => None,
        }
    }

    fn one_sided(&self) -> bool {
        matches!(self, Family::PowerBeta(_) | Family::DoublingMap)
    }

    /// Number of torus coordinates the potential depends on, or `None` when
    /// the windows are not parameterized by a compact phase space.
    pub fn phase_dims(&self) -> Option<usize> {
        match self {
            Family::Constant(_) => Some(0),
            Family::Harper | Family::DoublingMap => Some(1),
            Family::SkewShift | Family::SkewShiftOrder(_) | Family::CatMap(_) => Some(2),
            Family::PowerBeta(_) | Family::IidRandom { .. } => None,
        }
    }

    /// True when `x ↦ x + ½` negates every `V_n`, so that conjugating by
    /// `(−1)ⁿ` maps the window spectrum at `(x, y)` onto minus the spectrum
    /// at `(x + ½, y)`.
    pub fn has_sign_flip(&self) -> bool {
        self.polynomial_degree().is_some()
    }

    /// True when `θ_n(x, y) = θ_n(0, y) + x`.
    pub fn is_additive_in_x(&self) -> bool {
        self.polynomial_degree().is_some()
    }
}

/// A fully parameterized potential.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub family: Family,
    pub lambda: f64,
    pub omega: Frequency,
    pub phase: PhasePoint,
}

impl PotentialSpec {
    pub fn new(family: Family, lambda: f64, omega: Frequency, phase: PhasePoint) -> Result<Self> {
        let spec = Self {
            family,
            lambda,
            omega,
            phase,
        };
        spec.validate()?;
        if let Family::CatMap(a) = &spec.family {
            if (a[0][0] as i128 + a[1][1] as i128).abs() <= 2 {
                log::warn!("cat-map matrix {a:?} has |trace| <= 2 and is not hyperbolic");
            }
        }
        Ok(spec)
    }

    /// Golden-mean frequency, origin phase.
    pub fn harper(lambda: f64) -> Self {
        Self::new(
            Family::Harper,
            lambda,
            Frequency::golden(),
            PhasePoint::origin(),
        )
        .expect("valid")
    }

    /// Golden-mean frequency, origin phase.
    pub fn skew_shift(lambda: f64) -> Self {
        Self::new(
            Family::SkewShift,
            lambda,
            Frequency::golden(),
            PhasePoint::origin(),
        )
        .expect("valid")
    }

    pub fn constant(c: f64) -> Self {
        Self::new(
            Family::Constant(c),
            0.0,
            Frequency::golden(),
            PhasePoint::origin(),
        )
        .expect("valid")
    }

    pub fn with_phase(&self, phase: PhasePoint) -> Self {
        Self {
            phase,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "coupling must be finite, got {}",
                self.lambda
            )));
        }
        match &self.family {
            Family::SkewShiftOrder(k) if *k < 2 => Err(Error::InvalidPotential(format!(
                "skew-shift order must be at least 2, got {k}"
            ))),
            Family::PowerBeta(beta) => {
                if !beta.is_finite() || *beta <= 1.0 {
                    Err(Error::InvalidPotential(format!(
                        "power-beta exponent must exceed 1, got {beta}"
                    )))
                } else if beta.fract() == 0.0 {
                    Err(Error::InvalidPotential(format!(
                        "power-beta exponent must not be an integer, got {beta}"
                    )))
                } else {
                    Ok(())
                }
            }
            Family::CatMap(a) => {
                let det = a[0][0] as i128 * a[1][1] as i128 - a[0][1] as i128 * a[1][0] as i128;
                if det != 1 {
                    return Err(Error::InvalidPotential(format!(
                        "cat-map matrix must have determinant 1, got {det}"
                    )));
                }
                Ok(())
            }
            Family::Constant(c) if !c.is_finite() => Err(Error::InvalidPotential(format!(
                "constant must be finite, got {c}"
            ))),
            Family::IidRandom { lo, hi, .. } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    Err(Error::InvalidPotential(format!(
                        "i.i.d. bounds must satisfy lo ≤ hi, got [{lo}, {hi}]"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Upper bound on `|V_n|` over all sites and phases.
    pub fn sup_norm(&self) -> f64 {
        match &self.family {
            Family::Constant(c) => c.abs(),
            Family::IidRandom { lo, hi, .. } => self.lambda.abs() * lo.abs().max(hi.abs()),
            _ => 2.0 * self.lambda.abs(),
        }
    }

    fn check_site(&self, n: i64) -> Result<()> {
        if self.family.one_sided() && n < 0 {
            return Err(Error::NegativeSite {
                family: self.family.name(),
                n,
            });
        }
        Ok(())
    }

    /// Coefficients `(degree, c)` of the polynomial phase, highest first.
    fn polynomial_coefficients(&self, phase: PhasePoint) -> Option<Vec<(u32, Turn)>> {
        let degree = self.family.polynomial_degree()?;
        let w = self.omega.turn();
        Some(match degree {
            1 => vec![(1, w), (0, phase.x_turn())],
            k => vec![(k, w), (1, phase.y_turn()), (0, phase.x_turn())],
        })
    }

    /// Phase `θ_n` for the families built from a torus orbit.
    pub fn phase_at(&self, n: i64) -> Result<Option<Turn>> {
        self.validate()?;
        self.check_site(n)?;
        Ok(self.phase_unchecked(n))
    }

    fn phase_unchecked(&self, n: i64) -> Option<Turn> {
        if let Some(coeffs) = self.polynomial_coefficients(self.phase) {
            return Some(eval_polynomial(&coeffs, n));
        }
        match &self.family {
            Family::DoublingMap => {
                if n > DOUBLING_PRECISION_STEPS {
                    log::warn!(
                        "doubling-map phase at n = {n} exceeds the precision of the frequency"
                    );
                }
                Some(self.doubling_origin().doubled(n as u32))
            }
            Family::CatMap(a) => Some(cat_orbit(a, self.phase, n).x_turn()),
            _ => None,
        }
    }

    fn doubling_origin(&self) -> Turn {
        Turn(self.omega.turn().0 >> 1).wrapping_add(self.phase.x_turn())
    }

    /// `V_n`.
    pub fn potential_value(&self, n: i64) -> Result<f64> {
        self.validate()?;
        self.check_site(n)?;
        Ok(self.value_unchecked(n))
    }

    fn value_unchecked(&self, n: i64) -> f64 {
        match &self.family {
            Family::Constant(c) => *c,
            Family::PowerBeta(beta) => 2.0 * self.lambda * (n as f64).powf(*beta).cos(),
            Family::IidRandom { lo, hi, seed } => {
                self.lambda * (lo + (hi - lo) * iid_uniform(*seed, n))
            }
            _ => {
                let theta = self.phase_unchecked(n).expect("cosine family");
                2.0 * self.lambda * theta.cos()
            }
        }
    }

    /// `[V_{n0}, …, V_{n0+count−1}]`.
    ///
    /// Polynomial phases advance through their forward-difference table and
    /// map orbits through exact iteration, so every entry is bit-identical to
    /// [`PotentialSpec::potential_value`].
    pub fn potential_window(&self, n0: i64, count: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if count == 0 {
            return Err(Error::InvalidArgument(
                "window length must be at least 1".into(),
            ));
        }
        self.check_site(n0)?;
        let twice_lambda = 2.0 * self.lambda;
        if let Some(coeffs) = self.polynomial_coefficients(self.phase) {
            let mut table = DifferenceTable::new(&coeffs, n0);
            return Ok((0..count)
                .map(|_| twice_lambda * table.next().cos())
                .collect());
        }
        match &self.family {
            Family::DoublingMap => {
                if n0 + count as i64 - 1 > DOUBLING_PRECISION_STEPS {
                    log::warn!(
                        "doubling-map window reaches n = {}, beyond the precision of the frequency",
                        n0 + count as i64 - 1
                    );
                }
                let mut theta = self.doubling_origin().doubled(n0 as u32);
                Ok((0..count)
                    .map(|_| {
                        let v = twice_lambda * theta.cos();
                        theta = theta.doubled(1);
                        v
                    })
                    .collect())
            }
            Family::CatMap(a) => {
                let mut p = cat_orbit(a, self.phase, n0);
                Ok((0..count)
                    .map(|_| {
                        let v = twice_lambda * p.x_turn().cos();
                        p = cat_apply(a, p);
                        v
                    })
                    .collect())
            }
            _ => Ok((0..count)
                .map(|i| self.value_unchecked(n0 + i as i64))
                .collect()),
        }
    }

    /// Phases `θ_{n0}, …` for the torus-orbit families.
    pub fn phase_window(&self, n0: i64, count: usize) -> Result<Option<Vec<Turn>>> {
        self.validate()?;
        self.check_site(n0)?;
        if let Some(coeffs) = self.polynomial_coefficients(self.phase) {
            let mut table = DifferenceTable::new(&coeffs, n0);
            return Ok(Some((0..count).map(|_| table.next()).collect()));
        }
        Ok(match self.family {
            Family::DoublingMap | Family::CatMap(_) => Some(
                (0..count)
                    .map(|i| self.phase_unchecked(n0 + i as i64).expect("orbit family"))
                    .collect(),
            ),
            _ => None,
        })
    }

    /// The spec whose orbit starts `a` steps later, so that
    /// `shifted.potential_value(n) == self.potential_value(n + a)`.
    pub fn shifted_spec(&self, a: i64) -> Result<Self> {
        self.validate()?;
        let phase = self.phase;
        let new_phase = match &self.family {
            Family::Constant(_) => phase,
            Family::Harper => PhasePoint::from_turns(
                phase
                    .x_turn()
                    .wrapping_add(self.omega.turn().times(a as i128)),
                phase.y_turn(),
            ),
            Family::SkewShift => {
                // θ(n + a) = n²ω + n(y + 2aω) + (x + ay + a²ω)
                let w = self.omega.turn();
                let a = a as i128;
                PhasePoint::from_turns(
                    phase
                        .x_turn()
                        .wrapping_add(phase.y_turn().times(a))
                        .wrapping_add(w.times(a.wrapping_mul(a))),
                    phase.y_turn().wrapping_add(w.times(2 * a)),
                )
            }
            Family::DoublingMap => {
                if a < 0 {
                    return Err(Error::InvalidArgument(
                        "the doubling map is not invertible; shift must be non-negative".into(),
                    ));
                }
                let start = self.doubling_origin().doubled(a as u32);
                PhasePoint::from_turns(
                    start.wrapping_sub(Turn(self.omega.turn().0 >> 1)),
                    phase.y_turn(),
                )
            }
            Family::CatMap(m) => cat_orbit(m, phase, a),
            Family::SkewShiftOrder(_) | Family::PowerBeta(_) | Family::IidRandom { .. } => {
                return Err(Error::NoShiftStructure(self.family.name()));
            }
        };
        Ok(self.with_phase(new_phase))
    }

    /// Radius (in turns) of the set `{θ_n(p) : p in the cell}` around the
    /// cell center, for a phase cell of half-widths `(hx, hy)`.
    pub fn phase_radius(&self, n: i64, hx: f64, hy: f64) -> f64 {
        let r = match &self.family {
            Family::Harper => hx,
            Family::SkewShift | Family::SkewShiftOrder(_) => hx + (n.unsigned_abs() as f64) * hy,
            Family::DoublingMap => hx * 2f64.powi(n.clamp(0, 1100) as i32),
            Family::CatMap(a) => {
                let row = cat_power_row(a, n);
                row[0].abs() * hx + row[1].abs() * hy
            }
            _ => 0.0,
        };
        if r.is_finite() {
            r
        } else {
            f64::INFINITY
        }
    }

    /// Flat key-value form (see [`POTENTIAL_KEYS`]).
    pub fn to_kv(&self) -> std::collections::BTreeMap<String, String> {
        kv::to_kv(self)
    }

    pub fn from_kv<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        kv::from_kv(pairs)
    }
}

fn eval_polynomial(coeffs: &[(u32, Turn)], n: i64) -> Turn {
    coeffs.iter().fold(Turn::ZERO, |acc, &(k, c)| {
        acc.wrapping_add(c.times(int_pow_mod(n, k)))
    })
}

/// Forward-difference table of a polynomial phase; all arithmetic is exact
/// modulo one turn.
struct DifferenceTable {
    diffs: Vec<Turn>,
}

impl DifferenceTable {
    fn new(coeffs: &[(u32, Turn)], n0: i64) -> Self {
        let degree = coeffs.iter().map(|c| c.0).max().unwrap_or(0) as usize;
        let mut diffs: Vec<Turn> = (0..=degree as i64)
            .map(|i| eval_polynomial(coeffs, n0.wrapping_add(i)))
            .collect();
        for order in 1..=degree {
            for i in (order..=degree).rev() {
                diffs[i] = diffs[i].wrapping_sub(diffs[i - 1]);
            }
        }
        Self { diffs }
    }

    fn next(&mut self) -> Turn {
        let current = self.diffs[0];
        for i in 0..self.diffs.len() - 1 {
            self.diffs[i] = self.diffs[i].wrapping_add(self.diffs[i + 1]);
        }
        current
    }
}

fn cat_apply(a: &[[i64; 2]; 2], p: PhasePoint) -> PhasePoint {
    let (x, y) = (p.x_turn(), p.y_turn());
    PhasePoint::from_turns(
        x.times(a[0][0] as i128)
            .wrapping_add(y.times(a[0][1] as i128)),
        x.times(a[1][0] as i128)
            .wrapping_add(y.times(a[1][1] as i128)),
    )
}

type IntMat = [[i128; 2]; 2];

fn mat_mul_wrapping(p: &IntMat, q: &IntMat) -> IntMat {
    let mut r = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = p[i][0]
                .wrapping_mul(q[0][j])
                .wrapping_add(p[i][1].wrapping_mul(q[1][j]));
        }
    }
    r
}

/// `Aⁿ` with entries reduced mod 2¹²⁸ (enough for exact torus action).
fn cat_power(a: &[[i64; 2]; 2], n: i64) -> IntMat {
    let base: IntMat = if n >= 0 {
        [
            [a[0][0] as i128, a[0][1] as i128],
            [a[1][0] as i128, a[1][1] as i128],
        ]
    } else {
        [
            [a[1][1] as i128, -(a[0][1] as i128)],
            [-(a[1][0] as i128), a[0][0] as i128],
        ]
    };
    let mut result: IntMat = [[1, 0], [0, 1]];
    let mut b = base;
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul_wrapping(&result, &b);
        }
        b = mat_mul_wrapping(&b, &b);
        e >>= 1;
    }
    result
}

/// First row of `Aⁿ` in floating point (magnitudes only matter).
fn cat_power_row(a: &[[i64; 2]; 2], n: i64) -> [f64; 2] {
    let base = if n >= 0 {
        [
            [a[0][0] as f64, a[0][1] as f64],
            [a[1][0] as f64, a[1][1] as f64],
        ]
    } else {
        [
            [a[1][1] as f64, -(a[0][1] as f64)],
            [-(a[1][0] as f64), a[0][0] as f64],
        ]
    };
    let mut row = [1.0, 0.0];
    for _ in 0..n.unsigned_abs().min(4096) {
        row = [
            row[0] * base[0][0] + row[1] * base[1][0],
            row[0] * base[0][1] + row[1] * base[1][1],
        ];
    }
    row
}

fn cat_orbit(a: &[[i64; 2]; 2], p: PhasePoint, n: i64) -> PhasePoint {
    let m = cat_power(a, n);
    let (x, y) = (p.x_turn(), p.y_turn());
    PhasePoint::from_turns(
        x.times(m[0][0]).wrapping_add(y.times(m[0][1])),
        x.times(m[1][0]).wrapping_add(y.times(m[1][1])),
    )
}

/// Uniform sample on [0, 1) keyed by `(seed, n)`; a pure function of both.
fn iid_uniform(seed: u64, n: i64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos((n as u64 as u128) * 2);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skew(x: f64, y: f64) -> PotentialSpec {
        PotentialSpec::skew_shift(1.0).with_phase(PhasePoint::new(x, y))
    }

    #[test]
    fn skew_shift_origin_is_two() {
        assert_eq!(skew(0.0, 0.0).potential_value(0).unwrap(), 2.0);
    }

    #[test]
    fn skew_shift_n1_matches_scalar_evaluation() {
        let v = skew(0.0, 0.0).potential_value(1).unwrap();
        let w = (5f64.sqrt() - 1.0) / 2.0;
        assert!((v - 2.0 * (std::f64::consts::TAU * w).cos()).abs() < 1e-14);
        assert!((v + 1.474_738).abs() < 1e-6);
    }

    #[test]
    fn both_golden_forms_give_identical_values() {
        let a = PotentialSpec::new(
            Family::SkewShift,
            1.0,
            Frequency::new((1.0 + 5f64.sqrt()) / 2.0).unwrap(),
            PhasePoint::origin(),
        )
        .unwrap();
        let b = PotentialSpec::skew_shift(1.0);
        for n in -20..200 {
            assert_eq!(a.potential_value(n).unwrap(), b.potential_value(n).unwrap());
        }
    }

    #[test]
    fn constant_window() {
        let s = PotentialSpec::constant(0.0);
        assert_eq!(s.potential_window(17, 5).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn harper_window_first_entries() {
        let w = PotentialSpec::harper(1.0).potential_window(0, 3).unwrap();
        let om = (5f64.sqrt() - 1.0) / 2.0;
        let expect = [
            2.0,
            2.0 * (std::f64::consts::TAU * om).cos(),
            2.0 * (std::f64::consts::TAU * (2.0 * om - 1.0)).cos(),
        ];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn integer_beta_rejected() {
        let s = PotentialSpec {
            family: Family::PowerBeta(2.0),
            lambda: 1.0,
            omega: Frequency::golden(),
            phase: PhasePoint::origin(),
        };
        assert!(matches!(
            s.potential_value(3),
            Err(Error::InvalidPotential(_))
        ));
        let ok = PotentialSpec {
            family: Family::PowerBeta(1.5),
            ..s
        };
        assert!(ok.potential_value(3).is_ok());
        assert!(matches!(
            ok.potential_value(-1),
            Err(Error::NegativeSite { .. })
        ));
    }

    #[test]
    fn cat_map_requires_unit_determinant() {
        let r = PotentialSpec::new(
            Family::CatMap([[2, 1], [1, 2]]),
            1.0,
            Frequency::golden(),
            PhasePoint::origin(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_shift_is_identity() {
        let s = skew(0.3, 0.7);
        assert_eq!(s.shifted_spec(0).unwrap(), s);
    }

    #[test]
    fn skew_shift_unit_shift() {
        let s = skew(0.0, 0.0);
        let t = s.shifted_spec(1).unwrap();
        let w = s.omega.turn();
        assert_eq!(t.phase.x_turn(), w);
        assert_eq!(t.phase.y_turn(), w.times(2));
        for n in 0..=50 {
            assert_eq!(
                t.potential_value(n).unwrap(),
                s.potential_value(n + 1).unwrap()
            );
        }
    }

    #[test]
    fn harper_shift_is_rotation() {
        let s = PotentialSpec::harper(1.0);
        let t = s.shifted_spec(3).unwrap();
        assert_eq!(t.phase.x_turn(), s.omega.turn().times(3));
    }

    #[test]
    fn families_without_dynamics_reject_shift() {
        let s = PotentialSpec::new(
            Family::IidRandom {
                lo: -1.0,
                hi: 1.0,
                seed: 3,
            },
            1.0,
            Frequency::golden(),
            PhasePoint::origin(),
        )
        .unwrap();
        assert!(matches!(s.shifted_spec(2), Err(Error::NoShiftStructure(_))));
    }

    #[test]
    fn iid_is_reproducible_and_random_access() {
        let s = PotentialSpec::new(
            Family::IidRandom {
                lo: -2.0,
                hi: 2.0,
                seed: 99,
            },
            1.0,
            Frequency::golden(),
            PhasePoint::origin(),
        )
        .unwrap();
        let w = s.potential_window(-5, 20).unwrap();
        for (i, v) in w.iter().enumerate() {
            assert_eq!(*v, s.potential_value(-5 + i as i64).unwrap());
            assert!(v.abs() <= 2.0);
        }
        assert_ne!(w[0], w[1]);
    }

    #[test]
    fn doubling_map_matches_closed_form() {
        let s = PotentialSpec::new(
            Family::DoublingMap,
            1.0,
            Frequency::new(0.3).unwrap(),
            PhasePoint::origin(),
        )
        .unwrap();
        for n in 0..20 {
            let exact = 2.0 * (std::f64::consts::PI * 2f64.powi(n) * 0.3).cos();
            let v = s.potential_value(n as i64).unwrap();
            assert!((v - exact).abs() < 1e-9, "n={n}: {v} vs {exact}");
        }
    }
}
