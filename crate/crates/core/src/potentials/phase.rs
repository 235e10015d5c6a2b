//! Angles on the circle ℝ/ℤ.
//!
//! Phases are stored as fixed-point fractions of a turn in units of 2⁻¹²⁸.
//! Every double in [0, 1) whose magnitude is at least 2⁻⁷⁵ converts exactly,
//! and the orbit arithmetic used by the potential families (integer
//! multiples, polynomial phases, doubling, integer matrices) is exact modular
//! arithmetic on these integers. Rounding only happens when a phase is read
//! back as a double.

use std::fmt;

use crate::error::{Error, Result};

const TWO_POW_M128: f64 = 1.0 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// A point of ℝ/ℤ in units of 2⁻¹²⁸ turns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Turn(pub u128);

impl Turn {
    pub const ZERO: Turn = Turn(0);
    pub const HALF: Turn = Turn(1 << 127);

    /// Reduces `r` mod 1 and converts to fixed point, rounding to nearest
    /// only when the fractional part is below 2⁻⁷⁵.
    pub fn from_f64(r: f64) -> Turn {
        debug_assert!(r.is_finite());
        let frac = r - r.floor();
        if frac <= 0.0 || frac >= 1.0 {
            return Turn::ZERO;
        }
        let bits = frac.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let (mantissa, exp) = if exp == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
        };
        // frac = mantissa · 2^exp, so frac · 2¹²⁸ = mantissa · 2^(exp + 128).
        let shift = exp + 128;
        if shift >= 0 {
            Turn((mantissa as u128) << shift)
        } else if shift > -64 {
            let s = (-shift) as u32;
            let m = mantissa as u128;
            let q = m >> s;
            let rem = m & ((1u128 << s) - 1);
            let half = 1u128 << (s - 1);
            let round_up = rem > half || (rem == half && q & 1 == 1);
            Turn(q + round_up as u128)
        } else {
            Turn::ZERO
        }
    }

    /// Representative in [0, 1).
    pub fn to_f64(self) -> f64 {
        let v = self.0 as f64 * TWO_POW_M128;
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    /// Representative in [−½, ½), which keeps `cos(2πθ)` accurate near integers.
    pub fn to_signed_f64(self) -> f64 {
        (self.0 as i128) as f64 * TWO_POW_M128
    }

    /// `(cos 2πθ, sin 2πθ)`.
    pub fn cos_sin(self) -> (f64, f64) {
        let (s, c) = (std::f64::consts::TAU * self.to_signed_f64()).sin_cos();
        (c, s)
    }

    pub fn cos(self) -> f64 {
        (std::f64::consts::TAU * self.to_signed_f64()).cos()
    }

    pub fn wrapping_add(self, other: Turn) -> Turn {
        Turn(self.0.wrapping_add(other.0))
    }

    pub fn wrapping_sub(self, other: Turn) -> Turn {
        Turn(self.0.wrapping_sub(other.0))
    }

    /// `k·θ mod 1` for any integer `k` (exact).
    pub fn times(self, k: i128) -> Turn {
        Turn(self.0.wrapping_mul(k as u128))
    }

    /// `2ᵏ·θ mod 1` (exact; zero once `k ≥ 128`).
    pub fn doubled(self, k: u32) -> Turn {
        if k >= 128 {
            Turn::ZERO
        } else {
            Turn(self.0 << k)
        }
    }
}

impl std::ops::Neg for Turn {
    type Output = Turn;
    fn neg(self) -> Turn {
        Turn(self.0.wrapping_neg())
    }
}

/// `nᵏ mod 2¹²⁸` as a ring element; negative `n` wraps consistently.
pub(crate) fn int_pow_mod(n: i64, k: u32) -> i128 {
    (n as i128 as u128).wrapping_pow(k) as i128
}

/// Frequency of the underlying rotation, canonicalized mod 1.
#[derive(Clone, Copy, PartialEq)]
pub struct Frequency {
    turn: Turn,
    value: f64,
}

impl Frequency {
    /// Canonicalizes `omega` to `frac(omega)`; rejects non-finite input.
    pub fn new(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "frequency must be finite, got {omega}"
            )));
        }
        let value = omega - omega.floor();
        let value = if value >= 1.0 { 0.0 } else { value };
        Ok(Self {
            turn: Turn::from_f64(value),
            value,
        })
    }

    /// `(√5 − 1)/2`, the fractional part of the golden mean.
    pub fn golden() -> Self {
        Self::new((5f64.sqrt() - 1.0) / 2.0).expect("finite")
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn turn(&self) -> Turn {
        self.turn
    }
}

impl Default for Frequency {
    fn default() -> Self {
        Self::golden()
    }
}

impl fmt::Debug for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frequency({})", self.value)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// A point `(x, y)` of the two-torus; both coordinates live in [0, 1).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhasePoint {
    x: Turn,
    y: Turn,
}

impl PhasePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self {
            x: Turn::from_f64(x),
            y: Turn::from_f64(y),
        }
    }

    pub fn from_turns(x: Turn, y: Turn) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::default()
    }

    pub fn x(&self) -> f64 {
        self.x.to_f64()
    }

    pub fn y(&self) -> f64 {
        self.y.to_f64()
    }

    pub fn x_turn(&self) -> Turn {
        self.x
    }

    pub fn y_turn(&self) -> Turn {
        self.y
    }

    /// `(x + ½, y)`, the phase whose window is the sign-flipped one for
    /// cosine potentials.
    pub fn half_turn_x(&self) -> Self {
        Self {
            x: self.x.wrapping_add(Turn::HALF),
            y: self.y,
        }
    }
}

impl fmt::Debug for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x(), self.y())
    }
}

impl serde::Serialize for PhasePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PhasePoint", 2)?;
        st.serialize_field("x", &self.x())?;
        st.serialize_field("y", &self.y())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_forms_agree() {
        let a = Frequency::new((1.0 + 5f64.sqrt()) / 2.0).unwrap();
        let b = Frequency::new((5f64.sqrt() - 1.0) / 2.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value().to_bits(), b.value().to_bits());
    }

    #[test]
    fn turn_roundtrip_is_exact_for_ordinary_doubles() {
        for &v in &[
            0.0,
            0.5,
            0.25,
            0.618_033_988_749_894_9,
            1e-10,
            0.999_999_999_999,
        ] {
            assert_eq!(Turn::from_f64(v).to_f64(), v);
        }
        assert_eq!(Turn::from_f64(-0.25).to_f64(), 0.75);
        assert_eq!(Turn::from_f64(3.5), Turn::HALF);
    }

    #[test]
    fn multiples_wrap() {
        let w = Frequency::golden().turn();
        let direct = w.times(5);
        let summed = (0..5).fold(Turn::ZERO, |acc, _| acc.wrapping_add(w));
        assert_eq!(direct, summed);
        assert_eq!(w.times(-1), -w);
    }

    #[test]
    fn cos_near_integer_is_accurate() {
        let t = Turn::from_f64(1e-12);
        assert!((t.cos() - (std::f64::consts::TAU * 1e-12).cos()).abs() < 1e-16);
        let t = Turn::from_f64(1.0 - 1e-12);
        // 1 − 1e-12 itself is only representable to about 1e-16.
        assert!((t.to_signed_f64() + 1e-12).abs() < 2e-16);
    }

    #[test]
    fn non_finite_frequency_rejected() {
        assert!(Frequency::new(f64::NAN).is_err());
    }
}
