//! Number formatting shared by CSV writers.

/// Scientific notation with 16 fractional digits, enough to round-trip.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}
