//! Shared fixtures for the benchmarks.

use skewspec_core::potentials::PhasePoint;
use skewspec_core::{build_restriction, PotentialSpec, TridiagonalOperator};

/// Skew-shift window (λ = 1) of length `n` at a generic phase.
pub fn skew_window(n: usize) -> TridiagonalOperator {
    let spec = PotentialSpec::skew_shift(1.0).with_phase(PhasePoint::new(0.123, 0.456));
    build_restriction(&spec, 0, n).expect("valid window")
}

/// Harper window (λ = 1) of length `n` at a generic phase.
pub fn harper_window(n: usize) -> TridiagonalOperator {
    let spec = PotentialSpec::harper(1.0).with_phase(PhasePoint::new(0.123, 0.0));
    build_restriction(&spec, 0, n).expect("valid window")
}
