//! Reference systems used throughout the test suites and the `bench` command.

use crate::spectral::PolySystem;

/// `ẋ₁ = -x₂`, `ẋ₂ = x₁ - x₂ + x₁²x₂` (time-reversed Van der Pol oscillator;
/// the basin boundary of the origin is an unstable limit cycle).
pub fn van_der_pol() -> PolySystem {
    PolySystem::from_real_terms(&[
        vec![(vec![0, 1], -1.0)],
        vec![(vec![1, 0], 1.0), (vec![0, 1], -1.0), (vec![2, 1], 1.0)],
    ])
    .expect("valid system")
}

/// `ẋᵢ = -λxᵢ + (ρ₁x₁ + ρ₂x₂)xᵢ`; basin `{ρ₁x₁ + ρ₂x₂ < λ}`.
pub fn quadratic_pencil(lambda: f64, rho1: f64, rho2: f64) -> PolySystem {
    PolySystem::from_real_terms(&[
        vec![(vec![1, 0], -lambda), (vec![2, 0], rho1), (vec![1, 1], rho2)],
        vec![(vec![0, 1], -lambda), (vec![1, 1], rho1), (vec![0, 2], rho2)],
    ])
    .expect("valid system")
}

/// `ẋᵢ = -λxᵢ + ρ‖x‖²xᵢ`; basin `{ρ‖x‖² < λ}`.
pub fn radial_cubic(lambda: f64, rho: f64) -> PolySystem {
    PolySystem::from_real_terms(&[
        vec![(vec![1, 0], -lambda), (vec![3, 0], rho), (vec![1, 2], rho)],
        vec![(vec![0, 1], -lambda), (vec![2, 1], rho), (vec![0, 3], rho)],
    ])
    .expect("valid system")
}

/// `ẋ₁ = -x₁ - x₁x₂`, `ẋ₂ = -x₂ + x₁x₂`: its cubic Lyapunov polynomial is
/// not radially increasing.
pub fn saddle_pair() -> PolySystem {
    PolySystem::from_real_terms(&[
        vec![(vec![1, 0], -1.0), (vec![1, 1], -1.0)],
        vec![(vec![0, 1], -1.0), (vec![1, 1], 1.0)],
    ])
    .expect("valid system")
}

/// `ẋ = x(x - 1)(x + 2) = -2x + x² + x³`; basin `(-2, 1)`.
pub fn cubic_1d() -> PolySystem {
    PolySystem::from_real_terms(&[vec![(vec![1], -2.0), (vec![2], 1.0), (vec![3], 1.0)]])
        .expect("valid system")
}

/// `ẋ = -λx`.
pub fn linear_1d(lambda: f64) -> PolySystem {
    PolySystem::from_real_terms(&[vec![(vec![1], -lambda)]]).expect("valid system")
}
