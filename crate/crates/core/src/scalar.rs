//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over [`Real`], a floating-point scalar
//! combining the `num-traits` arithmetic surface with the `nalgebra` field
//! traits. `f64` is the intended working precision; `f32` is available for
//! quick experiments. Concrete type aliases live at the crate root.

use nalgebra::RealField;
use num_complex::Complex;

/// Floating-point scalar usable throughout the toolkit.
///
/// The per-precision constants below are validation defaults, not accuracy
/// guarantees: `f32` gets proportionally looser checks.
pub trait Real:
    RealField
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum<Self>
    + std::fmt::Display
    + std::fmt::LowerExp
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Default
    + Copy
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, truncating precision as needed.
    fn of(x: f64) -> Self;

    /// Machine epsilon.
    fn eps() -> Self;

    /// Absolute tolerance for Hermiticity checks on operator entries.
    fn hermiticity_tol() -> Self;

    /// Slack allowed above an exact unit operator norm.
    fn unit_norm_slack() -> Self;

    /// Largest imaginary residual accepted where a value must be real.
    fn imag_residual_tol() -> Self;

    /// Default relative tolerance for zero-gap certificate matching.
    fn certificate_tol() -> Self;

    /// Relative eigenpair residual accepted from the eigensolver.
    fn eigen_residual_tol() -> Self;

    /// Relative singular-value threshold for Schmidt rank counting.
    fn rank_tol() -> Self;

    /// Slack allowed on `|cos| <= 1` before an angle is declared
    /// inconsistent with its norms.
    fn angle_consistency_slack() -> Self;
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }
    fn eps() -> Self {
        f64::EPSILON
    }
    fn hermiticity_tol() -> Self {
        1e-12
    }
    fn unit_norm_slack() -> Self {
        1e-9
    }
    fn imag_residual_tol() -> Self {
        1e-9
    }
    fn certificate_tol() -> Self {
        1e-9
    }
    fn eigen_residual_tol() -> Self {
        1e-8
    }
    fn rank_tol() -> Self {
        1e-8
    }
    fn angle_consistency_slack() -> Self {
        1e-6
    }
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }
    fn eps() -> Self {
        f32::EPSILON
    }
    fn hermiticity_tol() -> Self {
        1e-5
    }
    fn unit_norm_slack() -> Self {
        1e-4
    }
    fn imag_residual_tol() -> Self {
        1e-4
    }
    fn certificate_tol() -> Self {
        1e-4
    }
    fn eigen_residual_tol() -> Self {
        1e-4
    }
    fn rank_tol() -> Self {
        1e-4
    }
    fn angle_consistency_slack() -> Self {
        1e-3
    }
}

/// Complex number over the crate scalar.
pub type C<T> = Complex<T>;
