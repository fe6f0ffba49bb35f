//! Numerical toolkit for Bell-type correlation experiments with arbitrary
//! real weight matrices.
//!
//! Given a weight matrix `W` pairing `N_a` observables on one side with `N_b`
//! on the other, the crate computes the classical (hidden-variable) threshold
//! of the associated Bell expression, upper bounds on its quantum value,
//! searches for extremal quantum operator configurations with a genetic
//! algorithm, and analyzes the found extremes (spectra, correlation matrices,
//! entanglement, quantum gaps and their certificates).
//!
//! Modules:
//! - [`weights`]: weight matrices, their norms, the Bell matrix class, quantum
//!   gaps and zero-gap certificates.
//! - [`quantum`]: Hermitian observables, Bell operator assembly and spectra,
//!   correlation analysis, entanglement entropy.
//! - [`ga`]: seeded, deterministic genetic search for configurations
//!   maximizing the Bell operator norm, with optional operator constraints.
//! - [`hvmodel`]: explicit local hidden-variable models and their
//!   classification against the classical and quantum bounds.
//!
//! All numerics are generic over the scalar type via [`scalar::Real`];
//! `f64`-concrete aliases are exported at the crate root.

pub mod error;
pub mod ga;
pub mod hvmodel;
pub mod linalg;
pub mod quantum;
pub mod scalar;
pub mod weights;

pub use error::{BellMatrixError, Error, Result};
pub use scalar::{Real, C};

/// `f64`-concrete aliases for the main domain types; the generic forms live
/// in their modules.
pub type WeightMatrix64 = weights::WeightMatrix<f64>;
pub type BellMatrix64 = weights::BellMatrix<f64>;
pub type SpectralBox64 = weights::SpectralBox<f64>;
pub type GapReport64 = weights::GapReport<f64>;
pub type HermitianOperator64 = quantum::HermitianOperator<f64>;
pub type EprConfiguration64 = quantum::EprConfiguration<f64>;
pub type CorrelationReport64 = quantum::CorrelationReport<f64>;
pub type Genome64 = ga::Genome<f64>;
pub type SearchResult64 = ga::SearchResult<f64>;
pub type HvModel64 = hvmodel::HvModel<f64>;

/// `f32` counterparts for reduced-precision runs.
pub type WeightMatrix32 = weights::WeightMatrix<f32>;
pub type BellMatrix32 = weights::BellMatrix<f32>;
pub type HermitianOperator32 = quantum::HermitianOperator<f32>;
pub type EprConfiguration32 = quantum::EprConfiguration<f32>;
