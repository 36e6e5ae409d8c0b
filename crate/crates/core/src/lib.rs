//! Probability-density evolution for planar systems driven by symmetric
//! alpha-stable Lévy noise, with most-probable-path analysis of the MeKS
//! competence circuit.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the usual double-precision instantiation.

pub mod analysis;
pub mod error;
pub mod kinetics;
pub mod montecarlo;
pub mod scalar;
pub mod solver;
pub mod special;
pub mod stable;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type KineticParams64 = kinetics::KineticParams<f64>;
pub type ScaleTransform64 = kinetics::ScaleTransform<f64>;
pub type Equilibrium64 = kinetics::Equilibrium<f64>;
pub type NoiseSpec64 = stable::NoiseSpec<f64>;
pub type DomainBox64 = solver::DomainBox<f64>;
pub type GridSpec64 = solver::GridSpec<f64>;
pub type DensityField64 = solver::DensityField<f64>;
pub type FpeOperator64 = solver::FpeOperator<f64>;
pub type SolveResult64 = solver::SolveResult<f64>;
pub type ProbablePath64 = analysis::ProbablePath<f64>;
pub type SweepRecord64 = analysis::SweepRecord<f64>;
pub type PathEnsemble64 = montecarlo::PathEnsemble<f64>;

pub type DensityField32 = solver::DensityField<f32>;
pub type FpeOperator32 = solver::FpeOperator<f32>;
