//! Garage patrol monitoring.
//!
//! A patrol robot localizes itself from beacon RSSI by trilateration, reads
//! plates of parked cars, and the readings are fused into a per-stall
//! occupancy report checked against the tenant registry.
//!
//! - [`solvers`]: Gaussian elimination, Jacobi, Gauss-Seidel and a timing harness.
//! - [`localization`]: path-loss ranging and the linearized trilateration system.
//! - [`plates`]: candidate normalization and confidence-weighted consensus.
//! - [`registry`]: tenant CSV registry and owner lookup (fixture / socket stub).
//! - [`garage`]: map model, patrol simulator, drive-command codec.
//! - [`report`]: per-stall verdicts.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the common instantiations.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod garage;
pub mod localization;
pub mod plates;
pub mod registry;
pub mod report;
pub mod scalar;
pub mod solvers;

pub use scalar::Scalar;

pub type LinearSystemF64 = solvers::LinearSystem<f64>;
pub type LinearSystemF32 = solvers::LinearSystem<f32>;
pub type SolveResultF64 = solvers::SolveResult<f64>;
pub type SolveResultF32 = solvers::SolveResult<f32>;
pub type BeaconF64 = localization::Beacon<f64>;
pub type BeaconF32 = localization::Beacon<f32>;
pub type RssiReadingF64 = localization::RssiReading<f64>;
pub type RssiReadingF32 = localization::RssiReading<f32>;
pub type PositionEstimateF64 = localization::PositionEstimate<f64>;
pub type PositionEstimateF32 = localization::PositionEstimate<f32>;
pub type Point2F64 = localization::Point2<f64>;
pub type Point2F32 = localization::Point2<f32>;
