//! Finite-difference laboratory for small-data coupled semi-linear wave
//! systems with variable sound speeds.
//!
//! The crate is generic over the floating point type through [`Real`]; the
//! `*64` and `*32` aliases at the root fix the common choices.

// NaN-rejecting guards are written as `!(x > 0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod domain;
pub mod error;
pub mod linear;
pub mod nonlinear;
pub mod parametrix;
pub mod regression;
pub mod scalar;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridSpec64 = domain::GridSpec<f64>;
pub type ScalarField64 = domain::ScalarField<f64>;
pub type VectorField64 = domain::VectorField<f64>;
pub type SpeedField64 = domain::SpeedField<f64>;
pub type SourceData64 = linear::SourceData<f64>;
pub type SpeedSystem64 = linear::SpeedSystem<f64>;
pub type WaveField64 = trajectory::WaveField<f64>;
pub type BoundaryTrace64 = analysis::BoundaryTrace<f64>;

pub type GridSpec32 = domain::GridSpec<f32>;
pub type ScalarField32 = domain::ScalarField<f32>;
pub type VectorField32 = domain::VectorField<f32>;
pub type SpeedField32 = domain::SpeedField<f32>;
pub type SourceData32 = linear::SourceData<f32>;
pub type SpeedSystem32 = linear::SpeedSystem<f32>;
pub type WaveField32 = trajectory::WaveField<f32>;
pub type BoundaryTrace32 = analysis::BoundaryTrace<f32>;
