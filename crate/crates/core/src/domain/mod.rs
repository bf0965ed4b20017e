//! Grids, sampled fields, discrete Sobolev norms and admissibility checks
//! for sound speeds.

pub mod field;
pub mod grid;
pub mod herglotz;
pub mod io;
pub mod norms;
pub mod stencil;

pub use field::{
    validate_speed, ScalarField, ScalarFieldSnapshot, SpeedField, SpeedValidation, SpeedViolation,
    VectorField, ViolationKind,
};
pub use grid::{make_grid, make_grid_with_speed, GridSpec, Interval};
pub use herglotz::{herglotz_check, sample_profile, HerglotzReport};
pub use norms::{sobolev_norm, sobolev_norm_in, sobolev_norm_vector, Region, SobolevOrder};
