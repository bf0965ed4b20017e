//! Convexity check for radial sound speeds: `d/dr (r / c(r)) > 0`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// The centered derivative must exceed this to count as strictly positive.
pub const HERGLOTZ_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct HerglotzReport<T> {
    pub passed: bool,
    /// Radius of the first interior sample where the check fails.
    pub first_failure: Option<T>,
    /// Smallest centered derivative over interior samples.
    pub min_derivative: T,
    /// Centered derivative at each interior sample `i = 1..n-1`.
    pub derivatives: Vec<T>,
}

/// Checks `d/dr (r/c)` at every interior sample of a profile sampled at
/// `r_i = i·dr`.
pub fn herglotz_check<T: Real>(profile: &[T], dr: T) -> Result<HerglotzReport<T>> {
    if !(dr > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "sample spacing dr = {dr} must be positive"
        )));
    }
    if profile.len() < 3 {
        return Err(Error::InsufficientData(
            "need at least three radial samples".into(),
        ));
    }
    if let Some((index, &value)) = profile.iter().enumerate().find(|(_, &c)| !(c > T::zero())) {
        return Err(Error::NonPositiveSpeed {
            index,
            value: value.as_f64(),
        });
    }
    let g: Vec<T> = profile
        .iter()
        .enumerate()
        .map(|(i, &c)| T::of_usize(i) * dr / c)
        .collect();
    let two_dr = dr + dr;
    let derivatives: Vec<T> = (1..g.len() - 1)
        .map(|i| (g[i + 1] - g[i - 1]) / two_dr)
        .collect();
    let tol = T::lit(HERGLOTZ_TOL);
    let first_failure = derivatives
        .iter()
        .position(|&d| !(d > tol))
        .map(|k| T::of_usize(k + 1) * dr);
    let min_derivative = derivatives.iter().fold(T::infinity(), |a, &d| a.min(d));
    Ok(HerglotzReport {
        passed: first_failure.is_none(),
        first_failure,
        min_derivative,
        derivatives,
    })
}

/// Samples `c(r)` at `r = 0, dr, …` up to and including `r_max`.
pub fn sample_profile<T: Real>(r_max: T, dr: T, c: impl Fn(T) -> T) -> Vec<T> {
    let n = (r_max / dr).round().to_usize().unwrap_or(0);
    (0..=n).map(|i| c(T::of_usize(i) * dr)).collect()
}
