//! Time-indexed solution trajectories and their space-time norms.

use crate::domain::field::{ScalarField, VectorField};
use crate::domain::grid::GridSpec;
use crate::domain::norms::{
    l2_norm_raw, quadrature_weights, sobolev_norm_sq_weighted, Region, SobolevOrder,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar solution `u(tₙ, ·)` for `n = 0..=n_steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTrajectory<T> {
    snapshots: Vec<ScalarField<T>>,
    dt: T,
}

impl<T: Real> ScalarTrajectory<T> {
    pub fn new(snapshots: Vec<ScalarField<T>>, dt: T) -> Self {
        Self { snapshots, dt }
    }

    pub fn snapshots(&self) -> &[ScalarField<T>] {
        &self.snapshots
    }

    pub fn snapshot(&self, step: usize) -> &ScalarField<T> {
        &self.snapshots[step]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn max_abs(&self) -> T {
        self.snapshots
            .iter()
            .fold(T::zero(), |a, s| a.max(s.max_abs()))
    }

    /// Discrete `∂ₜu` at level `step`: centered in the interior, second-order
    /// one-sided at the ends.
    pub fn velocity(&self, step: usize) -> Vec<T> {
        let raw: Vec<&[T]> = self.snapshots.iter().map(|s| s.values()).collect();
        time_derivative(&raw, step, self.dt)
    }
}

/// Three-component solution trajectory on Ω′.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveField<T> {
    snapshots: Vec<VectorField<T>>,
    dt: T,
}

impl<T: Real> WaveField<T> {
    pub fn new(snapshots: Vec<VectorField<T>>, dt: T) -> Self {
        Self { snapshots, dt }
    }

    pub fn zeros(grid: &GridSpec<T>) -> Self {
        Self::new(
            vec![VectorField::zeros(grid); grid.n_steps() + 1],
            grid.dt(),
        )
    }

    pub fn from_components(components: [ScalarTrajectory<T>; 3]) -> Result<Self> {
        let len = components[0].len();
        if components.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidParameter(
                "component trajectories differ in length".into(),
            ));
        }
        let dt = components[0].dt;
        let [a, b, c] = components;
        let snapshots = a
            .snapshots
            .into_iter()
            .zip(b.snapshots)
            .zip(c.snapshots)
            .map(|((x, y), z)| VectorField::new([x, y, z]))
            .collect();
        Ok(Self { snapshots, dt })
    }

    pub fn snapshots(&self) -> &[VectorField<T>] {
        &self.snapshots
    }

    pub fn snapshot(&self, step: usize) -> &VectorField<T> {
        &self.snapshots[step]
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn component(&self, i: usize) -> ScalarTrajectory<T> {
        ScalarTrajectory::new(
            self.snapshots
                .iter()
                .map(|s| s.component(i).clone())
                .collect(),
            self.dt,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.snapshots.iter().all(VectorField::is_finite)
    }

    pub fn max_abs(&self) -> T {
        self.snapshots
            .iter()
            .fold(T::zero(), |a, s| a.max(s.max_abs()))
    }

    /// `a·x + b·y` levelwise.
    pub fn combine(a: T, x: &Self, b: T, y: &Self) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidParameter(format!(
                "trajectories have {} and {} levels",
                x.len(),
                y.len()
            )));
        }
        let snapshots = x
            .snapshots
            .iter()
            .zip(&y.snapshots)
            .map(|(u, v)| {
                let mut s = u.scaled(a);
                s.add_scaled(b, v);
                s
            })
            .collect();
        Ok(Self::new(snapshots, x.dt))
    }

    /// `self − other` levelwise.
    pub fn minus(&self, other: &Self) -> Result<Self> {
        Self::combine(T::one(), self, -T::one(), other)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self::new(
            self.snapshots.iter().map(|s| s.scaled(alpha)).collect(),
            self.dt,
        )
    }

    /// Nodewise `|uⁿ|²` at every level.
    pub fn squared_magnitude_levels(&self) -> Vec<ScalarField<T>> {
        self.snapshots
            .iter()
            .map(VectorField::squared_magnitude)
            .collect()
    }

    /// Discrete `∂ₜu` of component `i` at level `step`.
    pub fn velocity(&self, i: usize, step: usize) -> Vec<T> {
        let raw: Vec<&[T]> = self
            .snapshots
            .iter()
            .map(|s| s.component(i).values())
            .collect();
        time_derivative(&raw, step, self.dt)
    }
}

pub(crate) fn time_derivative<T: Real>(levels: &[&[T]], step: usize, dt: T) -> Vec<T> {
    let n = levels.len();
    let len = levels[step].len();
    if n < 2 {
        return vec![T::zero(); len];
    }
    if n == 2 {
        return (0..len)
            .map(|i| (levels[1][i] - levels[0][i]) / dt)
            .collect();
    }
    let two_dt = dt + dt;
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    (0..len)
        .map(|i| {
            if step == 0 {
                (-three * levels[0][i] + four * levels[1][i] - levels[2][i]) / two_dt
            } else if step + 1 == n {
                (three * levels[n - 1][i] - four * levels[n - 2][i] + levels[n - 3][i]) / two_dt
            } else {
                (levels[step + 1][i] - levels[step - 1][i]) / two_dt
            }
        })
        .collect()
}

/// `max_n ‖uⁿ‖_{L²(Ω′)}`, the discrete `C([0,T];L²)` norm.
pub fn c_l2_norm<T: Real>(u: &WaveField<T>, grid: &GridSpec<T>) -> T {
    let w = quadrature_weights(grid, Region::Outer);
    u.snapshots
        .iter()
        .map(|s| {
            s.components()
                .iter()
                .map(|c| {
                    let n = l2_norm_raw(c.values(), &w);
                    n * n
                })
                .sum::<T>()
                .sqrt()
        })
        .fold(T::zero(), T::max)
}

/// Discrete `C([0,T];H¹) ∩ C¹([0,T];L²)` norm:
/// `max_n ‖uⁿ‖_{H¹} + max_n ‖∂ₜuⁿ‖_{L²}`.
pub fn s_norm<T: Real>(u: &WaveField<T>, grid: &GridSpec<T>) -> T {
    let w = quadrature_weights(grid, Region::Outer);
    let mut max_h1 = T::zero();
    let mut max_vel = T::zero();
    for step in 0..u.len() {
        let mut h1 = T::zero();
        let mut vel = T::zero();
        for i in 0..3 {
            h1 = h1
                + sobolev_norm_sq_weighted(
                    grid,
                    u.snapshots[step].component(i).values(),
                    SobolevOrder::H1,
                    &w,
                );
            let v = u.velocity(i, step);
            let n = l2_norm_raw(&v, &w);
            vel = vel + n * n;
        }
        max_h1 = max_h1.max(h1.sqrt());
        max_vel = max_vel.max(vel.sqrt());
    }
    max_h1 + max_vel
}
