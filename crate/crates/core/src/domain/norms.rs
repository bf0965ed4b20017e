//! Discrete Sobolev norms.
//!
//! Derivatives are centered second-order differences in the interior and
//! first-order one-sided differences at the ends of each axis. Higher
//! derivatives apply the first-difference operator repeatedly, so
//! `|∇ᵏu|²` sums over all `dᵏ` ordered axis tuples. Integrals use the
//! tensor trapezoid rule (weight `h^d`, halved on each axis end).

use crate::domain::field::{ScalarField, VectorField};
use crate::domain::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SobolevOrder(u8);

impl SobolevOrder {
    pub const L2: SobolevOrder = SobolevOrder(0);
    pub const H1: SobolevOrder = SobolevOrder(1);
    pub const H2: SobolevOrder = SobolevOrder(2);
    pub const H3: SobolevOrder = SobolevOrder(3);

    pub fn new(k: usize) -> Result<Self> {
        if k > 3 {
            return Err(Error::UnsupportedOrder(k));
        }
        Ok(SobolevOrder(k as u8))
    }

    pub fn k(self) -> usize {
        self.0 as usize
    }
}

/// Integration region for volume norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// The whole computational box Ω′.
    Outer,
    /// The closed measurement box Ω̄.
    Inner,
}

/// First difference along `axis` over the whole grid.
pub fn difference<T: Real>(grid: &GridSpec<T>, u: &[T], axis: usize) -> Vec<T> {
    let n = grid.shape()[axis];
    let stride = grid.strides()[axis];
    let inv_h = T::one() / grid.h();
    let half_inv_h = inv_h / T::lit(2.0);
    (0..u.len())
        .map(|idx| {
            let m = grid.multi_index(idx)[axis];
            if n < 2 {
                T::zero()
            } else if m == 0 {
                (u[idx + stride] - u[idx]) * inv_h
            } else if m + 1 == n {
                (u[idx] - u[idx - stride]) * inv_h
            } else {
                (u[idx + stride] - u[idx - stride]) * half_inv_h
            }
        })
        .collect()
}

/// Trapezoid quadrature weights for `region`; zero outside it.
pub fn quadrature_weights<T: Real>(grid: &GridSpec<T>, region: Region) -> Vec<T> {
    let d = grid.dim();
    let (lo, hi) = match region {
        Region::Outer => {
            let mut hi = [0usize; 3];
            for (a, &n) in grid.shape().iter().enumerate() {
                hi[a] = n - 1;
            }
            ([0usize; 3], hi)
        }
        Region::Inner => grid.inner_box(),
    };
    let h = grid.h();
    let half_h = h / T::lit(2.0);
    (0..grid.node_count())
        .map(|idx| {
            let m = grid.multi_index(idx);
            let mut w = T::one();
            for a in 0..d {
                if m[a] < lo[a] || m[a] > hi[a] {
                    return T::zero();
                }
                w = w * if m[a] == lo[a] || m[a] == hi[a] {
                    half_h
                } else {
                    h
                };
            }
            w
        })
        .collect()
}

fn weighted_square_sum<T: Real>(u: &[T], weights: &[T]) -> T {
    u.iter()
        .zip(weights)
        .fold(T::zero(), |acc, (&v, &w)| acc + w * v * v)
}

/// Squared norm `Σ_{j≤k} ∫|∇ʲu|²` with precomputed weights.
pub(crate) fn sobolev_norm_sq_weighted<T: Real>(
    grid: &GridSpec<T>,
    u: &[T],
    order: SobolevOrder,
    weights: &[T],
) -> T {
    let mut total = weighted_square_sum(u, weights);
    let mut level: Vec<Vec<T>> = vec![u.to_vec()];
    for _ in 0..order.k() {
        let mut next = Vec::with_capacity(level.len() * grid.dim());
        for f in &level {
            for axis in 0..grid.dim() {
                let df = difference(grid, f, axis);
                total = total + weighted_square_sum(&df, weights);
                next.push(df);
            }
        }
        level = next;
    }
    total
}

/// Discrete `H^k(Ω′)` norm of a scalar field.
pub fn sobolev_norm<T: Real>(
    u: &ScalarField<T>,
    grid: &GridSpec<T>,
    order: SobolevOrder,
) -> Result<T> {
    sobolev_norm_in(u, grid, order, Region::Outer)
}

/// Discrete `H^k` norm over the chosen region.
pub fn sobolev_norm_in<T: Real>(
    u: &ScalarField<T>,
    grid: &GridSpec<T>,
    order: SobolevOrder,
    region: Region,
) -> Result<T> {
    u.check_shape(grid)?;
    let w = quadrature_weights(grid, region);
    Ok(sobolev_norm_sq_weighted(grid, u.values(), order, &w).sqrt())
}

/// Vector norm: square root of the summed squared component norms.
pub fn sobolev_norm_vector<T: Real>(
    u: &VectorField<T>,
    grid: &GridSpec<T>,
    order: SobolevOrder,
) -> Result<T> {
    u.check_shape(grid)?;
    let w = quadrature_weights(grid, Region::Outer);
    Ok(u.components()
        .iter()
        .map(|c| sobolev_norm_sq_weighted(grid, c.values(), order, &w))
        .sum::<T>()
        .sqrt())
}

/// Plain `L²(Ω′)` norm of a raw node array.
pub(crate) fn l2_norm_raw<T: Real>(u: &[T], weights: &[T]) -> T {
    weighted_square_sum(u, weights).sqrt()
}
