//! Leapfrog kernels for `∂ₜ²u = c²Δu + s`.
//!
//! Node updates are a pure gather from the previous two levels, so each
//! update is split into fixed-size chunks and run data-parallel. Results do
//! not depend on the thread count.

use rayon::prelude::*;

use crate::domain::grid::GridSpec;
use crate::scalar::Real;

const CHUNK: usize = 2048;

#[inline]
fn laplacian_at<T: Real>(grid: &GridSpec<T>, u: &[T], idx: usize, inv_h2: T) -> Option<T> {
    let m = grid.multi_index(idx);
    let shape = grid.shape();
    let strides = grid.strides();
    let mut acc = T::zero();
    let two = T::lit(2.0);
    for a in 0..grid.dim() {
        if m[a] == 0 || m[a] + 1 == shape[a] {
            return None;
        }
        let s = strides[a];
        acc = acc + (u[idx + s] + u[idx - s] - two * u[idx]);
    }
    Some(acc * inv_h2)
}

/// Five-point (2d+1) Laplacian; zero on ∂Ω′.
pub fn laplacian<T: Real>(grid: &GridSpec<T>, u: &[T], out: &mut [T]) {
    let inv_h2 = T::one() / (grid.h() * grid.h());
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = laplacian_at(grid, u, c * CHUNK + k, inv_h2).unwrap_or(T::zero());
            }
        });
}

/// Taylor start `u¹ = b₀ + dt·b₁ + (dt²/2)(c²Δb₀ + s⁰)`, zero on ∂Ω′.
pub fn first_step<T: Real>(
    grid: &GridSpec<T>,
    c2: &[T],
    b0: &[T],
    b1: &[T],
    source: &[T],
    out: &mut [T],
) {
    let dt = grid.dt();
    let half_dt2 = dt * dt / T::lit(2.0);
    let inv_h2 = T::one() / (grid.h() * grid.h());
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                let idx = c * CHUNK + k;
                *o = match laplacian_at(grid, b0, idx, inv_h2) {
                    Some(lap) => b0[idx] + dt * b1[idx] + half_dt2 * (c2[idx] * lap + source[idx]),
                    None => T::zero(),
                };
            }
        });
}

/// `uⁿ⁺¹ = 2uⁿ − uⁿ⁻¹ + dt²(c²Δuⁿ + sⁿ)`, zero on ∂Ω′.
pub fn leapfrog_step<T: Real>(
    grid: &GridSpec<T>,
    c2: &[T],
    prev: &[T],
    cur: &[T],
    source: &[T],
    out: &mut [T],
) {
    let dt2 = grid.dt() * grid.dt();
    let two = T::lit(2.0);
    let inv_h2 = T::one() / (grid.h() * grid.h());
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                let idx = c * CHUNK + k;
                *o = match laplacian_at(grid, cur, idx, inv_h2) {
                    Some(lap) => two * cur[idx] - prev[idx] + dt2 * (c2[idx] * lap + source[idx]),
                    None => T::zero(),
                };
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let g = GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), 0.125, 0.1).unwrap();
        let u: Vec<f64> = (0..g.node_count())
            .map(|i| {
                let x = g.coords(i);
                x[0] * x[0] + 3.0 * x[1] * x[1]
            })
            .collect();
        let mut out = vec![0.0; u.len()];
        laplacian(&g, &u, &mut out);
        for (i, &v) in out.iter().enumerate() {
            if g.is_outer_boundary(i) {
                assert_eq!(v, 0.0);
            } else {
                assert!((v - 8.0).abs() < 1e-10);
            }
        }
    }
}
