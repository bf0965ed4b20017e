//! Uniform tensor-product grids over the nested boxes Ω ⊂ Ω′.
//!
//! Nodes are stored row-major with axis 0 slowest. The inner box Ω is
//! always aligned with grid nodes so that its boundary is a set of nodes
//! and traces need no interpolation.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Closed interval `[lo, hi]` on one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn length(&self) -> T {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }
}

/// Relative slack (in cells) allowed when snapping extents to nodes.
const ALIGN_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    dim: usize,
    outer: Vec<Interval<T>>,
    inner: Vec<Interval<T>>,
    h: T,
    dt: T,
    t_final: T,
    n_steps: usize,
    shape: [usize; 3],
    strides: [usize; 3],
    inner_lo: [usize; 3],
    inner_hi: [usize; 3],
}

/// Builds a grid whose time step is stable for unit sound speed.
///
/// Equivalent to [`make_grid_with_speed`] with `c_max = 1`.
pub fn make_grid<T: Real>(
    dim: usize,
    outer: &[Interval<T>],
    inner: &[Interval<T>],
    h: T,
    t_final: T,
    stability_factor: T,
) -> Result<GridSpec<T>> {
    make_grid_with_speed(dim, outer, inner, h, t_final, stability_factor, T::one())
}

/// Builds a grid with `dt = factor·h/(√d·c_max)`, then shrinks `dt` so that
/// an integer number of steps lands exactly on `t_final`.
pub fn make_grid_with_speed<T: Real>(
    dim: usize,
    outer: &[Interval<T>],
    inner: &[Interval<T>],
    h: T,
    t_final: T,
    stability_factor: T,
    c_max: T,
) -> Result<GridSpec<T>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
    }
    if outer.len() != dim || inner.len() != dim {
        return Err(Error::InvalidGrid(format!(
            "expected {dim} intervals, got {} outer and {} inner",
            outer.len(),
            inner.len()
        )));
    }
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "spacing h = {h} must be positive"
        )));
    }
    if !(t_final > T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "final time T = {t_final} must be positive"
        )));
    }
    if !(stability_factor > T::zero() && stability_factor <= T::one()) {
        return Err(Error::InvalidGrid(format!(
            "stability factor {stability_factor} not in (0, 1]"
        )));
    }
    if !(c_max > T::zero()) || !c_max.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "maximum speed {c_max} must be positive"
        )));
    }

    let mut shape = [1usize; 3];
    let mut inner_lo = [0usize; 3];
    let mut inner_hi = [0usize; 3];
    for axis in 0..dim {
        let (o, i) = (outer[axis], inner[axis]);
        if !(o.hi > o.lo) {
            return Err(Error::InvalidGrid(format!(
                "outer extent on axis {axis} is empty"
            )));
        }
        if !(i.hi > i.lo) {
            return Err(Error::InvalidGrid(format!(
                "inner extent on axis {axis} is empty"
            )));
        }
        let cells = snap(o.length() / h).ok_or_else(|| {
            Error::InvalidGrid(format!("h does not divide the outer extent on axis {axis}"))
        })?;
        let lo = snap((i.lo - o.lo) / h);
        let hi = snap((i.hi - o.lo) / h);
        let (lo, hi) = match (lo, hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "inner extent on axis {axis} is not aligned with grid nodes"
                )))
            }
        };
        if lo < 1 || hi + 1 > cells || lo >= hi {
            return Err(Error::InvalidGrid(format!(
                "inner extent on axis {axis} must lie strictly inside the outer extent \
                 with at least one cell of margin"
            )));
        }
        shape[axis] = cells + 1;
        inner_lo[axis] = lo;
        inner_hi[axis] = hi;
    }
    let strides = [shape[1] * shape[2], shape[2], 1];

    let dt_max = stability_factor * h / (T::of_usize(dim).sqrt() * c_max);
    let ratio = (t_final / dt_max).as_f64();
    let n_steps = ((ratio - 1e-9).ceil() as usize).max(1);
    let dt = t_final / T::of_usize(n_steps);

    Ok(GridSpec {
        dim,
        outer: outer.to_vec(),
        inner: inner.to_vec(),
        h,
        dt,
        t_final,
        n_steps,
        shape,
        strides,
        inner_lo,
        inner_hi,
    })
}

fn snap<T: Real>(cells: T) -> Option<usize> {
    let c = cells.as_f64();
    if !c.is_finite() || c < -ALIGN_TOL {
        return None;
    }
    let n = c.round();
    ((c - n).abs() <= ALIGN_TOL).then_some(n as usize)
}

impl<T: Real> GridSpec<T> {
    /// Cube grid `[outer_lo, outer_hi]^d ⊃ [inner_lo, inner_hi]^d` with the
    /// default stability factor of 0.9.
    pub fn cube(dim: usize, outer: (T, T), inner: (T, T), h: T, t_final: T) -> Result<Self> {
        let o = vec![Interval::new(outer.0, outer.1); dim];
        let i = vec![Interval::new(inner.0, inner.1); dim];
        make_grid(dim, &o, &i, h, t_final, T::lit(0.9))
    }

    /// Same geometry and spacing with a different final time.
    pub fn with_final_time(&self, t_final: T) -> Result<Self> {
        let c_max = T::one();
        let factor = self.dt * T::of_usize(self.dim).sqrt() * c_max / self.h;
        make_grid_with_speed(
            self.dim,
            &self.outer,
            &self.inner,
            self.h,
            t_final,
            factor.min(T::one()),
            c_max,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t_final(&self) -> T {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn outer(&self) -> &[Interval<T>] {
        &self.outer
    }

    pub fn inner(&self) -> &[Interval<T>] {
        &self.inner
    }

    /// Node counts per axis (length `dim`).
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }

    pub(crate) fn strides(&self) -> &[usize; 3] {
        &self.strides
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Time of step `n`.
    pub fn time(&self, step: usize) -> T {
        self.dt * T::of_usize(step)
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.dim as i32)
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        [
            idx / self.strides[0],
            (idx / self.strides[1]) % self.shape[1],
            idx % self.shape[2],
        ]
    }

    pub fn flat_index(&self, m: [usize; 3]) -> usize {
        m[0] * self.strides[0] + m[1] * self.strides[1] + m[2]
    }

    /// Physical coordinates of node `idx`; unused axes are zero.
    pub fn coords(&self, idx: usize) -> [T; 3] {
        let m = self.multi_index(idx);
        let mut x = [T::zero(); 3];
        for axis in 0..self.dim {
            x[axis] = self.outer[axis].lo + self.h * T::of_usize(m[axis]);
        }
        x
    }

    /// True for nodes on ∂Ω′, where the Dirichlet condition is imposed.
    pub fn is_outer_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] + 1 == self.shape[a])
    }

    /// Inclusive node-index box of Ω.
    pub fn inner_box(&self) -> ([usize; 3], [usize; 3]) {
        (self.inner_lo, self.inner_hi)
    }

    /// True for nodes of the closed inner box Ω̄.
    pub fn in_inner_closure(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        (0..self.dim).all(|a| m[a] >= self.inner_lo[a] && m[a] <= self.inner_hi[a])
    }

    /// Geometric center of Ω′, the center of the B_R condition on speeds.
    pub fn center(&self) -> [T; 3] {
        let mut c = [T::zero(); 3];
        for (axis, iv) in self.outer.iter().enumerate() {
            c[axis] = iv.midpoint();
        }
        c
    }

    /// Euclidean distance from node `idx` to [`GridSpec::center`].
    pub fn radius_of(&self, idx: usize) -> T {
        let x = self.coords(idx);
        let c = self.center();
        (0..self.dim)
            .map(|a| (x[a] - c[a]) * (x[a] - c[a]))
            .sum::<T>()
            .sqrt()
    }

    /// Largest distance from the center to a point of Ω′.
    pub fn circumradius(&self) -> T {
        self.outer
            .iter()
            .map(|iv| {
                let half = iv.length() / T::lit(2.0);
                half * half
            })
            .sum::<T>()
            .sqrt()
    }

    /// Euclidean diameter of the inner box Ω.
    pub fn inner_diameter(&self) -> T {
        self.inner
            .iter()
            .map(|iv| iv.length() * iv.length())
            .sum::<T>()
            .sqrt()
    }

    /// Courant number `dt·√d·c_max/h`; leapfrog is stable while it is ≤ 1.
    pub fn courant(&self, c_max: T) -> T {
        self.dt * T::of_usize(self.dim).sqrt() * c_max / self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi)
    }

    #[test]
    fn one_dimensional_example() {
        let g = make_grid(1, &[iv(0.0, 1.0)], &[iv(0.25, 0.75)], 0.01, 1.0, 0.9).unwrap();
        assert_eq!(g.n_steps(), 112);
        assert!((g.dt() - 1.0 / 112.0).abs() < 1e-15);
        assert!((g.n_steps() as f64 * g.dt() - 1.0).abs() < 1e-9);
        assert_eq!(g.shape(), &[101]);
        assert_eq!(g.inner_box().0[0], 25);
        assert_eq!(g.inner_box().1[0], 75);
    }

    #[test]
    fn rejects_inner_equal_to_outer() {
        let err = make_grid(1, &[iv(0.0, 1.0)], &[iv(0.0, 1.0)], 0.01, 1.0, 0.9);
        assert!(matches!(err, Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn rejects_degenerate_spacing_and_time() {
        assert!(make_grid(1, &[iv(0.0, 1.0)], &[iv(0.25, 0.75)], 0.0, 1.0, 0.9).is_err());
        assert!(make_grid(1, &[iv(0.0, 1.0)], &[iv(0.25, 0.75)], -0.1, 1.0, 0.9).is_err());
        assert!(make_grid(1, &[iv(0.0, 1.0)], &[iv(0.25, 0.75)], 0.01, 0.0, 0.9).is_err());
        assert!(make_grid(1, &[iv(0.0, 1.0)], &[iv(0.25, 0.75)], 0.01, 1.0, 1.5).is_err());
    }

    #[test]
    fn rejects_misaligned_inner_box() {
        let err = make_grid(1, &[iv(0.0, 1.0)], &[iv(0.255, 0.75)], 0.01, 1.0, 0.9);
        assert!(err.is_err());
    }

    #[test]
    fn indexing_round_trips_in_3d() {
        let g = GridSpec::cube(3, (0.0, 1.0), (0.25, 0.75), 0.125, 0.5).unwrap();
        assert_eq!(g.node_count(), 9 * 9 * 9);
        for idx in [0, 1, 80, 364, 728] {
            assert_eq!(g.flat_index(g.multi_index(idx)), idx);
        }
        let x = g.coords(g.flat_index([1, 2, 3]));
        assert_eq!(x, [0.125, 0.25, 0.375]);
        assert!(g.courant(1.0) <= 0.9 + 1e-12);
        assert!((g.inner_diameter() - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn boundary_flags() {
        let g = GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), 0.25, 1.0).unwrap();
        let bnd = (0..g.node_count())
            .filter(|&i| g.is_outer_boundary(i))
            .count();
        assert_eq!(bnd, 16);
        let inner = (0..g.node_count())
            .filter(|&i| g.in_inner_closure(i))
            .count();
        assert_eq!(inner, 9);
    }
}
