//! Restriction of trajectories to the faces of the measurement box ∂Ω.

use crate::domain::grid::GridSpec;
use crate::domain::io::format_float;
use crate::domain::norms::{quadrature_weights, sobolev_norm_sq_weighted, Region, SobolevOrder};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trajectory::WaveField;

/// Nodes of ∂Ω with their surface weights.
///
/// A node's weight sums the face trapezoid weights over every face it lies
/// on, so edge and corner nodes count once per face.
pub fn boundary_nodes<T: Real>(grid: &GridSpec<T>) -> (Vec<usize>, Vec<T>) {
    let d = grid.dim();
    let (lo, hi) = grid.inner_box();
    let h = grid.h();
    let half = h / T::lit(2.0);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for idx in 0..grid.node_count() {
        if !grid.in_inner_closure(idx) {
            continue;
        }
        let m = grid.multi_index(idx);
        let mut weight = T::zero();
        for face_axis in 0..d {
            if m[face_axis] != lo[face_axis] && m[face_axis] != hi[face_axis] {
                continue;
            }
            let mut w = T::one();
            for a in (0..d).filter(|&a| a != face_axis) {
                w = w * if m[a] == lo[a] || m[a] == hi[a] {
                    half
                } else {
                    h
                };
            }
            weight = weight + w;
        }
        if weight > T::zero() {
            nodes.push(idx);
            weights.push(weight);
        }
    }
    (nodes, weights)
}

/// Time-indexed values of a trajectory on ∂Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace<T> {
    nodes: Vec<usize>,
    coords: Vec<[T; 3]>,
    surface_measure: Vec<T>,
    times: Vec<T>,
    dim: usize,
    /// `samples[n][k]` is `u(tₙ)` at `nodes[k]`.
    samples: Vec<Vec<[T; 3]>>,
}

impl<T: Real> BoundaryTrace<T> {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn surface_measure(&self) -> &[T] {
        &self.surface_measure
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn samples(&self) -> &[Vec<[T; 3]>] {
        &self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .flatten()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// `‖trace(tₙ)‖_{L²(∂Ω)}`.
    pub fn l2_at(&self, step: usize) -> T {
        self.samples[step]
            .iter()
            .zip(&self.surface_measure)
            .map(|(v, &w)| w * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
            .sum::<T>()
            .sqrt()
    }

    /// `‖trace‖_{L²([0,T];L²(∂Ω))}` with the trapezoid rule in time.
    pub fn l2l2_norm(&self) -> T {
        let n = self.samples.len();
        if n < 2 {
            return T::zero();
        }
        let dt = self.times[1] - self.times[0];
        let mut acc = T::zero();
        for step in 0..n {
            let s = self.l2_at(step);
            let w = if step == 0 || step + 1 == n {
                dt / T::lit(2.0)
            } else {
                dt
            };
            acc = acc + w * s * s;
        }
        acc.sqrt()
    }

    /// `a·x + b·y` for traces on the same grid and time levels.
    pub fn combine(a: T, x: &Self, b: T, y: &Self) -> Result<Self> {
        if x.nodes != y.nodes || x.samples.len() != y.samples.len() {
            return Err(Error::ShapeMismatch {
                expected: x.nodes.len() * x.samples.len(),
                found: y.nodes.len() * y.samples.len(),
            });
        }
        let samples = x
            .samples
            .iter()
            .zip(&y.samples)
            .map(|(sx, sy)| {
                sx.iter()
                    .zip(sy)
                    .map(|(p, q)| {
                        [
                            a * p[0] + b * q[0],
                            a * p[1] + b * q[1],
                            a * p[2] + b * q[2],
                        ]
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            samples,
            ..x.clone()
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        Self::combine(T::one(), self, -T::one(), other)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in out.samples.iter_mut().flatten() {
            for x in v.iter_mut() {
                *x = alpha * *x;
            }
        }
        out
    }

    /// CSV with columns `t,x[,y[,z]],u1,u2,u3`, one row per time level and
    /// boundary node.
    pub fn to_csv(&self) -> String {
        let axes = ["x", "y", "z"];
        let mut s = String::from("t,");
        for a in &axes[..self.dim] {
            s.push_str(a);
            s.push(',');
        }
        s.push_str("u1,u2,u3\n");
        for (t, level) in self.times.iter().zip(&self.samples) {
            for (x, v) in self.coords.iter().zip(level) {
                s.push_str(&format_float(t.as_f64()));
                for c in &x[..self.dim] {
                    s.push(',');
                    s.push_str(&format_float(c.as_f64()));
                }
                for c in v {
                    s.push(',');
                    s.push_str(&format_float(c.as_f64()));
                }
                s.push('\n');
            }
        }
        s
    }
}

/// Restriction of every snapshot of `u` to the ∂Ω nodes.
pub fn trace<T: Real>(u: &WaveField<T>, grid: &GridSpec<T>) -> Result<BoundaryTrace<T>> {
    for s in u.snapshots() {
        s.check_shape(grid)?;
    }
    let (nodes, surface_measure) = boundary_nodes(grid);
    let samples = u
        .snapshots()
        .iter()
        .map(|s| {
            nodes
                .iter()
                .map(|&k| {
                    [
                        s.component(0).values()[k],
                        s.component(1).values()[k],
                        s.component(2).values()[k],
                    ]
                })
                .collect()
        })
        .collect();
    Ok(BoundaryTrace {
        coords: nodes.iter().map(|&k| grid.coords(k)).collect(),
        nodes,
        surface_measure,
        times: (0..u.len()).map(|n| T::of_usize(n) * u.dt()).collect(),
        dim: grid.dim(),
        samples,
    })
}

/// `‖trace(u)‖_{L²L²(∂Ω)} / ‖u‖_{L²([0,T];H¹(Ω))}`; `None` for `u = 0`.
pub fn trace_ratio<T: Real>(u: &WaveField<T>, grid: &GridSpec<T>) -> Result<Option<T>> {
    let tr = trace(u, grid)?.l2l2_norm();
    let w = quadrature_weights(grid, Region::Inner);
    let n = u.len();
    let mut acc = T::zero();
    for (step, s) in u.snapshots().iter().enumerate() {
        let h1: T = (0..3)
            .map(|i| sobolev_norm_sq_weighted(grid, s.component(i).values(), SobolevOrder::H1, &w))
            .sum();
        let tw = if step == 0 || step + 1 == n {
            u.dt() / T::lit(2.0)
        } else {
            u.dt()
        };
        acc = acc + tw * h1;
    }
    let denom = acc.sqrt();
    Ok((denom > T::zero()).then(|| tr / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::field::VectorField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_square() -> GridSpec<f64> {
        GridSpec::cube(2, (-0.5, 1.5), (0.0, 1.0), 1.0 / 8.0, 0.25).unwrap()
    }

    #[test]
    fn unit_constant_has_perimeter_norm() {
        let g = unit_square();
        let (_, w) = boundary_nodes(&g);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        let one = VectorField::new([
            crate::domain::field::ScalarField::constant(&g, 1.0),
            crate::domain::field::ScalarField::zeros(&g),
            crate::domain::field::ScalarField::zeros(&g),
        ]);
        let u = WaveField::new(vec![one], g.dt());
        let tr = trace(&u, &g).unwrap();
        assert!((tr.l2_at(0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_field_has_zero_trace() {
        let g = unit_square();
        let tr = trace(&WaveField::zeros(&g), &g).unwrap();
        assert_eq!(tr.l2l2_norm(), 0.0);
        assert!(tr.is_finite());
    }

    #[test]
    fn trace_restricts_exactly() {
        let g = unit_square();
        let u = WaveField::new(
            (0..=g.n_steps())
                .map(|n| {
                    let t = g.time(n);
                    VectorField::from_fn(&g, |x| [x[0] + t, x[1] * x[0], (x[0] - x[1]).sin()])
                })
                .collect(),
            g.dt(),
        );
        let tr = trace(&u, &g).unwrap();
        for (n, level) in tr.samples().iter().enumerate() {
            for (k, &node) in tr.nodes().iter().enumerate() {
                for (i, &v) in level[k].iter().enumerate() {
                    assert_eq!(v, u.snapshot(n).component(i).values()[node]);
                }
            }
        }
        let csv = tr.to_csv();
        assert_eq!(csv.lines().next(), Some("t,x,y,u1,u2,u3"));
        assert_eq!(csv.lines().count(), 1 + tr.nodes().len() * u.len());
    }

    #[test]
    fn trace_in_one_dimension_counts_two_points() {
        let g = GridSpec::cube(1, (0.0, 1.0), (0.25, 0.75), 1.0 / 16.0, 0.1).unwrap();
        let (nodes, w) = boundary_nodes(&g);
        assert_eq!(nodes.len(), 2);
        assert_eq!(w, vec![1.0, 1.0]);
    }

    fn random_field(g: &GridSpec<f64>, rng: &mut ChaCha8Rng) -> WaveField<f64> {
        let modes: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(1..4) as f64,
                    rng.gen_range(1..4) as f64,
                    rng.gen_range(0.5..2.0),
                )
            })
            .collect();
        WaveField::new(
            (0..=g.n_steps())
                .map(|n| {
                    let t = g.time(n);
                    VectorField::from_fn(g, |x| {
                        let v: f64 = modes
                            .iter()
                            .map(|&(a, kx, ky, w)| {
                                a * (kx * PI * x[0]).cos() * (ky * PI * x[1]).cos() * (w * t).cos()
                            })
                            .sum();
                        [v, 0.5 * v, 0.0]
                    })
                })
                .collect(),
            g.dt(),
        )
    }

    #[test]
    fn trace_bound_constant_is_stable_across_ensemble() {
        let g = unit_square();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ratios: Vec<f64> = (0..40)
            .map(|_| {
                trace_ratio(&random_field(&g, &mut rng), &g)
                    .unwrap()
                    .unwrap()
            })
            .collect();
        let fit = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
        let (a, b) = (fit(&ratios[..20]), fit(&ratios[20..]));
        assert!((a / b - 1.0).abs() <= 0.2, "{a} vs {b}");
        let c = a.max(b);
        assert!(ratios.iter().all(|&r| r <= c));
    }
}
