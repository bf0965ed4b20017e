//! Sampled grid functions and sound-speed fields.

use crate::domain::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar grid function over every node of Ω′.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &GridSpec<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &GridSpec<T>, value: T) -> Self {
        Self {
            values: vec![value; grid.node_count()],
        }
    }

    /// Samples `f(x)` at every node; `x` has length `grid.dim()`.
    pub fn from_fn(grid: &GridSpec<T>, f: impl Fn(&[T]) -> T) -> Self {
        let d = grid.dim();
        let values = (0..grid.node_count())
            .map(|idx| f(&grid.coords(idx)[..d]))
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_shape(&self, grid: &GridSpec<T>) -> Result<()> {
        if self.values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch {
                expected: grid.node_count(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| alpha * v).collect(),
        }
    }

    /// `self += alpha·other`.
    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + alpha * b;
        }
    }

    /// Largest magnitude over the Dirichlet nodes of ∂Ω′.
    pub fn boundary_max_abs(&self, grid: &GridSpec<T>) -> T {
        self.values
            .iter()
            .enumerate()
            .filter(|(idx, _)| grid.is_outer_boundary(*idx))
            .fold(T::zero(), |acc, (_, v)| acc.max(v.abs()))
    }

    /// Sets every node of ∂Ω′ to zero.
    pub fn zero_boundary(&mut self, grid: &GridSpec<T>) {
        for (idx, v) in self.values.iter_mut().enumerate() {
            if grid.is_outer_boundary(idx) {
                *v = T::zero();
            }
        }
    }
}

/// A scalar field tagged with the time level it was taken at.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarFieldSnapshot<T> {
    pub field: ScalarField<T>,
    pub time_index: usize,
}

impl<T: Real> ScalarFieldSnapshot<T> {
    pub fn new(field: ScalarField<T>, time_index: usize) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "snapshot at step {time_index} has non-finite values"
            )));
        }
        Ok(Self { field, time_index })
    }
}

/// Three-component grid field `(u₁, u₂, u₃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    components: [ScalarField<T>; 3],
}

impl<T: Real> VectorField<T> {
    pub fn new(components: [ScalarField<T>; 3]) -> Self {
        Self { components }
    }

    pub fn zeros(grid: &GridSpec<T>) -> Self {
        Self::splat(ScalarField::zeros(grid))
    }

    /// The same scalar field in all three components.
    pub fn splat(field: ScalarField<T>) -> Self {
        Self {
            components: [field.clone(), field.clone(), field],
        }
    }

    pub fn from_fn(grid: &GridSpec<T>, f: impl Fn(&[T]) -> [T; 3]) -> Self {
        let d = grid.dim();
        let n = grid.node_count();
        let mut comps = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for idx in 0..n {
            let v = f(&grid.coords(idx)[..d]);
            for (c, val) in comps.iter_mut().zip(v) {
                c.push(val);
            }
        }
        let [a, b, c] = comps;
        Self::new([
            ScalarField::new(a),
            ScalarField::new(b),
            ScalarField::new(c),
        ])
    }

    pub fn component(&self, i: usize) -> &ScalarField<T> {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ScalarField<T> {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[ScalarField<T>; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField<T>; 3] {
        self.components
    }

    pub fn check_shape(&self, grid: &GridSpec<T>) -> Result<()> {
        self.components.iter().try_for_each(|c| c.check_shape(grid))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn max_abs(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.max_abs()))
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            components: [
                self.components[0].scaled(alpha),
                self.components[1].scaled(alpha),
                self.components[2].scaled(alpha),
            ],
        }
    }

    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.add_scaled(alpha, b);
        }
    }

    /// Nodewise squared Euclidean norm `|u|² = u₁² + u₂² + u₃²`.
    pub fn squared_magnitude(&self) -> ScalarField<T> {
        let [a, b, c] = &self.components;
        ScalarField::new(
            a.values()
                .iter()
                .zip(b.values())
                .zip(c.values())
                .map(|((&x, &y), &z)| x * x + y * y + z * z)
                .collect(),
        )
    }
}

/// One conformal factor `c²(x)` with its admissibility metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedField<T> {
    values: ScalarField<T>,
    m0: T,
    m1: T,
    radius: T,
    smooth_order: u32,
}

impl<T: Real> SpeedField<T> {
    /// Wraps sampled `c²` values; admissibility is checked by [`validate_speed`].
    pub fn new(values: ScalarField<T>, m0: T, m1: T, radius: T, smooth_order: u32) -> Self {
        Self {
            values,
            m0,
            m1,
            radius,
            smooth_order,
        }
    }

    /// Constant `c² ≡ value` with the ball covering all of Ω′.
    pub fn constant(grid: &GridSpec<T>, value: T) -> Self {
        Self::new(
            ScalarField::constant(grid, value),
            value,
            value,
            covering_radius(grid),
            3,
        )
    }

    /// Samples `c²(x)`, taking the bounds `m₀`, `m₁` from the sampled range.
    /// The ball of radius `radius` is not enforced here.
    pub fn from_fn(grid: &GridSpec<T>, radius: T, f: impl Fn(&[T]) -> T) -> Self {
        let values = ScalarField::from_fn(grid, f);
        let (lo, hi) = values
            .values()
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Self::new(values, lo, hi, radius, 3)
    }

    /// Radial profile `c²(r)` inside the ball of radius `radius`, exactly 1
    /// outside. `r` is measured from the center of Ω′.
    pub fn radial(grid: &GridSpec<T>, radius: T, m0: T, m1: T, profile: impl Fn(T) -> T) -> Self {
        let values = ScalarField::new(
            (0..grid.node_count())
                .map(|idx| {
                    let r = grid.radius_of(idx);
                    if r > radius {
                        T::one()
                    } else {
                        profile(r)
                    }
                })
                .collect(),
        );
        Self::new(values, m0, m1, radius, 3)
    }

    pub fn values(&self) -> &ScalarField<T> {
        &self.values
    }

    pub fn m0(&self) -> T {
        self.m0
    }

    pub fn m1(&self) -> T {
        self.m1
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn smooth_order(&self) -> u32 {
        self.smooth_order
    }

    /// `√m₁`, the speed bound used for the stability condition.
    pub fn c_max(&self) -> T {
        self.m1.sqrt()
    }

    /// Discrete `‖c²‖_{C¹} = max(‖c²‖_∞, ‖∇_h c²‖_∞)`.
    pub fn c1_norm(&self, grid: &GridSpec<T>) -> Result<T> {
        self.values.check_shape(grid)?;
        let v = self.values.values();
        let grads: Vec<Vec<T>> = (0..grid.dim())
            .map(|a| crate::domain::norms::difference(grid, v, a))
            .collect();
        let sup = self.values.max_abs();
        let grad_sup = (0..v.len())
            .map(|i| grads.iter().map(|g| g[i] * g[i]).sum::<T>().sqrt())
            .fold(T::zero(), T::max);
        Ok(sup.max(grad_sup))
    }
}

/// Radius for which every node of Ω′ lies inside the ball.
pub(crate) fn covering_radius<T: Real>(grid: &GridSpec<T>) -> T {
    grid.circumradius() + grid.h()
}

/// Exterior-of-ball nodes must equal 1 to within this tolerance.
pub const EXTERIOR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `m₁ ≥ m₀ > 0` fails.
    Bounds,
    BelowLower,
    AboveUpper,
    /// `c² ≠ 1` outside the ball of radius R.
    Exterior,
    NonFinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedViolation<T> {
    pub kind: ViolationKind,
    pub node: Option<usize>,
    pub coords: Option<Vec<T>>,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedValidation<T> {
    pub passed: bool,
    pub violation: Option<SpeedViolation<T>>,
}

/// Nodewise admissibility scan: `m₁ ≥ c² ≥ m₀ > 0` everywhere and `c² = 1`
/// outside the ball. Reports the first violating node in storage order.
pub fn validate_speed<T: Real>(
    field: &SpeedField<T>,
    grid: &GridSpec<T>,
) -> Result<SpeedValidation<T>> {
    field.values.check_shape(grid)?;
    let fail = |kind, node: Option<usize>, value| SpeedValidation {
        passed: false,
        violation: Some(SpeedViolation {
            kind,
            node,
            coords: node.map(|n| grid.coords(n)[..grid.dim()].to_vec()),
            value,
        }),
    };
    if !(field.m0 > T::zero()) || field.m1 < field.m0 {
        return Ok(fail(ViolationKind::Bounds, None, field.m0));
    }
    let tol = T::lit(EXTERIOR_TOL);
    for (idx, &v) in field.values.values().iter().enumerate() {
        if !v.is_finite() {
            return Ok(fail(ViolationKind::NonFinite, Some(idx), v));
        }
        if v < field.m0 {
            return Ok(fail(ViolationKind::BelowLower, Some(idx), v));
        }
        if v > field.m1 {
            return Ok(fail(ViolationKind::AboveUpper, Some(idx), v));
        }
        if grid.radius_of(idx) > field.radius && (v - T::one()).abs() > tol {
            return Ok(fail(ViolationKind::Exterior, Some(idx), v));
        }
    }
    Ok(SpeedValidation {
        passed: true,
        violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube3() -> GridSpec<f64> {
        GridSpec::cube(3, (-1.0, 1.0), (-0.5, 0.5), 0.1, 0.1).unwrap()
    }

    #[test]
    fn constant_field_passes() {
        let g = GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), 0.05, 0.1).unwrap();
        let field = SpeedField::new(ScalarField::constant(&g, 1.0), 0.5, 2.0, 0.5, 3);
        let report = validate_speed(&field, &g).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn lower_bound_violation_reports_first_node() {
        let g = GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), 0.05, 0.1).unwrap();
        let field = SpeedField::new(ScalarField::constant(&g, 0.5), 1.0, 2.0, 10.0, 3);
        let report = validate_speed(&field, &g).unwrap();
        assert!(!report.passed);
        let v = report.violation.unwrap();
        assert_eq!(v.kind, ViolationKind::BelowLower);
        assert_eq!(v.node, Some(0));
        assert_eq!(v.coords.unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn radial_decay_profile_passes_in_3d() {
        let g = cube3();
        for radius in [1.0, 3f64.sqrt()] {
            let field = SpeedField::radial(&g, radius, 1.0 / 16.0, 1.0, |r| {
                1.0 / ((1.0 + r * r) * (1.0 + r * r))
            });
            // brute-force scan of the same bounds
            let (lo, hi) = field
                .values()
                .values()
                .iter()
                .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            assert!(lo >= 1.0 / 16.0 && hi <= 1.0);
            assert!(validate_speed(&field, &g).unwrap().passed);
        }
    }

    #[test]
    fn exterior_violation_detected() {
        let g = cube3();
        let field = SpeedField::new(ScalarField::constant(&g, 0.9), 0.5, 1.0, 0.5, 3);
        let v = validate_speed(&field, &g).unwrap().violation.unwrap();
        assert_eq!(v.kind, ViolationKind::Exterior);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = cube3();
        let field = SpeedField::new(ScalarField::new(vec![1.0; 5]), 0.5, 2.0, 0.5, 3);
        assert!(matches!(
            validate_speed(&field, &g),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn inverted_bounds_fail() {
        let g = cube3();
        let field = SpeedField::new(ScalarField::constant(&g, 1.0), 2.0, 1.0, 10.0, 3);
        let v = validate_speed(&field, &g).unwrap().violation.unwrap();
        assert_eq!(v.kind, ViolationKind::Bounds);
    }

    proptest! {
        // Pass iff the brute-force min/max lie in [m0, m1] and the exterior is 1.
        #[test]
        fn validation_matches_brute_force_scan(
            vals in proptest::collection::vec(0.2f64..2.0, 11),
            m0 in 0.1f64..1.0,
            m1 in 1.0f64..2.5,
            radius in 0.0f64..0.7,
        ) {
            let g = GridSpec::cube(1, (0.0, 1.0), (0.2, 0.8), 0.1, 0.1).unwrap();
            let mut vals = vals;
            for (idx, v) in vals.iter_mut().enumerate() {
                if idx % 3 == 0 && g.radius_of(idx) > radius {
                    *v = 1.0;
                }
            }
            let field = SpeedField::new(ScalarField::new(vals.clone()), m0, m1, radius, 3);
            let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
            let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
            let exterior_ok = vals.iter().enumerate()
                .all(|(i, v)| g.radius_of(i) <= radius || (v - 1.0).abs() <= EXTERIOR_TOL);
            let expected = lo >= m0 && hi <= m1 && exterior_ok;
            prop_assert_eq!(validate_speed(&field, &g).unwrap().passed, expected);
        }
    }
}
