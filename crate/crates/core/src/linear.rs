//! Explicit solver for `∂ₜ²u − c²(x)Δu = f` on Ω′ with zero Dirichlet data,
//! and its componentwise extension to the diagonal system `□_S⁻¹`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::domain::field::{covering_radius, validate_speed, ScalarField, SpeedField, VectorField};
use crate::domain::grid::{make_grid_with_speed, GridSpec, Interval};
use crate::domain::norms::{quadrature_weights, sobolev_norm_sq_weighted, Region, SobolevOrder};
use crate::domain::stencil::{first_step, leapfrog_step};
use crate::error::{Error, Result};
use crate::regression::loglog_slope;
use crate::scalar::Real;
use crate::trajectory::{ScalarTrajectory, WaveField};

pub type VectorForcingFn<T> = Arc<dyn Fn(T, &[T]) -> [T; 3] + Send + Sync>;
pub type ScalarForcingFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;

/// Forcing `f(t, x)` of the vector system, sampled at `tₙ = n·dt`.
#[derive(Clone)]
pub enum Forcing<T> {
    Zero,
    /// One field per time level `0..=n_steps`.
    Sampled(Arc<Vec<VectorField<T>>>),
    Analytic(VectorForcingFn<T>),
}

impl<T> fmt::Debug for Forcing<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Sampled(levels) => write!(f, "Sampled({} levels)", levels.len()),
            Forcing::Analytic(_) => write!(f, "Analytic(..)"),
        }
    }
}

impl<T: Real> Forcing<T> {
    pub fn analytic(f: impl Fn(T, &[T]) -> [T; 3] + Send + Sync + 'static) -> Self {
        Forcing::Analytic(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }

    fn check(&self, grid: &GridSpec<T>) -> Result<()> {
        if let Forcing::Sampled(levels) = self {
            if levels.len() < grid.n_steps() + 1 {
                return Err(Error::InsufficientData(format!(
                    "sampled forcing has {} levels, grid needs {}",
                    levels.len(),
                    grid.n_steps() + 1
                )));
            }
            levels.iter().try_for_each(|l| l.check_shape(grid))?;
        }
        Ok(())
    }

    /// Writes `scale·fᵢ(tₙ, ·)` into `out`.
    pub fn fill_component(
        &self,
        grid: &GridSpec<T>,
        step: usize,
        component: usize,
        scale: T,
        out: &mut [T],
    ) {
        match self {
            Forcing::Zero => out.fill(T::zero()),
            Forcing::Sampled(levels) => {
                for (o, &v) in out
                    .iter_mut()
                    .zip(levels[step].component(component).values())
                {
                    *o = scale * v;
                }
            }
            Forcing::Analytic(f) => {
                let t = grid.time(step);
                let d = grid.dim();
                for (idx, o) in out.iter_mut().enumerate() {
                    *o = scale * f(t, &grid.coords(idx)[..d])[component];
                }
            }
        }
    }
}

/// Forcing of a single scalar wave equation.
#[derive(Clone)]
pub enum ScalarForcing<T> {
    Zero,
    Sampled(Arc<Vec<ScalarField<T>>>),
    Analytic(ScalarForcingFn<T>),
}

impl<T> fmt::Debug for ScalarForcing<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarForcing::Zero => write!(f, "Zero"),
            ScalarForcing::Sampled(levels) => write!(f, "Sampled({} levels)", levels.len()),
            ScalarForcing::Analytic(_) => write!(f, "Analytic(..)"),
        }
    }
}

impl<T: Real> ScalarForcing<T> {
    pub fn analytic(f: impl Fn(T, &[T]) -> T + Send + Sync + 'static) -> Self {
        ScalarForcing::Analytic(Arc::new(f))
    }

    fn check(&self, grid: &GridSpec<T>) -> Result<()> {
        if let ScalarForcing::Sampled(levels) = self {
            if levels.len() < grid.n_steps() + 1 {
                return Err(Error::InsufficientData(format!(
                    "sampled forcing has {} levels, grid needs {}",
                    levels.len(),
                    grid.n_steps() + 1
                )));
            }
            levels.iter().try_for_each(|l| l.check_shape(grid))?;
        }
        Ok(())
    }

    pub fn fill(&self, grid: &GridSpec<T>, step: usize, out: &mut [T]) {
        match self {
            ScalarForcing::Zero => out.fill(T::zero()),
            ScalarForcing::Sampled(levels) => out.copy_from_slice(levels[step].values()),
            ScalarForcing::Analytic(f) => {
                let t = grid.time(step);
                let d = grid.dim();
                for (idx, o) in out.iter_mut().enumerate() {
                    *o = f(t, &grid.coords(idx)[..d]);
                }
            }
        }
    }
}

/// Source triple `F₁ = (b₀, b₁, f)` with the scale ε; the data actually
/// fed to a solver is `F = ε·F₁`.
#[derive(Clone, Debug)]
pub struct SourceData<T> {
    b0: VectorField<T>,
    b1: VectorField<T>,
    forcing: Forcing<T>,
    forcing_gain: T,
    epsilon: T,
}

/// Slack on the admissible-class restriction `‖F₁‖_* ≤ 1`.
pub const ADMISSIBLE_SLACK: f64 = 1e-9;

impl<T: Real> SourceData<T> {
    /// Base data with `ε = 1`.
    pub fn new(b0: VectorField<T>, b1: VectorField<T>, forcing: Forcing<T>) -> Self {
        Self {
            b0,
            b1,
            forcing,
            forcing_gain: T::one(),
            epsilon: T::one(),
        }
    }

    pub fn zero(grid: &GridSpec<T>) -> Self {
        Self::new(
            VectorField::zeros(grid),
            VectorField::zeros(grid),
            Forcing::Zero,
        )
    }

    /// Same base data at scale ε ∈ (0, 1].
    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {epsilon} not in (0, 1]"
            )));
        }
        Ok(Self {
            epsilon,
            ..self.clone()
        })
    }

    /// Base data multiplied by `alpha`; ε unchanged.
    pub fn scaled(&self, alpha: T) -> Self {
        Self {
            b0: self.b0.scaled(alpha),
            b1: self.b1.scaled(alpha),
            forcing: self.forcing.clone(),
            forcing_gain: self.forcing_gain * alpha,
            epsilon: self.epsilon,
        }
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Base initial displacement `b₀′` (unscaled by ε).
    pub fn b0(&self) -> &VectorField<T> {
        &self.b0
    }

    pub fn b1(&self) -> &VectorField<T> {
        &self.b1
    }

    pub fn forcing(&self) -> &Forcing<T> {
        &self.forcing
    }

    /// Multiplier applied to the stored forcing when sampling `F = εF₁`.
    pub fn forcing_scale(&self) -> T {
        self.epsilon * self.forcing_gain
    }

    /// Multiplier applied to the stored forcing when sampling `F₁`.
    pub fn base_forcing_scale(&self) -> T {
        self.forcing_gain
    }

    /// Effective `ε·b₀`.
    pub fn initial_displacement(&self) -> VectorField<T> {
        self.b0.scaled(self.epsilon)
    }

    /// Effective `ε·b₁`.
    pub fn initial_velocity(&self) -> VectorField<T> {
        self.b1.scaled(self.epsilon)
    }

    pub fn is_zero(&self) -> bool {
        (self.forcing.is_zero() || self.forcing_gain == T::zero())
            && self.b0.max_abs() == T::zero()
            && self.b1.max_abs() == T::zero()
    }

    pub fn check(&self, grid: &GridSpec<T>) -> Result<()> {
        self.b0.check_shape(grid)?;
        self.b1.check_shape(grid)?;
        self.forcing.check(grid)?;
        for (name, field) in [("b0", &self.b0), ("b1", &self.b1)] {
            for (i, c) in field.components().iter().enumerate() {
                let m = c.boundary_max_abs(grid);
                if m != T::zero() {
                    return Err(Error::IncompatibleData(format!(
                        "{name} component {} is {m:e} on the outer boundary",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// `‖F₁‖_* = ‖b₀′‖_{H³} + ‖b₁′‖_{H²} + ‖f₁‖_{L²H²}` over Ω′, with the
    /// time integral by the trapezoid rule over the grid's levels.
    pub fn base_norm(&self, grid: &GridSpec<T>) -> Result<T> {
        self.b0.check_shape(grid)?;
        self.b1.check_shape(grid)?;
        self.forcing.check(grid)?;
        let w = quadrature_weights(grid, Region::Outer);
        let vec_norm = |v: &VectorField<T>, order| {
            v.components()
                .iter()
                .map(|c| sobolev_norm_sq_weighted(grid, c.values(), order, &w))
                .sum::<T>()
                .sqrt()
        };
        let b0 = vec_norm(&self.b0, SobolevOrder::H3);
        let b1 = vec_norm(&self.b1, SobolevOrder::H2);
        let f = if self.forcing.is_zero() {
            T::zero()
        } else {
            let n = grid.n_steps();
            let mut buf = vec![T::zero(); grid.node_count()];
            let mut acc = T::zero();
            for step in 0..=n {
                let mut sq = T::zero();
                for i in 0..3 {
                    self.forcing
                        .fill_component(grid, step, i, self.forcing_gain, &mut buf);
                    sq = sq + sobolev_norm_sq_weighted(grid, &buf, SobolevOrder::H2, &w);
                }
                let tw = if step == 0 || step == n {
                    grid.dt() / T::lit(2.0)
                } else {
                    grid.dt()
                };
                acc = acc + tw * sq;
            }
            acc.sqrt()
        };
        Ok(b0 + b1 + f)
    }

    /// True when `‖F₁‖_* ≤ 1` (with [`ADMISSIBLE_SLACK`]).
    pub fn is_admissible(&self, grid: &GridSpec<T>) -> Result<bool> {
        Ok(self.base_norm(grid)? <= T::one() + T::lit(ADMISSIBLE_SLACK))
    }

    /// Rescales the base data so that `‖F₁‖_* = target`.
    pub fn normalized(&self, grid: &GridSpec<T>, target: T) -> Result<Self> {
        let n = self.base_norm(grid)?;
        if n == T::zero() {
            return Ok(self.clone());
        }
        Ok(self.scaled(target / n))
    }
}

/// The three conformal factors `(c₁², c₂², c₃²)` of the diagonal system.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedSystem<T> {
    speeds: [SpeedField<T>; 3],
}

impl<T: Real> SpeedSystem<T> {
    /// Validates every component against the grid.
    pub fn new(speeds: [SpeedField<T>; 3], grid: &GridSpec<T>) -> Result<Self> {
        for (i, s) in speeds.iter().enumerate() {
            let report = validate_speed(s, grid).map_err(|e| e.in_component(i))?;
            if let Some(v) = report.violation {
                return Err(Error::InvalidParameter(format!(
                    "speed component {} is not admissible: {:?} at node {:?} (value {})",
                    i + 1,
                    v.kind,
                    v.coords,
                    v.value
                ))
                .in_component(i));
            }
        }
        Ok(Self { speeds })
    }

    /// The same speed in all three components.
    pub fn uniform(speed: SpeedField<T>, grid: &GridSpec<T>) -> Result<Self> {
        Self::new([speed.clone(), speed.clone(), speed], grid)
    }

    pub fn speeds(&self) -> &[SpeedField<T>; 3] {
        &self.speeds
    }

    pub fn speed(&self, i: usize) -> &SpeedField<T> {
        &self.speeds[i]
    }

    /// Fastest `√m₁` over the components.
    pub fn c_max(&self) -> T {
        self.speeds.iter().fold(T::zero(), |a, s| a.max(s.c_max()))
    }
}

/// Tolerance on the Courant number before a run is refused.
const COURANT_SLACK: f64 = 1e-12;

pub(crate) fn check_stability<T: Real>(grid: &GridSpec<T>, c_max: T) -> Result<()> {
    let courant = grid.courant(c_max);
    if courant > T::one() + T::lit(COURANT_SLACK) {
        return Err(Error::Stability {
            courant: courant.as_f64(),
        });
    }
    Ok(())
}

/// Leapfrog integration of one scalar equation with a caller-supplied
/// source filler `source(step, out)`.
pub(crate) fn integrate_scalar<T: Real>(
    grid: &GridSpec<T>,
    c2: &[T],
    b0: &[T],
    b1: &[T],
    mut source: impl FnMut(usize, &[T], &mut [T]),
) -> Result<ScalarTrajectory<T>> {
    let n_nodes = grid.node_count();
    let mut src = vec![T::zero(); n_nodes];
    let mut snapshots = Vec::with_capacity(grid.n_steps() + 1);
    snapshots.push(ScalarField::new(b0.to_vec()));

    source(0, b0, &mut src);
    let mut next = vec![T::zero(); n_nodes];
    first_step(grid, c2, b0, b1, &src, &mut next);
    if !next.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence { step: 1 });
    }
    snapshots.push(ScalarField::new(next.clone()));

    for step in 1..grid.n_steps() {
        let (prev, cur) = (snapshots[step - 1].values(), snapshots[step].values());
        source(step, cur, &mut src);
        leapfrog_step(grid, c2, prev, cur, &src, &mut next);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { step: step + 1 });
        }
        snapshots.push(ScalarField::new(next.clone()));
    }
    Ok(ScalarTrajectory::new(snapshots, grid.dt()))
}

fn check_scalar_data<T: Real>(
    grid: &GridSpec<T>,
    b0: &ScalarField<T>,
    b1: &ScalarField<T>,
) -> Result<()> {
    b0.check_shape(grid)?;
    b1.check_shape(grid)?;
    for (name, f) in [("b0", b0), ("b1", b1)] {
        let m = f.boundary_max_abs(grid);
        if m != T::zero() {
            return Err(Error::IncompatibleData(format!(
                "{name} is {m:e} on the outer boundary"
            )));
        }
    }
    Ok(())
}

/// Solves `∂ₜ²u − c²Δu = f`, `u = b₀`, `∂ₜu = b₁` at `t = 0`, `u = 0` on ∂Ω′.
pub fn solve_scalar_linear<T: Real>(
    c: &SpeedField<T>,
    b0: &ScalarField<T>,
    b1: &ScalarField<T>,
    forcing: &ScalarForcing<T>,
    grid: &GridSpec<T>,
) -> Result<ScalarTrajectory<T>> {
    c.values().check_shape(grid)?;
    check_scalar_data(grid, b0, b1)?;
    forcing.check(grid)?;
    check_stability(grid, c.c_max())?;
    integrate_scalar(
        grid,
        c.values().values(),
        b0.values(),
        b1.values(),
        |step, _, out| forcing.fill(grid, step, out),
    )
}

/// `□_S⁻¹F` for `F = ε·F₁`: each component solves its own scalar problem.
pub fn solve_system_linear<T: Real>(
    sys: &SpeedSystem<T>,
    data: &SourceData<T>,
    grid: &GridSpec<T>,
) -> Result<WaveField<T>> {
    solve_system_with_extra(sys, data, grid, None)
}

/// Linear system solve with an extra source `extra[n]` added identically to
/// all three components at every level.
pub(crate) fn solve_system_with_extra<T: Real>(
    sys: &SpeedSystem<T>,
    data: &SourceData<T>,
    grid: &GridSpec<T>,
    extra: Option<&[ScalarField<T>]>,
) -> Result<WaveField<T>> {
    data.check(grid)?;
    for s in sys.speeds() {
        s.values().check_shape(grid)?;
    }
    if let Some(levels) = extra {
        if levels.len() < grid.n_steps() {
            return Err(Error::InsufficientData(format!(
                "extra source has {} levels, grid needs {}",
                levels.len(),
                grid.n_steps()
            )));
        }
    }
    check_stability(grid, sys.c_max())?;

    let b0 = data.initial_displacement();
    let b1 = data.initial_velocity();
    let scale = data.forcing_scale();
    let comps: Vec<ScalarTrajectory<T>> = (0..3usize)
        .into_par_iter()
        .map(|i| {
            integrate_scalar(
                grid,
                sys.speed(i).values().values(),
                b0.component(i).values(),
                b1.component(i).values(),
                |step, _, out| {
                    data.forcing().fill_component(grid, step, i, scale, out);
                    if let Some(levels) = extra {
                        for (o, &e) in out.iter_mut().zip(levels[step].values()) {
                            *o = *o + e;
                        }
                    }
                },
            )
            .map_err(|e| e.in_component(i))
        })
        .collect::<Result<_>>()?;
    let [a, b, c]: [ScalarTrajectory<T>; 3] = comps
        .try_into()
        .map_err(|_| Error::InvalidParameter("expected three components".into()))?;
    WaveField::from_components([a, b, c])
}

/// Result of a least-squares fit of `ln error` against `ln h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvergenceFit<T> {
    Order(T),
    /// Every error was exactly zero.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy<T> {
    pub hs: Vec<T>,
    pub errors: Vec<T>,
    pub fit: ConvergenceFit<T>,
}

/// Fits the observed order from at least three `(h, error)` pairs.
pub fn fit_convergence_order<T: Real>(hs: &[T], errors: &[T]) -> Result<ConvergenceFit<T>> {
    if hs.len() < 3 || hs.len() != errors.len() {
        return Err(Error::InsufficientData(format!(
            "need at least three resolutions, got {}",
            hs.len()
        )));
    }
    if errors.iter().all(|&e| e == T::zero()) {
        return Ok(ConvergenceFit::Exact);
    }
    loglog_slope(hs, errors)
        .map(ConvergenceFit::Order)
        .ok_or_else(|| Error::InvalidParameter("errors must be positive and finite".into()))
}

/// Problems with a known solution, used to measure the observed order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceProblem {
    /// `d = 1`, `c ≡ 1`, `u = sin(πx)cos(πt)` on `[0, 1]`.
    StandingWave { t_final: f64 },
    /// `d = 2`, `c² = 1 + ¼sin(πx)sin(πy)`, `u = sin(πx)sin(πy)t²` with the
    /// matching forcing.
    Manufactured2d { t_final: f64 },
}

impl ReferenceProblem {
    /// `max_n ‖uⁿ − u*(tₙ)‖_{L²(Ω′)}` at spacing `h`.
    pub fn error<T: Real>(&self, h: T) -> Result<T> {
        match *self {
            ReferenceProblem::StandingWave { t_final } => {
                let grid = GridSpec::cube(
                    1,
                    (T::zero(), T::one()),
                    (T::lit(0.25), T::lit(0.75)),
                    h,
                    T::lit(t_final),
                )?;
                let c = SpeedField::constant(&grid, T::one());
                let pi = T::lit(PI);
                let b0 = ScalarField::from_fn(&grid, |x| (pi * x[0]).sin());
                let mut b0 = b0;
                b0.zero_boundary(&grid);
                let u = solve_scalar_linear(
                    &c,
                    &b0,
                    &ScalarField::zeros(&grid),
                    &ScalarForcing::Zero,
                    &grid,
                )?;
                Ok(max_l2_error(&grid, &u, |t, x| {
                    (pi * x[0]).sin() * (pi * t).cos()
                }))
            }
            ReferenceProblem::Manufactured2d { t_final } => {
                let pi = T::lit(PI);
                let quarter = T::lit(0.25);
                let c2 = move |x: &[T]| T::one() + quarter * (pi * x[0]).sin() * (pi * x[1]).sin();
                let m1 = T::lit(1.25);
                let unit = Interval::new(T::zero(), T::one());
                let inner = Interval::new(T::lit(0.25), T::lit(0.75));
                let grid = make_grid_with_speed(
                    2,
                    &[unit, unit],
                    &[inner, inner],
                    h,
                    T::lit(t_final),
                    T::lit(0.9),
                    m1.sqrt(),
                )?;
                let values = ScalarField::from_fn(&grid, c2);
                let c = SpeedField::new(values, T::lit(0.75), m1, covering_radius(&grid), 3);
                let two = T::lit(2.0);
                let forcing = ScalarForcing::analytic(move |t: T, x: &[T]| {
                    let s = (pi * x[0]).sin() * (pi * x[1]).sin();
                    s * (two + two * pi * pi * c2(x) * t * t)
                });
                let zero = ScalarField::zeros(&grid);
                let u = solve_scalar_linear(&c, &zero, &zero, &forcing, &grid)?;
                Ok(max_l2_error(&grid, &u, |t, x| {
                    (pi * x[0]).sin() * (pi * x[1]).sin() * t * t
                }))
            }
        }
    }
}

pub(crate) fn max_l2_error<T: Real>(
    grid: &GridSpec<T>,
    u: &ScalarTrajectory<T>,
    exact: impl Fn(T, &[T]) -> T,
) -> T {
    let w = quadrature_weights(grid, Region::Outer);
    let d = grid.dim();
    u.snapshots()
        .iter()
        .enumerate()
        .map(|(step, s)| {
            let t = grid.time(step);
            s.values()
                .iter()
                .enumerate()
                .map(|(idx, &v)| {
                    let e = v - exact(t, &grid.coords(idx)[..d]);
                    w[idx] * e * e
                })
                .sum::<T>()
                .sqrt()
        })
        .fold(T::zero(), T::max)
}

/// Runs `problem` at every spacing in `hs` and fits the observed order.
pub fn convergence_order<T: Real>(
    problem: &ReferenceProblem,
    hs: &[T],
) -> Result<ConvergenceStudy<T>> {
    if hs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least three resolutions, got {}",
            hs.len()
        )));
    }
    let errors = hs
        .par_iter()
        .map(|&h| problem.error(h))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_convergence_order(hs, &errors)?;
    Ok(ConvergenceStudy {
        hs: hs.to_vec(),
        errors,
        fit,
    })
}
