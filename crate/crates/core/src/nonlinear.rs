//! The coupled semi-linear system `∂ₜ²uᵢ − cᵢ²Δuᵢ = |u|² + fᵢ`.
//!
//! Two routes to the same discrete solution: a direct explicit stepper, and
//! a Duhamel–Picard iteration whose every iterate is a linear-system solve
//! driven by the previous iterate's nonlinearity. Both evaluate `|u|²` at
//! the current time level, so the Picard fixed point coincides with the
//! direct trajectory up to rounding.

use std::fmt;
use std::sync::Arc;

use crate::domain::field::ScalarField;
use crate::domain::grid::GridSpec;
use crate::domain::stencil::{first_step, leapfrog_step};
use crate::error::{Error, Result};
use crate::linear::{check_stability, solve_system_with_extra, SourceData, SpeedSystem};
use crate::scalar::Real;
use crate::trajectory::{s_norm, WaveField};

/// Quadratic nonlinearity of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonlinearity {
    /// `N(u, u) = (|u|², |u|², |u|²)`.
    AbsSquare,
}

/// Blow-up sentinel: `|u|` above `BLOWUP_FACTOR / ε` aborts a run.
pub const BLOWUP_FACTOR: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct NonlinearProblem<T> {
    pub sys: SpeedSystem<T>,
    pub data: SourceData<T>,
    pub grid: GridSpec<T>,
    pub nonlinearity: Nonlinearity,
    /// Multiplier on `|u|²`; 1 for the physical system, 0 turns it linear.
    pub coupling: T,
}

impl<T: Real> NonlinearProblem<T> {
    pub fn new(sys: SpeedSystem<T>, data: SourceData<T>, grid: GridSpec<T>) -> Result<Self> {
        let eps = data.epsilon();
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {eps} not in (0, 1)"
            )));
        }
        check_stability(&grid, sys.c_max())?;
        Ok(Self {
            sys,
            data,
            grid,
            nonlinearity: Nonlinearity::AbsSquare,
            coupling: T::one(),
        })
    }

    pub fn with_coupling(mut self, coupling: T) -> Self {
        self.coupling = coupling;
        self
    }

    fn nonlinear_source(&self, u: &WaveFieldLevel<'_, T>, out: &mut [T]) {
        match self.nonlinearity {
            Nonlinearity::AbsSquare => {
                for (idx, o) in out.iter_mut().enumerate() {
                    let (a, b, c) = (u[0][idx], u[1][idx], u[2][idx]);
                    *o = self.coupling * (a * a + b * b + c * c);
                }
            }
        }
    }

    /// `coupling·N(W, W)` at every level of a trajectory.
    fn nonlinear_levels(&self, w: &WaveField<T>) -> Vec<ScalarField<T>> {
        let n = self.grid.node_count();
        w.snapshots()
            .iter()
            .map(|s| {
                let level = [
                    s.component(0).values(),
                    s.component(1).values(),
                    s.component(2).values(),
                ];
                let mut out = vec![T::zero(); n];
                self.nonlinear_source(&level, &mut out);
                ScalarField::new(out)
            })
            .collect()
    }
}

type WaveFieldLevel<'a, T> = [&'a [T]; 3];

fn check_blowup<T: Real>(levels: &[Vec<T>; 3], threshold: T, step: usize) -> Result<()> {
    let mut worst = T::zero();
    for c in levels {
        for &v in c {
            if !v.is_finite() {
                return Err(Error::BlowUp {
                    step,
                    magnitude: f64::INFINITY,
                    threshold: threshold.as_f64(),
                });
            }
            worst = worst.max(v.abs());
        }
    }
    if worst > threshold {
        return Err(Error::BlowUp {
            step,
            magnitude: worst.as_f64(),
            threshold: threshold.as_f64(),
        });
    }
    Ok(())
}

/// Direct leapfrog for the coupled system with `|uⁿ|²` evaluated explicitly.
pub fn solve_coupled<T: Real>(problem: &NonlinearProblem<T>) -> Result<WaveField<T>> {
    let grid = &problem.grid;
    let data = &problem.data;
    data.check(grid)?;
    check_stability(grid, problem.sys.c_max())?;

    let n_nodes = grid.node_count();
    let threshold = T::lit(BLOWUP_FACTOR) / data.epsilon();
    let scale = data.forcing_scale();
    let b0 = data.initial_displacement().into_components();
    let b1 = data.initial_velocity().into_components();
    let c2: [&[T]; 3] = [
        problem.sys.speed(0).values().values(),
        problem.sys.speed(1).values().values(),
        problem.sys.speed(2).values().values(),
    ];

    let mut nonlin = vec![T::zero(); n_nodes];
    let mut src = vec![T::zero(); n_nodes];
    let mut levels: Vec<[Vec<T>; 3]> = Vec::with_capacity(grid.n_steps() + 1);
    levels.push([
        b0[0].values().to_vec(),
        b0[1].values().to_vec(),
        b0[2].values().to_vec(),
    ]);

    let fill_source = |step: usize, i: usize, nonlin: &[T], src: &mut [T]| {
        data.forcing().fill_component(grid, step, i, scale, src);
        for (s, &q) in src.iter_mut().zip(nonlin) {
            *s = *s + q;
        }
    };

    {
        let cur = &levels[0];
        problem.nonlinear_source(&[&cur[0], &cur[1], &cur[2]], &mut nonlin);
        let mut next: [Vec<T>; 3] = Default::default();
        for i in 0..3 {
            fill_source(0, i, &nonlin, &mut src);
            let mut out = vec![T::zero(); n_nodes];
            first_step(grid, c2[i], b0[i].values(), b1[i].values(), &src, &mut out);
            next[i] = out;
        }
        check_blowup(&next, threshold, 1)?;
        levels.push(next);
    }

    for step in 1..grid.n_steps() {
        let (prev, cur) = (&levels[step - 1], &levels[step]);
        problem.nonlinear_source(&[&cur[0], &cur[1], &cur[2]], &mut nonlin);
        let mut next: [Vec<T>; 3] = Default::default();
        for i in 0..3 {
            fill_source(step, i, &nonlin, &mut src);
            let mut out = vec![T::zero(); n_nodes];
            leapfrog_step(grid, c2[i], &prev[i], &cur[i], &src, &mut out);
            next[i] = out;
        }
        check_blowup(&next, threshold, step + 1)?;
        levels.push(next);
    }

    let snapshots = levels
        .into_iter()
        .map(|[a, b, c]| {
            crate::domain::field::VectorField::new([
                ScalarField::new(a),
                ScalarField::new(b),
                ScalarField::new(c),
            ])
        })
        .collect();
    Ok(WaveField::new(snapshots, grid.dt()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport<T> {
    pub iterates: usize,
    /// `‖Wⁿ − Wⁿ⁻¹‖_S` for `n = 1..=iterates`.
    pub residuals: Vec<T>,
    pub converged: bool,
    /// Geometric mean of successive residual ratios (0 when undefined).
    pub contraction_ratio: T,
    /// Whether `T` lies inside the default lifespan estimate for this ε.
    pub within_lifespan: bool,
}

impl<T: Real> PicardReport<T> {
    /// Ratio `rₙ/rₙ₋₁` for each recorded iterate after the first.
    pub fn ratios(&self) -> Vec<Option<T>> {
        (0..self.residuals.len())
            .map(|k| {
                (k > 0 && self.residuals[k - 1] > T::zero())
                    .then(|| self.residuals[k] / self.residuals[k - 1])
            })
            .collect()
    }

    /// CSV with columns `iteration,residual,ratio`.
    pub fn to_csv(&self) -> String {
        use crate::domain::io::format_float;
        let mut s = String::from("iteration,residual,ratio\n");
        for (k, (r, ratio)) in self.residuals.iter().zip(self.ratios()).enumerate() {
            let ratio = ratio.map(|q| format_float(q.as_f64())).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{}\n",
                k + 1,
                format_float(r.as_f64()),
                ratio
            ));
        }
        s
    }
}

fn geometric_mean_ratio<T: Real>(residuals: &[T]) -> T {
    let logs: Vec<T> = residuals
        .windows(2)
        .filter(|w| w[0] > T::zero() && w[1] > T::zero())
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if logs.is_empty() {
        return T::zero();
    }
    (logs.iter().copied().sum::<T>() / T::of_usize(logs.len())).exp()
}

/// Duhamel–Picard iteration `W⁰ = □_S⁻¹F`, `Wⁿ = □_S⁻¹(F + N(Wⁿ⁻¹))`.
///
/// Stops once `‖Wⁿ − Wⁿ⁻¹‖_S < tol`; running out of iterations is reported
/// through `converged = false`, not as an error.
pub fn duhamel_picard<T: Real>(
    problem: &NonlinearProblem<T>,
    max_iter: usize,
    tol: T,
) -> Result<(WaveField<T>, PicardReport<T>)> {
    let grid = &problem.grid;
    let within_lifespan = LifespanModel::default_for(&problem.sys, grid)
        .and_then(|m| lifespan_estimate(&m, problem.data.epsilon()))
        .map(|est| est.t_max > grid.t_final())
        .unwrap_or(false);

    let mut current = solve_system_with_extra(&problem.sys, &problem.data, grid, None)?;
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let extra = problem.nonlinear_levels(&current);
        let next = solve_system_with_extra(&problem.sys, &problem.data, grid, Some(&extra))?;
        let r = s_norm(&next.minus(&current)?, grid);
        residuals.push(r);
        current = next;
        if r < tol {
            converged = true;
            break;
        }
        if !r.is_finite() {
            break;
        }
    }
    let report = PicardReport {
        iterates: residuals.len(),
        contraction_ratio: geometric_mean_ratio(&residuals),
        residuals,
        converged,
        within_lifespan,
    };
    Ok((current, report))
}

/// Tabulated or closed-form energy constant `D₁(T)`.
#[derive(Clone)]
pub enum EnergyConstant<T> {
    Function(Arc<dyn Fn(T) -> T + Send + Sync>),
    /// `(T, D₁(T))` pairs with increasing `T`; linear in between, clamped
    /// outside.
    Table(Vec<(T, T)>),
}

impl<T> fmt::Debug for EnergyConstant<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyConstant::Function(_) => write!(f, "Function(..)"),
            EnergyConstant::Table(t) => write!(f, "Table({} points)", t.len()),
        }
    }
}

impl<T: Real> EnergyConstant<T> {
    pub fn function(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        EnergyConstant::Function(Arc::new(f))
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            EnergyConstant::Function(f) => f(t),
            EnergyConstant::Table(points) => {
                let Some(first) = points.first() else {
                    return T::nan();
                };
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((t0, d0), (t1, d1)) = (w[0], w[1]);
                    if t <= t1 {
                        return d0 + (d1 - d0) * (t - t0) / (t1 - t0);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }
}

/// Constants of the lifespan condition `C·T < log(1/(3ε)) − C′`.
#[derive(Clone, Debug)]
pub struct LifespanModel<T> {
    pub c_s: T,
    pub c_s_prime: T,
    pub d1: Option<EnergyConstant<T>>,
}

impl<T: Real> LifespanModel<T> {
    pub fn new(c_s: T, c_s_prime: T) -> Result<Self> {
        if !(c_s > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "C(s) = {c_s} must be positive"
            )));
        }
        Ok(Self {
            c_s,
            c_s_prime,
            d1: None,
        })
    }

    pub fn with_d1(mut self, d1: EnergyConstant<T>) -> Self {
        self.d1 = Some(d1);
        self
    }

    /// `C(s)` from the largest discrete `‖cᵢ²‖_{C¹}` and `C′(s) = log 2`.
    pub fn default_for(sys: &SpeedSystem<T>, grid: &GridSpec<T>) -> Result<Self> {
        let mut c_s = T::zero();
        for s in sys.speeds() {
            c_s = c_s.max(s.c1_norm(grid)?);
        }
        Self::new(c_s, T::lit(2.0).ln())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifespanEstimate<T> {
    pub t_max: T,
    /// `(log(1/(3ε)) − C′)/C`, clamped at 0.
    pub t_log: T,
    /// Root of `T·D₁(T) = 1/(3ε)` when `D₁` is supplied and the root exists.
    pub t_energy: Option<T>,
    /// False when `t_max = 0`.
    pub guaranteed: bool,
}

pub fn lifespan_estimate<T: Real>(
    model: &LifespanModel<T>,
    epsilon: T,
) -> Result<LifespanEstimate<T>> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} not in (0, 1)"
        )));
    }
    if !(model.c_s > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "C(s) = {} must be positive",
            model.c_s
        )));
    }
    let target = T::one() / (T::lit(3.0) * epsilon);
    let t_log = ((target.ln() - model.c_s_prime) / model.c_s).max(T::zero());
    let t_energy = model
        .d1
        .as_ref()
        .and_then(|d1| solve_energy_condition(d1, target));
    let t_max = match t_energy {
        Some(te) => t_log.min(te),
        None => t_log,
    };
    Ok(LifespanEstimate {
        t_max,
        t_log,
        t_energy,
        guaranteed: t_max > T::zero(),
    })
}

/// Bisection for `T·D₁(T) = target` on `T > 0`.
fn solve_energy_condition<T: Real>(d1: &EnergyConstant<T>, target: T) -> Option<T> {
    let g = |t: T| t * d1.eval(t) - target;
    let mut lo = T::zero();
    let mut hi = T::one();
    let mut expansions = 0;
    while !(g(hi) >= T::zero()) {
        lo = hi;
        hi = hi + hi;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some((lo + hi) / T::lit(2.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiameterCheck<T> {
    /// Travel-time diameter of Ω: Euclidean diameter over the slowest speed.
    pub diam: T,
    pub t_max: T,
    pub passed: bool,
}

/// Slowest nodal speed `min_i min_{x∈Ω̄} cᵢ(x)`.
fn slowest_speed<T: Real>(sys: &SpeedSystem<T>, grid: &GridSpec<T>) -> T {
    let mut c_min = T::infinity();
    for s in sys.speeds() {
        for (idx, &v) in s.values().values().iter().enumerate() {
            if grid.in_inner_closure(idx) {
                c_min = c_min.min(v.sqrt());
            }
        }
    }
    c_min
}

/// Checks `diam(Ω) < T_max(ε)`.
pub fn diameter_condition<T: Real>(
    grid: &GridSpec<T>,
    sys: &SpeedSystem<T>,
    model: &LifespanModel<T>,
    epsilon: T,
) -> Result<DiameterCheck<T>> {
    let diam = grid.inner_diameter() / slowest_speed(sys, grid);
    let est = lifespan_estimate(model, epsilon)?;
    Ok(DiameterCheck {
        diam,
        t_max: est.t_max,
        passed: diam < est.t_max,
    })
}

/// Largest ε (found by bisection in `log ε`) for which the diameter
/// condition holds; every smaller ε then passes as well. `None` when no
/// ε ≥ 1e-30 passes.
pub fn lifespan_threshold<T: Real>(
    grid: &GridSpec<T>,
    sys: &SpeedSystem<T>,
    model: &LifespanModel<T>,
) -> Result<Option<T>> {
    let passes = |eps: T| diameter_condition(grid, sys, model, eps).map(|c| c.passed);
    let mut lo = T::lit(1e-30);
    let mut hi = T::one() - T::lit(1e-6);
    if !passes(lo)? {
        return Ok(None);
    }
    if passes(hi)? {
        return Ok(Some(hi));
    }
    for _ in 0..200 {
        let mid = (lo.ln() + hi.ln()) / T::lit(2.0);
        let mid = mid.exp();
        if mid <= lo || mid >= hi {
            break;
        }
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifespanRow<T> {
    pub epsilon: T,
    pub t_max: T,
    pub diam: T,
    pub passed: bool,
}

/// One `(ε, T_max, diam, pass)` row per ε.
pub fn lifespan_scan<T: Real>(
    grid: &GridSpec<T>,
    sys: &SpeedSystem<T>,
    model: &LifespanModel<T>,
    epsilons: &[T],
) -> Result<Vec<LifespanRow<T>>> {
    epsilons
        .iter()
        .map(|&epsilon| {
            let c = diameter_condition(grid, sys, model, epsilon)?;
            Ok(LifespanRow {
                epsilon,
                t_max: c.t_max,
                diam: c.diam,
                passed: c.passed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::field::{SpeedField, VectorField};
    use crate::linear::{solve_system_linear, Forcing};
    use crate::trajectory::c_l2_norm;
    use std::f64::consts::PI;

    fn square(h: f64, t: f64) -> GridSpec<f64> {
        GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), h, t).unwrap()
    }

    fn mode_data(g: &GridSpec<f64>) -> SourceData<f64> {
        let mut b0 = crate::domain::field::ScalarField::from_fn(g, |x| {
            (PI * x[0]).sin() * (PI * x[1]).sin()
        });
        b0.zero_boundary(g);
        let b0 = VectorField::new([b0.clone(), b0.scaled(0.5), b0.scaled(-0.25)]);
        SourceData::new(b0, VectorField::zeros(g), Forcing::Zero)
    }

    fn unit_system(g: &GridSpec<f64>) -> SpeedSystem<f64> {
        SpeedSystem::uniform(SpeedField::constant(g, 1.0), g).unwrap()
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let g = square(1.0 / 16.0, 0.5);
        let data = SourceData::zero(&g).with_epsilon(0.1).unwrap();
        let p = NonlinearProblem::new(unit_system(&g), data, g.clone()).unwrap();
        let u = solve_coupled(&p).unwrap();
        assert_eq!(c_l2_norm(&u, &g), 0.0);
        let (w, report) = duhamel_picard(&p, 10, 1e-12).unwrap();
        assert_eq!(c_l2_norm(&w, &g), 0.0);
        assert!(report.converged);
        assert_eq!(report.iterates, 1);
    }

    #[test]
    fn manufactured_coupled_solution_is_second_order() {
        // u*ᵢ = aᵢ·sin(πx)sin(πy)·t², fᵢ = ∂ₜ²u*ᵢ − Δu*ᵢ − |u*|²
        let amps = [1.0, -0.5, 0.25];
        let norm2: f64 = amps.iter().map(|a| a * a).sum();
        let errors: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
            .iter()
            .map(|&h| {
                let g = square(h, 0.5);
                let forcing = Forcing::analytic(move |t: f64, x: &[f64]| {
                    let s = (PI * x[0]).sin() * (PI * x[1]).sin();
                    let lin = s * (2.0 + 2.0 * PI * PI * t * t);
                    let quad = norm2 * s * s * t.powi(4);
                    [
                        amps[0] * lin - quad,
                        amps[1] * lin - quad,
                        amps[2] * lin - quad,
                    ]
                });
                let data = SourceData::new(VectorField::zeros(&g), VectorField::zeros(&g), forcing)
                    .with_epsilon(0.5)
                    .unwrap()
                    .scaled(2.0);
                let p = NonlinearProblem::new(unit_system(&g), data, g.clone()).unwrap();
                let u = solve_coupled(&p).unwrap();
                let exact = WaveField::new(
                    (0..=g.n_steps())
                        .map(|n| {
                            let t = g.time(n);
                            VectorField::from_fn(&g, |x| {
                                let s = (PI * x[0]).sin() * (PI * x[1]).sin() * t * t;
                                [amps[0] * s, amps[1] * s, amps[2] * s]
                            })
                        })
                        .collect(),
                    g.dt(),
                );
                c_l2_norm(&u.minus(&exact).unwrap(), &g)
            })
            .collect();
        let p = crate::regression::loglog_slope(&[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], &errors)
            .unwrap();
        assert!((1.8..=2.2).contains(&p), "order {p}, errors {errors:?}");
    }

    #[test]
    fn epsilon_family_deviates_quadratically_from_linear() {
        let g = square(1.0 / 32.0, 1.0);
        let base = mode_data(&g);
        let sys = unit_system(&g);
        let lin = solve_system_linear(&sys, &base, &g).unwrap();
        let eps = [0.04, 0.02, 0.01];
        let devs: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let p =
                    NonlinearProblem::new(sys.clone(), base.with_epsilon(e).unwrap(), g.clone())
                        .unwrap();
                let u = solve_coupled(&p).unwrap();
                c_l2_norm(&u.minus(&lin.scaled(e)).unwrap(), &g)
            })
            .collect();
        let slope = crate::regression::loglog_slope(&eps, &devs).unwrap();
        assert!((1.7..=2.3).contains(&slope), "slope {slope}");
    }

    #[test]
    fn doubling_epsilon_nearly_doubles_the_solution() {
        let g = square(1.0 / 32.0, 1.0);
        let base = mode_data(&g);
        let sys = unit_system(&g);
        let norm = |e: f64| {
            let p = NonlinearProblem::new(sys.clone(), base.with_epsilon(e).unwrap(), g.clone())
                .unwrap();
            c_l2_norm(&solve_coupled(&p).unwrap(), &g)
        };
        for e in [0.0025, 0.005] {
            let ratio = norm(2.0 * e) / norm(e);
            assert!((1.9..=2.3).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn large_data_blows_up() {
        let g = square(1.0 / 16.0, 2.0);
        let data = mode_data(&g).scaled(200.0).with_epsilon(0.5).unwrap();
        let p = NonlinearProblem::new(unit_system(&g), data, g.clone()).unwrap();
        assert!(matches!(solve_coupled(&p), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn picard_matches_direct_and_contracts() {
        let g = square(1.0 / 32.0, 1.0);
        let data = mode_data(&g).with_epsilon(0.01).unwrap();
        let p = NonlinearProblem::new(unit_system(&g), data, g.clone()).unwrap();
        let direct = solve_coupled(&p).unwrap();
        let tol = 1e-12;
        let (picard, report) = duhamel_picard(&p, 50, tol).unwrap();
        assert!(report.converged, "{report:?}");
        assert!(report.within_lifespan);
        let diff = c_l2_norm(&direct.minus(&picard).unwrap(), &g);
        let bound = (10.0 * tol).max(1e-6 * c_l2_norm(&direct, &g));
        assert!(diff <= bound, "{diff} > {bound}");
        let first = report.residuals[0];
        for r in report.ratios().into_iter().flatten() {
            assert!(r < 1.0, "ratio {r}");
        }
        assert!(report.residuals.iter().all(|&r| r <= first));
        assert!(report.contraction_ratio < 1.0);
        // Lipschitz bound: ‖u‖_S ≤ 2‖u_lin‖_S
        let lin = solve_system_linear(&p.sys, &p.data, &g).unwrap();
        assert!(s_norm(&direct, &g) <= 2.0 * s_norm(&lin, &g) + tol);
    }

    #[test]
    fn contraction_ratio_scales_with_epsilon() {
        let g = square(1.0 / 32.0, 1.0);
        let base = mode_data(&g);
        let ratio = |e: f64| {
            let p =
                NonlinearProblem::new(unit_system(&g), base.with_epsilon(e).unwrap(), g.clone())
                    .unwrap();
            duhamel_picard(&p, 4, 0.0).unwrap().1.contraction_ratio
        };
        let r = [ratio(0.04), ratio(0.02), ratio(0.01)];
        for w in r.windows(2) {
            let q = w[0] / w[1];
            assert!((1.7..=2.3).contains(&q), "ratios {r:?}");
        }
    }

    #[test]
    fn lifespan_examples() {
        let m = LifespanModel::new(1.0, 1.0).unwrap();
        let eps = 1.0 / (3.0 * 4f64.exp());
        let est = lifespan_estimate(&m, eps).unwrap();
        assert!((est.t_max - 3.0).abs() < 1e-12);
        assert!(est.guaranteed);

        let mut prev = 0.0;
        for e in [0.1, 0.01, 1e-3, 1e-6] {
            let t = lifespan_estimate(&m, e).unwrap().t_max;
            assert!(t >= prev);
            prev = t;
        }

        let none = lifespan_estimate(&LifespanModel::new(1.0, 0.0).unwrap(), 0.5).unwrap();
        assert_eq!(none.t_max, 0.0);
        assert!(!none.guaranteed);

        let with_d1 = LifespanModel::<f64>::new(0.1, 0.0)
            .unwrap()
            .with_d1(EnergyConstant::function(|_| 1.0));
        let est = lifespan_estimate(&with_d1, 0.1).unwrap();
        assert!((est.t_energy.unwrap() - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(est.t_max, est.t_log.min(est.t_energy.unwrap()));
        assert!(est.t_log > est.t_energy.unwrap());

        assert!(lifespan_estimate(&m, 1.0).is_err());
        assert!(LifespanModel::new(0.0, 1.0).is_err());
    }

    #[test]
    fn tabulated_d1_interpolates() {
        let d1 = EnergyConstant::Table(vec![(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(d1.eval(1.0), 2.0);
        assert_eq!(d1.eval(5.0), 3.0);
    }

    #[test]
    fn diameter_condition_on_unit_square() {
        let g = GridSpec::cube(2, (-0.5, 1.5), (0.0, 1.0), 0.125, 0.5).unwrap();
        let sys = unit_system(&g);
        let m = LifespanModel::new(1.0, 1.0).unwrap();
        let eps = 1.0 / (3.0 * 4f64.exp());
        let c = diameter_condition(&g, &sys, &m, eps).unwrap();
        assert!((c.diam - 2f64.sqrt()).abs() < 1e-12);
        assert!(c.passed);
        assert!(!diameter_condition(&g, &sys, &m, 0.4).unwrap().passed);

        let eps1 = lifespan_threshold(&g, &sys, &m).unwrap().unwrap();
        assert!(eps1 > 0.0);
        // closed form: log(1/(3ε₁)) − 1 = √2
        let exact = 1.0 / (3.0 * (1.0 + 2f64.sqrt()).exp());
        assert!((eps1 - exact).abs() < 1e-9 * exact);
        assert!(diameter_condition(&g, &sys, &m, 0.9 * eps1).unwrap().passed);

        let rows = lifespan_scan(&g, &sys, &m, &[0.1, 0.01, 0.001]).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[2].passed);
    }

    #[test]
    fn slow_speed_lengthens_the_diameter() {
        let g = GridSpec::cube(2, (-0.5, 1.5), (0.0, 1.0), 0.125, 0.5).unwrap();
        let slow = SpeedField::constant(&g, 0.25);
        let sys = SpeedSystem::new(
            [
                SpeedField::constant(&g, 1.0),
                slow,
                SpeedField::constant(&g, 1.0),
            ],
            &g,
        )
        .unwrap();
        let m = LifespanModel::new(1.0, 1.0).unwrap();
        let c = diameter_condition(&g, &sys, &m, 0.001).unwrap();
        assert!((c.diam - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
