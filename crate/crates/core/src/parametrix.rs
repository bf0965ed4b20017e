//! Two-term small-data expansion `w = εw₁ + ε²w₂` of the coupled system.
//!
//! `w₁ = □_S⁻¹F₁` and `w₂ = □_S⁻¹(0, 0, |w₁|²·(1,1,1))`. Neither term
//! depends on ε, so a sweep builds them once and only reassembles `w`.

use rayon::prelude::*;

use crate::domain::grid::GridSpec;
use crate::domain::io::format_float;
use crate::domain::norms::{l2_norm_raw, quadrature_weights, Region};
use crate::domain::stencil::laplacian;
use crate::error::{Error, Result};
use crate::linear::{solve_system_with_extra, SourceData, SpeedSystem};
use crate::nonlinear::{solve_coupled, EnergyConstant, NonlinearProblem};
use crate::regression::loglog_slope;
use crate::scalar::Real;
use crate::trajectory::{s_norm, WaveField};

#[derive(Clone, Debug)]
pub struct ParametrixBundle<T> {
    pub w1: WaveField<T>,
    pub w2: WaveField<T>,
    pub w: WaveField<T>,
    pub epsilon: T,
}

impl<T: Real> ParametrixBundle<T> {
    /// `ε·w₁ + ε²·w₂` from the stored terms.
    pub fn reassemble(&self) -> Result<WaveField<T>> {
        let e = self.epsilon;
        WaveField::combine(e, &self.w1, e * e, &self.w2)
    }

    /// Same terms assembled at a different ε.
    pub fn at_epsilon(&self, epsilon: T) -> Result<Self> {
        let w = WaveField::combine(epsilon, &self.w1, epsilon * epsilon, &self.w2)?;
        Ok(Self {
            w1: self.w1.clone(),
            w2: self.w2.clone(),
            w,
            epsilon,
        })
    }
}

/// Builds `w₁`, `w₂` from the base data `F₁` (its own ε is ignored) and
/// assembles `w` at `epsilon`.
pub fn build_parametrix<T: Real>(
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    epsilon: T,
    grid: &GridSpec<T>,
) -> Result<ParametrixBundle<T>> {
    let base = f1.with_epsilon(T::one())?;
    let w1 = solve_system_with_extra(sys, &base, grid, None)?;
    let source = w1.squared_magnitude_levels();
    let w2 = solve_system_with_extra(sys, &SourceData::zero(grid), grid, Some(&source))?;
    let w = WaveField::combine(epsilon, &w1, epsilon * epsilon, &w2)?;
    Ok(ParametrixBundle { w1, w2, w, epsilon })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRecord<T> {
    pub epsilon: T,
    /// `‖u − w‖_S`.
    pub err_norm: T,
    /// `‖u − εw₁‖_S`.
    pub first_order_err: T,
    /// `2·D₁(T)³·ε³` when `D₁` is known.
    pub bound: Option<T>,
    /// `err_norm / ε³`.
    pub ratio: T,
}

/// Compares the bundle against the direct coupled solution at its ε.
pub fn parametrix_error<T: Real>(
    bundle: &ParametrixBundle<T>,
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    grid: &GridSpec<T>,
    d1: Option<&EnergyConstant<T>>,
) -> Result<ErrorRecord<T>> {
    let eps = bundle.epsilon;
    let problem = NonlinearProblem::new(sys.clone(), f1.with_epsilon(eps)?, grid.clone())?;
    let u = solve_coupled(&problem)?;
    let err_norm = s_norm(&u.minus(&bundle.w)?, grid);
    let first = WaveField::combine(T::one(), &u, -eps, &bundle.w1)?;
    let eps3 = eps * eps * eps;
    Ok(ErrorRecord {
        epsilon: eps,
        err_norm,
        first_order_err: s_norm(&first, grid),
        bound: d1.map(|d| {
            let d = d.eval(grid.t_final());
            T::lit(2.0) * d * d * d * eps3
        }),
        ratio: err_norm / eps3,
    })
}

/// Discrete defect `max_n ‖D_t²wⁿ − c²Δwⁿ − |wⁿ|² − εfⁿ‖_{L²}` over the
/// interior leapfrog levels `1..N−1`.
pub fn defect_residual<T: Real>(
    bundle: &ParametrixBundle<T>,
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    grid: &GridSpec<T>,
) -> Result<T> {
    let data = f1.with_epsilon(bundle.epsilon)?;
    let scale = data.forcing_scale();
    let weights = quadrature_weights(grid, Region::Outer);
    let n = grid.node_count();
    let inv_dt2 = T::one() / (grid.dt() * grid.dt());
    let two = T::lit(2.0);
    let levels = bundle.w.snapshots();
    let mut worst = T::zero();
    let mut lap = vec![T::zero(); n];
    let mut src = vec![T::zero(); n];
    for step in 1..levels.len().saturating_sub(1) {
        let quad = levels[step].squared_magnitude();
        let mut total = T::zero();
        for i in 0..3 {
            let (prev, cur, next) = (
                levels[step - 1].component(i).values(),
                levels[step].component(i).values(),
                levels[step + 1].component(i).values(),
            );
            let c2 = sys.speed(i).values().values();
            laplacian(grid, cur, &mut lap);
            data.forcing()
                .fill_component(grid, step, i, scale, &mut src);
            let r: Vec<T> = (0..n)
                .map(|idx| {
                    if grid.is_outer_boundary(idx) {
                        return T::zero();
                    }
                    (next[idx] - two * cur[idx] + prev[idx]) * inv_dt2
                        - c2[idx] * lap[idx]
                        - quad.values()[idx]
                        - src[idx]
                })
                .collect();
            let norm = l2_norm_raw(&r, &weights);
            total = total + norm * norm;
        }
        worst = worst.max(total.sqrt());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParametrixSweep<T> {
    pub records: Vec<ErrorRecord<T>>,
    /// Log-log slope of `err_norm` against ε.
    pub slope: Option<T>,
    /// Log-log slope of `first_order_err` against ε.
    pub first_order_slope: Option<T>,
}

impl<T: Real> ParametrixSweep<T> {
    /// CSV `epsilon,err_norm,ratio,slope_window`; the window slope joins
    /// each row to the previous one and is empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,err_norm,ratio,slope_window\n");
        for (k, r) in self.records.iter().enumerate() {
            let window = (k > 0)
                .then(|| {
                    let p = &self.records[k - 1];
                    loglog_slope(&[p.epsilon, r.epsilon], &[p.err_norm, r.err_norm])
                })
                .flatten()
                .map(|v| format_float(v.as_f64()))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{}\n",
                format_float(r.epsilon.as_f64()),
                format_float(r.err_norm.as_f64()),
                format_float(r.ratio.as_f64()),
                window
            ));
        }
        s
    }
}

/// Error records for every ε, with the fitted slopes.
pub fn parametrix_sweep<T: Real>(
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    epsilons: &[T],
    grid: &GridSpec<T>,
    d1: Option<&EnergyConstant<T>>,
) -> Result<ParametrixSweep<T>> {
    if epsilons.is_empty() {
        return Err(Error::InsufficientData("empty epsilon list".into()));
    }
    let bundle = build_parametrix(sys, f1, epsilons[0], grid)?;
    let records = epsilons
        .par_iter()
        .map(|&e| parametrix_error(&bundle.at_epsilon(e)?, sys, f1, grid, d1))
        .collect::<Result<Vec<_>>>()?;
    let eps: Vec<T> = records.iter().map(|r| r.epsilon).collect();
    let errs: Vec<T> = records.iter().map(|r| r.err_norm).collect();
    let firsts: Vec<T> = records.iter().map(|r| r.first_order_err).collect();
    Ok(ParametrixSweep {
        slope: loglog_slope(&eps, &errs),
        first_order_slope: loglog_slope(&eps, &firsts),
        records,
    })
}

/// `‖w₂‖_S / ‖w₁‖_S²`, or `None` when `w₁` vanishes.
pub fn quadratic_constant<T: Real>(bundle: &ParametrixBundle<T>, grid: &GridSpec<T>) -> Option<T> {
    let n1 = s_norm(&bundle.w1, grid);
    (n1 > T::zero()).then(|| s_norm(&bundle.w2, grid) / (n1 * n1))
}
