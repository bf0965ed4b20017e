//! Source-to-solution maps on ∂Ω and recovery of the linear map from
//! nonlinear measurements.

use rayon::prelude::*;

use crate::analysis::trace::{trace, BoundaryTrace};
use crate::domain::grid::GridSpec;
use crate::domain::io::format_float;
use crate::error::{Error, Result};
use crate::linear::{solve_system_linear, SourceData, SpeedSystem};
use crate::nonlinear::{solve_coupled, NonlinearProblem};
use crate::regression::loglog_slope;
use crate::scalar::Real;

/// `Λ(F)`: trace of the coupled solution for the data `F = εF₁`.
pub fn lambda_map<T: Real>(
    sys: &SpeedSystem<T>,
    data: &SourceData<T>,
    grid: &GridSpec<T>,
) -> Result<BoundaryTrace<T>> {
    lambda_with_coupling(sys, data, grid, T::one())
}

fn lambda_with_coupling<T: Real>(
    sys: &SpeedSystem<T>,
    data: &SourceData<T>,
    grid: &GridSpec<T>,
    coupling: T,
) -> Result<BoundaryTrace<T>> {
    let problem =
        NonlinearProblem::new(sys.clone(), data.clone(), grid.clone())?.with_coupling(coupling);
    trace(&solve_coupled(&problem)?, grid)
}

/// `Λ^lin(F₁)`: trace of the linear solution for the base data.
pub fn lambda_lin_map<T: Real>(
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    grid: &GridSpec<T>,
) -> Result<BoundaryTrace<T>> {
    let u = solve_system_linear(sys, &f1.with_epsilon(T::one())?, grid)?;
    trace(&u, grid)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryEntry<T> {
    pub epsilon: T,
    /// `‖Λ(εF₁)/ε − Λ^lin F₁‖_{L²L²(∂Ω)}`, absent when the solve failed.
    pub error: Option<T>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RecoveryReport<T> {
    pub entries: Vec<RecoveryEntry<T>>,
    /// `2L(ε) − L(2ε)` at the smallest ε, when both solves succeeded.
    pub estimate: Option<BoundaryTrace<T>>,
    /// Directly computed `Λ^lin F₁`.
    pub reference: BoundaryTrace<T>,
    pub estimate_error: Option<T>,
    /// Log-log slope of the per-ε errors against ε.
    pub rate: Option<T>,
}

impl<T: Real> RecoveryReport<T> {
    pub fn all_succeeded(&self) -> bool {
        self.entries.iter().all(|e| e.failure.is_none()) && self.estimate.is_some()
    }

    /// Smallest single-ε error.
    pub fn best_single_error(&self) -> Option<T> {
        self.entries.iter().filter_map(|e| e.error).reduce(T::min)
    }

    /// CSV `epsilon,error,failed`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,error,failed\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{}\n",
                format_float(e.epsilon.as_f64()),
                e.error
                    .map(|v| format_float(v.as_f64()))
                    .unwrap_or_default(),
                e.failure.is_some()
            ));
        }
        s
    }
}

/// Recovers `Λ^lin F₁` from `Λ(εF₁)` over `epsilons`.
pub fn recover_linear_map<T: Real>(
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    epsilons: &[T],
    grid: &GridSpec<T>,
) -> Result<RecoveryReport<T>> {
    recover_linear_map_with_coupling(sys, f1, epsilons, grid, T::one())
}

/// [`recover_linear_map`] with the nonlinearity multiplied by `coupling`.
#[doc(hidden)]
pub fn recover_linear_map_with_coupling<T: Real>(
    sys: &SpeedSystem<T>,
    f1: &SourceData<T>,
    epsilons: &[T],
    grid: &GridSpec<T>,
    coupling: T,
) -> Result<RecoveryReport<T>> {
    if epsilons.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "recovery needs at least 2 epsilons, got {}",
            epsilons.len()
        )));
    }
    let reference = lambda_lin_map(sys, f1, grid)?;
    let eps_min = epsilons.iter().copied().fold(T::infinity(), T::min);
    let doubled = eps_min + eps_min;
    let mut runs: Vec<T> = epsilons.to_vec();
    let extra = !epsilons.contains(&doubled);
    if extra {
        runs.push(doubled);
    }

    let scaled: Vec<Result<BoundaryTrace<T>>> = runs
        .par_iter()
        .map(|&e| {
            let tr = lambda_with_coupling(sys, &f1.with_epsilon(e)?, grid, coupling)?;
            Ok(tr.scaled(T::one() / e))
        })
        .collect();

    let mut entries = Vec::with_capacity(epsilons.len());
    for (&e, l) in epsilons.iter().zip(&scaled) {
        entries.push(match l {
            Ok(l) => RecoveryEntry {
                epsilon: e,
                error: Some(l.minus(&reference)?.l2l2_norm()),
                failure: None,
            },
            Err(err) => RecoveryEntry {
                epsilon: e,
                error: None,
                failure: Some(err.to_string()),
            },
        });
    }

    let find = |target: T| {
        runs.iter()
            .position(|&e| e == target)
            .and_then(|k| scaled[k].as_ref().ok())
    };
    let estimate = match (find(eps_min), find(doubled)) {
        (Some(l1), Some(l2)) => Some(BoundaryTrace::combine(T::lit(2.0), l1, -T::one(), l2)?),
        _ => None,
    };
    let estimate_error = match &estimate {
        Some(e) => Some(e.minus(&reference)?.l2l2_norm()),
        None => None,
    };

    let (xs, ys): (Vec<T>, Vec<T>) = entries
        .iter()
        .filter_map(|e| e.error.map(|v| (e.epsilon, v)))
        .unzip();
    Ok(RecoveryReport {
        rate: loglog_slope(&xs, &ys),
        entries,
        estimate,
        reference,
        estimate_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::field::{ScalarField, SpeedField, VectorField};
    use crate::linear::Forcing;

    fn grid(t: f64) -> GridSpec<f64> {
        GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), 1.0 / 32.0, t).unwrap()
    }

    fn pulse(g: &GridSpec<f64>, cx: f64, cy: f64, width: f64) -> SourceData<f64> {
        let mut b0 = ScalarField::from_fn(g, |x| {
            let r2 = (x[0] - cx).powi(2) + (x[1] - cy).powi(2);
            (-r2 / (width * width)).exp()
        });
        b0.zero_boundary(g);
        let b0 = VectorField::new([b0.clone(), b0.scaled(0.5), b0.scaled(0.25)]);
        SourceData::new(b0, VectorField::zeros(g), Forcing::Zero)
            .normalized(g, 1.0)
            .unwrap()
    }

    fn unit(g: &GridSpec<f64>) -> SpeedSystem<f64> {
        SpeedSystem::uniform(SpeedField::constant(g, 1.0), g).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_traces() {
        let g = grid(0.25);
        let z = SourceData::zero(&g);
        assert_eq!(lambda_lin_map(&unit(&g), &z, &g).unwrap().l2l2_norm(), 0.0);
        let z = z.with_epsilon(0.1).unwrap();
        assert_eq!(lambda_map(&unit(&g), &z, &g).unwrap().l2l2_norm(), 0.0);
    }

    #[test]
    fn lambda_is_deterministic() {
        let g = grid(0.5);
        let d = pulse(&g, 0.5, 0.5, 0.1).with_epsilon(0.05).unwrap();
        let a = lambda_map(&unit(&g), &d, &g).unwrap();
        let b = lambda_map(&unit(&g), &d, &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_hook_recovers_exactly() {
        let g = grid(0.5);
        let f1 = pulse(&g, 0.5, 0.5, 0.1);
        let r =
            recover_linear_map_with_coupling(&unit(&g), &f1, &[0.04, 0.02, 0.01], &g, 0.0).unwrap();
        let scale = r.reference.l2l2_norm();
        for e in &r.entries {
            assert!(e.error.unwrap() <= 1e-12 * scale);
        }
        assert!(r.estimate_error.unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn recovery_error_is_first_order_and_extrapolation_helps() {
        let g = grid(0.5);
        let f1 = pulse(&g, 0.5, 0.5, 0.1);
        let r = recover_linear_map(&unit(&g), &f1, &[0.04, 0.02, 0.01], &g).unwrap();
        assert!(r.all_succeeded());
        let rate = r.rate.unwrap();
        assert!((0.7..=1.3).contains(&rate), "rate {rate}");
        let errs: Vec<f64> = r.entries.iter().map(|e| e.error.unwrap()).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= 1.1 * w[0]);
            let q = w[0] / w[1];
            assert!((1.7..=2.3).contains(&q), "ratio {q}");
        }
        assert!(r.estimate_error.unwrap() <= r.best_single_error().unwrap());
        assert_eq!(r.to_csv().lines().count(), 4);
    }

    #[test]
    fn missing_doubled_epsilon_is_computed() {
        let g = grid(0.25);
        let f1 = pulse(&g, 0.5, 0.5, 0.1);
        let r = recover_linear_map(&unit(&g), &f1, &[0.03, 0.01], &g).unwrap();
        assert_eq!(r.entries.len(), 2);
        assert!(r.estimate.is_some());
        assert!(recover_linear_map(&unit(&g), &f1, &[0.01], &g).is_err());
    }

    #[test]
    fn blown_up_entries_are_flagged() {
        let g = grid(1.0);
        let f1 = pulse(&g, 0.5, 0.5, 0.1).scaled(1e6);
        let r = recover_linear_map(&unit(&g), &f1, &[0.9, 0.45, 1e-9], &g).unwrap();
        assert!(r.entries[0].failure.is_some());
        assert!(r.entries[2].failure.is_none());
        assert!(!r.all_succeeded());
    }

    #[test]
    fn distinct_speeds_are_discriminated() {
        let g = grid(0.6);
        let f1 = pulse(&g, 0.3, 0.5, 0.06);
        let bump = SpeedField::from_fn(&g, g.circumradius() + g.h(), |x| {
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
            1.0 + 0.1 * (-r2 / 0.01).exp()
        });
        let one = SpeedField::constant(&g, 1.0);
        let s1 = unit(&g);
        let s2 = SpeedSystem::new([one.clone(), bump, one], &g).unwrap();
        let eps = [0.04, 0.02, 0.01];
        let r1 = recover_linear_map(&s1, &f1, &eps, &g).unwrap();
        let r2 = recover_linear_map(&s2, &f1, &eps, &g).unwrap();
        let (e1, e2) = (r1.estimate.unwrap(), r2.estimate.unwrap());
        let gap = e1.minus(&e2).unwrap().l2l2_norm();
        let err = r1.estimate_error.unwrap().max(r2.estimate_error.unwrap());
        assert!(gap >= 10.0 * err, "gap {gap}, recovery error {err}");

        let same = recover_linear_map(&s1, &f1, &eps, &g).unwrap();
        assert!(same.estimate.unwrap().minus(&e1).unwrap().l2l2_norm() <= 1e-8);
    }

    #[test]
    fn speed_changes_outside_the_domain_of_dependence_are_invisible() {
        // source near the left face of Ω, speed change near the right edge
        // of Ω′; leapfrog moves information one node per step
        let g = GridSpec::cube(2, (0.0, 2.0), (0.25, 1.0), 1.0 / 32.0, 0.3).unwrap();
        let mut b0 = ScalarField::from_fn(&g, |x: &[f64]| {
            let r2 = (x[0] - 0.4).powi(2) + (x[1] - 0.6).powi(2);
            (1.0 - r2 / 0.01).max(0.0).powi(4)
        });
        b0.zero_boundary(&g);
        let f1 = SourceData::new(
            VectorField::splat(b0),
            VectorField::zeros(&g),
            Forcing::Zero,
        )
        .normalized(&g, 1.0)
        .unwrap()
        .with_epsilon(0.05)
        .unwrap();
        let far = SpeedField::from_fn(&g, g.circumradius() + g.h(), |x| {
            if x[0] > 1.7 {
                0.8
            } else {
                1.0
            }
        });
        let s1 = unit(&g);
        let s2 = SpeedSystem::new([far.clone(), far.clone(), far], &g).unwrap();
        // far region starts 22 nodes right of Ω; the run takes fewer steps
        assert!(g.n_steps() < 22);
        let a = lambda_map(&s1, &f1, &g).unwrap();
        let b = lambda_map(&s2, &f1, &g).unwrap();
        assert!(a.l2l2_norm() > 0.0);
        assert!(a.minus(&b).unwrap().l2l2_norm() <= 1e-8);
    }
}
