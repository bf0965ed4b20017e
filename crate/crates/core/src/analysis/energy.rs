//! Discrete energies of a scalar trajectory and Gronwall-type bounds.
//!
//! The gradient uses forward edge differences, for which the semi-discrete
//! energy of the five-point scheme is exactly conserved; only the time
//! discretization makes the ledger drift.

use crate::domain::field::{ScalarField, SpeedField};
use crate::domain::grid::GridSpec;
use crate::domain::io::format_float;
use crate::domain::norms::{
    l2_norm_raw, quadrature_weights, sobolev_norm_sq_weighted, Region, SobolevOrder,
};
use crate::error::{Error, Result};
use crate::linear::ScalarForcing;
use crate::scalar::Real;
use crate::trajectory::{time_derivative, ScalarTrajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLedger<T> {
    pub times: Vec<T>,
    /// `½∫|∇u|² + |∂ₜu|²`.
    pub e_plain: Vec<T>,
    /// `½∫c²|∇u|² + |∂ₜu|²`.
    pub e_weighted: Vec<T>,
    /// `½∫|∇u|²`, the gradient part of `e_plain`.
    pub grad_plain: Vec<T>,
    /// `½∫c²|∇u|²`, the gradient part of `e_weighted`.
    pub grad_weighted: Vec<T>,
    pub bound_curve: Option<Vec<T>>,
}

impl<T: Real> EnergyLedger<T> {
    /// `max_n |E(tₙ) − E(0)|` of the plain energy.
    pub fn drift(&self) -> T {
        let e0 = self.e_plain.first().copied().unwrap_or_else(T::zero);
        self.e_plain
            .iter()
            .map(|&e| (e - e0).abs())
            .fold(T::zero(), T::max)
    }

    pub fn with_bound(mut self, norms: &DataNorms<T>, c: T, a_tilde: T) -> Self {
        self.bound_curve = Some(bound_curve(norms, c, a_tilde, &self.times));
        self
    }

    /// CSV `t,E_plain,E_weighted,bound`; the bound column is empty without
    /// constants.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,E_plain,E_weighted,bound\n");
        for n in 0..self.times.len() {
            let b = self
                .bound_curve
                .as_ref()
                .map(|b| format_float(b[n].as_f64()))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{}\n",
                format_float(self.times[n].as_f64()),
                format_float(self.e_plain[n].as_f64()),
                format_float(self.e_weighted[n].as_f64()),
                b
            ));
        }
        s
    }
}

/// Energy series of `u` with conformal factor `c²` over Ω′.
pub fn energy_ledger<T: Real>(
    u: &ScalarTrajectory<T>,
    c: &SpeedField<T>,
    grid: &GridSpec<T>,
) -> Result<EnergyLedger<T>> {
    c.values().check_shape(grid)?;
    for s in u.snapshots() {
        s.check_shape(grid)?;
    }
    let c2 = c.values().values();
    let vol = grid.cell_volume();
    let half = T::lit(0.5);
    let inv_h = T::one() / grid.h();
    let shape = grid.shape();
    let strides = grid.strides();
    let levels: Vec<&[T]> = u.snapshots().iter().map(|s| s.values()).collect();

    let mut ledger = EnergyLedger {
        times: Vec::with_capacity(levels.len()),
        e_plain: Vec::with_capacity(levels.len()),
        e_weighted: Vec::with_capacity(levels.len()),
        grad_plain: Vec::with_capacity(levels.len()),
        grad_weighted: Vec::with_capacity(levels.len()),
        bound_curve: None,
    };
    for (step, v) in levels.iter().enumerate() {
        let mut plain = T::zero();
        let mut weighted = T::zero();
        for idx in 0..v.len() {
            let m = grid.multi_index(idx);
            for a in 0..grid.dim() {
                if m[a] + 1 >= shape[a] {
                    continue;
                }
                let j = idx + strides[a];
                let g = (v[j] - v[idx]) * inv_h;
                let g2 = g * g;
                plain = plain + g2;
                weighted = weighted + half * (c2[idx] + c2[j]) * g2;
            }
        }
        let vel = time_derivative(&levels, step, u.dt());
        let kinetic = vel.iter().fold(T::zero(), |acc, &x| acc + x * x);
        let (gp, gw, k) = (
            half * vol * plain,
            half * vol * weighted,
            half * vol * kinetic,
        );
        ledger.times.push(grid.time(step));
        ledger.grad_plain.push(gp);
        ledger.grad_weighted.push(gw);
        ledger.e_plain.push(gp + k);
        ledger.e_weighted.push(gw + k);
    }
    Ok(ledger)
}

/// Data norms entering the Gronwall bound.
#[derive(Clone, Debug, PartialEq)]
pub struct DataNorms<T> {
    pub u0_h1: T,
    pub u1_l2: T,
    /// `‖f‖_{L²(Ω′×[0,tₙ])}` at every level, by the trapezoid rule in time.
    pub forcing_cumulative: Vec<T>,
}

impl<T: Real> DataNorms<T> {
    pub fn new(
        grid: &GridSpec<T>,
        u0: &ScalarField<T>,
        u1: &ScalarField<T>,
        forcing: &ScalarForcing<T>,
    ) -> Result<Self> {
        u0.check_shape(grid)?;
        u1.check_shape(grid)?;
        let w = quadrature_weights(grid, Region::Outer);
        let mut f = vec![T::zero(); grid.node_count()];
        let mut prev = T::zero();
        let mut acc = T::zero();
        let mut forcing_cumulative = Vec::with_capacity(grid.n_steps() + 1);
        for step in 0..=grid.n_steps() {
            forcing.fill(grid, step, &mut f);
            let n = l2_norm_raw(&f, &w);
            let sq = n * n;
            if step > 0 {
                acc = acc + grid.dt() * (prev + sq) / T::lit(2.0);
            }
            prev = sq;
            forcing_cumulative.push(acc.sqrt());
        }
        Ok(Self {
            u0_h1: sobolev_norm_sq_weighted(grid, u0.values(), SobolevOrder::H1, &w).sqrt(),
            u1_l2: l2_norm_raw(u1.values(), &w),
            forcing_cumulative,
        })
    }
}

/// `Ã = max(‖c²‖_∞, ‖∇c²‖_∞)` on the grid.
pub fn estimate_a_tilde<T: Real>(c: &SpeedField<T>, grid: &GridSpec<T>) -> Result<T> {
    c.c1_norm(grid)
}

fn bound_curve<T: Real>(norms: &DataNorms<T>, c: T, a_tilde: T, times: &[T]) -> Vec<T> {
    times
        .iter()
        .enumerate()
        .map(|(n, &t)| {
            let f = norms
                .forcing_cumulative
                .get(n)
                .or(norms.forcing_cumulative.last())
                .copied()
                .unwrap_or_else(T::zero);
            c * (norms.u0_h1 + norms.u1_l2 + f) * (a_tilde * t).exp()
        })
        .collect()
}

fn ratios<T: Real>(ledger: &EnergyLedger<T>, norms: &DataNorms<T>, c: T, a_tilde: T) -> Vec<T> {
    bound_curve(norms, c, a_tilde, &ledger.times)
        .into_iter()
        .zip(&ledger.e_plain)
        .map(|(b, &e)| {
            let lhs = (T::lit(2.0) * e).sqrt();
            if lhs == T::zero() {
                T::zero()
            } else {
                lhs / b
            }
        })
        .collect()
}

/// Smallest `C` with `√(2E(t)) ≤ C·(‖u₀‖_{H¹} + ‖u₁‖_{L²} + ‖f‖_{L²L²})·e^{Ãt}`
/// along a calibration run.
pub fn calibrate_gronwall<T: Real>(
    ledger: &EnergyLedger<T>,
    norms: &DataNorms<T>,
    a_tilde: T,
) -> Result<T> {
    let c = ratios(ledger, norms, T::one(), a_tilde)
        .into_iter()
        .fold(T::zero(), T::max);
    if !(c.is_finite() && c > T::zero()) {
        return Err(Error::InsufficientData(
            "calibration run has no energy or no data".into(),
        ));
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport<T> {
    pub passed: bool,
    pub max_ratio: T,
    pub ratios: Vec<T>,
}

/// Checks `√(2E(t)) ≤ bound(t)` at every level.
pub fn gronwall_check<T: Real>(
    ledger: &EnergyLedger<T>,
    norms: &DataNorms<T>,
    c: T,
    a_tilde: T,
) -> GronwallReport<T> {
    let ratios = ratios(ledger, norms, c, a_tilde);
    let max_ratio = ratios.iter().copied().fold(T::zero(), T::max);
    GronwallReport {
        passed: max_ratio <= T::one(),
        max_ratio,
        ratios,
    }
}
