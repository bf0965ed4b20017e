//! The named experiments. Each one computes everything in memory and
//! returns its criteria and CSV artifacts.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use wavelab_core::analysis::{
    calibrate_gronwall, energy_ledger, estimate_a_tilde, gronwall_check, recover_linear_map, trace,
    trace_ratio, DataNorms, RecoveryReport,
};
use wavelab_core::domain::io::{format_float, write_csv};
use wavelab_core::domain::{
    herglotz_check, sample_profile, sobolev_norm_vector, validate_speed, SobolevOrder,
};
use wavelab_core::linear::{
    convergence_order, solve_scalar_linear, solve_system_linear, ConvergenceFit, ReferenceProblem,
    ScalarForcing,
};
use wavelab_core::nonlinear::{
    diameter_condition, duhamel_picard, lifespan_estimate, lifespan_scan, lifespan_threshold,
    solve_coupled, LifespanModel, NonlinearProblem,
};
use wavelab_core::parametrix::parametrix_sweep;
use wavelab_core::trajectory::{c_l2_norm, s_norm};
use wavelab_core::{
    GridSpec64, ScalarField64, SpeedField64, SpeedSystem64, VectorField64, WaveField64,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::recipes::{bump, grid_with_factor, radial_c2, setup, Setup};
use crate::{Artifact, CliError, Criterion, Report};

/// Amplitude of the interior bump added to `c₂²` in the discrimination run.
pub const DISCRIMINATION_AMPLITUDE: f64 = 0.1;
/// Members of the random trace-bound ensemble.
pub const TRACE_ENSEMBLE: usize = 24;

/// Extra `c²` headroom an experiment needs on top of the configured profile.
pub fn speed_headroom(experiment: Experiment) -> f64 {
    match experiment {
        Experiment::RecoverLambda => DISCRIMINATION_AMPLITUDE,
        _ => 0.0,
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (criteria, artifacts) = match cfg.experiment {
        Experiment::LinearConvergence => linear_convergence(cfg)?,
        Experiment::Herglotz => herglotz(cfg)?,
        other => {
            let s = setup(cfg)?;
            match other {
                Experiment::Validate => validate(cfg, &s)?,
                Experiment::Energy => energy(cfg, &s)?,
                Experiment::Coupled => coupled(cfg, &s)?,
                Experiment::Picard => picard(cfg, &s)?,
                Experiment::ParametrixSweep => parametrix(cfg, &s)?,
                Experiment::RecoverLambda => recover(cfg, &s)?,
                Experiment::Lifespan => lifespan(cfg, &s)?,
                Experiment::LinearConvergence | Experiment::Herglotz => unreachable!(),
            }
        }
    };
    Ok(Report {
        experiment: cfg.experiment,
        criteria,
        artifacts,
    })
}

type Outcome = (Vec<Criterion>, Vec<Artifact>);

fn csv_row(values: &[f64]) -> String {
    let mut s = values
        .iter()
        .map(|&v| format_float(v))
        .collect::<Vec<_>>()
        .join(",");
    s.push('\n');
    s
}

fn validate(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let v = validate_speed(&s.speed, &s.grid)?;
    let mut criteria = vec![
        Criterion::flag("speed-admissible", v.passed),
        Criterion::at_most("courant", s.grid.courant(s.m1.sqrt()), 1.0),
    ];
    if let Some(c) = configured_herglotz(cfg, s.grid.h() / 4.0, s.grid.circumradius())? {
        criteria.push(c);
    }
    let mut buf = Vec::new();
    write_csv(s.speed.values(), &s.grid, &mut buf)?;
    let speed_csv = String::from_utf8(buf).expect("csv output is ASCII");
    Ok((criteria, vec![Artifact::new("speed.csv", speed_csv)]))
}

/// Herglotz check of `c(r) = √c²(r)` for radial builtin profiles.
fn configured_herglotz(
    cfg: &ExperimentConfig,
    dr: f64,
    r_cap: f64,
) -> Result<Option<Criterion>, CliError> {
    let Some((c2, width)) = radial_c2(&cfg.speed) else {
        return Ok(None);
    };
    let r_max = width.min(r_cap);
    let profile = sample_profile(r_max, dr, |r| c2(r).sqrt());
    let report = herglotz_check(&profile, dr)?;
    Ok(Some(Criterion::flag("herglotz", report.passed)))
}

fn linear_convergence(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let t_final = cfg.grid.t_final;
    let problem = match cfg.grid.dim {
        1 => ReferenceProblem::StandingWave { t_final },
        2 => ReferenceProblem::Manufactured2d { t_final },
        d => {
            return Err(CliError::config(format!(
                "linear-convergence supports grid.dim 1 or 2, got {d}"
            )))
        }
    };
    let h = cfg.grid.h;
    let hs = [h, h / 2.0, h / 4.0];
    let study = convergence_order(&problem, &hs).map_err(CliError::setup)?;
    let mut csv = String::from("h,error\n");
    for (h, e) in study.hs.iter().zip(&study.errors) {
        csv.push_str(&csv_row(&[*h, *e]));
    }
    let order = match study.fit {
        ConvergenceFit::Order(p) => p,
        ConvergenceFit::Exact => f64::NAN,
    };
    Ok((
        vec![Criterion::in_range("convergence-order", order, 1.8, 2.2)],
        vec![Artifact::new("convergence.csv", csv)],
    ))
}

fn standing_mode(grid: &GridSpec64, amplitude: f64) -> ScalarField64 {
    let d = grid.dim();
    let outer: Vec<(f64, f64)> = grid.outer().iter().map(|iv| (iv.lo, iv.hi)).collect();
    let mut f = ScalarField64::from_fn(grid, |x| {
        amplitude
            * (0..d)
                .map(|a| (PI * (x[a] - outer[a].0) / (outer[a].1 - outer[a].0)).sin())
                .product::<f64>()
    });
    f.zero_boundary(grid);
    f
}

fn energy(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let zero = ScalarField64::zeros(&s.grid);

    // unforced standing wave with c = 1, then again with dt halved
    let drift_run = |grid: &GridSpec64| -> Result<_, CliError> {
        let speed = SpeedField64::constant(grid, 1.0);
        let u0 = standing_mode(grid, 1.0);
        let zero = ScalarField64::zeros(grid);
        let u = solve_scalar_linear(&speed, &u0, &zero, &ScalarForcing::Zero, grid)?;
        Ok(energy_ledger(&u, &speed, grid)?)
    };
    let full = drift_run(&s.grid)?;
    let half_grid = grid_with_factor(&cfg.grid, s.m1.sqrt(), cfg.grid.stability_factor / 2.0)?;
    let half = drift_run(&half_grid)?;
    let drift_ratio = full.drift() / half.drift();

    // Gronwall constant calibrated on a standing wave, checked on a
    // different, forced run
    let a_tilde = estimate_a_tilde(&s.speed, &s.grid)?;
    let u1 = standing_mode(&s.grid, 1.0);
    let cal = solve_scalar_linear(&s.speed, &zero, &u1, &ScalarForcing::Zero, &s.grid)?;
    let cal_norms = DataNorms::new(&s.grid, &zero, &u1, &ScalarForcing::Zero)?;
    let c = calibrate_gronwall(
        &energy_ledger(&cal, &s.speed, &s.grid)?,
        &cal_norms,
        a_tilde,
    )?;

    let d = s.grid.dim();
    let outer: Vec<(f64, f64)> = s.grid.outer().iter().map(|iv| (iv.lo, iv.hi)).collect();
    let forcing = ScalarForcing::analytic(move |t: f64, x: &[f64]| {
        let r2: f64 = (0..d)
            .map(|a| {
                let len = outer[a].1 - outer[a].0;
                ((x[a] - outer[a].0 - 0.4 * len) / (0.1 * len)).powi(2)
            })
            .sum();
        (-r2).exp() * (3.0 * t).cos()
    });
    let v0 = standing_mode(&s.grid, 0.5);
    let hold = solve_scalar_linear(&s.speed, &v0, &zero, &forcing, &s.grid)?;
    let hold_norms = DataNorms::new(&s.grid, &v0, &zero, &forcing)?;
    let ledger = energy_ledger(&hold, &s.speed, &s.grid)?;
    let ok = gronwall_check(&ledger, &hold_norms, c, a_tilde);
    let bad = gronwall_check(&ledger, &hold_norms, c / 2.0, a_tilde);

    let criteria = vec![
        Criterion::at_least("energy-drift-ratio", drift_ratio, 3.5),
        Criterion::at_most("gronwall-holdout-ratio", ok.max_ratio, 1.0),
        Criterion::above("gronwall-halved-ratio", bad.max_ratio, 1.0),
    ];
    let artifacts = vec![
        Artifact::new("energy.csv", full.to_csv()),
        Artifact::new("energy_half_dt.csv", half.to_csv()),
        Artifact::new(
            "gronwall.csv",
            ledger.with_bound(&hold_norms, c, a_tilde).to_csv(),
        ),
        Artifact::new(
            "gronwall_constants.csv",
            format!("C,A_tilde\n{}", csv_row(&[c, a_tilde])),
        ),
    ];
    Ok((criteria, artifacts))
}

fn random_field(grid: &GridSpec64, rng: &mut ChaCha8Rng) -> WaveField64 {
    let d = grid.dim();
    let modes: Vec<(f64, [f64; 3], f64)> = (0..4)
        .map(|_| {
            let mut k = [0.0; 3];
            for kk in k.iter_mut().take(d) {
                *kk = f64::from(rng.gen_range(1u32..4));
            }
            (rng.gen_range(-1.0..1.0), k, rng.gen_range(0.5..2.0))
        })
        .collect();
    let lo: Vec<f64> = grid.outer().iter().map(|iv| iv.lo).collect();
    WaveField64::new(
        (0..=grid.n_steps())
            .map(|n| {
                let t = grid.time(n);
                VectorField64::from_fn(grid, |x| {
                    let v: f64 = modes
                        .iter()
                        .map(|(a, k, w)| {
                            a * (w * t).cos()
                                * (0..d)
                                    .map(|i| (k[i] * PI * (x[i] - lo[i])).cos())
                                    .product::<f64>()
                        })
                        .sum();
                    [v, 0.5 * v, 0.0]
                })
            })
            .collect(),
        grid.dt(),
    )
}

/// Relative disagreement of the trace constant fitted on the two halves of
/// a seeded random ensemble.
fn trace_constant_spread(grid: &GridSpec64, seed: u64) -> Result<(f64, f64), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..TRACE_ENSEMBLE).map(|_| rng.gen()).collect();
    let ratios = seeds
        .par_iter()
        .map(|&s| {
            let u = random_field(grid, &mut ChaCha8Rng::seed_from_u64(s));
            Ok(trace_ratio(&u, grid)?.unwrap_or(0.0))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    let (a, b) = ratios.split_at(TRACE_ENSEMBLE / 2);
    let fit = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
    let (ca, cb) = (fit(a), fit(b));
    Ok(((ca - cb).abs() / ca.max(cb), ca.max(cb)))
}

fn coupled(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let data = s.f1.with_epsilon(cfg.epsilon)?;
    let problem = NonlinearProblem::new(s.sys.clone(), data.clone(), s.grid.clone())?;
    let u = solve_coupled(&problem)?;
    let lin = solve_system_linear(&s.sys, &data, &s.grid)?;
    let lin_norm = s_norm(&lin, &s.grid);
    let lipschitz = if lin_norm > 0.0 {
        s_norm(&u, &s.grid) / lin_norm
    } else {
        0.0
    };

    let mut norms = String::from("step,t,l2_u,l2_lin\n");
    for n in 0..u.len() {
        norms.push_str(&csv_row(&[
            n as f64,
            s.grid.time(n),
            sobolev_norm_vector(u.snapshot(n), &s.grid, SobolevOrder::L2)?,
            sobolev_norm_vector(lin.snapshot(n), &s.grid, SobolevOrder::L2)?,
        ]));
    }
    let (spread, constant) = trace_constant_spread(&s.grid, cfg.seed)?;
    let criteria = vec![
        Criterion::at_most("lipschitz-ratio", lipschitz, 2.0),
        Criterion::at_most("trace-constant-spread", spread, 0.2),
    ];
    let artifacts = vec![
        Artifact::new("trace.csv", trace(&u, &s.grid)?.to_csv()),
        Artifact::new("norms.csv", norms),
        Artifact::new(
            "trace_constant.csv",
            format!("C,spread\n{}", csv_row(&[constant, spread])),
        ),
    ];
    Ok((criteria, artifacts))
}

fn picard(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let data = s.f1.with_epsilon(cfg.epsilon)?;
    let problem = NonlinearProblem::new(s.sys.clone(), data, s.grid.clone())?;
    let direct = solve_coupled(&problem)?;
    let (iterate, report) = duhamel_picard(&problem, cfg.max_iter, cfg.tol)?;
    let gap = c_l2_norm(&direct.minus(&iterate)?, &s.grid);
    let allowed = (10.0 * cfg.tol).max(1e-6 * c_l2_norm(&direct, &s.grid));
    let worst_ratio = report.ratios().into_iter().flatten().fold(0.0, f64::max);
    let criteria = vec![
        Criterion::flag("picard-converged", report.converged),
        Criterion::at_most("picard-direct-gap", gap, allowed),
        Criterion::at_most("picard-residual-ratio", worst_ratio, 1.0),
        Criterion::flag("within-lifespan", report.within_lifespan),
    ];
    Ok((criteria, vec![Artifact::new("picard.csv", report.to_csv())]))
}

fn parametrix(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let sweep = parametrix_sweep(&s.sys, &s.f1, &cfg.epsilon_list, &s.grid, None)?;
    let slope = sweep.slope.unwrap_or(f64::NAN);
    let first = sweep.first_order_slope.unwrap_or(f64::NAN);
    let (lo, hi) = sweep
        .records
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r.ratio), hi.max(r.ratio))
        });
    let criteria = vec![
        Criterion::in_range("parametrix-slope", slope, 2.6, 3.4),
        Criterion::in_range("first-order-slope", first, 1.7, 2.3),
        Criterion::in_range("slope-gap", slope - first, 0.7, 1.3),
        Criterion::at_most("ratio-spread", hi / lo, 2.5),
    ];
    Ok((
        criteria,
        vec![Artifact::new("parametrix.csv", sweep.to_csv())],
    ))
}

/// The configured system with an interior bump of `c₂²` centered in Ω.
fn perturbed_system(s: &Setup) -> Result<SpeedSystem64, CliError> {
    let g = &s.grid;
    let center = g.center();
    let d = g.dim();
    let width = 0.2
        * g.inner()
            .iter()
            .map(|iv| iv.hi - iv.lo)
            .fold(f64::INFINITY, f64::min);
    let base = s.speed.values().values().to_vec();
    let values: Vec<f64> = (0..g.node_count())
        .map(|idx| {
            let x = g.coords(idx);
            let r = (0..d)
                .map(|a| (x[a] - center[a]).powi(2))
                .sum::<f64>()
                .sqrt();
            base[idx] + DISCRIMINATION_AMPLITUDE * bump(r, width)
        })
        .collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let c2 = SpeedField64::new(ScalarField64::new(values), lo, hi, s.speed.radius(), 3);
    Ok(SpeedSystem64::new(
        [s.speed.clone(), c2, s.speed.clone()],
        g,
    )?)
}

fn recovery_gap(a: &RecoveryReport<f64>, b: &RecoveryReport<f64>) -> Result<f64, CliError> {
    match (&a.estimate, &b.estimate) {
        (Some(x), Some(y)) => Ok(x.minus(y)?.l2l2_norm()),
        _ => Ok(f64::NAN),
    }
}

fn recover(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let eps = &cfg.epsilon_list;
    let base = recover_linear_map(&s.sys, &s.f1, eps, &s.grid)?;
    let twin = recover_linear_map(&s.sys.clone(), &s.f1, eps, &s.grid)?;
    let other = recover_linear_map(&perturbed_system(s)?, &s.f1, eps, &s.grid)?;

    let nan = f64::NAN;
    let best = base.best_single_error().unwrap_or(nan);
    let extrapolated = base.estimate_error.unwrap_or(nan);
    let recovery_error = extrapolated.max(other.estimate_error.unwrap_or(nan));
    let criteria = vec![
        Criterion::flag(
            "recovery-complete",
            base.all_succeeded() && other.all_succeeded(),
        ),
        Criterion::in_range("recovery-rate", base.rate.unwrap_or(nan), 0.7, 1.3),
        Criterion::at_most("extrapolation-gain", extrapolated / best, 1.0),
        Criterion::at_least(
            "speed-discrimination",
            recovery_gap(&base, &other)? / recovery_error,
            10.0,
        ),
        Criterion::at_most("identical-systems-gap", recovery_gap(&base, &twin)?, 1e-8),
    ];
    let mut artifacts = vec![Artifact::new("recovery.csv", base.to_csv())];
    if let Some(est) = &base.estimate {
        artifacts.push(Artifact::new("lambda_lin_estimate.csv", est.to_csv()));
    }
    Ok((criteria, artifacts))
}

fn lifespan(cfg: &ExperimentConfig, s: &Setup) -> Result<Outcome, CliError> {
    let default = LifespanModel::default_for(&s.sys, &s.grid)?;
    let model = LifespanModel::new(
        cfg.c_s.unwrap_or(default.c_s),
        cfg.c_s_prime.unwrap_or(default.c_s_prime),
    )?;
    let est = lifespan_estimate(&model, cfg.epsilon)?;
    let diam = diameter_condition(&s.grid, &s.sys, &model, cfg.epsilon)?;
    let threshold = lifespan_threshold(&s.grid, &s.sys, &model)?;

    let mut csv = String::from("epsilon,t_max,diam,pass\n");
    let mut eps = cfg.epsilon_list.clone();
    eps.push(cfg.epsilon);
    for row in lifespan_scan(&s.grid, &s.sys, &model, &eps)? {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            format_float(row.epsilon),
            format_float(row.t_max),
            format_float(row.diam),
            if row.passed { "pass" } else { "fail" }
        ));
    }
    let criteria = vec![
        Criterion::above("t-max", est.t_max, 0.0),
        Criterion {
            name: "diameter-condition".into(),
            value: diam.diam,
            threshold: format!("<{}", format_float(diam.t_max)),
            passed: diam.passed,
        },
        Criterion::above("threshold-epsilon", threshold.unwrap_or(0.0), 0.0),
    ];
    let constants = format!(
        "C_s,C_s_prime,epsilon_1\n{}",
        csv_row(&[model.c_s, model.c_s_prime, threshold.unwrap_or(0.0)])
    );
    Ok((
        criteria,
        vec![
            Artifact::new("lifespan.csv", csv),
            Artifact::new("lifespan_constants.csv", constants),
        ],
    ))
}

fn herglotz(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let dr = cfg.grid.h / 4.0;
    let r_max = 1.0;
    let check = |c: &dyn Fn(f64) -> f64| herglotz_check(&sample_profile(r_max, dr, c), dr);
    let one = check(&|_| 1.0)?;
    let decay = check(&|r| 1.0 / (1.0 + r * r))?;
    let exp = check(&|r| (2.0 * r).exp())?;
    let exp_radius = exp.first_failure.unwrap_or(f64::NAN);

    let mut criteria = vec![
        Criterion::flag("herglotz-constant", one.passed),
        Criterion::flag("herglotz-inverse-square", decay.passed),
        Criterion {
            name: "herglotz-exponential-failure".into(),
            value: exp_radius,
            threshold: format!("0.5+-{}", format_float(2.0 * dr)),
            passed: !exp.passed && (exp_radius - 0.5).abs() <= 2.0 * dr,
        },
    ];
    let half_extent = (cfg.grid.outer.1 - cfg.grid.outer.0) / 2.0;
    if let Some(c) = configured_herglotz(cfg, dr, half_extent * (cfg.grid.dim as f64).sqrt())? {
        criteria.push(c);
    }
    let mut csv = String::from("profile,passed,first_failure,min_derivative\n");
    for (name, r) in [
        ("constant", &one),
        ("inverse-square", &decay),
        ("exponential", &exp),
    ] {
        csv.push_str(&format!(
            "{name},{},{},{}\n",
            r.passed,
            r.first_failure.map(format_float).unwrap_or_default(),
            format_float(r.min_derivative)
        ));
    }
    Ok((criteria, vec![Artifact::new("herglotz.csv", csv)]))
}
