//! Builtin speed profiles and source recipes.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;

use wavelab_core::domain::io::read_binary;
use wavelab_core::domain::{make_grid_with_speed, Interval};
use wavelab_core::linear::Forcing;
use wavelab_core::{
    Error, GridSpec64, ScalarField64, SourceData64, SpeedField64, SpeedSystem64, VectorField64,
};

use crate::config::{ExperimentConfig, GridConfig, SourceRecipe, SpeedProfile};
use crate::CliError;

/// Relative weights of the three components in every builtin source.
pub const COMPONENT_WEIGHTS: [f64; 3] = [1.0, 0.5, 0.25];

/// Compact radial bump `(1 − (r/w)²)⁴`, C³ at `r = w`.
pub fn bump(r: f64, width: f64) -> f64 {
    let s = r / width;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(4)
    }
}

/// Wendland profile `(1 − r/w)⁴(1 + 4r/w)`, monotone and C² at `r = w`.
pub fn wendland(r: f64, width: f64) -> f64 {
    let s = r / width;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s).powi(4) * (1.0 + 4.0 * s)
    }
}

pub type RadialFn = Box<dyn Fn(f64) -> f64>;

/// Radial `c²(r)` of a builtin profile and its support radius, `None` for
/// file profiles.
pub fn radial_c2(profile: &SpeedProfile) -> Option<(RadialFn, f64)> {
    match *profile {
        SpeedProfile::Constant { value } => Some((Box::new(move |_| value), f64::INFINITY)),
        SpeedProfile::HerglotzBump { amplitude, width } => {
            Some((Box::new(move |r| 1.0 + amplitude * bump(r, width)), width))
        }
        SpeedProfile::RadialDecay { amplitude, width } => Some((
            Box::new(move |r| 1.0 + amplitude * wendland(r, width)),
            width,
        )),
        SpeedProfile::File { .. } => None,
    }
}

pub fn grid_with_factor(g: &GridConfig, c_max: f64, factor: f64) -> Result<GridSpec64, CliError> {
    // the Courant number of the requested step equals the factor
    if factor > 1.0 {
        return Err(CliError::Core(Error::Stability { courant: factor }));
    }
    let outer = vec![Interval::new(g.outer.0, g.outer.1); g.dim];
    let inner = vec![Interval::new(g.inner.0, g.inner.1); g.dim];
    make_grid_with_speed(g.dim, &outer, &inner, g.h, g.t_final, factor, c_max)
        .map_err(CliError::setup)
}

fn read_speed_file(cfg: &ExperimentConfig) -> Result<Option<ScalarField64>, CliError> {
    let SpeedProfile::File { path } = &cfg.speed else {
        return Ok(None);
    };
    let file = File::open(path)
        .map_err(|e| CliError::config(format!("speed.path {}: {e}", path.display())))?;
    let (header, field) = read_binary::<f64, _>(BufReader::new(file))
        .map_err(|e| CliError::config(format!("speed.path {}: {e}", path.display())))?;
    if header.dim != cfg.grid.dim || header.h != cfg.grid.h {
        return Err(CliError::config(format!(
            "speed.path {}: file has dim {} and h {}, grid has dim {} and h {}",
            path.display(),
            header.dim,
            header.h,
            cfg.grid.dim,
            cfg.grid.h
        )));
    }
    Ok(Some(field))
}

fn upper_bound(profile: &SpeedProfile, file: Option<&ScalarField64>) -> f64 {
    match *profile {
        SpeedProfile::Constant { value } => value,
        SpeedProfile::HerglotzBump { amplitude, .. }
        | SpeedProfile::RadialDecay { amplitude, .. } => 1.0f64.max(1.0 + amplitude),
        SpeedProfile::File { .. } => file
            .map(|f| f.values().iter().copied().fold(0.0, f64::max))
            .unwrap_or(1.0),
    }
}

/// Everything an experiment needs, built before any file is written.
#[derive(Clone, Debug)]
pub struct Setup {
    pub grid: GridSpec64,
    pub speed: SpeedField64,
    pub sys: SpeedSystem64,
    /// Base data `F₁` with ε = 1.
    pub f1: SourceData64,
    /// Largest `c²` the profile can take; the time step is sized for it.
    pub m1: f64,
}

pub fn build_speed(
    profile: &SpeedProfile,
    grid: &GridSpec64,
    file: Option<ScalarField64>,
) -> Result<SpeedField64, CliError> {
    let covering = grid.circumradius() + grid.h();
    match (radial_c2(profile), file) {
        (_, Some(values)) => {
            values.check_shape(grid).map_err(CliError::setup)?;
            let (lo, hi) = values
                .values()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            Ok(SpeedField64::new(values, lo, hi, covering, 3))
        }
        (Some((c2, width)), None) => {
            if let SpeedProfile::Constant { value } = profile {
                return Ok(SpeedField64::constant(grid, *value));
            }
            let (lo, hi) = (c2(0.0).min(1.0), c2(0.0).max(1.0));
            Ok(SpeedField64::radial(grid, width, lo, hi, c2))
        }
        (None, None) => Err(CliError::config("speed.profile = file needs speed.path")),
    }
}

type ShapeFn = Box<dyn Fn(&[f64]) -> f64>;

/// Base data of a recipe on `grid`; `normalize` scales it to `‖F₁‖_* = 1`.
pub fn build_source(
    recipe: &SourceRecipe,
    normalize: bool,
    grid: &GridSpec64,
) -> Result<SourceData64, CliError> {
    let d = grid.dim();
    let outer: Vec<(f64, f64)> = grid.outer().iter().map(|iv| (iv.lo, iv.hi)).collect();
    let shape: ShapeFn = match recipe {
        SourceRecipe::Zero => return Ok(SourceData64::zero(grid)),
        &SourceRecipe::StandingMode { amplitude, mode } => {
            let k = f64::from(mode) * PI;
            let outer = outer.clone();
            Box::new(move |x| {
                amplitude
                    * (0..d)
                        .map(|a| (k * (x[a] - outer[a].0) / (outer[a].1 - outer[a].0)).sin())
                        .product::<f64>()
            })
        }
        SourceRecipe::GaussianPulse {
            amplitude,
            width,
            center,
        } => {
            let (amplitude, width) = (*amplitude, *width);
            let center = center
                .clone()
                .unwrap_or_else(|| grid.center()[..d].to_vec());
            Box::new(move |x| {
                let r2: f64 = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum();
                amplitude * (-r2 / (width * width)).exp()
            })
        }
    };
    let mut b0 = ScalarField64::from_fn(grid, |x| shape(x));
    b0.zero_boundary(grid);
    let [w0, w1, w2] = COMPONENT_WEIGHTS;
    let b0 = VectorField64::new([b0.scaled(w0), b0.scaled(w1), b0.scaled(w2)]);
    let data = SourceData64::new(b0, VectorField64::zeros(grid), Forcing::Zero);
    if normalize {
        data.normalized(grid, 1.0).map_err(CliError::setup)
    } else {
        Ok(data)
    }
}

pub fn setup(cfg: &ExperimentConfig) -> Result<Setup, CliError> {
    let file = read_speed_file(cfg)?;
    let m1 = upper_bound(&cfg.speed, file.as_ref());
    if !(m1 > 0.0 && m1.is_finite()) {
        return Err(CliError::config(format!(
            "speed profile has invalid maximum c² = {m1}"
        )));
    }
    let m1 = m1 + crate::experiments::speed_headroom(cfg.experiment);
    let grid = grid_with_factor(&cfg.grid, m1.sqrt(), cfg.grid.stability_factor)?;
    let courant = grid.courant(m1.sqrt());
    if courant > 1.0 + 1e-12 {
        return Err(CliError::Core(Error::Stability { courant }));
    }
    let speed = build_speed(&cfg.speed, &grid, file)?;
    let sys = SpeedSystem64::uniform(speed.clone(), &grid).map_err(CliError::setup)?;
    let f1 = build_source(&cfg.source, cfg.normalize, &grid)?;
    Ok(Setup {
        grid,
        speed,
        sys,
        f1,
        m1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use wavelab_core::domain::validate_speed;

    fn cfg(extra: &str) -> ExperimentConfig {
        parse_config(&format!(
            "run.experiment = validate\ngrid.dim = 2\ngrid.h = 0.0625\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn builtin_profiles_are_admissible() {
        for p in ["constant", "herglotz-bump", "radial-decay"] {
            let s = setup(&cfg(&format!(
                "speed.profile = {p}\nsource.recipe = zero\n"
            )))
            .unwrap();
            assert!(validate_speed(&s.speed, &s.grid).unwrap().passed, "{p}");
        }
    }

    #[test]
    fn sources_vanish_on_the_outer_boundary_and_are_normalized() {
        for r in ["standing-mode", "gaussian-pulse"] {
            let s = setup(&cfg(&format!(
                "speed.profile = constant\nsource.recipe = {r}\n"
            )))
            .unwrap();
            assert!(s.f1.check(&s.grid).is_ok());
            assert!((s.f1.base_norm(&s.grid).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_stability_factor_is_a_stability_error() {
        let c =
            cfg("grid.stability_factor = 1.5\nspeed.profile = constant\nsource.recipe = zero\n");
        assert_eq!(setup(&c).unwrap_err().exit_code(), 3);
    }
}
