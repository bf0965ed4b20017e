//! Flat `section.key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Validate,
    LinearConvergence,
    Energy,
    Coupled,
    Picard,
    ParametrixSweep,
    RecoverLambda,
    Lifespan,
    Herglotz,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Validate,
        Experiment::LinearConvergence,
        Experiment::Energy,
        Experiment::Coupled,
        Experiment::Picard,
        Experiment::ParametrixSweep,
        Experiment::RecoverLambda,
        Experiment::Lifespan,
        Experiment::Herglotz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::LinearConvergence => "linear-convergence",
            Experiment::Energy => "energy",
            Experiment::Coupled => "coupled",
            Experiment::Picard => "picard",
            Experiment::ParametrixSweep => "parametrix-sweep",
            Experiment::RecoverLambda => "recover-lambda",
            Experiment::Lifespan => "lifespan",
            Experiment::Herglotz => "herglotz",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

/// Builtin `c²` profiles, shared by all three components unless an
/// experiment perturbs one of them.
#[derive(Clone, Debug, PartialEq)]
pub enum SpeedProfile {
    /// `c² ≡ value`.
    Constant { value: f64 },
    /// `c² = 1 + amplitude·(1 − (r/width)²)⁴` for `r < width`, 1 outside.
    HerglotzBump { amplitude: f64, width: f64 },
    /// `c² = 1 + amplitude·(1 − r/width)⁴(1 + 4r/width)` for `r < width`,
    /// 1 outside.
    RadialDecay { amplitude: f64, width: f64 },
    /// `c²` samples in the binary field format.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceRecipe {
    /// `b₀ = amplitude·∏ sin(mode·π(xₐ − loₐ)/Lₐ)` over Ω′, `b₁ = 0`, `f = 0`.
    StandingMode {
        amplitude: f64,
        mode: u32,
    },
    /// `b₀ = amplitude·exp(−|x − center|²/width²)`, cut to zero on ∂Ω′.
    GaussianPulse {
        amplitude: f64,
        width: f64,
        center: Option<Vec<f64>>,
    },
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub outer: (f64, f64),
    pub inner: (f64, f64),
    pub h: f64,
    pub t_final: f64,
    pub stability_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub epsilon: f64,
    pub epsilon_list: Vec<f64>,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub grid: GridConfig,
    pub speed: SpeedProfile,
    pub source: SourceRecipe,
    /// Rescale the source so that `‖F₁‖_* = 1`.
    pub normalize: bool,
    pub c_s: Option<f64>,
    pub c_s_prime: Option<f64>,
    pub output_dir: PathBuf,
}

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_EPSILON_LIST: [f64; 3] = [0.04, 0.02, 0.01];
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_OUTPUT_DIR: &str = "wavelab-out";

const KEYS: &[&str] = &[
    "run.experiment",
    "run.epsilon",
    "run.epsilon_list",
    "run.seed",
    "run.tol",
    "run.max_iter",
    "grid.dim",
    "grid.outer",
    "grid.inner",
    "grid.h",
    "grid.t_final",
    "grid.stability_factor",
    "speed.profile",
    "speed.value",
    "speed.amplitude",
    "speed.width",
    "speed.path",
    "source.recipe",
    "source.amplitude",
    "source.mode",
    "source.width",
    "source.center",
    "source.normalize",
    "lifespan.c_s",
    "lifespan.c_s_prime",
    "output.dir",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        match self.raw(key) {
            Some((line, v)) => parse_value(line, key, &v),
            None => err(None, format!("missing required key {key}")),
        }
    }

    fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|(line, v)| parse_value(line, key, &v))
            .transpose()
    }

    fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.optional(key)?.unwrap_or(default))
    }

    fn list(&mut self, key: &str) -> Result<Option<(usize, Vec<f64>)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => {
                let items = v
                    .split(',')
                    .map(|s| parse_value::<f64>(line, key, s.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Some((line, items)))
            }
        }
    }

    fn pair(&mut self, key: &str, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some((_, v)) if v.len() == 2 => Ok((v[0], v[1])),
            Some((line, v)) => err(
                Some(line),
                format!("{key} expects two numbers 'lo, hi', got {}", v.len()),
            ),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            Some((key, (line, _))) => err(
                Some(line),
                format!("key {key} is not used by this configuration"),
            ),
            None => Ok(()),
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().or_else(|_| {
        err(
            Some(line),
            format!("{key}: cannot parse '{v}' as {}", short_type_name::<T>()),
        )
    })
}

fn short_type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    full.rsplit("::").next().unwrap_or(full)
}

fn check(cond: bool, message: impl Into<String>) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        err(None, message)
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(
                Some(line),
                format!("expected 'section.key = value', got '{content}'"),
            );
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return err(Some(line), format!("unknown key {key}"));
        }
        if value.is_empty() {
            return err(Some(line), format!("{key} has an empty value"));
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return err(Some(line), format!("{key} already set on line {first}"));
        }
    }
    let mut e = Entries { map };

    let experiment = match e.raw("run.experiment") {
        Some((line, v)) => v.parse::<Experiment>().or_else(|m| err(Some(line), m))?,
        None => return err(None, "missing required key run.experiment"),
    };
    let epsilon = e.or("run.epsilon", DEFAULT_EPSILON)?;
    let epsilon_list = match e.list("run.epsilon_list")? {
        None => DEFAULT_EPSILON_LIST.to_vec(),
        Some((line, v)) => {
            if v.windows(2).any(|w| w[1] >= w[0]) {
                return err(Some(line), "run.epsilon_list must be strictly decreasing");
            }
            if v.len() < 2 {
                return err(Some(line), "run.epsilon_list needs at least two values");
            }
            v
        }
    };
    let seed = e.or("run.seed", 0u64)?;
    let tol = e.or("run.tol", DEFAULT_TOL)?;
    let max_iter = e.or("run.max_iter", DEFAULT_MAX_ITER)?;

    let grid = GridConfig {
        dim: e.required("grid.dim")?,
        outer: e.pair("grid.outer", (0.0, 1.0))?,
        inner: e.pair("grid.inner", (0.25, 0.75))?,
        h: e.required("grid.h")?,
        t_final: e.or("grid.t_final", 1.0)?,
        stability_factor: e.or("grid.stability_factor", 0.9)?,
    };

    let speed = match e.required::<String>("speed.profile")?.as_str() {
        "constant" => SpeedProfile::Constant {
            value: e.or("speed.value", 1.0)?,
        },
        "herglotz-bump" => SpeedProfile::HerglotzBump {
            amplitude: e.or("speed.amplitude", 0.1)?,
            width: e.or("speed.width", 0.5)?,
        },
        "radial-decay" => SpeedProfile::RadialDecay {
            amplitude: e.or("speed.amplitude", 0.5)?,
            width: e.or("speed.width", 0.5)?,
        },
        "file" => SpeedProfile::File {
            path: PathBuf::from(e.required::<String>("speed.path")?),
        },
        other => return err(None, format!("unknown speed.profile '{other}'")),
    };

    let source = match e.required::<String>("source.recipe")?.as_str() {
        "standing-mode" => SourceRecipe::StandingMode {
            amplitude: e.or("source.amplitude", 1.0)?,
            mode: e.or("source.mode", 1u32)?,
        },
        "gaussian-pulse" => SourceRecipe::GaussianPulse {
            amplitude: e.or("source.amplitude", 1.0)?,
            width: e.or("source.width", 0.1)?,
            center: e.list("source.center")?.map(|(_, v)| v),
        },
        "zero" => SourceRecipe::Zero,
        other => return err(None, format!("unknown source.recipe '{other}'")),
    };
    let normalize = e.or("source.normalize", true)?;
    let c_s = e.optional("lifespan.c_s")?;
    let c_s_prime = e.optional("lifespan.c_s_prime")?;
    let output_dir = PathBuf::from(e.or("output.dir", DEFAULT_OUTPUT_DIR.to_string())?);
    e.finish()?;

    let cfg = ExperimentConfig {
        experiment,
        epsilon,
        epsilon_list,
        seed,
        tol,
        max_iter,
        grid,
        speed,
        source,
        normalize,
        c_s,
        c_s_prime,
        output_dir,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let g = &cfg.grid;
    check(
        (1..=3).contains(&g.dim),
        format!("grid.dim = {} not in 1..=3", g.dim),
    )?;
    check(g.h > 0.0 && g.h.is_finite(), "grid.h must be positive")?;
    check(
        g.t_final > 0.0 && g.t_final.is_finite(),
        "grid.t_final must be positive",
    )?;
    check(
        g.stability_factor > 0.0,
        "grid.stability_factor must be positive",
    )?;
    check(
        g.outer.0 < g.inner.0 && g.inner.0 < g.inner.1 && g.inner.1 < g.outer.1,
        "grid.inner must lie strictly inside grid.outer",
    )?;
    let in_unit = |e: f64| e > 0.0 && e < 1.0;
    check(in_unit(cfg.epsilon), "run.epsilon must lie in (0, 1)")?;
    check(
        cfg.epsilon_list.iter().all(|&e| in_unit(e)),
        "run.epsilon_list entries must lie in (0, 1)",
    )?;
    check(cfg.tol >= 0.0, "run.tol must be non-negative")?;
    check(cfg.max_iter >= 1, "run.max_iter must be at least 1")?;
    match &cfg.speed {
        SpeedProfile::Constant { value } => check(*value > 0.0, "speed.value must be positive")?,
        SpeedProfile::HerglotzBump { amplitude, width }
        | SpeedProfile::RadialDecay { amplitude, width } => {
            check(*amplitude > -1.0, "speed.amplitude must exceed -1")?;
            check(*width > 0.0, "speed.width must be positive")?;
        }
        SpeedProfile::File { .. } => {}
    }
    match &cfg.source {
        SourceRecipe::StandingMode { mode, .. } => {
            check(*mode >= 1, "source.mode must be at least 1")?
        }
        SourceRecipe::GaussianPulse { width, center, .. } => {
            check(*width > 0.0, "source.width must be positive")?;
            if let Some(c) = center {
                check(
                    c.len() == g.dim,
                    format!(
                        "source.center has {} coordinates, grid.dim is {}",
                        c.len(),
                        g.dim
                    ),
                )?;
            }
        }
        SourceRecipe::Zero => {}
    }
    if let Some(c) = cfg.c_s {
        check(c > 0.0, "lifespan.c_s must be positive")?;
    }
    Ok(())
}

fn list_text(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl ExperimentConfig {
    /// Canonical text with every key spelled out; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("run.experiment = {}", self.experiment.name()),
            format!("run.epsilon = {:?}", self.epsilon),
            format!("run.epsilon_list = {}", list_text(&self.epsilon_list)),
            format!("run.seed = {}", self.seed),
            format!("run.tol = {:?}", self.tol),
            format!("run.max_iter = {}", self.max_iter),
            format!("grid.dim = {}", self.grid.dim),
            format!(
                "grid.outer = {:?}, {:?}",
                self.grid.outer.0, self.grid.outer.1
            ),
            format!(
                "grid.inner = {:?}, {:?}",
                self.grid.inner.0, self.grid.inner.1
            ),
            format!("grid.h = {:?}", self.grid.h),
            format!("grid.t_final = {:?}", self.grid.t_final),
            format!("grid.stability_factor = {:?}", self.grid.stability_factor),
        ];
        match &self.speed {
            SpeedProfile::Constant { value } => {
                lines.push("speed.profile = constant".into());
                lines.push(format!("speed.value = {value:?}"));
            }
            SpeedProfile::HerglotzBump { amplitude, width } => {
                lines.push("speed.profile = herglotz-bump".into());
                lines.push(format!("speed.amplitude = {amplitude:?}"));
                lines.push(format!("speed.width = {width:?}"));
            }
            SpeedProfile::RadialDecay { amplitude, width } => {
                lines.push("speed.profile = radial-decay".into());
                lines.push(format!("speed.amplitude = {amplitude:?}"));
                lines.push(format!("speed.width = {width:?}"));
            }
            SpeedProfile::File { path } => {
                lines.push("speed.profile = file".into());
                lines.push(format!("speed.path = {}", path.display()));
            }
        }
        match &self.source {
            SourceRecipe::StandingMode { amplitude, mode } => {
                lines.push("source.recipe = standing-mode".into());
                lines.push(format!("source.amplitude = {amplitude:?}"));
                lines.push(format!("source.mode = {mode}"));
            }
            SourceRecipe::GaussianPulse {
                amplitude,
                width,
                center,
            } => {
                lines.push("source.recipe = gaussian-pulse".into());
                lines.push(format!("source.amplitude = {amplitude:?}"));
                lines.push(format!("source.width = {width:?}"));
                if let Some(c) = center {
                    lines.push(format!("source.center = {}", list_text(c)));
                }
            }
            SourceRecipe::Zero => lines.push("source.recipe = zero".into()),
        }
        lines.push(format!("source.normalize = {}", self.normalize));
        if let Some(c) = self.c_s {
            lines.push(format!("lifespan.c_s = {c:?}"));
        }
        if let Some(c) = self.c_s_prime {
            lines.push(format!("lifespan.c_s_prime = {c:?}"));
        }
        lines.push(format!("output.dir = {}", self.output_dir.display()));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "\
run.experiment = coupled
grid.dim = 2
grid.h = 0.0625
speed.profile = constant
source.recipe = standing-mode
";

    #[test]
    fn minimal_text_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.experiment, Experiment::Coupled);
        assert_eq!(c.epsilon, DEFAULT_EPSILON);
        assert_eq!(c.epsilon_list, DEFAULT_EPSILON_LIST.to_vec());
        assert_eq!(c.grid.outer, (0.0, 1.0));
        assert_eq!(c.grid.inner, (0.25, 0.75));
        assert_eq!(c.grid.t_final, 1.0);
        assert_eq!(c.grid.stability_factor, 0.9);
        assert_eq!(c.speed, SpeedProfile::Constant { value: 1.0 });
        assert_eq!(
            c.source,
            SourceRecipe::StandingMode {
                amplitude: 1.0,
                mode: 1
            }
        );
        assert!(c.normalize);
        assert_eq!(c.output_dir, PathBuf::from(DEFAULT_OUTPUT_DIR));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# header\n\n{MINIMAL}run.seed = 9 # trailing\n");
        assert_eq!(parse_config(&text).unwrap().seed, 9);
    }

    #[test]
    fn increasing_epsilon_list_is_rejected() {
        let e = parse_config(&format!("{MINIMAL}run.epsilon_list = 0.01, 0.02\n")).unwrap_err();
        assert_eq!(e.line, Some(6));
        assert!(e.message.contains("strictly decreasing"), "{e}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("run.experiment = coupled\ngrid.size = 3\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("unknown key"));

        let e = parse_config(&format!("{MINIMAL}grid.t_final = soon\n")).unwrap_err();
        assert_eq!(e.line, Some(6));

        let e = parse_config(&MINIMAL.replace("grid.h = 0.0625\n", "")).unwrap_err();
        assert!(e.message.contains("grid.h"), "{e}");

        let e = parse_config(&MINIMAL.replace("coupled", "nonsense")).unwrap_err();
        assert_eq!(e.line, Some(1));

        let e = parse_config(&format!("{MINIMAL}speed.width = 0.3\n")).unwrap_err();
        assert_eq!(e.line, Some(6));

        let e = parse_config(&format!("{MINIMAL}grid.h = 0.1\n")).unwrap_err();
        assert!(e.message.contains("already set"));
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        let speed = prop_oneof![
            (0.1f64..4.0).prop_map(|value| SpeedProfile::Constant { value }),
            (-0.5f64..1.0, 0.1f64..1.0)
                .prop_map(|(amplitude, width)| SpeedProfile::HerglotzBump { amplitude, width }),
            (-0.5f64..1.0, 0.1f64..1.0)
                .prop_map(|(amplitude, width)| SpeedProfile::RadialDecay { amplitude, width }),
            "[a-z]{1,8}\\.bin".prop_map(|p| SpeedProfile::File { path: p.into() }),
        ];
        let source = prop_oneof![
            (0.01f64..10.0, 1u32..5)
                .prop_map(|(amplitude, mode)| SourceRecipe::StandingMode { amplitude, mode }),
            (0.01f64..10.0, 0.01f64..1.0, any::<bool>()).prop_map(|(amplitude, width, c)| {
                SourceRecipe::GaussianPulse {
                    amplitude,
                    width,
                    center: c.then(|| vec![0.5, 0.4]),
                }
            }),
            Just(SourceRecipe::Zero),
        ];
        let eps_list = prop::collection::vec(1e-4f64..0.99, 2..5).prop_filter_map(
            "strictly decreasing",
            |mut v| {
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                v.dedup();
                (v.len() >= 2).then_some(v)
            },
        );
        (
            (
                0usize..9,
                1e-4f64..0.99,
                eps_list,
                any::<u64>(),
                0.0f64..1e-3,
                1usize..200,
            ),
            (1e-3f64..0.5, 0.01f64..5.0, 0.1f64..1.0),
            speed,
            source,
            (
                any::<bool>(),
                prop::option::of(0.1f64..5.0),
                prop::option::of(-2.0f64..2.0),
            ),
        )
            .prop_map(
                |(
                    (k, epsilon, epsilon_list, seed, tol, max_iter),
                    (h, t, f),
                    speed,
                    source,
                    (normalize, c_s, c_s_prime),
                )| {
                    ExperimentConfig {
                        experiment: Experiment::ALL[k],
                        epsilon,
                        epsilon_list,
                        seed,
                        tol,
                        max_iter,
                        grid: GridConfig {
                            dim: 2,
                            outer: (-0.5, 1.5),
                            inner: (0.0, 1.0),
                            h,
                            t_final: t,
                            stability_factor: f,
                        },
                        speed,
                        source,
                        normalize,
                        c_s,
                        c_s_prime,
                        output_dir: "runs/out".into(),
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn text_round_trips(cfg in arb_config()) {
            let again = parse_config(&cfg.to_text()).unwrap();
            prop_assert_eq!(again, cfg);
        }
    }
}
