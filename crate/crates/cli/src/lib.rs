//! Experiment runner for the wavelab laboratory.
//!
//! A run parses a configuration, builds the grid, speeds and source, runs
//! one named experiment in memory and only then writes its CSV artifacts and
//! `summary.txt`. Failures before that point leave the output directory
//! untouched.

pub mod config;
pub mod experiments;
pub mod recipes;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use wavelab_core::domain::io::format_float;

pub use config::{parse_config, ConfigError, Experiment, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STABILITY: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;
pub const EXIT_CRITERION: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] wavelab_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(ConfigError {
            line: None,
            message: message.into(),
        })
    }

    /// Errors raised while turning a valid config into grid, speeds and
    /// data. Stability and blow-up keep their own exit codes; anything else
    /// means the configuration describes an impossible setup.
    pub fn setup(e: wavelab_core::Error) -> Self {
        use wavelab_core::Error as E;
        match e.root() {
            E::Stability { .. } | E::BlowUp { .. } | E::Divergence { .. } => CliError::Core(e),
            _ => CliError::config(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use wavelab_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_RUNTIME,
            CliError::Core(e) => match e.root() {
                E::Stability { .. } => EXIT_STABILITY,
                E::BlowUp { .. } | E::Divergence { .. } => EXIT_BLOWUP,
                E::InvalidGrid(_)
                | E::InvalidParameter(_)
                | E::IncompatibleData(_)
                | E::NonPositiveSpeed { .. }
                | E::Format(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            },
        }
    }
}

/// One summary line: `name, value, threshold, pass|fail`.
#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `1.8..2.2` or `<=1`.
    pub threshold: String,
    pub passed: bool,
}

impl Criterion {
    pub fn in_range(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!("{lo}..{hi}"),
            passed: (lo..=hi).contains(&value),
        }
    }

    pub fn at_most(name: &str, value: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!("<={}", format_float(max)),
            passed: value <= max,
        }
    }

    pub fn at_least(name: &str, value: f64, min: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!(">={}", format_float(min)),
            passed: value >= min,
        }
    }

    pub fn above(name: &str, value: f64, min: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!(">{}", format_float(min)),
            passed: value > min,
        }
    }

    /// A yes/no outcome, reported as value 1 or 0.
    pub fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            threshold: "1".into(),
            passed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}, {}, {}, {}",
            self.name,
            format_float(self.value),
            self.threshold,
            if self.passed { "pass" } else { "fail" }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub criteria: Vec<Criterion>,
    pub artifacts: Vec<Artifact>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            s.push_str(&c.line());
            s.push('\n');
        }
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_CRITERION
        }
    }
}

/// Runs the configured experiment and writes its artifacts, `summary.txt`
/// and the canonical `config.txt` into `out` (or the configured directory).
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<(Report, PathBuf), CliError> {
    let report = experiments::execute(cfg)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    for a in &report.artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(io_err(&path))?;
    }
    let summary = dir.join("summary.txt");
    fs::write(&summary, report.summary()).map_err(io_err(&summary))?;
    let config = dir.join("config.txt");
    fs::write(&config, cfg.to_text()).map_err(io_err(&config))?;
    Ok((report, dir))
}

/// Reads and parses a configuration file; unreadable files are config
/// errors.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}
