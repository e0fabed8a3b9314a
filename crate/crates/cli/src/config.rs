//! Run configuration files.
//!
//! One TOML file describes an experiment end to end: the specification
//! text, the environment and its domain, the predicate bindings, and the
//! run parameters. Unknown keys anywhere are rejected so typos fail fast
//! instead of silently falling back to defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use atest_core::domain::Domain;
use atest_core::engine::{Method, RunConfig};
use atest_core::envs::{
    CarParams, Environment, ExternalSimulator, PredicateBinding, Simulator, DEFAULT_TIMEOUT,
    MOUNTAIN_CAR_BOX,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Specification over named predicates, e.g. `"!(mu1 && mu2)"`.
    pub spec: String,
    pub environment: EnvironmentConfig,
    /// Search box; defaults to the built-in box for mountain-car and is
    /// required for every other environment.
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub predicates: Vec<PredicateBinding>,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Sincos,
    Car {
        #[serde(default)]
        gains: CarParams,
    },
    MountainCar,
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT.as_millis() as u64
}

/// Either explicit per-axis bounds or a uniform box shorthand for
/// high-dimensional environments.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DomainConfig {
    Explicit(Domain),
    Uniform { dim: usize, lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Report path for falsify/verify; `--out` overrides.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Directory for benchmark reports; `--out-dir` overrides.
    #[serde(default)]
    pub bench_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Known optimum; when set, each run reports the first iteration whose
    /// sample lands within `target_tolerance` of it (max-norm).
    #[serde(default)]
    pub target_w: Option<Vec<f64>>,
    #[serde(default = "default_target_tolerance")]
    pub target_tolerance: f64,
}

fn default_repeats() -> usize {
    10
}

fn default_methods() -> Vec<Method> {
    vec![Method::MultiGp, Method::SingleGp, Method::Random]
}

fn default_target_tolerance() -> f64 {
    0.1
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            repeats: default_repeats(),
            methods: default_methods(),
            target_w: None,
            target_tolerance: default_target_tolerance(),
        }
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ConfigFile = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn domain(&self) -> Result<Domain> {
        match (&self.domain, &self.environment) {
            (Some(DomainConfig::Explicit(d)), _) => Ok(d.clone()),
            (Some(DomainConfig::Uniform { dim, lower, upper }), _) => {
                Ok(Domain::from_intervals(&vec![(*lower, *upper); *dim])?)
            }
            (None, EnvironmentConfig::MountainCar) => {
                Ok(Domain::from_intervals(&MOUNTAIN_CAR_BOX)?)
            }
            (None, _) => bail!("config needs a [domain] section for this environment"),
        }
    }

    /// Builds a fresh environment (spawning the child process for external
    /// simulators). Each concurrent run wants its own.
    pub fn environment(&self) -> Result<Environment> {
        let simulator = match &self.environment {
            EnvironmentConfig::Sincos => Simulator::SinCos,
            EnvironmentConfig::Car { gains } => Simulator::Car(*gains),
            EnvironmentConfig::MountainCar => Simulator::MountainCar,
            EnvironmentConfig::External {
                command,
                timeout_ms,
            } => {
                let sim =
                    ExternalSimulator::spawn(command, Duration::from_millis(*timeout_ms))?;
                Simulator::External(sim)
            }
        };
        Ok(Environment::new(simulator, self.predicates.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        spec = "!(mu1 && mu2)"

        [environment]
        kind = "sincos"

        [domain]
        lower = [0.0]
        upper = [10.0]

        [[predicates]]
        name = "mu1"
        [predicates.functional]
        kind = "terminal"
        expr = { channel = "sin", scale = -1.0, offset = -0.65 }

        [[predicates]]
        name = "mu2"
        [predicates.functional]
        kind = "terminal"
        expr = { channel = "cos", scale = -1.0, offset = -0.65 }

        [run]
        budget = 15
        seed = 1
        method = "multi-gp"
        beta = { mode = "fixed", beta_sqrt = 3.0 }
    "#;

    #[test]
    fn minimal_config_parses_and_builds() {
        let config: ConfigFile = toml::from_str(MINIMAL).unwrap();
        assert_eq!(config.run.budget, 15);
        assert_eq!(config.run.method, Method::MultiGp);
        assert_eq!(config.domain().unwrap().dim(), 1);
        let env = config.environment().unwrap();
        assert_eq!(env.dim(), 1);
        assert_eq!(config.bench.repeats, 10);
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let with_typo = MINIMAL.replace("budget = 15", "budget = 15\nbudgett = 3");
        let err = toml::from_str::<ConfigFile>(&with_typo).unwrap_err();
        assert!(err.to_string().contains("budgett"), "{err}");

        let top_level = format!("{MINIMAL}\nextra_section = 1\n");
        assert!(toml::from_str::<ConfigFile>(&top_level).is_err());
    }

    #[test]
    fn uniform_domain_shorthand_expands() {
        let toml_text = r#"
            spec = "mu1"
            [environment]
            kind = "car"
            [domain]
            dim = 100
            lower = 4.5
            upper = 5.5
            [run]
            budget = 5
            seed = 0
            method = "random"
            beta = { mode = "fixed", beta_sqrt = 3.0 }
        "#;
        let config: ConfigFile = toml::from_str(toml_text).unwrap();
        let domain = config.domain().unwrap();
        assert_eq!(domain.dim(), 100);
        assert_eq!(domain.lower()[99], 4.5);
    }

    #[test]
    fn mountain_car_domain_defaults_to_its_box() {
        let toml_text = r#"
            spec = "mu1"
            [environment]
            kind = "mountain-car"
            [run]
            budget = 5
            seed = 0
            method = "random"
            beta = { mode = "fixed", beta_sqrt = 3.0 }
        "#;
        let config: ConfigFile = toml::from_str(toml_text).unwrap();
        let domain = config.domain().unwrap();
        assert_eq!(domain.dim(), 5);
        assert_eq!(domain.upper()[2], 0.6);
    }

    #[test]
    fn sincos_without_domain_is_an_error() {
        let toml_text = r#"
            spec = "mu1"
            [environment]
            kind = "sincos"
            [run]
            budget = 5
            seed = 0
            method = "random"
            beta = { mode = "fixed", beta_sqrt = 3.0 }
        "#;
        let config: ConfigFile = toml::from_str(toml_text).unwrap();
        assert!(config.domain().is_err());
    }
}
