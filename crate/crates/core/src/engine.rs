//! The active-testing loop, baselines, verification certificate, and
//! convergence diagnostics.
//!
//! Each iteration picks the environment minimizing the composed confidence
//! bound, simulates it, evaluates every predicate, and conditions the
//! models. The worst value seen is the reported counterexample; a positive
//! global minimum of the bound certifies the specification instead.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::acquisition::{
    composite_lcb, minimize_acquisition, AcqError, BetaSchedule, Embedding, OptimizerConfig,
};
use crate::domain::Domain;
use crate::envs::{EnvError, Environment, Trajectory};
use crate::gp::{GpError, GpModel, SquaredExponential, DEFAULT_NOISE_VARIANCE};
use crate::rng::{stream_rng, Stream};
use crate::speclang::{build_parse_tree, parse_spec, to_nnf, ParseError, ParseTree, TreeError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("specification: {0}")]
    Parse(#[from] ParseError),
    #[error("specification: {0}")]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Acquisition(#[from] AcqError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("budget must be >= 1")]
    BadBudget,
    #[error("method `{0}` requires embedding_dim in the configuration")]
    MissingEmbeddingDim(Method),
    #[error("embedding_dim {dim_low} must be >= 1 and < the domain dimension {dim_high}")]
    BadEmbeddingDim { dim_low: usize, dim_high: usize },
    #[error("domain dimension {domain} does not match the environment dimension {env}")]
    DomainEnvMismatch { domain: usize, env: usize },
    #[error("lengthscales for `{name}` have length {got}, search space has dimension {expected}")]
    BadLengthscales {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("verification requires the full-space multi-gp method, not `{0}`")]
    VerifyNeedsFullSpace(Method),
    #[error("simulation failed at iteration {iteration}: {source}")]
    Simulation { iteration: usize, source: EnvError },
    #[error("acquisition optimization failed at iteration {iteration}: {source}")]
    Optimization { iteration: usize, source: AcqError },
}

/// Search strategy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One GP per predicate, acquisition over the full domain.
    MultiGp,
    /// One GP per predicate over a random low-dimensional embedding.
    MultiGpEmbedded,
    /// A single GP over the whole-specification value.
    SingleGp,
    /// Single GP over a random low-dimensional embedding.
    SingleGpEmbedded,
    /// Uniform random sampling, no model.
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::MultiGp,
        Method::MultiGpEmbedded,
        Method::SingleGp,
        Method::SingleGpEmbedded,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MultiGp => "multi-gp",
            Method::MultiGpEmbedded => "multi-gp-embedded",
            Method::SingleGp => "single-gp",
            Method::SingleGpEmbedded => "single-gp-embedded",
            Method::Random => "random",
        }
    }

    pub fn uses_embedding(self) -> bool {
        matches!(self, Method::MultiGpEmbedded | Method::SingleGpEmbedded)
    }

    pub fn is_gp(self) -> bool {
        self != Method::Random
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// GP hyperparameters; lengthscales default to a quarter of each search
/// axis width times `lengthscale_factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub lengthscale_factor: f64,
    /// Explicit per-axis lengthscales; must match the search-space
    /// dimension (the embedding dimension for embedded methods).
    pub lengthscales: Option<Vec<f64>>,
    /// Per-predicate overrides, keyed by predicate name ("phi" addresses
    /// the single whole-formula model).
    pub per_predicate: BTreeMap<String, GpOverride>,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            signal_variance: 1.0,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            lengthscale_factor: 1.0,
            lengthscales: None,
            per_predicate: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpOverride {
    pub signal_variance: Option<f64>,
    pub lengthscale_factor: Option<f64>,
    pub lengthscales: Option<Vec<f64>>,
}

impl GpConfig {
    fn build_models(
        &self,
        names: &[String],
        search_domain: &Domain,
    ) -> Result<Vec<GpModel>, EngineError> {
        names
            .iter()
            .map(|name| {
                let over = self.per_predicate.get(name);
                let signal = over
                    .and_then(|o| o.signal_variance)
                    .unwrap_or(self.signal_variance);
                let explicit = over
                    .and_then(|o| o.lengthscales.clone())
                    .or_else(|| self.lengthscales.clone());
                let lengthscales = match explicit {
                    Some(ls) => {
                        if ls.len() != search_domain.dim() {
                            return Err(EngineError::BadLengthscales {
                                name: name.clone(),
                                expected: search_domain.dim(),
                                got: ls.len(),
                            });
                        }
                        ls
                    }
                    None => {
                        let factor = over
                            .and_then(|o| o.lengthscale_factor)
                            .unwrap_or(self.lengthscale_factor);
                        search_domain.widths().iter().map(|w| w / 4.0 * factor).collect()
                    }
                };
                Ok(GpModel::new(
                    SquaredExponential::new(signal, lengthscales)?,
                    self.noise_variance,
                )?)
            })
            .collect()
    }
}

fn default_init_samples() -> usize {
    5
}

fn default_delta() -> f64 {
    0.05
}

/// Everything one run needs beyond the environment and the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub budget: usize,
    pub seed: u64,
    pub method: Method,
    pub beta: BetaSchedule,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub embedding_dim: Option<usize>,
    /// Uniform random evaluations before the model-guided loop.
    #[serde(default = "default_init_samples")]
    pub init_samples: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub gp: GpConfig,
    /// Stop as soon as the certificate verifies (or a counterexample
    /// falsifies); falsification runs want the full budget instead.
    #[serde(default)]
    pub verify: bool,
    /// Simple-regret target for the diagnostics, if any.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl RunConfig {
    pub fn new(method: Method, budget: usize, seed: u64) -> Self {
        RunConfig {
            budget,
            seed,
            method,
            beta: BetaSchedule::Fixed { beta_sqrt: 3.0 },
            optimizer: OptimizerConfig::default(),
            embedding_dim: None,
            init_samples: default_init_samples(),
            delta: default_delta(),
            gp: GpConfig::default(),
            verify: false,
            epsilon: None,
        }
    }
}

/// One evaluated environment point. Initialization rows carry iteration 0
/// and no acquisition data; model-guided rows carry the iteration's
/// confidence scale and the minimized acquisition value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
    pub phi: f64,
    pub beta_sqrt: Option<f64>,
    pub acquisition_value: Option<f64>,
    /// Total mutual information across models after this row's update.
    pub mutual_information: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verified: bool,
    /// Minimum of the composed lower confidence bound found by the
    /// optimizer.
    pub acquisition_minimum: f64,
    pub beta_sqrt: f64,
    pub delta: f64,
    /// Always true: the minimum comes from a multi-start heuristic, not a
    /// certified global optimizer.
    pub heuristic_optimum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// 8/ln(1 + 1/noise_variance).
    pub c1: f64,
    pub beta_sqrt_per_iteration: Vec<f64>,
    pub mutual_information_per_iteration: Vec<f64>,
    /// sqrt(C1 * beta_n * accumulated-information / n) per iteration.
    pub regret_bound_per_iteration: Vec<f64>,
    pub epsilon: Option<f64>,
    /// Smallest iteration whose regret bound is <= epsilon, if reached.
    pub iterations_to_epsilon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub config: RunConfig,
    pub spec_text: String,
    pub predicates: Vec<String>,
    pub history: Vec<HistoryRow>,
    pub worst_index: usize,
    pub worst_w: Vec<f64>,
    pub worst_phi: f64,
    pub worst_trajectory: Option<Trajectory>,
    pub counterexample_count: usize,
    pub certificate: Option<Certificate>,
    pub diagnostics: Diagnostics,
}

impl RunResult {
    pub fn found_counterexample(&self) -> bool {
        self.worst_phi <= 0.0
    }
}

/// Dispatches on the configured method.
pub fn run(
    spec_text: &str,
    env: &mut Environment,
    domain: &Domain,
    config: &RunConfig,
) -> Result<RunResult, EngineError> {
    match config.method {
        Method::MultiGp | Method::MultiGpEmbedded => active_test(spec_text, env, domain, config),
        Method::SingleGp | Method::SingleGpEmbedded | Method::Random => {
            run_baseline(spec_text, env, domain, config)
        }
    }
}

/// The model-per-predicate search loop.
pub fn active_test(
    spec_text: &str,
    env: &mut Environment,
    domain: &Domain,
    config: &RunConfig,
) -> Result<RunResult, EngineError> {
    assert!(
        matches!(config.method, Method::MultiGp | Method::MultiGpEmbedded),
        "active_test drives the multi-gp methods"
    );
    run_gp(spec_text, env, domain, config, Modeling::PerPredicate)
}

/// The comparison baselines: one GP over the whole-specification value, or
/// plain uniform sampling.
pub fn run_baseline(
    spec_text: &str,
    env: &mut Environment,
    domain: &Domain,
    config: &RunConfig,
) -> Result<RunResult, EngineError> {
    match config.method {
        Method::SingleGp | Method::SingleGpEmbedded => {
            run_gp(spec_text, env, domain, config, Modeling::WholeFormula)
        }
        Method::Random => run_random(spec_text, env, domain, config),
        other => panic!("run_baseline does not drive `{other}`"),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Modeling {
    PerPredicate,
    WholeFormula,
}

struct Prepared {
    tree: ParseTree,
    search_domain: Domain,
    embedding: Option<Embedding>,
}

fn prepare(
    spec_text: &str,
    env: &Environment,
    domain: &Domain,
    config: &RunConfig,
) -> Result<Prepared, EngineError> {
    if config.budget == 0 {
        return Err(EngineError::BadBudget);
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(AcqError::BadDelta(config.delta).into());
    }
    let tree = build_parse_tree(&to_nnf(&parse_spec(spec_text)?))?;
    if domain.dim() != env.dim() {
        return Err(EngineError::DomainEnvMismatch {
            domain: domain.dim(),
            env: env.dim(),
        });
    }
    env.check_bindings(tree.predicates())?;
    if config.verify && config.method != Method::MultiGp {
        return Err(EngineError::VerifyNeedsFullSpace(config.method));
    }
    let embedding = if config.method.uses_embedding() {
        let dim_low = config
            .embedding_dim
            .ok_or(EngineError::MissingEmbeddingDim(config.method))?;
        if dim_low == 0 || dim_low >= domain.dim() {
            return Err(EngineError::BadEmbeddingDim {
                dim_low,
                dim_high: domain.dim(),
            });
        }
        let mut rng = stream_rng(config.seed, Stream::Embedding);
        Some(Embedding::random(domain.dim(), dim_low, &mut rng))
    } else {
        None
    };
    let search_domain = match &embedding {
        Some(e) => e.low_domain(),
        None => domain.clone(),
    };
    Ok(Prepared {
        tree,
        search_domain,
        embedding,
    })
}

/// Accumulates history plus the running worst point and its trajectory.
struct Recorder {
    history: Vec<HistoryRow>,
    worst_index: usize,
    worst_phi: f64,
    worst_w: Vec<f64>,
    worst_trajectory: Option<Trajectory>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            history: Vec::new(),
            worst_index: 0,
            worst_phi: f64::INFINITY,
            worst_w: Vec::new(),
            worst_trajectory: None,
        }
    }

    fn push(&mut self, row: HistoryRow, trajectory: Option<Trajectory>) {
        if row.phi < self.worst_phi {
            self.worst_phi = row.phi;
            self.worst_index = self.history.len();
            self.worst_w = row.w.clone();
            self.worst_trajectory = trajectory;
        }
        self.history.push(row);
    }
}

fn run_gp(
    spec_text: &str,
    env: &mut Environment,
    domain: &Domain,
    config: &RunConfig,
    modeling: Modeling,
) -> Result<RunResult, EngineError> {
    let Prepared {
        tree,
        search_domain,
        embedding,
    } = prepare(spec_text, env, domain, config)?;

    let model_names: Vec<String> = match modeling {
        Modeling::PerPredicate => tree.predicates().to_vec(),
        Modeling::WholeFormula => vec!["phi".to_string()],
    };
    let mut models = config.gp.build_models(&model_names, &search_domain)?;
    config.beta.validate(models.len())?;

    let mut init_rng = stream_rng(config.seed, Stream::InitSamples);
    let mut opt_rng = stream_rng(config.seed, Stream::OptimizerRestarts);
    let mut recorder = Recorder::new();
    let mut certificate: Option<Certificate> = None;

    let to_env_point = |y: &[f64]| -> Result<Vec<f64>, EngineError> {
        match &embedding {
            Some(e) => Ok(e.embed(y, domain)?),
            None => Ok(y.to_vec()),
        }
    };

    for y in search_domain.sample_uniform_n(&mut init_rng, config.init_samples) {
        let w = to_env_point(&y)?;
        let eval = env
            .evaluate(&w, tree.predicates())
            .map_err(|source| EngineError::Simulation { iteration: 0, source })?;
        let phi = tree.eval(&eval.mu)?;
        update_models(&mut models, &y, &eval.mu, phi, modeling)?;
        let mi = total_information(&models);
        recorder.push(
            HistoryRow {
                iteration: 0,
                w,
                mu: eval.mu,
                phi,
                beta_sqrt: None,
                acquisition_value: None,
                mutual_information: mi,
            },
            eval.trajectory,
        );
    }

    for n in 1..=config.budget {
        let beta_sqrt = config.beta.beta_sqrt_at(&models, n)?;
        let shared_models = &models;
        let shared_tree = &tree;
        let objective = move |y: &[f64]| -> f64 {
            match modeling {
                Modeling::PerPredicate => {
                    composite_lcb(shared_tree, shared_models, beta_sqrt, y).unwrap_or(f64::NAN)
                }
                Modeling::WholeFormula => shared_models[0]
                    .posterior(y)
                    .map(|(m, v)| m - beta_sqrt * v.sqrt())
                    .unwrap_or(f64::NAN),
            }
        };
        let (y_star, acq_value) =
            minimize_acquisition(&objective, &search_domain, &config.optimizer, &mut opt_rng)
                .map_err(|source| EngineError::Optimization {
                    iteration: n,
                    source,
                })?;

        if config.verify && acq_value > 0.0 {
            // The pessimistic bound is positive even at its minimizer, so
            // no environment can violate the specification (up to the
            // optimizer's heuristic and confidence delta). No need to
            // simulate this point.
            certificate = Some(Certificate {
                verified: true,
                acquisition_minimum: acq_value,
                beta_sqrt,
                delta: config.delta,
                heuristic_optimum: true,
            });
            break;
        }

        let w = to_env_point(&y_star)?;
        let eval = env
            .evaluate(&w, tree.predicates())
            .map_err(|source| EngineError::Simulation { iteration: n, source })?;
        let phi = tree.eval(&eval.mu)?;
        update_models(&mut models, &y_star, &eval.mu, phi, modeling)?;
        let mi = total_information(&models);
        recorder.push(
            HistoryRow {
                iteration: n,
                w,
                mu: eval.mu,
                phi,
                beta_sqrt: Some(beta_sqrt),
                acquisition_value: Some(acq_value),
                mutual_information: mi,
            },
            eval.trajectory,
        );

        if config.verify && phi <= 0.0 {
            // Falsified: the sampled point is a concrete counterexample.
            break;
        }
    }

    if config.verify && certificate.is_none() && recorder.worst_phi > 0.0 {
        let beta_sqrt = config.beta.beta_sqrt_at(&models, config.budget + 1)?;
        certificate = Some(certificate_over(
            &tree,
            &models,
            beta_sqrt,
            &search_domain,
            &config.optimizer,
            config.delta,
            modeling,
            &mut opt_rng,
        )?);
    }

    Ok(assemble(
        spec_text, &tree, config, recorder, certificate,
    ))
}

fn run_random(
    spec_text: &str,
    env: &mut Environment,
    domain: &Domain,
    config: &RunConfig,
) -> Result<RunResult, EngineError> {
    let Prepared { tree, .. } = prepare(spec_text, env, domain, config)?;
    let mut rng = stream_rng(config.seed, Stream::RandomBaseline);
    let mut recorder = Recorder::new();
    for n in 1..=config.budget {
        let w = domain.sample_uniform(&mut rng);
        let eval = env
            .evaluate(&w, tree.predicates())
            .map_err(|source| EngineError::Simulation { iteration: n, source })?;
        let phi = tree.eval(&eval.mu)?;
        recorder.push(
            HistoryRow {
                iteration: n,
                w,
                mu: eval.mu,
                phi,
                beta_sqrt: None,
                acquisition_value: None,
                mutual_information: 0.0,
            },
            eval.trajectory,
        );
    }
    Ok(assemble(spec_text, &tree, config, recorder, None))
}

fn update_models(
    models: &mut [GpModel],
    y: &[f64],
    mu: &[f64],
    phi: f64,
    modeling: Modeling,
) -> Result<(), EngineError> {
    match modeling {
        Modeling::PerPredicate => {
            for (model, &value) in models.iter_mut().zip(mu) {
                model.add_observation(y, value)?;
            }
        }
        Modeling::WholeFormula => models[0].add_observation(y, phi)?,
    }
    Ok(())
}

fn total_information(models: &[GpModel]) -> f64 {
    models.iter().map(GpModel::mutual_information).sum()
}

#[allow(clippy::too_many_arguments)]
fn certificate_over(
    tree: &ParseTree,
    models: &[GpModel],
    beta_sqrt: f64,
    search_domain: &Domain,
    optimizer: &OptimizerConfig,
    delta: f64,
    modeling: Modeling,
    rng: &mut impl rand::Rng,
) -> Result<Certificate, EngineError> {
    let objective = |y: &[f64]| -> f64 {
        match modeling {
            Modeling::PerPredicate => {
                composite_lcb(tree, models, beta_sqrt, y).unwrap_or(f64::NAN)
            }
            Modeling::WholeFormula => models[0]
                .posterior(y)
                .map(|(m, v)| m - beta_sqrt * v.sqrt())
                .unwrap_or(f64::NAN),
        }
    };
    let (_, value) = minimize_acquisition(&objective, search_domain, optimizer, rng)
        .map_err(|source| EngineError::Optimization {
            iteration: 0,
            source,
        })?;
    Ok(Certificate {
        verified: value > 0.0,
        acquisition_minimum: value,
        beta_sqrt,
        delta,
        heuristic_optimum: true,
    })
}

/// Verifies positivity of the composed bound's global minimum over the
/// domain: the standalone form of the in-loop certificate check.
pub fn check_certificate(
    tree: &ParseTree,
    models: &[GpModel],
    beta_sqrt: f64,
    domain: &Domain,
    optimizer: &OptimizerConfig,
    delta: f64,
    rng: &mut impl rand::Rng,
) -> Result<Certificate, EngineError> {
    certificate_over(
        tree,
        models,
        beta_sqrt,
        domain,
        optimizer,
        delta,
        Modeling::PerPredicate,
        rng,
    )
}

fn assemble(
    spec_text: &str,
    tree: &ParseTree,
    config: &RunConfig,
    recorder: Recorder,
    certificate: Option<Certificate>,
) -> RunResult {
    let counterexample_count = recorder.history.iter().filter(|r| r.phi <= 0.0).count();
    let mut result = RunResult {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        spec_text: spec_text.to_string(),
        predicates: tree.predicates().to_vec(),
        history: recorder.history,
        worst_index: recorder.worst_index,
        worst_w: recorder.worst_w,
        worst_phi: recorder.worst_phi,
        worst_trajectory: recorder.worst_trajectory,
        counterexample_count,
        certificate,
        diagnostics: Diagnostics {
            c1: 0.0,
            beta_sqrt_per_iteration: Vec::new(),
            mutual_information_per_iteration: Vec::new(),
            regret_bound_per_iteration: Vec::new(),
            epsilon: None,
            iterations_to_epsilon: None,
        },
    };
    result.diagnostics = convergence_diagnostics(&result, config.epsilon);
    result
}

/// Regret-bound diagnostics from a finished run: the constant
/// C1 = 8/ln(1 + 1/noise), the per-iteration confidence scale and
/// accumulated information, the simple-regret bound
/// sqrt(C1 * beta_n * info_n / n), and the first iteration meeting an
/// optional target epsilon.
pub fn convergence_diagnostics(result: &RunResult, epsilon: Option<f64>) -> Diagnostics {
    let noise = result.config.gp.noise_variance;
    let c1 = 8.0 / (1.0 + 1.0 / noise).ln();
    let mut beta_sqrt_per_iteration = Vec::new();
    let mut mutual_information_per_iteration = Vec::new();
    let mut regret_bound_per_iteration = Vec::new();
    let mut iterations_to_epsilon = None;
    for row in result.history.iter().filter(|r| r.iteration >= 1) {
        let Some(beta_sqrt) = row.beta_sqrt else { continue };
        let n = beta_sqrt_per_iteration.len() as f64 + 1.0;
        let info = row.mutual_information;
        let bound = (c1 * beta_sqrt * beta_sqrt * info / n).sqrt();
        beta_sqrt_per_iteration.push(beta_sqrt);
        mutual_information_per_iteration.push(info);
        regret_bound_per_iteration.push(bound);
        if let Some(eps) = epsilon {
            if iterations_to_epsilon.is_none() && bound <= eps {
                iterations_to_epsilon = Some(row.iteration);
            }
        }
    }
    Diagnostics {
        c1,
        beta_sqrt_per_iteration,
        mutual_information_per_iteration,
        regret_bound_per_iteration,
        epsilon,
        iterations_to_epsilon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{ChannelExpr, Functional, PredicateBinding, Simulator};
    use approx::assert_abs_diff_eq;

    /// sin/cos benchmark: phi = max(sin w + 0.65, cos w + 0.65), minimum
    /// 0.65 - sqrt(1/2) at w = 5*pi/4.
    fn sincos_env() -> Environment {
        let bindings = vec![
            PredicateBinding {
                name: "mu1".into(),
                functional: Functional::Terminal {
                    expr: ChannelExpr::affine("sin", -1.0, -0.65),
                },
            },
            PredicateBinding {
                name: "mu2".into(),
                functional: Functional::Terminal {
                    expr: ChannelExpr::affine("cos", -1.0, -0.65),
                },
            },
        ];
        Environment::new(Simulator::SinCos, bindings).unwrap()
    }

    const SINCOS_SPEC: &str = "!(mu1 && mu2)";

    fn sincos_domain() -> Domain {
        Domain::from_intervals(&[(0.0, 10.0)]).unwrap()
    }

    fn sincos_config(method: Method, budget: usize, seed: u64) -> RunConfig {
        RunConfig::new(method, budget, seed)
    }

    #[test]
    fn multi_gp_falsifies_the_sincos_benchmark() {
        let mut env = sincos_env();
        let config = sincos_config(Method::MultiGp, 15, 1);
        let result = active_test(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        let w_star = 5.0 * std::f64::consts::PI / 4.0;
        assert!(
            result.worst_phi <= -0.04,
            "worst phi = {}",
            result.worst_phi
        );
        assert!(
            (result.worst_w[0] - w_star).abs() <= 0.1,
            "worst w = {}",
            result.worst_w[0]
        );
        assert!(result.found_counterexample());
        assert_eq!(result.history.len(), 15 + 5);
    }

    #[test]
    fn one_predicate_degenerates_to_plain_gp_lcb() {
        // With a single positive leaf the composed bound equals the plain
        // GP bound on phi, so multi-gp and single-gp coincide exactly.
        let bindings = vec![PredicateBinding {
            name: "mu1".into(),
            functional: Functional::Terminal {
                expr: ChannelExpr::affine("sin", -1.0, -0.65),
            },
        }];
        let mut env_a = Environment::new(Simulator::SinCos, bindings.clone()).unwrap();
        let mut env_b = Environment::new(Simulator::SinCos, bindings).unwrap();
        let domain = sincos_domain();
        let multi = run(
            "mu1",
            &mut env_a,
            &domain,
            &sincos_config(Method::MultiGp, 10, 3),
        )
        .unwrap();
        let single = run(
            "mu1",
            &mut env_b,
            &domain,
            &sincos_config(Method::SingleGp, 10, 3),
        )
        .unwrap();
        assert_eq!(multi.history, single.history);
        assert_eq!(multi.worst_w, single.worst_w);
    }

    #[test]
    fn budget_one_history_is_init_plus_one() {
        let mut env = sincos_env();
        let config = sincos_config(Method::MultiGp, 1, 2);
        let result = active_test(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        assert_eq!(result.history.len(), 1 + config.init_samples);
    }

    #[test]
    fn worst_and_counts_match_the_history() {
        let mut env = sincos_env();
        let config = sincos_config(Method::MultiGp, 8, 5);
        let result = active_test(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        let min_phi = result
            .history
            .iter()
            .map(|r| r.phi)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(result.worst_phi, min_phi);
        assert_eq!(result.history[result.worst_index].phi, min_phi);
        assert_eq!(
            result.counterexample_count,
            result.history.iter().filter(|r| r.phi <= 0.0).count()
        );
        // Every row's phi is recomputable from its predicate values.
        let tree = build_parse_tree(&to_nnf(&parse_spec(SINCOS_SPEC).unwrap())).unwrap();
        for row in &result.history {
            assert_eq!(row.phi, tree.eval(&row.mu).unwrap());
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_results() {
        let domain = sincos_domain();
        let config = sincos_config(Method::MultiGp, 6, 9);
        let a = active_test(SINCOS_SPEC, &mut sincos_env(), &domain, &config).unwrap();
        let b = active_test(SINCOS_SPEC, &mut sincos_env(), &domain, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_baseline_draws_exactly_the_budget() {
        let mut env = sincos_env();
        let config = sincos_config(Method::Random, 12, 4);
        let result = run_baseline(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        assert_eq!(result.history.len(), 12);
        assert!(result.history.iter().all(|r| r.beta_sqrt.is_none()));
        assert!(result.history.iter().all(|r| r.iteration >= 1));
    }

    #[test]
    fn zero_budget_is_rejected() {
        let mut env = sincos_env();
        let config = sincos_config(Method::Random, 0, 4);
        assert!(matches!(
            run_baseline(SINCOS_SPEC, &mut env, &sincos_domain(), &config),
            Err(EngineError::BadBudget)
        ));
    }

    #[test]
    fn missing_binding_is_reported_up_front() {
        let mut env = sincos_env();
        let config = sincos_config(Method::MultiGp, 5, 4);
        let err = active_test("mu1 && mu7", &mut env, &sincos_domain(), &config).unwrap_err();
        assert!(matches!(
            err,
            EngineError::Env(EnvError::UnboundPredicate(name)) if name == "mu7"
        ));
    }

    #[test]
    fn bad_delta_is_rejected() {
        let mut env = sincos_env();
        let mut config = sincos_config(Method::MultiGp, 5, 4);
        config.delta = 1.5;
        assert!(matches!(
            active_test(SINCOS_SPEC, &mut env, &sincos_domain(), &config),
            Err(EngineError::Acquisition(AcqError::BadDelta(_)))
        ));
    }

    #[test]
    fn embedding_requires_a_dimension_and_room() {
        let mut env = sincos_env();
        let mut config = sincos_config(Method::MultiGpEmbedded, 5, 4);
        assert!(matches!(
            run(SINCOS_SPEC, &mut env, &sincos_domain(), &config),
            Err(EngineError::MissingEmbeddingDim(_))
        ));
        config.embedding_dim = Some(1);
        assert!(matches!(
            run(SINCOS_SPEC, &mut env, &sincos_domain(), &config),
            Err(EngineError::BadEmbeddingDim { .. })
        ));
    }

    #[test]
    fn verification_succeeds_on_a_constant_safe_spec() {
        // A predicate pinned at 1.0 regardless of the input.
        let bindings = vec![PredicateBinding {
            name: "mu1".into(),
            functional: Functional::Terminal {
                expr: ChannelExpr::affine("sin", 0.0, 1.0),
            },
        }];
        let mut env = Environment::new(Simulator::SinCos, bindings).unwrap();
        let mut config = sincos_config(Method::MultiGp, 30, 7);
        config.beta = BetaSchedule::Fixed { beta_sqrt: 2.0 };
        config.verify = true;
        let result = run("mu1", &mut env, &sincos_domain(), &config).unwrap();
        let cert = result.certificate.as_ref().expect("certificate present");
        assert!(cert.verified);
        assert!(cert.acquisition_minimum > 0.0);
        assert!(cert.heuristic_optimum);
        assert!(result.history.len() < 30 + 5, "should stop early");
        assert!(!result.found_counterexample());
    }

    #[test]
    fn verification_never_claims_the_falsifiable_benchmark() {
        let mut env = sincos_env();
        let mut config = sincos_config(Method::MultiGp, 15, 1);
        config.verify = true;
        let result = run(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        assert!(result.certificate.is_none() || !result.certificate.as_ref().unwrap().verified);
        assert!(result.found_counterexample());
    }

    #[test]
    fn fresh_certificate_check_on_prior_models_declines() {
        let tree = build_parse_tree(&to_nnf(&parse_spec("mu1").unwrap())).unwrap();
        let domain = sincos_domain();
        let mut model = GpModel::new(
            SquaredExponential::new(1.0, vec![2.5]).unwrap(),
            DEFAULT_NOISE_VARIANCE,
        )
        .unwrap();
        model.add_observation(&[5.0], 1.0).unwrap();
        let mut rng = stream_rng(3, Stream::OptimizerRestarts);
        let cert = check_certificate(
            &tree,
            &[model],
            2.0,
            &domain,
            &OptimizerConfig::default(),
            0.05,
            &mut rng,
        )
        .unwrap();
        assert!(!cert.verified);
        assert!(cert.acquisition_minimum < 0.0);
    }

    #[test]
    fn verify_on_an_embedded_method_is_rejected() {
        let mut env = sincos_env();
        let mut config = sincos_config(Method::MultiGpEmbedded, 5, 4);
        config.embedding_dim = Some(1);
        config.verify = true;
        assert!(matches!(
            run(SINCOS_SPEC, &mut env, &sincos_domain(), &config),
            Err(EngineError::VerifyNeedsFullSpace(_))
        ));
    }

    #[test]
    fn diagnostics_constant_and_epsilon_threshold() {
        let mut env = sincos_env();
        let mut config = sincos_config(Method::MultiGp, 5, 6);
        config.gp.noise_variance = 0.01;
        config.epsilon = Some(1e6);
        let result = active_test(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        assert_abs_diff_eq!(result.diagnostics.c1, 8.0 / 101.0_f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(result.diagnostics.c1, 1.7334, epsilon = 1e-4);
        assert_eq!(result.diagnostics.iterations_to_epsilon, Some(1));
        assert_eq!(result.diagnostics.beta_sqrt_per_iteration.len(), 5);
        // Information never decreases along the run.
        let mi = &result.diagnostics.mutual_information_per_iteration;
        assert!(mi.windows(2).all(|w| w[1] >= w[0]));

        let unreachable = convergence_diagnostics(&result, Some(0.0));
        assert_eq!(unreachable.iterations_to_epsilon, None);
    }

    #[test]
    fn theoretical_beta_is_nondecreasing_over_a_run() {
        let mut env = sincos_env();
        let mut config = sincos_config(Method::MultiGp, 8, 2);
        config.beta = BetaSchedule::Theoretical {
            smoothness_bounds: vec![1.0, 1.0],
            delta: 0.05,
            noise_std: 0.01,
        };
        let result = active_test(SINCOS_SPEC, &mut env, &sincos_domain(), &config).unwrap();
        let betas = &result.diagnostics.beta_sqrt_per_iteration;
        assert_eq!(betas.len(), 8);
        assert!(betas.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert!("banana".parse::<Method>().is_err());
    }
}
