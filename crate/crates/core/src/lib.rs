//! Active testing of black-box closed-loop systems.
//!
//! Safety requirements are boolean combinations of real-valued predicates
//! evaluated on simulated trajectories. Each predicate is modeled by its own
//! Gaussian process over the environment-parameter box, and the per-predicate
//! lower confidence bounds are composed through the specification's min/max
//! parse tree into a single acquisition function. Minimizing that acquisition
//! with a multi-start derivative-free optimizer drives the simulator toward
//! counterexamples; if the acquisition minimum ever becomes positive, the
//! system is verified with high probability.
//!
//! Crate layout:
//!
//! - [`speclang`]: specification parser, normal forms, min/max parse tree.
//! - [`gp`]: squared-exponential GP regression with incremental Cholesky
//!   updates and mutual-information accounting.
//! - [`acquisition`]: composite LCB, confidence scaling schedules, multi-start
//!   Nelder-Mead minimization, random embeddings.
//! - [`envs`]: built-in simulators, predicate functionals, and a line-delimited
//!   JSON protocol client for external simulators.
//! - [`engine`]: the active-testing loop, baselines, verification certificates,
//!   and convergence diagnostics.
//!
//! The `parallel` feature (on by default) dispatches independent objective
//! evaluations and benchmark repeats onto a rayon thread pool; results are
//! reduced by candidate index, so parallel and sequential runs return
//! identical values.

pub mod acquisition;
pub mod domain;
pub mod engine;
pub mod envs;
pub mod exec;
pub mod gp;
pub mod rng;
pub mod speclang;

pub use domain::Domain;
