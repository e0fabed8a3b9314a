//! Confidence-bound acquisition composed through the parse tree.
//!
//! Each predicate contributes the endpoint of its posterior confidence
//! interval that lower-bounds the signed leaf value; folding those through
//! the min/max tree gives a pessimistic estimate of the whole
//! specification. Minimizing it picks the next environment to test, and a
//! positive global minimum certifies the specification.

mod optimize;

pub use optimize::{minimize_acquisition, OptimizerConfig};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;
use crate::gp::{GpError, GpModel};
use crate::speclang::{ParseTree, Sign};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AcqError {
    #[error("tree references {tree} predicates but {models} models were supplied")]
    ArityMismatch { tree: usize, models: usize },
    #[error("beta_sqrt must be finite and >= 0, got {0}")]
    BadBeta(f64),
    #[error("delta must lie strictly inside (0,1), got {0}")]
    BadDelta(f64),
    #[error("smoothness bound must be positive, got {0}")]
    BadSmoothnessBound(f64),
    #[error("iteration index must be >= 1")]
    BadIteration,
    #[error("restarts must be >= 1")]
    NoRestarts,
    #[error("objective was non-finite at every candidate")]
    AllNonFinite,
    #[error("embedding expected a {expected}-dim input, got {got}")]
    EmbeddingDim { expected: usize, got: usize },
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Pessimistic bound for the whole specification at `w`: each positive
/// leaf takes mean - beta_sqrt * sd, each negated leaf -(mean +
/// beta_sqrt * sd), folded through the min/max tree.
pub fn composite_lcb(
    tree: &ParseTree,
    models: &[GpModel],
    beta_sqrt: f64,
    w: &[f64],
) -> Result<f64, AcqError> {
    if models.len() != tree.num_predicates() {
        return Err(AcqError::ArityMismatch {
            tree: tree.num_predicates(),
            models: models.len(),
        });
    }
    if !(beta_sqrt >= 0.0 && beta_sqrt.is_finite()) {
        return Err(AcqError::BadBeta(beta_sqrt));
    }
    let mut stats = Vec::with_capacity(models.len());
    for model in models {
        let (mean, var) = model.posterior(w)?;
        stats.push((mean, var.sqrt()));
    }
    Ok(composite_lcb_from_stats(tree, &stats, beta_sqrt))
}

/// Same composition from precomputed per-predicate (mean, sd) pairs.
pub fn composite_lcb_from_stats(tree: &ParseTree, stats: &[(f64, f64)], beta_sqrt: f64) -> f64 {
    tree.eval_with(&mut |i, sign| {
        let (mean, sd) = stats[i];
        match sign {
            Sign::Pos => mean - beta_sqrt * sd,
            Sign::Neg => -(mean + beta_sqrt * sd),
        }
    })
}

/// Confidence-interval scaling across iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaSchedule {
    /// Constant beta_sqrt at every iteration.
    Fixed { beta_sqrt: f64 },
    /// Anytime-valid schedule: sum of per-predicate smoothness bounds plus
    /// 4 * noise_std * sqrt(1 + ln(1/delta) + total mutual information).
    /// Grows with the information the measurements have accumulated.
    Theoretical {
        smoothness_bounds: Vec<f64>,
        delta: f64,
        noise_std: f64,
    },
}

impl BetaSchedule {
    /// Checks the schedule's own parameters against `q` predicates.
    pub fn validate(&self, q: usize) -> Result<(), AcqError> {
        match self {
            BetaSchedule::Fixed { beta_sqrt } => {
                if !(beta_sqrt.is_finite() && *beta_sqrt >= 0.0) {
                    return Err(AcqError::BadBeta(*beta_sqrt));
                }
            }
            BetaSchedule::Theoretical {
                smoothness_bounds,
                delta,
                noise_std,
            } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(AcqError::BadDelta(*delta));
                }
                if !(noise_std.is_finite() && *noise_std > 0.0) {
                    return Err(AcqError::BadSmoothnessBound(*noise_std));
                }
                if smoothness_bounds.len() != q {
                    return Err(AcqError::ArityMismatch {
                        tree: q,
                        models: smoothness_bounds.len(),
                    });
                }
                for &b in smoothness_bounds {
                    if !(b.is_finite() && b > 0.0) {
                        return Err(AcqError::BadSmoothnessBound(b));
                    }
                }
            }
        }
        Ok(())
    }

    /// beta_sqrt for iteration `n` (1-based), given the models conditioned
    /// on everything seen before this iteration.
    pub fn beta_sqrt_at(&self, models: &[GpModel], n: usize) -> Result<f64, AcqError> {
        if n == 0 {
            return Err(AcqError::BadIteration);
        }
        self.validate(models.len())?;
        match self {
            BetaSchedule::Fixed { beta_sqrt } => Ok(*beta_sqrt),
            BetaSchedule::Theoretical {
                smoothness_bounds,
                delta,
                noise_std,
            } => {
                let sum_b: f64 = smoothness_bounds.iter().sum();
                let total_info: f64 = models.iter().map(GpModel::mutual_information).sum();
                Ok(sum_b + 4.0 * noise_std * (1.0 + (1.0 / delta).ln() + total_info).sqrt())
            }
        }
    }
}

/// Random affine map from a low-dimensional box into the search domain,
/// for high-dimensional problems. The image coordinate for axis `i` is
/// `center_i + halfwidth_i * (A y)_i`, projected onto the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// dim_high rows of dim_low entries.
    matrix: Vec<Vec<f64>>,
}

impl Embedding {
    /// Standard-normal entries from the given stream.
    pub fn random(dim_high: usize, dim_low: usize, rng: &mut impl Rng) -> Self {
        assert!(dim_high >= 1 && dim_low >= 1, "dimensions must be positive");
        let matrix = (0..dim_high)
            .map(|_| (0..dim_low).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        Embedding { matrix }
    }

    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Self {
        assert!(!matrix.is_empty() && !matrix[0].is_empty());
        assert!(matrix.iter().all(|row| row.len() == matrix[0].len()));
        Embedding { matrix }
    }

    pub fn dim_low(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn dim_high(&self) -> usize {
        self.matrix.len()
    }

    /// The box the low-dimensional search runs over: [-sqrt(d), sqrt(d)]^d.
    pub fn low_domain(&self) -> Domain {
        let r = (self.dim_low() as f64).sqrt();
        Domain::from_intervals(&vec![(-r, r); self.dim_low()]).expect("nonempty box")
    }

    pub fn embed(&self, y: &[f64], domain: &Domain) -> Result<Vec<f64>, AcqError> {
        if y.len() != self.dim_low() {
            return Err(AcqError::EmbeddingDim {
                expected: self.dim_low(),
                got: y.len(),
            });
        }
        if domain.dim() != self.dim_high() {
            return Err(AcqError::EmbeddingDim {
                expected: self.dim_high(),
                got: domain.dim(),
            });
        }
        let center = domain.center();
        let widths = domain.widths();
        let w: Vec<f64> = self
            .matrix
            .iter()
            .zip(center.iter().zip(&widths))
            .map(|(row, (&c, &width))| {
                let proj: f64 = row.iter().zip(y).map(|(a, b)| a * b).sum();
                c + 0.5 * width * proj
            })
            .collect();
        Ok(domain.clip(&w))
    }
}
