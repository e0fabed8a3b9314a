//! Gaussian-process regression over the environment box.
//!
//! One model per predicate: zero prior mean, squared-exponential kernel,
//! homoscedastic noise. Conditioning is incremental (one Cholesky row per
//! observation) and each model tracks the mutual information its
//! measurements have accumulated, which feeds the confidence schedule.

mod chol;

pub use chol::{Cholesky, NotPositiveDefinite};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Domain;

/// Relative diagonal jitter applied before factorization.
pub const JITTER_SCALE: f64 = 1e-9;
/// Measurement-noise variance used when the configuration gives none.
pub const DEFAULT_NOISE_VARIANCE: f64 = 1e-4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GpError {
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{name} must be positive, got {value}")]
    BadHyperparameter { name: &'static str, value: f64 },
    #[error("covariance matrix lost positive definiteness when adding {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
}

/// Squared-exponential kernel with one lengthscale per input dimension:
/// `k(a,b) = sf2 * exp(-0.5 * sum_d ((a_d - b_d)/l_d)^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquaredExponential {
    signal_variance: f64,
    lengthscales: Vec<f64>,
}

impl SquaredExponential {
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>) -> Result<Self, GpError> {
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(GpError::BadHyperparameter {
                name: "signal variance",
                value: signal_variance,
            });
        }
        if lengthscales.is_empty() {
            return Err(GpError::DimMismatch {
                expected: 1,
                got: 0,
            });
        }
        for &l in &lengthscales {
            if !(l > 0.0 && l.is_finite()) {
                return Err(GpError::BadHyperparameter {
                    name: "lengthscale",
                    value: l,
                });
            }
        }
        Ok(SquaredExponential {
            signal_variance,
            lengthscales,
        })
    }

    /// Default kernel for a box: unit signal variance, lengthscale a
    /// quarter of each axis width.
    pub fn default_for(domain: &Domain) -> Self {
        let lengthscales = domain.widths().iter().map(|w| w / 4.0).collect();
        SquaredExponential {
            signal_variance: 1.0,
            lengthscales,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.dim());
        debug_assert_eq!(b.len(), self.dim());
        let mut s = 0.0;
        for ((&x, &y), &l) in a.iter().zip(b).zip(&self.lengthscales) {
            let z = (x - y) / l;
            s += z * z;
        }
        self.signal_variance * (-0.5 * s).exp()
    }
}

/// GP posterior state for one predicate.
///
/// Queries (`posterior`, `mutual_information`) take `&self` and may run
/// from many threads over a shared snapshot; `add_observation` takes
/// `&mut self` and advances to the next snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GpModelRepr", into = "GpModelRepr")]
pub struct GpModel {
    kernel: SquaredExponential,
    noise_variance: f64,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    chol: Cholesky,
    /// Cached (K + noise I)^-1 y.
    alpha: Vec<f64>,
    mutual_info: f64,
}

/// Serialized form: hyperparameters plus raw observations. Loading replays
/// the observations in order, rebuilding the factor and the
/// mutual-information accumulator exactly.
#[derive(Serialize, Deserialize)]
struct GpModelRepr {
    kernel: SquaredExponential,
    noise_variance: f64,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

impl TryFrom<GpModelRepr> for GpModel {
    type Error = GpError;
    fn try_from(repr: GpModelRepr) -> Result<Self, GpError> {
        if repr.inputs.len() != repr.outputs.len() {
            return Err(GpError::DimMismatch {
                expected: repr.inputs.len(),
                got: repr.outputs.len(),
            });
        }
        let mut model = GpModel::new(repr.kernel, repr.noise_variance)?;
        for (w, y) in repr.inputs.iter().zip(&repr.outputs) {
            model.add_observation(w, *y)?;
        }
        Ok(model)
    }
}

impl From<GpModel> for GpModelRepr {
    fn from(m: GpModel) -> Self {
        GpModelRepr {
            kernel: m.kernel,
            noise_variance: m.noise_variance,
            inputs: m.inputs,
            outputs: m.outputs,
        }
    }
}

impl GpModel {
    pub fn new(kernel: SquaredExponential, noise_variance: f64) -> Result<Self, GpError> {
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(GpError::BadHyperparameter {
                name: "noise variance",
                value: noise_variance,
            });
        }
        Ok(GpModel {
            kernel,
            noise_variance,
            inputs: Vec::new(),
            outputs: Vec::new(),
            chol: Cholesky::empty(),
            alpha: Vec::new(),
            mutual_info: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn kernel(&self) -> &SquaredExponential {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    fn check_input(&self, w: &[f64]) -> Result<(), GpError> {
        if w.len() != self.dim() {
            return Err(GpError::DimMismatch {
                expected: self.dim(),
                got: w.len(),
            });
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(GpError::NonFinite("input point"));
        }
        Ok(())
    }

    fn kernel_vec(&self, w: &[f64]) -> Vec<f64> {
        self.inputs.iter().map(|x| self.kernel.eval(x, w)).collect()
    }

    /// Posterior mean and variance at `w`; variance is clamped to >= 0.
    pub fn posterior(&self, w: &[f64]) -> Result<(f64, f64), GpError> {
        self.check_input(w)?;
        if self.inputs.is_empty() {
            return Ok((0.0, self.kernel.signal_variance));
        }
        let k = self.kernel_vec(w);
        let mean = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let c = self.chol.solve_lower(&k);
        let reduction: f64 = c.iter().map(|x| x * x).sum();
        let var = (self.kernel.signal_variance - reduction).max(0.0);
        Ok((mean, var))
    }

    /// Conditions on one more measurement, extending the factor by one row
    /// and accumulating the information gain of the measurement under the
    /// pre-update posterior.
    pub fn add_observation(&mut self, w: &[f64], y: f64) -> Result<(), GpError> {
        self.check_input(w)?;
        if !y.is_finite() {
            return Err(GpError::NonFinite("observation"));
        }
        let k = self.kernel_vec(w);
        let diag = self.kernel.signal_variance * (1.0 + JITTER_SCALE) + self.noise_variance;
        let pivot2 = self
            .chol
            .border(&k, diag)
            .map_err(|_| GpError::NotPositiveDefinite { point: w.to_vec() })?;
        // pivot2 - noise is the pre-update posterior variance at w under
        // the jittered covariance, so the accumulator telescopes to
        // ln det(I + K_n/noise) exactly.
        self.mutual_info += (pivot2 / self.noise_variance).ln();
        self.inputs.push(w.to_vec());
        self.outputs.push(y);
        self.alpha = self.chol.solve(&self.outputs);
        Ok(())
    }

    /// Accumulated information the noisy measurements carry about the
    /// latent function: `sum_j ln(1 + prior_var_j(w_j)/noise)`, one term
    /// per observation using the variance just before that observation.
    /// Equals `ln det(I + K_n/noise)` for the jittered covariance.
    pub fn mutual_information(&self) -> f64 {
        self.mutual_info
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_kernel(dim: usize) -> SquaredExponential {
        SquaredExponential::new(1.0, vec![1.0; dim]).unwrap()
    }

    #[test]
    fn prior_is_zero_mean_signal_variance() {
        let model = GpModel::new(unit_kernel(2), 0.01).unwrap();
        let (m, v) = model.posterior(&[0.3, -0.7]).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn one_observation_matches_the_scalar_closed_form() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        model.add_observation(&[0.5], 2.0).unwrap();
        let (m, v) = model.posterior(&[0.5]).unwrap();
        // mean = y k / (k + noise) = 2/1.01, var = 1 - 1/1.01
        assert_abs_diff_eq!(m, 2.0 / 1.01, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 1.0 - 1.0 / 1.01, epsilon = 1e-8);
    }

    #[test]
    fn far_points_revert_to_the_prior() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        model.add_observation(&[0.0], 5.0).unwrap();
        let (m, v) = model.posterior(&[50.0]).unwrap();
        assert_abs_diff_eq!(m, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_inputs_stay_positive_definite() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        model.add_observation(&[1.0], 0.5).unwrap();
        model.add_observation(&[1.0], 0.7).unwrap();
        assert_eq!(model.len(), 2);
        let (m, _) = model.posterior(&[1.0]).unwrap();
        // Two noisy measurements of the same point average out.
        assert!(m > 0.5 && m < 0.7);
    }

    #[test]
    fn near_noiseless_posterior_interpolates() {
        let mut model = GpModel::new(unit_kernel(1), 1e-10).unwrap();
        model.add_observation(&[0.2], 1.3).unwrap();
        model.add_observation(&[0.9], -0.4).unwrap();
        let (m, _) = model.posterior(&[0.2]).unwrap();
        assert_abs_diff_eq!(m, 1.3, epsilon = 1e-4);
        let (m, _) = model.posterior(&[0.9]).unwrap();
        assert_abs_diff_eq!(m, -0.4, epsilon = 1e-4);
    }

    #[test]
    fn variance_shrinks_as_data_arrives() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        let probe = [0.4];
        let mut last = model.posterior(&probe).unwrap().1;
        for (i, x) in [0.0, 0.3, 0.8, 0.5, 0.4].iter().enumerate() {
            model.add_observation(&[*x], (i as f64).sin()).unwrap();
            let v = model.posterior(&probe).unwrap().1;
            assert!(v <= last + 1e-8, "variance grew after point {i}");
            last = v;
        }
    }

    #[test]
    fn mutual_information_single_point() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        assert_eq!(model.mutual_information(), 0.0);
        model.add_observation(&[0.0], 1.0).unwrap();
        assert_abs_diff_eq!(model.mutual_information(), 101.0_f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn mutual_information_separated_points_add_up() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        model.add_observation(&[0.0], 1.0).unwrap();
        model.add_observation(&[100.0], -1.0).unwrap();
        assert_abs_diff_eq!(
            model.mutual_information(),
            2.0 * 101.0_f64.ln(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn mutual_information_matches_two_by_two_log_det() {
        let mut model = GpModel::new(unit_kernel(1), 0.01).unwrap();
        model.add_observation(&[0.0], 1.0).unwrap();
        model.add_observation(&[0.5], 2.0).unwrap();
        let k01 = (-0.5_f64 * 0.25).exp();
        // det(I + K/noise) for K = [[1, k01],[k01, 1]]
        let det = (1.0 + 100.0) * (1.0 + 100.0) - (100.0 * k01) * (100.0 * k01);
        assert_abs_diff_eq!(model.mutual_information(), det.ln(), epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_inputs_and_hyperparameters() {
        assert!(SquaredExponential::new(0.0, vec![1.0]).is_err());
        assert!(SquaredExponential::new(1.0, vec![1.0, -1.0]).is_err());
        assert!(GpModel::new(unit_kernel(1), 0.0).is_err());
        let mut model = GpModel::new(unit_kernel(2), 0.01).unwrap();
        assert!(matches!(
            model.posterior(&[1.0]),
            Err(GpError::DimMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            model.add_observation(&[1.0, f64::NAN], 0.0),
            Err(GpError::NonFinite(_))
        ));
        assert!(matches!(
            model.add_observation(&[1.0, 2.0], f64::INFINITY),
            Err(GpError::NonFinite(_))
        ));
    }

    #[test]
    fn serde_round_trip_replays_observations() {
        let mut model = GpModel::new(unit_kernel(2), 0.01).unwrap();
        model.add_observation(&[0.1, 0.2], 1.0).unwrap();
        model.add_observation(&[0.7, -0.3], -0.5).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: GpModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back.posterior(&[0.4, 0.0]), model.posterior(&[0.4, 0.0]));
        assert_eq!(back.mutual_information(), model.mutual_information());
    }

    #[test]
    fn default_kernel_uses_quarter_widths() {
        let domain = Domain::from_intervals(&[(0.0, 8.0), (-1.0, 1.0)]).unwrap();
        let k = SquaredExponential::default_for(&domain);
        assert_eq!(k.signal_variance(), 1.0);
        assert_eq!(k.lengthscales, vec![2.0, 0.5]);
        assert_eq!(k.eval(&[0.0, 0.0], &[0.0, 0.0]), 1.0);
    }
}
