//! Axis-aligned box of environment parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DomainError {
    #[error("domain must have at least one dimension")]
    Empty,
    #[error("dimension {dim}: lower bound {lower} is not below upper bound {upper}")]
    BadInterval { dim: usize, lower: f64, upper: f64 },
    #[error("dimension {dim}: bound is not finite")]
    NonFinite { dim: usize },
}

/// Search space for environment parameters: a product of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DomainRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<DomainRepr> for Domain {
    type Error = DomainError;
    fn try_from(repr: DomainRepr) -> Result<Self, DomainError> {
        Domain::new(repr.lower, repr.upper)
    }
}

impl From<Domain> for DomainRepr {
    fn from(d: Domain) -> Self {
        DomainRepr {
            lower: d.lower,
            upper: d.upper,
        }
    }
}

impl Domain {
    /// Validates bounds: equal lengths, finite, strictly ordered per axis.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, DomainError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(DomainError::Empty);
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(DomainError::NonFinite { dim });
            }
            if lo >= hi {
                return Err(DomainError::BadInterval {
                    dim,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Domain { lower, upper })
    }

    /// Convenience for a box with one `(lower, upper)` pair per axis.
    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self, DomainError> {
        let (lower, upper) = intervals.iter().copied().unzip();
        Domain::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.dim()
            && w.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&lo, &hi))| x >= lo && x <= hi)
    }

    /// Projects a point onto the box, coordinate by coordinate.
    pub fn clip(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.dim(), "point dimension mismatch");
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&lo, &hi))| x.clamp(lo, hi))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| hi - lo)
            .collect()
    }

    /// One point, uniform over the box.
    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| rng.random_range(lo..=hi))
            .collect()
    }

    /// `n` independent uniform points, drawn sequentially from `rng`.
    pub fn sample_uniform_n(&self, rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_uniform(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_bounds() {
        assert_eq!(Domain::new(vec![], vec![]), Err(DomainError::Empty));
        assert_eq!(
            Domain::new(vec![0.0], vec![1.0, 2.0]),
            Err(DomainError::Empty)
        );
        assert_eq!(
            Domain::new(vec![1.0], vec![1.0]),
            Err(DomainError::BadInterval {
                dim: 0,
                lower: 1.0,
                upper: 1.0
            })
        );
        assert_eq!(
            Domain::new(vec![f64::NAN], vec![1.0]),
            Err(DomainError::NonFinite { dim: 0 })
        );
    }

    #[test]
    fn contains_and_clip() {
        let d = Domain::from_intervals(&[(0.0, 1.0), (-2.0, 2.0)]).unwrap();
        assert!(d.contains(&[0.0, 2.0]));
        assert!(!d.contains(&[1.5, 0.0]));
        assert!(!d.contains(&[0.5]));
        assert_eq!(d.clip(&[1.5, -3.0]), vec![1.0, -2.0]);
        assert_eq!(d.clip(&[0.5, 0.5]), vec![0.5, 0.5]);
    }

    #[test]
    fn center_and_widths() {
        let d = Domain::from_intervals(&[(0.0, 1.0), (-2.0, 2.0)]).unwrap();
        assert_eq!(d.center(), vec![0.5, 0.0]);
        assert_eq!(d.widths(), vec![1.0, 4.0]);
    }

    #[test]
    fn uniform_samples_stay_inside() {
        let d = Domain::from_intervals(&[(0.0, 1.0), (-2.0, 2.0), (10.0, 11.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for w in d.sample_uniform_n(&mut rng, 200) {
            assert!(d.contains(&w));
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = Domain::from_intervals(&[(0.0, 1.0), (-2.0, 2.0)]).unwrap();
        let a = d.sample_uniform_n(&mut ChaCha8Rng::seed_from_u64(3), 5);
        let b = d.sample_uniform_n(&mut ChaCha8Rng::seed_from_u64(3), 5);
        assert_eq!(a, b);
    }

    #[test]
    fn serde_round_trip_validates() {
        let d = Domain::from_intervals(&[(0.0, 1.0)]).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        let back: Domain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"lower":[2.0],"upper":[1.0]}"#;
        assert!(serde_json::from_str::<Domain>(bad).is_err());
    }
}
