//! Multi-start derivative-free minimization over a box.
//!
//! The composed confidence bound has min/max kinks, so local refinement
//! uses Nelder-Mead rather than anything gradient-based. Candidate starts
//! are drawn sequentially from the caller's stream and evaluated in
//! parallel; the reduction is by candidate index, so the result does not
//! depend on worker scheduling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AcqError;
use crate::domain::Domain;
use crate::exec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Uniform random starts per minimization.
    pub restarts: usize,
    /// Objective-evaluation budget of each local refinement.
    pub local_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 50,
            local_evals: 200,
        }
    }
}

/// Minimizes `objective` over the box: `restarts` uniform samples, then
/// Nelder-Mead from the best tenth of them. Returns the best point and
/// value seen anywhere, raw samples included. Non-finite objective values
/// discard the candidate; ties break toward the earliest candidate.
pub fn minimize_acquisition<F>(
    objective: &F,
    domain: &Domain,
    config: &OptimizerConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, f64), AcqError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if config.restarts == 0 {
        return Err(AcqError::NoRestarts);
    }
    let candidates = domain.sample_uniform_n(rng, config.restarts);
    let values = exec::map_collect(candidates.len(), |i| objective(&candidates[i]));

    let mut finite: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    if finite.is_empty() {
        return Err(AcqError::AllNonFinite);
    }
    finite.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));

    let k = config.restarts.div_ceil(10).min(finite.len());
    let refined = exec::map_collect(k, |j| {
        nelder_mead(objective, domain, &candidates[finite[j]], config.local_evals)
    });

    let best_raw = finite[0];
    let mut best_w = candidates[best_raw].clone();
    let mut best_v = values[best_raw];
    for (w, v) in refined {
        if v < best_v {
            best_v = v;
            best_w = w;
        }
    }
    Ok((best_w, best_v))
}

struct Tracker<'a, F> {
    objective: &'a F,
    domain: &'a Domain,
    best_w: Vec<f64>,
    best_v: f64,
    evals_left: usize,
}

impl<F: Fn(&[f64]) -> f64> Tracker<'_, F> {
    /// Projects onto the box, evaluates, and records the incumbent.
    /// Returns None once the budget is spent; non-finite values count as
    /// +inf so the search simply moves away from them.
    fn eval(&mut self, w: &[f64]) -> Option<f64> {
        if self.evals_left == 0 {
            return None;
        }
        self.evals_left -= 1;
        let p = self.domain.clip(w);
        let raw = (self.objective)(&p);
        let v = if raw.is_finite() { raw } else { f64::INFINITY };
        if v < self.best_v {
            self.best_v = v;
            self.best_w = p;
        }
        Some(v)
    }
}

/// Standard Nelder-Mead (reflect 1, expand 2, contract 0.5, shrink 0.5)
/// with an axis-aligned initial simplex of 5% box width per dimension.
/// Simplex coordinates roam freely; every evaluation is projected onto
/// the box first.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: &F,
    domain: &Domain,
    start: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let dim = domain.dim();
    let widths = domain.widths();
    let mut tracker = Tracker {
        objective,
        domain,
        best_w: domain.clip(start),
        best_v: f64::INFINITY,
        evals_left: max_evals,
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    for i in 0..=dim {
        let mut x = start.to_vec();
        if i > 0 {
            let d = i - 1;
            let h = 0.05 * widths[d];
            x[d] += if x[d] + h <= domain.upper()[d] { h } else { -h };
        }
        match tracker.eval(&x) {
            Some(v) => simplex.push((x, v)),
            None => return (tracker.best_w, tracker.best_v),
        }
    }

    loop {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let spread = simplex[dim].1 - simplex[0].1;
        if spread <= 1e-12 * (1.0 + simplex[0].1.abs()) {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let xr = toward(1.0);
        let Some(fr) = tracker.eval(&xr) else { break };
        if fr < simplex[0].1 {
            let xe = toward(2.0);
            match tracker.eval(&xe) {
                Some(fe) if fe < fr => simplex[dim] = (xe, fe),
                Some(_) => simplex[dim] = (xr, fr),
                None => {
                    simplex[dim] = (xr, fr);
                    break;
                }
            }
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let (xc, threshold) = if fr < worst.1 {
                (toward(0.5), fr)
            } else {
                (toward(-0.5), worst.1)
            };
            match tracker.eval(&xc) {
                Some(fc) if fc < threshold => simplex[dim] = (xc, fc),
                Some(_) => {
                    // Shrink everything toward the best vertex.
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let xs: Vec<f64> = best
                            .iter()
                            .zip(&vertex.0)
                            .map(|(&b, &v)| b + 0.5 * (v - b))
                            .collect();
                        match tracker.eval(&xs) {
                            Some(fs) => *vertex = (xs, fs),
                            None => return (tracker.best_w, tracker.best_v),
                        }
                    }
                }
                None => break,
            }
        }
    }
    (tracker.best_w, tracker.best_v)
}
