//! Environments: simulators, trajectories, and predicate bindings.
//!
//! A simulator maps an environment vector to a trajectory of named
//! channels; predicate bindings turn trajectories into the real-valued
//! predicate inputs of the specification. External simulators speak a
//! line-delimited protocol and may skip the trajectory, returning
//! predicate values directly.

mod builtin;
mod external;

pub use builtin::{
    simulate_car, simulate_mountain_car, simulate_sincos, CarParams, CAR_DIM, MOUNTAIN_CAR_BOX,
    MOUNTAIN_CAR_HORIZON,
};
pub use external::{
    ExternalSimulator, Handshake, ProtocolError, SimResponse, WireMode, DEFAULT_TIMEOUT,
    PROTOCOL_VERSION,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("environment expects a {expected}-dim input, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("parameter {index} = {value} outside [{lower}, {upper}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("trajectory invalid: {0}")]
    BadTrajectory(String),
    #[error("trajectory has no channel `{0}`")]
    MissingChannel(String),
    #[error("no predicate binding named `{0}`")]
    UnboundPredicate(String),
    #[error("predicate `{name}`: {detail}")]
    BadFunctional { name: String, detail: String },
    #[error("external simulator: {0}")]
    Protocol(#[from] ProtocolError),
}

/// Time-indexed named channels from one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr", into = "TrajectoryRepr")]
pub struct Trajectory {
    times: Vec<f64>,
    channels: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRepr {
    t: Vec<f64>,
    channels: BTreeMap<String, Vec<f64>>,
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = EnvError;
    fn try_from(repr: TrajectoryRepr) -> Result<Self, EnvError> {
        Trajectory::new(repr.t, repr.channels)
    }
}

impl From<Trajectory> for TrajectoryRepr {
    fn from(t: Trajectory) -> Self {
        TrajectoryRepr {
            t: t.times,
            channels: t.channels,
        }
    }
}

impl Trajectory {
    /// Validates: nonempty strictly increasing timestamps, every channel
    /// finite and of matching length.
    pub fn new(times: Vec<f64>, channels: BTreeMap<String, Vec<f64>>) -> Result<Self, EnvError> {
        if times.is_empty() {
            return Err(EnvError::BadTrajectory("no timestamps".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(EnvError::BadTrajectory("non-finite timestamp".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EnvError::BadTrajectory(
                "timestamps not strictly increasing".into(),
            ));
        }
        for (name, values) in &channels {
            if values.len() != times.len() {
                return Err(EnvError::BadTrajectory(format!(
                    "channel `{name}` has {} samples for {} timestamps",
                    values.len(),
                    times.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(EnvError::BadTrajectory(format!(
                    "channel `{name}` contains a non-finite value"
                )));
            }
        }
        Ok(Trajectory { times, channels })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, name: &str) -> Result<&[f64], EnvError> {
        self.channels
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| EnvError::MissingChannel(name.to_string()))
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }
}

/// Pointwise affine view of a channel: `scale * transform(x_t) + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelExpr {
    pub channel: String,
    #[serde(default)]
    pub transform: Transform,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    Identity,
    Abs,
    /// |x_t - x_0|: deviation from the channel's initial value.
    AbsDevFromInitial,
}

impl ChannelExpr {
    pub fn plain(channel: &str) -> Self {
        ChannelExpr {
            channel: channel.to_string(),
            transform: Transform::Identity,
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn affine(channel: &str, scale: f64, offset: f64) -> Self {
        ChannelExpr {
            channel: channel.to_string(),
            transform: Transform::Identity,
            scale,
            offset,
        }
    }

    fn series(&self, trajectory: &Trajectory) -> Result<Vec<f64>, EnvError> {
        let raw = trajectory.channel(&self.channel)?;
        let x0 = raw[0];
        Ok(raw
            .iter()
            .map(|&x| {
                let t = match self.transform {
                    Transform::Identity => x,
                    Transform::Abs => x.abs(),
                    Transform::AbsDevFromInitial => (x - x0).abs(),
                };
                self.scale * t + self.offset
            })
            .collect())
    }
}

/// Trajectory functional producing one predicate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    MinOverTime { expr: ChannelExpr },
    MaxOverTime { expr: ChannelExpr },
    /// Value of the expression at the last timestamp.
    Terminal { expr: ChannelExpr },
    /// Total variation: sum of |expr(t+1) - expr(t)|.
    AccumulatedAbsDelta { expr: ChannelExpr },
    /// Margin on the first time the expression reaches `threshold`:
    /// (t_max - t_hit)/t_max with t_hit the hitting time, or the final
    /// timestamp when the threshold is never reached. Positive iff the
    /// threshold was hit before t_max.
    TimeToThreshold {
        expr: ChannelExpr,
        threshold: f64,
        t_max: f64,
    },
    /// (bound - max_t expr(t))/bound: positive iff the expression stays
    /// strictly below `bound`, normalized by it. Requires bound > 0.
    BoundMargin { expr: ChannelExpr, bound: f64 },
}

impl Functional {
    pub fn eval(&self, trajectory: &Trajectory) -> Result<f64, EnvError> {
        match self {
            Functional::MinOverTime { expr } => Ok(expr
                .series(trajectory)?
                .into_iter()
                .fold(f64::INFINITY, f64::min)),
            Functional::MaxOverTime { expr } => Ok(expr
                .series(trajectory)?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max)),
            Functional::Terminal { expr } => {
                Ok(*expr.series(trajectory)?.last().expect("nonempty"))
            }
            Functional::AccumulatedAbsDelta { expr } => Ok(expr
                .series(trajectory)?
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .sum()),
            Functional::TimeToThreshold {
                expr,
                threshold,
                t_max,
            } => {
                let series = expr.series(trajectory)?;
                let times = trajectory.times();
                let t_hit = series
                    .iter()
                    .position(|&v| v >= *threshold)
                    .map(|i| times[i])
                    .unwrap_or(*times.last().expect("nonempty"));
                Ok((t_max - t_hit) / t_max)
            }
            Functional::BoundMargin { expr, bound } => {
                let peak = expr
                    .series(trajectory)?
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok((bound - peak) / bound)
            }
        }
    }

    /// Static validation of the functional's own parameters.
    pub fn validate(&self, name: &str) -> Result<(), EnvError> {
        let bad = |detail: String| EnvError::BadFunctional {
            name: name.to_string(),
            detail,
        };
        match self {
            Functional::TimeToThreshold { t_max, .. } if !(*t_max > 0.0) => {
                Err(bad(format!("t_max must be positive, got {t_max}")))
            }
            Functional::BoundMargin { bound, .. } if !(*bound > 0.0) => {
                Err(bad(format!("bound must be positive, got {bound}")))
            }
            _ => Ok(()),
        }
    }
}

/// Names a predicate and how to compute it from a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateBinding {
    pub name: String,
    pub functional: Functional,
}

/// One evaluated environment point: predicate values in the caller's
/// requested order, plus the trajectory when the simulator produced one.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub mu: Vec<f64>,
    pub trajectory: Option<Trajectory>,
}

/// A simulator backend.
pub enum Simulator {
    SinCos,
    Car(CarParams),
    MountainCar,
    External(ExternalSimulator),
}

impl Simulator {
    /// Input dimension the backend expects, when it is fixed by the kind.
    pub fn dim(&self) -> usize {
        match self {
            Simulator::SinCos => 1,
            Simulator::Car(_) => 100,
            Simulator::MountainCar => 5,
            Simulator::External(sim) => sim.handshake().dim,
        }
    }
}

/// Simulator plus predicate bindings: evaluates all predicates of a
/// specification at one environment point.
pub struct Environment {
    simulator: Simulator,
    bindings: Vec<PredicateBinding>,
}

impl Environment {
    pub fn new(simulator: Simulator, bindings: Vec<PredicateBinding>) -> Result<Self, EnvError> {
        for b in &bindings {
            b.functional.validate(&b.name)?;
        }
        Ok(Environment {
            simulator,
            bindings,
        })
    }

    pub fn dim(&self) -> usize {
        self.simulator.dim()
    }

    /// Checks every name can be produced: a binding exists, or the
    /// external simulator declared it at handshake.
    pub fn check_bindings(&self, predicate_names: &[String]) -> Result<(), EnvError> {
        for name in predicate_names {
            let bound = self.bindings.iter().any(|b| &b.name == name);
            let external = match &self.simulator {
                Simulator::External(sim) if sim.handshake().mode == WireMode::Mu => {
                    sim.handshake().predicates.contains(name)
                }
                _ => false,
            };
            if !bound && !external {
                return Err(EnvError::UnboundPredicate(name.clone()));
            }
        }
        Ok(())
    }

    /// Runs the simulator at `w` and evaluates `predicate_names` in order.
    pub fn evaluate(&mut self, w: &[f64], predicate_names: &[String]) -> Result<Evaluation, EnvError> {
        match &mut self.simulator {
            Simulator::SinCos => {
                let traj = simulate_sincos(w)?;
                self.from_trajectory(traj, predicate_names)
            }
            Simulator::Car(params) => {
                let traj = simulate_car(w, params)?;
                self.from_trajectory(traj, predicate_names)
            }
            Simulator::MountainCar => {
                let traj = simulate_mountain_car(w)?;
                self.from_trajectory(traj, predicate_names)
            }
            Simulator::External(sim) => match sim.simulate(w)? {
                SimResponse::Trajectory(traj) => self.from_trajectory(traj, predicate_names),
                SimResponse::Mu(map) => {
                    let mut mu = Vec::with_capacity(predicate_names.len());
                    for name in predicate_names {
                        match map.get(name) {
                            Some(&v) => mu.push(v),
                            None => return Err(EnvError::UnboundPredicate(name.clone())),
                        }
                    }
                    Ok(Evaluation {
                        mu,
                        trajectory: None,
                    })
                }
            },
        }
    }

    fn from_trajectory(
        &self,
        trajectory: Trajectory,
        predicate_names: &[String],
    ) -> Result<Evaluation, EnvError> {
        let mut mu = Vec::with_capacity(predicate_names.len());
        for name in predicate_names {
            let binding = self
                .bindings
                .iter()
                .find(|b| &b.name == name)
                .ok_or_else(|| EnvError::UnboundPredicate(name.clone()))?;
            mu.push(binding.functional.eval(&trajectory)?);
        }
        Ok(Evaluation {
            mu,
            trajectory: Some(trajectory),
        })
    }
}
