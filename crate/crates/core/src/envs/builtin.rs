//! Built-in simulators. All are pure functions of the input vector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EnvError, Trajectory};

/// One-dimensional synthetic benchmark: a single sample exposing sin(w)
/// and cos(w) as channels, so affine predicate bindings can reproduce a
/// known kinked objective with an analytic minimum.
pub fn simulate_sincos(w: &[f64]) -> Result<Trajectory, EnvError> {
    if w.len() != 1 {
        return Err(EnvError::DimMismatch {
            expected: 1,
            got: w.len(),
        });
    }
    let mut channels = BTreeMap::new();
    channels.insert("sin".to_string(), vec![w[0].sin()]);
    channels.insert("cos".to_string(), vec![w[0].cos()]);
    Trajectory::new(vec![0.0], channels)
}

/// Feedback gains of the car's tracking controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarParams {
    pub k1: f64,
    pub k2: f64,
}

impl Default for CarParams {
    /// Calibrated so the nominal run (every sensor reading at 5.0) stops
    /// just short of the obstacle: phi = min_t(5 - x(t)) lands in (0, 0.1].
    fn default() -> Self {
        CarParams { k1: -1.0, k2: -2.5 }
    }
}

pub const CAR_DIM: usize = 100;
const CAR_DT: f64 = 0.1;
const CAR_X_INIT: f64 = 0.0;
const CAR_V_INIT: f64 = 3.0;
const CAR_ACCEL_LIMIT: f64 = 3.0;

/// Car approaching an obstacle at x = 5 under a noisy position sensor.
///
/// The input is the sensed obstacle position at each of the 100 control
/// steps. Double-integrator dynamics, forward Euler at dt = 0.1, from
/// x = 0 and v = 3; acceleration k1*(x - sensed) + k2*v clipped to
/// [-3, 3]. Channels x, v, a over 101 samples; the final a is the command
/// the controller would issue from the terminal state.
pub fn simulate_car(w: &[f64], params: &CarParams) -> Result<Trajectory, EnvError> {
    if w.len() != CAR_DIM {
        return Err(EnvError::DimMismatch {
            expected: CAR_DIM,
            got: w.len(),
        });
    }
    let control = |x: f64, v: f64, sensed: f64| -> f64 {
        (params.k1 * (x - sensed) + params.k2 * v).clamp(-CAR_ACCEL_LIMIT, CAR_ACCEL_LIMIT)
    };
    let mut x = CAR_X_INIT;
    let mut v = CAR_V_INIT;
    let mut xs = Vec::with_capacity(CAR_DIM + 1);
    let mut vs = Vec::with_capacity(CAR_DIM + 1);
    let mut accels = Vec::with_capacity(CAR_DIM + 1);
    let mut times = Vec::with_capacity(CAR_DIM + 1);
    for (step, &sensed) in w.iter().enumerate() {
        let a = control(x, v, sensed);
        times.push(step as f64 * CAR_DT);
        xs.push(x);
        vs.push(v);
        accels.push(a);
        x += CAR_DT * v;
        v += CAR_DT * a;
    }
    times.push(CAR_DIM as f64 * CAR_DT);
    xs.push(x);
    vs.push(v);
    accels.push(control(x, v, w[CAR_DIM - 1]));

    let mut channels = BTreeMap::new();
    channels.insert("x".to_string(), xs);
    channels.insert("v".to_string(), vs);
    channels.insert("a".to_string(), accels);
    Trajectory::new(times, channels)
}

/// The uncertainty box of the mountain-car benchmark:
/// (x_init, v_init, x_goal, v_max, p_max).
pub const MOUNTAIN_CAR_BOX: [(f64, f64); 5] = [
    (-0.6, -0.4),
    (-0.025, 0.025),
    (0.4, 0.6),
    (0.55, 0.75),
    (0.0005, 0.0025),
];

pub const MOUNTAIN_CAR_HORIZON: usize = 500;
const MC_GRAVITY: f64 = 0.0025;
const MC_X_MIN: f64 = -1.2;
const MC_X_MAX: f64 = 0.6;

/// Underpowered car in a valley with an energy-pumping controller.
///
/// w = (x_init, v_init, x_goal, v_max, p_max), each checked against the
/// benchmark box. Per step: a = sign(v) (full throttle with the current
/// motion, +1 from rest), v += p_max*a - 0.0025*cos(3x) clamped to
/// [-v_max, v_max], x += v clamped to [-1.2, 0.6] with v zeroed at the
/// left wall. Runs until x >= x_goal or 500 steps. Timestamps are step
/// indices; channels x, v, a, goal_margin = x - x_goal.
pub fn simulate_mountain_car(w: &[f64]) -> Result<Trajectory, EnvError> {
    if w.len() != 5 {
        return Err(EnvError::DimMismatch {
            expected: 5,
            got: w.len(),
        });
    }
    for (index, (&value, &(lower, upper))) in w.iter().zip(MOUNTAIN_CAR_BOX.iter()).enumerate() {
        if !(value >= lower && value <= upper) {
            return Err(EnvError::OutOfDomain {
                index,
                value,
                lower,
                upper,
            });
        }
    }
    let (x_init, v_init, x_goal, v_max, p_max) = (w[0], w[1], w[2], w[3], w[4]);
    let mut x = x_init;
    let mut v = v_init;
    let mut times = Vec::new();
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut actions = Vec::new();
    let mut margins = Vec::new();
    for step in 0..=MOUNTAIN_CAR_HORIZON {
        let a = if v >= 0.0 { 1.0 } else { -1.0 };
        times.push(step as f64);
        xs.push(x);
        vs.push(v);
        actions.push(a);
        margins.push(x - x_goal);
        if x >= x_goal || step == MOUNTAIN_CAR_HORIZON {
            break;
        }
        v = (v + p_max * a - MC_GRAVITY * (3.0 * x).cos()).clamp(-v_max, v_max);
        x += v;
        if x < MC_X_MIN {
            x = MC_X_MIN;
            v = 0.0;
        } else if x > MC_X_MAX {
            x = MC_X_MAX;
        }
    }

    let mut channels = BTreeMap::new();
    channels.insert("x".to_string(), xs);
    channels.insert("v".to_string(), vs);
    channels.insert("a".to_string(), actions);
    channels.insert("goal_margin".to_string(), margins);
    Trajectory::new(times, channels)
}
