//! Cart-pendulum crane with a hoisted point-mass payload.
//!
//! Vertical coordinates (`y_p`, `l`) point downward from the trolley rail, so
//! gravity enters the accelerations with a positive sign and the payload
//! potential energy is `-m2 g y_p`.

use serde::{Deserialize, Serialize};

use crate::ad::Scalar;
use crate::error::{check_range, Error, Result};

/// Physical configuration of the crane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CraneParams {
    /// Trolley mass (kg).
    pub m1: f64,
    /// Payload mass (kg).
    pub m2: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Regeneration efficiency of the trolley drive.
    pub gamma_t: f64,
    /// Regeneration efficiency of the hoist.
    pub gamma_h: f64,
}

impl Default for CraneParams {
    fn default() -> Self {
        Self {
            m1: 1.0,
            m2: 0.5,
            g: 9.81,
            gamma_t: 0.8,
            gamma_h: 0.8,
        }
    }
}

impl CraneParams {
    pub fn new(m1: f64, m2: f64, g: f64, gamma_t: f64, gamma_h: f64) -> Result<Self> {
        let p = Self {
            m1,
            m2,
            g,
            gamma_t,
            gamma_h,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("m1", self.m1, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("m2", self.m2, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("g", self.g, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("gamma_t", self.gamma_t, 0.0, 1.0)?;
        check_range("gamma_h", self.gamma_h, 0.0, 1.0)
    }

    /// Rope tension that holds the payload still at zero sway.
    pub fn hover_force(&self) -> f64 {
        self.m2 * self.g
    }
}

/// State in the time domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeState {
    pub x_p: f64,
    pub x_p_dot: f64,
    pub y_p: f64,
    pub y_p_dot: f64,
    pub l: f64,
    pub l_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl TimeState {
    pub const DIM: usize = 8;

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.x_p,
            self.x_p_dot,
            self.y_p,
            self.y_p_dot,
            self.l,
            self.l_dot,
            self.theta,
            self.theta_dot,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            x_p: a[0],
            x_p_dot: a[1],
            y_p: a[2],
            y_p_dot: a[3],
            l: a[4],
            l_dot: a[5],
            theta: a[6],
            theta_dot: a[7],
        }
    }

    /// Payload hanging still below the trolley at rope length `l`.
    pub fn hanging(x_p: f64, l: f64) -> Self {
        Self {
            x_p,
            y_p: l,
            l,
            ..Default::default()
        }
    }
}

/// Trolley drive force and hoist rope tension (N).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub f_t: f64,
    pub f_h: f64,
}

impl Control {
    pub fn new(f_t: f64, f_h: f64) -> Self {
        Self { f_t, f_h }
    }

    pub fn hover(p: &CraneParams) -> Self {
        Self::new(0.0, p.hover_force())
    }
}

/// Mechanical power delivered by each actuator (W).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerPair {
    pub p_t: f64,
    pub p_h: f64,
}

impl PowerPair {
    pub fn total(&self) -> f64 {
        self.p_t + self.p_h
    }
}

/// Accelerations of the eight time-domain states. Entries `1..8` of the
/// returned array only read entries `1..8` of `x`.
pub(crate) fn accelerations<T: Scalar>(x: &[T], u: [T; 2], p: &CraneParams) -> [T; 8] {
    let (x2, x4, x5, x6, x7, x8) = (x[1], x[3], x[4], x[5], x[6], x[7]);
    let (u1, u2) = (u[0], u[1]);
    let (s, c) = (x7.sin(), x7.cos());
    let g = p.g;
    let trolley = (u1 + u2 * s) / p.m1;
    [
        x2,
        -(u2 * s) / p.m2,
        x4,
        -(u2 * c) / p.m2 + g,
        x6,
        x5 * x8 * x8 + c * g - u2 / p.m2 - s * trolley,
        x8,
        -(x6 * x8 * 2.0 + s * g + c * trolley) / x5,
    ]
}

/// Trolley velocity from payload velocity, rope rate and sway rate.
pub(crate) fn trolley_velocity<T: Scalar>(x_p_dot: T, l: T, l_dot: T, theta: T, theta_dot: T) -> T {
    x_p_dot - theta.sin() * l_dot - l * theta.cos() * theta_dot
}

/// `(P_T, P_H)` for the given kinematics and forces.
pub(crate) fn power<T: Scalar>(x_p_dot: T, l: T, l_dot: T, theta: T, theta_dot: T, u: [T; 2]) -> (T, T) {
    let p_t = u[0] * trolley_velocity(x_p_dot, l, l_dot, theta, theta_dot);
    let p_h = -(u[1] * l_dot);
    (p_t, p_h)
}

/// Right-hand side of the time-domain equations of motion.
pub fn time_derivatives(state: &TimeState, u: &Control, p: &CraneParams) -> Result<TimeState> {
    if !(state.l > 0.0) {
        return Err(Error::NonPositiveRope(state.l));
    }
    let d = accelerations(&state.to_array(), [u.f_t, u.f_h], p);
    Ok(TimeState::from_array(d))
}

/// Trolley position and velocity `(x_T, ẋ_T)`.
pub fn trolley_kinematics(state: &TimeState) -> (f64, f64) {
    let x_t = state.x_p - state.theta.sin() * state.l;
    let v_t = trolley_velocity(state.x_p_dot, state.l, state.l_dot, state.theta, state.theta_dot);
    (x_t, v_t)
}

pub fn actuator_power(state: &TimeState, u: &Control) -> PowerPair {
    let (_, v_t) = trolley_kinematics(state);
    PowerPair {
        p_t: u.f_t * v_t,
        p_h: -u.f_h * state.l_dot,
    }
}

/// Power drawn from the supply when a fraction `gamma` of negative
/// (braking) power is recovered: `max(P, γP)`.
pub fn regen_power_flow(power: f64, gamma: f64) -> Result<f64> {
    check_range("gamma", gamma, 0.0, 1.0)?;
    Ok(power.max(gamma * power))
}

/// Kinetic energy of trolley and payload plus payload potential energy.
pub fn mechanical_energy(state: &TimeState, p: &CraneParams) -> f64 {
    let (_, v_t) = trolley_kinematics(state);
    let kinetic = 0.5 * p.m1 * v_t * v_t + 0.5 * p.m2 * (state.x_p_dot * state.x_p_dot + state.y_p_dot * state.y_p_dot);
    kinetic - p.m2 * p.g * state.y_p
}
