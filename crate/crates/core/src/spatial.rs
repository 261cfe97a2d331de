//! Dynamics with the payload position `x_p` as independent variable.
//!
//! With `x₂ = ẋ_p`, every state obeys `x₂ · dx/dx_p = f(x, u)`. The residual
//! form is kept throughout so that nothing ever divides by `x₂`, which
//! vanishes at rest-to-rest endpoints.

use serde::{Deserialize, Serialize};

use crate::ad::Scalar;
use crate::dynamics::{accelerations, Control, CraneParams, TimeState};
use crate::error::{check_range, Error, Result};

/// State in the spatial formulation: time, the seven non-position
/// time-domain states, and the cumulative trolley and hoist energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialState {
    pub t: f64,
    pub x_p_dot: f64,
    pub y_p: f64,
    pub y_p_dot: f64,
    pub l: f64,
    pub l_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub e_t: f64,
    pub e_h: f64,
}

impl SpatialState {
    pub const DIM: usize = 10;

    pub fn to_array(&self) -> [f64; 10] {
        [
            self.t,
            self.x_p_dot,
            self.y_p,
            self.y_p_dot,
            self.l,
            self.l_dot,
            self.theta,
            self.theta_dot,
            self.e_t,
            self.e_h,
        ]
    }

    pub fn from_array(a: [f64; 10]) -> Self {
        Self {
            t: a[0],
            x_p_dot: a[1],
            y_p: a[2],
            y_p_dot: a[3],
            l: a[4],
            l_dot: a[5],
            theta: a[6],
            theta_dot: a[7],
            e_t: a[8],
            e_h: a[9],
        }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut a = [0.0; 10];
        a.copy_from_slice(&s[..10]);
        Self::from_array(a)
    }

    /// Time-domain state at payload position `x_p`.
    pub fn to_time_state(&self, x_p: f64) -> TimeState {
        TimeState {
            x_p,
            x_p_dot: self.x_p_dot,
            y_p: self.y_p,
            y_p_dot: self.y_p_dot,
            l: self.l,
            l_dot: self.l_dot,
            theta: self.theta,
            theta_dot: self.theta_dot,
        }
    }

    pub fn from_time_state(s: &TimeState, t: f64, e_t: f64, e_h: f64) -> Self {
        Self {
            t,
            x_p_dot: s.x_p_dot,
            y_p: s.y_p,
            y_p_dot: s.y_p_dot,
            l: s.l,
            l_dot: s.l_dot,
            theta: s.theta,
            theta_dot: s.theta_dot,
            e_t,
            e_h,
        }
    }
}

/// Uniform grid of `k` intervals on `[x_p0, x_pf]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_p0: f64,
    pub x_pf: f64,
    pub k: usize,
}

impl SpatialGrid {
    pub fn new(x_p0: f64, x_pf: f64, k: usize) -> Result<Self> {
        let grid = Self { x_p0, x_pf, k };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::GridTooCoarse(self.k));
        }
        if !(self.x_pf > self.x_p0) || !self.x_p0.is_finite() || !self.x_pf.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need finite x_p0 < x_pf, got [{}, {}]",
                self.x_p0, self.x_pf
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_pf - self.x_p0) / self.k as f64
    }

    /// Position of grid point `i` (`0..=k`).
    pub fn point(&self, i: usize) -> f64 {
        if i == self.k {
            self.x_pf
        } else {
            self.x_p0 + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.k).map(|i| self.point(i)).collect()
    }

    pub fn midpoint(&self, interval: usize) -> f64 {
        0.5 * (self.point(interval) + self.point(interval + 1))
    }

    /// Interval containing `x_p`, clamped to the grid.
    pub fn interval_of(&self, x_p: f64) -> usize {
        let i = ((x_p - self.x_p0) / self.dx()).floor();
        (i.max(0.0) as usize).min(self.k - 1)
    }
}

/// `f` in `x₂ x′ = f` for a state stored as a 10-array.
pub(crate) fn spatial_f<T: Scalar>(x: &[T], u: [T; 2], z_t: T, z_h: T, p: &CraneParams) -> [T; 10] {
    let a = accelerations(x, u, p);
    [T::cst(1.0), a[1], a[2], a[3], a[4], a[5], a[6], a[7], z_t, z_h]
}

/// Right-hand side of the spatial dynamics in implicit form.
pub fn spatial_rhs(s: &SpatialState, u: &Control, z_t: f64, z_h: f64, p: &CraneParams) -> Result<[f64; 10]> {
    if !(s.l > 0.0) {
        return Err(Error::NonPositiveRope(s.l));
    }
    Ok(spatial_f(&s.to_array(), [u.f_t, u.f_h], z_t, z_h, p))
}

/// `x₂ · s′ − f`; zero exactly when the spatial dynamics hold at this point.
pub fn implicit_residual(
    s: &SpatialState,
    s_prime: &[f64; 10],
    u: &Control,
    z_t: f64,
    z_h: f64,
    p: &CraneParams,
) -> Result<[f64; 10]> {
    let f = spatial_rhs(s, u, z_t, z_h, p)?;
    let x2 = s.x_p_dot;
    let mut r = [0.0; 10];
    for i in 0..10 {
        r[i] = x2 * s_prime[i] - f[i];
    }
    Ok(r)
}

/// Weighted time/energy cost evaluated on the final state.
pub fn mayer_objective(s_final: &SpatialState, alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, 0.0, 1.0)?;
    Ok(alpha * s_final.t + (1.0 - alpha) * (s_final.e_t + s_final.e_h))
}
