//! Epigraph form of the regenerative power flow `max(P, γP)`.
//!
//! Per interval, each subsystem gets an affine auxiliary power
//! `z(x_p) = η₁ x_p + η₀` bounded below by both branches of the max at a
//! few points of the interval. Minimizing the integral of `z` then drives it
//! onto the envelope without a non-smooth term in the cost.

use serde::{Deserialize, Serialize};

use crate::ad::Scalar;
use crate::dynamics::{actuator_power, power, Control, CraneParams};
use crate::spatial::SpatialState;
use crate::transcription::{DiscretizedSolution, OcpSpec};

/// Coefficients of `z(x_p) = eta1 * x_p + eta0` on one interval.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxCoeffs {
    pub eta1: f64,
    pub eta0: f64,
}

impl AuxCoeffs {
    pub fn constant(c: f64) -> Self {
        Self { eta1: 0.0, eta0: c }
    }

    /// From the midpoint value `m` and half-rise `r` over `[xa, xb]`.
    pub fn from_centered(m: f64, r: f64, xa: f64, xb: f64) -> Self {
        let eta1 = 2.0 * r / (xb - xa);
        Self {
            eta1,
            eta0: m - eta1 * 0.5 * (xa + xb),
        }
    }

    /// Inverse of [`AuxCoeffs::from_centered`]: `(m, r)`.
    pub fn to_centered(&self, xa: f64, xb: f64) -> (f64, f64) {
        (aux_value(self, 0.5 * (xa + xb)), 0.5 * self.eta1 * (xb - xa))
    }
}

pub fn aux_value(c: &AuxCoeffs, x_p: f64) -> f64 {
    c.eta1 * x_p + c.eta0
}

/// Where along an interval the four inequalities are imposed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpigraphPoints {
    /// Both grid endpoints and the midpoint.
    #[default]
    ThreePoint,
    /// Both grid endpoints only.
    Endpoints,
}

impl EpigraphPoints {
    /// Positions as fractions of the interval.
    pub fn fractions(&self) -> &'static [f64] {
        match self {
            EpigraphPoints::ThreePoint => &[0.0, 0.5, 1.0],
            EpigraphPoints::Endpoints => &[0.0, 1.0],
        }
    }

    pub fn count(&self) -> usize {
        self.fractions().len()
    }
}

/// `(z_T - P_T, z_T - γ_T P_T, z_H - P_H, z_H - γ_H P_H)` for a spatial
/// state stored as a 10-array.
pub(crate) fn epigraph_rows<T: Scalar>(x: &[T], u: [T; 2], z_t: T, z_h: T, p: &CraneParams) -> [T; 4] {
    let (p_t, p_h) = power(x[1], x[4], x[5], x[6], x[7], u);
    [z_t - p_t, z_t - p_t * p.gamma_t, z_h - p_h, z_h - p_h * p.gamma_h]
}

/// Residuals of the four epigraph inequalities; all `>= 0` when feasible.
pub fn epigraph_constraints(s: &SpatialState, u: &Control, z_t: f64, z_h: f64, p: &CraneParams) -> [f64; 4] {
    epigraph_rows(&s.to_array(), [u.f_t, u.f_h], z_t, z_h, p)
}

/// Gap of one subsystem at one constraint point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointGap {
    pub interval: usize,
    pub x_p: f64,
    pub gap_t: f64,
    pub gap_h: f64,
    pub p_t: f64,
    pub p_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub points: Vec<PointGap>,
    /// Largest `min(z - P, z - γP)` over points and subsystems.
    pub max_gap: f64,
    /// Largest `|P|` seen at the constraint points.
    pub power_scale: f64,
    /// Number of point/subsystem pairs whose gap exceeds the tolerance.
    pub above_tolerance: usize,
}

/// Distance of the auxiliary powers from the envelope `max(P, γP)` at every
/// constraint point of a solved trajectory.
pub fn tightness_report(sol: &DiscretizedSolution, spec: &OcpSpec, tolerance: f64) -> TightnessReport {
    let grid = &sol.grid;
    let mut points = Vec::new();
    let mut max_gap = f64::NEG_INFINITY;
    let mut power_scale: f64 = 0.0;
    let mut above = 0;
    for k in 0..grid.k {
        let (a, b) = (sol.states[k].to_array(), sol.states[k + 1].to_array());
        let (xa, xb) = (grid.point(k), grid.point(k + 1));
        for &frac in spec.epigraph_points.fractions() {
            let mut s = [0.0; 10];
            for i in 0..10 {
                s[i] = a[i] + frac * (b[i] - a[i]);
            }
            let x_p = xa + frac * (xb - xa);
            let state = SpatialState::from_array(s);
            let pw = actuator_power(&state.to_time_state(x_p), &sol.controls[k]);
            let z_t = aux_value(&sol.aux_t[k], x_p);
            let z_h = aux_value(&sol.aux_h[k], x_p);
            let r = epigraph_constraints(&state, &sol.controls[k], z_t, z_h, &spec.params);
            let gap_t = r[0].min(r[1]);
            let gap_h = r[2].min(r[3]);
            for g in [gap_t, gap_h] {
                max_gap = max_gap.max(g);
                if g > tolerance {
                    above += 1;
                }
            }
            power_scale = power_scale.max(pw.p_t.abs()).max(pw.p_h.abs());
            points.push(PointGap {
                interval: k,
                x_p,
                gap_t,
                gap_h,
                p_t: pw.p_t,
                p_h: pw.p_h,
            });
        }
    }
    TightnessReport {
        points,
        max_gap,
        power_scale,
        above_tolerance: above,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::regen_power_flow;
    use rand::{Rng, SeedableRng};

    #[test]
    fn aux_value_examples() {
        let c = AuxCoeffs { eta1: 2.0, eta0: 0.1 };
        assert!((aux_value(&c, 0.5) - 1.1).abs() < 1e-15);
        assert_eq!(aux_value(&AuxCoeffs::constant(3.0), 0.77), 3.0);
        assert_eq!(aux_value(&AuxCoeffs { eta1: 1.0, eta0: 0.0 }, 0.0), 0.0);
    }

    fn moving(l_dot: f64) -> SpatialState {
        SpatialState {
            x_p_dot: 1.0,
            y_p: 0.5,
            l: 0.5,
            l_dot,
            ..Default::default()
        }
    }

    #[test]
    fn consuming_trolley_branch_tight() {
        let p = CraneParams::default();
        // P_T = 2 * 1
        let r = epigraph_constraints(&moving(0.0), &Control::new(2.0, 0.0), 2.0, 0.0, &p);
        assert!((r[0]).abs() < 1e-15);
        assert!((r[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn regenerating_hoist_branch_tight() {
        let p = CraneParams::default();
        // P_H = -4 * 0.5 = -2
        let r = epigraph_constraints(&moving(0.5), &Control::new(0.0, 4.0), 0.0, -1.6, &p);
        assert!((r[2] - 0.4).abs() < 1e-12);
        assert!(r[3].abs() < 1e-12);
    }

    #[test]
    fn envelope_value_is_feasible_and_tight() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let pw: f64 = rng.gen_range(-10.0..10.0);
            let gamma: f64 = rng.gen_range(0.0..=1.0);
            let p = CraneParams {
                gamma_t: gamma,
                gamma_h: gamma,
                ..Default::default()
            };
            // P_T = F_T at unit trolley speed, P_H = F_H with l_dot = -1
            let u = Control::new(pw, pw);
            let z = regen_power_flow(pw, gamma).unwrap();
            let r = epigraph_constraints(&moving(-1.0), &u, z, z, &p);
            for pair in [[r[0], r[1]], [r[2], r[3]]] {
                assert!(pair[0] >= 0.0 && pair[1] >= 0.0, "{pair:?}");
                assert_eq!(pair[0].min(pair[1]), 0.0);
            }
        }
    }

    #[test]
    fn centered_round_trip() {
        let c = AuxCoeffs { eta1: -3.0, eta0: 2.5 };
        let (m, r) = c.to_centered(0.9, 0.95);
        assert!((m - aux_value(&c, 0.925)).abs() < 1e-15);
        assert!((m + r - aux_value(&c, 0.95)).abs() < 1e-14);
        let back = AuxCoeffs::from_centered(m, r, 0.9, 0.95);
        assert!((back.eta1 - c.eta1).abs() < 1e-12 && (back.eta0 - c.eta0).abs() < 1e-12);
    }

    #[test]
    fn point_rules() {
        assert_eq!(EpigraphPoints::ThreePoint.count(), 3);
        assert_eq!(EpigraphPoints::Endpoints.fractions(), &[0.0, 1.0]);
    }
}
