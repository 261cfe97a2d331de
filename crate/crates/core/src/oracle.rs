//! Time-domain check of a solved trajectory.
//!
//! Controls are held over each spatial interval and switched at the solved
//! times of the grid points. The equations of motion are integrated with
//! classical RK4, and clearance and energy are recomputed from the simulated
//! motion alone: no auxiliary powers, no corridor discretization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{actuator_power, regen_power_flow, time_derivatives, Control, CraneParams, PowerPair, TimeState};
use crate::error::{Error, Result};
use crate::transcription::{DiscretizedSolution, OcpSpec};

/// States larger than this in magnitude count as divergence.
const BLOW_UP: f64 = 1e6;

/// A control signal over time.
pub trait ControlInput {
    fn at(&self, t: f64) -> Control;

    /// Limit from the left at `t`; differs from [`ControlInput::at`] only at jumps.
    fn left(&self, t: f64) -> Control {
        self.at(t)
    }

    /// Times where the signal may jump. Integration steps end there.
    fn breakpoints(&self) -> &[f64] {
        &[]
    }
}

impl<F: Fn(f64) -> Control> ControlInput for F {
    fn at(&self, t: f64) -> Control {
        self(t)
    }
}

/// Piecewise-constant controls: `controls[i]` on `[times[i], times[i + 1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub times: Vec<f64>,
    pub controls: Vec<Control>,
}

impl ControlSchedule {
    fn index(&self, t: f64, left: bool) -> usize {
        let i = if left {
            self.times.partition_point(|&b| b < t)
        } else {
            self.times.partition_point(|&b| b <= t)
        };
        i.saturating_sub(1).min(self.controls.len() - 1)
    }
}

impl ControlInput for ControlSchedule {
    fn at(&self, t: f64) -> Control {
        self.controls[self.index(t, false)]
    }

    fn left(&self, t: f64) -> Control {
        self.controls[self.index(t, true)]
    }

    fn breakpoints(&self) -> &[f64] {
        &self.times
    }
}

/// Zero-order hold in space, mapped to time through the solved `t` at
/// each grid point.
pub fn reconstruct_controls(sol: &DiscretizedSolution) -> Result<ControlSchedule> {
    sol.validate()?;
    let times: Vec<f64> = sol.states.iter().map(|s| s.t).collect();
    for i in 0..times.len() - 1 {
        if !(times[i + 1] > times[i]) {
            return Err(Error::NonMonotoneTime(i + 1));
        }
    }
    Ok(ControlSchedule {
        times,
        controls: sol.controls.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: TimeState,
    pub control: Control,
    pub power: PowerPair,
    /// Cumulative supply energy `∫ max(P, γP) dt` per subsystem.
    pub e_t: f64,
    pub e_h: f64,
    /// Cumulative actuator work `∫ (P_T + P_H) dt`.
    pub work: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl TimeTrajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub const CSV_HEADER: [&'static str; 15] = [
        "t",
        "x_p",
        "x_p_dot",
        "y_p",
        "y_p_dot",
        "l",
        "l_dot",
        "theta",
        "theta_dot",
        "f_t",
        "f_h",
        "p_t",
        "p_h",
        "e_t",
        "e_h",
    ];

    /// One row per sample with the columns of [`TimeTrajectory::CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(Self::CSV_HEADER).map_err(io)?;
        for s in &self.samples {
            let x = s.state.to_array();
            let row = [
                s.t,
                x[0],
                x[1],
                x[2],
                x[3],
                x[4],
                x[5],
                x[6],
                x[7],
                s.control.f_t,
                s.control.f_h,
                s.power.p_t,
                s.power.p_h,
                s.e_t,
                s.e_h,
            ];
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}

fn add(x: &[f64; 8], k: &[f64; 8], h: f64) -> TimeState {
    let mut out = [0.0; 8];
    for i in 0..8 {
        out[i] = x[i] + h * k[i];
    }
    TimeState::from_array(out)
}

/// One classical RK4 step from `a` to `b`. The control is sampled at each
/// stage, using the left limit at `b`.
fn rk4_step(s: &TimeState, a: f64, b: f64, u: &dyn ControlInput, p: &CraneParams) -> Result<TimeState> {
    let h = b - a;
    let m = 0.5 * (a + b);
    let x = s.to_array();
    let k1 = time_derivatives(s, &u.at(a), p)?.to_array();
    let k2 = time_derivatives(&add(&x, &k1, 0.5 * h), &u.at(m), p)?.to_array();
    let k3 = time_derivatives(&add(&x, &k2, 0.5 * h), &u.at(m), p)?.to_array();
    let k4 = time_derivatives(&add(&x, &k3, h), &u.left(b), p)?.to_array();
    let mut out = [0.0; 8];
    for i in 0..8 {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(TimeState::from_array(out))
}

/// Forward simulation on `[0, t_end]` with samples every `dt` (the last
/// sample lands on `t_end`). Steps are split at control breakpoints, and
/// energies are accumulated by the trapezoid rule over the split steps.
pub fn integrate(u: &dyn ControlInput, x0: &TimeState, p: &CraneParams, t_end: f64, dt: f64) -> Result<TimeTrajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::OutOfRange {
            name: "dt",
            value: dt,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::OutOfRange {
            name: "t_end",
            value: t_end,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    if !(x0.l > 0.0) {
        return Err(Error::NonPositiveRope(x0.l));
    }
    let n = ((t_end / dt).ceil() as usize).max(1);
    let breaks = u.breakpoints();

    let sample = |t: f64, s: TimeState, e_t, e_h, work| {
        let control = u.at(t);
        TrajectorySample {
            t,
            state: s,
            control,
            power: actuator_power(&s, &control),
            e_t,
            e_h,
            work,
        }
    };
    let mut samples = Vec::with_capacity(n + 1);
    let mut s = *x0;
    let (mut e_t, mut e_h, mut work) = (0.0, 0.0, 0.0);
    samples.push(sample(0.0, s, 0.0, 0.0, 0.0));
    let mut first_break = breaks.partition_point(|&b| b <= 0.0);

    for i in 0..n {
        let (ta, tb) = (i as f64 * dt, if i + 1 == n { t_end } else { (i + 1) as f64 * dt });
        let mut a = ta;
        while a < tb {
            let b = match breaks.get(first_break) {
                Some(&bp) if bp < tb => {
                    first_break += 1;
                    bp
                }
                _ => tb,
            };
            if b <= a {
                continue;
            }
            let next = rk4_step(&s, a, b, u, p)?;
            let arr = next.to_array();
            if arr.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
                return Err(Error::BlowUp(b));
            }
            if !(next.l > 0.0) {
                return Err(Error::NonPositiveRope(next.l));
            }
            let pa = actuator_power(&s, &u.at(a));
            let pb = actuator_power(&next, &u.left(b));
            let h = b - a;
            e_t += 0.5 * h * (regen_power_flow(pa.p_t, p.gamma_t)? + regen_power_flow(pb.p_t, p.gamma_t)?);
            e_h += 0.5 * h * (regen_power_flow(pa.p_h, p.gamma_h)? + regen_power_flow(pb.p_h, p.gamma_h)?);
            work += 0.5 * h * (pa.total() + pb.total());
            s = next;
            a = b;
        }
        samples.push(sample(tb, s, e_t, e_h, work));
    }
    Ok(TimeTrajectory { samples })
}

/// A grid point of the solution that sits outside the continuous corridor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridViolation {
    pub index: usize,
    pub x_p: f64,
    pub y_p: f64,
    /// Positive distance into the stack or below the clearance line.
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dt: f64,
    pub samples: usize,
    /// Deepest penetration of the simulated payload into a stack or below
    /// the clearance line (m); 0 when clear.
    pub corridor_violation: f64,
    /// Time and position of that penetration.
    pub corridor_violation_t: f64,
    pub corridor_violation_x_p: f64,
    /// Nearest grid interval to the deepest penetration.
    pub corridor_violation_interval: usize,
    pub grid_violations: Vec<GridViolation>,
    pub input_violation: f64,
    /// Simulated final time-domain state minus the fixed terminal
    /// components (`None` where free).
    pub final_mismatch: [Option<f64>; 8],
    /// Simulated final state minus the solved final grid state.
    pub open_loop_mismatch: [f64; 8],
    pub energy_t: f64,
    pub energy_h: f64,
    /// `(x9 + x10)(x_pf)` of the solution.
    pub solved_energy: f64,
    pub energy_discrepancy: f64,
    pub sway_max: f64,
}

/// Limits applied by [`ValidationReport::violations`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationTolerances {
    pub corridor: f64,
    pub input: f64,
    /// Added to the sway bound of the program.
    pub sway_margin: f64,
    pub energy_relative: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            corridor: 1e-3,
            input: 1e-6,
            sway_margin: 1e-3,
            energy_relative: 0.02,
        }
    }
}

impl ValidationReport {
    pub fn energy(&self) -> f64 {
        self.energy_t + self.energy_h
    }

    /// Clearance and input checks that fail. These are what the solved
    /// program promises, so any entry here means the solution is unusable.
    pub fn violations(&self, tol: &ValidationTolerances) -> Vec<String> {
        let mut out = Vec::new();
        for g in &self.grid_violations {
            if g.depth > tol.corridor {
                out.push(format!(
                    "grid index {}: y_p = {} at x_p = {} is {:.3e} m outside the corridor",
                    g.index, g.y_p, g.x_p, g.depth
                ));
            }
        }
        if self.corridor_violation > tol.corridor {
            out.push(format!(
                "simulated payload {:.3e} m outside the corridor at t = {}, x_p = {} (grid interval {})",
                self.corridor_violation,
                self.corridor_violation_t,
                self.corridor_violation_x_p,
                self.corridor_violation_interval
            ));
        }
        if self.input_violation > tol.input {
            out.push(format!("inputs exceed their bounds by {:.3e}", self.input_violation));
        }
        out
    }

    /// Open-loop replay discrepancies: sway overshoot and energy mismatch.
    /// Both shrink with grid refinement, so they are reported, not fatal.
    pub fn warnings(&self, spec: &OcpSpec, tol: &ValidationTolerances) -> Vec<String> {
        let mut out = Vec::new();
        let sway_limit = spec.bounds.theta_max + tol.sway_margin;
        if self.sway_max > sway_limit {
            out.push(format!(
                "sway reaches {:.4} rad, limit {:.4}",
                self.sway_max, sway_limit
            ));
        }
        if self.energy_discrepancy > tol.energy_relative {
            out.push(format!(
                "simulated energy {:.6} J differs from solved {:.6} J by {:.2}%",
                self.energy(),
                self.solved_energy,
                100.0 * self.energy_discrepancy
            ));
        }
        out
    }
}

/// `t_f / 5000`.
pub fn default_dt(sol: &DiscretizedSolution) -> f64 {
    sol.final_time() / 5000.0
}

/// Signed distance outside the continuous corridor at `(x_p, y_p)`.
fn corridor_depth(spec: &OcpSpec, x_p: f64, y_p: f64) -> f64 {
    let prof = &spec.profile;
    let upper = prof.rail_height - prof.height_at(x_p);
    (y_p - upper).max(prof.ground_clearance - y_p)
}

/// Simulate `sol` open loop and recompute its clearance and energy.
pub fn validate(sol: &DiscretizedSolution, spec: &OcpSpec, dt: f64) -> Result<ValidationReport> {
    let u = reconstruct_controls(sol)?;
    let grid = &sol.grid;
    let x0 = sol.states[0].to_time_state(grid.x_p0);
    let traj = integrate(&u, &x0, &spec.params, sol.final_time(), dt)?;

    let mut worst = (0.0, 0.0, grid.x_p0);
    let mut sway_max: f64 = 0.0;
    for s in &traj.samples {
        let d = corridor_depth(spec, s.state.x_p, s.state.y_p);
        if d > worst.0 {
            worst = (d, s.t, s.state.x_p);
        }
        sway_max = sway_max.max(s.state.theta.abs());
    }

    let mut grid_violations = Vec::new();
    for (index, st) in sol.states.iter().enumerate() {
        let x_p = grid.point(index);
        let depth = corridor_depth(spec, x_p, st.y_p);
        if depth > 0.0 {
            grid_violations.push(GridViolation {
                index,
                x_p,
                y_p: st.y_p,
                depth,
            });
        }
    }

    let b = &spec.bounds;
    let input_violation = sol.controls.iter().fold(0.0f64, |acc, c| {
        acc.max(b.ft_min - c.f_t)
            .max(c.f_t - b.ft_max)
            .max(b.fh_min - c.f_h)
            .max(c.f_h - b.fh_max)
    });

    let last = traj.last();
    let end = last.state.to_array();
    let mut target: [Option<f64>; 8] = [None; 8];
    target[0] = Some(grid.x_pf);
    target[1..8].copy_from_slice(&spec.boundary.terminal[1..8]);
    let mut final_mismatch = [None; 8];
    for i in 0..8 {
        final_mismatch[i] = target[i].map(|v| end[i] - v);
    }
    let solved_end = sol.states[grid.k].to_time_state(grid.x_pf).to_array();
    let mut open_loop_mismatch = [0.0; 8];
    for i in 0..8 {
        open_loop_mismatch[i] = end[i] - solved_end[i];
    }

    let energy = last.e_t + last.e_h;
    let solved_energy = sol.energy();
    let report = ValidationReport {
        dt,
        samples: traj.samples.len(),
        corridor_violation: worst.0,
        corridor_violation_t: worst.1,
        corridor_violation_x_p: worst.2,
        corridor_violation_interval: grid.interval_of(worst.2),
        grid_violations,
        input_violation: input_violation.max(0.0),
        final_mismatch,
        open_loop_mismatch,
        energy_t: last.e_t,
        energy_h: last.e_h,
        solved_energy,
        energy_discrepancy: (energy - solved_energy).abs() / energy.abs().max(1e-9),
        sway_max,
    };
    if let Some(index) = [
        report.corridor_violation,
        report.input_violation,
        report.energy_t,
        report.energy_h,
        report.energy_discrepancy,
        report.sway_max,
    ]
    .iter()
    .position(|v| !v.is_finite())
    {
        return Err(Error::NonFinite {
            what: "validation report entry",
            index,
        });
    }
    Ok(report)
}

/// Simulated trajectory of `sol` on the default or given step.
pub fn simulate(sol: &DiscretizedSolution, spec: &OcpSpec, dt: f64) -> Result<TimeTrajectory> {
    let u = reconstruct_controls(sol)?;
    let x0 = sol.states[0].to_time_state(sol.grid.x_p0);
    integrate(&u, &x0, &spec.params, sol.final_time(), dt)
}
