//! Direct collocation of the spatial optimal control problem.
//!
//! Decision vector layout for `K` intervals:
//!
//! ```text
//! [ x_0 .. x_K (10 each) | u_0 .. u_{K-1} (2 each) | η_T (2 each) | η_H (2 each) ]
//! ```
//!
//! Constraint rows: implicit-midpoint collocation (10 per interval), epigraph
//! inequalities (4 per evaluation point per interval), then one equality per
//! fixed boundary component. Corridor and box limits are variable bounds.
//!
//! Inside the program each auxiliary power is stored as `(r, m)` with
//! `z = m + r (2 (x_p - x_mid) / Δx)`, i.e. its midpoint value and half its
//! rise over the interval. The absolute form `η₁ x_p + η₀` has nearly
//! collinear columns on intervals far from `x_p = 0`; conversion happens in
//! [`CraneOcp::decode`] and [`DiscretizedSolution::to_vector`].
//!
//! Every interval's rows depend on the same 26 local unknowns
//! `[x_k, x_{k+1}, u_k, η_T,k, η_H,k]`, so derivatives are taken with
//! fixed-size forward-mode numbers over that block.

use serde::{Deserialize, Serialize};

use crate::ad::{Dual, HyperDual, Pattern, Scalar};
use crate::corridor::{CorridorBounds, StackProfile};
use crate::dynamics::{power, Control, CraneParams};
use crate::epigraph::{epigraph_rows, AuxCoeffs, EpigraphPoints};
use crate::error::{check_range, Error, Result};
use crate::nlp::{self, KktResiduals, NlpProblem, SolveOutcome, SolveStatus, SolverOptions};
use crate::spatial::{mayer_objective, spatial_f, SpatialGrid, SpatialState};

const LOCAL: usize = 26;

/// Fixed (`Some`) and free (`None`) components of the end states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub initial: [Option<f64>; 10],
    pub terminal: [Option<f64>; 10],
}

impl Boundary {
    /// Rest at depth `y_p` on rope length `l` at both ends, starting at
    /// `t = 0` with zero energy; final time and energies free.
    pub fn rest_to_rest(y_p: f64, l: f64) -> Self {
        let z = Some(0.0);
        Self {
            initial: [z, z, Some(y_p), z, Some(l), z, z, z, z, z],
            terminal: [None, z, Some(y_p), z, Some(l), z, z, z, None, None],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBounds {
    pub l_min: f64,
    pub l_max: f64,
    pub theta_max: f64,
    pub ft_min: f64,
    pub ft_max: f64,
    pub fh_min: f64,
    pub fh_max: f64,
    /// Velocity floor at interior grid points.
    pub v_min_interior: f64,
}

impl Default for BoxBounds {
    fn default() -> Self {
        Self {
            l_min: 0.0,
            l_max: 0.75,
            theta_max: 0.1,
            ft_min: -1.0,
            ft_max: 1.0,
            fh_min: 0.0,
            fh_max: 8.0,
            v_min_interior: 1e-3,
        }
    }
}

impl BoxBounds {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("l", self.l_min, self.l_max),
            ("F_T", self.ft_min, self.ft_max),
            ("F_H", self.fh_min, self.fh_max),
        ];
        for (name, lo, hi) in pairs {
            if !(lo <= hi) {
                return Err(Error::InfeasibleBounds(format!("{name}: lower {lo} > upper {hi}")));
            }
        }
        if !(self.theta_max >= 0.0) {
            return Err(Error::InfeasibleBounds(format!(
                "theta_max {} is negative",
                self.theta_max
            )));
        }
        if !(self.v_min_interior >= 0.0) {
            return Err(Error::InfeasibleBounds(format!(
                "v_min_interior {} is negative",
                self.v_min_interior
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcpSpec {
    pub params: CraneParams,
    pub grid: SpatialGrid,
    pub profile: StackProfile,
    pub alpha: f64,
    pub boundary: Boundary,
    pub bounds: BoxBounds,
    #[serde(default)]
    pub epigraph_points: EpigraphPoints,
}

impl OcpSpec {
    /// Three-stack example on `[0, 1]` with 50 intervals.
    pub fn bundled(alpha: f64) -> Self {
        Self {
            params: CraneParams::default(),
            grid: SpatialGrid {
                x_p0: 0.0,
                x_pf: 1.0,
                k: 50,
            },
            profile: StackProfile::bundled(),
            alpha,
            boundary: Boundary::rest_to_rest(0.6, 0.6),
            bounds: BoxBounds::default(),
            epigraph_points: EpigraphPoints::default(),
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.grid.k = k;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        self.profile.validate()?;
        check_range("alpha", self.alpha, 0.0, 1.0)?;
        self.bounds.validate()?;
        Ok(())
    }
}

/// Index arithmetic for the decision vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub k: usize,
}

impl Layout {
    pub fn num_variables(&self) -> usize {
        10 * (self.k + 1) + 6 * self.k
    }

    pub fn state(&self, point: usize, comp: usize) -> usize {
        10 * point + comp
    }

    pub fn control(&self, interval: usize, j: usize) -> usize {
        10 * (self.k + 1) + 2 * interval + j
    }

    pub fn eta_t(&self, interval: usize, j: usize) -> usize {
        10 * (self.k + 1) + 2 * self.k + 2 * interval + j
    }

    pub fn eta_h(&self, interval: usize, j: usize) -> usize {
        10 * (self.k + 1) + 4 * self.k + 2 * interval + j
    }

    /// Global indices of the 26 local unknowns of an interval.
    pub fn local(&self, interval: usize) -> [usize; LOCAL] {
        let mut idx = [0; LOCAL];
        for c in 0..10 {
            idx[c] = self.state(interval, c);
            idx[10 + c] = self.state(interval + 1, c);
        }
        for j in 0..2 {
            idx[20 + j] = self.control(interval, j);
            idx[22 + j] = self.eta_t(interval, j);
            idx[24 + j] = self.eta_h(interval, j);
        }
        idx
    }
}

/// Collocation and epigraph residuals of one interval, evaluated on the
/// local unknowns `v`; `out` receives `10 + 4 * points.len()` values.
fn interval_rows<T: Scalar>(v: &[T], xa: f64, xb: f64, points: &[f64], p: &CraneParams, out: &mut [T]) {
    let dx = xb - xa;
    let (a, b) = (&v[0..10], &v[10..20]);
    let u = [v[20], v[21]];
    let z_at = |eta: &[T], frac: f64| eta[1] + eta[0] * (2.0 * frac - 1.0);

    let mut mid = [T::zero(); 10];
    for i in 0..10 {
        mid[i] = (a[i] + b[i]) * 0.5;
    }
    let f = spatial_f(&mid, u, v[23], v[25], p);
    for i in 0..10 {
        out[i] = mid[1] * ((b[i] - a[i]) / dx) - f[i];
    }

    let mut s = [T::zero(); 10];
    for (q, &frac) in points.iter().enumerate() {
        for i in 0..10 {
            s[i] = a[i] + (b[i] - a[i]) * frac;
        }
        let r = epigraph_rows(&s, u, z_at(&v[22..24], frac), z_at(&v[24..26], frac), p);
        out[10 + 4 * q..14 + 4 * q].copy_from_slice(&r);
    }
}

/// The dynamics preserve `y_p - l cos θ` and its rate, so once the initial
/// state satisfies them, terminal values of `y_p`, `ẏ_p`, `θ` and `θ̇` already
/// determine the terminal `l` and `l̇`. Imposing those two as well leaves the
/// discretized constraints dependent up to the O(Δx²) drift of the invariant,
/// which blows up the multipliers, so they are dropped when consistent.
fn implied_terminal_rope(b: &Boundary) -> bool {
    let geometry = |s: &[Option<f64>; 10]| -> Option<(f64, f64)> {
        let (y, yd, l, ld, th, thd) = (s[2]?, s[3]?, s[4]?, s[5]?, s[6]?, s[7]?);
        Some((y - l * th.cos(), yd - ld * th.cos() + l * thd * th.sin()))
    };
    let consistent = |s| matches!(geometry(s), Some((a, b)) if a.abs() <= 1e-12 && b.abs() <= 1e-12);
    consistent(&b.initial) && consistent(&b.terminal)
}

/// The transcribed program.
#[derive(Clone, Debug)]
pub struct CraneOcp {
    spec: OcpSpec,
    layout: Layout,
    corridor: CorridorBounds,
    /// `(variable, value)` per boundary equality row
    fixed: Vec<(usize, f64)>,
    /// structural `(local row, local column)` pairs of one interval
    local_jac: Vec<(usize, usize)>,
    rows_per_interval: usize,
}

/// Build the NLP for `spec`.
pub fn transcribe(spec: &OcpSpec) -> Result<CraneOcp> {
    spec.validate()?;
    let layout = Layout { k: spec.grid.k };
    let corridor = spec.profile.corridor_bounds(&spec.grid)?;
    let rows_per_interval = 10 + 4 * spec.epigraph_points.count();

    let implied = implied_terminal_rope(&spec.boundary);
    let mut fixed = Vec::new();
    for (point, template) in [(0, &spec.boundary.initial), (spec.grid.k, &spec.boundary.terminal)] {
        for (comp, value) in template.iter().enumerate() {
            if point == spec.grid.k && implied && (comp == 4 || comp == 5) {
                continue;
            }
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(Error::InfeasibleBounds(format!(
                        "boundary component {comp} at grid point {point} is not finite"
                    )));
                }
                fixed.push((layout.state(point, comp), *v));
            }
        }
    }

    // structural Jacobian of one interval (identical for all intervals)
    let mut v = [Pattern::default(); LOCAL];
    for (i, x) in v.iter_mut().enumerate() {
        *x = Pattern::var(i);
    }
    let mut out = vec![Pattern::default(); rows_per_interval];
    interval_rows(&v, 0.0, 1.0, spec.epigraph_points.fractions(), &spec.params, &mut out);
    let mut local_jac = Vec::new();
    for (r, pat) in out.iter().enumerate() {
        for c in 0..LOCAL {
            if pat.contains(c) {
                local_jac.push((r, c));
            }
        }
    }

    let ocp = CraneOcp {
        spec: spec.clone(),
        layout,
        corridor,
        fixed,
        local_jac,
        rows_per_interval,
    };
    // fixed values must be compatible with the bounds they replace
    let (lo, hi) = ocp.natural_bounds();
    for &(j, v) in &ocp.fixed {
        if v < lo[j] || v > hi[j] {
            return Err(Error::InfeasibleBounds(format!(
                "boundary value {v} for variable {j} lies outside [{}, {}]",
                lo[j], hi[j]
            )));
        }
    }
    Ok(ocp)
}

impl CraneOcp {
    pub fn spec(&self) -> &OcpSpec {
        &self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn corridor(&self) -> &CorridorBounds {
        &self.corridor
    }

    pub fn num_collocation_rows(&self) -> usize {
        10 * self.layout.k
    }

    pub fn num_epigraph_rows(&self) -> usize {
        (self.rows_per_interval - 10) * self.layout.k
    }

    pub fn num_boundary_rows(&self) -> usize {
        self.fixed.len()
    }

    fn interval_row(&self, interval: usize, local: usize) -> usize {
        if local < 10 {
            10 * interval + local
        } else {
            10 * self.layout.k + (self.rows_per_interval - 10) * interval + (local - 10)
        }
    }

    fn interval_span(&self, interval: usize) -> (f64, f64) {
        (self.spec.grid.point(interval), self.spec.grid.point(interval + 1))
    }

    /// Bounds before boundary-fixed components are freed.
    fn natural_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.layout.num_variables();
        let b = &self.spec.bounds;
        let k = self.layout.k;
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for i in 0..=k {
            let s = |c| self.layout.state(i, c);
            lo[s(0)] = 0.0;
            lo[s(1)] = if i == 0 || i == k { 0.0 } else { b.v_min_interior };
            lo[s(2)] = self.corridor.lower[i];
            hi[s(2)] = self.corridor.upper[i];
            lo[s(4)] = b.l_min;
            hi[s(4)] = b.l_max;
            lo[s(6)] = -b.theta_max;
            hi[s(6)] = b.theta_max;
        }
        for j in 0..k {
            lo[self.layout.control(j, 0)] = b.ft_min;
            hi[self.layout.control(j, 0)] = b.ft_max;
            lo[self.layout.control(j, 1)] = b.fh_min;
            hi[self.layout.control(j, 1)] = b.fh_max;
        }
        (lo, hi)
    }

    fn local_values(&self, w: &[f64], interval: usize) -> [f64; LOCAL] {
        let idx = self.layout.local(interval);
        let mut v = [0.0; LOCAL];
        for (x, &i) in v.iter_mut().zip(&idx) {
            *x = w[i];
        }
        v
    }

    /// Rows of one interval at `w` (collocation first, then epigraph).
    pub fn interval_residuals(&self, w: &[f64], interval: usize) -> Vec<f64> {
        let v = self.local_values(w, interval);
        let (xa, xb) = self.interval_span(interval);
        let mut out = vec![0.0; self.rows_per_interval];
        interval_rows(
            &v,
            xa,
            xb,
            self.spec.epigraph_points.fractions(),
            &self.spec.params,
            &mut out,
        );
        out
    }

    /// Largest collocation residual magnitude at `w`.
    pub fn collocation_error(&self, w: &[f64]) -> f64 {
        (0..self.layout.k)
            .flat_map(|j| self.interval_residuals(w, j).into_iter().take(10))
            .fold(0.0, |a, r| a.max(r.abs()))
    }

    /// Smallest epigraph residual at `w`.
    pub fn epigraph_min(&self, w: &[f64]) -> f64 {
        (0..self.layout.k)
            .flat_map(|j| self.interval_residuals(w, j).into_iter().skip(10))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest violation of the variable bounds at `w`.
    pub fn bound_violation(&self, w: &[f64]) -> f64 {
        let (lo, hi) = self.variable_bounds();
        w.iter()
            .zip(lo.iter().zip(&hi))
            .fold(0.0, |a, (x, (l, h))| a.max(l - x).max(x - h))
    }

    /// Starting point: straight-line states kept inside the corridor, hover
    /// forces, and constant auxiliary powers that satisfy the epigraph rows.
    pub fn initial_guess(&self) -> Vec<f64> {
        let spec = &self.spec;
        let grid = &spec.grid;
        let lay = self.layout;
        let p = &spec.params;
        let b = &spec.bounds;
        let k = grid.k;
        let (ini, fin) = (&spec.boundary.initial, &spec.boundary.terminal);
        let dist = grid.x_pf - grid.x_p0;
        let accel = b.ft_max.abs().max(1e-3) / (p.m1 + p.m2);
        let v = (0.5 * (dist * accel).sqrt()).max(0.1);

        let mut w = vec![0.0; lay.num_variables()];
        for i in 0..=k {
            let frac = i as f64 / k as f64;
            let lerp = |c: usize, default: f64| {
                let a = ini[c].or(fin[c]).unwrap_or(default);
                let z = fin[c].or(ini[c]).unwrap_or(default);
                a + frac * (z - a)
            };
            let mut s = [0.0; 10];
            s[1] = v;
            let (lo, hi) = (self.corridor.lower[i], self.corridor.upper[i]);
            let y = lerp(2, 0.5 * (lo + hi)).min(0.5 * (lo + hi));
            s[2] = y;
            s[4] = y.clamp(b.l_min.max(1e-3), b.l_max);
            for (c, val) in s.iter().enumerate() {
                w[lay.state(i, c)] = *val;
            }
        }
        for (point, template) in [(0, ini), (k, fin)] {
            for (c, val) in template.iter().enumerate() {
                if let Some(val) = val {
                    w[lay.state(point, c)] = *val;
                }
            }
        }
        for j in 0..k {
            w[lay.control(j, 0)] = 0.0;
            w[lay.control(j, 1)] = p.hover_force().clamp(b.fh_min, b.fh_max);
        }

        // time and energy by the midpoint rule; z constant at the largest
        // envelope value seen on the interval
        for j in 0..k {
            let (xa, xb) = self.interval_span(j);
            let u = [w[lay.control(j, 0)], w[lay.control(j, 1)]];
            let (mut zt, mut zh) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &frac in spec.epigraph_points.fractions() {
                let s: Vec<f64> = (0..10)
                    .map(|c| {
                        let (a, z) = (w[lay.state(j, c)], w[lay.state(j + 1, c)]);
                        a + frac * (z - a)
                    })
                    .collect();
                let (pt, ph) = power(s[1], s[4], s[5], s[6], s[7], u);
                zt = zt.max(pt.max(p.gamma_t * pt));
                zh = zh.max(ph.max(p.gamma_h * ph));
            }
            w[lay.eta_t(j, 1)] = zt;
            w[lay.eta_h(j, 1)] = zh;
            let vm = 0.5 * (w[lay.state(j, 1)] + w[lay.state(j + 1, 1)]);
            let h = (xb - xa) / vm;
            let cur = |c| w[lay.state(j, c)];
            let (t, et, eh) = (cur(0) + h, cur(8) + h * zt, cur(9) + h * zh);
            if fin[0].is_none() || j + 1 < k {
                w[lay.state(j + 1, 0)] = t;
            }
            if fin[8].is_none() || j + 1 < k {
                w[lay.state(j + 1, 8)] = et;
            }
            if fin[9].is_none() || j + 1 < k {
                w[lay.state(j + 1, 9)] = eh;
            }
        }
        w
    }

    /// Unpack a decision vector.
    pub fn decode(&self, w: &[f64], outcome: Option<&SolveOutcome>) -> DiscretizedSolution {
        let lay = self.layout;
        let k = lay.k;
        let states = (0..=k)
            .map(|i| SpatialState::from_slice(&w[lay.state(i, 0)..lay.state(i, 0) + 10]))
            .collect::<Vec<_>>();
        let controls = (0..k)
            .map(|j| Control::new(w[lay.control(j, 0)], w[lay.control(j, 1)]))
            .collect();
        let grid = &self.spec.grid;
        let coeffs = |idx: &dyn Fn(usize, usize) -> usize| -> Vec<AuxCoeffs> {
            (0..k)
                .map(|j| AuxCoeffs::from_centered(w[idx(j, 1)], w[idx(j, 0)], grid.point(j), grid.point(j + 1)))
                .collect()
        };
        let aux_t = coeffs(&|j, i| lay.eta_t(j, i));
        let aux_h = coeffs(&|j, i| lay.eta_h(j, i));
        let objective = mayer_objective(&states[k], self.spec.alpha).unwrap_or(f64::NAN);
        DiscretizedSolution {
            grid: self.spec.grid,
            alpha: self.spec.alpha,
            states,
            controls,
            aux_t,
            aux_h,
            objective,
            status: outcome.map(|o| o.status.into()).unwrap_or(SolverStatus::NotSolved),
            iterations: outcome.map(|o| o.iterations()).unwrap_or(0),
            kkt: outcome.map(|o| o.residuals).unwrap_or_default(),
        }
    }

    /// Solve from the default guess, or from `warm` when it has the same grid.
    pub fn solve(&self, opts: &SolverOptions, warm: Option<&DiscretizedSolution>) -> Result<DiscretizedSolution> {
        let w0 = match warm {
            Some(s) if s.grid == self.spec.grid => s.to_vector(),
            _ => self.initial_guess(),
        };
        let out = nlp::solve(self, &w0, opts)?;
        Ok(self.decode(&out.w, Some(&out)))
    }
}

impl NlpProblem for CraneOcp {
    fn num_variables(&self) -> usize {
        self.layout.num_variables()
    }

    fn num_constraints(&self) -> usize {
        self.rows_per_interval * self.layout.k + self.fixed.len()
    }

    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = self.natural_bounds();
        // fixed components are pinned by equality rows instead; a bound at
        // the same value would leave no interior
        for &(j, _) in &self.fixed {
            lo[j] = f64::NEG_INFINITY;
            hi[j] = f64::INFINITY;
        }
        (lo, hi)
    }

    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.num_constraints();
        let mut lo = vec![0.0; m];
        let mut hi = vec![0.0; m];
        let base = self.rows_per_interval * self.layout.k;
        for r in 10 * self.layout.k..base {
            hi[r] = f64::INFINITY;
        }
        for (b, &(_, v)) in self.fixed.iter().enumerate() {
            lo[base + b] = v;
            hi[base + b] = v;
        }
        (lo, hi)
    }

    fn objective(&self, w: &[f64]) -> f64 {
        let k = self.layout.k;
        let a = self.spec.alpha;
        a * w[self.layout.state(k, 0)] + (1.0 - a) * (w[self.layout.state(k, 8)] + w[self.layout.state(k, 9)])
    }

    fn gradient(&self, _w: &[f64], grad: &mut [f64]) {
        let k = self.layout.k;
        let a = self.spec.alpha;
        grad.fill(0.0);
        grad[self.layout.state(k, 0)] = a;
        grad[self.layout.state(k, 8)] = 1.0 - a;
        grad[self.layout.state(k, 9)] = 1.0 - a;
    }

    fn constraints(&self, w: &[f64], c: &mut [f64]) {
        for j in 0..self.layout.k {
            let r = self.interval_residuals(w, j);
            for (q, v) in r.into_iter().enumerate() {
                c[self.interval_row(j, q)] = v;
            }
        }
        let base = self.rows_per_interval * self.layout.k;
        for (b, &(idx, _)) in self.fixed.iter().enumerate() {
            c[base + b] = w[idx];
        }
    }

    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        let mut s = Vec::with_capacity(self.local_jac.len() * self.layout.k + self.fixed.len());
        for j in 0..self.layout.k {
            let idx = self.layout.local(j);
            s.extend(self.local_jac.iter().map(|&(r, c)| (self.interval_row(j, r), idx[c])));
        }
        let base = self.rows_per_interval * self.layout.k;
        s.extend(self.fixed.iter().enumerate().map(|(b, &(idx, _))| (base + b, idx)));
        s
    }

    fn jacobian_values(&self, w: &[f64], values: &mut [f64]) {
        let fr = self.spec.epigraph_points.fractions();
        let mut out = vec![Dual::<LOCAL>::cst(0.0); self.rows_per_interval];
        let mut pos = 0;
        for j in 0..self.layout.k {
            let x = self.local_values(w, j);
            let mut v = [Dual::<LOCAL>::cst(0.0); LOCAL];
            for i in 0..LOCAL {
                v[i] = Dual::var(x[i], i);
            }
            let (xa, xb) = self.interval_span(j);
            interval_rows(&v, xa, xb, fr, &self.spec.params, &mut out);
            for &(r, c) in &self.local_jac {
                values[pos] = out[r].g[c];
                pos += 1;
            }
        }
        for v in &mut values[pos..] {
            *v = 1.0;
        }
    }

    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        let mut s = Vec::with_capacity(self.layout.k * LOCAL * (LOCAL + 1) / 2);
        for j in 0..self.layout.k {
            let idx = self.layout.local(j);
            for a in 0..LOCAL {
                for b in 0..=a {
                    let (r, c) = (idx[a], idx[b]);
                    s.push((r.max(c), r.min(c)));
                }
            }
        }
        Some(s)
    }

    fn hessian_values(&self, w: &[f64], _obj_factor: f64, lambda: &[f64], values: &mut [f64]) {
        // the objective is linear, so only constraint curvature remains
        let fr = self.spec.epigraph_points.fractions();
        let mut out = vec![HyperDual::<LOCAL>::cst(0.0); self.rows_per_interval];
        let mut pos = 0;
        for j in 0..self.layout.k {
            let x = self.local_values(w, j);
            let mut v = [HyperDual::<LOCAL>::cst(0.0); LOCAL];
            for i in 0..LOCAL {
                v[i] = HyperDual::var(x[i], i);
            }
            let (xa, xb) = self.interval_span(j);
            interval_rows(&v, xa, xb, fr, &self.spec.params, &mut out);
            let mut h = [[0.0; LOCAL]; LOCAL];
            for (q, r) in out.iter().enumerate() {
                let l = lambda[self.interval_row(j, q)];
                if l != 0.0 {
                    for a in 0..LOCAL {
                        for b in 0..=a {
                            h[a][b] += l * r.h[a][b];
                        }
                    }
                }
            }
            for a in 0..LOCAL {
                for b in 0..=a {
                    values[pos] = h[a][b];
                    pos += 1;
                }
            }
        }
    }
}

/// Coarse outcome of a solve as stored with a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    InfeasibleDetected,
    NumericalFailure,
    NotSolved,
}

impl From<SolveStatus> for SolverStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => SolverStatus::Converged,
            SolveStatus::MaxIterations => SolverStatus::MaxIterations,
            SolveStatus::InfeasibleDetected => SolverStatus::InfeasibleDetected,
            SolveStatus::NumericalFailure => SolverStatus::NumericalFailure,
        }
    }
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIterations => "max_iterations",
            SolverStatus::InfeasibleDetected => "infeasible_detected",
            SolverStatus::NumericalFailure => "numerical_failure",
            SolverStatus::NotSolved => "not_solved",
        }
    }
}

impl std::str::FromStr for SolverStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SolverStatus::Converged,
            SolverStatus::MaxIterations,
            SolverStatus::InfeasibleDetected,
            SolverStatus::NumericalFailure,
            SolverStatus::NotSolved,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown solver status {s:?}")))
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedSolution {
    pub grid: SpatialGrid,
    pub alpha: f64,
    pub states: Vec<SpatialState>,
    pub controls: Vec<Control>,
    pub aux_t: Vec<AuxCoeffs>,
    pub aux_h: Vec<AuxCoeffs>,
    pub objective: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    pub kkt: KktResiduals,
}

impl DiscretizedSolution {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let k = self.grid.k;
        let dims = [
            ("states", self.states.len(), k + 1),
            ("controls", self.controls.len(), k),
            ("aux_t", self.aux_t.len(), k),
            ("aux_h", self.aux_h.len(), k),
        ];
        for (name, got, want) in dims {
            if got != want {
                return Err(Error::Dimension(format!("{name}: expected {want} entries, got {got}")));
            }
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.states.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// `E_T + E_H` at the final grid point.
    pub fn energy(&self) -> f64 {
        self.states.last().map(|s| s.e_t + s.e_h).unwrap_or(0.0)
    }

    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }

    /// Decision vector in the transcription layout.
    pub fn to_vector(&self) -> Vec<f64> {
        let lay = Layout { k: self.grid.k };
        let mut w = vec![0.0; lay.num_variables()];
        for (i, s) in self.states.iter().enumerate() {
            w[lay.state(i, 0)..lay.state(i, 0) + 10].copy_from_slice(&s.to_array());
        }
        for (j, u) in self.controls.iter().enumerate() {
            w[lay.control(j, 0)] = u.f_t;
            w[lay.control(j, 1)] = u.f_h;
        }
        for (j, (t, h)) in self.aux_t.iter().zip(&self.aux_h).enumerate() {
            let (xa, xb) = (self.grid.point(j), self.grid.point(j + 1));
            let (m, r) = t.to_centered(xa, xb);
            w[lay.eta_t(j, 0)] = r;
            w[lay.eta_t(j, 1)] = m;
            let (m, r) = h.to_centered(xa, xb);
            w[lay.eta_h(j, 0)] = r;
            w[lay.eta_h(j, 1)] = m;
        }
        w
    }
}

/// Transcribe and solve in one call.
pub fn solve_ocp(
    spec: &OcpSpec,
    opts: &SolverOptions,
    warm: Option<&DiscretizedSolution>,
) -> Result<DiscretizedSolution> {
    transcribe(spec)?.solve(opts, warm)
}
