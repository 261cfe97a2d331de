//! Primal-dual interior-point method.
//!
//! Inequality rows get slack variables (`c(w) - s = 0`, `lo <= s <= hi`), so
//! the iteration works on `x = [w, s]` with equality constraints and simple
//! bounds handled by a logarithmic barrier. Each iteration solves the
//! regularized primal-dual Newton system
//!
//! ```text
//! [ W + Σ + δw I    Aᵀ  ] [dx]     [ ∇φ_μ + Aᵀy ]
//! [      A        -δc I ] [dy] = - [     ĉ      ]
//! ```
//!
//! with `δw` raised until the pivot signs show `nx` positive and `m`
//! negative eigenvalues. Steps are cut by the fraction-to-boundary rule and
//! accepted by backtracking on the ℓ₁ merit `φ_μ + ν‖ĉ‖₁`, with one
//! second-order correction before the first backtrack. `ν` is fixed within
//! a line search but may shrink between iterations.

use serde::{Deserialize, Serialize};

use super::ldl::{kkt_ordering, Inertia, SymmetricLdl};
use super::problem::NlpProblem;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    pub mu_init: f64,
    pub mu_reduction: f64,
    /// Fraction-to-boundary parameter τ.
    pub tau: f64,
    /// Base size of the constraint regularization used on singular systems.
    pub regularization_floor: f64,
    /// Print one line per iteration to standard error.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kkt_tolerance: 1e-6,
            max_iterations: 500,
            mu_init: 0.1,
            mu_reduction: 0.2,
            tau: 0.995,
            regularization_floor: 1e-8,
            verbose: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kkt_tolerance", self.kkt_tolerance),
            ("mu_init", self.mu_init),
            ("mu_reduction", self.mu_reduction),
            ("regularization_floor", self.regularization_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver option {name} must be positive, got {v}")));
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!(
                "solver option tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("solver option max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    InfeasibleDetected,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::InfeasibleDetected => "infeasible_detected",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Lagrange multipliers for `L = f + λᵀc - z_loᵀ(w - lo) - z_hiᵀ(hi - w)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub constraints: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.complementarity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub objective: f64,
    pub primal_inf: f64,
    pub dual_inf: f64,
    pub mu: f64,
    pub step: f64,
    /// Merit before and after the accepted step, at the barrier value `mu`.
    pub merit_before: f64,
    pub merit_after: f64,
    pub regularization: f64,
}

impl IterationLog {
    pub const HEADER: &'static str = "iter          f       |c|      |gL|        mu      step";

    pub fn line(&self) -> String {
        format!(
            "{:4} {:+.6e} {:.2e} {:.2e} {:.2e} {:.2e}",
            self.iter, self.objective, self.primal_inf, self.dual_inf, self.mu, self.step
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub w: Vec<f64>,
    pub multipliers: Multipliers,
    pub status: SolveStatus,
    pub objective: f64,
    pub residuals: KktResiduals,
    pub log: Vec<IterationLog>,
}

impl SolveOutcome {
    pub fn iterations(&self) -> usize {
        self.log.len()
    }
}

/// Infinity norms of the first-order optimality conditions at `w`.
pub fn kkt_residuals(problem: &dyn NlpProblem, w: &[f64], mult: &Multipliers) -> KktResiduals {
    let n = problem.num_variables();
    let m = problem.num_constraints();
    let (wl, wu) = problem.variable_bounds();
    let (cl, cu) = problem.constraint_bounds();
    let mut grad = vec![0.0; n];
    problem.gradient(w, &mut grad);
    let mut c = vec![0.0; m];
    problem.constraints(w, &mut c);
    let pattern = problem.jacobian_structure();
    let mut jv = vec![0.0; pattern.len()];
    problem.jacobian_values(w, &mut jv);

    let lam = &mult.constraints;
    let zl = |j: usize| mult.lower.get(j).copied().unwrap_or(0.0);
    let zu = |j: usize| mult.upper.get(j).copied().unwrap_or(0.0);
    let mut r = KktResiduals::default();

    let mut gl = grad;
    for (&(i, j), v) in pattern.iter().zip(&jv) {
        gl[j] += v * lam[i];
    }
    for j in 0..n {
        gl[j] += -zl(j) + zu(j);
        r.stationarity = r.stationarity.max(gl[j].abs());
        // bound violations and complementarity
        if wl[j].is_finite() {
            r.primal_ineq = r.primal_ineq.max(wl[j] - w[j]);
            r.complementarity = r.complementarity.max((zl(j) * (w[j] - wl[j])).abs());
        } else {
            r.stationarity = r.stationarity.max(zl(j).abs());
        }
        if wu[j].is_finite() {
            r.primal_ineq = r.primal_ineq.max(w[j] - wu[j]);
            r.complementarity = r.complementarity.max((zu(j) * (wu[j] - w[j])).abs());
        } else {
            r.stationarity = r.stationarity.max(zu(j).abs());
        }
    }
    for i in 0..m {
        if cl[i] == cu[i] {
            r.primal_eq = r.primal_eq.max((c[i] - cl[i]).abs());
            continue;
        }
        r.primal_ineq = r.primal_ineq.max(cl[i] - c[i]).max(c[i] - cu[i]);
        let comp = if lam[i] < 0.0 {
            if cl[i].is_finite() {
                -lam[i] * (c[i] - cl[i]).abs()
            } else {
                -lam[i]
            }
        } else if cu[i].is_finite() {
            lam[i] * (cu[i] - c[i]).abs()
        } else {
            lam[i]
        };
        r.complementarity = r.complementarity.max(comp);
    }
    r
}

const KAPPA_EPS: f64 = 10.0;
const KAPPA_SIGMA: f64 = 1e10;
const DAMPING: f64 = 1e-5;
const NU_FLOOR: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;
const BOUND_PUSH: f64 = 1e-2;
const MAX_BACKTRACKS: usize = 40;

struct Workspace<'a> {
    problem: &'a dyn NlpProblem,
    n: usize,
    m: usize,
    nx: usize,
    /// bounds on x = [w, s]
    xl: Vec<f64>,
    xu: Vec<f64>,
    cl: Vec<f64>,
    /// slack index (into x) of each inequality row
    slack: Vec<Option<usize>>,
    jac_pattern: Vec<(usize, usize)>,
    hess_pattern: Vec<(usize, usize)>,
    quasi_newton: bool,
    ldl: SymmetricLdl,
    hess_slots: Vec<usize>,
    jac_slots: Vec<usize>,
    slack_slots: Vec<usize>,
    diag_slots: Vec<usize>,
}

struct Point {
    x: Vec<f64>,
    f: f64,
    grad: Vec<f64>,
    /// ĉ = c - lo (equalities) or c - s (inequalities)
    c_hat: Vec<f64>,
    jac: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a dyn NlpProblem) -> Result<Self> {
        let n = problem.num_variables();
        let m = problem.num_constraints();
        let (wl, wu) = problem.variable_bounds();
        let (cl, cu) = problem.constraint_bounds();
        if wl.len() != n || wu.len() != n || cl.len() != m || cu.len() != m {
            return Err(Error::Dimension("bound vectors do not match problem size".into()));
        }
        for j in 0..n {
            if wl[j] > wu[j] {
                return Err(Error::InfeasibleBounds(format!(
                    "variable {j}: lower {} > upper {}",
                    wl[j], wu[j]
                )));
            }
        }
        let mut xl = wl;
        let mut xu = wu;
        let mut slack = vec![None; m];
        for i in 0..m {
            if cl[i] > cu[i] {
                return Err(Error::InfeasibleBounds(format!(
                    "constraint {i}: lower {} > upper {}",
                    cl[i], cu[i]
                )));
            }
            if cl[i] != cu[i] {
                slack[i] = Some(xl.len());
                xl.push(cl[i]);
                xu.push(cu[i]);
            }
        }
        let nx = xl.len();

        let jac_pattern = problem.jacobian_structure();
        if let Some(&(i, j)) = jac_pattern.iter().find(|&&(i, j)| i >= m || j >= n) {
            return Err(Error::Dimension(format!("Jacobian entry ({i}, {j}) out of range")));
        }
        let (hess_pattern, quasi_newton) = match problem.hessian_structure() {
            Some(p) => (p, false),
            None => {
                let mut p = Vec::with_capacity(n * (n + 1) / 2);
                for i in 0..n {
                    for j in 0..=i {
                        p.push((i, j));
                    }
                }
                (p, true)
            }
        };
        if let Some(&(i, j)) = hess_pattern.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::Dimension(format!("Hessian entry ({i}, {j}) out of range")));
        }

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for &(i, j) in &jac_pattern {
            rows[i].push(j);
        }
        for (i, s) in slack.iter().enumerate() {
            if let Some(s) = s {
                rows[i].push(*s);
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        let perm = kkt_ordering(nx, &hess_pattern, &rows);

        let dim = nx + m;
        let mut pattern: Vec<(usize, usize)> = Vec::new();
        pattern.extend(hess_pattern.iter().copied());
        pattern.extend(jac_pattern.iter().map(|&(i, j)| (nx + i, j)));
        for (i, s) in slack.iter().enumerate() {
            if let Some(s) = s {
                pattern.push((nx + i, *s));
            }
        }
        pattern.extend((0..dim).map(|i| (i, i)));
        let ldl = SymmetricLdl::new(dim, &pattern, perm);

        let hess_slots = hess_pattern.iter().map(|&(i, j)| ldl.slot(i, j)).collect();
        let jac_slots = jac_pattern.iter().map(|&(i, j)| ldl.slot(nx + i, j)).collect();
        let slack_slots = slack
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| ldl.slot(nx + i, s)))
            .collect();
        let diag_slots = (0..dim).map(|i| ldl.slot(i, i)).collect();

        Ok(Self {
            problem,
            n,
            m,
            nx,
            xl,
            xu,
            cl,
            slack,
            jac_pattern,
            hess_pattern,
            quasi_newton,
            ldl,
            hess_slots,
            jac_slots,
            slack_slots,
            diag_slots,
        })
    }

    fn push_inside(&self, j: usize, v: f64) -> f64 {
        let (l, u) = (self.xl[j], self.xu[j]);
        let mut v = v;
        if l.is_finite() && u.is_finite() {
            let pl = (BOUND_PUSH * l.abs().max(1.0)).min(BOUND_PUSH * (u - l));
            let pu = (BOUND_PUSH * u.abs().max(1.0)).min(BOUND_PUSH * (u - l));
            v = v.max(l + pl).min(u - pu);
            if l == u {
                v = l;
            }
        } else if l.is_finite() {
            v = v.max(l + BOUND_PUSH * l.abs().max(1.0));
        } else if u.is_finite() {
            v = v.min(u - BOUND_PUSH * u.abs().max(1.0));
        }
        v
    }

    /// Objective and ĉ only (line-search trials).
    fn eval_values(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let w = &x[..self.n];
        let f = self.problem.objective(w);
        let mut c = vec![0.0; self.m];
        self.problem.constraints(w, &mut c);
        if !f.is_finite() || c.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((f, self.c_hat(x, c)))
    }

    fn c_hat(&self, x: &[f64], mut c: Vec<f64>) -> Vec<f64> {
        for i in 0..self.m {
            c[i] -= match self.slack[i] {
                Some(s) => x[s],
                None => self.cl[i],
            };
        }
        c
    }

    fn eval_point(&self, x: Vec<f64>) -> Result<Point> {
        let w = &x[..self.n];
        let f = self.problem.objective(w);
        if !f.is_finite() {
            return Err(Error::NonFinite {
                what: "objective",
                index: 0,
            });
        }
        let mut grad = vec![0.0; self.n];
        self.problem.gradient(w, &mut grad);
        if let Some(index) = grad.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient entry",
                index,
            });
        }
        let mut c = vec![0.0; self.m];
        self.problem.constraints(w, &mut c);
        if let Some(index) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "constraint",
                index,
            });
        }
        let mut jac = vec![0.0; self.jac_pattern.len()];
        self.problem.jacobian_values(w, &mut jac);
        if let Some(index) = jac.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "Jacobian entry",
                index,
            });
        }
        let c_hat = self.c_hat(&x, c);
        Ok(Point { x, f, grad, c_hat, jac })
    }

    /// `Aᵀ y` over x = [w, s].
    fn jt_mul(&self, jac: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nx];
        for (&(i, j), v) in self.jac_pattern.iter().zip(jac) {
            out[j] += v * y[i];
        }
        for i in 0..self.m {
            if let Some(s) = self.slack[i] {
                out[s] -= y[i];
            }
        }
        out
    }

    /// Gradient of the barrier function φ_μ over x.
    fn barrier_gradient(&self, p: &Point, mu: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.nx];
        g[..self.n].copy_from_slice(&p.grad);
        for j in 0..self.nx {
            let (l, u) = (self.xl[j], self.xu[j]);
            if l.is_finite() {
                g[j] -= mu / (p.x[j] - l);
            }
            if u.is_finite() {
                g[j] += mu / (u - p.x[j]);
            }
            if l.is_finite() && !u.is_finite() {
                g[j] += DAMPING * mu;
            } else if u.is_finite() && !l.is_finite() {
                g[j] -= DAMPING * mu;
            }
        }
        g
    }

    fn barrier_value(&self, x: &[f64], f: f64, mu: f64) -> f64 {
        let mut phi = f;
        for j in 0..self.nx {
            let (l, u) = (self.xl[j], self.xu[j]);
            if l.is_finite() {
                phi -= mu * (x[j] - l).ln();
            }
            if u.is_finite() {
                phi -= mu * (u - x[j]).ln();
            }
            if l.is_finite() && !u.is_finite() {
                phi += DAMPING * mu * (x[j] - l);
            } else if u.is_finite() && !l.is_finite() {
                phi += DAMPING * mu * (u - x[j]);
            }
        }
        phi
    }

    fn fraction_to_boundary(&self, x: &[f64], dx: &[f64], tau: f64) -> f64 {
        let mut alpha: f64 = 1.0;
        for j in 0..self.nx {
            let (l, u) = (self.xl[j], self.xu[j]);
            if dx[j] < 0.0 && l.is_finite() {
                alpha = alpha.min(tau * (x[j] - l) / -dx[j]);
            }
            if dx[j] > 0.0 && u.is_finite() {
                alpha = alpha.min(tau * (u - x[j]) / dx[j]);
            }
        }
        alpha
    }
}

struct Duals {
    y: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|v| v.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Errors of the barrier subproblem at barrier value `mu` (`mu = 0` gives
/// the optimality error): (stationarity, primal, complementarity).
fn barrier_errors(ws: &Workspace, p: &Point, d: &Duals, mu: f64) -> (f64, f64, f64) {
    let mut gl = ws.jt_mul(&p.jac, &d.y);
    for j in 0..ws.n {
        gl[j] += p.grad[j];
    }
    let mut comp: f64 = 0.0;
    for j in 0..ws.nx {
        gl[j] += -d.zl[j] + d.zu[j];
        if ws.xl[j].is_finite() {
            comp = comp.max(((p.x[j] - ws.xl[j]) * d.zl[j] - mu).abs());
        }
        if ws.xu[j].is_finite() {
            comp = comp.max(((ws.xu[j] - p.x[j]) * d.zu[j] - mu).abs());
        }
    }
    (inf_norm(&gl), inf_norm(&p.c_hat), comp)
}

fn public_multipliers(ws: &Workspace, d: &Duals) -> Multipliers {
    Multipliers {
        constraints: d.y.clone(),
        lower: d.zl[..ws.n].to_vec(),
        upper: d.zu[..ws.n].to_vec(),
    }
}

/// Solve the program from the starting point `w0`.
pub fn solve(problem: &dyn NlpProblem, w0: &[f64], opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let mut ws = Workspace::new(problem)?;
    if w0.len() != ws.n {
        return Err(Error::Dimension(format!(
            "starting point has {} entries, problem has {} variables",
            w0.len(),
            ws.n
        )));
    }
    if let Some(index) = w0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "starting point entry",
            index,
        });
    }

    // starting point strictly inside the bounds
    let mut x0: Vec<f64> = (0..ws.n).map(|j| ws.push_inside(j, w0[j])).collect();
    let mut c0 = vec![0.0; ws.m];
    problem.constraints(&x0, &mut c0);
    if let Some(index) = c0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "constraint at starting point",
            index,
        });
    }
    x0.resize(ws.nx, 0.0);
    for i in 0..ws.m {
        if let Some(s) = ws.slack[i] {
            x0[s] = ws.push_inside(s, c0[i]);
        }
    }
    let mut pt = ws.eval_point(x0)?;

    let mut duals = Duals {
        y: vec![0.0; ws.m],
        zl: ws.xl.iter().map(|l| if l.is_finite() { 1.0 } else { 0.0 }).collect(),
        zu: ws.xu.iter().map(|u| if u.is_finite() { 1.0 } else { 0.0 }).collect(),
    };

    let tol = opts.kkt_tolerance;
    let mu_min = tol / 10.0;
    let mut mu = opts.mu_init;
    let mut nu: f64 = 1.0;
    let mut delta_w_last: f64 = 0.0;
    let mut log = Vec::new();
    let mut failed_searches = 0usize;
    let mut hess = vec![0.0; ws.hess_pattern.len()];
    if ws.quasi_newton {
        for (k, &(i, j)) in ws.hess_pattern.iter().enumerate() {
            if i == j {
                hess[k] = 1.0;
            }
        }
    }
    if opts.verbose {
        eprintln!("{}", IterationLog::HEADER);
    }

    let finish = |ws: &Workspace, pt: &Point, duals: &Duals, status, log| {
        let w = pt.x[..ws.n].to_vec();
        let multipliers = public_multipliers(ws, duals);
        let residuals = kkt_residuals(ws.problem, &w, &multipliers);
        Ok(SolveOutcome {
            w,
            multipliers,
            status,
            objective: pt.f,
            residuals,
            log,
        })
    };

    for iter in 0..opts.max_iterations {
        // convergence
        let (stat, primal, comp) = barrier_errors(&ws, &pt, &duals, 0.0);
        let public = kkt_residuals(problem, &pt.x[..ws.n], &public_multipliers(&ws, &duals));
        if stat.max(primal).max(comp).max(public.max()) <= tol {
            return finish(&ws, &pt, &duals, SolveStatus::Converged, log);
        }

        // barrier update
        loop {
            let (s, p, c) = barrier_errors(&ws, &pt, &duals, mu);
            if mu > mu_min && s.max(p).max(c) <= KAPPA_EPS * mu {
                mu = mu_min.max((opts.mu_reduction * mu).min(mu.powf(1.5)));
            } else {
                break;
            }
        }
        let tau = opts.tau.max(1.0 - mu);

        if !ws.quasi_newton {
            problem.hessian_values(&pt.x[..ws.n], 1.0, &duals.y, &mut hess);
            if let Some(index) = hess.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "Hessian entry",
                    index,
                });
            }
        }

        // Σ for every primal unknown
        let sigma: Vec<f64> = (0..ws.nx)
            .map(|j| {
                let mut s = 0.0;
                if ws.xl[j].is_finite() {
                    s += duals.zl[j] / (pt.x[j] - ws.xl[j]);
                }
                if ws.xu[j].is_finite() {
                    s += duals.zu[j] / (ws.xu[j] - pt.x[j]);
                }
                s
            })
            .collect();

        let grad_phi = ws.barrier_gradient(&pt, mu);
        let aty = ws.jt_mul(&pt.jac, &duals.y);
        let mut rhs = vec![0.0; ws.nx + ws.m];
        for j in 0..ws.nx {
            rhs[j] = -(grad_phi[j] + aty[j]);
        }
        for i in 0..ws.m {
            rhs[ws.nx + i] = -pt.c_hat[i];
        }

        // factorization with inertia correction
        let assemble = |ws: &Workspace, dw: f64, dc: f64| {
            let mut vals = ws.ldl.zeros();
            for (k, &slot) in ws.hess_slots.iter().enumerate() {
                vals[slot] += hess[k];
            }
            for (k, &slot) in ws.jac_slots.iter().enumerate() {
                vals[slot] += pt.jac[k];
            }
            for &slot in &ws.slack_slots {
                vals[slot] -= 1.0;
            }
            for j in 0..ws.nx {
                vals[ws.diag_slots[j]] += sigma[j] + dw;
            }
            for i in 0..ws.m {
                vals[ws.diag_slots[ws.nx + i]] -= dc;
            }
            vals
        };
        let correct = |inertia: Inertia| inertia.zero == 0 && inertia.positive == ws.nx && inertia.negative == ws.m;
        let mut delta_w = 0.0;
        let mut delta_c = 0.0;
        let mut kkt = assemble(&ws, delta_w, delta_c);
        let mut inertia = ws.ldl.factor(&kkt);
        if inertia.zero > 0 {
            delta_c = opts.regularization_floor * mu.powf(0.25);
            kkt = assemble(&ws, delta_w, delta_c);
            inertia = ws.ldl.factor(&kkt);
        }
        if !correct(inertia) {
            delta_w = if delta_w_last == 0.0 {
                1e-4
            } else {
                (delta_w_last / 3.0).max(1e-20)
            };
            loop {
                kkt = assemble(&ws, delta_w, delta_c);
                inertia = ws.ldl.factor(&kkt);
                if correct(inertia) {
                    break;
                }
                if inertia.zero > 0 && delta_c == 0.0 {
                    delta_c = opts.regularization_floor * mu.powf(0.25);
                    continue;
                }
                delta_w *= if delta_w_last == 0.0 { 100.0 } else { 8.0 };
                if delta_w > 1e40 {
                    log::debug!("inertia correction failed at iteration {iter}");
                    return finish(&ws, &pt, &duals, SolveStatus::NumericalFailure, log);
                }
            }
            delta_w_last = delta_w;
        }

        let solve_kkt = |b: &[f64]| {
            let mut sol = b.to_vec();
            ws.ldl.solve(&mut sol);
            // iterative refinement against the regularized matrix
            let scale = inf_norm(b).max(1.0);
            let mut resid = vec![0.0; b.len()];
            for _ in 0..3 {
                ws.ldl.mul(&kkt, &sol, &mut resid);
                for (r, bi) in resid.iter_mut().zip(b) {
                    *r = bi - *r;
                }
                if inf_norm(&resid) <= 1e-14 * scale {
                    break;
                }
                ws.ldl.solve(&mut resid);
                for (s, r) in sol.iter_mut().zip(&resid) {
                    *s += r;
                }
            }
            sol
        };

        let step = solve_kkt(&rhs);
        if step.iter().any(|v| !v.is_finite()) {
            return finish(&ws, &pt, &duals, SolveStatus::NumericalFailure, log);
        }
        let dx = step[..ws.nx].to_vec();
        let dy = step[ws.nx..].to_vec();

        let bound_steps = |x: &[f64], dx: &[f64], duals: &Duals| -> (Vec<f64>, Vec<f64>) {
            let mut dzl = vec![0.0; ws.nx];
            let mut dzu = vec![0.0; ws.nx];
            for j in 0..ws.nx {
                if ws.xl[j].is_finite() {
                    let gap = x[j] - ws.xl[j];
                    dzl[j] = mu / gap - duals.zl[j] - duals.zl[j] / gap * dx[j];
                }
                if ws.xu[j].is_finite() {
                    let gap = ws.xu[j] - x[j];
                    dzu[j] = mu / gap - duals.zu[j] + duals.zu[j] / gap * dx[j];
                }
            }
            (dzl, dzu)
        };

        // smallest penalty giving descent with margin, chosen afresh each
        // iteration; a penalty that only grows stalls after μ drops
        let theta = one_norm(&pt.c_hat);
        let mut curvature = vec![0.0; ws.nx + ws.m];
        let mut padded = dx.clone();
        padded.resize(ws.nx + ws.m, 0.0);
        ws.ldl.mul(&kkt, &padded, &mut curvature);
        let dwd = dot(&curvature[..ws.nx], &dx);
        let gd = dot(&grad_phi, &dx);
        if theta > 0.0 {
            let needed = (gd + 0.5 * dwd.max(0.0)) / (0.9 * theta);
            nu = (needed * 1.01).max(NU_FLOOR);
        }
        let slope = gd - nu * theta;
        let merit0 = ws.barrier_value(&pt.x, pt.f, mu) + nu * theta;
        let merit = |x: &[f64], f: f64, c: &[f64]| ws.barrier_value(x, f, mu) + nu * one_norm(c);

        let alpha_max = ws.fraction_to_boundary(&pt.x, &dx, tau);
        let mut alpha = alpha_max;
        let mut accepted: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
        let mut soc_tried = false;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = pt.x.iter().zip(&dx).map(|(x, d)| x + alpha * d).collect();
            if let Some((f, c)) = ws.eval_values(&trial) {
                let m_trial = merit(&trial, f, &c);
                if m_trial <= merit0 + ARMIJO * alpha * slope {
                    accepted = Some((trial, dx.clone(), dy.clone(), alpha));
                    break;
                }
                if !soc_tried && one_norm(&c) >= theta && theta > 0.0 {
                    soc_tried = true;
                    let mut rhs_soc = rhs.clone();
                    for i in 0..ws.m {
                        rhs_soc[ws.nx + i] = -(alpha * pt.c_hat[i] + c[i]);
                    }
                    let soc = solve_kkt(&rhs_soc);
                    if soc.iter().all(|v| v.is_finite()) {
                        let dx_soc = soc[..ws.nx].to_vec();
                        let a_soc = ws.fraction_to_boundary(&pt.x, &dx_soc, tau);
                        let x_soc: Vec<f64> = pt.x.iter().zip(&dx_soc).map(|(x, d)| x + a_soc * d).collect();
                        if let Some((f2, c2)) = ws.eval_values(&x_soc) {
                            if merit(&x_soc, f2, &c2) <= merit0 + ARMIJO * alpha * slope {
                                let dy_soc = soc[ws.nx..].to_vec();
                                accepted = Some((x_soc, dx_soc, dy_soc, a_soc));
                                break;
                            }
                        }
                    }
                }
            }
            alpha *= 0.5;
        }

        let (x_new, dx_used, dy_used, alpha_used) = match accepted {
            Some(a) => {
                failed_searches = 0;
                a
            }
            None => {
                failed_searches += 1;
                if failed_searches > 10 {
                    let status = if theta > tol {
                        SolveStatus::InfeasibleDetected
                    } else {
                        SolveStatus::NumericalFailure
                    };
                    return finish(&ws, &pt, &duals, status, log);
                }
                // take a short step to escape
                let a = alpha_max * 1e-3;
                let trial: Vec<f64> = pt.x.iter().zip(&dx).map(|(x, d)| x + a * d).collect();
                (trial, dx.clone(), dy.clone(), a)
            }
        };

        let (dzl, dzu) = bound_steps(&pt.x, &dx_used, &duals);
        let mut alpha_z: f64 = 1.0;
        for j in 0..ws.nx {
            if dzl[j] < 0.0 {
                alpha_z = alpha_z.min(tau * duals.zl[j] / -dzl[j]);
            }
            if dzu[j] < 0.0 {
                alpha_z = alpha_z.min(tau * duals.zu[j] / -dzu[j]);
            }
        }

        let old_x = pt.x.clone();
        let old_lag_grad = if ws.quasi_newton {
            let mut y_new = duals.y.clone();
            for (y, d) in y_new.iter_mut().zip(&dy_used) {
                *y += alpha_used * d;
            }
            let mut g = ws.jt_mul(&pt.jac, &y_new);
            for j in 0..ws.n {
                g[j] += pt.grad[j];
            }
            Some((g, y_new))
        } else {
            None
        };

        let new_pt = match ws.eval_point(x_new) {
            Ok(p) => p,
            Err(_) => return finish(&ws, &pt, &duals, SolveStatus::NumericalFailure, log),
        };
        pt = new_pt;
        for (y, d) in duals.y.iter_mut().zip(&dy_used) {
            *y += alpha_used * d;
        }
        for j in 0..ws.nx {
            if ws.xl[j].is_finite() {
                let gap = pt.x[j] - ws.xl[j];
                let z = duals.zl[j] + alpha_z * dzl[j];
                duals.zl[j] = z.max(mu / (KAPPA_SIGMA * gap)).min(KAPPA_SIGMA * mu / gap);
            }
            if ws.xu[j].is_finite() {
                let gap = ws.xu[j] - pt.x[j];
                let z = duals.zu[j] + alpha_z * dzu[j];
                duals.zu[j] = z.max(mu / (KAPPA_SIGMA * gap)).min(KAPPA_SIGMA * mu / gap);
            }
        }

        if let Some((g_old, y_new)) = old_lag_grad {
            let mut g_new = ws.jt_mul(&pt.jac, &y_new);
            for j in 0..ws.n {
                g_new[j] += pt.grad[j];
            }
            let s: Vec<f64> = (0..ws.n).map(|j| pt.x[j] - old_x[j]).collect();
            let yv: Vec<f64> = (0..ws.n).map(|j| g_new[j] - g_old[j]).collect();
            damped_bfgs(ws.n, &ws.hess_pattern, &mut hess, &s, &yv);
        }

        let (_, primal_inf, _) = barrier_errors(&ws, &pt, &duals, mu);
        let (dual_inf, _, _) = barrier_errors(&ws, &pt, &duals, 0.0);
        let entry = IterationLog {
            iter,
            objective: pt.f,
            primal_inf,
            dual_inf,
            mu,
            step: alpha_used,
            merit_before: merit0,
            merit_after: merit(&pt.x, pt.f, &pt.c_hat),
            regularization: delta_w,
        };
        if opts.verbose {
            eprintln!("{}", entry.line());
        }
        log.push(entry);
    }
    // the last iterate may have converged
    let (stat, primal, comp) = barrier_errors(&ws, &pt, &duals, 0.0);
    let public = kkt_residuals(problem, &pt.x[..ws.n], &public_multipliers(&ws, &duals));
    let status = if stat.max(primal).max(comp).max(public.max()) <= tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    finish(&ws, &pt, &duals, status, log)
}

/// Powell-damped BFGS update of a dense lower-triangular Hessian stored
/// row by row in `h` (pattern from [`Workspace::new`]).
fn damped_bfgs(n: usize, pattern: &[(usize, usize)], h: &mut [f64], s: &[f64], y: &[f64]) {
    let mut b = vec![vec![0.0; n]; n];
    for (k, &(i, j)) in pattern.iter().enumerate() {
        b[i][j] = h[k];
        b[j][i] = h[k];
    }
    let bs: Vec<f64> = b.iter().map(|row| dot(row, s)).collect();
    let sbs = dot(s, &bs);
    let sy = dot(s, y);
    if sbs <= 1e-16 {
        return;
    }
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r: Vec<f64> = (0..n).map(|i| theta * y[i] + (1.0 - theta) * bs[i]).collect();
    let sr = dot(s, &r);
    if sr <= 1e-16 {
        return;
    }
    for (k, &(i, j)) in pattern.iter().enumerate() {
        h[k] = b[i][j] - bs[i] * bs[j] / sbs + r[i] * r[j] / sr;
    }
}
