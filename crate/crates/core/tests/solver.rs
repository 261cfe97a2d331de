use cranopt::nlp::{kkt_residuals, solve, Multipliers, NlpProblem, SolveStatus, SolverOptions};
use std::time::{Duration, Instant};

mod common;
use common::{BoundQp, EqQp, Rosenbrock};

/// Same as [`BoundQp`] but with x ≥ 1 written as a general inequality row.
struct RowQp;

impl NlpProblem for RowQp {
    fn num_variables(&self) -> usize {
        1
    }
    fn num_constraints(&self) -> usize {
        1
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![f64::NEG_INFINITY], vec![f64::INFINITY])
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![1.0], vec![f64::INFINITY])
    }
    fn objective(&self, w: &[f64]) -> f64 {
        w[0] * w[0]
    }
    fn gradient(&self, w: &[f64], g: &mut [f64]) {
        g[0] = 2.0 * w[0];
    }
    fn constraints(&self, w: &[f64], c: &mut [f64]) {
        c[0] = w[0];
    }
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0)]
    }
    fn jacobian_values(&self, _: &[f64], v: &mut [f64]) {
        v[0] = 1.0;
    }
    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        Some(vec![(0, 0)])
    }
    fn hessian_values(&self, _: &[f64], s: f64, _: &[f64], v: &mut [f64]) {
        v[0] = 2.0 * s;
    }
}

/// Hock-Schittkowski #71: product and sphere constraints, box 1..5.
struct Hs071;

impl NlpProblem for Hs071 {
    fn num_variables(&self) -> usize {
        4
    }
    fn num_constraints(&self) -> usize {
        2
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![1.0; 4], vec![5.0; 4])
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![25.0, 40.0], vec![f64::INFINITY, 40.0])
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2]
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = x[3] * (2.0 * x[0] + x[1] + x[2]);
        g[1] = x[0] * x[3];
        g[2] = x[0] * x[3] + 1.0;
        g[3] = x[0] * (x[0] + x[1] + x[2]);
    }
    fn constraints(&self, x: &[f64], c: &mut [f64]) {
        c[0] = x[0] * x[1] * x[2] * x[3];
        c[1] = x.iter().map(|v| v * v).sum();
    }
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        (0..2).flat_map(|i| (0..4).map(move |j| (i, j))).collect()
    }
    fn jacobian_values(&self, x: &[f64], v: &mut [f64]) {
        v[0] = x[1] * x[2] * x[3];
        v[1] = x[0] * x[2] * x[3];
        v[2] = x[0] * x[1] * x[3];
        v[3] = x[0] * x[1] * x[2];
        for j in 0..4 {
            v[4 + j] = 2.0 * x[j];
        }
    }
    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        Some((0..4).flat_map(|i| (0..=i).map(move |j| (i, j))).collect())
    }
    fn hessian_values(&self, x: &[f64], s: f64, l: &[f64], v: &mut [f64]) {
        let mut h = [[0.0; 4]; 4];
        h[0][0] = s * 2.0 * x[3];
        h[1][0] = s * x[3];
        h[2][0] = s * x[3];
        h[3][0] = s * (2.0 * x[0] + x[1] + x[2]);
        h[3][1] = s * x[0];
        h[3][2] = s * x[0];
        h[1][0] += l[0] * x[2] * x[3];
        h[2][0] += l[0] * x[1] * x[3];
        h[3][0] += l[0] * x[1] * x[2];
        h[2][1] += l[0] * x[0] * x[3];
        h[3][1] += l[0] * x[0] * x[2];
        h[3][2] += l[0] * x[0] * x[1];
        for i in 0..4 {
            h[i][i] += 2.0 * l[1];
        }
        let mut k = 0;
        for i in 0..4 {
            for j in 0..=i {
                v[k] = h[i][j];
                k += 1;
            }
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

#[test]
fn bound_qp_hits_active_bound() {
    let (out, dt) = timed(|| solve(&BoundQp, &[5.0], &SolverOptions::default()).unwrap());
    assert_eq!(out.status, SolveStatus::Converged);
    assert!((out.w[0] - 1.0).abs() <= 1e-6, "{}", out.w[0]);
    assert!((out.multipliers.lower[0] - 2.0).abs() <= 1e-5);
    assert!(dt < Duration::from_secs(1));
}

#[test]
fn inequality_row_matches_bound_form() {
    let out = solve(&RowQp, &[5.0], &SolverOptions::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Converged);
    assert!((out.w[0] - 1.0).abs() <= 1e-6);
    // active lower row: λ = -2
    assert!((out.multipliers.constraints[0] + 2.0).abs() <= 1e-5);
}

#[test]
fn equality_qp_multiplier() {
    let (out, dt) = timed(|| solve(&EqQp, &[3.0, -7.0], &SolverOptions::default()).unwrap());
    assert_eq!(out.status, SolveStatus::Converged);
    assert!((out.w[0] - 0.5).abs() <= 1e-6);
    assert!((out.w[1] - 0.5).abs() <= 1e-6);
    assert!((out.multipliers.constraints[0] + 1.0).abs() <= 1e-6);
    assert!(dt < Duration::from_secs(1));
}

#[test]
fn rosenbrock_exact_hessian() {
    let p = Rosenbrock { exact_hessian: true };
    let (out, dt) = timed(|| solve(&p, &[-1.2, 1.0], &SolverOptions::default()).unwrap());
    assert_eq!(out.status, SolveStatus::Converged);
    assert!(
        (out.w[0] - 1.0).abs() <= 1e-6 && (out.w[1] - 1.0).abs() <= 1e-6,
        "{:?}",
        out.w
    );
    assert!(dt < Duration::from_secs(1));
}

#[test]
fn rosenbrock_quasi_newton() {
    let p = Rosenbrock { exact_hessian: false };
    let opts = SolverOptions {
        kkt_tolerance: 1e-9,
        ..Default::default()
    };
    let out = solve(&p, &[-1.2, 1.0], &opts).unwrap();
    assert_eq!(out.status, SolveStatus::Converged);
    assert!(
        (out.w[0] - 1.0).abs() <= 1e-6 && (out.w[1] - 1.0).abs() <= 1e-6,
        "{:?}",
        out.w
    );
}

#[test]
fn hs071_known_optimum() {
    let out = solve(&Hs071, &[1.0, 5.0, 5.0, 1.0], &SolverOptions::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Converged);
    let expect = [1.0, 4.742_999_64, 3.821_149_98, 1.379_408_29];
    for (a, b) in out.w.iter().zip(expect) {
        assert!((a - b).abs() <= 1e-5, "{:?}", out.w);
    }
    assert!((out.objective - 17.014_017_29).abs() <= 1e-6);
}

#[test]
fn converged_points_satisfy_tolerance() {
    let tol = 1e-6;
    let out = solve(&Hs071, &[1.0, 5.0, 5.0, 1.0], &SolverOptions::default()).unwrap();
    let r = kkt_residuals(&Hs071, &out.w, &out.multipliers);
    assert!(r.max() <= tol, "{r:?}");
    let mut c = [0.0; 2];
    Hs071.constraints(&out.w, &mut c);
    assert!(c[0] >= 25.0 - tol);
    assert!((c[1] - 40.0).abs() <= tol);
    assert!(out.w.iter().all(|&x| (1.0 - tol..=5.0 + tol).contains(&x)));
}

#[test]
fn residuals_at_hand_solution_and_far_point() {
    let m = Multipliers {
        constraints: vec![-1.0],
        lower: vec![0.0; 2],
        upper: vec![0.0; 2],
    };
    let r = kkt_residuals(&EqQp, &[0.5, 0.5], &m);
    assert!(r.max() <= 1e-12, "{r:?}");
    let r = kkt_residuals(&EqQp, &[4.0, -2.0], &m);
    assert!(r.stationarity > 1e-6);
}

#[test]
fn residual_grows_with_perturbation() {
    use rand::{Rng, SeedableRng};
    let out = solve(&Hs071, &[1.0, 5.0, 5.0, 1.0], &SolverOptions::default()).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    let deltas = [1e-4, 1e-3, 1e-2, 1e-1];
    let mut mean = vec![0.0; deltas.len()];
    for _ in 0..50 {
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (k, d) in deltas.iter().enumerate() {
            let w: Vec<f64> = out.w.iter().zip(&dir).map(|(w, e)| w + d * e).collect();
            mean[k] += kkt_residuals(&Hs071, &w, &out.multipliers).max() / 50.0;
        }
    }
    for k in 1..mean.len() {
        assert!(mean[k] > mean[k - 1], "{mean:?}");
    }
}

#[test]
fn deterministic_logs() {
    let a = solve(&Hs071, &[1.0, 5.0, 5.0, 1.0], &SolverOptions::default()).unwrap();
    let b = solve(&Hs071, &[1.0, 5.0, 5.0, 1.0], &SolverOptions::default()).unwrap();
    assert_eq!(a, b);
    let bits = |o: &cranopt::nlp::SolveOutcome| -> Vec<u64> {
        o.log
            .iter()
            .flat_map(|l| [l.objective.to_bits(), l.primal_inf.to_bits(), l.mu.to_bits()])
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn merit_nonincreasing_at_fixed_mu() {
    let out = solve(&Hs071, &[1.0, 5.0, 5.0, 1.0], &SolverOptions::default()).unwrap();
    for l in &out.log {
        assert!(l.merit_after <= l.merit_before + 1e-12, "{l:?}");
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(solve(&EqQp, &[1.0], &SolverOptions::default()).is_err());
    assert!(solve(&EqQp, &[f64::NAN, 1.0], &SolverOptions::default()).is_err());
    let bad = SolverOptions {
        tau: 1.5,
        ..Default::default()
    };
    assert!(solve(&EqQp, &[0.0, 0.0], &bad).is_err());
}

#[test]
fn iteration_cap_reported() {
    let opts = SolverOptions {
        max_iterations: 2,
        ..Default::default()
    };
    let out = solve(&Rosenbrock { exact_hessian: true }, &[-1.2, 1.0], &opts).unwrap();
    assert_eq!(out.status, SolveStatus::MaxIterations);
    assert_eq!(out.iterations(), 2);
}
