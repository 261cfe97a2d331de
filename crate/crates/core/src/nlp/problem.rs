use crate::error::{Error, Result};

/// Smooth nonlinear program
///
/// ```text
///   min f(w)   s.t.   c_lo <= c(w) <= c_hi,   w_lo <= w <= w_hi
/// ```
///
/// Rows with `c_lo == c_hi` are equalities. Infinite bounds are allowed.
/// Derivative values are reported in the order of the matching structure
/// call; repeated `(row, col)` pairs are summed.
pub trait NlpProblem: Sync {
    fn num_variables(&self) -> usize;
    fn num_constraints(&self) -> usize;
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>);

    fn objective(&self, w: &[f64]) -> f64;
    fn gradient(&self, w: &[f64], grad: &mut [f64]);
    fn constraints(&self, w: &[f64], c: &mut [f64]);

    fn jacobian_structure(&self) -> Vec<(usize, usize)>;
    fn jacobian_values(&self, w: &[f64], values: &mut [f64]);

    /// Lower-triangular `(row >= col)` pattern of the Hessian of
    /// `σ f + Σ λ_i c_i`, or `None` when only first derivatives exist; the
    /// solver then falls back to a quasi-Newton approximation.
    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        None
    }

    fn hessian_values(&self, _w: &[f64], _obj_factor: f64, _lambda: &[f64], _values: &mut [f64]) {}
}

/// Sparse matrix in coordinate form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Triplets {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, v) in &self.entries {
            d[i][j] += v;
        }
        d
    }

    /// `y += A x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
    }

    /// `y += Aᵀ x`
    pub fn mul_t_add(&self, x: &[f64], y: &mut [f64]) {
        for &(i, j, v) in &self.entries {
            y[j] += v * x[i];
        }
    }
}

/// Objective gradient and constraint Jacobian at `w`, with a finiteness check.
pub fn evaluate_derivatives(problem: &dyn NlpProblem, w: &[f64]) -> Result<(Vec<f64>, Triplets)> {
    let n = problem.num_variables();
    if w.len() != n {
        return Err(Error::Dimension(format!("expected {n} variables, got {}", w.len())));
    }
    if let Some(index) = w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "decision variable",
            index,
        });
    }
    let mut grad = vec![0.0; n];
    problem.gradient(w, &mut grad);
    if let Some(index) = grad.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient entry",
            index,
        });
    }
    let pattern = problem.jacobian_structure();
    let mut values = vec![0.0; pattern.len()];
    problem.jacobian_values(w, &mut values);
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "Jacobian entry",
            index,
        });
    }
    let entries = pattern.into_iter().zip(values).map(|((i, j), v)| (i, j, v)).collect();
    Ok((
        grad,
        Triplets {
            rows: problem.num_constraints(),
            cols: n,
            entries,
        },
    ))
}
