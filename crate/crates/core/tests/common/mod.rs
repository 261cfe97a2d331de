use cranopt::nlp::NlpProblem;

/// min x² s.t. x ≥ 1 as a variable bound
pub struct BoundQp;

impl NlpProblem for BoundQp {
    fn num_variables(&self) -> usize {
        1
    }
    fn num_constraints(&self) -> usize {
        0
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![1.0], vec![f64::INFINITY])
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![], vec![])
    }
    fn objective(&self, w: &[f64]) -> f64 {
        w[0] * w[0]
    }
    fn gradient(&self, w: &[f64], g: &mut [f64]) {
        g[0] = 2.0 * w[0];
    }
    fn constraints(&self, _: &[f64], _: &mut [f64]) {}
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        vec![]
    }
    fn jacobian_values(&self, _: &[f64], _: &mut [f64]) {}
    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        Some(vec![(0, 0)])
    }
    fn hessian_values(&self, _: &[f64], s: f64, _: &[f64], v: &mut [f64]) {
        v[0] = 2.0 * s;
    }
}

/// min x² + y² s.t. x + y = 1
pub struct EqQp;

impl NlpProblem for EqQp {
    fn num_variables(&self) -> usize {
        2
    }
    fn num_constraints(&self) -> usize {
        1
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2])
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![1.0], vec![1.0])
    }
    fn objective(&self, w: &[f64]) -> f64 {
        w[0] * w[0] + w[1] * w[1]
    }
    fn gradient(&self, w: &[f64], g: &mut [f64]) {
        g[0] = 2.0 * w[0];
        g[1] = 2.0 * w[1];
    }
    fn constraints(&self, w: &[f64], c: &mut [f64]) {
        c[0] = w[0] + w[1];
    }
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        vec![(0, 0), (0, 1)]
    }
    fn jacobian_values(&self, _: &[f64], v: &mut [f64]) {
        v[0] = 1.0;
        v[1] = 1.0;
    }
    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        Some(vec![(0, 0), (1, 1)])
    }
    fn hessian_values(&self, _: &[f64], s: f64, _: &[f64], v: &mut [f64]) {
        v[0] = 2.0 * s;
        v[1] = 2.0 * s;
    }
}

pub struct Rosenbrock {
    pub exact_hessian: bool,
}

impl NlpProblem for Rosenbrock {
    fn num_variables(&self) -> usize {
        2
    }
    fn num_constraints(&self) -> usize {
        0
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2])
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![], vec![])
    }
    fn objective(&self, w: &[f64]) -> f64 {
        (1.0 - w[0]).powi(2) + 100.0 * (w[1] - w[0] * w[0]).powi(2)
    }
    fn gradient(&self, w: &[f64], g: &mut [f64]) {
        let r = w[1] - w[0] * w[0];
        g[0] = -2.0 * (1.0 - w[0]) - 400.0 * w[0] * r;
        g[1] = 200.0 * r;
    }
    fn constraints(&self, _: &[f64], _: &mut [f64]) {}
    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        vec![]
    }
    fn jacobian_values(&self, _: &[f64], _: &mut [f64]) {}
    fn hessian_structure(&self) -> Option<Vec<(usize, usize)>> {
        self.exact_hessian.then(|| vec![(0, 0), (1, 0), (1, 1)])
    }
    fn hessian_values(&self, w: &[f64], s: f64, _: &[f64], v: &mut [f64]) {
        v[0] = s * (2.0 - 400.0 * (w[1] - 3.0 * w[0] * w[0]));
        v[1] = s * (-400.0 * w[0]);
        v[2] = s * 200.0;
    }
}
