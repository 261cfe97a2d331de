//! Fixtures shared by the benchmarks.

use cranopt::nlp::ldl::{kkt_ordering, SymmetricLdl};
use cranopt::nlp::NlpProblem;
use cranopt::{transcribe, CraneOcp, OcpSpec};

/// Bundled problem on `k` intervals at `α = 0.5`.
pub fn bundled_ocp(k: usize) -> CraneOcp {
    transcribe(&OcpSpec::bundled(0.5).with_k(k)).expect("bundled problem transcribes")
}

/// Symbolic factor and assembled values of a regularized KKT matrix
/// `[W + I, Jᵀ; J, -δI]` at the default guess. Multipliers are small, as
/// near a solution; unit multipliers force many delayed pivots.
pub fn crane_kkt(k: usize) -> (SymmetricLdl, Vec<f64>) {
    let ocp = bundled_ocp(k);
    let (n, m) = (ocp.num_variables(), ocp.num_constraints());
    let w = ocp.initial_guess();
    let hess = ocp.hessian_structure().expect("exact Hessian");
    let jac = ocp.jacobian_structure();

    let mut rows = vec![Vec::new(); m];
    for &(i, j) in &jac {
        rows[i].push(j);
    }
    for r in rows.iter_mut() {
        r.sort_unstable();
        r.dedup();
    }
    let perm = kkt_ordering(n, &hess, &rows);
    let mut pattern: Vec<(usize, usize)> = hess.clone();
    pattern.extend(jac.iter().map(|&(i, j)| (n + i, j)));
    pattern.extend((0..n + m).map(|i| (i, i)));
    let ldl = SymmetricLdl::new(n + m, &pattern, perm);

    let mut a = ldl.zeros();
    let mut hv = vec![0.0; hess.len()];
    ocp.hessian_values(&w, 1.0, &vec![0.01; m], &mut hv);
    for (&(i, j), v) in hess.iter().zip(&hv) {
        a[ldl.slot(i, j)] += v;
    }
    let mut jv = vec![0.0; jac.len()];
    ocp.jacobian_values(&w, &mut jv);
    for (&(i, j), v) in jac.iter().zip(&jv) {
        a[ldl.slot(n + i, j)] += v;
    }
    for i in 0..n {
        a[ldl.slot(i, i)] += 1.0;
    }
    for i in n..n + m {
        a[ldl.slot(i, i)] -= 1e-8;
    }
    (ldl, a)
}
