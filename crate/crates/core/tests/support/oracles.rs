//! Independent reference solvers used to check the production code.

use nalgebra::{DMatrix, DVector};

/// Exact LASSO minimiser of `‖x − As‖² + λ‖s‖₁` by enumerating all `3ⁿ` sign patterns.
///
/// For a pattern `σ` with active set `S`, stationarity gives
/// `A_SᵀA_S s_S = A_Sᵀx − (λ/2)σ_S`. Solutions whose signs agree with `σ` are candidates;
/// the optimum is the candidate with the smallest objective. Returns `(s, objective)`.
pub fn lasso_exhaustive(a: &DMatrix<f64>, x: &DVector<f64>, lambda: f64) -> (DVector<f64>, f64) {
    let n = a.ncols();
    assert!(n <= 10, "exhaustive oracle is exponential in n");
    let objective = |s: &DVector<f64>| (x - a * s).norm_squared() + lambda * s.lp_norm(1);
    let mut best = DVector::zeros(n);
    let mut best_obj = objective(&best);
    let mut signs = vec![0i8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for s in signs.iter_mut() {
            *s = (c % 3) as i8 - 1;
            c /= 3;
        }
        let active: Vec<usize> = (0..n).filter(|&j| signs[j] != 0).collect();
        if active.is_empty() {
            continue;
        }
        let a_s = a.select_columns(&active);
        let sigma = DVector::from_iterator(active.len(), active.iter().map(|&j| signs[j] as f64));
        let rhs = a_s.tr_mul(x) - sigma.scale(lambda / 2.0);
        let Some(sol) = (a_s.transpose() * &a_s).lu().solve(&rhs) else {
            continue;
        };
        if sol.iter().zip(sigma.iter()).any(|(v, s)| v * s <= 0.0) {
            continue;
        }
        let mut s = DVector::zeros(n);
        for (&j, &v) in active.iter().zip(sol.iter()) {
            s[j] = v;
        }
        let obj = objective(&s);
        if obj < best_obj {
            best_obj = obj;
            best = s;
        }
    }
    (best, best_obj)
}

/// Moore–Penrose least-squares solution through the normal equations, for well-conditioned
/// full-column-rank `A` only.
pub fn normal_equations(a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    (a.transpose() * a)
        .cholesky()
        .expect("AᵀA must be positive definite")
        .solve(&a.tr_mul(x))
}
