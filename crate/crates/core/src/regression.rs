//! Dense regression solvers shared by every classifier.
//!
//! All solvers work on a dictionary `A` (`m × n`, one atom per column) and a target
//! `x` of length `m`, returning one coefficient per atom:
//!
//! | solver | objective |
//! |---|---|
//! | [`solve_least_squares`] | `‖x − As‖₂²`, minimum-norm minimiser |
//! | [`solve_ridge`] | `‖x − As‖₂² + λ‖s‖₂²` |
//! | [`solve_lasso`] | `‖x − As‖₂² + λ‖s‖₁` |
//! | [`solve_elastic_net`] | `‖x − As‖₂² + λ₁‖s‖₁ + λ₂‖s‖₂²` |
//! | [`solve_omp`] | greedy `k`-sparse approximation |
//!
//! When the same dictionary is used for many targets, build a [`LeastSquares`] or
//! [`RidgeSolver`] once and call `solve` repeatedly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// OMP stops once the residual norm drops below this.
pub const DEFAULT_OMP_TOL: f64 = 1e-10;

/// Regression coefficients, one per dictionary atom.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub values: DVector<f64>,
    /// `‖x − A·s‖₂` at the returned coefficients.
    pub residual_norm: f64,
    /// `false` when an iterative solver stopped at its iteration cap.
    pub converged: bool,
    /// `true` when the dictionary was numerically rank deficient and the minimum-norm
    /// solution was returned.
    pub rank_deficient: bool,
    /// Coordinate-descent sweeps or OMP steps; zero for direct solvers.
    pub iterations: usize,
}

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn direct(a: &DataMatrix, x: &DVector<f64>, values: DVector<f64>, rank_deficient: bool) -> Self {
        let residual_norm = residual_norm(a, x, &values);
        CoefficientVector {
            values,
            residual_norm,
            converged: true,
            rank_deficient,
            iterations: 0,
        }
    }
}

/// Penalty weights and iteration controls for the penalised solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationParams {
    pub ridge_lambda: f64,
    pub lasso_lambda: f64,
    pub elastic_lambda1: f64,
    pub elastic_lambda2: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        RegularizationParams {
            ridge_lambda: 0.0,
            lasso_lambda: 1.0,
            elastic_lambda1: 1.0,
            elastic_lambda2: 1.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl RegularizationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ridge_lambda", self.ridge_lambda),
            ("lasso_lambda", self.lasso_lambda),
            ("elastic_lambda1", self.elastic_lambda1),
            ("elastic_lambda2", self.elastic_lambda2),
        ] {
            check_penalty(name, v)?;
        }
        check_iteration(self.tol, self.max_iter)
    }
}

fn check_penalty(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::input(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_iteration(tol: f64, max_iter: usize) -> Result<()> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::input(format!("tol must be finite and > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::input("max_iter must be at least 1"));
    }
    Ok(())
}

/// `‖x − A·s‖₂`.
pub fn residual_norm(a: &DataMatrix, x: &DVector<f64>, s: &DVector<f64>) -> f64 {
    (x - a.as_matrix() * s).norm()
}

/// `‖x − As‖₂² + λ‖s‖₁`.
pub fn lasso_objective(a: &DataMatrix, x: &DVector<f64>, s: &DVector<f64>, lambda: f64) -> f64 {
    elastic_net_objective(a, x, s, lambda, 0.0)
}

/// `‖x − As‖₂² + λ₁‖s‖₁ + λ₂‖s‖₂²`.
pub fn elastic_net_objective(
    a: &DataMatrix,
    x: &DVector<f64>,
    s: &DVector<f64>,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    residual_norm(a, x, s).powi(2) + lambda1 * s.lp_norm(1) + lambda2 * s.norm_squared()
}

/// Minimum-norm least-squares solver backed by a thin SVD of the dictionary.
///
/// Singular values at or below `max(m, n)·ε·σ_max` are treated as zero, which yields the
/// pseudo-inverse solution for rank-deficient dictionaries.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    matrix: DataMatrix,
    /// Left singular vectors of the retained components (`m × r`).
    u: DMatrix<f64>,
    /// Right singular vectors of the retained components (`n × r`).
    v: DMatrix<f64>,
    inv_singular: DVector<f64>,
}

impl LeastSquares {
    pub fn new(a: &DataMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let svd = a.as_matrix().clone().svd(true, true);
        let u = svd.u.expect("SVD computed with U");
        let v_t = svd.v_t.expect("SVD computed with V^T");
        let sigma_max = svd.singular_values.max();
        let cutoff = m.max(n) as f64 * f64::EPSILON * sigma_max;
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > cutoff)
            .collect();
        let inv_singular = DVector::from_iterator(
            keep.len(),
            keep.iter().map(|&i| 1.0 / svd.singular_values[i]),
        );
        LeastSquares {
            matrix: a.clone(),
            u: u.select_columns(&keep),
            v: v_t.select_rows(&keep).transpose(),
            inv_singular,
        }
    }

    pub fn rank(&self) -> usize {
        self.inv_singular.len()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank() < self.matrix.cols()
    }

    pub fn matrix(&self) -> &DataMatrix {
        &self.matrix
    }

    pub fn solve(&self, x: &DVector<f64>) -> Result<CoefficientVector> {
        self.matrix.check_rhs(x)?;
        let projected = self.u.tr_mul(x).component_mul(&self.inv_singular);
        let values = &self.v * projected;
        Ok(CoefficientVector::direct(
            &self.matrix,
            x,
            values,
            self.is_rank_deficient(),
        ))
    }
}

/// Minimum-norm minimiser of `‖x − As‖₂`.
pub fn solve_least_squares(a: &DataMatrix, x: &DVector<f64>) -> Result<CoefficientVector> {
    a.check_rhs(x)?;
    LeastSquares::new(a).solve(x)
}

#[derive(Debug, Clone)]
enum RidgeFactor {
    /// Thin QR of the stacked system `[A; √λ·I]`; only the top `m` rows of `Q` matter
    /// because the stacked right-hand side is `[x; 0]`.
    Qr { q_top: DMatrix<f64>, r: DMatrix<f64> },
    MinNorm(LeastSquares),
}

/// Ridge solver for a fixed dictionary and penalty.
///
/// Evaluates `(AᵀA + λI)⁻¹Aᵀx` as the least-squares solution of the stacked system
/// `[A; √λ·I] s ≈ [x; 0]`, which has the same normal equations without squaring the
/// condition number. When the stacked system is numerically singular (only possible
/// for `λ = 0`) the minimum-norm least-squares solution is returned instead.
#[derive(Debug, Clone)]
pub struct RidgeSolver {
    matrix: DataMatrix,
    lambda: f64,
    factor: RidgeFactor,
}

impl RidgeSolver {
    pub fn new(a: &DataMatrix, lambda: f64) -> Result<Self> {
        check_penalty("ridge lambda", lambda)?;
        let (m, n) = (a.rows(), a.cols());
        let stacked = if lambda > 0.0 {
            let mut s = DMatrix::zeros(m + n, n);
            s.rows_mut(0, m).copy_from(a.as_matrix());
            s.rows_mut(m, n).fill_diagonal(lambda.sqrt());
            Some(s)
        } else if m >= n {
            Some(a.as_matrix().clone())
        } else {
            None
        };

        let factor = stacked
            .and_then(|s| {
                let qr = s.qr();
                let r = qr.r();
                let diag = r.diagonal().abs();
                let (lo, hi) = (diag.min(), diag.max());
                if hi == 0.0 || lo <= 1e-12 * hi {
                    return None;
                }
                let q_top = qr.q().rows(0, m).into_owned();
                Some(RidgeFactor::Qr { q_top, r })
            })
            .unwrap_or_else(|| RidgeFactor::MinNorm(LeastSquares::new(a)));

        Ok(RidgeSolver {
            matrix: a.clone(),
            lambda,
            factor,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn solve(&self, x: &DVector<f64>) -> Result<CoefficientVector> {
        match &self.factor {
            RidgeFactor::MinNorm(ls) => ls.solve(x),
            RidgeFactor::Qr { q_top, r } => {
                self.matrix.check_rhs(x)?;
                let qtx = q_top.tr_mul(x);
                let values = r
                    .solve_upper_triangular(&qtx)
                    .ok_or_else(|| Error::input("ridge factor is singular"))?;
                Ok(CoefficientVector::direct(&self.matrix, x, values, false))
            }
        }
    }
}

/// `(AᵀA + λI)⁻¹Aᵀx`; with `λ = 0` and singular `AᵀA` this falls back to the
/// minimum-norm least-squares solution.
pub fn solve_ridge(a: &DataMatrix, x: &DVector<f64>, lambda: f64) -> Result<CoefficientVector> {
    a.check_rhs(x)?;
    RidgeSolver::new(a, lambda)?.solve(x)
}

/// `sign(v)·max(|v| − t, 0)`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// LASSO via cyclic coordinate descent on `‖x − As‖₂² + λ‖s‖₁`.
///
/// Converged when the largest coordinate change in a sweep is below `tol`. Hitting
/// `max_iter` returns the last iterate with `converged = false`; coordinate descent
/// never increases the objective, so that is also the best iterate.
pub fn solve_lasso(
    a: &DataMatrix,
    x: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CoefficientVector> {
    solve_elastic_net(a, x, lambda, 0.0, tol, max_iter)
}

/// Elastic net via cyclic coordinate descent on
/// `‖x − As‖₂² + λ₁‖s‖₁ + λ₂‖s‖₂²`.
pub fn solve_elastic_net(
    a: &DataMatrix,
    x: &DVector<f64>,
    lambda1: f64,
    lambda2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CoefficientVector> {
    a.check_rhs(x)?;
    check_penalty("lambda1", lambda1)?;
    check_penalty("lambda2", lambda2)?;
    check_iteration(tol, max_iter)?;

    let mat = a.as_matrix();
    let n = a.cols();
    let col_sq: Vec<f64> = mat.column_iter().map(|c| c.norm_squared()).collect();
    let threshold = 0.5 * lambda1;

    let mut s: DVector<f64> = DVector::zeros(n);
    let mut r = x.clone();
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_iter {
        sweeps += 1;
        let mut max_delta = 0.0f64;
        for j in 0..n {
            let denom = col_sq[j] + lambda2;
            if denom == 0.0 {
                continue;
            }
            let col = mat.column(j);
            let rho = col.dot(&r) + col_sq[j] * s[j];
            let updated = soft_threshold(rho, threshold) / denom;
            let delta = updated - s[j];
            if delta != 0.0 {
                r.axpy(-delta, &col, 1.0);
                s[j] = updated;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            converged = true;
            break;
        }
    }

    let residual_norm = residual_norm(a, x, &s);
    Ok(CoefficientVector {
        values: s,
        residual_norm,
        converged,
        rank_deficient: false,
        iterations: sweeps,
    })
}

/// One greedy OMP step: the atom added and the state after re-projection.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpStep {
    pub atom: usize,
    /// Selected atoms so far, in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients on `support`, against the original columns.
    pub coefficients: DVector<f64>,
    pub residual: DVector<f64>,
}

/// Runs OMP and records every step.
///
/// Atoms are chosen by largest `|aⱼᵀr| / ‖aⱼ‖` (ties to the lower index); zero columns
/// are never selected. After each selection the target is re-projected onto the span of
/// all selected atoms. Stops after `k` steps, once `‖r‖ < tol`, or when no remaining
/// atom correlates with the residual.
pub fn omp_path(a: &DataMatrix, x: &DVector<f64>, k: usize, tol: f64) -> Result<Vec<OmpStep>> {
    a.check_rhs(x)?;
    let n = a.cols();
    if k == 0 || k > n {
        return Err(Error::dim(format!("OMP sparsity k = {k} must be in 1..={n}")));
    }
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::input(format!("OMP tol must be finite and >= 0, got {tol}")));
    }

    let mat = a.as_matrix();
    let norms: Vec<f64> = mat.column_iter().map(|c| c.norm()).collect();
    let mut selected = vec![false; n];
    let mut support = Vec::with_capacity(k);
    let mut residual = x.clone();
    let mut steps = Vec::with_capacity(k);

    while support.len() < k {
        let r_norm = residual.norm();
        if r_norm < tol {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if selected[j] || norms[j] == 0.0 {
                continue;
            }
            let corr = mat.column(j).dot(&residual).abs() / norms[j];
            if best.is_none_or(|(_, c)| corr > c) {
                best = Some((j, corr));
            }
        }
        let Some((atom, corr)) = best else { break };
        if corr <= 1e-12 * r_norm {
            break;
        }
        selected[atom] = true;
        support.push(atom);

        let sub = a.select_columns(&support)?;
        let fit = LeastSquares::new(&sub).solve(x)?;
        residual = x - sub.as_matrix() * &fit.values;
        steps.push(OmpStep {
            atom,
            support: support.clone(),
            coefficients: fit.values,
            residual: residual.clone(),
        });
    }
    Ok(steps)
}

/// OMP with at most `k` nonzero coefficients, stopping early below [`DEFAULT_OMP_TOL`].
pub fn solve_omp(a: &DataMatrix, x: &DVector<f64>, k: usize) -> Result<CoefficientVector> {
    solve_omp_with_tol(a, x, k, DEFAULT_OMP_TOL)
}

pub fn solve_omp_with_tol(
    a: &DataMatrix,
    x: &DVector<f64>,
    k: usize,
    tol: f64,
) -> Result<CoefficientVector> {
    let steps = omp_path(a, x, k, tol)?;
    let mut values = DVector::zeros(a.cols());
    if let Some(last) = steps.last() {
        for (&atom, &c) in last.support.iter().zip(last.coefficients.iter()) {
            values[atom] = c;
        }
    }
    let residual_norm = residual_norm(a, x, &values);
    Ok(CoefficientVector {
        values,
        residual_norm,
        converged: true,
        rank_deficient: false,
        iterations: steps.len(),
    })
}
