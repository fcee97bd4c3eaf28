//! Nearest-subspace and union-of-subspace classifiers over raw training dictionaries.
//!
//! Each class `c` is represented by `A_c`, the matrix of its training samples. A test
//! vector is either regressed against every `A_c` separately (nearest subspace) or once
//! against the concatenation `[A_0 … A_{C−1}]` (union of subspaces), and the per-class
//! coefficients are turned into a label by a [`DecisionRule`].

use nalgebra::DVector;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::regression::{
    self, CoefficientVector, LeastSquares, RidgeSolver, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// Per-class dictionaries whose columns are the training samples of that class.
#[derive(Debug, Clone, PartialEq)]
pub struct RawClassDictionaries {
    per_class: Vec<DataMatrix>,
}

impl RawClassDictionaries {
    pub fn new(per_class: Vec<DataMatrix>) -> Result<Self> {
        if per_class.len() < 2 {
            return Err(Error::fit(format!(
                "at least 2 classes are required, got {}",
                per_class.len()
            )));
        }
        let m = per_class[0].rows();
        if let Some(bad) = per_class.iter().position(|d| d.rows() != m) {
            return Err(Error::dim(format!(
                "class {bad} has {} rows, expected {m}",
                per_class[bad].rows()
            )));
        }
        Ok(RawClassDictionaries { per_class })
    }

    pub fn per_class(&self) -> &[DataMatrix] {
        &self.per_class
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn dim(&self) -> usize {
        self.per_class[0].rows()
    }

    pub fn atom_counts(&self) -> Vec<usize> {
        self.per_class.iter().map(DataMatrix::cols).collect()
    }

    /// `[A_0 A_1 … A_{C−1}]`.
    pub fn union(&self) -> DataMatrix {
        let blocks: Vec<&DataMatrix> = self.per_class.iter().collect();
        DataMatrix::hstack(&blocks).expect("row counts checked at construction")
    }
}

/// Splits the training set by label, keeping dataset order inside each class.
pub fn fit_raw_dictionaries(train: &LabeledDataset) -> Result<RawClassDictionaries> {
    if train.num_classes() < 2 {
        return Err(Error::fit(format!(
            "at least 2 classes are required, got {}",
            train.num_classes()
        )));
    }
    let per_class = (0..train.num_classes())
        .map(|c| {
            let idx = train.class_indices(c);
            if idx.is_empty() {
                return Err(Error::fit(format!("class {c} has no training samples")));
            }
            train.data().select_columns(&idx)
        })
        .collect::<Result<Vec<_>>>()?;
    RawClassDictionaries::new(per_class)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Largest `‖s_c‖_α` wins.
    CoefficientNorm,
    /// Smallest `‖x − A_c s_c‖₂` wins.
    ReconstructionResidual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRule {
    pub kind: RuleKind,
    /// Norm order for [`RuleKind::CoefficientNorm`]; `f64::INFINITY` selects the max norm.
    pub alpha: f64,
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule::residual()
    }
}

impl DecisionRule {
    pub fn residual() -> Self {
        DecisionRule {
            kind: RuleKind::ReconstructionResidual,
            alpha: 2.0,
        }
    }

    pub fn coefficient_norm(alpha: f64) -> Result<Self> {
        let rule = DecisionRule {
            kind: RuleKind::CoefficientNorm,
            alpha,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(Error::input(format!("alpha must be > 0, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Scores one class block. Higher is always better: residuals are negated.
    fn score(&self, block: &DataMatrix, coeffs: &DVector<f64>, x: &DVector<f64>) -> f64 {
        match self.kind {
            RuleKind::CoefficientNorm => alpha_norm(coeffs, self.alpha),
            RuleKind::ReconstructionResidual => -regression::residual_norm(block, x, coeffs),
        }
    }
}

/// `(Σ|vᵢ|^α)^(1/α)`.
pub fn alpha_norm(v: &DVector<f64>, alpha: f64) -> f64 {
    if alpha.is_infinite() {
        v.amax()
    } else {
        v.iter().map(|x| x.abs().powf(alpha)).sum::<f64>().powf(1.0 / alpha)
    }
}

/// A predicted label together with the per-class scores behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub label: usize,
    /// Higher is better. For the residual rule these are negated residual norms.
    pub scores: Vec<f64>,
}

impl Decision {
    pub(crate) fn from_scores(scores: Vec<f64>) -> Self {
        Decision {
            label: argmax_first(&scores),
            scores,
        }
    }
}

/// Index of the largest score; exact ties go to the smallest index.
pub(crate) fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Splits a concatenated coefficient vector into consecutive blocks of the given sizes.
pub fn split_blocks(values: &DVector<f64>, counts: &[usize]) -> Result<Vec<DVector<f64>>> {
    let total: usize = counts.iter().sum();
    if values.len() != total {
        return Err(Error::dim(format!(
            "{} coefficients for {total} atoms",
            values.len()
        )));
    }
    let mut offset = 0;
    Ok(counts
        .iter()
        .map(|&n| {
            let block = values.rows(offset, n).into_owned();
            offset += n;
            block
        })
        .collect())
}

/// Nearest-subspace classifier with per-class least-squares factorisations cached.
#[derive(Debug, Clone)]
pub struct NearestSubspaceClassifier {
    dicts: RawClassDictionaries,
    solvers: Vec<LeastSquares>,
}

impl NearestSubspaceClassifier {
    pub fn new(dicts: RawClassDictionaries) -> Self {
        let solvers = dicts.per_class.iter().map(LeastSquares::new).collect();
        NearestSubspaceClassifier { dicts, solvers }
    }

    pub fn fit(train: &LabeledDataset) -> Result<Self> {
        Ok(Self::new(fit_raw_dictionaries(train)?))
    }

    pub fn dictionaries(&self) -> &RawClassDictionaries {
        &self.dicts
    }

    /// Solves `s_c = argmin ‖x − A_c s‖` for every class and applies `rule`.
    pub fn decide(&self, x: &DVector<f64>, rule: &DecisionRule) -> Result<Decision> {
        rule.validate()?;
        let scores = self
            .solvers
            .iter()
            .zip(&self.dicts.per_class)
            .map(|(solver, block)| {
                let s = solver.solve(x)?;
                Ok(rule.score(block, &s.values, x))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decision::from_scores(scores))
    }

    pub fn classify(&self, x: &DVector<f64>, rule: &DecisionRule) -> Result<usize> {
        Ok(self.decide(x, rule)?.label)
    }
}

pub fn classify_nearest_subspace(
    dicts: &RawClassDictionaries,
    x: &DVector<f64>,
    rule: &DecisionRule,
) -> Result<usize> {
    if x.len() != dicts.dim() {
        return Err(Error::dim(format!(
            "vector has length {}, dictionaries have {} rows",
            x.len(),
            dicts.dim()
        )));
    }
    NearestSubspaceClassifier::new(dicts.clone()).classify(x, rule)
}

/// Regression used for the joint solve of the union classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnionSolver {
    LeastSquares,
    Ridge { lambda: f64 },
    Lasso { lambda: f64, tol: f64, max_iter: usize },
    ElasticNet { lambda1: f64, lambda2: f64, tol: f64, max_iter: usize },
    Omp { k: usize },
}

impl UnionSolver {
    pub fn lasso(lambda: f64) -> Self {
        UnionSolver::Lasso {
            lambda,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn elastic_net(lambda1: f64, lambda2: f64) -> Self {
        UnionSolver::ElasticNet {
            lambda1,
            lambda2,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    LeastSquares(LeastSquares),
    Ridge(RidgeSolver),
    PerCall,
}

/// Union-of-subspace classifier: one regression against `[A_0 … A_{C−1}]`, then a
/// per-class decision on the coefficient blocks.
#[derive(Debug, Clone)]
pub struct UnionSubspaceClassifier {
    dicts: RawClassDictionaries,
    union: DataMatrix,
    solver: UnionSolver,
    prepared: Prepared,
}

impl UnionSubspaceClassifier {
    pub fn new(dicts: RawClassDictionaries, solver: UnionSolver) -> Result<Self> {
        let union = dicts.union();
        let prepared = match solver {
            UnionSolver::LeastSquares => Prepared::LeastSquares(LeastSquares::new(&union)),
            UnionSolver::Ridge { lambda } => Prepared::Ridge(RidgeSolver::new(&union, lambda)?),
            UnionSolver::Omp { k } if k == 0 || k > union.cols() => {
                return Err(Error::dim(format!(
                    "OMP sparsity k = {k} must be in 1..={}",
                    union.cols()
                )))
            }
            _ => Prepared::PerCall,
        };
        Ok(UnionSubspaceClassifier {
            dicts,
            union,
            solver,
            prepared,
        })
    }

    pub fn fit(train: &LabeledDataset, solver: UnionSolver) -> Result<Self> {
        Self::new(fit_raw_dictionaries(train)?, solver)
    }

    pub fn dictionaries(&self) -> &RawClassDictionaries {
        &self.dicts
    }

    /// The joint coefficient vector `s = [s_0 … s_{C−1}]`.
    pub fn regress(&self, x: &DVector<f64>) -> Result<CoefficientVector> {
        let a = &self.union;
        match (&self.prepared, self.solver) {
            (Prepared::LeastSquares(ls), _) => ls.solve(x),
            (Prepared::Ridge(r), _) => r.solve(x),
            (_, UnionSolver::Lasso { lambda, tol, max_iter }) => {
                regression::solve_lasso(a, x, lambda, tol, max_iter)
            }
            (_, UnionSolver::ElasticNet { lambda1, lambda2, tol, max_iter }) => {
                regression::solve_elastic_net(a, x, lambda1, lambda2, tol, max_iter)
            }
            (_, UnionSolver::Omp { k }) => regression::solve_omp(a, x, k),
            (Prepared::PerCall, UnionSolver::LeastSquares | UnionSolver::Ridge { .. }) => {
                unreachable!("direct solvers are always prepared")
            }
        }
    }

    pub fn decide(&self, x: &DVector<f64>, rule: &DecisionRule) -> Result<Decision> {
        rule.validate()?;
        let s = self.regress(x)?;
        let blocks = split_blocks(&s.values, &self.dicts.atom_counts())?;
        let scores = blocks
            .iter()
            .zip(&self.dicts.per_class)
            .map(|(coeffs, block)| rule.score(block, coeffs, x))
            .collect();
        Ok(Decision::from_scores(scores))
    }

    pub fn classify(&self, x: &DVector<f64>, rule: &DecisionRule) -> Result<usize> {
        Ok(self.decide(x, rule)?.label)
    }
}

pub fn classify_union_subspace(
    dicts: &RawClassDictionaries,
    x: &DVector<f64>,
    solver: UnionSolver,
    rule: &DecisionRule,
) -> Result<usize> {
    UnionSubspaceClassifier::new(dicts.clone(), solver)?.classify(x, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cols(rows: usize, data: &[f64]) -> DataMatrix {
        DataMatrix::from_column_slice(rows, data.len() / rows, data).unwrap()
    }

    fn axis_dicts() -> RawClassDictionaries {
        RawClassDictionaries::new(vec![cols(2, &[1.0, 0.0]), cols(2, &[0.0, 1.0])]).unwrap()
    }

    #[test]
    fn partitions_by_label_in_order() {
        let data = cols(1, &[10.0, 11.0, 12.0, 13.0]);
        let ds = LabeledDataset::new(data, vec![0, 1, 0, 1], 2).unwrap();
        let dicts = fit_raw_dictionaries(&ds).unwrap();
        assert_eq!(dicts.per_class()[0].as_matrix().as_slice(), &[10.0, 12.0]);
        assert_eq!(dicts.per_class()[1].as_matrix().as_slice(), &[11.0, 13.0]);
    }

    #[test]
    fn fit_errors() {
        let data = cols(1, &[1.0, 2.0]);
        let single = LabeledDataset::new(data.clone(), vec![0, 0], 1).unwrap();
        assert!(matches!(fit_raw_dictionaries(&single), Err(Error::Fit(_))));
        let empty = LabeledDataset::new(data, vec![0, 0], 3).unwrap();
        let err = fit_raw_dictionaries(&empty).unwrap_err().to_string();
        assert!(err.contains("class 1"), "{err}");
    }

    #[test]
    fn exact_membership_residual_rule() {
        let dicts = RawClassDictionaries::new(vec![
            cols(3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]),
            cols(3, &[1.0, 0.0, 1.0]),
        ])
        .unwrap();
        let x = dvector![2.0, 5.0, 3.0];
        let clf = NearestSubspaceClassifier::new(dicts);
        let d = clf.decide(&x, &DecisionRule::residual()).unwrap();
        assert_eq!(d.label, 0);
        assert!(-d.scores[0] <= 1e-8);
    }

    #[test]
    fn orthogonal_axes_both_rules() {
        let dicts = axis_dicts();
        let x = dvector![2.0, 1.0];
        let clf = NearestSubspaceClassifier::new(dicts.clone());
        let d = clf.decide(&x, &DecisionRule::residual()).unwrap();
        assert_eq!(d.label, 0);
        assert!((d.scores[0] + 1.0).abs() < 1e-12 && (d.scores[1] + 2.0).abs() < 1e-12);

        let rule = DecisionRule::coefficient_norm(2.0).unwrap();
        let d = clf.decide(&x, &rule).unwrap();
        assert_eq!(d.label, 0);
        assert!((d.scores[0] - 2.0).abs() < 1e-12 && (d.scores[1] - 1.0).abs() < 1e-12);
        assert_eq!(classify_nearest_subspace(&dicts, &x, &rule).unwrap(), 0);
    }

    #[test]
    fn ties_go_to_smallest_class() {
        // Identical class dictionaries make every score bit-identical.
        let a = cols(2, &[1.0, 2.0, 0.5, -1.0]);
        let dicts = RawClassDictionaries::new(vec![a.clone(), a]).unwrap();
        let x = dvector![1.0, 1.0];
        for rule in [DecisionRule::residual(), DecisionRule::coefficient_norm(1.0).unwrap()] {
            assert_eq!(classify_nearest_subspace(&dicts, &x, &rule).unwrap(), 0);
            assert_eq!(
                classify_union_subspace(&dicts, &x, UnionSolver::LeastSquares, &rule).unwrap(),
                0
            );
        }
    }

    #[test]
    fn union_exact_training_atom_with_omp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..10 * 6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ds = LabeledDataset::new(cols(10, &data), vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let dicts = fit_raw_dictionaries(&ds).unwrap();
        let x = ds.sample(4);
        let label = classify_union_subspace(
            &dicts,
            &x,
            UnionSolver::Omp { k: 1 },
            &DecisionRule::residual(),
        )
        .unwrap();
        assert_eq!(label, 1);
    }

    #[test]
    fn block_slicing() {
        let s = dvector![1.0, 2.0, 3.0, 4.0, 5.0];
        let blocks = split_blocks(&s, &[3, 2]).unwrap();
        assert_eq!(blocks[0], dvector![1.0, 2.0, 3.0]);
        assert_eq!(blocks[1], dvector![4.0, 5.0]);
        assert!(split_blocks(&s, &[3, 3]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let dicts = axis_dicts();
        let x = dvector![1.0, 2.0, 3.0];
        assert!(classify_nearest_subspace(&dicts, &x, &DecisionRule::residual()).is_err());
        assert!(classify_union_subspace(&dicts, &x, UnionSolver::LeastSquares, &DecisionRule::residual()).is_err());
        assert!(DecisionRule::coefficient_norm(0.0).is_err());
    }

    /// Per-class blocks spanning mutually orthogonal subspaces of R^m.
    fn orthogonal_classes(rng: &mut ChaCha8Rng, m: usize, sizes: &[usize]) -> RawClassDictionaries {
        let total: usize = sizes.iter().sum();
        let g = DMatrix::from_fn(m, total, |_, _| rng.random_range(-1.0..1.0));
        let q = g.qr().q();
        let mut offset = 0;
        let per_class = sizes
            .iter()
            .map(|&n| {
                let basis = q.columns(offset, n).into_owned();
                offset += n;
                // Mix the basis so atoms are not themselves orthonormal.
                let mix = DMatrix::from_fn(n, n, |i, j| {
                    rng.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 }
                });
                DataMatrix::new(basis * mix).unwrap()
            })
            .collect();
        RawClassDictionaries::new(per_class).unwrap()
    }

    #[test]
    fn rules_agree_on_orthogonal_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..100 {
            let dicts = orthogonal_classes(&mut rng, 12, &[2, 3]);
            let c = trial % 2;
            let a = &dicts.per_class()[c];
            let w = DVector::from_fn(a.cols(), |_, _| rng.random_range(0.5..1.5));
            let x = a.as_matrix() * w;
            let residual = DecisionRule::residual();
            assert_eq!(classify_nearest_subspace(&dicts, &x, &residual).unwrap(), c);
            assert_eq!(
                classify_union_subspace(&dicts, &x, UnionSolver::LeastSquares, &residual).unwrap(),
                c
            );
        }
    }

    #[test]
    fn union_equals_nearest_for_orthogonal_spans() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let dicts = orthogonal_classes(&mut rng, 15, &[2, 3, 2]);
            let x = DVector::from_fn(15, |_, _| rng.random_range(-1.0..1.0));
            let nearest = NearestSubspaceClassifier::new(dicts.clone());
            let union = UnionSubspaceClassifier::new(dicts, UnionSolver::LeastSquares).unwrap();
            for rule in [DecisionRule::residual(), DecisionRule::coefficient_norm(2.0).unwrap()] {
                assert_eq!(
                    nearest.classify(&x, &rule).unwrap(),
                    union.classify(&x, &rule).unwrap()
                );
            }
        }
    }

    #[test]
    fn penalised_union_solvers_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dicts = orthogonal_classes(&mut rng, 10, &[2, 2]);
        let x = dicts.per_class()[1].column(0);
        for solver in [
            UnionSolver::Ridge { lambda: 1e-3 },
            UnionSolver::lasso(1e-3),
            UnionSolver::elastic_net(1e-3, 1e-3),
            UnionSolver::Omp { k: 2 },
        ] {
            let label = classify_union_subspace(&dicts, &x, solver, &DecisionRule::residual())
                .unwrap();
            assert_eq!(label, 1, "{solver:?}");
        }
        assert!(UnionSubspaceClassifier::new(dicts, UnionSolver::Omp { k: 5 }).is_err());
    }
}
