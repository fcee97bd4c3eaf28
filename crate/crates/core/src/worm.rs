//! Weighted orthogonal regression classification.
//!
//! Fitting summarises every class `c` by the leading left singular vectors `D_c` of its
//! training matrix, keeping just enough components to capture a fraction `τ` of the
//! squared singular-value energy. The per-class bases are concatenated into one
//! dictionary `D = [D_0 … D_{C−1}]`.
//!
//! Classifying `y` solves one unconstrained regression `x = argmin ‖y − Dx‖₂` in closed
//! form and picks the class with the largest weighted score
//!
//! ```text
//! score_c = Σᵢ w(x_c(i)) · λ_c(i)
//! ```
//!
//! where `λ_c` are the retained singular values of class `c` and `w` is `|·|`
//! ([`DecisionVariant::WeightedAbs`]) or the identity ([`DecisionVariant::WeightedSigned`]).
//!
//! Scaling the atoms by inverse singular values, `D_new = D·Σ⁻¹`, scales the regression
//! solution by `Σ`; [`equivalence_transform`] computes that solution directly so the
//! identity `x_new = Σ·x` can be checked.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::regression::{CoefficientVector, LeastSquares};
use crate::subspace::{fit_raw_dictionaries, Decision};

pub const DEFAULT_TAU: f64 = 0.95;
/// Singular values at or below this fraction of the largest one are discarded before
/// the energy threshold is applied.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Largest tolerated deviation of `basisᵀ·basis` from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

const MODEL_FORMAT: &str = "worm-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionVariant {
    /// `Σ |x_c(i)|·λ_c(i)`; unaffected by the arbitrary sign of singular vectors.
    #[default]
    WeightedAbs,
    /// `Σ x_c(i)·λ_c(i)`.
    WeightedSigned,
}

impl std::str::FromStr for DecisionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_abs" | "abs" => Ok(DecisionVariant::WeightedAbs),
            "weighted_signed" | "signed" => Ok(DecisionVariant::WeightedSigned),
            other => Err(Error::Config(format!(
                "unknown decision variant {other:?} (expected weighted_abs or weighted_signed)"
            ))),
        }
    }
}

impl std::fmt::Display for DecisionVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecisionVariant::WeightedAbs => "weighted_abs",
            DecisionVariant::WeightedSigned => "weighted_signed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WormConfig {
    /// Energy threshold τ in (0, 1].
    pub tau: f64,
    pub variant: DecisionVariant,
    /// Subtract each class's mean column before the SVD.
    pub center: bool,
}

impl Default for WormConfig {
    fn default() -> Self {
        WormConfig {
            tau: DEFAULT_TAU,
            variant: DecisionVariant::default(),
            center: false,
        }
    }
}

impl WormConfig {
    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::input(format!("tau must be in (0, 1], got {tau}")));
    }
    Ok(())
}

/// Orthonormal basis of one class plus the singular values that weight it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDictionary {
    basis: DataMatrix,
    weights: Vec<f64>,
    class_id: usize,
}

impl ClassDictionary {
    pub fn new(basis: DataMatrix, weights: Vec<f64>, class_id: usize) -> Result<Self> {
        if weights.len() != basis.cols() {
            return Err(Error::dim(format!(
                "{} weights for {} basis vectors",
                weights.len(),
                basis.cols()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::input("weights must be finite and strictly positive"));
        }
        if weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::input("weights must be non-increasing"));
        }
        let dev = orthonormality_error(&basis);
        if dev > ORTHONORMALITY_TOL {
            return Err(Error::input(format!(
                "basis is not orthonormal (max |BᵀB − I| = {dev:e})"
            )));
        }
        Ok(ClassDictionary {
            basis,
            weights,
            class_id,
        })
    }

    pub fn basis(&self) -> &DataMatrix {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    /// Number of retained components `k_c`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `max |BᵀB − I|`.
pub fn orthonormality_error(basis: &DataMatrix) -> f64 {
    let b = basis.as_matrix();
    let gram = b.tr_mul(b);
    (gram - DMatrix::identity(b.ncols(), b.ncols())).amax()
}

/// Number of leading components to keep.
///
/// `singular_values` must be sorted in decreasing order. Values at or below
/// [`RANK_CUTOFF`]`·σ_max` are dropped first; the result is the smallest `k` with
/// `Σ_{i<k} σᵢ² ≥ τ·Σ σᵢ²`, and `τ = 1` keeps every surviving component. Returns 0 only
/// when every singular value is zero.
pub fn retained_components(singular_values: &[f64], tau: f64) -> usize {
    let Some(&sigma_max) = singular_values.first() else {
        return 0;
    };
    if sigma_max <= 0.0 {
        return 0;
    }
    let rank = singular_values
        .iter()
        .take_while(|&&s| s > RANK_CUTOFF * sigma_max)
        .count();
    if tau >= 1.0 {
        return rank;
    }
    let energies: Vec<f64> = singular_values[..rank].iter().map(|s| s * s).collect();
    let total: f64 = energies.iter().sum();
    let mut cumulative = 0.0;
    for (i, e) in energies.iter().enumerate() {
        cumulative += e;
        if cumulative / total >= tau {
            return i + 1;
        }
    }
    rank
}

/// Picks the basis of one class from the SVD of its training matrix.
pub fn select_basis(a: &DataMatrix, tau: f64, class_id: usize) -> Result<ClassDictionary> {
    select_basis_with(a, tau, class_id, false)
}

/// [`select_basis`] with optional mean-centering of the class columns.
pub fn select_basis_with(
    a: &DataMatrix,
    tau: f64,
    class_id: usize,
    center: bool,
) -> Result<ClassDictionary> {
    check_tau(tau)?;
    let mut m = a.as_matrix().clone();
    if center {
        let mean = m.column_mean();
        for mut col in m.column_iter_mut() {
            col -= &mean;
        }
    }
    if m.iter().all(|&v| v == 0.0) {
        return Err(Error::fit(format!(
            "class {class_id} training matrix is all zeros{}",
            if center { " after centering" } else { "" }
        )));
    }

    let svd = m.svd(true, false);
    let u = svd.u.expect("SVD computed with U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let k = retained_components(&sorted, tau);
    if k == 0 {
        return Err(Error::fit(format!("class {class_id} has numerical rank 0")));
    }
    let basis = DataMatrix::new(u.select_columns(&order[..k]))?;
    ClassDictionary::new(basis, sorted[..k].to_vec(), class_id)
}

#[derive(Debug, Clone)]
enum SolverKind {
    Qr { q: DMatrix<f64>, r: DMatrix<f64> },
    MinNorm(LeastSquares),
}

/// Closed-form solver for `argmin ‖y − Dx‖₂` on a fixed dictionary.
///
/// Uses a thin QR factorisation of `D`. When `R` is numerically singular the
/// minimum-norm SVD solution is used instead and every result carries
/// `rank_deficient = true`.
#[derive(Debug, Clone)]
pub struct DictionarySolver {
    matrix: DataMatrix,
    kind: SolverKind,
}

/// Relative size of the smallest `|R_ii|` below which the QR route is abandoned.
const QR_SINGULAR_RATIO: f64 = 1e-10;

impl DictionarySolver {
    pub fn new(d: &DataMatrix) -> Self {
        let kind = if d.rows() >= d.cols() {
            let qr = d.as_matrix().clone().qr();
            let r = qr.r();
            let diag = r.diagonal().abs();
            if diag.max() > 0.0 && diag.min() > QR_SINGULAR_RATIO * diag.max() {
                Some(SolverKind::Qr { q: qr.q(), r })
            } else {
                None
            }
        } else {
            None
        };
        DictionarySolver {
            matrix: d.clone(),
            kind: kind.unwrap_or_else(|| SolverKind::MinNorm(LeastSquares::new(d))),
        }
    }

    pub fn is_ill_conditioned(&self) -> bool {
        matches!(self.kind, SolverKind::MinNorm(_))
    }

    pub fn solve(&self, y: &DVector<f64>) -> Result<CoefficientVector> {
        match &self.kind {
            SolverKind::MinNorm(ls) => {
                let mut out = ls.solve(y)?;
                out.rank_deficient = true;
                Ok(out)
            }
            SolverKind::Qr { q, r } => {
                self.matrix.check_rhs(y)?;
                let values = r
                    .solve_upper_triangular(&q.tr_mul(y))
                    .ok_or_else(|| Error::input("triangular factor is singular"))?;
                let residual_norm = (y - self.matrix.as_matrix() * &values).norm();
                Ok(CoefficientVector {
                    values,
                    residual_norm,
                    converged: true,
                    rank_deficient: false,
                    iterations: 0,
                })
            }
        }
    }
}

/// `x = (DᵀD)⁻¹Dᵀy` through [`DictionarySolver`].
pub fn regress_dictionary(d: &DataMatrix, y: &DVector<f64>) -> Result<CoefficientVector> {
    d.check_rhs(y)?;
    DictionarySolver::new(d).solve(y)
}

/// Regression against `D·Σ⁻¹`, where `Σ = diag(weights)`.
pub fn regress_scaled_dictionary(
    d: &DataMatrix,
    weights: &[f64],
    y: &DVector<f64>,
) -> Result<CoefficientVector> {
    if weights.len() != d.cols() {
        return Err(Error::dim(format!(
            "{} weights for {} atoms",
            weights.len(),
            d.cols()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::input("weights must be finite and strictly positive"));
    }
    let mut scaled = d.as_matrix().clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(weights) {
        col /= w;
    }
    regress_dictionary(&DataMatrix::new(scaled)?, y)
}

/// A fitted classifier: per-class bases, the assembled dictionary and its factorisation.
#[derive(Debug, Clone)]
pub struct WormModel {
    dictionaries: Vec<ClassDictionary>,
    config: WormConfig,
    assembled: DataMatrix,
    /// `offsets[c]..offsets[c + 1]` are the columns of class `c` in `assembled`.
    offsets: Vec<usize>,
    solver: DictionarySolver,
}

impl WormModel {
    pub fn fit(train: &LabeledDataset, config: &WormConfig) -> Result<Self> {
        config.validate()?;
        let raw = fit_raw_dictionaries(train)?;
        let dictionaries = raw
            .per_class()
            .iter()
            .enumerate()
            .map(|(c, a)| select_basis_with(a, config.tau, c, config.center))
            .collect::<Result<Vec<_>>>()?;
        Self::from_dictionaries(dictionaries, *config)
    }

    /// Assembles `D = [D_0 … D_{C−1}]`. Dictionaries must be ordered by class id.
    pub fn from_dictionaries(dictionaries: Vec<ClassDictionary>, config: WormConfig) -> Result<Self> {
        config.validate()?;
        if dictionaries.len() < 2 {
            return Err(Error::fit(format!(
                "at least 2 classes are required, got {}",
                dictionaries.len()
            )));
        }
        if let Some((c, d)) = dictionaries
            .iter()
            .enumerate()
            .find(|(c, d)| d.class_id != *c)
        {
            return Err(Error::input(format!(
                "dictionary at position {c} has class id {}",
                d.class_id
            )));
        }
        let m = dictionaries[0].basis.rows();
        let total: usize = dictionaries.iter().map(ClassDictionary::len).sum();
        if total > m {
            let counts: Vec<usize> = dictionaries.iter().map(ClassDictionary::len).collect();
            return Err(Error::fit(format!(
                "{total} retained components exceed the feature dimension {m} \
                 (per class: {counts:?}); use a smaller tau"
            )));
        }
        let blocks: Vec<&DataMatrix> = dictionaries.iter().map(|d| &d.basis).collect();
        let assembled = DataMatrix::hstack(&blocks)?;
        let mut offsets = Vec::with_capacity(dictionaries.len() + 1);
        offsets.push(0);
        for d in &dictionaries {
            offsets.push(offsets.last().unwrap() + d.len());
        }
        let solver = DictionarySolver::new(&assembled);
        Ok(WormModel {
            dictionaries,
            config,
            assembled,
            offsets,
            solver,
        })
    }

    pub fn dictionaries(&self) -> &[ClassDictionary] {
        &self.dictionaries
    }

    pub fn config(&self) -> &WormConfig {
        &self.config
    }

    pub fn assembled(&self) -> &DataMatrix {
        &self.assembled
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        self.assembled.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.dictionaries.len()
    }

    /// `Σk_c`.
    pub fn num_atoms(&self) -> usize {
        self.assembled.cols()
    }

    /// All class weights concatenated in dictionary order, the diagonal of `Σ`.
    pub fn concatenated_weights(&self) -> Vec<f64> {
        self.dictionaries
            .iter()
            .flat_map(|d| d.weights.iter().copied())
            .collect()
    }

    /// `true` when `DᵀD` was numerically singular at fit time.
    pub fn is_ill_conditioned(&self) -> bool {
        self.solver.is_ill_conditioned()
    }

    pub fn regress(&self, y: &DVector<f64>) -> Result<CoefficientVector> {
        self.solver.solve(y)
    }

    pub fn decide(&self, coeffs: &CoefficientVector) -> Result<Decision> {
        self.decide_values(&coeffs.values)
    }

    fn decide_values(&self, x: &DVector<f64>) -> Result<Decision> {
        if x.len() != self.num_atoms() {
            return Err(Error::dim(format!(
                "{} coefficients for {} atoms",
                x.len(),
                self.num_atoms()
            )));
        }
        let scores = self
            .dictionaries
            .iter()
            .zip(self.offsets.windows(2))
            .map(|(d, span)| {
                let block = x.rows(span[0], span[1] - span[0]);
                block
                    .iter()
                    .zip(&d.weights)
                    .map(|(&xi, &w)| match self.config.variant {
                        DecisionVariant::WeightedAbs => xi.abs() * w,
                        DecisionVariant::WeightedSigned => xi * w,
                    })
                    .sum()
            })
            .collect();
        Ok(Decision::from_scores(scores))
    }

    pub fn classify(&self, y: &DVector<f64>) -> Result<usize> {
        Ok(self.decide(&self.regress(y)?)?.label)
    }

    /// Regression against `D·Σ⁻¹` with `Σ` the concatenated class weights; equals
    /// `Σ·x` for `x = self.regress(y)`.
    pub fn equivalence_transform(&self, y: &DVector<f64>) -> Result<CoefficientVector> {
        regress_scaled_dictionary(&self.assembled, &self.concatenated_weights(), y)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::input(format!("bad model file: {e}")))?;
        file.into_model()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub fn fit_worm(train: &LabeledDataset, tau: f64, variant: DecisionVariant) -> Result<WormModel> {
    WormModel::fit(
        train,
        &WormConfig {
            tau,
            variant,
            center: false,
        },
    )
}

pub fn worm_regress(model: &WormModel, y: &DVector<f64>) -> Result<CoefficientVector> {
    model.regress(y)
}

pub fn worm_decide(model: &WormModel, coeffs: &CoefficientVector) -> Result<Decision> {
    model.decide(coeffs)
}

pub fn classify_worm(model: &WormModel, y: &DVector<f64>) -> Result<usize> {
    model.classify(y)
}

pub fn equivalence_transform(model: &WormModel, y: &DVector<f64>) -> Result<CoefficientVector> {
    model.equivalence_transform(y)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    dim: usize,
    num_classes: usize,
    tau: f64,
    variant: DecisionVariant,
    center: bool,
    classes: Vec<ClassRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRecord {
    class_id: usize,
    k: usize,
    weights: Vec<f64>,
    /// Column-major `dim × k`.
    basis: Vec<f64>,
}

impl From<&WormModel> for ModelFile {
    fn from(model: &WormModel) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            dim: model.dim(),
            num_classes: model.num_classes(),
            tau: model.config.tau,
            variant: model.config.variant,
            center: model.config.center,
            classes: model
                .dictionaries
                .iter()
                .map(|d| ClassRecord {
                    class_id: d.class_id,
                    k: d.len(),
                    weights: d.weights.clone(),
                    basis: d.basis.as_matrix().as_slice().to_vec(),
                })
                .collect(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<WormModel> {
        if self.format != MODEL_FORMAT {
            return Err(Error::input(format!("unexpected format tag {:?}", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::input(format!("unsupported model version {}", self.version)));
        }
        if self.classes.len() != self.num_classes {
            return Err(Error::input(format!(
                "header says {} classes, file has {}",
                self.num_classes,
                self.classes.len()
            )));
        }
        let dim = self.dim;
        let dictionaries = self
            .classes
            .into_iter()
            .map(|c| {
                if c.weights.len() != c.k {
                    return Err(Error::input(format!(
                        "class {}: k = {} but {} weights",
                        c.class_id,
                        c.k,
                        c.weights.len()
                    )));
                }
                let basis = DataMatrix::from_column_slice(dim, c.k, &c.basis)?;
                ClassDictionary::new(basis, c.weights, c.class_id)
            })
            .collect::<Result<Vec<_>>>()?;
        WormModel::from_dictionaries(
            dictionaries,
            WormConfig {
                tau: self.tau,
                variant: self.variant,
                center: self.center,
            },
        )
    }
}
