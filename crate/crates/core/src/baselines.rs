//! Comparison classifiers: k-nearest neighbours, a linear one-vs-rest SVM and the
//! OMP union-subspace classifier.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::subspace::{
    argmax_first, classify_union_subspace, DecisionRule, RawClassDictionaries, UnionSolver,
};

/// Euclidean k-nearest-neighbour classifier.
#[derive(Debug, Clone)]
pub struct KnnModel {
    train: LabeledDataset,
    k: usize,
}

impl KnnModel {
    pub fn new(train: LabeledDataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::input(format!(
                "k = {k} must be in 1..={} (training set size)",
                train.len()
            )));
        }
        Ok(KnnModel { train, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Majority vote over the `k` nearest training samples. Equal distances prefer the
    /// lower training index; tied votes go to the smallest label.
    pub fn classify(&self, y: &DVector<f64>) -> Result<usize> {
        self.train.data().check_rhs(y)?;
        let data = self.train.data().as_matrix();
        let mut dist: Vec<(f64, usize)> = data
            .column_iter()
            .enumerate()
            .map(|(i, col)| ((col - y).norm_squared(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
        }
        let mut votes = vec![0usize; self.train.num_classes()];
        for &(_, i) in &dist[..self.k] {
            votes[self.train.labels()[i]] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

pub fn knn_classify(model: &KnnModel, y: &DVector<f64>) -> Result<usize> {
    model.classify(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSvmConfig {
    /// L2 regularisation strength.
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearSvmConfig {
    fn default() -> Self {
        LinearSvmConfig {
            reg: 1e-4,
            epochs: 20,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM trained with seeded stochastic subgradient descent
/// (Pegasos step sizes `1/(reg·t)`, iterate averaging).
///
/// Each binary problem appends a constant 1 feature for the bias, which is regularised
/// together with the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    weights: Vec<DVector<f64>>,
    biases: Vec<f64>,
    config: LinearSvmConfig,
    /// Regularised hinge objective of the averaged iterate after each epoch, summed
    /// over the one-vs-rest problems.
    history: Vec<f64>,
}

impl LinearSvmModel {
    pub fn fit(train: &LabeledDataset, config: &LinearSvmConfig) -> Result<Self> {
        if !(config.reg > 0.0 && config.reg.is_finite()) {
            return Err(Error::input(format!("reg must be > 0, got {}", config.reg)));
        }
        if config.epochs == 0 {
            return Err(Error::input("epochs must be at least 1"));
        }
        let counts = train.class_counts();
        if counts.len() < 2 {
            return Err(Error::fit("at least 2 classes are required"));
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::fit(format!("class {c} has no training samples")));
        }

        let m = train.dim();
        let samples: Vec<DVector<f64>> = train
            .data()
            .as_matrix()
            .column_iter()
            .map(|col| col.clone_owned().push(1.0))
            .collect();

        let mut weights = Vec::with_capacity(counts.len());
        let mut biases = Vec::with_capacity(counts.len());
        let mut history = vec![0.0; config.epochs];
        for class in 0..counts.len() {
            let targets: Vec<f64> = train
                .labels()
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(class as u64);
            let (w, per_epoch) = pegasos(&samples, &targets, config, &mut rng);
            for (h, v) in history.iter_mut().zip(per_epoch) {
                *h += v;
            }
            weights.push(w.rows(0, m).into_owned());
            biases.push(w[m]);
        }
        Ok(LinearSvmModel {
            weights,
            biases,
            config: *config,
            history,
        })
    }

    pub fn weights(&self) -> &[DVector<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn config(&self) -> &LinearSvmConfig {
        &self.config
    }

    pub fn objective_history(&self) -> &[f64] {
        &self.history
    }

    pub fn decision_values(&self, y: &DVector<f64>) -> Result<Vec<f64>> {
        let m = self.weights[0].len();
        if y.len() != m {
            return Err(Error::dim(format!("vector has length {}, model expects {m}", y.len())));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.dot(y) + b)
            .collect())
    }

    /// Largest decision value; ties go to the smallest class index.
    pub fn classify(&self, y: &DVector<f64>) -> Result<usize> {
        Ok(argmax_first(&self.decision_values(y)?))
    }
}

fn hinge_objective(samples: &[DVector<f64>], targets: &[f64], w: &DVector<f64>, reg: f64) -> f64 {
    let loss: f64 = samples
        .iter()
        .zip(targets)
        .map(|(x, &t)| (1.0 - t * w.dot(x)).max(0.0))
        .sum();
    0.5 * reg * w.norm_squared() + loss / samples.len() as f64
}

fn pegasos(
    samples: &[DVector<f64>],
    targets: &[f64],
    config: &LinearSvmConfig,
    rng: &mut ChaCha8Rng,
) -> (DVector<f64>, Vec<f64>) {
    let dim = samples[0].len();
    let radius = 1.0 / config.reg.sqrt();
    let mut w = DVector::zeros(dim);
    let mut avg = DVector::zeros(dim);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut t = 0usize;
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (config.reg * t as f64);
            let margin = targets[i] * w.dot(&samples[i]);
            w *= 1.0 - eta * config.reg;
            if margin < 1.0 {
                w.axpy(eta * targets[i], &samples[i], 1.0);
            }
            let norm = w.norm();
            if norm > radius {
                w *= radius / norm;
            }
            avg += (&w - &avg) / t as f64;
        }
        history.push(hinge_objective(samples, targets, &avg, config.reg));
    }
    (avg, history)
}

pub fn fit_linear_svm(train: &LabeledDataset, reg: f64, epochs: usize, seed: u64) -> Result<LinearSvmModel> {
    LinearSvmModel::fit(train, &LinearSvmConfig { reg, epochs, seed })
}

pub fn svm_classify(model: &LinearSvmModel, y: &DVector<f64>) -> Result<usize> {
    model.classify(y)
}

/// Union-subspace classification with a `k`-sparse OMP regression.
pub fn omp_classify(
    dicts: &RawClassDictionaries,
    y: &DVector<f64>,
    k: usize,
    rule: &DecisionRule,
) -> Result<usize> {
    classify_union_subspace(dicts, y, UnionSolver::Omp { k }, rule)
}
