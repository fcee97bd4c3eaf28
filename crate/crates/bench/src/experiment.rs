//! Trial execution and aggregation.
//!
//! Trial `t` uses the generator seed `derive_seed(master_seed, t)` for every noise level,
//! so all levels of a trial share the same lines, line parameters and noise draws and
//! differ only in the noise scale. Seeds are fixed before any parallel work starts and
//! results are merged in (noise level, classifier) order, so output does not depend on
//! scheduling.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use worm_core::baselines::{KnnModel, LinearSvmConfig, LinearSvmModel};
use worm_core::subspace::{NearestSubspaceClassifier, UnionSolver, UnionSubspaceClassifier};
use worm_core::synthetic::{derive_seed, generate_with_clean, NoiseSpec, SyntheticData};
use worm_core::worm::WormModel;
use worm_core::LabeledDataset;

use crate::config::{ClassifierSpec, ExperimentConfig};
use crate::error::BenchError;
use crate::report::{BenchmarkReport, ReportRow};

/// Sub-seed stream for the SVM's sampling order, disjoint from the generator's streams.
const SVM_STREAM: u64 = 1000;

pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, trial as u64)
}

/// Outcome of one classifier on one trial of one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub accuracy: Result<f64, String>,
    pub wall_time_ms: f64,
}

/// Everything measured on one generated dataset.
#[derive(Debug, Clone)]
struct TrialOutcome {
    snr_db: f64,
    cells: Vec<CellResult>,
}

/// Fits `spec` on `train` and returns its accuracy on `test`.
pub fn evaluate(
    spec: &ClassifierSpec,
    train: &LabeledDataset,
    test: &LabeledDataset,
    seed: u64,
) -> worm_core::Result<f64> {
    let predicted: Vec<usize> = match spec {
        ClassifierSpec::Worm(config) => {
            let model = WormModel::fit(train, config)?;
            predict(test, |y| model.classify(y))?
        }
        ClassifierSpec::Knn { k } => {
            let model = KnnModel::new(train.clone(), *k)?;
            predict(test, |y| model.classify(y))?
        }
        ClassifierSpec::Svm { reg, epochs } => {
            let config = LinearSvmConfig {
                reg: *reg,
                epochs: *epochs,
                seed: derive_seed(seed, SVM_STREAM),
            };
            let model = LinearSvmModel::fit(train, &config)?;
            predict(test, |y| model.classify(y))?
        }
        ClassifierSpec::Omp { k, rule } => {
            let model = UnionSubspaceClassifier::fit(train, UnionSolver::Omp { k: *k })?;
            predict(test, |y| model.classify(y, rule))?
        }
        ClassifierSpec::NearestSubspace { rule } => {
            let model = NearestSubspaceClassifier::fit(train)?;
            predict(test, |y| model.classify(y, rule))?
        }
        ClassifierSpec::UnionSubspace { solver, rule } => {
            let model = UnionSubspaceClassifier::fit(train, *solver)?;
            predict(test, |y| model.classify(y, rule))?
        }
    };
    test.accuracy(&predicted)
}

fn predict(
    test: &LabeledDataset,
    classify: impl Fn(&DVector<f64>) -> worm_core::Result<usize>,
) -> worm_core::Result<Vec<usize>> {
    (0..test.len()).map(|i| classify(&test.sample(i))).collect()
}

fn run_trial(
    config: &ExperimentConfig,
    specs: &[ClassifierSpec],
    noise: NoiseSpec,
    seed: u64,
) -> Result<TrialOutcome, BenchError> {
    let data: SyntheticData = generate_with_clean(&config.generator(noise, seed))?;
    let cells = specs
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let accuracy = evaluate(spec, &data.train, &data.test, seed).map_err(|e| e.to_string());
            CellResult {
                accuracy,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect();
    Ok(TrialOutcome {
        snr_db: data.snr_db(),
        cells,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<BenchmarkReport, BenchError> {
    config.validate()?;
    let specs = config.classifier_specs()?;
    let sweep = config.noise_sweep();
    let units: Vec<(usize, usize, u64)> = (0..sweep.len())
        .flat_map(|level| {
            (0..config.trials).map(move |trial| (level, trial, trial_seed(config.master_seed, trial)))
        })
        .collect();

    let run = |&(level, _, seed): &(usize, usize, u64)| run_trial(config, &specs, sweep[level], seed);
    let outcomes: Vec<TrialOutcome> = if config.parallel {
        units.par_iter().map(run).collect::<Result<_, _>>()?
    } else {
        units.iter().map(run).collect::<Result<_, _>>()?
    };

    let mut rows = Vec::with_capacity(sweep.len() * specs.len());
    for (noise, trials) in sweep.iter().zip(outcomes.chunks(config.trials)) {
        let mean_snr_db = trials.iter().map(|t| t.snr_db).sum::<f64>() / trials.len() as f64;
        for (i, spec) in specs.iter().enumerate() {
            let cells: Vec<&CellResult> = trials.iter().map(|t| &t.cells[i]).collect();
            rows.push(aggregate(spec, noise, mean_snr_db, &cells, config.record_wall_time));
        }
    }
    Ok(BenchmarkReport { rows })
}

fn aggregate(
    spec: &ClassifierSpec,
    noise: &NoiseSpec,
    mean_snr_db: f64,
    cells: &[&CellResult],
    record_wall_time: bool,
) -> ReportRow {
    let n = cells.len();
    let wall_time_ms =
        record_wall_time.then(|| cells.iter().map(|c| c.wall_time_ms).sum::<f64>() / n as f64);
    let accuracies: Result<Vec<f64>, String> = cells.iter().map(|c| c.accuracy.clone()).collect();
    let (mean_accuracy, accuracy_stddev, error) = match accuracies {
        Ok(acc) => {
            let (mean, sd) = mean_and_stddev(&acc);
            (Some(mean), Some(sd), None)
        }
        Err(e) => (None, None, Some(e)),
    };
    ReportRow {
        classifier: spec.name(),
        noise_kind: noise.kind,
        noise_level: noise.level,
        mean_snr_db,
        mean_accuracy,
        accuracy_stddev,
        trials: n,
        wall_time_ms,
        error,
    }
    .quantized()
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Writes the train and test split of every trial and noise level as labelled CSV.
pub fn generate_datasets(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let mut written = Vec::new();
    for noise in config.noise_sweep() {
        for trial in 0..config.trials {
            let seed = trial_seed(config.master_seed, trial);
            let data = generate_with_clean(&config.generator(noise, seed))?;
            for (split, set) in [("train", &data.train), ("test", &data.test)] {
                let path = out_dir.join(format!(
                    "{}_{}_trial{trial}_{split}.csv",
                    noise.kind, noise.level
                ));
                set.write_csv(&path)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
