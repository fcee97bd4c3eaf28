//! Experiment configuration: a flat TOML file whose keys mirror the experiment fields.
//!
//! Unknown keys are rejected so that typos fail loudly instead of silently falling back
//! to defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use worm_core::baselines::LinearSvmConfig;
use worm_core::regression::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use worm_core::subspace::{DecisionRule, RuleKind, UnionSolver};
use worm_core::synthetic::{GeneratorConfig, NoiseKind, NoiseSpec};
use worm_core::worm::{DecisionVariant, WormConfig, DEFAULT_TAU};

use crate::error::BenchError;
use crate::report::ReportFormat;

/// Raw file contents. Every key is optional except `classifiers` and at least one noise
/// level list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub num_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub t_min: f64,
    pub t_max: f64,

    pub gaussian_levels: Vec<f64>,
    pub salt_pepper_levels: Vec<f64>,
    /// Fixed salt-and-pepper amplitude; by default the largest absolute clean entry.
    pub salt_pepper_amplitude: Option<f64>,
    pub multiplicative_levels: Vec<f64>,

    /// Any of `worm`, `knn`, `svm`, `omp`, `nearest_subspace`, `union_subspace`.
    pub classifiers: Vec<String>,
    pub worm_tau: Vec<f64>,
    pub worm_variant: DecisionVariant,
    pub worm_center: bool,
    pub knn_k: Vec<usize>,
    pub svm_reg: f64,
    pub svm_epochs: usize,
    pub omp_k: Vec<usize>,
    pub omp_rule: String,
    pub omp_alpha: f64,
    pub nearest_rule: String,
    pub nearest_alpha: f64,
    /// One of `least_squares`, `ridge`, `lasso`, `elastic_net`, `omp`.
    pub union_solver: String,
    pub union_lambda: f64,
    pub union_lambda2: f64,
    pub union_omp_k: usize,
    pub union_rule: String,
    pub union_alpha: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,

    pub trials: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// `csv`, `tsv` or `jsonl`.
    pub format: String,
    pub parallel: bool,
    /// Timing makes reports run-dependent, so it is opt-in.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let generator = GeneratorConfig::default();
        ExperimentConfig {
            dim: generator.dim,
            num_classes: generator.num_classes,
            n_train: generator.n_train,
            n_test: generator.n_test,
            t_min: generator.t_min,
            t_max: generator.t_max,
            gaussian_levels: Vec::new(),
            salt_pepper_levels: Vec::new(),
            salt_pepper_amplitude: None,
            multiplicative_levels: Vec::new(),
            classifiers: Vec::new(),
            worm_tau: vec![DEFAULT_TAU],
            worm_variant: DecisionVariant::default(),
            worm_center: false,
            knn_k: vec![1],
            svm_reg: LinearSvmConfig::default().reg,
            svm_epochs: LinearSvmConfig::default().epochs,
            omp_k: vec![5],
            omp_rule: "residual".into(),
            omp_alpha: 2.0,
            nearest_rule: "residual".into(),
            nearest_alpha: 2.0,
            union_solver: "least_squares".into(),
            union_lambda: 0.01,
            union_lambda2: 0.01,
            union_omp_k: 5,
            union_rule: "residual".into(),
            union_alpha: 2.0,
            solver_tol: DEFAULT_TOL,
            solver_max_iter: DEFAULT_MAX_ITER,
            trials: 5,
            master_seed: 0,
            output_dir: PathBuf::from("results"),
            format: "csv".into(),
            parallel: true,
            record_wall_time: false,
        }
    }
}

/// One configured classifier with all hyperparameters resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierSpec {
    Worm(WormConfig),
    Knn { k: usize },
    Svm { reg: f64, epochs: usize },
    Omp { k: usize, rule: DecisionRule },
    NearestSubspace { rule: DecisionRule },
    UnionSubspace { solver: UnionSolver, rule: DecisionRule },
}

impl ClassifierSpec {
    /// Report label. Distinct specs get distinct names.
    pub fn name(&self) -> String {
        match self {
            ClassifierSpec::Worm(c) => {
                let center = if c.center { "/centered" } else { "" };
                format!("worm(tau={}/{}{center})", c.tau, c.variant)
            }
            ClassifierSpec::Knn { k } => format!("knn(k={k})"),
            ClassifierSpec::Svm { reg, epochs } => {
                format!("linear-SVM (stand-in)(reg={reg}/epochs={epochs})")
            }
            ClassifierSpec::Omp { k, rule } => format!("omp(k={k}/{})", rule_name(rule)),
            ClassifierSpec::NearestSubspace { rule } => {
                format!("nearest-subspace({})", rule_name(rule))
            }
            ClassifierSpec::UnionSubspace { solver, rule } => {
                format!("union-subspace({}/{})", solver_name(solver), rule_name(rule))
            }
        }
    }
}

fn rule_name(rule: &DecisionRule) -> String {
    match rule.kind {
        RuleKind::ReconstructionResidual => "residual".into(),
        RuleKind::CoefficientNorm => format!("coefficient_norm:{}", rule.alpha),
    }
}

fn solver_name(solver: &UnionSolver) -> String {
    match solver {
        UnionSolver::LeastSquares => "least_squares".into(),
        UnionSolver::Ridge { lambda } => format!("ridge:{lambda}"),
        UnionSolver::Lasso { lambda, .. } => format!("lasso:{lambda}"),
        UnionSolver::ElasticNet { lambda1, lambda2, .. } => format!("elastic_net:{lambda1}:{lambda2}"),
        UnionSolver::Omp { k } => format!("omp:{k}"),
    }
}

fn config_error(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}

fn parse_rule(key: &str, kind: &str, alpha: f64) -> Result<DecisionRule, BenchError> {
    let rule = match kind {
        "residual" => DecisionRule::residual(),
        "coefficient_norm" => DecisionRule {
            kind: RuleKind::CoefficientNorm,
            alpha,
        },
        other => {
            return Err(config_error(format!(
                "{key} must be \"residual\" or \"coefficient_norm\", got {other:?}"
            )))
        }
    };
    rule.validate().map_err(|e| config_error(format!("{key}: {e}")))?;
    Ok(rule)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            BenchError::Config(msg) => config_error(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(config_error("trials must be at least 1"));
        }
        self.generator(NoiseSpec::none(), 0)
            .validate()
            .map_err(|e| config_error(e.to_string()))?;
        let sweep = self.noise_sweep();
        if sweep.is_empty() {
            return Err(config_error(
                "the noise sweep is empty; set gaussian_levels, salt_pepper_levels or multiplicative_levels",
            ));
        }
        for spec in &sweep {
            spec.validate().map_err(|e| config_error(e.to_string()))?;
        }
        if self.classifier_specs()?.is_empty() {
            return Err(config_error("the classifier list is empty"));
        }
        self.report_format()?;
        Ok(())
    }

    pub fn report_format(&self) -> Result<ReportFormat, BenchError> {
        self.format.parse()
    }

    /// Generator settings for one noise level of one trial.
    pub fn generator(&self, noise: NoiseSpec, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            dim: self.dim,
            num_classes: self.num_classes,
            n_train: self.n_train,
            n_test: self.n_test,
            t_min: self.t_min,
            t_max: self.t_max,
            noise,
            seed,
        }
    }

    /// Every noise level in report order: Gaussian, salt-and-pepper, multiplicative,
    /// each in the order listed.
    pub fn noise_sweep(&self) -> Vec<NoiseSpec> {
        let mut sweep = Vec::new();
        for kind in NoiseKind::ALL {
            let levels = match kind {
                NoiseKind::Gaussian => &self.gaussian_levels,
                NoiseKind::SaltPepper => &self.salt_pepper_levels,
                NoiseKind::Multiplicative => &self.multiplicative_levels,
            };
            for &level in levels {
                sweep.push(NoiseSpec {
                    kind,
                    level,
                    amplitude: match kind {
                        NoiseKind::SaltPepper => self.salt_pepper_amplitude,
                        _ => None,
                    },
                });
            }
        }
        sweep
    }

    /// Classifiers in the order listed, with list-valued hyperparameters expanded.
    pub fn classifier_specs(&self) -> Result<Vec<ClassifierSpec>, BenchError> {
        let mut specs = Vec::new();
        for name in &self.classifiers {
            match name.as_str() {
                "worm" => {
                    for &tau in &self.worm_tau {
                        let config = WormConfig {
                            tau,
                            variant: self.worm_variant,
                            center: self.worm_center,
                        };
                        config.validate().map_err(|e| config_error(format!("worm_tau: {e}")))?;
                        specs.push(ClassifierSpec::Worm(config));
                    }
                }
                "knn" => {
                    for &k in &self.knn_k {
                        if k == 0 || k > self.n_train {
                            return Err(config_error(format!("knn_k = {k} must be in 1..=n_train")));
                        }
                        specs.push(ClassifierSpec::Knn { k });
                    }
                }
                "svm" => {
                    if !(self.svm_reg > 0.0 && self.svm_reg.is_finite()) || self.svm_epochs == 0 {
                        return Err(config_error("svm_reg must be > 0 and svm_epochs >= 1"));
                    }
                    specs.push(ClassifierSpec::Svm {
                        reg: self.svm_reg,
                        epochs: self.svm_epochs,
                    });
                }
                "omp" => {
                    let rule = parse_rule("omp_rule", &self.omp_rule, self.omp_alpha)?;
                    for &k in &self.omp_k {
                        if k == 0 || k > self.n_train {
                            return Err(config_error(format!("omp_k = {k} must be in 1..=n_train")));
                        }
                        specs.push(ClassifierSpec::Omp { k, rule });
                    }
                }
                "nearest_subspace" => specs.push(ClassifierSpec::NearestSubspace {
                    rule: parse_rule("nearest_rule", &self.nearest_rule, self.nearest_alpha)?,
                }),
                "union_subspace" => specs.push(ClassifierSpec::UnionSubspace {
                    solver: self.union_solver()?,
                    rule: parse_rule("union_rule", &self.union_rule, self.union_alpha)?,
                }),
                other => return Err(config_error(format!("unknown classifier {other:?}"))),
            }
        }
        let names: Vec<String> = specs.iter().map(ClassifierSpec::name).collect();
        if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
            return Err(config_error(format!("classifier {} is listed twice", dup.1)));
        }
        Ok(specs)
    }

    fn union_solver(&self) -> Result<UnionSolver, BenchError> {
        let (l1, l2) = (self.union_lambda, self.union_lambda2);
        if !(l1 >= 0.0 && l1.is_finite() && l2 >= 0.0 && l2.is_finite()) {
            return Err(config_error("union_lambda and union_lambda2 must be finite and >= 0"));
        }
        if self.solver_tol.is_nan() || self.solver_tol <= 0.0 || self.solver_max_iter == 0 {
            return Err(config_error("solver_tol must be > 0 and solver_max_iter >= 1"));
        }
        Ok(match self.union_solver.as_str() {
            "least_squares" => UnionSolver::LeastSquares,
            "ridge" => UnionSolver::Ridge { lambda: l1 },
            "lasso" => UnionSolver::Lasso {
                lambda: l1,
                tol: self.solver_tol,
                max_iter: self.solver_max_iter,
            },
            "elastic_net" => UnionSolver::ElasticNet {
                lambda1: l1,
                lambda2: l2,
                tol: self.solver_tol,
                max_iter: self.solver_max_iter,
            },
            "omp" => {
                if self.union_omp_k == 0 || self.union_omp_k > self.n_train {
                    return Err(config_error("union_omp_k must be in 1..=n_train"));
                }
                UnionSolver::Omp { k: self.union_omp_k }
            }
            other => return Err(config_error(format!("unknown union_solver {other:?}"))),
        })
    }
}
