//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any
//! criterion fails. Criteria run one after another so the runtime budgets are measured
//! without contention.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::instances::{gaussian_matrix, gaussian_vector};
use support::oracles::lasso_exhaustive;
use worm_bench::{run_experiment, BenchmarkReport, ExperimentConfig};
use worm_core::features::{adjacent_channel_fourier_correlation, differential_spectrum, magnitude_spectrum};
use worm_core::regression::{
    lasso_objective, omp_path, solve_lasso, solve_least_squares, solve_ridge, DEFAULT_MAX_ITER,
    DEFAULT_OMP_TOL, DEFAULT_TOL,
};
use worm_core::synthetic::NoiseKind;
use worm_core::worm::{orthonormality_error, regress_dictionary, regress_scaled_dictionary, select_basis};
use worm_core::DataMatrix;

// Criterion 1
const EQUIVALENCE_INSTANCES: usize = 1000;
const EQUIVALENCE_ROWS: usize = 50;
const EQUIVALENCE_ATOMS: usize = 10;
const EQUIVALENCE_TOL: f64 = 1e-8;
const EQUIVALENCE_BUDGET: Duration = Duration::from_secs(2);

// Criterion 2
const RIDGE_LS_TOL: f64 = 1e-6;
const LASSO_INSTANCES: usize = 200;
const LASSO_MAX_ATOMS: usize = 8;
const LASSO_REL_TOL: f64 = 1e-4;
const OMP_INSTANCES: usize = 200;
const OMP_ORTHOGONALITY_TOL: f64 = 1e-8;
const SOLVER_BUDGET: Duration = Duration::from_secs(30);

// Criterion 3
const NOISELESS_SEEDS: usize = 5;
const NOISELESS_BUDGET: Duration = Duration::from_secs(60);

// Criteria 4 and 5. Each grid is noiseless followed by four levels whose measured SNR is
// roughly +10, +4, -2 and -8 dB, so the three noise kinds span the same SNR range.
const GAUSSIAN_LEVELS: [f64; 5] = [0.0, 0.0125, 0.025, 0.05, 0.1];
const SALT_PEPPER_LEVELS: [f64; 5] = [0.0, 0.0025, 0.01, 0.04, 0.16];
const MULTIPLICATIVE_LEVELS: [f64; 5] = [0.0, 0.3, 0.6, 1.2, 2.4];
const SWEEP_TRIALS: usize = 5;
const SWEEP_MASTER_SEED: u64 = 0;
const DEFAULT_TAU_NAME: &str = "worm(tau=0.95/weighted_abs)";
/// Energy threshold used for the low-SNR comparison. At 0.95 the class bases absorb
/// noise directions until the dictionary is nearly square; see the README.
const LOW_SNR_TAU: f64 = 0.5;
const LOW_SNR_TAU_NAME: &str = "worm(tau=0.5/weighted_abs)";
const KNN_NAME: &str = "knn(k=1)";
const TREND_JITTER: f64 = 0.02;
const LOW_SNR_MARGIN: f64 = 0.02;
const SWEEP_BUDGET: Duration = Duration::from_secs(600);

// Criterion 6
const BASIS_MATRICES: usize = 100;
const BASIS_ORTHONORMALITY_TOL: f64 = 1e-10;
const TAU_GRID_STEPS: usize = 40;

// Criterion 8
const TELESCOPE_REL_TOL: f64 = 1e-10;
const SELF_CORRELATION_TOL: f64 = 1e-12;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(detail: String, elapsed: Duration, budget: Duration) -> Verdict {
    let detail = format!("{detail}; {:.2}s of {}s budget", elapsed.as_secs_f64(), budget.as_secs());
    check(elapsed <= budget, detail)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..EQUIVALENCE_INSTANCES {
        let d = DataMatrix::new(gaussian_matrix(&mut rng, EQUIVALENCE_ROWS, EQUIVALENCE_ATOMS)).unwrap();
        let weights: Vec<f64> = (0..EQUIVALENCE_ATOMS).map(|_| rng.random_range(0.01..10.0)).collect();
        let y = gaussian_vector(&mut rng, EQUIVALENCE_ROWS);
        let x = regress_dictionary(&d, &y).unwrap().values;
        let x_new = regress_scaled_dictionary(&d, &weights, &y).unwrap().values;
        let sigma_x = x.component_mul(&DVector::from_column_slice(&weights));
        worst = worst.max((&x_new - &sigma_x).amax() / (1.0 + sigma_x.amax()));
    }
    let detail = format!(
        "max |x_new - Sx| / (1 + |Sx|) = {worst:.2e} over {EQUIVALENCE_INSTANCES} instances (tol {EQUIVALENCE_TOL:.0e})"
    );
    check(worst <= EQUIVALENCE_TOL, detail.clone())?;
    within_budget(detail, start.elapsed(), EQUIVALENCE_BUDGET)
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let mut ridge_gap = 0.0f64;
    for _ in 0..LASSO_INSTANCES {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(n + 2..=30);
        let a = DataMatrix::new(gaussian_matrix(&mut rng, m, n)).unwrap();
        let x = gaussian_vector(&mut rng, m);
        let ls = solve_least_squares(&a, &x).unwrap().values;
        ridge_gap = ridge_gap.max((solve_ridge(&a, &x, 0.0).unwrap().values - ls).amax());
    }

    let mut lasso_gap = 0.0f64;
    for _ in 0..LASSO_INSTANCES {
        let n = rng.random_range(1..=LASSO_MAX_ATOMS);
        let m = rng.random_range(n..=n + 6);
        let a = gaussian_matrix(&mut rng, m, n);
        let x = gaussian_vector(&mut rng, m);
        let lambda = 2.0 * a.tr_mul(&x).amax() * rng.random_range(0.01..0.9);
        let dm = DataMatrix::new(a.clone()).unwrap();
        let s = solve_lasso(&dm, &x, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap().values;
        let obj = lasso_objective(&dm, &x, &s, lambda);
        let (_, best) = lasso_exhaustive(&a, &x, lambda);
        lasso_gap = lasso_gap.max((obj - best).abs() / best.abs().max(1e-12));
    }

    let mut omp_worst = 0.0f64;
    let mut steps_checked = 0;
    for _ in 0..OMP_INSTANCES {
        let n = rng.random_range(2..=20);
        let m = rng.random_range(n..=40);
        let a = gaussian_matrix(&mut rng, m, n);
        let x = gaussian_vector(&mut rng, m);
        for step in omp_path(&DataMatrix::new(a.clone()).unwrap(), &x, n, DEFAULT_OMP_TOL).unwrap() {
            steps_checked += 1;
            for &j in &step.support {
                omp_worst = omp_worst.max(a.column(j).dot(&step.residual).abs());
            }
        }
    }

    let detail = format!(
        "ridge(0) vs LS {ridge_gap:.1e} (tol {RIDGE_LS_TOL:.0e}); LASSO rel gap {lasso_gap:.1e} \
         over {LASSO_INSTANCES} instances (tol {LASSO_REL_TOL:.0e}); OMP |a^T r| {omp_worst:.1e} \
         over {steps_checked} steps (tol {OMP_ORTHOGONALITY_TOL:.0e})"
    );
    check(
        ridge_gap <= RIDGE_LS_TOL && lasso_gap <= LASSO_REL_TOL && omp_worst <= OMP_ORTHOGONALITY_TOL,
        detail.clone(),
    )?;
    within_budget(detail, start.elapsed(), SOLVER_BUDGET)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let config = ExperimentConfig::from_toml(&format!(
        "classifiers = [\"worm\", \"union_subspace\", \"nearest_subspace\"]\n\
         union_solver = \"least_squares\"\nunion_rule = \"residual\"\nnearest_rule = \"residual\"\n\
         gaussian_levels = [0.0]\ntrials = {NOISELESS_SEEDS}"
    ))
    .unwrap();
    let report = run_experiment(&config).unwrap();
    let summary: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{} {:?}", r.classifier, r.mean_accuracy))
        .collect();
    let detail = format!("{} over {NOISELESS_SEEDS} seeds", summary.join(", "));
    check(
        report.rows.len() == 3 && report.rows.iter().all(|r| r.mean_accuracy == Some(1.0)),
        detail.clone(),
    )?;
    within_budget(detail, start.elapsed(), NOISELESS_BUDGET)
}

fn fmt_levels(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

/// The noise sweep shared by criteria 4 and 5, with its runtime.
fn sweep() -> &'static (BenchmarkReport, Duration) {
    static SWEEP: OnceLock<(BenchmarkReport, Duration)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let config = ExperimentConfig::from_toml(&format!(
            "classifiers = [\"worm\", \"knn\"]\nworm_tau = [0.95, {LOW_SNR_TAU}]\nknn_k = [1]\n\
             gaussian_levels = [{}]\nsalt_pepper_levels = [{}]\nmultiplicative_levels = [{}]\n\
             trials = {SWEEP_TRIALS}\nmaster_seed = {SWEEP_MASTER_SEED}",
            fmt_levels(&GAUSSIAN_LEVELS),
            fmt_levels(&SALT_PEPPER_LEVELS),
            fmt_levels(&MULTIPLICATIVE_LEVELS),
        ))
        .unwrap();
        let report = run_experiment(&config).unwrap();
        (report, start.elapsed())
    })
}

fn accuracies(report: &BenchmarkReport, classifier: &str, kind: NoiseKind) -> Vec<f64> {
    report
        .select(classifier, kind)
        .iter()
        .map(|r| r.mean_accuracy.expect("sweep cells do not fail"))
        .collect()
}

fn fmt_acc(v: &[f64]) -> String {
    v.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ")
}

fn criterion_4() -> Verdict {
    let (report, elapsed) = sweep();
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in NoiseKind::ALL {
        for (tau, name) in [(0.95, DEFAULT_TAU_NAME), (LOW_SNR_TAU, LOW_SNR_TAU_NAME)] {
            let acc = accuracies(report, name, kind);
            let worst_rise = acc.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            ok &= acc.len() == 5 && worst_rise <= TREND_JITTER;
            parts.push(format!("{kind} tau={tau} [{}]", fmt_acc(&acc)));
        }
    }
    let detail = format!("{}; max allowed rise {TREND_JITTER}", parts.join("; "));
    check(ok, detail.clone())?;
    within_budget(detail, *elapsed, SWEEP_BUDGET)
}

fn criterion_5() -> Verdict {
    let (report, _) = sweep();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut info = Vec::new();
    for kind in NoiseKind::ALL {
        let knn = *accuracies(report, KNN_NAME, kind).last().unwrap();
        let worm = *accuracies(report, LOW_SNR_TAU_NAME, kind).last().unwrap();
        let default = *accuracies(report, DEFAULT_TAU_NAME, kind).last().unwrap();
        ok &= worm >= knn - LOW_SNR_MARGIN;
        parts.push(format!("{kind} worm {worm:.3} vs knn {knn:.3}"));
        info.push(format!("{kind} {default:.3}"));
    }
    check(
        ok,
        format!(
            "highest level, tau={LOW_SNR_TAU}: {} (margin {LOW_SNR_MARGIN}); for reference tau=0.95 gives {}",
            parts.join(", "),
            info.join(", ")
        ),
    )
}

fn prefix_energy(sv: &[f64], k: usize) -> f64 {
    let total: f64 = sv.iter().map(|s| s * s).sum();
    sv[..k].iter().map(|s| s * s).sum::<f64>() / total
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_ortho, mut minimality_failures, mut monotone_failures) = (0.0f64, 0, 0);
    for _ in 0..BASIS_MATRICES {
        let rows = rng.random_range(5..=60);
        let cols = rng.random_range(1..=15);
        let rank = rng.random_range(1..=rows.min(cols));
        let mut a = gaussian_matrix(&mut rng, rows, rank) * gaussian_matrix(&mut rng, rank, cols);
        if rng.random_bool(0.5) {
            a += gaussian_matrix(&mut rng, rows, cols) * 0.01;
        }
        let a = DataMatrix::new(a).unwrap();
        let mut sv: Vec<f64> = a.as_matrix().singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        let sv: Vec<f64> = sv.iter().copied().filter(|&s| s > 1e-12 * sv[0]).collect();
        let mut previous = 0;
        for step in 1..=TAU_GRID_STEPS {
            let tau = step as f64 / TAU_GRID_STEPS as f64;
            let dict = select_basis(&a, tau, 0).unwrap();
            let k = dict.len();
            worst_ortho = worst_ortho.max(orthonormality_error(dict.basis()));
            let reaches = prefix_energy(&sv, k) >= tau - 1e-12;
            let minimal = k == 1 || prefix_energy(&sv, k - 1) < tau;
            minimality_failures += usize::from(!(reaches && minimal));
            monotone_failures += usize::from(k < previous);
            previous = k;
        }
    }
    check(
        worst_ortho <= BASIS_ORTHONORMALITY_TOL && minimality_failures == 0 && monotone_failures == 0,
        format!(
            "{BASIS_MATRICES} matrices x {TAU_GRID_STEPS} thresholds: max |B^T B - I| {worst_ortho:.1e} \
             (tol {BASIS_ORTHONORMALITY_TOL:.0e}), minimality failures {minimality_failures}, \
             monotonicity failures {monotone_failures}"
        ),
    )
}

fn criterion_7() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    let body = "classifiers = [\"worm\", \"knn\", \"svm\", \"omp\", \"nearest_subspace\", \"union_subspace\"]\n\
                gaussian_levels = [0.0, 0.05]\nsalt_pepper_levels = [0.01]\nmultiplicative_levels = [0.6]\n\
                n_test = 200\ntrials = 3\nmaster_seed = 11\nparallel = true\n";
    std::fs::write(&config_path, body).unwrap();

    let run_cli = |sub: &str| -> Vec<u8> {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_bench"))
            .args(["run", config_path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out.join("report.csv")).unwrap()
    };
    let first = run_cli("a");
    let second = run_cli("b");

    let config = ExperimentConfig::from_toml(body).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let threaded = pool.install(|| run_experiment(&config)).unwrap().to_delimited(b',');
    let sequential = run_experiment(&ExperimentConfig {
        parallel: false,
        ..config
    })
    .unwrap()
    .to_delimited(b',');

    check(
        first == second && first == threaded.as_bytes() && threaded == sequential,
        format!(
            "two CLI runs {}, 4-thread vs sequential {} ({} bytes)",
            if first == second { "identical" } else { "differ" },
            if threaded == sequential { "identical" } else { "differ" },
            first.len()
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut telescope, mut self_corr) = (0.0f64, 0.0f64);
    for n in [2usize, 3, 16, 100, 255, 1024, 4097] {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mag = magnitude_spectrum(&x);
        let expected = mag[n - 1] - mag[0];
        let sum: f64 = differential_spectrum(&x).unwrap().iter().sum();
        let scale = mag.iter().copied().fold(0.0, f64::max);
        telescope = telescope.max((sum - expected).abs() / scale);
        self_corr = self_corr.max((adjacent_channel_fourier_correlation(&x, &x).unwrap() - 1.0).abs());
    }
    check(
        telescope <= TELESCOPE_REL_TOL && self_corr <= SELF_CORRELATION_TOL,
        format!(
            "telescoping rel err {telescope:.1e} (tol {TELESCOPE_REL_TOL:.0e}); \
             |corr(x, x) - 1| {self_corr:.1e} (tol {SELF_CORRELATION_TOL:.0e})"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("equivalence transform", criterion_1),
        ("solver oracles", criterion_2),
        ("noiseless separability", criterion_3),
        ("accuracy falls with noise", criterion_4),
        ("low-SNR comparison with KNN", criterion_5),
        ("basis selection", criterion_6),
        ("determinism", criterion_7),
        ("feature identities", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let (status, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {status} ({name}): {detail}", i + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
