//! Points-on-lines benchmark data with controlled noise.
//!
//! Every class `c` is a line through the origin with a random unit direction `u_c`;
//! a clean sample is `t·u_c` with `|t|` drawn uniformly from `[t_min, t_max]` and a
//! random sign. Samples are then corrupted by Gaussian, salt-and-pepper or
//! multiplicative noise.
//!
//! # Seeding
//!
//! All randomness comes from ChaCha8 streams seeded through [`derive_seed`], so output
//! depends only on the configuration and seed. [`generate`] uses
//! `derive_seed(seed, s)` with `s = 0` for line directions, `1`/`2` for the train/test
//! line parameters and `3`/`4` for the train/test noise. Noise draws are consumed
//! identically at every level, so datasets generated from one seed at different noise
//! levels share their clean samples and their noise realisation up to scale.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Additive i.i.d. `N(0, level²)`.
    Gaussian,
    /// Each entry replaced by `±amplitude` with probability `level`.
    SaltPepper,
    /// Each entry scaled by `1 + e`, `e ~ N(0, level²)`.
    Multiplicative,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [
        NoiseKind::Gaussian,
        NoiseKind::SaltPepper,
        NoiseKind::Multiplicative,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::Multiplicative => "multiplicative",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown noise kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
    /// Salt-and-pepper amplitude; `None` uses the largest absolute clean entry.
    pub amplitude: Option<f64>,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::gaussian(0.0)
    }

    pub fn gaussian(sigma: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Gaussian,
            level: sigma,
            amplitude: None,
        }
    }

    pub fn salt_pepper(p: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::SaltPepper,
            level: p,
            amplitude: None,
        }
    }

    pub fn multiplicative(sigma: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Multiplicative,
            level: sigma,
            amplitude: None,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        NoiseSpec {
            amplitude: Some(amplitude),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.level.is_finite() || self.level < 0.0 {
            return Err(Error::Config(format!(
                "noise level must be finite and >= 0, got {}",
                self.level
            )));
        }
        if self.kind == NoiseKind::SaltPepper && self.level > 1.0 {
            return Err(Error::Config(format!(
                "salt-and-pepper probability must be <= 1, got {}",
                self.level
            )));
        }
        if let Some(a) = self.amplitude {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::Config(format!("amplitude must be finite and >= 0, got {a}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub dim: usize,
    pub num_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Dead zone: line parameters satisfy `t_min ≤ |t| ≤ t_max`.
    pub t_min: f64,
    pub t_max: f64,
    pub noise: NoiseSpec,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            dim: 200,
            num_classes: 30,
            n_train: 200,
            n_test: 1000,
            t_min: 0.1,
            t_max: 1.0,
            noise: NoiseSpec::none(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be at least 1".into()));
        }
        if self.n_train < self.num_classes {
            return Err(Error::Config(format!(
                "n_train = {} is smaller than num_classes = {}",
                self.n_train, self.num_classes
            )));
        }
        if self.n_test == 0 {
            return Err(Error::Config("n_test must be at least 1".into()));
        }
        if !(self.t_min >= 0.0 && self.t_max > 0.0 && self.t_min <= self.t_max && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 <= t_min <= t_max, got t_min = {}, t_max = {}",
                self.t_min, self.t_max
            )));
        }
        self.noise.validate()
    }
}

/// Generated train/test sets together with their noiseless versions.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub clean_train: DataMatrix,
    pub clean_test: DataMatrix,
    /// Unit line directions, one column per class.
    pub directions: DataMatrix,
}

impl SyntheticData {
    /// SNR over train and test combined.
    pub fn snr_db(&self) -> f64 {
        let signal = self.clean_train.energy() + self.clean_test.energy();
        let noise = diff_energy(&self.clean_train, self.train.data())
            + diff_energy(&self.clean_test, self.test.data());
        snr_db(signal, noise)
    }
}

/// SplitMix64 mix of `master` and `stream`; used for every sub-seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Label of sample `i`: `i mod C`, so class sizes differ by at most one and the
/// remainder goes to the lowest class indices.
fn label_of(i: usize, num_classes: usize) -> usize {
    i % num_classes
}

fn sample_lines(
    directions: &DMatrix<f64>,
    count: usize,
    config: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, Vec<usize>) {
    let mut out = DMatrix::zeros(config.dim, count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let c = label_of(i, config.num_classes);
        let magnitude = if config.t_min < config.t_max {
            rng.random_range(config.t_min..=config.t_max)
        } else {
            config.t_max
        };
        let t = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        out.set_column(i, &(directions.column(c) * t));
        labels.push(c);
    }
    (out, labels)
}

pub fn generate_with_clean(config: &GeneratorConfig) -> Result<SyntheticData> {
    config.validate()?;
    let mut dir_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
    let mut directions = DMatrix::zeros(config.dim, config.num_classes);
    for mut col in directions.column_iter_mut() {
        loop {
            for v in col.iter_mut() {
                *v = dir_rng.sample(StandardNormal);
            }
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
                break;
            }
        }
    }

    let mut train_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    let mut test_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 2));
    let (clean_train, train_labels) = sample_lines(&directions, config.n_train, config, &mut train_rng);
    let (clean_test, test_labels) = sample_lines(&directions, config.n_test, config, &mut test_rng);
    let clean_train = DataMatrix::new(clean_train)?;
    let clean_test = DataMatrix::new(clean_test)?;

    let mut noise = config.noise;
    if noise.kind == NoiseKind::SaltPepper && noise.amplitude.is_none() {
        let amp = clean_train
            .as_matrix()
            .amax()
            .max(clean_test.as_matrix().amax());
        noise.amplitude = Some(amp);
    }
    let noisy_train = apply_noise(&clean_train, &noise, derive_seed(config.seed, 3))?;
    let noisy_test = apply_noise(&clean_test, &noise, derive_seed(config.seed, 4))?;

    Ok(SyntheticData {
        train: LabeledDataset::new(noisy_train, train_labels, config.num_classes)?,
        test: LabeledDataset::new(noisy_test, test_labels, config.num_classes)?,
        clean_train,
        clean_test,
        directions: DataMatrix::new(directions)?,
    })
}

/// Noisy `(train, test)` sets for `config`.
pub fn generate(config: &GeneratorConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let data = generate_with_clean(config)?;
    Ok((data.train, data.test))
}

/// Corrupts `x` entry by entry in column-major order.
///
/// Every entry consumes the same number of random draws whatever the level (one
/// normal for Gaussian and multiplicative noise, two uniforms for salt-and-pepper).
pub fn apply_noise(x: &DataMatrix, noise: &NoiseSpec, seed: u64) -> Result<DataMatrix> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.as_matrix().clone();
    match noise.kind {
        NoiseKind::Gaussian => {
            for v in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += noise.level * z;
            }
        }
        NoiseKind::Multiplicative => {
            for v in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v *= 1.0 + noise.level * z;
            }
        }
        NoiseKind::SaltPepper => {
            let amplitude = noise.amplitude.unwrap_or_else(|| x.as_matrix().amax());
            for v in out.iter_mut() {
                let hit: f64 = rng.random();
                let salt: bool = rng.random_bool(0.5);
                if hit < noise.level {
                    *v = if salt { amplitude } else { -amplitude };
                }
            }
        }
    }
    DataMatrix::new(out)
}

/// `10·log10(signal / noise)`, `+∞` for zero noise.
pub fn snr_db(signal_energy: f64, noise_energy: f64) -> f64 {
    if noise_energy == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (signal_energy / noise_energy).log10()
}

fn diff_energy(a: &DataMatrix, b: &DataMatrix) -> f64 {
    a.as_matrix()
        .iter()
        .zip(b.as_matrix().iter())
        .map(|(x, y)| (y - x).powi(2))
        .sum()
}

/// `10·log10(‖clean‖_F² / ‖noisy − clean‖_F²)` in dB; `+∞` when the matrices are equal.
pub fn measure_snr(clean: &DataMatrix, noisy: &DataMatrix) -> Result<f64> {
    if clean.rows() != noisy.rows() || clean.cols() != noisy.cols() {
        return Err(Error::dim(format!(
            "shapes differ: {}x{} vs {}x{}",
            clean.rows(),
            clean.cols(),
            noisy.rows(),
            noisy.cols()
        )));
    }
    Ok(snr_db(clean.energy(), diff_energy(clean, noisy)))
}
