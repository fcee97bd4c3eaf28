//! Random problem instances shared by the property suites.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use worm_core::worm::{ClassDictionary, WormConfig, WormModel};
use worm_core::DataMatrix;

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut impl Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Splits `total` atoms into `classes` blocks of at least one atom each.
pub fn random_block_sizes(rng: &mut impl Rng, total: usize, classes: usize) -> Vec<usize> {
    let mut sizes = vec![1; classes];
    for _ in classes..total {
        sizes[rng.random_range(0..classes)] += 1;
    }
    sizes
}

/// A model over random subspaces: every class basis is the Q factor of a Gaussian block,
/// with random positive non-increasing weights.
pub fn random_model(rng: &mut impl Rng, m: usize, sizes: &[usize], config: WormConfig) -> WormModel {
    let dictionaries = sizes
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let q = gaussian_matrix(rng, m, k).qr().q();
            let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..5.0)).collect();
            weights.sort_by(|a, b| b.total_cmp(a));
            ClassDictionary::new(DataMatrix::new(q).unwrap(), weights, c).unwrap()
        })
        .collect();
    WormModel::from_dictionaries(dictionaries, config).unwrap()
}
