use rand::Rng;
use rand_distr::StandardNormal;

use super::dataset::{Dataset, Labels};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_tagged, rng_from};

/// Gaussian blobs with unit within-class standard deviation. Class `c` is
/// centered at `separation / sqrt(2)` along axis `c`, so every pair of class
/// means is `separation` apart. Labels cycle `0, 1, .., K-1`.
pub fn synth_classification(n: usize, d: usize, classes: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::config("synthetic data needs n > 0 and d > 0"));
    }
    if classes < 2 || classes > d {
        return Err(Error::config(format!(
            "class count must be in 2..={d} (one mean axis per class), got {classes}"
        )));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::config(format!("separation must be nonnegative, got {separation}")));
    }
    let mut rng = rng_from(derive_tagged(seed, "synth-classification"));
    let offset = separation / std::f64::consts::SQRT_2;
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut data = Vec::with_capacity(n * d);
    for &c in &labels {
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            data.push(if j == c { z + offset } else { z });
        }
    }
    Dataset::from_features(Matrix::from_vec(n, d, data)?, Some(Labels::Classes(labels)))
}

/// Rows `z · L` with `z ~ N(0, I_rank)` and a fixed random loading `L`
/// (`rank x d`, entries `N(0, 1/rank)`), so every feature has unit expected variance.
pub fn synth_lowrank(n: usize, d: usize, rank: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || rank == 0 || rank > d {
        return Err(Error::config(format!(
            "low-rank data needs n, d > 0 and 1 <= rank <= d, got n={n} d={d} rank={rank}"
        )));
    }
    let mut rng = rng_from(derive_tagged(seed, "synth-lowrank"));
    let scale = 1.0 / (rank as f64).sqrt();
    let loading: Vec<f64> = (0..rank * d)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut data = vec![0.0; n * d];
    let mut z = vec![0.0; rank];
    for row in data.chunks_mut(d) {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        for (r, &zr) in z.iter().enumerate() {
            for (x, l) in row.iter_mut().zip(&loading[r * d..(r + 1) * d]) {
                *x += zr * l;
            }
        }
    }
    Dataset::from_features(Matrix::from_vec(n, d, data)?, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmodel::{predict_classes, train, LossKind, ModelSpec, TrainConfig};
    use crate::metrics::accuracy;

    #[test]
    fn separated_blobs_are_learnable() {
        let train_set = synth_classification(400, 2, 2, 4.0, 1).unwrap();
        let test_set = synth_classification(400, 2, 2, 4.0, 2).unwrap();
        let spec = ModelSpec::classifier(2, &[16], 2).unwrap();
        let out = train(
            &spec,
            train_set.features(),
            train_set.targets(spec.architecture).unwrap(),
            &LossKind::cross_entropy(),
            &TrainConfig::default(),
        )
        .unwrap();
        let pred = predict_classes(&spec, &out.params, test_set.features()).unwrap();
        assert!(accuracy(test_set.classes().unwrap(), &pred).unwrap() >= 0.95);
    }

    #[test]
    fn seeded_and_validated() {
        assert_eq!(synth_classification(10, 3, 3, 1.0, 5).unwrap(), synth_classification(10, 3, 3, 1.0, 5).unwrap());
        assert_ne!(synth_classification(10, 3, 3, 1.0, 5).unwrap(), synth_classification(10, 3, 3, 1.0, 6).unwrap());
        assert!(synth_classification(10, 2, 3, 1.0, 0).is_err());
        assert!(synth_lowrank(10, 4, 5, 0).is_err());
        assert_eq!(synth_lowrank(10, 4, 2, 3).unwrap(), synth_lowrank(10, 4, 2, 3).unwrap());
    }

    /// Gram-Schmidt rank of the data matrix.
    fn numeric_rank(x: &Matrix) -> usize {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for row in x.iter_rows() {
            let mut v = row.to_vec();
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= dot * c);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-8 {
                basis.push(v.iter().map(|a| a / norm).collect());
            }
        }
        basis.len()
    }

    #[test]
    fn lowrank_rank_and_full_rank_case() {
        assert_eq!(numeric_rank(synth_lowrank(50, 12, 3, 0).unwrap().features()), 3);
        assert_eq!(numeric_rank(synth_lowrank(50, 6, 6, 0).unwrap().features()), 6);
    }
}
