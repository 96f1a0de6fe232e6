//! Seeded generator of labelled matrix data with a confusable class pair.
//!
//! Each class has a low-rank prototype. Every sample adds a random multiple
//! of a few nuisance patterns shared by all classes (lighting-like
//! variation) plus white noise. Classes 0 and 1 additionally share a common
//! additive component and differ only by a weak pattern, which puts them
//! close to each other in the input space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embed_2d::MatrixDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub per_class: usize,
    pub rows: usize,
    pub cols: usize,
    /// Scale of the class-specific prototypes.
    pub class_scale: f64,
    /// Scale of the difference pattern separating the confusable pair.
    pub pair_gap: f64,
    /// Standard deviation of the shared nuisance coefficients.
    pub nuisance: f64,
    pub nuisance_patterns: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 4,
            per_class: 20,
            rows: 8,
            cols: 8,
            class_scale: 1.0,
            pair_gap: 0.2,
            nuisance: 0.3,
            nuisance_patterns: 3,
            noise: 0.3,
            seed: 0,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn rank_one(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a = Matrix::from_fn(rows, 1, |_, _| gaussian(rng));
    let b = Matrix::from_fn(cols, 1, |_, _| gaussian(rng));
    let m = &a * b.transpose();
    let norm = m.norm();
    m / norm
}

/// Generates the dataset, with samples ordered class by class and pixel
/// values mapped affinely into `[0, 1]`.
pub fn generate(cfg: &SyntheticConfig) -> Result<MatrixDataset> {
    if cfg.classes < 2 || cfg.per_class < 2 || cfg.rows == 0 || cfg.cols == 0 {
        return Err(Error::param("synthetic data needs >= 2 classes, >= 2 samples per class and non-empty images"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (r, c) = (cfg.rows, cfg.cols);
    let scale = (r * c) as f64;
    let shared = rank_one(r, c, &mut rng) * (cfg.class_scale * scale.sqrt());
    let prototypes: Vec<Matrix> = (0..cfg.classes)
        .map(|k| {
            if k < 2 {
                &shared + rank_one(r, c, &mut rng) * (cfg.pair_gap * scale.sqrt())
            } else {
                (rank_one(r, c, &mut rng) + rank_one(r, c, &mut rng)) * (cfg.class_scale * scale.sqrt() / 2.0)
            }
        })
        .collect();
    let nuisance: Vec<Matrix> = (0..cfg.nuisance_patterns)
        .map(|_| rank_one(r, c, &mut rng) * scale.sqrt())
        .collect();

    let mut slices = Vec::with_capacity(cfg.classes * cfg.per_class);
    let mut labels = Vec::with_capacity(cfg.classes * cfg.per_class);
    for (k, proto) in prototypes.iter().enumerate() {
        for _ in 0..cfg.per_class {
            let mut x = proto.clone();
            for p in &nuisance {
                x += p * (cfg.nuisance * gaussian(&mut rng));
            }
            x += Matrix::from_fn(r, c, |_, _| cfg.noise * gaussian(&mut rng));
            slices.push(x);
            labels.push(k);
        }
    }

    let lo = slices.iter().flat_map(|s| s.iter()).copied().fold(f64::INFINITY, f64::min);
    let hi = slices.iter().flat_map(|s| s.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    for s in &mut slices {
        s.apply(|v| *v = (*v - lo) / span);
    }
    MatrixDataset::new(Tensor3::from_slices(&slices)?, labels)
}
