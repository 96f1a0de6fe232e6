//! Seeded recognition experiments: for every method, dimension and
//! realization, fit on the training split, project gallery and queries and
//! classify by nearest neighbour.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use reptensor::embed_1d::{fit_1d, Params1d, Projector1D};
use reptensor::embed_2d::{fit, FitConfig, FitOptions, FitResult, GraphParams, Layout, Side, DEFAULT_K, DEFAULT_TOL};
use reptensor::recognizer::{classify_all, error_rate, GallerySet};
use reptensor::Matrix;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, MethodName, Mode};
use crate::dataset::ImageDataset;
use crate::error::{BenchError, Result};
use crate::split::{split, Split};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub enum FittedModel {
    Matrix(FitResult),
    Vector(Projector1D),
}

impl FittedModel {
    /// Projects the images at `indices`, one feature matrix per image.
    pub fn project(&self, ds: &ImageDataset, indices: &[usize]) -> Result<Vec<Matrix>> {
        match self {
            FittedModel::Matrix(r) => indices.iter().map(|&i| Ok(r.pair.project(&ds.images[i])?)).collect(),
            FittedModel::Vector(p) => {
                let y = p.project(&ds.vectors(indices)?.data)?;
                Ok(y.column_iter().map(|c| Matrix::from_column_slice(c.len(), 1, c.as_slice())).collect())
            }
        }
    }
}

/// The row label for a method's projection mode; 1D methods have none.
pub fn mode_label(method: MethodName, mode: Mode) -> &'static str {
    match method {
        MethodName::Matrix(_) => mode.as_str(),
        MethodName::Vector(_) => "vec",
    }
}

fn graph_params(cfg: &ExperimentConfig) -> GraphParams {
    GraphParams {
        k: cfg.knn,
        beta: cfg.beta,
        t: cfg.t,
    }
}

/// Fits `method` at dimension `d` on the images at `train`.
pub fn fit_method(
    ds: &ImageDataset,
    train: &[usize],
    method: MethodName,
    mode: Mode,
    d: usize,
    cfg: &ExperimentConfig,
) -> Result<FittedModel> {
    match method {
        MethodName::Matrix(m) => {
            let data = ds.matrices(train)?;
            let fit_cfg = FitConfig {
                layout: match mode {
                    Mode::Uni => Layout::Unilateral(Side::Right, d),
                    Mode::Bi => Layout::Bilateral(d, d),
                },
                params: graph_params(cfg),
                options: FitOptions {
                    max_iter: cfg.max_iter,
                    tol: DEFAULT_TOL,
                },
                preprocess: cfg.preprocess.map(|[a, b]| (a, b)),
            };
            Ok(FittedModel::Matrix(fit(m, &data, &fit_cfg)?))
        }
        MethodName::Vector(m) => {
            let data = ds.vectors(train)?;
            let params = Params1d {
                k: cfg.knn,
                t: cfg.t,
                beta: cfg.beta,
                ..Params1d::default()
            };
            Ok(FittedModel::Vector(fit_1d(&data, m, d, &params)?))
        }
    }
}

/// Fits on the split's training images and returns the test error rate.
pub fn evaluate(ds: &ImageDataset, s: &Split, model: &FittedModel) -> Result<f64> {
    let gallery = GallerySet::new(
        model.project(ds, &s.train)?,
        s.train.iter().map(|&i| ds.labels[i]).collect(),
    )?;
    let predictions = classify_all(&model.project(ds, &s.test)?, &gallery)?;
    let truth: Vec<usize> = s.test.iter().map(|&i| ds.labels[i]).collect();
    Ok(error_rate(&predictions, &truth)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub method: String,
    pub mode: String,
    pub dimension: usize,
    pub realization: usize,
    /// `(error, fit seconds)` or the failure message.
    pub outcome: std::result::Result<(f64, f64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub mode: String,
    pub dimension: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_fit_seconds: f64,
    /// Realizations that completed; failed ones are excluded from the means.
    pub completed: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub cells: Vec<CellRecord>,
    pub metadata: BTreeMap<String, Value>,
}

fn check_dims(cfg: &ExperimentConfig, methods: &[MethodName], ds: &ImageDataset) -> Result<()> {
    let (m1, m2) = ds.image_dims();
    let (w1, w2) = match cfg.preprocess {
        Some([p1, p2]) => {
            if p1 == 0 || p2 == 0 || p1 > m1 || p2 > m2 {
                return Err(BenchError::Config(format!(
                    "preprocess dims {p1}x{p2} must lie within the {m1}x{m2} images"
                )));
            }
            (p1, p2)
        }
        None => (m1, m2),
    };
    for &d in &cfg.dims {
        for &m in methods {
            let limit = match (m, cfg.mode) {
                (MethodName::Vector(_), _) => m1 * m2,
                (MethodName::Matrix(_), Mode::Uni) => w2,
                (MethodName::Matrix(_), Mode::Bi) => w1.min(w2),
            };
            if d > limit {
                return Err(BenchError::Config(format!(
                    "dimension {d} exceeds the limit {limit} for {m} in mode {}",
                    mode_label(m, cfg.mode)
                )));
            }
        }
    }
    Ok(())
}

fn metadata(cfg: &ExperimentConfig, methods: &[MethodName], ds: &ImageDataset) -> BTreeMap<String, Value> {
    let (m1, m2) = ds.image_dims();
    let betas: BTreeMap<&str, f64> = methods
        .iter()
        .filter_map(|&m| match m {
            MethodName::Matrix(x) if x.is_repulsion() => Some((x.name(), cfg.beta.unwrap_or(x.default_beta()))),
            MethodName::Vector(x) if x.is_repulsion() => Some((x.name(), cfg.beta.unwrap_or(x.default_beta()))),
            _ => None,
        })
        .collect();
    let mut meta = BTreeMap::new();
    meta.insert("version".into(), json!(VERSION));
    meta.insert("dataset".into(), json!(ds.name));
    meta.insert("images".into(), json!(ds.len()));
    meta.insert("classes".into(), json!(ds.class_names.len()));
    meta.insert("image_dims".into(), json!([m1, m2]));
    meta.insert("methods".into(), json!(methods.iter().map(|m| m.name()).collect::<Vec<_>>()));
    meta.insert("mode".into(), json!(cfg.mode.as_str()));
    meta.insert("dims".into(), json!(cfg.dims));
    meta.insert("train_per_class".into(), json!(cfg.train_per_class));
    meta.insert("realizations".into(), json!(cfg.realizations));
    meta.insert("seed".into(), json!(cfg.seed));
    meta.insert("rng".into(), json!("ChaCha8, seeded by master seed, stream = realization index"));
    meta.insert("knn".into(), json!(cfg.knn.unwrap_or(DEFAULT_K)));
    meta.insert("beta".into(), json!(betas));
    meta.insert(
        "t".into(),
        match cfg.t {
            Some(t) => json!(t),
            None => json!("mean squared label-graph edge length, shared by repulsion weights"),
        },
    );
    meta.insert("preprocess".into(), json!(cfg.preprocess));
    meta.insert("max_iter".into(), json!(cfg.max_iter));
    meta.insert("tol".into(), json!(DEFAULT_TOL));
    meta
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn aggregate(cells: &[CellRecord]) -> Vec<ResultRow> {
    let mut groups: BTreeMap<(&str, &str, usize), Vec<&CellRecord>> = BTreeMap::new();
    for c in cells {
        groups.entry((&c.method, &c.mode, c.dimension)).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|((method, mode, dimension), mut group)| {
            group.sort_by_key(|c| c.realization);
            let ok: Vec<(f64, f64)> = group.iter().filter_map(|c| c.outcome.clone().ok()).collect();
            let errors: Vec<f64> = ok.iter().map(|p| p.0).collect();
            let n = ok.len() as f64;
            let (mean_error, std_error, mean_fit_seconds) = if ok.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let mean = errors.iter().sum::<f64>() / n;
                (mean, sample_std(&errors, mean), ok.iter().map(|p| p.1).sum::<f64>() / n)
            };
            ResultRow {
                method: method.to_string(),
                mode: mode.to_string(),
                dimension,
                mean_error,
                std_error,
                mean_fit_seconds,
                completed: ok.len(),
                failures: group.len() - ok.len(),
            }
        })
        .collect()
}

/// Runs every (method, dimension, realization) cell, concurrently when
/// `jobs` allows. Failed fits are recorded per cell and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig, ds: &ImageDataset) -> Result<ResultTable> {
    cfg.validate()?;
    let methods = cfg.parsed_methods()?;
    check_dims(cfg, &methods, ds)?;
    let splits: Vec<Split> = (0..cfg.realizations)
        .map(|r| split(&ds.labels, cfg.train_per_class, cfg.seed, r as u64))
        .collect::<Result<_>>()?;

    let work: Vec<(MethodName, usize, usize)> = methods
        .iter()
        .flat_map(|&m| cfg.dims.iter().flat_map(move |&d| (0..cfg.realizations).map(move |r| (m, d, r))))
        .collect();
    let run_cell = |&(method, d, r): &(MethodName, usize, usize)| {
        let start = Instant::now();
        let outcome = fit_method(ds, &splits[r].train, method, cfg.mode, d, cfg).and_then(|model| {
            let secs = start.elapsed().as_secs_f64();
            Ok((evaluate(ds, &splits[r], &model)?, secs))
        });
        CellRecord {
            method: method.name().to_string(),
            mode: mode_label(method, cfg.mode).to_string(),
            dimension: d,
            realization: r,
            outcome: outcome.map_err(|e| e.to_string()),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))?;
    let mut cells: Vec<CellRecord> = pool.install(|| work.par_iter().map(run_cell).collect());
    cells.sort_by(|a, b| (&a.method, &a.mode, a.dimension, a.realization).cmp(&(&b.method, &b.mode, b.dimension, b.realization)));

    let mut meta = metadata(cfg, &methods, ds);
    let failures: Vec<String> = cells
        .iter()
        .filter_map(|c| {
            c.outcome.as_ref().err().map(|e| {
                format!("{} {} d={} realization={}: {e}", c.method, c.mode, c.dimension, c.realization)
            })
        })
        .collect();
    meta.insert("failures".into(), json!(failures));
    Ok(ResultTable {
        rows: aggregate(&cells),
        cells,
        metadata: meta,
    })
}
