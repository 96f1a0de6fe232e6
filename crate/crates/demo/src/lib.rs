//! Browser demo: fits projections on the synthetic image set and returns
//! JSON for a static page to draw.
//!
//! The computational entry points are plain functions so they run on the
//! host too; the `#[wasm_bindgen]` wrappers only serialize.

use reptensor::embed_2d::{fit, FitConfig, FitOptions, FitResult, GraphParams, Layout, MatrixDataset, Method2d};
use reptensor::recognizer::{classify_all, error_rate, GallerySet};
use reptensor::synthetic::{generate, SyntheticConfig};
use reptensor::{Matrix, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// User-facing knobs shared by every operation.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub method: Method2d,
    pub beta: f64,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub label: usize,
    pub train: bool,
}

#[derive(Debug, Serialize)]
pub struct Scatter {
    pub method: &'static str,
    pub points: Vec<Point>,
    pub test_error: f64,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub dimension: usize,
    pub error: f64,
}

#[derive(Debug, Serialize)]
pub struct BasisImage {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels scaled to [0, 1].
    pub pixels: Vec<f64>,
}

struct Split {
    data: MatrixDataset,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Synthetic set with the first half of each class used for training.
fn dataset(seed: u64) -> Result<Split> {
    let data = generate(&SyntheticConfig { seed, ..Default::default() })?;
    let mut seen = vec![0usize; data.labels.iter().max().map_or(0, |m| m + 1)];
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, &l) in data.labels.iter().enumerate() {
        let per_class = data.labels.iter().filter(|&&x| x == l).count();
        if seen[l] < per_class / 2 {
            train.push(i);
        } else {
            test.push(i);
        }
        seen[l] += 1;
    }
    Ok(Split { data, train, test })
}

fn fit_on_train(split: &Split, p: &Params, d1: usize, d2: usize) -> Result<FitResult> {
    let train = MatrixDataset::new(
        split.data.tensor.select_slices(&split.train),
        split.train.iter().map(|&i| split.data.labels[i]).collect(),
    )?;
    let cfg = FitConfig {
        layout: Layout::Bilateral(d1, d2),
        params: GraphParams {
            k: Some(p.k),
            beta: Some(p.beta),
            t: None,
        },
        options: FitOptions::default(),
        preprocess: None,
    };
    fit(p.method, &train, &cfg)
}

fn test_error(split: &Split, res: &FitResult) -> Result<f64> {
    let project = |idx: &[usize]| -> Result<Vec<Matrix>> {
        idx.iter().map(|&i| res.pair.project(&split.data.tensor.frontal(i))).collect()
    };
    let labels = |idx: &[usize]| idx.iter().map(|&i| split.data.labels[i]).collect::<Vec<_>>();
    let gallery = GallerySet::new(project(&split.train)?, labels(&split.train))?;
    let predicted = classify_all(&project(&split.test)?, &gallery)?;
    error_rate(&predicted, &labels(&split.test))
}

/// Every image projected to a 1 x 2 feature, with the 1-NN test error.
pub fn scatter(p: &Params) -> Result<Scatter> {
    let split = dataset(p.seed)?;
    let res = fit_on_train(&split, p, 1, 2)?;
    let mut points = Vec::with_capacity(split.data.labels.len());
    for (i, &label) in split.data.labels.iter().enumerate() {
        let y = res.pair.project(&split.data.tensor.frontal(i))?;
        points.push(Point {
            x: y[(0, 0)],
            y: y[(0, 1)],
            label,
            train: split.train.contains(&i),
        });
    }
    Ok(Scatter {
        method: p.method.name(),
        points,
        test_error: test_error(&split, &res)?,
    })
}

/// Test error of bilateral `d x d` projections for every feasible `d`.
pub fn error_curve(p: &Params) -> Result<Vec<CurvePoint>> {
    let split = dataset(p.seed)?;
    let (rows, cols, _) = split.data.tensor.dims();
    (1..=rows.min(cols))
        .map(|d| {
            let res = fit_on_train(&split, p, d, d)?;
            Ok(CurvePoint {
                dimension: d,
                error: test_error(&split, &res)?,
            })
        })
        .collect()
}

/// Rank-one images `u_i v_j'` for the leading `count x count` projector pairs.
pub fn basis_images(p: &Params, count: usize) -> Result<Vec<BasisImage>> {
    let split = dataset(p.seed)?;
    let res = fit_on_train(&split, p, count, count)?;
    let (u, v) = (&res.pair.u, &res.pair.v);
    let mut out = Vec::with_capacity(count * count);
    for i in 0..count {
        for j in 0..count {
            let img = u.column(i) * v.column(j).transpose();
            let (lo, hi) = (img.min(), img.max());
            let span = if hi > lo { hi - lo } else { 1.0 };
            let pixels = (0..img.nrows())
                .flat_map(|r| (0..img.ncols()).map(move |c| (r, c)))
                .map(|(r, c)| (img[(r, c)] - lo) / span)
                .collect();
            out.push(BasisImage {
                rows: img.nrows(),
                cols: img.ncols(),
                pixels,
            });
        }
    }
    Ok(out)
}

pub fn method_names() -> Vec<&'static str> {
    Method2d::ALL.iter().map(|m| m.name()).collect()
}

fn params(method: &str, beta: f64, k: u32, seed: u32) -> std::result::Result<Params, JsError> {
    let method = method.parse::<Method2d>().map_err(|e| JsError::new(&e.to_string()))?;
    Ok(Params {
        method,
        beta,
        k: k as usize,
        seed: u64::from(seed),
    })
}

fn to_json<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = methods)]
pub fn methods_js() -> String {
    serde_json::to_string(&method_names()).unwrap_or_default()
}

#[wasm_bindgen(js_name = scatter)]
pub fn scatter_js(method: &str, beta: f64, k: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_json(scatter(&params(method, beta, k, seed)?))
}

#[wasm_bindgen(js_name = errorCurve)]
pub fn error_curve_js(method: &str, beta: f64, k: u32, seed: u32) -> std::result::Result<String, JsError> {
    to_json(error_curve(&params(method, beta, k, seed)?))
}

#[wasm_bindgen(js_name = basisImages)]
pub fn basis_images_js(method: &str, beta: f64, k: u32, seed: u32, count: u32) -> std::result::Result<String, JsError> {
    to_json(basis_images(&params(method, beta, k, seed)?, count as usize))
}
