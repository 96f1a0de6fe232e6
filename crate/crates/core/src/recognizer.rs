//! Nearest-neighbour recognition in the projected space.

use crate::embed_2d::ProjectorPair;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;
use crate::Matrix;

/// Projected training items with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GallerySet {
    items: Vec<Matrix>,
    labels: Vec<usize>,
}

impl GallerySet {
    pub fn new(items: Vec<Matrix>, labels: Vec<usize>) -> Result<Self> {
        if items.len() != labels.len() {
            return Err(Error::shape(format!(
                "{} gallery items but {} labels",
                items.len(),
                labels.len()
            )));
        }
        if let Some(first) = items.first() {
            if let Some(bad) = items.iter().position(|m| m.shape() != first.shape()) {
                return Err(Error::shape(format!("gallery item {bad} differs in shape from item 0")));
            }
        }
        Ok(GallerySet { items, labels })
    }

    /// Gallery from a projected tensor `Y` (one frontal slice per item).
    pub fn from_tensor(y: &Tensor3, labels: Vec<usize>) -> Result<Self> {
        let items = (0..y.dims().2).map(|k| y.frontal(k)).collect();
        GallerySet::new(items, labels)
    }

    /// Gallery from the columns of a projected vector dataset.
    pub fn from_columns(y: &Matrix, labels: Vec<usize>) -> Result<Self> {
        let items = y.column_iter().map(|c| Matrix::from_column_slice(c.len(), 1, c.as_slice())).collect();
        GallerySet::new(items, labels)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Matrix] {
        &self.items
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// `Y = U' X V`.
pub fn project(x: &Matrix, pair: &ProjectorPair) -> Result<Matrix> {
    pair.project(x)
}

/// Label of the gallery item closest in Frobenius distance; ties go to the
/// lowest gallery index.
pub fn classify_1nn(y: &Matrix, gallery: &GallerySet) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (idx, item) in gallery.items.iter().enumerate() {
        if item.shape() != y.shape() {
            return Err(Error::shape(format!(
                "query is {:?}, gallery items are {:?}",
                y.shape(),
                item.shape()
            )));
        }
        let d: f64 = item.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, idx));
        }
    }
    best.map(|(_, idx)| gallery.labels[idx])
        .ok_or_else(|| Error::param("cannot classify against an empty gallery"))
}

pub fn classify_all(queries: &[Matrix], gallery: &GallerySet) -> Result<Vec<usize>> {
    queries.iter().map(|q| classify_1nn(q, gallery)).collect()
}

/// Fraction of mismatched predictions.
pub fn error_rate(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::param("error rate of an empty test set"));
    }
    let wrong = predictions.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}
