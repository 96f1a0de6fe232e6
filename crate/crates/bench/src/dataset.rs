//! Image datasets stored as one directory of graymaps per class.

use std::fs;
use std::path::{Path, PathBuf};

use reptensor::embed_1d::VectorDataset;
use reptensor::embed_2d::MatrixDataset;
use reptensor::{Matrix, Tensor3};

use crate::error::{BenchError, Result};
use crate::pgm;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub name: String,
    pub images: Vec<Matrix>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl ImageDataset {
    pub fn new(name: impl Into<String>, images: Vec<Matrix>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if images.is_empty() {
            return Err(BenchError::Data("dataset contains no images".into()));
        }
        if images.len() != labels.len() {
            return Err(BenchError::Data(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let shape = images[0].shape();
        if let Some(bad) = images.iter().position(|m| m.shape() != shape) {
            return Err(BenchError::Data(format!(
                "image {bad} is {:?}, expected {shape:?}",
                images[bad].shape()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(BenchError::Data(format!("label {l} has no class name")));
        }
        Ok(ImageDataset {
            name: name.into(),
            images,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.images[0].shape()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn matrices(&self, indices: &[usize]) -> Result<MatrixDataset> {
        let slices: Vec<Matrix> = indices.iter().map(|&i| self.images[i].clone()).collect();
        Ok(MatrixDataset::new(
            Tensor3::from_slices(&slices)?,
            indices.iter().map(|&i| self.labels[i]).collect(),
        )?)
    }

    /// Column-stacked images, one sample per column.
    pub fn vectors(&self, indices: &[usize]) -> Result<VectorDataset> {
        let (h, w) = self.image_dims();
        let mut data = Matrix::zeros(h * w, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            data.column_mut(c).copy_from_slice(self.images[i].as_slice());
        }
        Ok(VectorDataset::new(data, indices.iter().map(|&i| self.labels[i]).collect())?)
    }

    pub fn from_matrices(name: impl Into<String>, data: &MatrixDataset) -> Result<Self> {
        let classes = data.labels.iter().max().map_or(0, |&m| m + 1);
        let images = (0..data.labels.len()).map(|k| data.tensor.frontal(k)).collect();
        ImageDataset::new(
            name,
            images,
            data.labels.clone(),
            (0..classes).map(|c| format!("c{c:02}")).collect(),
        )
    }
}

/// Weights `h x n` mapping `n` input cells onto `h` output cells by overlap
/// area; rows sum to one.
fn area_weights(n: usize, h: usize) -> Matrix {
    let step = n as f64 / h as f64;
    Matrix::from_fn(h, n, |r, i| {
        let lo = (r as f64 * step).max(i as f64);
        let hi = ((r + 1) as f64 * step).min((i + 1) as f64);
        (hi - lo).max(0.0) / step
    })
}

/// Area-weighted resampling; reduces to block averaging when the sizes
/// divide evenly.
pub fn resize(img: &Matrix, h: usize, w: usize) -> Matrix {
    if img.shape() == (h, w) {
        return img.clone();
    }
    area_weights(img.nrows(), h) * img * area_weights(img.ncols(), w).transpose()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| BenchError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| BenchError::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    Ok(entries)
}

fn is_graymap(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("pnm"))
}

pub fn load_image(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    pgm::decode(&bytes).map_err(|e| BenchError::Decode {
        path: path.to_path_buf(),
        message: e.0,
    })
}

/// Loads `root/<class>/<image>.pgm`, with classes and files in
/// lexicographic order.
pub fn load_dataset(root: &Path, size: Option<(usize, usize)>) -> Result<ImageDataset> {
    if let Some((h, w)) = size {
        if h == 0 || w == 0 {
            return Err(BenchError::Config(format!("resize target {h}x{w} is empty")));
        }
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut class_names = Vec::new();
    let mut first: Option<(PathBuf, (usize, usize))> = None;
    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let files: Vec<PathBuf> = sorted_entries(&class_dir)?.into_iter().filter(|p| is_graymap(p)).collect();
        if files.is_empty() {
            continue;
        }
        let label = class_names.len();
        class_names.push(class_dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        for file in files {
            let mut img = load_image(&file)?;
            match size {
                Some((h, w)) => img = resize(&img, h, w),
                None => match &first {
                    Some((p, shape)) if *shape != img.shape() => {
                        return Err(BenchError::Data(format!(
                            "{} is {}x{} but {} is {}x{}; pass a resize target",
                            file.display(),
                            img.nrows(),
                            img.ncols(),
                            p.display(),
                            shape.0,
                            shape.1
                        )))
                    }
                    Some(_) => {}
                    None => first = Some((file.clone(), img.shape())),
                },
            }
            images.push(img);
            labels.push(label);
        }
    }
    if images.is_empty() {
        return Err(BenchError::Data(format!(
            "{} has no class directories containing .pgm files",
            root.display()
        )));
    }
    let name = root.file_name().unwrap_or_default().to_string_lossy().into_owned();
    ImageDataset::new(name, images, labels, class_names)
}

/// Writes the dataset as 16-bit binary graymaps, one directory per class.
pub fn save_dataset(ds: &ImageDataset, root: &Path) -> Result<()> {
    for (c, class) in ds.class_names.iter().enumerate() {
        let dir = root.join(class);
        fs::create_dir_all(&dir).map_err(|e| BenchError::io(&dir, e))?;
        let members = ds.labels.iter().enumerate().filter(|(_, &l)| l == c);
        for (n, (i, _)) in members.enumerate() {
            let path = dir.join(format!("{n:03}.pgm"));
            fs::write(&path, pgm::encode_binary(&ds.images[i], u16::MAX)).map_err(|e| BenchError::io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_average_and_constant() {
        let img = Matrix::from_fn(4, 4, |r, c| (r * 4 + c) as f64);
        let small = resize(&img, 2, 2);
        assert_eq!(small, Matrix::from_row_slice(2, 2, &[2.5, 4.5, 10.5, 12.5]));
        let flat = resize(&Matrix::from_element(4, 4, 0.3), 2, 2);
        assert!(flat.iter().all(|&v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn area_weighted_non_divisible() {
        // 3 -> 2 cells: [0, 1.5) and [1.5, 3).
        let img = Matrix::from_row_slice(1, 3, &[3.0, 6.0, 9.0]);
        let out = resize(&img, 1, 2);
        assert!((out[(0, 0)] - 4.0).abs() < 1e-12);
        assert!((out[(0, 1)] - 8.0).abs() < 1e-12);
        let w = area_weights(7, 3);
        for r in 0..3 {
            assert!((w.row(r).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vectors_are_column_stacked() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let ds = ImageDataset::new("t", vec![a.clone(), a * 2.0], vec![0, 1], vec!["a".into(), "b".into()]).unwrap();
        let v = ds.vectors(&[1]).unwrap();
        assert_eq!(v.data.as_slice(), &[2.0, 6.0, 4.0, 8.0]);
        assert_eq!(ds.class_counts(), vec![1, 1]);
    }
}
