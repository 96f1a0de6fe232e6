//! Experiment configuration: a flat TOML file whose keys mirror the CLI
//! flags. Flags given on the command line override file values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use reptensor::embed_1d::Method1d;
use reptensor::embed_2d::Method2d;
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    #[serde(alias = "unilateral")]
    Uni,
    #[serde(alias = "bilateral")]
    Bi,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Uni => "uni",
            Mode::Bi => "bi",
        }
    }
}

impl FromStr for Mode {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uni" | "unilateral" => Ok(Mode::Uni),
            "bi" | "bilateral" => Ok(Mode::Bi),
            other => Err(BenchError::Config(format!("mode must be 'uni' or 'bi', got '{other}'"))),
        }
    }
}

/// A 2D (image-as-matrix) or 1D (image-as-vector) method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodName {
    Matrix(Method2d),
    Vector(Method1d),
}

impl MethodName {
    pub fn name(self) -> &'static str {
        match self {
            MethodName::Matrix(m) => m.name(),
            MethodName::Vector(m) => m.name(),
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodName {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(m) = s.parse::<Method2d>() {
            return Ok(MethodName::Matrix(m));
        }
        s.parse::<Method1d>()
            .map(MethodName::Vector)
            .map_err(|_| BenchError::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    #[serde(alias = "method")]
    pub methods: Vec<String>,
    pub mode: Mode,
    pub dims: Vec<usize>,
    pub train_per_class: usize,
    pub realizations: usize,
    pub seed: u64,
    pub beta: Option<f64>,
    pub knn: Option<usize>,
    /// Gaussian kernel width; defaults to the mean squared label-edge length.
    pub t: Option<f64>,
    /// 2D-PCA reduction `[p1, p2]` applied before 2D methods.
    pub preprocess: Option<[usize; 2]>,
    pub max_iter: usize,
    /// Resize target `[rows, cols]` applied while loading images.
    pub resize: Option<[usize; 2]>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            methods: Vec::new(),
            mode: Mode::Uni,
            dims: Vec::new(),
            train_per_class: 5,
            realizations: 20,
            seed: 0,
            beta: None,
            knn: None,
            t: None,
            preprocess: None,
            max_iter: reptensor::embed_2d::DEFAULT_MAX_ITER,
            resize: None,
            jobs: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parsed_methods(&self) -> Result<Vec<MethodName>> {
        if self.methods.is_empty() {
            return Err(BenchError::Config("no methods given".into()));
        }
        let mut out: Vec<MethodName> = self
            .methods
            .iter()
            .flat_map(|m| m.split(','))
            .filter(|m| !m.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        out.dedup();
        Ok(out)
    }

    /// Checks everything that can be checked without the data.
    pub fn validate(&self) -> Result<()> {
        self.parsed_methods()?;
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(BenchError::Config("dims must be a non-empty list of positive integers".into()));
        }
        if self.realizations == 0 {
            return Err(BenchError::Config("realizations must be at least 1".into()));
        }
        if self.train_per_class == 0 {
            return Err(BenchError::Config("train-per-class must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(BenchError::Config("max-iter must be at least 1".into()));
        }
        if let Some(b) = self.beta {
            if !b.is_finite() || b < 0.0 {
                return Err(BenchError::Config(format!("beta must be a finite non-negative number, got {b}")));
            }
        }
        if let Some(t) = self.t {
            if !(t.is_finite() && t > 0.0) {
                return Err(BenchError::Config(format!("t must be positive, got {t}")));
            }
        }
        if self.knn == Some(0) {
            return Err(BenchError::Config("knn must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(BenchError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            dataset = "data/orl"
            methods = ["2D-PCA", "2d-olpp-r", "LDA"]
            mode = "bi"
            dims = [2, 4]
            train-per-class = 3
            seed = 9
            beta = 0.2
            preprocess = [20, 20]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Bi);
        assert_eq!(cfg.realizations, 20);
        assert_eq!(cfg.preprocess, Some([20, 20]));
        assert_eq!(
            cfg.parsed_methods().unwrap(),
            vec![
                MethodName::Matrix(Method2d::Pca),
                MethodName::Matrix(Method2d::OlppR),
                MethodName::Vector(Method1d::Lda)
            ]
        );
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("colour = 3").is_err());
        assert!(ExperimentConfig::from_toml("mode = \"sideways\"").is_err());
        let cfg = ExperimentConfig::from_toml("methods = [\"2D-FOO\"]\ndims = [1]").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("methods = [\"GLRAM\"]\ndims = [0]").unwrap();
        assert!(cfg.validate().is_err());
    }
}
