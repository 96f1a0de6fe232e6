//! Image-as-vector baselines `y = U' x` and their repulsion variants.

use std::fmt;
use std::str::FromStr;

use crate::embed_2d::{centering, npp_matrix, repulsion_for, resolve_t, DEFAULT_BETA, DEFAULT_K, DEFAULT_LDA_BETA};
use crate::error::{Error, Result};
use crate::graph;
use crate::spectral::{self, EigenSelection};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    /// One sample per column.
    pub data: Matrix,
    pub labels: Vec<usize>,
}

impl VectorDataset {
    pub fn new(data: Matrix, labels: Vec<usize>) -> Result<Self> {
        if data.ncols() != labels.len() {
            return Err(Error::shape(format!(
                "{} samples but {} labels",
                data.ncols(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::param("empty dataset"));
        }
        Ok(VectorDataset { data, labels })
    }

    pub fn class_count(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method1d {
    Pca,
    Lda,
    Lpp,
    Olpp,
    Npp,
    Onpp,
    LdaR,
    OlppR,
    OnppR,
}

impl Method1d {
    pub const ALL: [Method1d; 9] = [
        Method1d::Pca,
        Method1d::Lda,
        Method1d::Lpp,
        Method1d::Olpp,
        Method1d::Npp,
        Method1d::Onpp,
        Method1d::LdaR,
        Method1d::OlppR,
        Method1d::OnppR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method1d::Pca => "PCA",
            Method1d::Lda => "LDA",
            Method1d::Lpp => "LPP",
            Method1d::Olpp => "OLPP",
            Method1d::Npp => "NPP",
            Method1d::Onpp => "ONPP",
            Method1d::LdaR => "LDA-R",
            Method1d::OlppR => "OLPP-R",
            Method1d::OnppR => "ONPP-R",
        }
    }

    pub fn is_repulsion(self) -> bool {
        matches!(self, Method1d::LdaR | Method1d::OlppR | Method1d::OnppR)
    }

    pub fn default_beta(self) -> f64 {
        if self == Method1d::LdaR {
            DEFAULT_LDA_BETA
        } else {
            DEFAULT_BETA
        }
    }
}

impl fmt::Display for Method1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method1d {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        Method1d::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::param(format!("unknown 1D method '{s}'")))
    }
}

/// PCA pre-reduction applied before every non-PCA method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PcaPredim {
    None,
    /// `min(n - c, m)`.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Params1d {
    pub k: Option<usize>,
    pub t: Option<f64>,
    pub beta: Option<f64>,
    pub pca_predim: PcaPredim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint1d {
    Orthonormal,
    BOrthonormal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projector1D {
    /// `m x d`.
    pub basis: Matrix,
    pub constraint: Constraint1d,
}

impl Projector1D {
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.nrows() != self.basis.nrows() {
            return Err(Error::shape(format!(
                "data has {} rows, projector expects {}",
                x.nrows(),
                self.basis.nrows()
            )));
        }
        Ok(self.basis.transpose() * x)
    }
}

/// Within- and between-class scatter matrices.
pub fn scatter_matrices(ds: &VectorDataset) -> (Matrix, Matrix) {
    let x = &ds.data;
    let m = x.nrows();
    let n = x.ncols();
    let mean = x.column_mean();
    let mut classes: Vec<usize> = ds.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let mut sw = Matrix::zeros(m, m);
    let mut sb = Matrix::zeros(m, m);
    for c in classes {
        let members: Vec<usize> = (0..n).filter(|&i| ds.labels[i] == c).collect();
        let mut class_mean = nalgebra::DVector::zeros(m);
        for &i in &members {
            class_mean += x.column(i);
        }
        class_mean /= members.len() as f64;
        for &i in &members {
            let d = x.column(i) - &class_mean;
            sw.ger(1.0, &d, &d, 1.0);
        }
        let d = &mean - &class_mean;
        sb.ger(members.len() as f64, &d, &d, 1.0);
    }
    (sw, sb)
}

/// Top-`d` principal directions of the centered data, through the smaller
/// of the two Gram forms.
pub fn pca_basis(x: &Matrix, d: usize) -> Result<Matrix> {
    let (m, n) = x.shape();
    let centered = x * centering(n);
    if m <= n {
        let cov = &centered * centered.transpose();
        return Ok(spectral::sym_eig(&cov, EigenSelection::top(d))?.vectors);
    }
    if d > n {
        return Err(Error::Rank(format!("cannot extract {d} principal directions from {n} samples")));
    }
    let gram = centered.transpose() * &centered;
    let pairs = spectral::sym_eig(&gram, EigenSelection::top(d))?;
    let lead = pairs.values[0].max(0.0);
    let mut basis = Matrix::zeros(m, d);
    for (c, &lambda) in pairs.values.iter().enumerate() {
        if !(lambda > 1e-12 * lead) {
            return Err(Error::Rank(format!(
                "centered data has rank below the requested {d} principal directions"
            )));
        }
        let col = &centered * pairs.vectors.column(c) / lambda.sqrt();
        basis.set_column(c, &col);
    }
    let mut q = basis.clone().qr().q();
    // QR may flip columns; restore the orientation of the eigenvectors.
    for c in 0..d {
        if q.column(c).dot(&basis.column(c)) < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    Ok(q)
}

fn ridge_gen_eig(objective_side: &Matrix, constraint_side: &Matrix, sel: EigenSelection) -> Result<Matrix> {
    match spectral::gen_sym_eig(objective_side, constraint_side, sel) {
        Err(Error::NotDefinite { min_eigenvalue, .. }) => {
            let n = constraint_side.nrows();
            let shift = min_eigenvalue.abs() + 1e-8 * constraint_side.norm();
            let shifted = constraint_side + Matrix::identity(n, n) * shift;
            Ok(spectral::gen_sym_eig(objective_side, &shifted, sel)?.vectors)
        }
        other => Ok(other?.vectors),
    }
}

/// Fits a `d`-dimensional projector with `method`.
///
/// Graphs are built on the input vectors; the optional PCA pre-reduction
/// only changes the space in which the eigenproblem is solved, and the
/// returned basis composes both steps.
pub fn fit_1d(ds: &VectorDataset, method: Method1d, d: usize, params: &Params1d) -> Result<Projector1D> {
    let (m, n) = ds.data.shape();
    if d == 0 || d > m {
        return Err(Error::param(format!("dimension {d} must lie in 1..={m}")));
    }
    if method == Method1d::Pca {
        return Ok(Projector1D {
            basis: pca_basis(&ds.data, d)?,
            constraint: Constraint1d::Orthonormal,
        });
    }

    let c = ds.class_count();
    let predim = match params.pca_predim {
        PcaPredim::None => None,
        PcaPredim::Auto => Some(n.saturating_sub(c).min(m)),
        PcaPredim::Fixed(p) => Some(p),
    };
    let pre = match predim {
        Some(p) => {
            if p < d {
                return Err(Error::param(format!(
                    "PCA pre-dimension {p} is below the target dimension {d}"
                )));
            }
            Some(pca_basis(&ds.data, p)?)
        }
        None => None,
    };
    let xr = match &pre {
        Some(p) => p.transpose() * &ds.data,
        None => ds.data.clone(),
    };

    let k = params.k.unwrap_or(DEFAULT_K);
    let beta = params.beta.unwrap_or(method.default_beta());
    let points = &ds.data;
    let labels = &ds.labels;
    let t = || resolve_t(points, labels, k, params.t);
    let repulsion = |t: f64| -> Result<Matrix> { Ok(repulsion_for(points, labels, k, t)?.laplacian) };
    let sandwich = |mid: &Matrix| &xr * mid * xr.transpose();

    let (basis, constraint) = match method {
        Method1d::Pca => unreachable!(),
        Method1d::Lda | Method1d::LdaR => {
            let reduced = VectorDataset::new(xr.clone(), labels.clone())?;
            let (sw, sb) = scatter_matrices(&reduced);
            let sw = if method == Method1d::LdaR {
                sw - sandwich(&repulsion(t()?)?) * beta
            } else {
                sw
            };
            (ridge_gen_eig(&sb, &sw, EigenSelection::top(d))?, Constraint1d::BOrthonormal)
        }
        Method1d::Lpp => {
            let lb = graph::laplacian(&graph::gaussian_weights(&graph::build_label_graph(labels), points, t()?)?)?;
            let v = ridge_gen_eig(&sandwich(&lb.laplacian), &sandwich(&lb.degree), EigenSelection::bottom(d))?;
            (v, Constraint1d::BOrthonormal)
        }
        Method1d::Olpp | Method1d::OlppR => {
            let tt = t()?;
            let lb = graph::laplacian(&graph::gaussian_weights(&graph::build_label_graph(labels), points, tt)?)?;
            let mid = if method == Method1d::OlppR {
                lb.laplacian - repulsion(tt)? * beta
            } else {
                lb.laplacian
            };
            let v = spectral::sym_eig(&sandwich(&mid), EigenSelection::bottom(d))?.vectors;
            (v, Constraint1d::Orthonormal)
        }
        Method1d::Npp => {
            let w = graph::lle_weights(&graph::build_label_graph(labels), points)?;
            let h = npp_matrix(w.weights());
            let xx = &xr * xr.transpose();
            let v = ridge_gen_eig(&sandwich(&h), &xx, EigenSelection::bottom(d))?;
            (v, Constraint1d::BOrthonormal)
        }
        Method1d::Onpp | Method1d::OnppR => {
            let w = graph::lle_weights(&graph::build_label_graph(labels), points)?;
            let h = npp_matrix(w.weights());
            let mid = if method == Method1d::OnppR {
                h - repulsion(t()?)? * beta
            } else {
                h
            };
            let v = spectral::sym_eig(&sandwich(&mid), EigenSelection::bottom(d))?.vectors;
            (v, Constraint1d::Orthonormal)
        }
    };

    let basis = match pre {
        Some(p) => p * basis,
        None => basis,
    };
    Ok(Projector1D { basis, constraint })
}
