//! Dense symmetric and symmetric-definite generalized eigensolvers.
//!
//! Every solver in the crate goes through [`sym_eig`] or [`gen_sym_eig`].
//! Both symmetrize their inputs, sort the selected pairs, normalize signs so
//! that the entry of largest magnitude in each eigenvector is positive, and
//! verify residual and orthonormality bounds before returning.

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::Matrix;

/// A constraint matrix is accepted as positive definite when its smallest
/// eigenvalue exceeds this fraction of its Frobenius norm.
pub const DEFINITENESS_FLOOR: f64 = 1e-10;

const ORTHONORMALITY_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const B_ORTHONORMALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// Smallest eigenvalues, returned in ascending order.
    Bottom,
    /// Largest eigenvalues, returned in descending order.
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenSelection {
    pub count: usize,
    pub which: Which,
}

impl EigenSelection {
    pub fn bottom(count: usize) -> Self {
        EigenSelection {
            count,
            which: Which::Bottom,
        }
    }

    pub fn top(count: usize) -> Self {
        EigenSelection { count, which: Which::Top }
    }

    fn validate(&self, order: usize) -> Result<()> {
        if self.count == 0 || self.count > order {
            return Err(Error::param(format!(
                "cannot select {} eigenpairs of a matrix of order {order}",
                self.count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// One eigenvector per column.
    pub vectors: Matrix,
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn require_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Full decomposition of a symmetric matrix with eigenvalues ascending.
fn full_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn pick(values: &[f64], vectors: &Matrix, sel: EigenSelection) -> EigenPairs {
    let n = values.len();
    let idx: Vec<usize> = match sel.which {
        Which::Bottom => (0..sel.count).collect(),
        Which::Top => (0..sel.count).map(|i| n - 1 - i).collect(),
    };
    let mut out = Matrix::zeros(vectors.nrows(), sel.count);
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &vectors.column(i));
    }
    fix_signs(&mut out);
    EigenPairs {
        values: idx.iter().map(|&i| values[i]).collect(),
        vectors: out,
    }
}

/// Flips each column so its entry of largest magnitude is positive.
pub fn fix_signs(v: &mut Matrix) {
    for mut col in v.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

/// Smallest eigenvalue of the symmetrized matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let s = symmetrize(m);
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric eigenproblem `M v = lambda v` restricted to `sel`.
pub fn sym_eig(m: &Matrix, sel: EigenSelection) -> Result<EigenPairs> {
    require_square(m, "eigenproblem matrix")?;
    sel.validate(m.nrows())?;
    let s = symmetrize(m);
    let (values, vectors) = full_eigen(&s);
    let pairs = pick(&values, &vectors, sel);

    let gram = pairs.vectors.transpose() * &pairs.vectors;
    let orth = (gram - Matrix::identity(sel.count, sel.count)).norm();
    if orth > ORTHONORMALITY_TOL {
        return Err(Error::Numerical(format!("eigenvectors not orthonormal: |V'V - I| = {orth:e}")));
    }
    let scale = s.norm().max(f64::MIN_POSITIVE);
    for (c, &lambda) in pairs.values.iter().enumerate() {
        let v = pairs.vectors.column(c);
        let r = (&s * v - v * lambda).norm();
        if r > RESIDUAL_TOL * scale {
            return Err(Error::Numerical(format!(
                "eigenpair {c} residual {r:e} exceeds {:e}",
                RESIDUAL_TOL * scale
            )));
        }
    }
    Ok(pairs)
}

/// Generalized symmetric-definite eigenproblem `M v = lambda N v`.
///
/// `N` must be positive definite above [`DEFINITENESS_FLOOR`]; otherwise
/// [`Error::NotDefinite`] carries its smallest eigenvalue. Returned vectors
/// are `N`-orthonormal.
pub fn gen_sym_eig(m: &Matrix, n: &Matrix, sel: EigenSelection) -> Result<EigenPairs> {
    require_square(m, "eigenproblem matrix")?;
    require_square(n, "constraint matrix")?;
    if m.shape() != n.shape() {
        return Err(Error::shape(format!(
            "generalized eigenproblem with {:?} and {:?} matrices",
            m.shape(),
            n.shape()
        )));
    }
    sel.validate(m.nrows())?;
    let ms = symmetrize(m);
    let ns = symmetrize(n);
    let (n_values, n_vectors) = full_eigen(&ns);
    let n_norm = ns.norm();
    let min_eigenvalue = n_values[0];
    let floor = DEFINITENESS_FLOOR * n_norm;
    if !(min_eigenvalue > floor) {
        return Err(Error::NotDefinite { min_eigenvalue, floor });
    }

    // N^{-1/2} = Q diag(lambda^{-1/2}), then solve the congruent standard problem.
    let mut whiten = n_vectors;
    for (c, &lambda) in n_values.iter().enumerate() {
        let s = 1.0 / lambda.sqrt();
        whiten.column_mut(c).scale_mut(s);
    }
    let reduced = symmetrize(&(whiten.transpose() * &ms * &whiten));
    let (values, w) = full_eigen(&reduced);
    let mut pairs = pick(&values, &w, sel);
    pairs.vectors = &whiten * &pairs.vectors;
    fix_signs(&mut pairs.vectors);

    let cond = n_values[n_values.len() - 1] / min_eigenvalue;
    let slack = (cond * 1e-6).max(1.0);
    let b_gram = pairs.vectors.transpose() * &ns * &pairs.vectors;
    let orth = (b_gram - Matrix::identity(sel.count, sel.count)).norm();
    if orth > B_ORTHONORMALITY_TOL * slack {
        return Err(Error::Numerical(format!(
            "eigenvectors not N-orthonormal: |V'NV - I| = {orth:e}"
        )));
    }
    let m_norm = ms.norm();
    for (c, &lambda) in pairs.values.iter().enumerate() {
        let v: DVector<f64> = pairs.vectors.column(c).into_owned();
        let r = (&ms * &v - (&ns * &v) * lambda).norm();
        let bound = RESIDUAL_TOL * (m_norm + lambda.abs().max(1.0) * n_norm) * v.norm().max(1.0) * slack;
        if r > bound {
            return Err(Error::Numerical(format!(
                "generalized eigenpair {c} residual {r:e} exceeds {bound:e}"
            )));
        }
    }
    Ok(pairs)
}
