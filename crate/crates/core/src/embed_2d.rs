//! Two-dimensional (image-as-matrix) projections `Y_k = U' X_k V`.
//!
//! Every method is reduced to a pair of `n x n` matrices `(A, B)` acting on
//! the sample mode of the data tensor: `A` enters an objective
//! `trace(<Y x_3 A, Y>)` to be minimized and `B` one to be maximized. The
//! projectors are then found by alternating eigensolves on the side matrices
//! `A_1 = sum_i Z_1(i,:,:) A Z_1(i,:,:)'` (size `m2 x m2`, with
//! `Z_1 = X x_1 U'`) and `A_2 = sum_j Z_2(:,j,:) A Z_2(:,j,:)'` (size
//! `m1 x m1`, with `Z_2 = X x_2 V'`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{self, LaplacianBundle, WeightedGraph};
use crate::spectral::{self, EigenPairs, EigenSelection};
use crate::tensor::{Mode, Tensor3};
use crate::Matrix;

pub const DEFAULT_MAX_ITER: usize = 5;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_K: usize = 6;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_LDA_BETA: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDataset {
    pub tensor: Tensor3,
    pub labels: Vec<usize>,
}

impl MatrixDataset {
    pub fn new(tensor: Tensor3, labels: Vec<usize>) -> Result<Self> {
        if tensor.dims().2 != labels.len() {
            return Err(Error::shape(format!(
                "tensor holds {} samples but {} labels were given",
                tensor.dims().2,
                labels.len()
            )));
        }
        Ok(MatrixDataset { tensor, labels })
    }

    /// Vectorized images as the columns of an `m1 m2 x n` matrix.
    pub fn points(&self) -> Matrix {
        self.tensor.tube_view().into_owned()
    }

    pub fn class_count(&self) -> usize {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method2d {
    Glram,
    Pca,
    Olpp,
    Lpp,
    Onpp,
    Npp,
    Lda,
    OlppR,
    LppR,
    OnppR,
    NppR,
    LdaR,
}

impl Method2d {
    pub const ALL: [Method2d; 12] = [
        Method2d::Glram,
        Method2d::Pca,
        Method2d::Olpp,
        Method2d::Lpp,
        Method2d::Onpp,
        Method2d::Npp,
        Method2d::Lda,
        Method2d::OlppR,
        Method2d::LppR,
        Method2d::OnppR,
        Method2d::NppR,
        Method2d::LdaR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method2d::Glram => "GLRAM",
            Method2d::Pca => "2D-PCA",
            Method2d::Olpp => "2D-OLPP",
            Method2d::Lpp => "2D-LPP",
            Method2d::Onpp => "2D-ONPP",
            Method2d::Npp => "2D-NPP",
            Method2d::Lda => "2D-LDA",
            Method2d::OlppR => "2D-OLPP-R",
            Method2d::LppR => "2D-LPP-R",
            Method2d::OnppR => "2D-ONPP-R",
            Method2d::NppR => "2D-NPP-R",
            Method2d::LdaR => "2D-LDA-R",
        }
    }

    pub fn is_repulsion(self) -> bool {
        matches!(
            self,
            Method2d::OlppR | Method2d::LppR | Method2d::OnppR | Method2d::NppR | Method2d::LdaR
        )
    }

    /// The method without repulsion.
    pub fn base(self) -> Method2d {
        match self {
            Method2d::OlppR => Method2d::Olpp,
            Method2d::LppR => Method2d::Lpp,
            Method2d::OnppR => Method2d::Onpp,
            Method2d::NppR => Method2d::Npp,
            Method2d::LdaR => Method2d::Lda,
            m => m,
        }
    }

    pub fn solver(self) -> Solver {
        match self.base() {
            Method2d::Glram | Method2d::Pca => Solver::Alg1Max,
            Method2d::Olpp | Method2d::Onpp => Solver::Alg1Min,
            Method2d::Lpp | Method2d::Npp => Solver::Alg2,
            _ => Solver::LdaVariant,
        }
    }

    pub fn default_beta(self) -> f64 {
        match self {
            Method2d::LdaR => DEFAULT_LDA_BETA,
            m if m.is_repulsion() => DEFAULT_BETA,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Method2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method2d {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let key = match up.as_str() {
            "CSA" | "GLRAM/CSA" => "GLRAM",
            other => other,
        };
        Method2d::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::param(format!("unknown 2D method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Bottom eigenvectors of the `A` side matrices, orthonormal projectors.
    Alg1Min,
    /// Top eigenvectors of the `B` side matrices, orthonormal projectors.
    Alg1Max,
    /// Bottom generalized eigenvectors of `A_i v = lambda B_i v`.
    Alg2,
    /// Top generalized eigenvectors of `B_i v = lambda A_i v`.
    LdaVariant,
}

/// Graph and repulsion parameters. `None` selects the documented default.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GraphParams {
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub t: Option<f64>,
}

/// A method resolved to its `(A, B)` pair.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub method: Method2d,
    pub a: Option<Matrix>,
    pub b: Option<Matrix>,
    pub solver: Solver,
    pub k: usize,
    pub beta: f64,
    /// Gaussian width shared by the label and repulsion graphs, when used.
    pub t: Option<f64>,
}

/// LDA weights `w_ij = 1/n_c` for same-class pairs (including `i = j`) and
/// the label-graph Laplacian `S = I - W`.
pub fn lda_weight_matrix(labels: &[usize]) -> (Matrix, Matrix) {
    let n = labels.len();
    let mut counts = std::collections::HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let w = Matrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            1.0 / counts[&labels[i]] as f64
        } else {
            0.0
        }
    });
    let s = Matrix::identity(n, n) - &w;
    (w, s)
}

/// Centering matrix `J_n = I - ee'/n`.
pub fn centering(n: usize) -> Matrix {
    Matrix::identity(n, n) - Matrix::from_element(n, n, 1.0 / n as f64)
}

/// `H = (I - W)'(I - W)`.
pub fn npp_matrix(w: &Matrix) -> Matrix {
    let n = w.nrows();
    let m = Matrix::identity(n, n) - w;
    m.transpose() * m
}

/// Gaussian width used by a dataset: the mean squared label-graph edge
/// length, or the kNN graph's when no two items share a label.
pub fn resolve_t(points: &Matrix, labels: &[usize], k: usize, t: Option<f64>) -> Result<f64> {
    if let Some(t) = t {
        if !(t > 0.0) {
            return Err(Error::param(format!("Gaussian width must be positive, got {t}")));
        }
        return Ok(t);
    }
    let label = graph::build_label_graph(labels);
    if label.edge_count() > 0 {
        graph::default_gaussian_t(&label, points)
    } else {
        let knn = graph::build_knn_graph(points, k.min(points.ncols().saturating_sub(1)).max(1))?;
        graph::default_gaussian_t(&knn, points)
    }
}

/// Repulsion Laplacian of a labelled point set.
pub fn repulsion_for(points: &Matrix, labels: &[usize], k: usize, t: f64) -> Result<LaplacianBundle> {
    let label = graph::build_label_graph(labels);
    let knn = graph::build_knn_graph(points, k)?;
    let rep = graph::build_repulsion_graph(&label, &knn)?;
    graph::repulsion_laplacian(&rep, points, t)
}

fn label_laplacian(points: &Matrix, labels: &[usize], t: f64) -> Result<LaplacianBundle> {
    let g = graph::gaussian_weights(&graph::build_label_graph(labels), points, t)?;
    graph::laplacian(&g)
}

fn lle_on_labels(points: &Matrix, labels: &[usize]) -> Result<WeightedGraph> {
    graph::lle_weights(&graph::build_label_graph(labels), points)
}

/// Builds the `(A, B)` pair of `method` on the given data.
///
/// Graph methods use the supervised label graph: Gaussian weights for the
/// LPP family and LLE weights for the NPP family. Repulsion rows subtract
/// `beta L_r` from `A`, with `L_r` the Gaussian Laplacian of the kNN edges
/// joining different classes.
pub fn method_matrices(method: Method2d, data: &MatrixDataset, params: &GraphParams) -> Result<MethodSpec> {
    let n = data.labels.len();
    let k = params.k.unwrap_or(DEFAULT_K);
    let beta = if method.is_repulsion() {
        params.beta.unwrap_or(method.default_beta())
    } else {
        0.0
    };
    if beta < 0.0 {
        return Err(Error::param(format!("repulsion weight must be non-negative, got {beta}")));
    }
    let needs_t = method.is_repulsion() || matches!(method.base(), Method2d::Olpp | Method2d::Lpp);
    let points = data.points();
    let t = if needs_t {
        Some(resolve_t(&points, &data.labels, k, params.t)?)
    } else {
        None
    };

    let (a, b) = match method.base() {
        Method2d::Glram => (None, Some(Matrix::identity(n, n))),
        Method2d::Pca => (None, Some(centering(n))),
        Method2d::Olpp | Method2d::Lpp => {
            let lb = label_laplacian(&points, &data.labels, t.expect("width resolved"))?;
            let b = (method.base() == Method2d::Lpp).then_some(lb.degree);
            (Some(lb.laplacian), b)
        }
        Method2d::Onpp | Method2d::Npp => {
            let w = lle_on_labels(&points, &data.labels)?;
            let h = npp_matrix(w.weights());
            let b = (method.base() == Method2d::Npp).then(|| Matrix::identity(n, n));
            (Some(h), b)
        }
        Method2d::Lda => {
            let (_, s) = lda_weight_matrix(&data.labels);
            let between = centering(n) - &s;
            (Some(s), Some(between))
        }
        _ => unreachable!("base() never returns a repulsion method"),
    };

    let a = match (a, method.is_repulsion()) {
        (Some(a), true) => {
            let lr = repulsion_for(&points, &data.labels, k, t.expect("width resolved"))?;
            Some(a - lr.laplacian * beta)
        }
        (a, _) => a,
    };

    Ok(MethodSpec {
        method,
        a,
        b,
        solver: method.solver(),
        k,
        beta,
        t,
    })
}

/// `A_1 = sum_i Z_1(i,:,:) A Z_1(i,:,:)'` with `Z_1 = X x_1 U'`.
pub fn side_matrix_right(x: &Tensor3, u: &Matrix, a: &Matrix) -> Result<Matrix> {
    check_sample_matrix(x, a)?;
    let z = x.mode_product(&u.transpose(), Mode::One)?;
    let p = z.mode_product(a, Mode::Three)?;
    let (_, m2, n) = z.dims();
    let mut out = Matrix::zeros(m2, m2);
    for h in 0..n {
        out.gemm_tr(1.0, &p.slice_view(h), &z.slice_view(h), 1.0);
    }
    Ok(spectral::symmetrize(&out))
}

/// `A_2 = sum_j Z_2(:,j,:) A Z_2(:,j,:)'` with `Z_2 = X x_2 V'`.
pub fn side_matrix_left(x: &Tensor3, v: &Matrix, a: &Matrix) -> Result<Matrix> {
    check_sample_matrix(x, a)?;
    let z = x.mode_product(&v.transpose(), Mode::Two)?;
    let p = z.mode_product(a, Mode::Three)?;
    let (m1, _, n) = z.dims();
    let mut out = Matrix::zeros(m1, m1);
    for h in 0..n {
        out.gemm(1.0, &p.slice_view(h), &z.slice_view(h).transpose(), 1.0);
    }
    Ok(spectral::symmetrize(&out))
}

fn check_sample_matrix(x: &Tensor3, a: &Matrix) -> Result<()> {
    let n = x.dims().2;
    if a.shape() != (n, n) {
        return Err(Error::shape(format!(
            "sample-mode matrix must be {n}x{n}, got {:?}",
            a.shape()
        )));
    }
    Ok(())
}

/// `Y = X x_1 U' x_2 V'`.
pub fn project_tensor(x: &Tensor3, u: &Matrix, v: &Matrix) -> Result<Tensor3> {
    x.mode_product(&u.transpose(), Mode::One)?
        .mode_product(&v.transpose(), Mode::Two)
}

/// `trace(<Y x_3 A, Y>)` evaluated through the slice Gram matrix.
pub fn objective(x: &Tensor3, u: &Matrix, v: &Matrix, a: &Matrix) -> Result<f64> {
    let y = project_tensor(x, u, v)?;
    check_sample_matrix(&y, a)?;
    Ok(y.slice_gram().component_mul(a).sum())
}

/// Same objective through the contracted product and the tensor trace.
pub fn objective_tensor_trace(x: &Tensor3, u: &Matrix, v: &Matrix, a: &Matrix) -> Result<f64> {
    let y = project_tensor(x, u, v)?;
    let ya = y.mode_product(a, Mode::Three)?;
    ya.contracted_product_33(&y)?.trace()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Orthonormal,
    /// Orthonormal with respect to the constraint-side matrix of its solve.
    BOrthonormal,
    Identity,
}

/// Which projectors were fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sides {
    /// `U` fitted, `V = I`.
    LeftOnly,
    /// `V` fitted, `U = I`.
    RightOnly,
    Both,
}

/// Side solved by a unilateral fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Solve `U` (rows), keep `V = I`.
    Left,
    /// Solve `V` (columns), keep `U = I`.
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    pub u: Matrix,
    pub v: Matrix,
    pub sides: Sides,
    pub u_constraint: Constraint,
    pub v_constraint: Constraint,
}

impl ProjectorPair {
    pub fn dims(&self) -> (usize, usize) {
        (self.u.ncols(), self.v.ncols())
    }

    pub fn input_dims(&self) -> (usize, usize) {
        (self.u.nrows(), self.v.nrows())
    }

    /// `U' X V`.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.shape() != self.input_dims() {
            return Err(Error::shape(format!(
                "image is {:?} but projectors expect {:?}",
                x.shape(),
                self.input_dims()
            )));
        }
        Ok(self.u.transpose() * x * &self.v)
    }

    pub fn project_tensor(&self, x: &Tensor3) -> Result<Tensor3> {
        project_tensor(x, &self.u, &self.v)
    }

    /// Composition `outer` then `self`: `U = U_outer U_self`.
    pub fn after(&self, outer: &ProjectorPair) -> Result<ProjectorPair> {
        if outer.dims() != self.input_dims() {
            return Err(Error::shape(format!(
                "cannot compose projectors with output {:?} and input {:?}",
                outer.dims(),
                self.input_dims()
            )));
        }
        let combine = |a: Constraint, b: Constraint| match (a, b) {
            (Constraint::Identity, c) | (c, Constraint::Identity) => c,
            (Constraint::Orthonormal, Constraint::Orthonormal) => Constraint::Orthonormal,
            _ => Constraint::BOrthonormal,
        };
        Ok(ProjectorPair {
            u: &outer.u * &self.u,
            v: &outer.v * &self.v,
            sides: self.sides,
            u_constraint: combine(outer.u_constraint, self.u_constraint),
            v_constraint: combine(outer.v_constraint, self.v_constraint),
        })
    }
}

/// Objective values after every half-step, iteration count and convergence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Number of constraint matrices that needed a ridge shift.
    pub ridge_shifts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

fn truncated_identity(m: usize, d: usize) -> Matrix {
    Matrix::identity(m, d)
}

fn check_dims(x: &Tensor3, d1: usize, d2: usize) -> Result<()> {
    let (m1, m2, _) = x.dims();
    if d1 == 0 || d2 == 0 || d1 > m1 || d2 > m2 {
        return Err(Error::param(format!(
            "projection dims ({d1}, {d2}) must lie in 1..={m1} x 1..={m2}"
        )));
    }
    Ok(())
}

fn relative_change(old: f64, new: f64) -> f64 {
    let scale = old.abs().max(new.abs());
    if scale == 0.0 {
        0.0
    } else {
        (new - old).abs() / scale
    }
}

/// Runs `solve` and, when its constraint matrix is not positive definite,
/// shifts that matrix by `(|lambda_min| + 1e-8 |M|) I` and retries once.
fn with_ridge(
    objective_side: &Matrix,
    constraint_side: &Matrix,
    sel: EigenSelection,
    shifts: &mut usize,
) -> Result<EigenPairs> {
    match spectral::gen_sym_eig(objective_side, constraint_side, sel) {
        Err(Error::NotDefinite { min_eigenvalue, .. }) => {
            let shift = min_eigenvalue.abs() + 1e-8 * constraint_side.norm();
            let n = constraint_side.nrows();
            let shifted = constraint_side + Matrix::identity(n, n) * shift;
            *shifts += 1;
            spectral::gen_sym_eig(objective_side, &shifted, sel)
        }
        other => other,
    }
}

fn require(m: &Option<Matrix>, which: &str, method: Method2d) -> Result<Matrix> {
    m.clone()
        .ok_or_else(|| Error::param(format!("{method} has no {which} matrix")))
}

/// Alternating process with orthonormal projectors (higher-order orthogonal
/// iteration). `Alg1Min` takes bottom eigenvectors of the `A` side matrices,
/// `Alg1Max` top eigenvectors of the `B` side matrices.
pub fn fit_alg1(
    x: &Tensor3,
    spec: &MethodSpec,
    d1: usize,
    d2: usize,
    opts: FitOptions,
) -> Result<(ProjectorPair, FitTrace)> {
    check_dims(x, d1, d2)?;
    let (m, pick): (Matrix, fn(usize) -> EigenSelection) = match spec.solver {
        Solver::Alg1Min => (require(&spec.a, "A", spec.method)?, EigenSelection::bottom),
        Solver::Alg1Max => (require(&spec.b, "B", spec.method)?, EigenSelection::top),
        s => return Err(Error::param(format!("{} uses solver {s:?}, not an orthonormal one", spec.method))),
    };
    let (m1, _, _) = x.dims();
    let mut u = truncated_identity(m1, d1);
    let mut v = Matrix::zeros(0, 0);
    let mut trace = FitTrace::default();
    let mut reference = None;
    let maximize = spec.solver == Solver::Alg1Max;
    // Each half-step is an exact optimum, so a computed regression is rounding
    // noise; keeping the previous factor then leaves the objective unchanged.
    let worse = |new: f64, old: f64| if maximize { new < old } else { new > old };
    for _ in 0..opts.max_iter.max(1) {
        let a1 = side_matrix_right(x, &u, &m)?;
        let cand = spectral::sym_eig(&a1, pick(d2))?.vectors;
        let mut half = objective(x, &u, &cand, &m)?;
        match trace.objectives.last() {
            Some(&last) if v.ncols() == d2 && worse(half, last) => half = last,
            _ => v = cand,
        }
        trace.objectives.push(half);

        let a2 = side_matrix_left(x, &v, &m)?;
        let cand = spectral::sym_eig(&a2, pick(d1))?.vectors;
        let mut full = objective(x, &cand, &v, &m)?;
        if worse(full, half) {
            full = half;
        } else {
            u = cand;
        }
        trace.objectives.push(full);
        trace.iterations += 1;

        let prev = reference.unwrap_or(half);
        reference = Some(full);
        if relative_change(prev, full) < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((
        ProjectorPair {
            u,
            v,
            sides: Sides::Both,
            u_constraint: Constraint::Orthonormal,
            v_constraint: Constraint::Orthonormal,
        },
        trace,
    ))
}

/// Alternating process for methods with both `A` and `B`: bottom generalized
/// eigenvectors of `A_1 v = lambda B_1 v`, then `A_2 u = lambda B_2 u`.
pub fn fit_alg2(
    x: &Tensor3,
    spec: &MethodSpec,
    d1: usize,
    d2: usize,
    opts: FitOptions,
) -> Result<(ProjectorPair, FitTrace)> {
    check_dims(x, d1, d2)?;
    let a = require(&spec.a, "A", spec.method)?;
    let b = require(&spec.b, "B", spec.method)?;
    let (m1, _, _) = x.dims();
    let mut u = truncated_identity(m1, d1);
    let mut v = Matrix::zeros(0, 0);
    let mut trace = FitTrace::default();
    let mut reference = None;
    for _ in 0..opts.max_iter.max(1) {
        let a1 = side_matrix_right(x, &u, &a)?;
        let b1 = side_matrix_right(x, &u, &b)?;
        v = with_ridge(&a1, &b1, EigenSelection::bottom(d2), &mut trace.ridge_shifts)?.vectors;
        let half = objective(x, &u, &v, &a)?;
        trace.objectives.push(half);

        let a2 = side_matrix_left(x, &v, &a)?;
        let b2 = side_matrix_left(x, &v, &b)?;
        u = with_ridge(&a2, &b2, EigenSelection::bottom(d1), &mut trace.ridge_shifts)?.vectors;
        let full = objective(x, &u, &v, &a)?;
        trace.objectives.push(full);
        trace.iterations += 1;

        let prev = reference.unwrap_or(half);
        reference = Some(full);
        if relative_change(prev, full) < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((
        ProjectorPair {
            u,
            v,
            sides: Sides::Both,
            u_constraint: Constraint::BOrthonormal,
            v_constraint: Constraint::BOrthonormal,
        },
        trace,
    ))
}

fn check_between(spec: &MethodSpec, b: &Matrix) -> Result<()> {
    if b.norm() <= 1e-12 * (b.nrows() as f64) {
        return Err(Error::Rank(format!(
            "{} needs at least two classes: the between-class matrix vanishes",
            spec.method
        )));
    }
    Ok(())
}

/// Discriminant variant: top generalized eigenvectors of `B_1 v = lambda A_1 v`
/// and `B_2 u = lambda A_2 u`.
///
/// Plain 2D-LDA alternates. With repulsion the two projectors are computed
/// once and independently from the unprojected data, since `A_1`, `A_2` may
/// lose definiteness.
pub fn fit_lda_variant(
    x: &Tensor3,
    spec: &MethodSpec,
    d1: usize,
    d2: usize,
    opts: FitOptions,
) -> Result<(ProjectorPair, FitTrace)> {
    check_dims(x, d1, d2)?;
    if !matches!(spec.method, Method2d::Lda | Method2d::LdaR) {
        return Err(Error::param(format!("{} is not a discriminant method", spec.method)));
    }
    let a = require(&spec.a, "A", spec.method)?;
    let b = require(&spec.b, "B", spec.method)?;
    check_between(spec, &b)?;
    let (m1, m2, _) = x.dims();
    let mut trace = FitTrace::default();

    if spec.method == Method2d::LdaR {
        let full_u = Matrix::identity(m1, m1);
        let full_v = Matrix::identity(m2, m2);
        let a1 = side_matrix_right(x, &full_u, &a)?;
        let b1 = side_matrix_right(x, &full_u, &b)?;
        let v = with_ridge(&b1, &a1, EigenSelection::top(d2), &mut trace.ridge_shifts)?.vectors;
        let a2 = side_matrix_left(x, &full_v, &a)?;
        let b2 = side_matrix_left(x, &full_v, &b)?;
        let u = with_ridge(&b2, &a2, EigenSelection::top(d1), &mut trace.ridge_shifts)?.vectors;
        trace.objectives.push(objective(x, &u, &v, &b)?);
        trace.iterations = 1;
        trace.converged = true;
        return Ok((
            ProjectorPair {
                u,
                v,
                sides: Sides::Both,
                u_constraint: Constraint::BOrthonormal,
                v_constraint: Constraint::BOrthonormal,
            },
            trace,
        ));
    }

    let mut u = truncated_identity(m1, d1);
    let mut v = Matrix::zeros(0, 0);
    let mut reference = None;
    for _ in 0..opts.max_iter.max(1) {
        let a1 = side_matrix_right(x, &u, &a)?;
        let b1 = side_matrix_right(x, &u, &b)?;
        v = with_ridge(&b1, &a1, EigenSelection::top(d2), &mut trace.ridge_shifts)?.vectors;
        let half = objective(x, &u, &v, &b)?;
        trace.objectives.push(half);

        let a2 = side_matrix_left(x, &v, &a)?;
        let b2 = side_matrix_left(x, &v, &b)?;
        u = with_ridge(&b2, &a2, EigenSelection::top(d1), &mut trace.ridge_shifts)?.vectors;
        let full = objective(x, &u, &v, &b)?;
        trace.objectives.push(full);
        trace.iterations += 1;

        let prev = reference.unwrap_or(half);
        reference = Some(full);
        if relative_change(prev, full) < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok((
        ProjectorPair {
            u,
            v,
            sides: Sides::Both,
            u_constraint: Constraint::BOrthonormal,
            v_constraint: Constraint::BOrthonormal,
        },
        trace,
    ))
}

/// One-sided projection: the untouched side is the exact identity and the
/// chosen side comes from a single (generalized) eigenproblem.
pub fn fit_unilateral(x: &Tensor3, spec: &MethodSpec, side: Side, d: usize) -> Result<(ProjectorPair, FitTrace)> {
    let (m1, m2, _) = x.dims();
    let (solved_dim, other) = match side {
        Side::Left => (m1, m2),
        Side::Right => (m2, m1),
    };
    if d == 0 || d > solved_dim {
        return Err(Error::param(format!("unilateral dimension {d} must lie in 1..={solved_dim}")));
    }
    let identity = Matrix::identity(other, other);
    let side_of = |m: &Matrix| match side {
        Side::Left => side_matrix_left(x, &identity, m),
        Side::Right => side_matrix_right(x, &identity, m),
    };
    let mut trace = FitTrace::default();
    let (basis, constraint, objective_matrix) = match spec.solver {
        Solver::Alg1Min => {
            let a = require(&spec.a, "A", spec.method)?;
            let p = spectral::sym_eig(&side_of(&a)?, EigenSelection::bottom(d))?;
            (p.vectors, Constraint::Orthonormal, a)
        }
        Solver::Alg1Max => {
            let b = require(&spec.b, "B", spec.method)?;
            let p = spectral::sym_eig(&side_of(&b)?, EigenSelection::top(d))?;
            (p.vectors, Constraint::Orthonormal, b)
        }
        Solver::Alg2 => {
            let a = require(&spec.a, "A", spec.method)?;
            let b = require(&spec.b, "B", spec.method)?;
            let p = with_ridge(&side_of(&a)?, &side_of(&b)?, EigenSelection::bottom(d), &mut trace.ridge_shifts)?;
            (p.vectors, Constraint::BOrthonormal, a)
        }
        Solver::LdaVariant => {
            let a = require(&spec.a, "A", spec.method)?;
            let b = require(&spec.b, "B", spec.method)?;
            check_between(spec, &b)?;
            let p = with_ridge(&side_of(&b)?, &side_of(&a)?, EigenSelection::top(d), &mut trace.ridge_shifts)?;
            (p.vectors, Constraint::BOrthonormal, b)
        }
    };
    let pair = match side {
        Side::Left => ProjectorPair {
            u: basis,
            v: identity,
            sides: Sides::LeftOnly,
            u_constraint: constraint,
            v_constraint: Constraint::Identity,
        },
        Side::Right => ProjectorPair {
            u: identity,
            v: basis,
            sides: Sides::RightOnly,
            u_constraint: Constraint::Identity,
            v_constraint: constraint,
        },
    };
    trace.objectives.push(objective(x, &pair.u, &pair.v, &objective_matrix)?);
    trace.iterations = 1;
    trace.converged = true;
    Ok((pair, trace))
}

/// Bilateral fit dispatched on the method's solver.
pub fn fit_bilateral(
    x: &Tensor3,
    spec: &MethodSpec,
    d1: usize,
    d2: usize,
    opts: FitOptions,
) -> Result<(ProjectorPair, FitTrace)> {
    match spec.solver {
        Solver::Alg1Min | Solver::Alg1Max => fit_alg1(x, spec, d1, d2, opts),
        Solver::Alg2 => fit_alg2(x, spec, d1, d2, opts),
        Solver::LdaVariant => fit_lda_variant(x, spec, d1, d2, opts),
    }
}

/// Reduces the data by bilateral 2D-PCA to `p1 x p2` images.
pub fn pre_process_2dpca(x: &Tensor3, p1: usize, p2: usize, opts: FitOptions) -> Result<(Tensor3, ProjectorPair)> {
    let n = x.dims().2;
    let spec = MethodSpec {
        method: Method2d::Pca,
        a: None,
        b: Some(centering(n)),
        solver: Solver::Alg1Max,
        k: DEFAULT_K,
        beta: 0.0,
        t: None,
    };
    let (pair, _) = fit_alg1(x, &spec, p1, p2, opts)?;
    let reduced = pair.project_tensor(x)?;
    Ok((reduced, pair))
}

/// Projection layout of a full fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    Unilateral(Side, usize),
    Bilateral(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub layout: Layout,
    pub params: GraphParams,
    pub options: FitOptions,
    /// Optional 2D-PCA reduction `(p1, p2)` applied before the method.
    pub preprocess: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub pair: ProjectorPair,
    pub trace: FitTrace,
    pub spec: MethodSpec,
}

/// Builds the method matrices and fits the projectors in one call.
pub fn fit(method: Method2d, data: &MatrixDataset, cfg: &FitConfig) -> Result<FitResult> {
    let (work, outer) = match cfg.preprocess {
        Some((p1, p2)) => {
            let (reduced, pair) = pre_process_2dpca(&data.tensor, p1, p2, cfg.options)?;
            (MatrixDataset::new(reduced, data.labels.clone())?, Some(pair))
        }
        None => (data.clone(), None),
    };
    let spec = method_matrices(method, &work, &cfg.params)?;
    let (pair, trace) = match cfg.layout {
        Layout::Unilateral(side, d) => fit_unilateral(&work.tensor, &spec, side, d)?,
        Layout::Bilateral(d1, d2) => fit_bilateral(&work.tensor, &spec, d1, d2, cfg.options)?,
    };
    let pair = match outer {
        Some(outer) => pair.after(&outer)?,
        None => pair,
    };
    Ok(FitResult { pair, trace, spec })
}
