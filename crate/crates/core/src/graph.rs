//! Affinity graphs, weighting schemes and Laplacians.
//!
//! Points are passed as the columns of an `m x n` matrix. Graphs keep an
//! explicit edge set next to the weight matrix, since Gaussian weights can
//! underflow and LLE weights can vanish on a genuine edge.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::Matrix;

/// Relative regularization added to a singular local Gram system in
/// [`lle_weights`].
pub const LLE_REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<bool>,
    weights: Matrix,
    symmetric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianBundle {
    pub laplacian: Matrix,
    pub degree: Matrix,
}

impl WeightedGraph {
    /// Graph with binary weights on the given edges. When `symmetric` is set
    /// every edge is inserted in both directions.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, symmetric: bool) -> Result<Self> {
        let mut g = WeightedGraph {
            n,
            edges: vec![false; n * n],
            weights: Matrix::zeros(n, n),
            symmetric,
        };
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::shape(format!("edge ({i}, {j}) out of range for {n} vertices")));
            }
            if i == j {
                continue;
            }
            g.insert(i, j);
            if symmetric {
                g.insert(j, i);
            }
        }
        Ok(g)
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.edges[i + self.n * j] = true;
        self.weights[(i, j)] = 1.0;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i + self.n * j]
    }

    /// Directed edge list in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Undirected edges `(i, j)` with `i < j`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        self.edges().into_iter().filter(|&(i, j)| i < j).collect()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    fn with_weights(&self, weights: Matrix, symmetric: bool) -> WeightedGraph {
        WeightedGraph {
            n: self.n,
            edges: self.edges.clone(),
            weights,
            symmetric,
        }
    }
}

pub fn pairwise_sq_distances(points: &Matrix) -> Matrix {
    let n = points.ncols();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = points
                .column(i)
                .iter()
                .zip(points.column(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// k-nearest-neighbour graph under Euclidean distance, symmetrized by edge
/// union. Distance ties go to the smaller vertex index.
pub fn build_knn_graph(points: &Matrix, k: usize) -> Result<WeightedGraph> {
    let n = points.ncols();
    if k == 0 || k >= n {
        return Err(Error::param(format!("kNN needs 0 < k < n, got k = {k} with n = {n}")));
    }
    let d = pairwise_sq_distances(points);
    let mut edges = Vec::with_capacity(n * k);
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| d[(i, a)].total_cmp(&d[(i, b)]).then(a.cmp(&b)));
        edges.extend(others[..k].iter().map(|&j| (i, j)));
    }
    WeightedGraph::from_edges(n, edges, true)
}

/// Supervised label graph: an edge joins every pair sharing a label.
pub fn build_label_graph(labels: &[usize]) -> WeightedGraph {
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                edges.push((i, j));
            }
        }
    }
    WeightedGraph::from_edges(n, edges, true).expect("indices are in range")
}

fn check_points(graph: &WeightedGraph, points: &Matrix) -> Result<()> {
    if points.ncols() != graph.n() {
        return Err(Error::shape(format!(
            "graph has {} vertices but {} points were given",
            graph.n(),
            points.ncols()
        )));
    }
    Ok(())
}

/// Mean squared edge length, the default Gaussian width.
pub fn default_gaussian_t(graph: &WeightedGraph, points: &Matrix) -> Result<f64> {
    check_points(graph, points)?;
    let d = pairwise_sq_distances(points);
    let edges = graph.edges();
    if edges.is_empty() {
        return Err(Error::param("cannot derive a Gaussian width from a graph without edges"));
    }
    let mean = edges.iter().map(|&(i, j)| d[(i, j)]).sum::<f64>() / edges.len() as f64;
    if mean > 0.0 {
        Ok(mean)
    } else {
        // every edge joins coincident points; any width gives unit weights
        Ok(1.0)
    }
}

/// Gaussian weights `exp(-|x_i - x_j|^2 / t)` on edges, zero elsewhere.
pub fn gaussian_weights(graph: &WeightedGraph, points: &Matrix, t: f64) -> Result<WeightedGraph> {
    check_points(graph, points)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::param(format!("Gaussian width must be positive, got {t}")));
    }
    let d = pairwise_sq_distances(points);
    let n = graph.n();
    let w = DMatrix::from_fn(n, n, |i, j| if graph.has_edge(i, j) { (-d[(i, j)] / t).exp() } else { 0.0 });
    Ok(graph.with_weights(w, graph.is_symmetric()))
}

/// Binary weights, the `t -> 0` limit of the Gaussian scheme.
pub fn binary_weights(graph: &WeightedGraph) -> WeightedGraph {
    let n = graph.n();
    let w = DMatrix::from_fn(n, n, |i, j| if graph.has_edge(i, j) { 1.0 } else { 0.0 });
    graph.with_weights(w, graph.is_symmetric())
}

/// Locally linear reconstruction weights: row `i` minimizes
/// `|x_i - sum_j w_ij x_j|^2` over its neighbours subject to `sum_j w_ij = 1`.
pub fn lle_weights(graph: &WeightedGraph, points: &Matrix) -> Result<WeightedGraph> {
    check_points(graph, points)?;
    let n = graph.n();
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        let nbrs = graph.neighbors(i);
        if nbrs.is_empty() {
            return Err(Error::param(format!("vertex {i} has no neighbours for LLE weights")));
        }
        let row = local_reconstruction(points, i, &nbrs);
        for (&j, &v) in nbrs.iter().zip(row.iter()) {
            w[(i, j)] = v;
        }
    }
    Ok(graph.with_weights(w, false))
}

fn local_reconstruction(points: &Matrix, i: usize, nbrs: &[usize]) -> DVector<f64> {
    let k = nbrs.len();
    let xi = points.column(i);
    let diffs = DMatrix::from_fn(points.nrows(), k, |r, c| xi[r] - points[(r, nbrs[c])]);
    let mut gram = diffs.transpose() * &diffs;
    let trace = gram.trace();
    if trace <= 0.0 {
        // all neighbours coincide with x_i: every feasible row is optimal
        return DVector::from_element(k, 1.0 / k as f64);
    }
    let ones = DVector::from_element(k, 1.0);
    let min_eig = nalgebra::SymmetricEigen::new(gram.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig <= 1e-12 * trace {
        let ridge = LLE_REGULARIZATION * trace / k as f64;
        for d in 0..k {
            gram[(d, d)] += ridge;
        }
    }
    let sol = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&ones),
        None => gram.lu().solve(&ones).unwrap_or_else(|| ones.clone()),
    };
    let s = sol.sum();
    sol / s
}

/// `L = D - W` with `D` the diagonal of row sums. Requires symmetric weights.
pub fn laplacian(graph: &WeightedGraph) -> Result<LaplacianBundle> {
    let w = graph.weights();
    if !graph.is_symmetric() || w != &w.transpose() {
        return Err(Error::Contract("Laplacian requires a symmetric weight matrix".into()));
    }
    Ok(laplacian_of(w))
}

pub(crate) fn laplacian_of(w: &Matrix) -> LaplacianBundle {
    let n = w.nrows();
    let row_sums: DVector<f64> = DVector::from_fn(n, |i, _| w.row(i).sum());
    let degree = Matrix::from_diagonal(&row_sums);
    LaplacianBundle {
        laplacian: &degree - w,
        degree,
    }
}

/// Repulsion graph: affinity edges that do not join same-label items.
pub fn build_repulsion_graph(label: &WeightedGraph, affinity: &WeightedGraph) -> Result<WeightedGraph> {
    if label.n() != affinity.n() {
        return Err(Error::shape(format!(
            "label graph has {} vertices, affinity graph {}",
            label.n(),
            affinity.n()
        )));
    }
    let edges = affinity
        .edges()
        .into_iter()
        .filter(|&(i, j)| !label.has_edge(i, j));
    WeightedGraph::from_edges(label.n(), edges, true)
}

/// Gaussian-weighted Laplacian of a repulsion graph.
pub fn repulsion_laplacian(repulsion: &WeightedGraph, points: &Matrix, t: f64) -> Result<LaplacianBundle> {
    let weighted = gaussian_weights(repulsion, points, t)?;
    laplacian(&weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::min_eigenvalue;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Matrix {
        Matrix::from_row_slice(1, xs.len(), xs)
    }

    fn random_points(m: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn knn_collinear() {
        let g = build_knn_graph(&line(&[0.0, 1.0, 2.0]), 1).unwrap();
        // vertex 1 is equidistant from 0 and 2 and picks 0 by index
        assert_eq!(g.undirected_edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_complete_and_errors() {
        let p = random_points(3, 5, 1);
        let g = build_knn_graph(&p, 4).unwrap();
        assert_eq!(g.undirected_edges().len(), 10);
        assert!(build_knn_graph(&p, 5).is_err());
        assert!(build_knn_graph(&p, 0).is_err());
    }

    #[test]
    fn knn_duplicates_deterministic() {
        let p = line(&[0.0, 0.0, 0.0, 5.0]);
        let a = build_knn_graph(&p, 1).unwrap();
        let b = build_knn_graph(&p, 1).unwrap();
        assert_eq!(a, b);
        // 0 -> 1, 1 -> 0, 2 -> 0, 3 -> 0 (all ties go to the lowest index)
        assert_eq!(a.undirected_edges(), vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn label_graph_examples() {
        assert_eq!(build_label_graph(&[1, 1, 2]).undirected_edges(), vec![(0, 1)]);
        assert!(build_label_graph(&[1, 2, 3]).undirected_edges().is_empty());
        assert_eq!(build_label_graph(&[1, 1, 1]).undirected_edges().len(), 3);
    }

    #[test]
    fn gaussian_examples() {
        let p = line(&[0.0, 0.0, 2.0]);
        let g = WeightedGraph::from_edges(3, [(0, 1), (1, 2)], true).unwrap();
        let w = gaussian_weights(&g, &p, 4.0).unwrap();
        assert_eq!(w.weights()[(0, 1)], 1.0);
        assert_relative_eq!(w.weights()[(1, 2)], (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(w.weights()[(0, 2)], 0.0);
        assert!(gaussian_weights(&g, &p, 0.0).is_err());
        assert!(gaussian_weights(&g, &p, -1.0).is_err());
        assert_eq!(binary_weights(&g).weights()[(1, 2)], 1.0);
    }

    #[test]
    fn lle_examples() {
        let p = line(&[1.0, 1.0]);
        let g = WeightedGraph::from_edges(2, [(0, 1)], true).unwrap();
        let w = lle_weights(&g, &p).unwrap();
        assert_eq!(w.weights()[(0, 1)], 1.0);

        // hand-solved: x = 1 between neighbours at 0 and 2; weights (a, 1 - a)
        // leave residual 1 - 2(1 - a) = 2a - 1, minimized at a = 1/2. The local
        // Gram matrix [[1, -1], [-1, 1]] is singular, so this also exercises
        // the regularized path.
        let p = line(&[1.0, 0.0, 2.0]);
        let g = WeightedGraph::from_edges(3, [(0, 1), (0, 2), (1, 2)], true).unwrap();
        let w = lle_weights(&g, &p).unwrap();
        assert_relative_eq!(w.weights()[(0, 1)], 0.5, epsilon = 1e-9);
        assert_relative_eq!(w.weights()[(0, 2)], 0.5, epsilon = 1e-9);
        assert!(!w.is_symmetric());

        let lonely = WeightedGraph::from_edges(2, [], true).unwrap();
        assert!(lle_weights(&lonely, &p.columns(0, 2).into_owned()).is_err());
    }

    #[test]
    fn lle_local_optimality() {
        let p = random_points(4, 12, 3);
        let g = build_knn_graph(&p, 5).unwrap();
        let w = lle_weights(&g, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in 0..12 {
            let nbrs = g.neighbors(i);
            let row_sum: f64 = nbrs.iter().map(|&j| w.weights()[(i, j)]).sum();
            assert_relative_eq!(row_sum, 1.0, epsilon = 1e-10);
            let residual = |coeffs: &[f64]| {
                let mut r = p.column(i).into_owned();
                for (&j, &c) in nbrs.iter().zip(coeffs) {
                    r -= p.column(j) * c;
                }
                r.norm_squared()
            };
            let ours: Vec<f64> = nbrs.iter().map(|&j| w.weights()[(i, j)]).collect();
            let best = residual(&ours);
            for _ in 0..1000 {
                let mut c: Vec<f64> = nbrs.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                let s: f64 = c.iter().sum::<f64>() - 1.0;
                let last = c.len() - 1;
                c[last] -= s;
                assert!(best <= residual(&c) + 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_examples() {
        let mut g = WeightedGraph::from_edges(2, [(0, 1)], true).unwrap();
        g.weights *= 2.5;
        let l = laplacian(&g).unwrap();
        assert_eq!(l.laplacian, Matrix::from_row_slice(2, 2, &[2.5, -2.5, -2.5, 2.5]));

        let p = random_points(3, 8, 5);
        let knn = build_knn_graph(&p, 3).unwrap();
        let t = default_gaussian_t(&knn, &p).unwrap();
        let l = laplacian(&gaussian_weights(&knn, &p, t).unwrap()).unwrap();
        let ones = DVector::from_element(8, 1.0);
        assert!((&l.laplacian * ones).amax() < 1e-12);
        assert!(min_eigenvalue(&l.laplacian) >= -1e-10);

        let asym = lle_weights(&knn, &p).unwrap();
        assert!(matches!(laplacian(&asym), Err(Error::Contract(_))));
    }

    #[test]
    fn repulsion_examples() {
        let labels = [0, 0, 1, 1];
        let label = build_label_graph(&labels);
        let knn = WeightedGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)], true).unwrap();
        let r = build_repulsion_graph(&label, &knn).unwrap();
        assert_eq!(r.undirected_edges(), vec![(1, 2)]);

        let subset = WeightedGraph::from_edges(4, [(0, 1)], true).unwrap();
        assert!(build_repulsion_graph(&label, &subset).unwrap().undirected_edges().is_empty());

        let empty_label = build_label_graph(&[0, 1, 2, 3]);
        assert_eq!(
            build_repulsion_graph(&empty_label, &knn).unwrap().undirected_edges(),
            knn.undirected_edges()
        );
        assert!(build_repulsion_graph(&label, &build_label_graph(&[0, 0])).is_err());
    }

    #[test]
    fn repulsion_laplacian_examples() {
        let p = line(&[0.0, 0.0, 3.0]);
        let empty = WeightedGraph::from_edges(3, [], true).unwrap();
        assert_eq!(repulsion_laplacian(&empty, &p, 1.0).unwrap().laplacian, Matrix::zeros(3, 3));

        let one = WeightedGraph::from_edges(3, [(0, 1)], true).unwrap();
        let l = repulsion_laplacian(&one, &p, 1.0).unwrap();
        let mut expected = Matrix::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        expected[(0, 1)] = -1.0;
        expected[(1, 0)] = -1.0;
        assert_eq!(l.laplacian, expected);
    }

    proptest! {
        #[test]
        fn repulsion_disjoint_from_label_edges(seed in 0u64..500, k in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 10;
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let p = random_points(3, n, seed);
            let label = build_label_graph(&labels);
            let knn = build_knn_graph(&p, k).unwrap();
            let r = build_repulsion_graph(&label, &knn).unwrap();
            for (i, j) in r.edges() {
                prop_assert!(!label.has_edge(i, j));
                prop_assert!(knn.has_edge(i, j));
            }
            let t = default_gaussian_t(&knn, &p).unwrap();
            let l = repulsion_laplacian(&r, &p, t).unwrap().laplacian;
            prop_assert_eq!(&l, &l.transpose());
            for row in l.row_iter() {
                prop_assert!(row.sum().abs() < 1e-12);
            }
        }
    }
}
