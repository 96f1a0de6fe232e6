use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reptensor::embed_1d::{scatter_matrices, VectorDataset};
use reptensor::embed_2d::{
    fit, fit_alg1, fit_alg2, method_matrices, objective, objective_tensor_trace, side_matrix_left, FitConfig,
    FitOptions, GraphParams, Layout, MatrixDataset, Method2d, Side,
};
use reptensor::graph::{
    build_knn_graph, build_label_graph, default_gaussian_t, gaussian_weights, laplacian, lle_weights,
};
use reptensor::recognizer::{classify_all, GallerySet};
use reptensor::spectral::{gen_sym_eig, sym_eig, EigenSelection};
use reptensor::tensor::{Mode, Ordering};
use reptensor::{Matrix, Tensor3};

fn uniform(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

fn tensor(r: &mut ChaCha8Rng, i: usize, j: usize, k: usize) -> Tensor3 {
    Tensor3::from_fn(i, j, k, |_, _, _| r.random_range(-1.0..1.0))
}

fn labels(n: usize, classes: usize) -> Vec<usize> {
    (0..n).map(|i| i % classes).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

const MODES: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

fn dims_of(t: &Tensor3, mode: Mode) -> usize {
    t.extent(mode)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_trace_equals_norm(i in 1usize..6, j in 1usize..6, k in 1usize..6, seed: u64) {
        let a = tensor(&mut ChaCha8Rng::seed_from_u64(seed), i, j, k);
        let tr = a.contracted_product_33(&a).unwrap().trace().unwrap();
        prop_assert!(rel(tr, a.norm_squared()) <= 1e-12);
    }

    #[test]
    fn distinct_mode_products_commute(i in 1usize..6, j in 1usize..6, k in 1usize..6, p in 1usize..5, q in 1usize..5, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = tensor(&mut r, i, j, k);
        for (m1, m2) in [(Mode::One, Mode::Two), (Mode::One, Mode::Three), (Mode::Two, Mode::Three)] {
            let x = uniform(&mut r, p, dims_of(&a, m1));
            let y = uniform(&mut r, q, dims_of(&a, m2));
            let lhs = a.mode_product(&x, m1).unwrap().mode_product(&y, m2).unwrap();
            let rhs = a.mode_product(&y, m2).unwrap().mode_product(&x, m1).unwrap();
            let scale = lhs.frobenius_norm().max(1e-300);
            let diff = lhs.data().iter().zip(rhs.data()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12 * scale);
        }
    }

    #[test]
    fn same_mode_products_compose(i in 1usize..6, j in 1usize..6, k in 1usize..6, p in 1usize..5, q in 1usize..5, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = tensor(&mut r, i, j, k);
        for mode in MODES {
            let m = uniform(&mut r, p, dims_of(&a, mode));
            let n = uniform(&mut r, q, p);
            let lhs = a.mode_product(&m, mode).unwrap().mode_product(&n, mode).unwrap();
            let rhs = a.mode_product(&(&n * &m), mode).unwrap();
            let scale = lhs.frobenius_norm().max(1e-300);
            let diff = lhs.data().iter().zip(rhs.data()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-12 * scale);
        }
    }

    #[test]
    fn matricize_round_trips_exactly(i in 1usize..6, j in 1usize..6, k in 1usize..6, seed: u64) {
        let a = tensor(&mut ChaCha8Rng::seed_from_u64(seed), i, j, k);
        for mode in MODES {
            for ordering in [Ordering::Forward, Ordering::Backward] {
                let m = a.matricize(mode, ordering);
                prop_assert_eq!(&Tensor3::fold(&m, a.dims(), mode, ordering).unwrap(), &a);
            }
        }
    }

    #[test]
    fn inner_product_is_unfolded_trace(i in 1usize..6, j in 1usize..6, k in 1usize..6, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (tensor(&mut r, i, j, k), tensor(&mut r, i, j, k));
        let via = (a.matricize(Mode::Three, Ordering::Forward) * b.matricize(Mode::Three, Ordering::Forward).transpose()).trace();
        let ip = a.inner_product(&b).unwrap();
        prop_assert!((ip - via).abs() <= 1e-12 * a.frobenius_norm() * b.frobenius_norm());
    }

    #[test]
    fn laplacians_are_symmetric_psd_with_zero_rows(n in 4usize..20, classes in 1usize..4, k in 1usize..4, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let pts = uniform(&mut r, 3, n);
        let knn = build_knn_graph(&pts, k).unwrap();
        let label = build_label_graph(&labels(n, classes));
        for g in [knn, label] {
            if g.edge_count() == 0 {
                continue;
            }
            let t = default_gaussian_t(&g, &pts).unwrap();
            let l = laplacian(&gaussian_weights(&g, &pts, t).unwrap()).unwrap().laplacian;
            prop_assert_eq!(&l, &l.transpose());
            for row in l.row_iter() {
                prop_assert!(row.sum().abs() <= 1e-12);
            }
            let min = sym_eig(&l, EigenSelection::bottom(1)).unwrap().values[0];
            prop_assert!(min >= -1e-10);
        }
    }

    #[test]
    fn lle_rows_are_affine(n in 4usize..16, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let pts = uniform(&mut r, 4, n);
        let w = lle_weights(&build_label_graph(&labels(n, 2)), &pts).unwrap();
        for row in w.weights().row_iter() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn knn_is_deterministic_with_ties(n in 3usize..12, k in 1usize..3, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        // Integer grid points produce many equal distances.
        let pts = DMatrix::from_fn(2, n, |_, _| r.random_range(0..3) as f64);
        let k = k.min(n - 1);
        let a = build_knn_graph(&pts, k).unwrap();
        let b = build_knn_graph(&pts, k).unwrap();
        prop_assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn eigensolvers_are_reproducible(n in 1usize..12, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = uniform(&mut r, n, n);
        let m = (&a + a.transpose()) * 0.5;
        let b = uniform(&mut r, n, n);
        let spd = &b * b.transpose() + Matrix::identity(n, n);
        let sel = EigenSelection::bottom(n);
        prop_assert_eq!(sym_eig(&m, sel).unwrap(), sym_eig(&m, sel).unwrap());
        prop_assert_eq!(gen_sym_eig(&m, &spd, sel).unwrap(), gen_sym_eig(&m, &spd, sel).unwrap());
    }

    #[test]
    fn scatter_decomposition(m in 1usize..6, n in 2usize..20, classes in 1usize..4, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = uniform(&mut r, m, n);
        let ds = VectorDataset::new(x.clone(), labels(n, classes.min(n))).unwrap();
        let (sw, sb) = scatter_matrices(&ds);
        let mean = x.column_mean();
        let mut total = Matrix::zeros(m, m);
        for c in x.column_iter() {
            let d = c - &mean;
            total += &d * d.transpose();
        }
        prop_assert!((sw + sb - &total).amax() <= 1e-10 * total.amax().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn orthonormal_fits_are_monotone_and_consistent(
        m1 in 2usize..7, m2 in 2usize..7, n in 8usize..16, method in 0usize..6, seed: u64
    ) {
        let methods = [Method2d::Olpp, Method2d::Onpp, Method2d::OlppR, Method2d::OnppR, Method2d::Glram, Method2d::Pca];
        let method = methods[method];
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let data = MatrixDataset::new(tensor(&mut r, m1, m2, n), labels(n, 2)).unwrap();
        let spec = method_matrices(method, &data, &GraphParams::default()).unwrap();
        let (d1, d2) = (r.random_range(1..=m1), r.random_range(1..=m2));
        let opts = FitOptions { max_iter: 4, tol: 1e-6 };
        let (pair, trace) = fit_alg1(&data.tensor, &spec, d1, d2, opts).unwrap();
        let maximize = matches!(method, Method2d::Glram | Method2d::Pca);
        for w in trace.objectives.windows(2) {
            let (a, b) = if maximize { (-w[0], -w[1]) } else { (w[0], w[1]) };
            prop_assert!(b - a <= 1e-10 * a.abs().max(b.abs()).max(1e-300));
        }
        prop_assert!(trace.iterations <= 4);
        if trace.converged {
            let o = &trace.objectives;
            let prev = if o.len() >= 4 { o[o.len() - 3] } else { o[0] };
            prop_assert!(rel(prev, o[o.len() - 1]) < 1e-6);
        }
        let id = |k| Matrix::identity(k, k);
        prop_assert!((pair.u.transpose() * &pair.u - id(d1)).amax() <= 1e-10);
        prop_assert!((pair.v.transpose() * &pair.v - id(d2)).amax() <= 1e-10);
        let m = spec.a.clone().or(spec.b.clone()).unwrap();
        let direct = objective(&data.tensor, &pair.u, &pair.v, &m).unwrap();
        let via_trace = objective_tensor_trace(&data.tensor, &pair.u, &pair.v, &m).unwrap();
        prop_assert!((direct - via_trace).abs() <= 1e-10 * direct.abs().max(m.norm() * data.tensor.norm_squared() * 1e-6));
    }

    #[test]
    fn lpp_and_npp_projectors_are_b_orthonormal(m in 2usize..6, n in 8usize..16, npp: bool, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let data = MatrixDataset::new(tensor(&mut r, m, m, n), labels(n, 2)).unwrap();
        let method = if npp { Method2d::Npp } else { Method2d::Lpp };
        let spec = method_matrices(method, &data, &GraphParams::default()).unwrap();
        let d = r.random_range(1..=m);
        let cfg = FitConfig {
            layout: Layout::Unilateral(Side::Left, d),
            params: GraphParams::default(),
            options: FitOptions::default(),
            preprocess: None,
        };
        let res = fit(method, &data, &cfg).unwrap();
        let b2 = side_matrix_left(&data.tensor, &Matrix::identity(m, m), spec.b.as_ref().unwrap()).unwrap();
        prop_assert!((res.pair.u.transpose() * b2 * &res.pair.u - Matrix::identity(d, d)).amax() <= 1e-8);
        let (pair, trace) = fit_alg2(&data.tensor, &spec, d, d, FitOptions::default()).unwrap();
        prop_assert!(trace.iterations <= FitOptions::default().max_iter);
        prop_assert!(pair.u.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn classification_is_rotation_invariant(m in 2usize..6, n in 4usize..12, seed: u64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = tensor(&mut r, m, m, n + 5);
        let lab = labels(n + 5, 3);
        let train: Vec<usize> = (0..n).collect();
        let u = uniform(&mut r, m, m).qr().q();
        let v = uniform(&mut r, m, m).qr().q();
        let q = uniform(&mut r, m, m).qr().q();
        let predict = |u: &Matrix| {
            let items = train.iter().map(|&k| u.transpose() * x.frontal(k) * &v).collect();
            let gallery = GallerySet::new(items, train.iter().map(|&k| lab[k]).collect()).unwrap();
            let queries: Vec<Matrix> = (n..n + 5).map(|k| u.transpose() * x.frontal(k) * &v).collect();
            let self_check: Vec<Matrix> = gallery.items().to_vec();
            (classify_all(&queries, &gallery).unwrap(), classify_all(&self_check, &gallery).unwrap())
        };
        let (base, own) = predict(&u);
        let (rotated, _) = predict(&(&u * q));
        prop_assert_eq!(base, rotated);
        prop_assert_eq!(own, train.iter().map(|&k| lab[k]).collect::<Vec<_>>());
    }
}
