use reptensor::Matrix;
use reptensor_bench::config::{ExperimentConfig, Mode};
use reptensor_bench::dataset::ImageDataset;
use reptensor_bench::experiment::run_experiment;

/// Two classes separated by a constant intensity offset.
fn separable() -> ImageDataset {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2 {
        for s in 0..4 {
            let img = Matrix::from_fn(4, 4, |r, k| {
                let base = if c == 0 { 0.1 } else { 0.9 };
                base + 0.01 * ((r * 4 + k + 3 * s) % 5) as f64
            });
            images.push(img);
            labels.push(c);
        }
    }
    ImageDataset::new("separable", images, labels, vec!["a".into(), "b".into()]).unwrap()
}

fn cfg(methods: &[&str], dims: &[usize], realizations: usize) -> ExperimentConfig {
    ExperimentConfig {
        methods: methods.iter().map(|s| s.to_string()).collect(),
        dims: dims.to_vec(),
        realizations,
        train_per_class: 2,
        ..Default::default()
    }
}

#[test]
fn separable_2dpca_has_zero_error() {
    let table = run_experiment(&cfg(&["2D-PCA"], &[2], 1), &separable()).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].mean_error, 0.0);
    assert_eq!(table.rows[0].completed, 1);
}

#[test]
fn zero_beta_repulsion_matches_base_cells() {
    let ds = reptensor_bench::synthetic_dataset(&Default::default()).unwrap();
    for (rep, base) in [("2D-OLPP-R", "2D-OLPP"), ("2D-ONPP-R", "2D-ONPP"), ("2D-NPP-R", "2D-NPP")] {
        let mut c = cfg(&[rep, base], &[2, 4], 4);
        c.train_per_class = 5;
        c.mode = Mode::Bi;
        c.beta = Some(0.0);
        let table = run_experiment(&c, &ds).unwrap();
        let errs = |m: &str| -> Vec<Option<f64>> {
            table
                .cells
                .iter()
                .filter(|x| x.method == m)
                .map(|x| x.outcome.as_ref().ok().map(|o| o.0))
                .collect()
        };
        assert_eq!(errs(rep), errs(base), "{rep}");
    }
}

#[test]
fn method_order_and_jobs_do_not_change_results() {
    let ds = reptensor_bench::synthetic_dataset(&Default::default()).unwrap();
    let mut a = cfg(&["2D-LPP", "GLRAM", "OLPP-R"], &[2, 3], 6);
    a.train_per_class = 5;
    let mut b = cfg(&["OLPP-R", "GLRAM", "2D-LPP"], &[3, 2], 6);
    b.train_per_class = 5;
    a.jobs = Some(1);
    b.jobs = Some(4);
    let (ta, tb) = (run_experiment(&a, &ds).unwrap(), run_experiment(&b, &ds).unwrap());
    let strip = |t: &reptensor_bench::experiment::ResultTable| -> Vec<(String, usize, f64, f64)> {
        t.rows.iter().map(|r| (r.method.clone(), r.dimension, r.mean_error, r.std_error)).collect()
    };
    assert_eq!(strip(&ta), strip(&tb));
}

#[test]
fn failed_cells_are_recorded_and_the_run_continues() {
    // Every image of a class is identical, so 2D-LDA's within-class side
    // matrices vanish; its cells fail while 2D-PCA still runs.
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for c in 0..2 {
        for _ in 0..3 {
            images.push(Matrix::from_fn(3, 3, |r, k| (c * 9 + r * 3 + k) as f64 / 20.0));
            labels.push(c);
        }
    }
    let ds = ImageDataset::new("flat", images, labels, vec!["a".into(), "b".into()]).unwrap();
    let table = run_experiment(&cfg(&["2D-LDA", "2D-PCA"], &[1], 2), &ds).unwrap();
    let lda = table.rows.iter().find(|r| r.method == "2D-LDA").unwrap();
    let pca = table.rows.iter().find(|r| r.method == "2D-PCA").unwrap();
    assert_eq!(lda.failures, 2);
    assert!(lda.mean_error.is_nan());
    assert_eq!(pca.completed, 2);
    assert_eq!(table.metadata["failures"].as_array().unwrap().len(), 2);
}

#[test]
fn aggregates_agree_with_the_per_realization_log() {
    let ds = reptensor_bench::synthetic_dataset(&Default::default()).unwrap();
    let mut c = cfg(&["2D-OLPP-R", "LDA"], &[2], 5);
    c.train_per_class = 5;
    let table = run_experiment(&c, &ds).unwrap();
    for row in &table.rows {
        let errs: Vec<f64> = table
            .cells
            .iter()
            .filter(|x| x.method == row.method && x.dimension == row.dimension)
            .map(|x| x.outcome.as_ref().unwrap().0)
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (errs.len() - 1) as f64;
        assert!((row.mean_error - mean).abs() < 1e-15);
        assert!((row.std_error - var.sqrt()).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&row.mean_error));
        let lo = errs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = errs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= row.mean_error && row.mean_error <= hi);
        assert!(row.std_error <= (hi - lo) + 1e-15);
    }
}

#[test]
fn dimension_limits_are_checked_before_running() {
    let err = run_experiment(&cfg(&["GLRAM"], &[5], 1), &separable()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let mut c = cfg(&["GLRAM"], &[3], 1);
    c.preprocess = Some([2, 2]);
    assert!(run_experiment(&c, &separable()).is_err());
}
