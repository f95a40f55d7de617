use blocktau::block::{structure_residual, EstimatorScheme, Partition, SchemeKind};
use blocktau::concordance::{kendall_matrix, QuantityOptions};
use blocktau::simulation::{mise_experiment, mse_experiment, sample_block_elliptical, EllipticalFamily, ExperimentConfig};
use blocktau::variance::{ordering_report, scheme_quantities, QuantitySet};

const Z95: f64 = 1.959963984540054;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn conditional(tau: &str, extra: &str) -> ExperimentConfig {
    config(&format!(
        r#"{{"model": {{"type": "conditional_gaussian", "tau_off": {tau}}}, "tau_diag": 0.3, {extra}}}"#
    ))
}

#[test]
fn averaging_variances_are_ordered_under_the_gaussian_block_model() {
    let partition = Partition::contiguous(&[10, 10]).unwrap();
    let data = sample_block_elliptical(&partition, 0.3, 0.1, EllipticalFamily::Gaussian, 300_000, 21).unwrap();
    let options = QuantityOptions { pair_rows: Some(2000) };
    let set = |kind| scheme_quantities(&data, &partition, 0, 1, &EstimatorScheme::new(kind), options).unwrap();
    let quantities = QuantitySet {
        block: set(SchemeKind::Block),
        row: set(SchemeKind::Row),
        diagonal: set(SchemeKind::Diagonal),
    };
    let report = ordering_report(&quantities, 4, 10, 10, 10).unwrap();
    assert!(report.ordering_holds, "{:?}", report.ranked);
    assert!(report.usq_holds, "{:?}", report.usq_violations);
}

#[test]
fn block_estimators_are_unbiased() {
    let cfg = config(
        r#"{"model": {"type": "student_t_block", "nu": 4}, "block_sizes": [5], "sample_sizes": [12],
            "tau_diag": 0.4, "tau_off": -0.2, "replications": 6000, "seed": 22,
            "schemes": ["naive", "block", "row", "diagonal", "random"]}"#,
    );
    let table = mse_experiment(&cfg).unwrap();
    for row in &table.rows {
        let se = (row.summary.variance / row.summary.replications as f64).sqrt();
        assert!(row.summary.bias.abs() < 4.0 * se, "{:?} bias {} se {se}", row.scheme, row.summary.bias);
    }
}

#[test]
fn two_replications_give_finite_intervals() {
    let cfg = config(
        r#"{"model": {"type": "gaussian_block"}, "block_sizes": [3], "sample_sizes": [6],
            "tau_diag": 0.3, "tau_off": 0.1, "replications": 2, "schemes": ["naive", "block"]}"#,
    );
    for row in mse_experiment(&cfg).unwrap().rows {
        let width = row.summary.mse_ci_high - row.summary.mse_ci_low;
        assert!(width > 0.0 && width.is_finite());
    }
}

#[test]
fn structure_residuals_shrink_with_the_square_root_of_n() {
    let partition = Partition::contiguous(&[4, 4, 4]).unwrap();
    let spread = |n: usize| -> f64 {
        (0..8u64)
            .map(|seed| {
                let data = sample_block_elliptical(&partition, 0.4, 0.15, EllipticalFamily::Gaussian, n, seed).unwrap();
                let naive = kendall_matrix(&data).unwrap();
                let r = structure_residual(&naive, &partition).unwrap();
                r.iter().map(|b| b.residual).sum::<f64>() / r.len() as f64
            })
            .sum::<f64>()
            / 8.0
    };
    let ratio = spread(500) / spread(5000);
    assert!((2.2..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn conditional_schemes_share_the_bias_curve() {
    let cfg = conditional(
        r#"{"shape": "linear", "intercept": 0.0, "slope": 0.1}"#,
        r#""block_sizes": [4], "sample_sizes": [20], "bandwidths": [0.5], "replications": 30000, "seed": 23,
           "schemes": ["naive", "block", "row", "diagonal", "random"]"#,
    );
    let report = mise_experiment(&cfg).unwrap();
    let zs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for &z in &zs {
        let block = &report.point(SchemeKind::Block, 20, 4, 0.5, z).unwrap().summary;
        for kind in SchemeKind::ALL {
            let s = &report.point(kind, 20, 4, 0.5, z).unwrap().summary;
            let se = ((s.variance + block.variance) / s.replications as f64).sqrt();
            assert!((s.mean - block.mean).abs() < 4.0 * se, "{kind:?} at z={z}: {} vs {}", s.mean, block.mean);
        }
    }
    assert_eq!(report.point(SchemeKind::Block, 20, 4, 0.5, 0.0).unwrap().truth, 0.0);
}

#[test]
fn flat_conditional_tau_is_recovered_at_interior_points() {
    let cfg = conditional(
        r#"{"shape": "cosine", "amplitude": 0.1, "omega": 0}"#,
        r#""block_sizes": [3], "sample_sizes": [400], "bandwidths": [0.1], "replications": 400, "seed": 24,
           "grid": {"start": 0.25, "stop": 0.75, "step": 0.25}, "schemes": ["block"]"#,
    );
    let report = mise_experiment(&cfg).unwrap();
    for row in &report.points {
        assert_eq!(row.truth, 0.2);
        let half = Z95 * (row.summary.variance / row.summary.replications as f64).sqrt();
        // the covariate-driven location and scale add a small smoothing bias
        assert!((row.summary.mean - 0.2).abs() < half + 0.01, "z={} mean {}", row.z, row.summary.mean);
    }
}

#[test]
fn block_variance_stays_below_diagonal_variance_on_the_grid() {
    let cfg = conditional(
        r#"{"shape": "cosine", "amplitude": 0.1, "omega": 1}"#,
        r#""block_sizes": [4, 32], "sample_sizes": [20], "bandwidths": [0.5], "replications": 1000, "seed": 25,
           "schemes": ["block", "diagonal"]"#,
    );
    let report = mise_experiment(&cfg).unwrap();
    for b in [4, 32] {
        for i in 0..=10 {
            let z = i as f64 / 10.0;
            let block = &report.point(SchemeKind::Block, 20, b, 0.5, z).unwrap().summary;
            let diag = &report.point(SchemeKind::Diagonal, 20, b, 0.5, z).unwrap().summary;
            let se = |s: &blocktau::simulation::EstimateSummary| (s.variance_ci_high - s.variance_ci_low) / (2.0 * Z95);
            assert!(
                block.variance <= diag.variance + 2.0 * se(block).hypot(se(diag)),
                "b={b} z={z}: {} > {}",
                block.variance,
                diag.variance
            );
        }
    }
}

fn bandwidth_scan(omega: u32, seed: u64) -> blocktau::simulation::ConditionalReport {
    let cfg = conditional(
        &format!(r#"{{"shape": "cosine", "amplitude": 0.1, "omega": {omega}}}"#),
        &format!(
            r#""block_sizes": [8], "sample_sizes": [200], "replications": 100, "seed": {seed},
               "bandwidths": [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0],
               "schemes": ["naive", "block", "diagonal"]"#
        ),
    );
    mise_experiment(&cfg).unwrap()
}

#[test]
fn averaging_moves_the_optimal_bandwidth_down() {
    let report = bandwidth_scan(1, 26);
    let naive = report.optimal_bandwidth(SchemeKind::Naive, 200, 8).unwrap();
    for kind in [SchemeKind::Block, SchemeKind::Diagonal] {
        let h = report.optimal_bandwidth(kind, 200, 8).unwrap();
        assert!(h <= naive, "{kind:?}: {h} vs naive {naive}");
    }

    let fast = bandwidth_scan(4, 26);
    for kind in [SchemeKind::Naive, SchemeKind::Block, SchemeKind::Diagonal] {
        let (slow_h, fast_h) = (
            report.optimal_bandwidth(kind, 200, 8).unwrap(),
            fast.optimal_bandwidth(kind, 200, 8).unwrap(),
        );
        assert!(fast_h <= slow_h, "{kind:?}: omega 4 picks {fast_h}, omega 1 picks {slow_h}");
    }
}
