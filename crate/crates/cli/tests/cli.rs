use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blocktau::block::{averaged_kendall_matrix, EstimatorScheme, Partition};
use blocktau::concordance::{concordance_quantities, kendall_matrix};
use blocktau::conditional::{conditional_kendall_matrix, KernelSpec};
use blocktau::elliptical::{backtest_var, block_pd_check, delta_elliptic_var, EllipticalModel, GeneratorSpec};
use blocktau::io::{format_value, parse_grid, read_matrix_csv, read_observations, LoadOptions};
use blocktau::simulation::{sample_block_elliptical, EllipticalFamily};
use blocktau::variance::{finite_sample_variance, VarianceInput};
use blocktau::{AveragingCount, ConcordanceQuantities, ObservationMatrix, SchemeKind};
use nalgebra::{DMatrix, DVector};
use serde_json::Value;
use tempfile::TempDir;

fn blocktau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blocktau"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().expect("stderr line");
    serde_json::from_str(last).expect("json error on stderr")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a sample with exact float text and returns it as the library
/// reads it back.
fn sample_file(dir: &TempDir, name: &str, data: &ObservationMatrix) -> (PathBuf, ObservationMatrix) {
    let mut text = (1..=data.p()).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for i in 0..data.n() {
        let row: Vec<String> = data.row(i).iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = write(dir, name, &text);
    let loaded = read_observations(text.as_bytes(), LoadOptions::default()).unwrap().data;
    (path, loaded)
}

fn json_matrix(v: &Value) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).unwrap();
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
}

const FOUR_ROWS: &str = "a,b\n1,1\n2,3\n3,2\n4,4\n";

#[test]
fn ktmatrix_example_file() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", FOUR_ROWS);
    let out = blocktau(&["ktmatrix", "--scheme", "naive", s(&data)]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        ",a,b\na,1,0.666666666666667\nb,0.666666666666667,1\n"
    );
    let v = stdout_json(&blocktau(&["ktmatrix", "--format", "json", s(&data)]));
    assert_eq!(v["matrix"][0][1].as_f64().unwrap(), 4.0 / 6.0);
    assert_eq!(v["names"][1], "b");
}

#[test]
fn matrix_round_trip() {
    let dir = TempDir::new().unwrap();
    let sample = sample_block_elliptical(
        &Partition::contiguous(&[3, 3]).unwrap(),
        0.3,
        0.1,
        EllipticalFamily::Gaussian,
        40,
        7,
    )
    .unwrap();
    let (data, loaded) = sample_file(&dir, "x.csv", &sample);
    let groups = write(&dir, "g.csv", "column,group\nx1,1\nx2,1\nx3,1\nx4,2\nx5,2\nx6,2\n");
    let out = dir.path().join("m.csv");
    let status = blocktau(&["ktmatrix", "--scheme", "diag", "--groups", s(&groups), "--out", s(&out), s(&data)]);
    assert!(status.status.success());
    let bytes = std::fs::read(&out).unwrap();
    let read = read_matrix_csv(bytes.as_slice()).unwrap();
    let mut again = Vec::new();
    blocktau::io::write_matrix_csv(&read.values, &read.names, &mut again).unwrap();
    assert_eq!(again, bytes);

    let partition = Partition::contiguous(&[3, 3]).unwrap();
    let lib = averaged_kendall_matrix(&loaded, &partition, &EstimatorScheme::diagonal(AveragingCount::MinGroupSize)).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            assert_eq!(format_value(read.values[(i, j)]), format_value(lib.get(i, j)));
        }
    }
}

#[test]
fn cli_matches_library() {
    let dir = TempDir::new().unwrap();
    let partition = Partition::contiguous(&[3, 4]).unwrap();
    let sample = sample_block_elliptical(&partition, 0.3, 0.1, EllipticalFamily::Gaussian, 60, 3).unwrap();
    let (data, loaded) = sample_file(&dir, "x.csv", &sample);
    let groups = write(&dir, "g.csv", "1,1\n2,1\n3,1\n4,2\n5,2\n6,2\n7,2\n");

    for (flag, scheme) in [
        ("naive", EstimatorScheme::naive()),
        ("block", EstimatorScheme::block()),
        ("row", EstimatorScheme::row(AveragingCount::Fixed(2))),
        ("random", EstimatorScheme::random(AveragingCount::Fixed(5), 11)),
    ] {
        let v = stdout_json(&blocktau(&[
            "ktmatrix", "--format", "json", "--scheme", flag, "--groups", s(&groups), "--N", if flag == "row" { "2" } else { "5" },
            "--seed", "11", s(&data),
        ]));
        let lib = averaged_kendall_matrix(&loaded, &partition, &scheme).unwrap();
        assert_eq!(&json_matrix(&v["matrix"]), lib.values(), "{flag}");
    }
    let v = stdout_json(&blocktau(&["ktmatrix", "--format", "json", s(&data)]));
    assert_eq!(&json_matrix(&v["matrix"]), kendall_matrix(&loaded).unwrap().values());

    let v = stdout_json(&blocktau(&["quantities", "--pair", "1,4", "--pair2", "x2,x5", s(&data)]));
    let lib = concordance_quantities(&loaded, (0, 3), Some((1, 4))).unwrap();
    let cli: ConcordanceQuantities = serde_json::from_value(v).unwrap();
    assert_eq!(cli, lib);

    let v = stdout_json(&blocktau(&["pdcheck", "--b1", "3", "--b2", "5", "--rho1", "0.2", "--rho2", "0.4", "--rho3", "-0.1"]));
    let lib = block_pd_check(3, 5, 0.2, 0.4, -0.1).unwrap();
    assert_eq!(v["constraint_value"].as_f64().unwrap(), lib.constraint_value);
    assert_eq!(v["positive_definite"].as_bool().unwrap(), lib.positive_definite);

    let pnl = write(&dir, "pnl.csv", "pnl\n-2.0\n0.5\n-1.7\n1.0\n-0.2\n");
    let v = stdout_json(&blocktau(&["backtest", "--var", "1.6", "--alpha", "0.05", s(&pnl)]));
    let lib = backtest_var(&[-2.0, 0.5, -1.7, 1.0, -0.2], 1.6, 0.05).unwrap();
    assert_eq!(v["exceedances"].as_u64().unwrap() as usize, lib.exceedances);
    assert_eq!(v["observed_rate"].as_f64().unwrap(), lib.observed_rate);

    let grid = "0.2:0.8:0.3";
    let zdata = {
        let mut cols: Vec<Vec<f64>> = loaded.columns().to_vec();
        let z: Vec<f64> = (0..loaded.n()).map(|i| (i as f64 + 0.5) / loaded.n() as f64).collect();
        cols.insert(0, z);
        ObservationMatrix::from_columns(cols).unwrap()
    };
    let (zpath, zloaded) = sample_file(&dir, "z.csv", &zdata);
    let v = stdout_json(&blocktau(&[
        "cktmatrix", "--z-cols", "x1", "--grid", grid, "--bandwidth", "0.4", "--scheme", "block", "--groups",
        s(&groups), s(&zpath),
    ]));
    let x = zloaded.select_columns(&(1..8).collect::<Vec<_>>()).unwrap();
    let z = zloaded.select_columns(&[0]).unwrap();
    let lib = conditional_kendall_matrix(
        &x,
        &partition,
        &EstimatorScheme::block(),
        &z,
        &parse_grid(grid).unwrap(),
        &KernelSpec::epanechnikov(0.4).unwrap(),
    )
    .unwrap();
    for (point, m) in v["points"].as_array().unwrap().iter().zip(lib) {
        assert_eq!(&json_matrix(&point["matrix"]), m.unwrap().values());
    }
}

#[test]
fn variance_from_quantities_file() {
    let dir = TempDir::new().unwrap();
    let req = write(
        &dir,
        "q.json",
        r#"{"quantities": {"P": 0.5, "Q": 0.2777777777777778}, "n": 10, "g1": 1, "g2": 1, "scheme": "naive"}"#,
    );
    let v = stdout_json(&blocktau(&["variance", "--quantities", s(&req)]));
    let lib = finite_sample_variance(&VarianceInput {
        quantities: ConcordanceQuantities::new(0.5, 0.2777777777777778),
        n: 10,
        g1: 1,
        g2: 1,
        n_avg: 1,
        kind: SchemeKind::Naive,
    })
    .unwrap();
    assert_eq!(v["variance"]["value"].as_f64().unwrap(), lib.value);
    assert!((lib.value - 2.0 * 25.0 / (9.0 * 90.0)).abs() < 1e-12);
}

#[test]
fn variance_from_data() {
    let dir = TempDir::new().unwrap();
    let partition = Partition::contiguous(&[2, 2]).unwrap();
    let sample = sample_block_elliptical(&partition, 0.3, 0.1, EllipticalFamily::Gaussian, 30, 1).unwrap();
    let (data, _) = sample_file(&dir, "x.csv", &sample);
    let groups = write(&dir, "g.csv", "1,1\n2,1\n3,2\n4,2\n");
    let v = stdout_json(&blocktau(&[
        "variance", "--groups", s(&groups), "--scheme", "diag", "--asymptotic", "large", s(&data),
    ]));
    assert_eq!(v["N"], 2);
    assert!(v["variance"]["value"].as_f64().unwrap() >= 0.0);
    assert!(v["asymptotic"]["value"].is_number());
}

#[test]
fn var_identity_gaussian() {
    let dir = TempDir::new().unwrap();
    let sigma = write(&dir, "s.csv", ",a,b\na,1,0\nb,0,1\n");
    let v = stdout_json(&blocktau(&["var", "--sigma", s(&sigma), "--weights", "1,0", "--alpha", "0.05", "--generator", "gaussian"]));
    let var = v["var"].as_f64().unwrap();
    assert!((var - 1.6449).abs() < 1e-3);
    let model = EllipticalModel::new(DVector::zeros(2), DMatrix::identity(2, 2), GeneratorSpec::gaussian(2).unwrap()).unwrap();
    assert_eq!(var, delta_elliptic_var(&model, &DVector::from_vec(vec![1.0, 0.0]), 0.05).unwrap());
}

#[test]
fn var_from_returns() {
    let dir = TempDir::new().unwrap();
    let partition = Partition::contiguous(&[2, 2]).unwrap();
    let sample = sample_block_elliptical(&partition, 0.3, 0.1, EllipticalFamily::Gaussian, 200, 5).unwrap();
    let (data, _) = sample_file(&dir, "r.csv", &sample);
    let v = stdout_json(&blocktau(&[
        "var", "--weights", "0.25,0.25,0.25,0.25", "--generator", "t:5", "--silverman-exponent", "-1/5", s(&data),
    ]));
    assert!(v["var"].as_f64().unwrap() > 0.0);
    assert!(v["silverman"]["h"].as_f64().unwrap() > 0.0);
}

#[test]
fn errors_are_json() {
    let dir = TempDir::new().unwrap();
    let e = stderr_json(&blocktau(&["frobnicate"]));
    assert_eq!(e["error"], "UnknownCommand");
    let e = stderr_json(&blocktau(&["ktmatrix", "/nonexistent/file.csv"]));
    assert_eq!(e["error"], "IoError");
    let bad = write(&dir, "bad.csv", "a,b\n1,2\nNaN,3\n4,5\n");
    let e = stderr_json(&blocktau(&["ktmatrix", "--strict", s(&bad)]));
    assert_eq!(e["error"], "ParseError");
    assert!(e["message"].as_str().unwrap().contains("line 3"));
    let e = stderr_json(&blocktau(&["pdcheck", "--b1", "1", "--b2", "2", "--rho1", "0", "--rho2", "0", "--rho3", "0"]));
    assert_eq!(e["error"], "InvalidBlockSize");
    let e = stderr_json(&blocktau(&["ktmatrix", "--scheme", "row", s(&bad)]));
    assert_eq!(e["error"], "ConfigError");
}

#[test]
fn lenient_load_drops_rows() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "nan.csv", "a,b\n1,1\nNaN,3\n2,3\n3,2\n4,4\n");
    let out = blocktau(&["ktmatrix", s(&data)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dropped 1 row"));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        ",a,b\na,1,0.666666666666667\nb,0.666666666666667,1\n"
    );
}

#[test]
fn simulate_writes_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        r#"{"model": {"type": "gaussian_block"}, "block_sizes": [3], "sample_sizes": [8],
            "tau_diag": 0.3, "tau_off": 0.1, "replications": 20, "seed": 4,
            "schemes": ["naive", "block", "diag"]}"#,
    );
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let out = blocktau(&["--threads", "1", "simulate", s(&cfg), "--csv", s(&csv), "--json", s(&json)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("table,scheme,n,block_size,bandwidth,z,statistic,value"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(summary["results"]["rows"].as_array().unwrap().len(), 3);

    let again = dir.path().join("again.csv");
    assert!(blocktau(&["simulate", s(&cfg), "--csv", s(&again)]).status.success());
    assert_eq!(std::fs::read(&again).unwrap(), text.as_bytes());
}
