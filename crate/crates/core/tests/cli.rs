use std::path::{Path, PathBuf};
use std::process::Command;

use tspline::bures::{bures_wasserstein_distance, GaussianMeasure};
use tspline::harness::{run_rate_experiment, CurveKind, SyntheticGaussianCurve};
use tspline::spline1d::InterpKind;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn tspline(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tspline"))
        .args(args)
        .env_remove("TSPLINE_SEED")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn gaussian_row(row: &[String]) -> GaussianMeasure {
    let vals: Vec<f64> = row[1..].iter().map(|s| f(s)).collect();
    GaussianMeasure::from_parts(&vals[..2], &vals[2..]).unwrap()
}

#[test]
fn knot_times_echo_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("laws.csv");
    let (code, err) = tspline(&["interpolate", p(&fixture("sawtooth.json")), "--times", "0,0.25,0.5,0.75,1", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["time", "mean_0", "mean_1", "cov_0_0", "cov_0_1", "cov_1_0", "cov_1_1"]);
    let input: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(fixture("sawtooth.json")).unwrap()).unwrap();
    for (row, rec) in rows.iter().zip(&input) {
        let mean: Vec<f64> = serde_json::from_value(rec["mean"].clone()).unwrap();
        let cov: Vec<f64> = serde_json::from_value(rec["cov"].clone()).unwrap();
        let got = gaussian_row(row);
        let want = GaussianMeasure::from_parts(&mean, &cov).unwrap();
        assert!(bures_wasserstein_distance(&got, &want).unwrap() < 1e-6);
        assert!((got.mean() - want.mean()).amax() < 1e-12);
    }
}

#[test]
fn halfway_gaussians_for_both_kinds() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["cubic", "linear"] {
        let out = dir.path().join(format!("{kind}.csv"));
        let (code, err) = tspline(&[
            "interpolate",
            p(&fixture("sawtooth.json")),
            "--kind",
            kind,
            "--times",
            "0.125,0.375,0.625,0.875",
            "--out",
            p(&out),
        ]);
        assert_eq!(code, 0, "{err}");
        let (_, rows) = read_csv(&out);
        assert_eq!(rows.len(), 4);
        for row in &rows {
            let g = gaussian_row(row);
            assert!(g.is_nondegenerate());
            // every midpoint mean sits between consecutive knot means in x
            let t = f(&row[0]);
            assert!((g.mean()[0] - 28.0 * t).abs() < 2.0);
        }
        if kind == "linear" {
            // McCann midpoint of the diagonal pair: sd averages, mean averages
            let g = gaussian_row(&rows[0]);
            let s = 0.5 * (2f64.sqrt() + 2.0);
            assert!((g.mean()[0] - 3.5).abs() < 1e-12 && (g.mean()[1] - 3.5).abs() < 1e-12);
            assert!((g.cov().as_matrix()[(0, 0)] - s * s).abs() < 1e-9);
            assert!((g.cov().as_matrix()[(1, 1)] - s * s).abs() < 1e-9);
        }
    }
}

#[test]
fn seeded_samples_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(format!("{name}.csv"));
        let (code, err) = tspline(&["interpolate", p(&fixture("sawtooth.json")), "--samples", "50", "--seed", "7", "--out", p(&out)]);
        assert_eq!(code, 0, "{err}");
        (
            std::fs::read(&out).unwrap(),
            std::fs::read(dir.path().join(format!("{name}_samples.csv"))).unwrap(),
        )
    };
    let (a, sa) = run("a");
    let (b, sb) = run("b");
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    let text = String::from_utf8(sa).unwrap();
    // 5 default times (knots + midpoints = 9) × 50 samples
    assert_eq!(text.lines().count(), 1 + 9 * 50);
    let second: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!((second[0], second[1]), ("0", "1"));

    // the environment variable supplies the default seed
    let env_out = dir.path().join("env.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_tspline"))
        .args(["interpolate", p(&fixture("sawtooth.json")), "--samples", "50", "--out", p(&env_out)])
        .env("TSPLINE_SEED", "7")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read(dir.path().join("env_samples.csv")).unwrap(), std::fs::read(dir.path().join("a_samples.csv")).unwrap());
}

#[test]
fn json_output_matches_csv_to_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let csv_out = dir.path().join("laws.csv");
    let json_out = dir.path().join("laws.json");
    for (out, fmt) in [(&csv_out, "csv"), (&json_out, "json")] {
        let (code, err) = tspline(&["interpolate", p(&fixture("sawtooth.json")), "--samples", "3", "--seed", "1", "--format", fmt, "--out", p(out)]);
        assert_eq!(code, 0, "{err}");
    }
    let (_, rows) = read_csv(&csv_out);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(doc["family"], "gaussian");
    let laws = doc["laws"].as_array().unwrap();
    assert_eq!(laws.len(), rows.len());
    for (row, law) in rows.iter().zip(laws) {
        assert_eq!(f(&row[0]), law["time"].as_f64().unwrap());
        let vals: Vec<f64> = law["mean"].as_array().unwrap().iter().chain(law["cov"].as_array().unwrap()).map(|v| v.as_f64().unwrap()).collect();
        let csv_vals: Vec<f64> = row[1..].iter().map(|s| f(s)).collect();
        assert_eq!(vals, csv_vals);
    }
    let (_, samples) = read_csv(&dir.path().join("laws_samples.csv"));
    let js = doc["samples"].as_array().unwrap();
    assert_eq!(js.len(), samples.len());
    for (row, s) in samples.iter().zip(js) {
        assert_eq!(f(&row[2]), s["x"][0].as_f64().unwrap());
        assert_eq!(f(&row[3]), s["x"][1].as_f64().unwrap());
    }
}

#[test]
fn one_dimensional_and_cloud_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.json");
    std::fs::write(
        &input,
        r#"[{"family":"measure1d","time":0,"quantiles":{"tag":"uniform","a":0,"b":1}},
            {"family":"measure1d","time":1,"quantiles":{"tag":"gaussian","m":2,"sigma":0.5}},
            {"family":"measure1d","time":2,"quantiles":{"levels":[0.1,0.5,0.9],"values":[-1,0,3]}}]"#,
    )
    .unwrap();
    let out = dir.path().join("q.csv");
    let (code, err) = tspline(&["interpolate", p(&input), "--times", "1", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["time", "level", "quantile", "valid"]);
    assert_eq!(rows.len(), 1024);
    for row in &rows {
        let u = f(&row[1]);
        let g = tspline::coupling::Gaussian1D::new(2.0, 0.5).unwrap();
        assert!((f(&row[2]) - g.quantile(u)).abs() < 1e-9);
    }

    let cloud = dir.path().join("c.json");
    std::fs::write(
        &cloud,
        r#"[{"family":"cloud","time":0,"points":[[0,0],[1,0]]},
            {"family":"cloud","time":1,"points":[[1,1],[0,1]]}]"#,
    )
    .unwrap();
    let out = dir.path().join("c.csv");
    let (code, err) = tspline(&["interpolate", p(&cloud), "--times", "0.5", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["time", "point", "x_0", "x_1"]);
    assert_eq!(rows[0][2..], ["0".to_string(), "0.5".to_string()]);
    assert_eq!(rows[1][2..], ["1".to_string(), "0.5".to_string()]);
}

#[test]
fn exit_codes_and_no_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    };
    let cases = [
        (write("bad.json", "{not json"), 2),
        (
            write(
                "mixed.json",
                r#"[{"family":"gaussian","time":0,"mean":[0],"cov":[1]},
                    {"family":"measure1d","time":1,"quantiles":{"tag":"gaussian","m":0,"sigma":1}}]"#,
            ),
            2,
        ),
        (
            write(
                "asym.json",
                r#"[{"family":"gaussian","time":0,"mean":[0,0],"cov":[1,0.5,0,1]},
                    {"family":"gaussian","time":1,"mean":[0,0],"cov":[1,0,0,1]}]"#,
            ),
            2,
        ),
        (
            write(
                "notime.json",
                r#"[{"family":"gaussian","mean":[0],"cov":[1]},{"family":"gaussian","time":1,"mean":[0],"cov":[1]}]"#,
            ),
            2,
        ),
        (
            write(
                "singular.json",
                r#"[{"family":"gaussian","time":0,"mean":[0,0],"cov":[1,1,1,1]},
                    {"family":"gaussian","time":1,"mean":[0,0],"cov":[1,0,0,1]}]"#,
            ),
            3,
        ),
        (dir.path().join("missing.json"), 1),
    ];
    for (input, want) in &cases {
        let (code, err) = tspline(&["interpolate", p(input), "--out", p(&out)]);
        assert_eq!(code, *want, "{}: {err}", input.display());
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(!out.exists());
    }
    let (code, _) = tspline(&["rate", "--meshes", "2,4", "--out", p(&out)]);
    assert_eq!(code, 4);
    assert!(!out.exists() && !out.with_extension("json").exists());
    let (code, _) = tspline(&["thinplate", p(&fixture("sawtooth.json")), "--out", p(&out)]);
    assert_eq!(code, 2);
    // only the temporary-file directory contents we created remain
    let left: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(left.len(), cases.len() - 1);
}

#[test]
fn rate_report_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let curve = SyntheticGaussianCurve::new(CurveKind::Sinusoid);
    for (kind, ik, constant) in [("cubic", InterpKind::Cubic, 58.0), ("linear", InterpKind::Linear, 2.5)] {
        let out = dir.path().join(format!("{kind}.csv"));
        let (code, err) = tspline(&["rate", "--kind", kind, "--out", p(&out)]);
        assert_eq!(code, 0, "{err}");
        let (header, rows) = read_csv(&out);
        assert_eq!(header, ["delta", "sup_error", "bound", "ratio"]);
        assert_eq!(rows.len(), 4);
        for row in &rows {
            let (delta, bound) = (f(&row[0]), f(&row[2]));
            assert!((bound - constant * curve.curvature() * delta * delta).abs() <= 1e-12 * bound);
            assert!(f(&row[3]) <= 1.0);
        }
        let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
        let report = run_rate_experiment(&curve, ik, &[8, 16, 32, 64], 1.0).unwrap();
        assert_eq!(summary["slope"].as_f64().unwrap(), report.slope);
        if kind == "linear" {
            assert!((1.8..=2.3).contains(&report.slope), "{}", report.slope);
        }
    }
    let out = dir.path().join("ce.csv");
    let (code, err) = tspline(&["rate", "--curve", "counterexample", "--meshes", "1/4,1/8,0.0625", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    for e in summary["knot_errors"].as_array().unwrap() {
        assert!(e.as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn thinplate_raster() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("raster.csv");
    let (code, err) = tspline(&["thinplate", p(&fixture("temperature_sites.json")), "--grid", "12x9", "--quantiles", "0.1,0.5,0.9", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["x", "y", "mean", "std", "q_0.1", "q_0.5", "q_0.9", "degenerate"]);
    assert_eq!(rows.len(), 108);
    for row in &rows {
        assert_eq!(row[2], row[5], "median column equals mean column");
        if row[7] == "false" {
            assert!(f(&row[4]) < f(&row[5]) && f(&row[5]) < f(&row[6]));
        }
    }

    // sites on raster nodes are reproduced; constant input gives a constant raster
    let input = dir.path().join("sites.json");
    std::fs::write(
        &input,
        r#"[{"family":"measure1d","site":[0,0],"quantiles":{"tag":"gaussian","m":1,"sigma":2}},
            {"family":"measure1d","site":[1,0],"quantiles":{"tag":"gaussian","m":3,"sigma":1}},
            {"family":"measure1d","site":[0,1],"quantiles":{"tag":"gaussian","m":0,"sigma":0.5}},
            {"family":"gaussian","site":[1,1],"mean":[2],"cov":[4]},
            {"family":"measure1d","site":[0.5,0.5],"quantiles":{"tag":"gaussian","m":1,"sigma":1}}]"#,
    )
    .unwrap();
    let (code, err) = tspline(&["thinplate", p(&input), "--grid", "3x3", "--quantiles", "0.5", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let (_, rows) = read_csv(&out);
    let at = |x: f64, y: f64| rows.iter().find(|r| f(&r[0]) == x && f(&r[1]) == y).unwrap().clone();
    for (x, y, m, s) in [(0.0, 0.0, 1.0, 2.0), (1.0, 0.0, 3.0, 1.0), (0.0, 1.0, 0.0, 0.5), (1.0, 1.0, 2.0, 2.0), (0.5, 0.5, 1.0, 1.0)] {
        let r = at(x, y);
        assert!((f(&r[2]) - m).abs() < 1e-9 && (f(&r[3]) - s).abs() < 1e-9);
    }

    let constant = dir.path().join("const.json");
    let recs: Vec<String> = [[0.0, 0.0], [2.0, 0.0], [0.0, 3.0], [1.0, 1.0]]
        .iter()
        .map(|s| format!(r#"{{"family":"measure1d","site":[{},{}],"quantiles":{{"tag":"gaussian","m":5,"sigma":1.5}}}}"#, s[0], s[1]))
        .collect();
    std::fs::write(&constant, format!("[{}]", recs.join(","))).unwrap();
    let (code, err) = tspline(&["thinplate", p(&constant), "--grid", "7x5", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let (_, rows) = read_csv(&out);
    for r in &rows {
        assert!((f(&r[2]) - 5.0).abs() < 1e-9 && (f(&r[3]) - 1.5).abs() < 1e-9);
    }

    let collinear = dir.path().join("line.json");
    let recs: Vec<String> = (0..4)
        .map(|i| format!(r#"{{"family":"measure1d","site":[{i},{i}],"quantiles":{{"tag":"gaussian","m":{i},"sigma":1}}}}"#))
        .collect();
    std::fs::write(&collinear, format!("[{}]", recs.join(","))).unwrap();
    let (code, _) = tspline(&["thinplate", p(&collinear), "--out", p(&out.with_file_name("none.csv"))]);
    assert_eq!(code, 3);
}

#[test]
fn counterexample_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let (code, err) = tspline(&["counterexample", "--coupling", "independent", "--samples", "10", "--seed", "3", "--times", "0,0.5,1", "--out", p(out)]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (header, rows) = read_csv(&a);
    assert_eq!(header, ["time", "sample", "x"]);
    assert_eq!(rows.len(), 30);
    // straight lines: the midpoint is the average of the endpoints
    for s in 0..10 {
        let (x0, xm, x1) = (f(&rows[s][2]), f(&rows[10 + s][2]), f(&rows[20 + s][2]));
        assert!((xm - 0.5 * (x0 + x1)).abs() < 1e-12);
    }
    let (code, _) = tspline(&["counterexample", "--samples", "0", "--out", p(&a)]);
    assert_eq!(code, 2);
}
