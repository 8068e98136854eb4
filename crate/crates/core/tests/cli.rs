use std::process::{Command, Output};

fn qgeom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgeom")).args(args).output().expect("run qgeom")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Header and rows of a CSV document without a timestamp line.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].clone()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn eval_reports_every_method_with_agreement() {
    let o = qgeom(&["eval", "--model", "gho", "--point", "2,0.5,1", "--n", "1", "--no-header-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = table(&stdout(&o));
    assert_eq!(column(&h, &rows, "method"), ["perturbative", "overlap-fd", "closed-form", "covariance-derived"]);
    assert_eq!(column(&h, &rows, "agrees")[1..], ["true", "true", "true"]);
    // n = 1 at ω² = 1.75: g_XX = 3·Z²/(32ω⁴).
    let gxx = num(&column(&h, &rows, "g[X,X]")[0]);
    assert!((gxx - 3.0 / (32.0 * 1.75 * 1.75)).abs() < 1e-10);
    let f_qp = num(&column(&h, &rows, "F[q,p]")[0]);
    assert!((f_qp + 1.0).abs() < 1e-10);
}

#[test]
fn numbers_are_full_precision_scientific() {
    let o = qgeom(&["eval", "--model", "gho", "--point", "2,0.5,1", "--method", "closed-form", "--no-header-timestamp"]);
    let (h, rows) = table(&stdout(&o));
    let v = &column(&h, &rows, "X")[0];
    assert_eq!(v, "2.0000000000000000e0");
}

#[test]
fn domain_violation_exits_2_and_names_constraint() {
    let o = qgeom(&["eval", "--model", "gho", "--point", "X=1,Y=2,Z=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("XZ - Y^2 > 0"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qgeom(&["eval", "--model", "nope", "--point", "1"]).status.code(), Some(2));
    assert_eq!(qgeom(&["check", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(qgeom(&["eval", "--model", "gho", "--point", "1,2"]).status.code(), Some(2));
    assert_eq!(qgeom(&["eval", "--model", "gho", "--point", "2,0,1", "--cutoff", "4"]).status.code(), Some(2));
    assert_eq!(qgeom(&["sweep", "--model", "gho", "--point", "X=2,Z=1", "--grid", "Y=0:1:0"]).status.code(), Some(2));
    assert_eq!(qgeom(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn degenerate_state_exits_3() {
    // Equal normal frequencies at k1 = 0 make (1,0) and (0,1) degenerate.
    let o = qgeom(&["eval", "--model", "sym-coupled", "--point", "1,0", "--n", "1,0", "--method", "perturbative", "--cutoff", "12"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn under_resolved_check_fails() {
    let o = qgeom(&["check", "--criterion", "1", "--model", "gho", "--cutoff", "12"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[FAIL] criterion 1"));
}

#[test]
fn passing_check_exits_0() {
    let o = qgeom(&["check", "--criterion", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("[PASS] criterion 4"));
}

#[test]
fn sweep_is_deterministic_across_workers() {
    let a = ["sweep", "--model", "sym-coupled", "--point", "k0=1", "--grid", "k1=0:5:11", "--quantity", "purity,entropy,scalar-curvature"];
    let mut one = a.to_vec();
    one.extend(["--workers", "1", "--no-header-timestamp"]);
    let mut three = a.to_vec();
    three.extend(["--workers", "3", "--no-header-timestamp"]);
    let x = qgeom(&one);
    let y = qgeom(&three);
    assert_eq!(x.status.code(), Some(0), "{}", stderr(&x));
    assert_eq!(x.stdout, y.stdout);

    let (h, rows) = table(&stdout(&x));
    let mu: Vec<f64> = column(&h, &rows, "purity").iter().map(|s| num(s)).collect();
    let s: Vec<f64> = column(&h, &rows, "entropy").iter().map(|s| num(s)).collect();
    assert_eq!(mu.len(), 11);
    assert!(mu.windows(2).all(|w| w[1] < w[0]));
    assert!(s.windows(2).all(|w| w[1] > w[0]));
    assert!(column(&h, &rows, "R").iter().all(|r| num(r).abs() < 1e-6));
}

#[test]
fn timestamp_header_is_optional() {
    let args = ["sweep", "--model", "gho", "--point", "2,0.5,1", "--quantity", "closed:det-metric"];
    let stamped = stdout(&qgeom(&args));
    assert!(stamped.starts_with("# qgeom"));
    let mut plain_args = args.to_vec();
    plain_args.push("--no-header-timestamp");
    let plain = stdout(&qgeom(&plain_args));
    assert_eq!(stamped.lines().skip(1).collect::<Vec<_>>(), plain.lines().collect::<Vec<_>>());
}

#[test]
fn sweep_records_point_failures_and_continues() {
    let o = qgeom(&["sweep", "--model", "gho", "--point", "X=1,Z=1", "--grid", "Y=0:2:5", "--quantity", "closed:det-metric", "--no-header-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = table(&stdout(&o));
    let err = column(&h, &rows, "error");
    assert_eq!(err.iter().filter(|e| e.is_empty()).count(), 2);
    assert!(err[4].contains("XZ - Y^2"));
}

#[test]
fn sweep_determinant_matches_closed_form() {
    let o = qgeom(&[
        "sweep", "--model", "gho-linear", "--point", "W=1,X=1,Z=1", "--grid", "Y=-0.6:0.6:7", "--n", "2",
        "--quantity", "det-metric,closed:det-metric", "--no-header-timestamp",
    ]);
    let (h, rows) = table(&stdout(&o));
    for (a, b) in column(&h, &rows, "det_g").iter().zip(column(&h, &rows, "closed:det-metric")) {
        assert!((num(a) - num(&b)).abs() <= 1e-12 * num(&b).abs());
    }
}

#[test]
fn sweep_phase_curvatures_match_closed_forms() {
    let o = qgeom(&[
        "sweep", "--model", "gho", "--point", "X=2,Z=1", "--grid", "Y=-1:1:5",
        "--quantity", "phase-curvature:X,Y,closed:phase-curvature:X,Y,phase-curvature:Y,Z,closed:phase-curvature:Y,Z",
        "--no-header-timestamp",
    ]);
    let (h, rows) = table(&stdout(&o));
    for (fd, cf) in [("R_phase[X,Y]", "closed:phase-curvature:X,Y"), ("R_phase[Y,Z]", "closed:phase-curvature:Y,Z")] {
        for (a, b) in column(&h, &rows, fd).iter().zip(column(&h, &rows, cf)) {
            assert!((num(a) - num(&b)).abs() <= 1e-4 * num(&b).abs());
        }
    }
}

#[test]
fn json_echoes_config_and_tolerances() {
    let o = qgeom(&["entangle", "--model", "sym-coupled", "--point", "1,1", "--cutoff", "30", "--format", "json", "--no-header-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["command"], "entangle");
    assert_eq!(doc["config"]["model"], "sym-coupled");
    assert!(doc["tolerances"]["covariance"].as_f64().unwrap() > 0.0);
    assert!(doc.get("generated_unix").is_none());
    let cols: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let ip = cols.iter().position(|c| *c == "purity").unwrap();
    let rows = doc["rows"].as_array().unwrap();
    let closed = rows[0][ip].as_f64().unwrap();
    let numeric = rows[1][ip].as_f64().unwrap();
    assert!((closed - numeric).abs() < 1e-8);
}

#[test]
fn config_file_with_gaussian_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    let out = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        r#"
model = "gaussian"
point = { a = 1.4, b = 0.6 }
methods = ["closed-form"]

[gaussian]
params = ["a", "b"]
sigma = "sqrt(a)"
mu = "a*b"
"#,
    )
    .unwrap();
    let o = qgeom(&[
        "curvature", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-header-timestamp",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = table(&std::fs::read_to_string(&out).unwrap());
    assert!((num(&column(&h, &rows, "R")[0]) + 4.0).abs() < 1e-4);
    assert!((num(&column(&h, &rows, "R_direct")[0]) + 4.0).abs() < 1e-4);

    // Flags override the file.
    let o = qgeom(&["curvature", "--config", cfg.to_str().unwrap(), "--point", "a=2,b=-1", "--no-header-timestamp"]);
    let (h, rows) = table(&stdout(&o));
    assert_eq!(num(&column(&h, &rows, "a")[0]), 2.0);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    std::fs::write(&cfg, "model = \"gho\"\npoitn = [1, 0, 1]\n").unwrap();
    let o = qgeom(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curvature_of_reduced_phase_block() {
    let o = qgeom(&["curvature", "--model", "sym-coupled", "--point", "1,1", "--block", "phase-block", "--no-header-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (h, rows) = table(&stdout(&o));
    let r = num(&column(&h, &rows, "R")[0]);
    let direct = num(&column(&h, &rows, "R_direct")[0]);
    assert!((r - direct).abs() < 1e-5);
}
