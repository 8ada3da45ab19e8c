use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fcidump").join(format!("{name}.fcidump"))
}

fn qsci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsci"))
        .args(args)
        .env("QSCI_WORKERS", "2")
        .output()
        .expect("spawn qsci")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 8] = ["--instances", "4", "--shots", "128", "--steps", "3", "--seed", "3"];

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

#[test]
fn missing_fcidump_is_an_io_error_and_creates_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let missing = tmp.path().join("nope.fcidump");
    let r = qsci(&["qsci", "--fcidump", s(&missing), "-o", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nope.fcidump"));
    assert!(!out.exists());
}

#[test]
fn malformed_fcidump_reports_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.fcidump");
    std::fs::write(&bad, "&FCI NORB=2,NELEC=2,MS2=0,\n &END\n 0.5 1 1 x 1\n").unwrap();
    let r = qsci(&["fcidump-info", "--fcidump", s(&bad)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn invalid_option_values_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let r = qsci(&["qsci", "--fcidump", s(&data("h2_sto3g")), "--p-dep", "1.5", "-o", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = Command::new(env!("CARGO_BIN_EXE_qsci"))
        .args(["fcidump-info", "--fcidump", s(&data("h2_sto3g"))])
        .env("QSCI_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn fcidump_info_reports_sector() {
    let r = qsci(&["fcidump-info", "--fcidump", s(&data("h4_chain_sto3g"))]);
    assert!(r.status.success());
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["sector_dimension"], "36");
    assert_eq!(v["qubits"], 8);
}

#[test]
fn same_seed_gives_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let h4 = data("h4_chain_sto3g");
        let mut args = vec!["qsci", "--fcidump", s(&h4), "-o", s(&out)];
        args.extend(SMALL);
        let r = qsci(&args);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        traces.push((
            std::fs::read(out.join("trace.csv")).unwrap(),
            std::fs::read(out.join("pt2.csv")).unwrap(),
            std::fs::read_to_string(out.join("MANIFEST")).unwrap(),
        ));
    }
    assert_eq!(traces[0].0, traces[1].0);
    assert_eq!(traces[0].1, traces[1].1);
    assert!(traces[0].2.contains("complete"));
}

#[test]
fn stored_measurements_reproduce_the_simulated_run() {
    let tmp = tempfile::tempdir().unwrap();
    let h4 = data("h4_chain_sto3g");
    let direct = tmp.path().join("direct");
    let replay = tmp.path().join("replay");
    let mut base = vec!["qsci", "--fcidump", s(&h4)];
    base.extend(SMALL);
    let r = qsci(&[base.clone(), vec!["-o", s(&direct)]].concat());
    assert!(r.status.success());
    let stored = direct.join("measurements");
    assert!(stored.join("step_001.txt").exists());
    let r = qsci(&[base, vec!["--measurements", s(&stored), "-o", s(&replay)]].concat());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(
        std::fs::read(direct.join("trace.csv")).unwrap(),
        std::fs::read(replay.join("trace.csv")).unwrap()
    );
}

#[test]
fn resume_with_wrong_seed_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let h2 = data("h2_sto3g");
    let first = tmp.path().join("first");
    let mut base = vec!["qsci", "--fcidump", s(&h2), "--instances", "2", "--shots", "64"];
    let r = qsci(&[base.clone(), vec!["--seed", "1", "-o", s(&first)]].concat());
    assert!(r.status.success());
    let ckpt = first.join("checkpoint.bin");
    let second = tmp.path().join("second");
    base.extend(["--seed", "2", "--resume", s(&ckpt), "-o", s(&second)]);
    let r = qsci(&base);
    assert_eq!(r.status.code(), Some(4));
    assert!(!second.exists());
}

#[test]
fn single_point_curve_has_no_extrapolation_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pec");
    let point = format!("r1.00={}", s(&data("h4_chain_r1.00_sto3g")));
    let mut args = vec!["pec", "--point", &point, "-o", s(&out)];
    args.extend(SMALL);
    let r = qsci(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = csv_rows(&out.join("curve.csv"));
    assert!(!header.iter().any(|h| h == "e_extrap"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn stretched_chain_curve_has_growing_correlation_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pec");
    let tags = ["r0.80", "r1.00", "r1.20", "r1.50", "r1.80"];
    let points: Vec<String> =
        tags.iter().map(|t| format!("{t}={}", s(&data(&format!("h4_chain_{t}_sto3g"))))).collect();
    let mut args = vec!["pec", "--baselines", "fci", "-o", s(&out)];
    for p in &points {
        args.extend(["--point", p.as_str()]);
    }
    args.extend(SMALL);
    let r = qsci(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = csv_rows(&out.join("curve.csv"));
    assert!(header.iter().any(|h| h == "e_extrap"));
    let (hf, fci, status) = (column(&header, "e_hf"), column(&header, "e_fci"), column(&header, "status"));
    let gaps: Vec<f64> =
        rows.iter().map(|r| r[hf].parse::<f64>().unwrap() - r[fci].parse::<f64>().unwrap()).collect();
    assert!(gaps.iter().all(|g| *g > 0.0), "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
    assert!(rows.iter().all(|r| r[status] == "ok"));
    for t in tags {
        assert!(out.join(t).join("result.json").exists());
    }
}

#[test]
fn identical_geometries_give_identical_rows_and_failures_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pec");
    let h4 = data("h4_chain_sto3g");
    let list = tmp.path().join("points.txt");
    std::fs::write(
        &list,
        format!("a {}\nb {}\nbroken {}\n", s(&h4), s(&h4), s(&tmp.path().join("missing.fcidump"))),
    )
    .unwrap();
    let mut args = vec!["pec", "--points-file", s(&list), "-o", s(&out)];
    args.extend(SMALL);
    let r = qsci(&args);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let (_, rows) = csv_rows(&out.join("curve.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1..], rows[1][1..]);
    assert_eq!(rows[2].last().unwrap(), "error:io");
    let failures: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("failures.json")).unwrap()).unwrap();
    assert_eq!(failures[0]["geometry"], "broken");
    assert!(std::fs::read_to_string(out.join("MANIFEST")).unwrap().contains("incomplete"));
}

#[test]
fn extrapolate_reads_a_point_table() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("points.csv");
    std::fs::write(&input, "pt2,energy\n-0.02,-0.10\n-0.01,-0.11\n").unwrap();
    let r = qsci(&["extrapolate", "--input", s(&input)]);
    assert!(r.status.success());
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((v["slope"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!((v["intercept"].as_f64().unwrap() + 0.12).abs() < 1e-12);
}
