//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_nonlocal-spectral");

fn run(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(BIN).args(args).arg("--out").arg(out).output().expect("binary starts")
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

#[test]
fn eigen_csv_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(&["eigen", "--basis", "chebyshev", "--n", "12", "--delta", "3"], d.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // identical apart from the echoed output directory
    let strip = |d: &Path| -> String {
        let text = fs::read_to_string(d.join("eigen.csv")).unwrap();
        text.lines().filter(|l| !l.starts_with("# out = ")).map(|l| format!("{l}\n")).collect()
    };
    let text = strip(a.path());
    assert_eq!(text, strip(b.path()));
    assert!(text.starts_with("# command = eigen"));
    assert!(text.contains("# basis = chebyshev"));
    assert!(text.contains("# basis_labels = T0 T1"));
    let lines = data_lines(&a.path().join("eigen.csv"));
    assert!(lines[0].starts_with("k,eigenvalue,"));
    assert_eq!(lines.len(), 14);
}

#[test]
fn eigen_json_schema() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["eigen", "--basis", "fourier", "--n", "20", "--format", "json"], d.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("eigen.json")).unwrap()).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["config", "eigenvalues", "eigenvectors", "basis_labels"]);
    let values: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let rounded: Vec<String> = values[..5].iter().map(|x| format!("{x:.4}")).collect();
    assert_eq!(rounded, ["0.0000", "0.8846", "0.8846", "2.5285", "2.5285"]);
    assert_eq!(v["eigenvectors"].as_array().unwrap().len(), 21);
    assert_eq!(v["basis_labels"].as_array().unwrap().len(), 21);
    assert_eq!(v["config"]["n"], serde_json::json!("20"));
}

#[test]
fn zero_kernel_gives_zero_spectrum() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["eigen", "--basis", "fourier", "--n", "8", "--kernel", "tophat:0"], d.path());
    assert!(o.status.success());
    for line in &data_lines(&d.path().join("eigen.csv"))[1..] {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(value, 0.0);
    }
}

#[test]
fn every_command_writes_its_tables() {
    let d = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &[&str]); 5] = [
        (&["multipliers", "--n", "20"], &["multipliers.csv", "fourier_spectrum.csv", "chebyshev_spectrum.csv"]),
        (&["converge", "--basis", "fourier", "--n", "20", "--levels", "3"], &["converge_fourier.csv"]),
        (&["antiperiodic", "--n", "10", "--delta", "1", "--oracle", "self:40"], &["antiperiodic.csv", "antiperiodic_modes.csv"]),
        (&["evolve", "--n", "20", "--times", "0,0.5", "--plot"], &["snapshot_t0.csv", "snapshot_t0.5.csv", "plot.gp"]),
        (&["eigen", "--basis", "chebyshev", "--bc", "free", "--n", "6", "--delta", "0.5", "--domain", "-1:1"], &["eigen.csv"]),
    ];
    for (args, files) in cases {
        let o = run(args, d.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            assert!(d.path().join(f).is_file(), "{args:?} did not write {f}");
        }
    }
    let conv = data_lines(&d.path().join("converge_fourier.csv"));
    assert_eq!(conv[0], "N,error,rate");
    assert_eq!(conv.len(), 4);
    let snap = data_lines(&d.path().join("snapshot_t0.csv"));
    assert_eq!(snap[0], "x,u");
    let first: Vec<f64> = snap[1].split(',').map(|s| s.parse().unwrap()).collect();
    assert!((first[0] - 0.0).abs() < 1e-12);
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let conf = d.path().join("run.conf");
    fs::write(&conf, "# benchmark\nbasis = chebyshev\nn = 40\ndelta = 3\n").unwrap();
    let o = run(&["eigen", "--config", conf.to_str().unwrap(), "--n", "10"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(d.path().join("eigen.csv")).unwrap();
    assert!(text.contains("# n = 10"));
    assert!(text.contains("# basis = chebyshev"));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["eigen", "--basis", "fourier", "--n", "21"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["eigen", "--n", "20", "--basis", "spline"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["eigen", "--n", "20", "--kernel", "table:/nonexistent.csv"], d.path()).status.code(), Some(2));
    assert_eq!(Command::new(BIN).arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(Command::new(BIN).output().unwrap().status.code(), Some(2));
}
