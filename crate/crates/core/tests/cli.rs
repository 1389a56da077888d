use std::path::Path;
use std::process::{Command, Output};

fn chronomesh(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chronomesh")).args(args).arg("--out").arg(out).output().unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn steady_example_crosses_near_the_phase_center() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["steady", "--nodes", "400", "--sigma2", "0.01", "--m", "3", "--phases", "1", "--seed", "7"];
    let out = chronomesh(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("crossings.csv")).unwrap();
    let crossing: f64 = column(&text, "crossing")[0].parse().unwrap();
    assert!((crossing - crossing.round()).abs() <= 0.02, "{crossing}");
    let phases = std::fs::read_to_string(dir.path().join("phases.csv")).unwrap();
    assert_eq!(phases.lines().count(), 401);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["steady", "--nodes", "400", "--sigma2", "0.01", "--phases", "3", "--seed", "7"];
    assert!(chronomesh(&args, a.path()).status.success());
    assert!(chronomesh(&args, b.path()).status.success());
    for f in ["phases.csv", "crossings.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn multihop_example_matches_the_linear_growth() {
    let dir = tempfile::tempdir().unwrap();
    let out = chronomesh(&["multihop", "--hops", "10", "--m", "3", "--sigma2", "1", "--trials", "10000"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("cascade.csv")).unwrap();
    let hops = column(&text, "hop");
    let emp = column(&text, "empirical_variance");
    assert_eq!(hops.len(), 9);
    for (h, v) in hops.iter().zip(&emp) {
        let l: f64 = h.parse().unwrap();
        let want = 0.5 + (l - 2.0);
        let got: f64 = v.parse().unwrap();
        assert!((got / want - 1.0).abs() <= 0.05, "hop {l}: {got} vs {want}");
    }
}

#[test]
fn floats_round_trip_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    assert!(chronomesh(&["channel-sample", "--trials", "200", "--seed", "2"], dir.path()).status.success());
    let text = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(text.is_ascii());
    for v in column(&text, "delay") {
        let x: f64 = v.parse().unwrap();
        assert_eq!(format!("{x:.16e}"), v);
    }
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = chronomesh(&["steady", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = chronomesh(&["pco", "--sigma2", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[multihop]\nhops = \n").unwrap();
    let out = chronomesh(&["multihop", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = chronomesh(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
