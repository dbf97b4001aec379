use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn twistflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistflow")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SMALL: &str = "[model]\nm = 3\nmu = 1.0\n[grid]\nn = 128\n[time]\nt_end = 0.4\noutput_cadence = 20\n";

#[test]
fn verify_quick_succeeds() {
    let o = twistflow(&["verify", "--level", "quick"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn bad_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nm = 2\nmu = 1.0\n").unwrap();
    let o = twistflow(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("m"));
}

#[test]
fn unwritable_output_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, SMALL).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = twistflow(&["run", "--config", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn run_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("run");
    let o = twistflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ts = out.join("timeseries.csv");
    assert!(Path::new(&ts).exists());
    let o = twistflow(&["fit", "--in", ts.to_str().unwrap(), "--column", "sigma", "--window", "0.1:0.4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let rate: f64 = text.lines().find_map(|l| l.strip_prefix("rate ")).unwrap().trim().parse().unwrap();
    assert!(rate.is_finite() && rate < 0.0);
    let o = twistflow(&["fit", "--in", ts.to_str().unwrap(), "--column", "nope", "--window", "0:1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn empty_sweep_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    fs::write(&spec, "[sweep]\nm = []\nmu = [1.0]\n").unwrap();
    let out = dir.path().join("sweep");
    let o = twistflow(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--parallel", "2"]);
    assert_eq!(code(&o), 1);
    assert!(!out.exists());
}

#[test]
fn small_sweep_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    fs::write(&spec, "[sweep]\nm = [3]\nmu = [2.0, 3.0]\nhorizon = 0.1\noutputs = 10\nfit_start = 0.0\n[base.grid]\nn = 96\n")
        .unwrap();
    let out = dir.path().join("sweep");
    let o = twistflow(&["sweep", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--parallel", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 3);
    assert!(out.join("run_000").is_dir() && out.join("run_001").is_dir());
}
