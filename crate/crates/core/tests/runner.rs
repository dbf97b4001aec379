use std::fs;
use std::path::Path;

use twistflow::runner::{
    config_hash, fit_command, load_config, parse_config, run_command, ExitStatus, ManifestStatus, PROFILE_HEADER,
    TIMESERIES_HEADER,
};
use twistflow::Error;

const SMALL: &str = "[model]\nm = 3\nmu = 1.0\n[grid]\nn = 128\n[time]\nt_end = 0.4\noutput_cadence = 20\n";

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_declared_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", SMALL);
    let out = tmp.path().join("out");
    let o = run_command(&cfg, &out).unwrap();
    assert_eq!(o.exit_status(), ExitStatus::Success);
    assert_eq!(o.manifest.status, ManifestStatus::Completed);
    for f in &o.manifest.files {
        assert!(out.join(f).is_file(), "{f}");
    }
    let ts = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().next().unwrap(), TIMESERIES_HEADER);
    assert_eq!(ts.lines().count(), 1 + 21);
    let snap = o.manifest.files.iter().find(|f| f.starts_with("profile_t")).unwrap();
    let prof = fs::read_to_string(out.join(snap)).unwrap();
    assert_eq!(prof.lines().next().unwrap(), PROFILE_HEADER);
    assert_eq!(prof.lines().count(), 1 + 128);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"completed\""));
    assert!(manifest.contains(&config_hash(&load_config(&cfg).unwrap())));
}

#[test]
fn identical_configs_give_identical_timeseries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", SMALL);
    run_command(&cfg, &tmp.path().join("a")).unwrap();
    run_command(&cfg, &tmp.path().join("b")).unwrap();
    let a = fs::read(tmp.path().join("a/timeseries.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/timeseries.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", SMALL);
    let blocker = write(tmp.path(), "file", "");
    assert!(matches!(run_command(&cfg, &blocker.join("out")), Err(Error::Io { .. })));
}

#[test]
fn resolution_limit_stops_early_with_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "run.toml",
        "[model]\nm = 3\nmu = 3.0\n[grid]\nn = 96\n[time]\ndt = 2e-3\nt_end = 6.0\noutput_cadence = 25\n",
    );
    let out = tmp.path().join("out");
    let o = run_command(&cfg, &out).unwrap();
    assert_eq!(o.exit_status(), ExitStatus::Success);
    assert!(o.manifest.early_stop.is_some(), "{:?}", o.trajectory.status);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("early_stop"));
}

#[test]
fn config_errors_name_line_and_field() {
    match parse_config("[model]\nm = 3\nmu = 1.0\n\n[grid]\nsize = 4\n") {
        Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 6),
        other => panic!("{other:?}"),
    }
    match parse_config("[model]\nm = 2\nmu = 1.0\n") {
        Err(Error::ConfigValidation { field, message }) => {
            assert_eq!(field, "m");
            assert!(message.contains("|m| must be >= 3"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_config("[model]\nm = 3\nmu = 0.0\n"), Err(Error::ConfigValidation { .. })));
    assert!(matches!(parse_config("[model]\nm = 3\n"), Err(Error::ConfigValidation { .. })));
}

#[test]
fn fit_reads_written_timeseries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", SMALL);
    let out = tmp.path().join("out");
    let o = run_command(&cfg, &out).unwrap();
    let f = fit_command(&out.join("timeseries.csv"), "sigma", (0.1, 0.4)).unwrap();
    let direct = twistflow::diagnostics::fit_exponential_rate(&o.trajectory.sigma_series(), (0.1, 0.4)).unwrap();
    assert_eq!(f.rate, direct.rate);
    assert!(fit_command(&out.join("timeseries.csv"), "nope", (0.1, 0.4)).is_err());
}
