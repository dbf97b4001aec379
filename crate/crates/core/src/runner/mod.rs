//! Configuration, run orchestration, sweeps, the verification suite and
//! on-disk artifacts.
//!
//! A run directory holds `timeseries.csv`, a few `profile_t<t>.csv`
//! snapshots, `summary.toml` and, written last, `manifest.toml`.

mod config;
mod output;
mod sweep;
mod verify;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::diagnostics::{fit_exponential_rate, RateFit};
use crate::error::{Error, Result};
use crate::evolution::{run_simulation, RunConfig, RunStatus, Trajectory};

pub use config::{config_echo, load_config, parse_config};
pub use output::{profile_csv, profile_file_name, read_column, timeseries_csv, PROFILE_HEADER, TIMESERIES_HEADER};
pub use sweep::{load_sweep_spec, parse_sweep_spec, run_sweep, sweep_command, SweepOutcome, SweepRow, SweepSpec};
pub use verify::{verify, Check, VerifyLevel, VerifyReport};

/// Process exit status of a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Error,
    Breakdown,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Error => 1,
            ExitStatus::Breakdown => 2,
        }
    }
}

/// Final state recorded in the manifest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifestStatus {
    Completed,
    Breakdown,
    Aborted,
}

/// Provenance record of one run, written once at the end.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub status: ManifestStatus,
    /// `sha256` of the canonical config echo, framed like a git blob.
    pub hash: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// `(t, sigma)` where the run stopped at the resolution limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub files: Vec<String>,
    pub config: toml::Table,
}

/// Hash of a configuration: hex `sha256("blob <len>\0" + echo)`.
pub fn config_hash(config: &RunConfig) -> String {
    let echo = config_echo(config);
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", echo.len()).as_bytes());
    h.update(echo.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Default fit window of a run: `[t_end / 6, t_end]`.
pub fn default_fit_window(config: &RunConfig) -> (f64, f64) {
    (config.t_end / 6.0, config.t_end)
}

/// Result of [`run_to_dir`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub manifest: RunManifest,
    pub fit: Option<RateFit>,
}

impl RunOutcome {
    pub fn exit_status(&self) -> ExitStatus {
        match self.trajectory.status {
            RunStatus::Breakdown { .. } => ExitStatus::Breakdown,
            _ => ExitStatus::Success,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    status: String,
    records: usize,
    accepted_steps: usize,
    rejected_steps: usize,
    t_final: f64,
    sigma_final: f64,
    theta_final: f64,
    max_x_norm_z: f64,
    max_energy_identity_residual: f64,
    bootstrap_a1_all: bool,
    bootstrap_a2_all: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitSummary>,
}

#[derive(Serialize)]
struct FitSummary {
    window: [f64; 2],
    rate: f64,
    predicted_rate: f64,
    rel_err: f64,
    r_squared: f64,
    samples: usize,
}

fn status_name(status: &RunStatus) -> String {
    match status {
        RunStatus::Completed => "completed".into(),
        RunStatus::EarlyStop { .. } => "early-stop".into(),
        RunStatus::Breakdown { .. } => "breakdown".into(),
    }
}

/// Executes `config` and writes every artifact into `dir`, which must exist.
///
/// Stepper failures still write an `aborted` manifest before the error is returned.
pub fn run_to_dir(config: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let started = unix_now();
    let mut config = config.clone();
    config.store_states = true;
    let hash = config_hash(&config);
    let echo: toml::Table = toml::from_str(&config_echo(&config)).expect("echo is valid TOML");
    let mut manifest = RunManifest {
        status: ManifestStatus::Aborted,
        hash,
        started_unix: started,
        finished_unix: started,
        early_stop: None,
        message: None,
        files: Vec::new(),
        config: echo,
    };
    let traj = match run_simulation(&config) {
        Ok(t) => t,
        Err(e) => {
            manifest.message = Some(e.to_string());
            manifest.finished_unix = unix_now();
            write_manifest(dir, &manifest)?;
            return Err(e);
        }
    };

    output::write_file(&dir.join("timeseries.csv"), &timeseries_csv(&traj.records))?;
    manifest.files.push("timeseries.csv".into());
    for k in snapshot_indices(traj.states.len()) {
        let state = &traj.states[k];
        let name = profile_file_name(state.t);
        output::write_file(&dir.join(&name), &profile_csv(state, &traj.grid, &config.params)?)?;
        manifest.files.push(name);
    }

    let window = default_fit_window(&config);
    let fit = fit_exponential_rate(&traj.sigma_series(), window).ok();
    let predicted = config.params.predicted_rate();
    let last = traj.records.last();
    let summary = Summary {
        status: status_name(&traj.status),
        records: traj.records.len(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        t_final: traj.final_state.t,
        sigma_final: last.map_or(f64::NAN, |r| r.sigma),
        theta_final: last.map_or(f64::NAN, |r| r.theta),
        max_x_norm_z: traj.records.iter().fold(0.0, |a, r| a.max(r.x_norm_z)),
        max_energy_identity_residual: traj
            .records
            .iter()
            .filter(|r| r.energy_identity_residual.is_finite())
            .fold(0.0, |a, r| a.max(r.energy_identity_residual)),
        bootstrap_a1_all: traj.records.iter().all(|r| r.bootstrap_a1_ok),
        bootstrap_a2_all: traj.records.iter().all(|r| r.bootstrap_a2_ok),
        fit: fit.map(|f| FitSummary {
            window: [window.0, window.1],
            rate: f.rate,
            predicted_rate: predicted,
            rel_err: (f.rate / predicted - 1.0).abs(),
            r_squared: f.r_squared,
            samples: f.samples,
        }),
    };
    output::write_file(&dir.join("summary.toml"), &toml::to_string(&summary).expect("summary serializes"))?;
    manifest.files.push("summary.toml".into());

    match &traj.status {
        RunStatus::Completed => manifest.status = ManifestStatus::Completed,
        RunStatus::EarlyStop { t, sigma } => {
            manifest.status = ManifestStatus::Completed;
            manifest.early_stop = Some([*t, *sigma]);
        }
        RunStatus::Breakdown { message, .. } => {
            manifest.status = ManifestStatus::Breakdown;
            manifest.message = Some(message.clone());
        }
    }
    manifest.finished_unix = unix_now();
    write_manifest(dir, &manifest)?;
    Ok(RunOutcome { trajectory: traj, manifest, fit })
}

/// Record indices of the profile snapshots: start, quarters and end.
fn snapshot_indices(len: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..=4).map(|k| k * (len - 1) / 4).collect();
    idx.dedup();
    idx
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    if manifest.status == ManifestStatus::Completed {
        for f in &manifest.files {
            if !dir.join(f).is_file() {
                return Err(Error::InvalidArgument(format!("declared output {f} is missing")));
            }
        }
    }
    let text = toml::to_string(manifest).expect("manifest serializes");
    output::write_atomic(&dir.join("manifest.toml"), &text)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

/// `run --config <path> --out <dir>`.
pub fn run_command(config_path: &Path, out_dir: &Path) -> Result<RunOutcome> {
    let config = load_config(config_path)?;
    create_dir(out_dir)?;
    run_to_dir(&config, out_dir)
}

/// `fit --in <timeseries> --column <name> --window <t0:t1>`.
pub fn fit_command(input: &Path, column: &str, window: (f64, f64)) -> Result<RateFit> {
    fit_exponential_rate(&read_column(input, column)?, window)
}

/// Parses `t0:t1`.
pub fn parse_window(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidArgument(format!("window must look like t0:t1, got '{text}'"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let t0: f64 = a.trim().parse().map_err(|_| bad())?;
    let t1: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(t0 < t1) {
        return Err(bad());
    }
    Ok((t0, t1))
}

pub(crate) fn run_dir_name(index: usize) -> PathBuf {
    PathBuf::from(format!("run_{index:03}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ModelParams;

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        let a = RunConfig::new(ModelParams::new(3, 1.0));
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        b.dt *= 0.5;
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("0.5:3").unwrap(), (0.5, 3.0));
        assert!(parse_window("3:0.5").is_err());
        assert!(parse_window("3").is_err());
    }

    #[test]
    fn snapshots_cover_both_ends() {
        assert_eq!(snapshot_indices(1), vec![0]);
        assert_eq!(snapshot_indices(9), vec![0, 2, 4, 6, 8]);
        assert!(snapshot_indices(0).is_empty());
    }
}
