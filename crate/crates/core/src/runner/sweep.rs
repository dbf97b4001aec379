//! Parameter sweeps over `(m, mu, omega, sigma_in, amplitude)`.
//!
//! ```toml
//! [sweep]
//! m = [3, 4, 5]
//! mu = [0.5, 1.0]
//! omega = [0.0]          # optional, default [0.0]
//! sigma_in = [0.5]       # optional, default [0.5]
//! amplitude = [1e-3]     # optional, default [1e-3]
//! horizon = 0.3333333333 # t_end = horizon * m^2 / mu^2
//! outputs = 150          # records per run
//! fit_start = 0.1666667  # fit over [fit_start * t_end, t_end]
//!
//! [base.grid]            # any run-config section except model.m, model.mu,
//! n = 2048               # time.t_end and time.output_cadence
//! ```

use std::path::Path;
use std::sync::mpsc;

use serde::Deserialize;

use super::config::{parse_toml, read_text, ConfigFile};
use super::output::{num, write_file};
use super::{create_dir, run_dir_name, run_to_dir, ExitStatus};
use crate::error::{Error, Result};
use crate::evolution::{RunConfig, RunStatus};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    sweep: SweepSection,
    #[serde(default)]
    base: ConfigFile,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    m: Vec<i32>,
    mu: Vec<f64>,
    #[serde(default = "zero")]
    omega: Vec<f64>,
    #[serde(default = "half")]
    sigma_in: Vec<f64>,
    #[serde(default = "small")]
    amplitude: Vec<f64>,
    #[serde(default = "third")]
    horizon: f64,
    #[serde(default = "outputs")]
    outputs: usize,
    #[serde(default = "sixth")]
    fit_start: f64,
}

fn zero() -> Vec<f64> {
    vec![0.0]
}
fn half() -> Vec<f64> {
    vec![0.5]
}
fn small() -> Vec<f64> {
    vec![1e-3]
}
fn third() -> f64 {
    1.0 / 3.0
}
fn outputs() -> usize {
    150
}
fn sixth() -> f64 {
    1.0 / 6.0
}

/// One sweep point with its resolved configuration and fit window.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub config: RunConfig,
    pub window: (f64, f64),
}

/// Expanded sweep: points in grid order (`m` outermost, `amplitude` innermost).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub points: Vec<SweepPoint>,
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec> {
    let file: SweepFile = parse_toml(text)?;
    let s = &file.sweep;
    let bad = |field: &str, message: &str| Error::ConfigValidation { field: field.into(), message: message.into() };
    let b = &file.base;
    if b.model.m.is_some() || b.model.mu.is_some() {
        return Err(bad("base.model", "m and mu are set by the sweep grid"));
    }
    if b.time.t_end.is_some() || b.time.output_cadence.is_some() {
        return Err(bad("base.time", "t_end and output_cadence are set by the sweep"));
    }
    if !(s.horizon > 0.0) {
        return Err(bad("sweep.horizon", "horizon must be > 0"));
    }
    if s.outputs < 10 {
        return Err(bad("sweep.outputs", "need at least 10 outputs per run"));
    }
    if !(0.0..1.0).contains(&s.fit_start) {
        return Err(bad("sweep.fit_start", "fit_start must lie in [0, 1)"));
    }
    let mut points = Vec::new();
    for &m in &s.m {
        for &mu in &s.mu {
            for &omega in &s.omega {
                for &sigma_in in &s.sigma_in {
                    for &amplitude in &s.amplitude {
                        let mut f = file.base.clone();
                        f.model.m = Some(m);
                        f.model.mu = Some(mu);
                        f.model.omega = Some(omega);
                        f.model.sigma_in = Some(sigma_in);
                        f.initial.amplitude = Some(amplitude);
                        let t_end = s.horizon * (m * m) as f64 / (mu * mu);
                        let dt = f.time.dt.unwrap_or(1e-3);
                        f.time.t_end = Some(t_end);
                        f.time.output_cadence = Some(((t_end / s.outputs as f64) / dt).round().max(1.0) as usize);
                        points.push(SweepPoint { config: f.resolve()?, window: (s.fit_start * t_end, t_end) });
                    }
                }
            }
        }
    }
    Ok(SweepSpec { points })
}

pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    parse_sweep_spec(&read_text(path)?)
}

/// One line of `rates.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m: i32,
    pub mu: f64,
    pub omega: f64,
    pub sigma_in: f64,
    pub amplitude: f64,
    pub predicted_rate: f64,
    pub fitted_rate: f64,
    pub rel_err: f64,
    pub r_squared: f64,
    /// `completed`, `early-stop`, `breakdown` or `error: <message>`.
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub exit: ExitStatus,
}

fn execute(index: usize, point: &SweepPoint, out: &Path) -> SweepRow {
    let c = &point.config;
    let predicted = c.params.predicted_rate();
    let mut row = SweepRow {
        m: c.params.m,
        mu: c.params.mu,
        omega: c.params.omega,
        sigma_in: c.params.sigma_in,
        amplitude: c.initial.amplitude,
        predicted_rate: predicted,
        fitted_rate: f64::NAN,
        rel_err: f64::NAN,
        r_squared: f64::NAN,
        status: String::new(),
    };
    let dir = out.join(run_dir_name(index));
    let result = create_dir(&dir).and_then(|_| run_to_dir(c, &dir));
    match result {
        Ok(o) => {
            row.status = match o.trajectory.status {
                RunStatus::Completed => "completed".into(),
                RunStatus::EarlyStop { .. } => "early-stop".into(),
                RunStatus::Breakdown { .. } => "breakdown".into(),
            };
            match crate::diagnostics::fit_exponential_rate(&o.trajectory.sigma_series(), point.window) {
                Ok(f) => {
                    row.fitted_rate = f.rate;
                    row.rel_err = (f.rate / predicted - 1.0).abs();
                    row.r_squared = f.r_squared;
                }
                Err(e) => row.status = format!("error: {e}"),
            }
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Runs every point with up to `parallel` share-nothing workers; worker `w`
/// owns points `w, w + parallel, ...` and reports over a channel.
pub fn run_sweep(spec: &SweepSpec, out: &Path, parallel: usize) -> Result<SweepOutcome> {
    if spec.points.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    if parallel == 0 {
        return Err(Error::InvalidArgument("parallelism must be >= 1".into()));
    }
    create_dir(out)?;
    let workers = parallel.min(spec.points.len());
    let (tx, rx) = mpsc::channel::<(usize, SweepRow)>();
    std::thread::scope(|scope| {
        for w in 0..workers {
            let tx = tx.clone();
            let points = &spec.points;
            scope.spawn(move || {
                for i in (w..points.len()).step_by(workers) {
                    let row = execute(i, &points[i], out);
                    if tx.send((i, row)).is_err() {
                        break;
                    }
                }
            });
        }
    });
    drop(tx);
    let mut rows: Vec<Option<SweepRow>> = vec![None; spec.points.len()];
    for (i, row) in rx {
        rows[i] = Some(row);
    }
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("every worker reports")).collect();
    write_file(&out.join("rates.csv"), &rates_csv(&rows))?;
    let exit = if rows.iter().any(|r| r.status.starts_with("error")) {
        ExitStatus::Error
    } else if rows.iter().any(|r| r.status == "breakdown") {
        ExitStatus::Breakdown
    } else {
        ExitStatus::Success
    };
    Ok(SweepOutcome { rows, exit })
}

/// `rates.csv` in grid order.
pub fn rates_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("m,mu,predicted_rate,fitted_rate,rel_err,omega,sigma_in,amplitude,r_squared,status\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.m,
            num(r.mu),
            num(r.predicted_rate),
            num(r.fitted_rate),
            num(r.rel_err),
            num(r.omega),
            num(r.sigma_in),
            num(r.amplitude),
            num(r.r_squared),
            r.status.replace(',', ";")
        ));
    }
    out
}

/// `sweep --spec <path> --out <dir> --parallel <n>`.
pub fn sweep_command(spec_path: &Path, out: &Path, parallel: usize) -> Result<SweepOutcome> {
    run_sweep(&load_sweep_spec(spec_path)?, out, parallel)
}
