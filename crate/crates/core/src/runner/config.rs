//! Run configuration files.
//!
//! ```toml
//! [model]            # m and mu are required
//! m = 3
//! mu = 1.0
//! omega = 0.0        # Oseen circulation
//! r0 = 1.0           # Oseen core radius at t = 0
//! sigma_in = 0.5
//! theta_in = 0.0
//!
//! [grid]
//! n = 512
//! r_max = 25.0       # default max(50 sigma_in, 10 r0)
//! grading = "geometric-near-axis"   # or "uniform"
//!
//! [time]
//! dt = 1e-3
//! t_end = 27.0       # default 3 m^2 / mu^2
//! output_cadence = 20
//! mode = "coupled"   # or "heat-flow-only"
//! companion_flows = true
//!
//! [time.control]     # adaptive step policy
//! growth = 1.2
//! grow_after = 10
//! dt_max = 1e-3      # default dt
//! max_correction = 1e-3
//! min_fraction = 1e-6
//!
//! [initial]
//! perturbation = { kind = "bump" }  # or { kind = "ring", center, width } / { kind = "random", seed }
//! amplitude = 1e-3
//! v_in_l2 = 0.0
//! v_in_width = 1.0
//! w_star_l2 = 0.0
//! w_star_width = 1.0
//!
//! [checks]
//! epsilon = 0.2
//! epsilon_star = 0.1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Mode, RunConfig};
use crate::grid::Grading;
use crate::profiles::{ModelParams, PerturbationKind};

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ConfigFile {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ModelSection {
    pub m: Option<i32>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub r0: Option<f64>,
    pub sigma_in: Option<f64>,
    pub theta_in: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GridSection {
    pub n: Option<usize>,
    pub r_max: Option<f64>,
    pub grading: Option<Grading>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TimeSection {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub output_cadence: Option<usize>,
    pub mode: Option<Mode>,
    pub companion_flows: Option<bool>,
    #[serde(default)]
    pub control: ControlSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ControlSection {
    pub growth: Option<f64>,
    pub grow_after: Option<usize>,
    pub dt_max: Option<f64>,
    pub max_correction: Option<f64>,
    pub min_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct InitialSection {
    pub perturbation: Option<PerturbationKind>,
    pub amplitude: Option<f64>,
    pub v_in_l2: Option<f64>,
    pub v_in_width: Option<f64>,
    pub w_star_l2: Option<f64>,
    pub w_star_width: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ChecksSection {
    pub epsilon: Option<f64>,
    pub epsilon_star: Option<f64>,
}

impl ConfigFile {
    /// Fills defaults and validates; `m` and `mu` must be present.
    pub fn resolve(&self) -> Result<RunConfig> {
        let missing = |field: &str| Error::ConfigValidation { field: field.into(), message: "required".into() };
        let md = &self.model;
        let mut params = ModelParams::new(md.m.ok_or_else(|| missing("model.m"))?, md.mu.ok_or_else(|| missing("model.mu"))?);
        set(&mut params.omega, md.omega);
        set(&mut params.r0, md.r0);
        set(&mut params.sigma_in, md.sigma_in);
        set(&mut params.theta_in, md.theta_in);
        params.validate()?;
        let mut c = RunConfig::new(params);
        set(&mut c.grid.n, self.grid.n);
        set(&mut c.grid.r_max, self.grid.r_max);
        set(&mut c.grid.grading, self.grid.grading);
        let t = &self.time;
        set(&mut c.dt, t.dt);
        set(&mut c.t_end, t.t_end);
        set(&mut c.output_cadence, t.output_cadence);
        set(&mut c.mode, t.mode);
        set(&mut c.companion_flows, t.companion_flows);
        let k = &t.control;
        set(&mut c.control.growth, k.growth);
        set(&mut c.control.grow_after, k.grow_after);
        c.control.dt_max = k.dt_max.or(c.control.dt_max);
        set(&mut c.control.max_correction, k.max_correction);
        set(&mut c.control.min_fraction, k.min_fraction);
        let i = &self.initial;
        set(&mut c.initial.perturbation, i.perturbation);
        set(&mut c.initial.amplitude, i.amplitude);
        set(&mut c.initial.v_in_l2, i.v_in_l2);
        set(&mut c.initial.v_in_width, i.v_in_width);
        set(&mut c.initial.w_star_l2, i.w_star_l2);
        set(&mut c.initial.w_star_width, i.w_star_width);
        set(&mut c.epsilon, self.checks.epsilon);
        set(&mut c.epsilon_star, self.checks.epsilon_star);
        c.validate()?;
        Ok(c)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses TOML text, mapping decode failures to [`Error::ConfigParse`] with a 1-based line.
pub(crate) fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::ConfigParse { line, message: e.message().trim().to_string() }
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Parses and validates a run configuration from TOML text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_toml::<ConfigFile>(text)?.resolve()
}

/// Reads, parses and validates a run configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&read_text(path)?)
}

/// Canonical TOML echo of a resolved configuration; the input of the manifest hash.
pub fn config_echo(config: &RunConfig) -> String {
    #[derive(Serialize)]
    struct Echo<'a> {
        model: &'a ModelParams,
        grid: &'a crate::evolution::GridSpec,
        time: TimeEcho<'a>,
        initial: &'a crate::evolution::InitialDataSpec,
        checks: ChecksEcho,
    }
    #[derive(Serialize)]
    struct TimeEcho<'a> {
        dt: f64,
        t_end: f64,
        output_cadence: usize,
        mode: Mode,
        companion_flows: bool,
        control: &'a crate::evolution::StepControl,
    }
    #[derive(Serialize)]
    struct ChecksEcho {
        epsilon: f64,
        epsilon_star: f64,
    }
    let echo = Echo {
        model: &config.params,
        grid: &config.grid,
        time: TimeEcho {
            dt: config.dt,
            t_end: config.t_end,
            output_cadence: config.output_cadence,
            mode: config.mode,
            companion_flows: config.companion_flows,
            control: &config.control,
        },
        initial: &config.initial,
        checks: ChecksEcho { epsilon: config.epsilon, epsilon_star: config.epsilon_star },
    };
    toml::to_string(&echo).expect("configuration serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let c = parse_config("[model]\nm = 3\nmu = 1.0\n").unwrap();
        assert_eq!(c.params.omega, 0.0);
        assert_eq!(c.params.r0, 1.0);
        assert_eq!(c.params.sigma_in, 0.5);
        assert_eq!(c.params.theta_in, 0.0);
        assert_eq!(c.grid.r_max, 25.0);
        assert_eq!(c.mode, Mode::Coupled);
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config("[model]\nm = 4\nmu = 0.5\n[initial]\nperturbation = { kind = \"ring\", center = 2.0, width = 0.5 }\n")
            .unwrap();
        let back = parse_config(&config_echo(&c)).unwrap();
        assert_eq!(back, c);
    }
}
