//! Browser bindings: the harmonic profile, a short simulation and a slice of its director field.

use wasm_bindgen::prelude::*;

use twistflow::diagnostics::{fit_exponential_rate, RateFit};
use twistflow::evolution::{run_simulation, RunConfig, RunStatus, Trajectory};
use twistflow::profiles::{harmonic_profile, reconstruct_3d, ModelParams};

/// `(r, h1(r / sigma), h3(r / sigma))` at `samples` points on `[0, r_max]`, flattened.
#[wasm_bindgen]
pub fn profile_curves(m: i32, sigma: f64, r_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    Ok(profile_table(m, sigma, r_max, samples)?)
}

fn profile_table(m: i32, sigma: f64, r_max: f64, samples: usize) -> twistflow::Result<Vec<f64>> {
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(3 * samples);
    for k in 0..samples {
        let r = r_max * k as f64 / (samples - 1) as f64;
        let (h1, h3) = harmonic_profile(r / sigma, m)?;
        out.extend([r, h1, h3]);
    }
    Ok(out)
}

/// A finished run kept in memory for plotting.
#[wasm_bindgen]
pub struct Simulation {
    traj: Trajectory,
    fit: Option<RateFit>,
}

#[wasm_bindgen]
impl Simulation {
    /// Runs the coupled system on `n` nodes up to `t_end`, fitting the rate over `[t_end / 6, t_end]`.
    #[wasm_bindgen(constructor)]
    pub fn new(m: i32, mu: f64, omega: f64, n: usize, t_end: f64) -> Result<Simulation, JsError> {
        Ok(simulate(m, mu, omega, n, t_end)?)
    }

    pub fn times(&self) -> Vec<f64> {
        self.traj.times()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.traj.records.iter().map(|r| r.sigma).collect()
    }

    pub fn theta(&self) -> Vec<f64> {
        self.traj.records.iter().map(|r| r.theta).collect()
    }

    pub fn energy(&self) -> Vec<f64> {
        self.traj.records.iter().map(|r| r.energy_e).collect()
    }

    pub fn predicted_rate(&self) -> f64 {
        self.traj.params.predicted_rate()
    }

    /// NaN when the fit window holds too few records.
    pub fn fitted_rate(&self) -> f64 {
        self.fit.as_ref().map_or(f64::NAN, |f| f.rate)
    }

    pub fn status(&self) -> String {
        match &self.traj.status {
            RunStatus::Completed => "completed".into(),
            RunStatus::EarlyStop { t, .. } => format!("stopped early at t = {t:.3}"),
            RunStatus::Breakdown { t, message } => format!("breakdown at t = {t:.3}: {message}"),
        }
    }

    /// Final director on the square `[-half_width, half_width]^2` of the plane `z = 0`,
    /// `res * res` row-major pixels of `(d1, d2, d3)`, flattened.
    pub fn director_slice(&self, half_width: f64, res: usize) -> Result<Vec<f64>, JsError> {
        Ok(director_plane(&self.traj, half_width, res)?)
    }
}

fn simulate(m: i32, mu: f64, omega: f64, n: usize, t_end: f64) -> twistflow::Result<Simulation> {
    let mut params = ModelParams::new(m, mu);
    params.omega = omega;
    let mut config = RunConfig::new(params);
    config.grid.n = n;
    config.t_end = t_end;
    config.output_cadence = ((t_end / 100.0) / config.dt).round().max(1.0) as usize;
    config.companion_flows = false;
    let traj = run_simulation(&config)?;
    let end = traj.records.last().map_or(t_end, |r| r.t);
    let fit = fit_exponential_rate(&traj.sigma_series(), (end / 6.0, end)).ok();
    Ok(Simulation { traj, fit })
}

fn director_plane(traj: &Trajectory, half_width: f64, res: usize) -> twistflow::Result<Vec<f64>> {
    let res = res.max(2);
    let half_width = half_width.min(traj.grid.r_max() / std::f64::consts::SQRT_2);
    let coord = |k: usize| half_width * (2.0 * k as f64 / (res - 1) as f64 - 1.0);
    let points: Vec<[f64; 3]> = (0..res).flat_map(|i| (0..res).map(move |j| [coord(j), -coord(i), 0.0])).collect();
    let fields = reconstruct_3d(&traj.final_state, &traj.grid, &traj.params, &points)?;
    Ok(fields.iter().flat_map(|(_, d)| [d.x, d.y, d.z]).collect())
}
