//! Time integration of the reduced system, the heat-flow-only mode, the
//! linear companion flows and the self-similar change of variables.
//!
//! One step is linearly implicit: the diffusion operators, the horizontal
//! damping `-(m^2/r^2 + mu^2)` and the constraint term `lambda phi` with the
//! multiplier `lambda = |phi_r|^2 + (m^2/r^2 + mu^2)|R phi|^2` frozen at the old
//! state are backward Euler; the transport and the fluid forcing are explicit.
//! The director is renormalized nodewise afterwards. Freezing `lambda` only
//! perturbs the update along `phi`, which the renormalization removes, so the
//! tangential dynamics carry no stiff splitting error.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    bootstrap_assumption_check, energy_report, energy_residual_terms, w_star, x_norm_unchecked, DiagnosticsRecord,
};
use crate::error::{check_len, Error, Result};
use crate::gauge::{compute_gauge, r_apply, vector_derivative};
use crate::grid::{Grading, RadialGrid};
use crate::linalg::Tridiagonal;
use crate::modulation::{extract_modulation, ModulationFrame};
use crate::profiles::{
    build_initial_data, gaussian_v, gaussian_w_star, make_test_perturbation, oseen_w, oseen_w_over_r2, ModelParams,
    PerturbationKind,
};
use crate::EquivariantState;

/// Which equations are advanced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Director, swirl and vertical velocity together.
    Coupled,
    /// Harmonic map heat flow with the twist; the fluid is switched off.
    HeatFlowOnly,
}

/// Radial mesh of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub r_max: f64,
    pub grading: Grading,
}

/// Concrete initial data: a test perturbation plus Gaussian fluid profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub perturbation: PerturbationKind,
    pub amplitude: f64,
    /// `||V_in||_{L^2(r dr)}`; zero disables the profile.
    pub v_in_l2: f64,
    pub v_in_width: f64,
    /// `||W*_in / r||_{L^2(r dr)}`; zero disables the profile.
    pub w_star_l2: f64,
    pub w_star_width: f64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        InitialDataSpec {
            perturbation: PerturbationKind::Bump,
            amplitude: 1e-3,
            v_in_l2: 0.0,
            v_in_width: 1.0,
            w_star_l2: 0.0,
            w_star_width: 1.0,
        }
    }
}

/// Adaptive step policy: halve on rejection, grow after a run of accepted steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub growth: f64,
    pub grow_after: usize,
    /// Upper bound on the step; defaults to the initial step.
    pub dt_max: Option<f64>,
    /// Largest renormalization correction accepted in one step.
    pub max_correction: f64,
    /// Smallest step, as a fraction of the initial one, before giving up.
    pub min_fraction: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { growth: 1.2, grow_after: 10, dt_max: None, max_correction: 1e-3, min_fraction: 1e-6 }
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    /// Steps of size `dt` between diagnostics.
    pub output_cadence: usize,
    pub mode: Mode,
    pub companion_flows: bool,
    pub initial: InitialDataSpec,
    pub control: StepControl,
    /// Band width of the (A.1) check.
    pub epsilon: f64,
    pub epsilon_star: f64,
    /// Keep every output state in the trajectory.
    pub store_states: bool,
}

impl RunConfig {
    /// Defaults for everything but the model parameters.
    pub fn new(params: ModelParams) -> Self {
        let m2 = params.mf() * params.mf();
        RunConfig {
            params,
            grid: GridSpec {
                n: 512,
                r_max: (50.0 * params.sigma_in).max(10.0 * params.r0),
                grading: Grading::GeometricNearAxis,
            },
            dt: 1e-3,
            t_end: 3.0 * m2 / (params.mu * params.mu),
            output_cadence: 20,
            mode: Mode::Coupled,
            companion_flows: true,
            initial: InitialDataSpec::default(),
            control: StepControl::default(),
            epsilon: 0.2,
            epsilon_star: 0.1,
            store_states: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |field: &str, message: String| Err(Error::ConfigValidation { field: field.into(), message });
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad("t_end", format!("t_end must be >= 0, got {}", self.t_end));
        }
        if self.output_cadence == 0 {
            return bad("output_cadence", "cadence must be >= 1".into());
        }
        if self.grid.n < 16 {
            return bad("grid.n", format!("need at least 16 nodes, got {}", self.grid.n));
        }
        if !(self.grid.r_max > 0.0) {
            return bad("grid.r_max", format!("r_max must be > 0, got {}", self.grid.r_max));
        }
        if !(self.initial.amplitude >= 0.0 && self.initial.amplitude < 0.5) {
            return bad("initial.amplitude", "amplitude must lie in [0, 1/2)".into());
        }
        if !(self.initial.v_in_l2 >= 0.0 && self.initial.w_star_l2 >= 0.0) {
            return bad("initial", "fluid data norms must be >= 0".into());
        }
        if !(self.initial.v_in_width > 0.0 && self.initial.w_star_width > 0.0) {
            return bad("initial", "fluid data widths must be > 0".into());
        }
        let c = &self.control;
        if !(c.growth >= 1.0) || c.grow_after == 0 || !(c.max_correction > 0.0) || !(c.min_fraction > 0.0) {
            return bad("control", "invalid step-control parameters".into());
        }
        if let Some(m) = c.dt_max {
            if !(m >= self.dt) {
                return bad("control.dt_max", "dt_max must be >= dt".into());
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", "epsilon must lie in (0, 1)".into());
        }
        if !(self.epsilon_star > 0.0) {
            return bad("epsilon_star", "epsilon_star must be > 0".into());
        }
        Ok(())
    }

    /// Spacing of the output times.
    pub fn output_interval(&self) -> f64 {
        self.dt * self.output_cadence as f64
    }
}

/// Factored implicit operators for one step size.
struct Operators {
    dt: f64,
    /// Interior rows of `Delta_2`.
    laplacian: Vec<[f64; 3]>,
    /// `m^2/r^2 + mu^2` (zero on the axis).
    damping: Vec<f64>,
    swirl: Tridiagonal,
    /// `I - dt Delta_2` with a symmetric axis and `f(r_max) = 0`.
    neumann: Tridiagonal,
    /// `I - dt (d_rr + 3 r^{-1} d_r)`, the radial 4D heat operator.
    four_d: Tridiagonal,
}

impl Operators {
    /// `I - dt (Delta_2 - potential)` with Dirichlet rows at both ends.
    fn director(&self, potential: &[f64]) -> Tridiagonal {
        let n = potential.len();
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        for (idx, row) in self.laplacian.iter().enumerate() {
            let i = idx + 1;
            lower[i] = -self.dt * row[0];
            diag[i] = 1.0 - self.dt * (row[1] - potential[i]);
            upper[i] = -self.dt * row[2];
        }
        Tridiagonal::factor(lower, &diag, upper)
    }

    fn new(grid: &RadialGrid, params: &ModelParams, dt: f64) -> Self {
        let n = grid.len();
        let r = grid.nodes();
        let damping: Vec<f64> = r
            .iter()
            .map(|&ri| if ri > 0.0 { params.mf().powi(2) / (ri * ri) + params.mu * params.mu } else { 0.0 })
            .collect();
        let build = |k: f64, axis: Option<f64>| {
            let rows = grid.interior_rows(k);
            let mut lower = vec![0.0; n];
            let mut diag = vec![1.0; n];
            let mut upper = vec![0.0; n];
            for (idx, row) in rows.iter().enumerate() {
                let i = idx + 1;
                lower[i] = -dt * row[0];
                diag[i] = 1.0 - dt * row[1];
                upper[i] = -dt * row[2];
            }
            if let Some(coef) = axis {
                let a = coef * dt / (r[1] * r[1]);
                diag[0] = 1.0 + a;
                upper[0] = -a;
            }
            Tridiagonal::factor(lower, &diag, upper)
        };
        Operators {
            dt,
            laplacian: grid.interior_rows(1.0),
            swirl: build(-1.0, None),
            neumann: build(1.0, Some(4.0)),
            four_d: build(3.0, Some(8.0)),
            damping,
        }
    }
}

/// Solutions of the unforced linear flows started from the fluid data:
/// `V1` under `Delta_2`, and `U = W*_1 / r^2` under the radial 4D Laplacian.
#[derive(Clone, Debug, PartialEq)]
pub struct Companions {
    pub v1: Vec<f64>,
    pub u: Vec<f64>,
}

impl Companions {
    pub fn from_data(grid: &RadialGrid, v_in: &[f64], w_star_in: &[f64]) -> Self {
        let mut u = grid.div_r2(w_star_in);
        let last = u.len() - 1;
        u[last] = 0.0;
        Companions { v1: v_in.to_vec(), u }
    }

    /// `W*_1 = r^2 U`.
    pub fn w_star1(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.nodes().iter().zip(&self.u).map(|(r, u)| r * r * u).collect()
    }
}

/// Stepper with cached factorizations.
pub struct Integrator<'g> {
    grid: &'g RadialGrid,
    params: ModelParams,
    mode: Mode,
    ops: Option<Operators>,
    max_correction: f64,
}

impl<'g> Integrator<'g> {
    pub fn new(grid: &'g RadialGrid, params: ModelParams, mode: Mode) -> Self {
        Integrator { grid, params, mode, ops: None, max_correction: 1e-3 }
    }

    fn ops(&mut self, dt: f64) -> &Operators {
        if self.ops.as_ref().is_none_or(|o| o.dt != dt) {
            self.ops = Some(Operators::new(self.grid, &self.params, dt));
        }
        self.ops.as_ref().expect("operators just built")
    }

    /// One step of size `dt`; companions, if given, are advanced alongside.
    pub fn step(
        &mut self,
        state: &EquivariantState,
        companions: Option<&mut Companions>,
        dt: f64,
    ) -> Result<EquivariantState> {
        let grid = self.grid;
        let n = grid.len();
        check_len(n, state.len())?;
        check_len(n, state.w.len())?;
        check_len(n, state.v_vert.len())?;
        let params = self.params;
        let mode = self.mode;
        let max_correction = self.max_correction;
        let r = grid.nodes();
        let mf = params.mf();
        let mu = params.mu;
        let t_new = state.t + dt;

        let dphi = vector_derivative(&state.phi, grid);
        let comps: Vec<Vec<f64>> = (0..3).map(|k| state.phi.iter().map(|p| p[k]).collect()).collect();
        let mut lap = vec![Vector3::zeros(); n];
        for i in 1..n {
            for k in 0..3 {
                lap[i][k] = grid.d2_at(&comps[k], i) + grid.d1_at(&comps[k], i) / r[i];
            }
        }
        let ws = w_star(state, &params, grid);
        let transport: Vec<f64> = match mode {
            Mode::Coupled => {
                let ws_r2 = grid.div_r2(&ws);
                (0..n)
                    .map(|i| mf * (oseen_w_over_r2(r[i], state.t, &params) + ws_r2[i]) + mu * state.v_vert[i])
                    .collect()
            }
            Mode::HeatFlowOnly => vec![0.0; n],
        };

        let ops = self.ops(dt);
        let mut b = vec![[0.0; 3]; n];
        let mut forcing = vec![0.0; n];
        let mut pot_h = vec![0.0; n];
        let mut pot_v = vec![0.0; n];
        for i in 1..n - 1 {
            let p = state.phi[i];
            let rp = r_apply(&p);
            let c = ops.damping[i];
            let lambda = dphi[i].norm_squared() + c * rp.norm_squared();
            pot_h[i] = c - lambda;
            pot_v[i] = -lambda;
            let v = p - dt * transport[i] * rp;
            b[i] = [v.x, v.y, v.z];
            forcing[i] = lap[i].dot(&rp);
        }
        let horizontal = ops.director(&pot_h);
        let vertical = ops.director(&pot_v);
        let mut cols: Vec<Vec<f64>> = (0..3).map(|k| b.iter().map(|v| v[k]).collect()).collect();
        cols[0][0] = 0.0;
        cols[1][0] = 0.0;
        cols[2][0] = -1.0;
        cols[0][n - 1] = 0.0;
        cols[1][n - 1] = 0.0;
        cols[2][n - 1] = 1.0;
        horizontal.solve_in_place(&mut cols[0]);
        horizontal.solve_in_place(&mut cols[1]);
        vertical.solve_in_place(&mut cols[2]);

        let mut phi = Vec::with_capacity(n);
        let mut correction = 0.0_f64;
        for ((&x, &y), &z) in cols[0].iter().zip(&cols[1]).zip(&cols[2]) {
            let v = Vector3::new(x, y, z);
            let norm = v.norm();
            if !norm.is_finite() {
                return Err(Error::NanDetected { t: state.t });
            }
            correction = correction.max((norm - 1.0).abs());
            phi.push(v / norm);
        }
        if correction > max_correction {
            return Err(Error::StabilityFailure { t: state.t, correction });
        }
        phi[0] = -Vector3::z();
        phi[n - 1] = Vector3::z();

        let (w, v_vert) = match mode {
            Mode::Coupled => {
                let mut wn: Vec<f64> = (0..n).map(|i| ws[i] - dt * mf * forcing[i]).collect();
                wn[0] = 0.0;
                wn[n - 1] = 0.0;
                ops.swirl.solve_in_place(&mut wn);
                for i in 0..n {
                    wn[i] += oseen_w(r[i], t_new, &params);
                }
                wn[0] = 0.0;
                let mut vn: Vec<f64> = (0..n).map(|i| state.v_vert[i] - dt * mu * forcing[i]).collect();
                vn[n - 1] = 0.0;
                ops.neumann.solve_in_place(&mut vn);
                (wn, vn)
            }
            Mode::HeatFlowOnly => (state.w.clone(), state.v_vert.clone()),
        };
        if w.iter().chain(&v_vert).any(|x| !x.is_finite()) {
            return Err(Error::NanDetected { t: state.t });
        }
        if let Some(c) = companions {
            c.v1[n - 1] = 0.0;
            ops.neumann.solve_in_place(&mut c.v1);
            c.u[n - 1] = 0.0;
            ops.four_d.solve_in_place(&mut c.u);
        }
        Ok(EquivariantState { phi, w, v_vert, t: t_new })
    }
}

/// One coupled IMEX step.
pub fn step_coupled(state: &EquivariantState, dt: f64, params: &ModelParams, grid: &RadialGrid) -> Result<EquivariantState> {
    Integrator::new(grid, *params, Mode::Coupled).step(state, None, dt)
}

/// One step of the harmonic map heat flow with the fluid switched off.
pub fn step_heat_flow_only(
    state: &EquivariantState,
    dt: f64,
    params: &ModelParams,
    grid: &RadialGrid,
) -> Result<EquivariantState> {
    Integrator::new(grid, *params, Mode::HeatFlowOnly).step(state, None, dt)
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// The scale dropped below the resolution limit; the trajectory stops early.
    EarlyStop { t: f64, sigma: f64 },
    /// The modulation decomposition could not be continued.
    Breakdown { t: f64, message: String },
}

/// Output of [`run_simulation`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: RadialGrid,
    pub params: ModelParams,
    pub records: Vec<DiagnosticsRecord>,
    pub frames: Vec<ModulationFrame>,
    /// States at every record when requested, otherwise empty.
    pub states: Vec<EquivariantState>,
    pub final_state: EquivariantState,
    pub status: RunStatus,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn sigma_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.sigma)).collect()
    }

    pub fn theta_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.theta)).collect()
    }
}

/// Initial state and companion data of a configuration.
pub fn initial_state(config: &RunConfig, grid: &RadialGrid) -> Result<(EquivariantState, Companions)> {
    let p = &config.params;
    let rho = grid.scaled(1.0 / p.sigma_in);
    let init = &config.initial;
    let z_in = make_test_perturbation(init.perturbation, init.amplitude, &rho, p.m)?;
    let v_in = if init.v_in_l2 > 0.0 { gaussian_v(grid, init.v_in_l2, init.v_in_width) } else { vec![0.0; grid.len()] };
    let mut w_in = if init.w_star_l2 > 0.0 {
        gaussian_w_star(grid, init.w_star_l2, init.w_star_width)
    } else {
        vec![0.0; grid.len()]
    };
    w_in[0] = 0.0;
    let state = build_initial_data(grid, p, &z_in, &w_in, &v_in)?;
    Ok((state, Companions::from_data(grid, &v_in, &w_in)))
}

/// Runs a configuration to `t_end`, recording diagnostics every
/// `output_cadence * dt`.
///
/// Extraction failures end the run with [`RunStatus::Breakdown`] and a
/// partial trajectory; numerical failures of the stepper are errors.
pub fn run_simulation(config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = RadialGrid::new(config.grid.r_max, config.grid.n, config.grid.grading)?;
    let params = config.params;
    let (mut state, mut companions) = initial_state(config, &grid)?;
    let mut integ = Integrator::new(&grid, params, config.mode);
    integ.max_correction = config.control.max_correction;

    let interval = config.output_interval();
    let outputs = (config.t_end / interval + 1e-9).floor() as usize;
    let dt_max = config.control.dt_max.unwrap_or(config.dt);
    let dt_min = config.dt * config.control.min_fraction;
    let resolution = grid.nodes()[8];

    let mut traj = Trajectory {
        grid: grid.clone(),
        params,
        records: Vec::new(),
        frames: Vec::new(),
        states: Vec::new(),
        final_state: state.clone(),
        status: RunStatus::Completed,
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut guess = (params.sigma_in, params.theta_in);
    let mut dt = config.dt;
    let mut streak = 0usize;
    for k in 0..=outputs {
        let target = k as f64 * interval;
        while state.t < target - 1e-9 * config.dt {
            let remaining = target - state.t;
            let (h, lands) = if dt >= remaining * (1.0 - 1e-9) { (remaining, true) } else { (dt, false) };
            let comp = if config.companion_flows { Some(&mut companions) } else { None };
            let saved = comp.as_ref().map(|c| (*c).clone());
            match integ.step(&state, comp, h) {
                Ok(mut next) => {
                    if lands {
                        next.t = target;
                    }
                    state = next;
                    traj.accepted_steps += 1;
                    streak += 1;
                    if streak >= config.control.grow_after && dt < dt_max {
                        dt = (dt * config.control.growth).min(dt_max);
                        streak = 0;
                    }
                }
                Err(Error::StabilityFailure { t, correction }) => {
                    if let Some(s) = saved {
                        companions = s;
                    }
                    traj.rejected_steps += 1;
                    streak = 0;
                    dt = h * 0.5;
                    if dt < dt_min {
                        return Err(Error::StabilityFailure { t, correction });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        match record_output(config, &grid, &state, &companions, guess, &traj) {
            Ok((record, frame)) => {
                guess = (frame.sigma, frame.theta);
                let sigma = frame.sigma;
                traj.records.push(record);
                traj.frames.push(frame);
                if config.store_states {
                    traj.states.push(state.clone());
                }
                if sigma < resolution {
                    traj.status = RunStatus::EarlyStop { t: state.t, sigma };
                    break;
                }
            }
            Err(e @ (Error::NoConvergence { .. } | Error::DecompositionBreakdown(_) | Error::InvalidArgument(_))) => {
                traj.status = RunStatus::Breakdown { t: state.t, message: e.to_string() };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    fill_energy_residuals(&mut traj.records);
    traj.final_state = state;
    Ok(traj)
}

fn record_output(
    config: &RunConfig,
    grid: &RadialGrid,
    state: &EquivariantState,
    companions: &Companions,
    guess: (f64, f64),
    traj: &Trajectory,
) -> Result<(DiagnosticsRecord, ModulationFrame)> {
    let params = &config.params;
    let frame = extract_modulation(&state.phi, grid, params.m, guess)?;
    let gauge = compute_gauge(state, params, grid)?;
    let energy = energy_report(state, &gauge, params, grid)?;
    let x = x_norm_unchecked(&frame.z, &frame.rho_grid);
    let l2_z = frame.sigma * frame.rho_grid.l2_norm(&frame.z.iter().map(|v| v.norm()).collect::<Vec<_>>());
    let ws = w_star(state, params, grid);
    let v2: Vec<f64> = state.v_vert.iter().zip(&companions.v1).map(|(a, b)| a - b).collect();
    let ws1 = companions.w_star1(grid);
    let ws2: Vec<f64> = ws.iter().zip(&ws1).map(|(a, b)| a - b).collect();
    let weight = (2.0 * params.mu * params.mu / params.mf().powi(2) * state.t).exp() * x * x;
    let accumulator = match (traj.records.last(), traj.frames.last()) {
        (Some(prev), Some(_)) => {
            let prev_weight = (2.0 * params.mu * params.mu / params.mf().powi(2) * prev.t).exp() * prev.x_norm_z.powi(2);
            prev.weighted_z_accumulator + 0.5 * (state.t - prev.t) * (weight + prev_weight)
        }
        _ => 0.0,
    };
    let mut record = DiagnosticsRecord {
        t: state.t,
        sigma: frame.sigma,
        theta: frame.theta,
        x_norm_z: x,
        l2_z,
        energy_e: energy.e,
        energy_estar: energy.e_star,
        dissipation: energy.dissipation,
        oseen_forcing: energy.forcing,
        energy_identity_residual: f64::NAN,
        v_l2: grid.l2_norm(&state.v_vert),
        v1_sup: companions.v1.iter().fold(0.0, |a, v| a.max(v.abs())),
        v2_l2: grid.l2_norm(&v2),
        wstar_over_r_l2: grid.l2_norm(&grid.div_r(&ws)),
        wstar1_over_r2_sup: companions.u.iter().fold(0.0, |a, v| a.max(v.abs())),
        wstar2_over_r_l2: grid.l2_norm(&grid.div_r(&ws2)),
        weighted_z_accumulator: accumulator,
        bootstrap_a1_ok: true,
        bootstrap_a2_ok: true,
    };
    let (a1, a2) = bootstrap_assumption_check(&record, params, config.epsilon, config.epsilon_star);
    record.bootstrap_a1_ok = a1;
    record.bootstrap_a2_ok = a2;
    Ok((record, frame))
}

fn fill_energy_residuals(records: &mut [DiagnosticsRecord]) {
    for j in 1..records.len().saturating_sub(1) {
        let spacing = records[j].t - records[j - 1].t;
        records[j].energy_identity_residual = energy_residual_terms(
            records[j - 1].energy_e,
            records[j + 1].energy_e,
            spacing,
            records[j].dissipation,
            records[j].oseen_forcing,
        );
    }
}

/// `(t, V1, W*_1)` at each output time.
pub type CompanionSeries = Vec<(f64, Vec<f64>, Vec<f64>)>;

/// Companion series at the output times of `config`, advanced with the run's step size.
pub fn run_linear_companions(config: &RunConfig) -> Result<CompanionSeries> {
    config.validate()?;
    let grid = RadialGrid::new(config.grid.r_max, config.grid.n, config.grid.grading)?;
    let (_, mut comp) = initial_state(config, &grid)?;
    let interval = config.output_interval();
    let outputs = (config.t_end / interval + 1e-9).floor() as usize;
    let n = grid.len();
    let ops = Operators::new(&grid, &config.params, config.dt);
    let mut out = vec![(0.0, comp.v1.clone(), comp.w_star1(&grid))];
    for k in 1..=outputs {
        for _ in 0..config.output_cadence {
            comp.v1[n - 1] = 0.0;
            ops.neumann.solve_in_place(&mut comp.v1);
            comp.u[n - 1] = 0.0;
            ops.four_d.solve_in_place(&mut comp.u);
        }
        out.push((k as f64 * interval, comp.v1.clone(), comp.w_star1(&grid)));
    }
    Ok(out)
}

/// `lambda(t) = mu^{-1} e^{-mu^2 t / m^2}`.
pub fn self_similar_lambda(t: f64, params: &ModelParams) -> f64 {
    (params.predicted_rate() * t).exp() / params.mu
}

/// `s(t) = int_0^t lambda^{-2} = (m^2 / 2)(e^{2 mu^2 t / m^2} - 1)`.
pub fn self_similar_time(t: f64, params: &ModelParams) -> f64 {
    0.5 * params.mf().powi(2) * (-2.0 * params.predicted_rate() * t).exp_m1()
}

/// One sample of the rescaled director `Phi(y, s) = phi(lambda y, t)`.
#[derive(Clone, Debug)]
pub struct SelfSimilarSample {
    pub t: f64,
    pub s: f64,
    pub lambda: f64,
    pub y: Vec<f64>,
    pub phi: Vec<Vector3<f64>>,
    /// `sup_y |Phi - e^{Theta R} h(y lambda / sigma)|` for the extracted `(sigma, Theta)`.
    pub profile_deviation: f64,
}

/// Self-similar variables `y = r / lambda(t)`, `s(t)` along a trajectory with stored states.
pub fn to_self_similar_frame(traj: &Trajectory) -> Result<Vec<SelfSimilarSample>> {
    if traj.states.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no stored states".into()));
    }
    let p = &traj.params;
    traj.states
        .iter()
        .zip(&traj.frames)
        .map(|(state, frame)| {
            let lambda = self_similar_lambda(state.t, p);
            let y = traj.grid.nodes().iter().map(|r| r / lambda).collect();
            let mut dev = 0.0_f64;
            for (i, &r) in traj.grid.nodes().iter().enumerate() {
                let h = crate::profiles::rotated_scaled_profile(r, frame.theta, frame.sigma, p.m)?;
                dev = dev.max((state.phi[i] - h).norm());
            }
            Ok(SelfSimilarSample {
                t: state.t,
                s: self_similar_time(state.t, p),
                lambda,
                y,
                phi: state.phi.clone(),
                profile_deviation: dev,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::profiles::rotated_scaled_profile;

    fn harmonic_state(grid: &RadialGrid, params: &ModelParams) -> EquivariantState {
        let phi = grid
            .nodes()
            .iter()
            .map(|&r| rotated_scaled_profile(r, 0.0, params.sigma_in, params.m).unwrap())
            .collect();
        let w = grid.nodes().iter().map(|&r| oseen_w(r, 0.0, params)).collect();
        EquivariantState { phi, w, v_vert: vec![0.0; grid.len()], t: 0.0 }
    }

    #[test]
    fn harmonic_profile_is_steady_without_twist() {
        // Drift of the exact profile comes from the O(h^2) truncation error only.
        let mut drifts = vec![];
        for n in [200usize, 400, 800] {
            let g = make_grid(25.0, n, Grading::GeometricNearAxis).unwrap();
            let mut p = ModelParams::new(3, 1.0);
            p.mu = 0.0;
            let s0 = harmonic_state(&g, &p);
            let mut s = s0.clone();
            for _ in 0..10 {
                s = step_coupled(&s, 1e-3, &p, &g).unwrap();
            }
            drifts.push(s.phi.iter().zip(&s0.phi).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm())));
            assert!(s.max_norm_deviation() < 1e-15);
            assert_eq!(s.phi[0], -Vector3::z());
            assert_eq!(s.w[0], 0.0);
        }
        println!("{drifts:?}");
        assert!(drifts[2] < 2e-4 && drifts[1] / drifts[2] > 3.0, "{drifts:?}");
    }

    #[test]
    fn twist_drives_horizontal_part_down() {
        let g = make_grid(25.0, 400, Grading::GeometricNearAxis).unwrap();
        let p = ModelParams::new(3, 1.0);
        let s0 = harmonic_state(&g, &p);
        let s1 = step_coupled(&s0, 1e-4, &p, &g).unwrap();
        let horiz = |s: &EquivariantState| {
            g.integrate(&s.phi.iter().map(|v| v.x * v.x + v.y * v.y).collect::<Vec<_>>()).unwrap()
        };
        assert!(horiz(&s1) < horiz(&s0));
    }

    #[test]
    fn heat_flow_mode_matches_coupled_without_fluid() {
        let g = make_grid(25.0, 300, Grading::GeometricNearAxis).unwrap();
        let p = ModelParams::new(3, 1.0);
        let s0 = harmonic_state(&g, &p);
        let a = step_coupled(&s0, 1e-3, &p, &g).unwrap();
        let b = step_heat_flow_only(&s0, 1e-3, &p, &g).unwrap();
        let d = a.phi.iter().zip(&b.phi).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(d < 1e-14);
    }

    #[test]
    fn empty_run_has_single_record() {
        let mut c = RunConfig::new(ModelParams::new(3, 1.0));
        c.t_end = 0.0;
        c.grid.n = 200;
        c.grid.r_max = 25.0;
        let t = run_simulation(&c).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.status, RunStatus::Completed);
        assert!((t.records[0].sigma - 0.5).abs() < 1e-10);
    }

    #[test]
    fn self_similar_clock() {
        let p = ModelParams::new(3, 1.3);
        assert!((self_similar_lambda(0.0, &p) - 1.0 / 1.3).abs() < 1e-15);
        assert_eq!(self_similar_time(0.0, &p), 0.0);
        for &t in &[0.1, 1.0, 5.0] {
            let h = 1e-5;
            let ds = (self_similar_time(t + h, &p) - self_similar_time(t - h, &p)) / (2.0 * h);
            let l = self_similar_lambda(t, &p);
            assert!((l * l * ds - 1.0).abs() < 1e-8);
        }
    }
}
