//! Closed-form objects: the harmonic profile, its rotated and scaled family,
//! the Oseen vortex, well-prepared initial data and 3D reconstruction.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;
use crate::interp::Pchip;

/// Physical and initial-data parameters of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub m: i32,
    pub mu: f64,
    pub omega: f64,
    pub r0: f64,
    pub sigma_in: f64,
    pub theta_in: f64,
}

impl ModelParams {
    pub fn new(m: i32, mu: f64) -> Self {
        ModelParams { m, mu, omega: 0.0, r0: 1.0, sigma_in: 0.5, theta_in: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| {
            Err(Error::ConfigValidation { field: field.into(), message: message.into() })
        };
        if self.m.abs() < 3 {
            return bad("m", "|m| must be >= 3");
        }
        if self.m < 0 {
            return bad("m", "negative m is not supported; use m >= 3");
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return bad("mu", "mu must be > 0");
        }
        if !self.omega.is_finite() {
            return bad("omega", "omega must be finite");
        }
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return bad("r0", "r0 must be > 0");
        }
        if !(self.sigma_in > 0.0) || !self.sigma_in.is_finite() {
            return bad("sigma_in", "sigma_in must be > 0");
        }
        if !self.theta_in.is_finite() {
            return bad("theta_in", "theta_in must be finite");
        }
        Ok(())
    }

    /// `m` as a float.
    pub fn mf(&self) -> f64 {
        self.m as f64
    }

    /// Predicted exponential rate `-mu^2 / m^2` of the scale `sigma(t)`.
    pub fn predicted_rate(&self) -> f64 {
        -(self.mu * self.mu) / (self.mf() * self.mf())
    }
}

/// Director profile `phi(r)` with the angular swirl `W(r)` and the vertical
/// velocity `V(r)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivariantState {
    pub phi: Vec<Vector3<f64>>,
    pub w: Vec<f64>,
    pub v_vert: Vec<f64>,
    pub t: f64,
}

impl EquivariantState {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Largest deviation of `|phi|` from one.
    pub fn max_norm_deviation(&self) -> f64 {
        self.phi.iter().fold(0.0, |a, p| a.max((p.norm() - 1.0).abs()))
    }
}

/// `(h1, h3)` of the degree-`m` harmonic profile at `rho`.
pub fn harmonic_profile(rho: f64, m: i32) -> Result<(f64, f64)> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be nonnegative, got {rho}")));
    }
    Ok(h_pair(rho, m))
}

/// Unchecked evaluation, written in terms of `rho^{-|m|}` or `rho^{|m|}` so that
/// it neither overflows nor loses the `h1^2 + h3^2 = 1` identity.
pub(crate) fn h_pair(rho: f64, m: i32) -> (f64, f64) {
    let k = m.unsigned_abs() as i32;
    if rho <= 1.0 {
        let x = rho.powi(k);
        let d = 1.0 + x * x;
        (2.0 * x / d, (x * x - 1.0) / d)
    } else {
        let y = rho.powi(-k);
        let d = 1.0 + y * y;
        (2.0 * y / d, (1.0 - y * y) / d)
    }
}

/// `e^{alpha R} v`: rotation by `alpha` about the `e3` axis.
pub(crate) fn rotate(alpha: f64, v: &Vector3<f64>) -> Vector3<f64> {
    let (s, c) = alpha.sin_cos();
    Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// `h^{alpha,sigma}(r) = e^{alpha R} h(r / sigma)`.
pub fn rotated_scaled_profile(r: f64, alpha: f64, sigma: f64, m: i32) -> Result<Vector3<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if r.is_infinite() && r > 0.0 {
        return Ok(Vector3::z());
    }
    let (h1, h3) = harmonic_profile(r / sigma, m)?;
    Ok(rotate(alpha, &Vector3::new(h1, 0.0, h3)))
}

/// Squared core radius `l(t) = 4t + r0^2` of the Oseen vortex.
pub fn oseen_core(t: f64, params: &ModelParams) -> f64 {
    4.0 * t + params.r0 * params.r0
}

/// Oseen swirl `W^os(r, t) = omega (1 - e^{-r^2 / l(t)})`.
pub fn oseen_w(r: f64, t: f64, params: &ModelParams) -> f64 {
    let l = oseen_core(t, params);
    -params.omega * (-(r * r) / l).exp_m1()
}

/// `d/dr (W^os / r^2)` at `(r, t)`, regular at the axis.
pub fn oseen_w_over_r2_dr(r: f64, t: f64, params: &ModelParams) -> f64 {
    let l = oseen_core(t, params);
    let s = r * r;
    // f(s) = (1 - e^{-s/l}) / s and d/dr = 2 r f'(s).
    let fp = if s < 1e-3 * l {
        -1.0 / (2.0 * l * l) + s / (6.0 * l * l * l) - s * s / (24.0 * l.powi(4))
    } else {
        let e = (-s / l).exp();
        (e / l) / s - (1.0 - e) / (s * s)
    };
    params.omega * 2.0 * r * fp
}

/// `W^os / r^2` with its axis limit `omega / l`.
pub fn oseen_w_over_r2(r: f64, t: f64, params: &ModelParams) -> f64 {
    let l = oseen_core(t, params);
    let s = r * r;
    if s < 1e-8 * l {
        params.omega * (1.0 / l - s / (2.0 * l * l))
    } else {
        -params.omega * (-s / l).exp_m1() / s
    }
}

/// Shape of an admissible test perturbation `z_in`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationKind {
    /// `rho^m e^{-rho^2 / 2}` with a fixed complex phase.
    Bump,
    /// `rho^m` times a Gaussian ring of the given center and width.
    Ring { center: f64, width: f64 },
    /// Random complex combination of `rho^m e^{-rho^2 / s}` profiles.
    Random { seed: u64 },
}

/// Builds `z_in` on the `rho`-grid: a smooth profile vanishing like `rho^m` at
/// the axis, with both components projected orthogonal to `h1` in the
/// discrete `L^2(rho drho)` product, scaled to sup-norm `amplitude`.
pub fn make_test_perturbation(
    kind: PerturbationKind,
    amplitude: f64,
    rho_grid: &RadialGrid,
    m: i32,
) -> Result<Vec<Complex64>> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("amplitude must be nonnegative, got {amplitude}")));
    }
    if amplitude >= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "amplitude {amplitude} violates the sup-norm bound |z_in| < 1/2"
        )));
    }
    let n = rho_grid.len();
    if amplitude == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let k = m.unsigned_abs() as i32;
    let rho = rho_grid.nodes();
    let mut z: Vec<Complex64> = match kind {
        PerturbationKind::Bump => rho
            .iter()
            .map(|&p| Complex64::new(1.0, 0.6) * p.powi(k) * (-0.5 * p * p).exp())
            .collect(),
        PerturbationKind::Ring { center, width } => {
            if !(center > 0.0 && width > 0.0) {
                return Err(Error::InvalidArgument("ring center and width must be positive".into()));
            }
            rho.iter()
                .map(|&p| {
                    let g = (-((p - center) / width).powi(2)).exp();
                    Complex64::new(0.8, -0.5) * (p / center).powi(k) * g
                })
                .collect()
        }
        PerturbationKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scales = [0.5, 1.0, 2.0, 4.0];
            let coef: Vec<Complex64> = scales
                .iter()
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            rho.iter()
                .map(|&p| {
                    let base = p.powi(k);
                    scales
                        .iter()
                        .zip(&coef)
                        .map(|(s, c)| c * base * (-p * p / s).exp() / s.powi(k))
                        .sum()
                })
                .collect()
        }
    };
    project_out_h1(&mut z, rho_grid, m);
    let sup = z.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    if !(sup > 0.0) {
        return Err(Error::InvalidArgument("perturbation vanishes after projection".into()));
    }
    let scale = amplitude / sup;
    for v in &mut z {
        *v *= scale;
    }
    z[0] = Complex64::new(0.0, 0.0);
    Ok(z)
}

/// Removes the `h1` component of `z` in the discrete `L^2(rho drho)` product.
pub(crate) fn project_out_h1(z: &mut [Complex64], rho_grid: &RadialGrid, m: i32) {
    let h1: Vec<f64> = rho_grid.nodes().iter().map(|&p| h_pair(p, m).0).collect();
    let w = rho_grid.weights();
    let hh: f64 = (0..h1.len()).map(|i| w[i] * h1[i] * h1[i]).sum();
    // Two passes clean up the rounding left by the first.
    for _ in 0..2 {
        let c: Complex64 = (0..h1.len()).map(|i| z[i] * (w[i] * h1[i])).sum::<Complex64>() / hh;
        for i in 0..h1.len() {
            z[i] -= c * h1[i];
        }
    }
}

/// Gaussian `A e^{-r^2 / width^2}` scaled to discrete `L^2(r dr)` norm `l2`.
pub fn gaussian_v(grid: &RadialGrid, l2: f64, width: f64) -> Vec<f64> {
    let mut v: Vec<f64> = grid.nodes().iter().map(|r| (-(r / width).powi(2)).exp()).collect();
    let norm = grid.l2_norm(&v);
    for x in &mut v {
        *x *= l2 / norm;
    }
    v
}

/// `B r^2 e^{-r^2 / width^2}` scaled so that `||W* / r||_{L^2(r dr)} = l2`.
pub fn gaussian_w_star(grid: &RadialGrid, l2: f64, width: f64) -> Vec<f64> {
    let mut w: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|r| r * r * (-(r / width).powi(2)).exp())
        .collect();
    let over_r: Vec<f64> = w.iter().zip(grid.nodes()).map(|(v, r)| if *r > 0.0 { v / r } else { 0.0 }).collect();
    let norm = grid.l2_norm(&over_r);
    for x in &mut w {
        *x *= l2 / norm;
    }
    w
}

/// `(1 + gamma) h + z1 e2 + z2 h x e2` for one node, before the rotation `e^{Theta R}`.
pub(crate) fn compose(h1: f64, h3: f64, z: Complex64) -> Vector3<f64> {
    let gamma = (1.0 - z.norm_sqr()).max(0.0).sqrt() - 1.0;
    // h x e2 = (-h3, 0, h1)
    Vector3::new((1.0 + gamma) * h1 - z.im * h3, z.re, (1.0 + gamma) * h3 + z.im * h1)
}

/// Well-prepared initial data: the director `e^{Theta_in R}{(1+gamma) h + z1 e2 + z2 h x e2}`
/// at `rho = r / sigma_in`, the swirl `W^os(., 0) + W*_in` and `V = V_in`.
///
/// `z_in` holds the values at `rho_i = r_i / sigma_in`, i.e. on
/// `grid.scaled(1 / sigma_in)`.
pub fn build_initial_data(
    grid: &RadialGrid,
    params: &ModelParams,
    z_in: &[Complex64],
    w_star_in: &[f64],
    v_in: &[f64],
) -> Result<EquivariantState> {
    params.validate()?;
    let n = grid.len();
    check_len(n, z_in.len())?;
    check_len(n, w_star_in.len())?;
    check_len(n, v_in.len())?;
    if z_in.iter().any(|z| z.norm() > 0.5) {
        return Err(Error::InvalidArgument("z_in exceeds the sup-norm bound 1/2".into()));
    }
    if w_star_in[0] != 0.0 {
        return Err(Error::AxisSingularity { value: w_star_in[0] });
    }
    let mut phi = Vec::with_capacity(n);
    let mut worst = 0.0_f64;
    for (i, &r) in grid.nodes().iter().enumerate() {
        let (h1, h3) = h_pair(r / params.sigma_in, params.m);
        let p = rotate(params.theta_in, &compose(h1, h3, z_in[i]));
        let norm = p.norm();
        worst = worst.max((norm - 1.0).abs());
        phi.push(p / norm);
    }
    if worst > 1e-10 {
        return Err(Error::UnitNormViolation { max_deviation: worst });
    }
    phi[0] = -Vector3::z();
    let w: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(w_star_in)
        .map(|(&r, ws)| oseen_w(r, 0.0, params) + ws)
        .collect();
    Ok(EquivariantState { phi, w, v_vert: v_in.to_vec(), t: 0.0 })
}

/// Velocity `u` and director `phi_3d` at 3D points from the radial profiles.
pub fn reconstruct_3d(
    state: &EquivariantState,
    grid: &RadialGrid,
    params: &ModelParams,
    sample_points: &[[f64; 3]],
) -> Result<Vec<(Vector3<f64>, Vector3<f64>)>> {
    let n = grid.len();
    check_len(n, state.len())?;
    let r = grid.nodes();
    let comps: Vec<Vec<f64>> = (0..3).map(|k| state.phi.iter().map(|p| p[k]).collect()).collect();
    let w_over_r2 = grid.div_r2(&state.w);
    let interp: Vec<Pchip> = comps.iter().map(|c| Pchip::new(r, c)).collect();
    let wi = Pchip::new(r, &w_over_r2);
    let vi = Pchip::new(r, &state.v_vert);
    let mut out = Vec::with_capacity(sample_points.len());
    for p in sample_points {
        let rad = p[0].hypot(p[1]);
        let out_of_domain = || Error::OutOfDomain { radius: rad, r_max: grid.r_max() };
        let v = vi.eval(rad).ok_or_else(out_of_domain)?;
        if rad == 0.0 {
            out.push((Vector3::new(0.0, 0.0, v), -Vector3::z()));
            continue;
        }
        let mut radial = Vector3::zeros();
        for k in 0..3 {
            radial[k] = interp[k].eval(rad).ok_or_else(out_of_domain)?;
        }
        let radial = radial / radial.norm();
        let theta = p[1].atan2(p[0]);
        let director = rotate(params.mu * p[2] + params.mf() * theta, &radial);
        let swirl = wi.eval(rad).ok_or_else(out_of_domain)?;
        let u = Vector3::new(-swirl * p[1], swirl * p[0], v);
        out.push((u, director));
    }
    Ok(out)
}
