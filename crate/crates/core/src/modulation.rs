//! Modulation decomposition `phi = e^{Theta R}{(1+gamma) h + z1 e2 + z2 h x e2}`
//! at `rho = r / sigma`, the linearized operators `L_h`, `L_h*`, `N`, and the
//! source terms `Mod` and `HT` of the `z` equation.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::gauge::split;
use crate::grid::RadialGrid;
use crate::interp::Pchip;
use crate::profiles::{compose, h_pair, rotate, ModelParams};

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_ACCEPT: f64 = 1e-10;
const MAX_NEWTON: usize = 50;
const RESIDUAL_TOL: f64 = 1e-6;

/// Scale, rotation and perturbation of a near-harmonic director.
///
/// `z[j]` and `gamma[j]` are sampled at `rho_grid.nodes()[j]`; frames
/// extracted from a state on an `r`-grid use `rho_grid = grid.scaled(1/sigma)`,
/// so node `j` corresponds to `r_j` exactly.
#[derive(Clone, Debug)]
pub struct ModulationFrame {
    pub sigma: f64,
    pub theta: f64,
    pub rho_grid: RadialGrid,
    pub z: Vec<Complex64>,
    pub gamma: Vec<f64>,
    pub residual: f64,
}

impl ModulationFrame {
    /// A frame with the given perturbation on `grid.scaled(1/sigma)`; `gamma`
    /// is derived from `z` and the residual is zero by construction.
    pub fn new(sigma: f64, theta: f64, grid: &RadialGrid, z: Vec<Complex64>) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        check_len(grid.len(), z.len())?;
        let gamma = z.iter().map(|&v| gamma_of_z(v)).collect::<Result<Vec<_>>>()?;
        Ok(ModulationFrame { sigma, theta, rho_grid: grid.scaled(1.0 / sigma), z, gamma, residual: 0.0 })
    }

    pub fn z_sup(&self) -> f64 {
        self.z.iter().fold(0.0, |a, v| a.max(v.norm()))
    }

    /// `int z h1 rho drho` in the discrete product of the frame's grid.
    pub fn orthogonality(&self, m: i32) -> Complex64 {
        let w = self.rho_grid.weights();
        self.rho_grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, &p)| self.z[j] * (w[j] * h_pair(p, m).0))
            .sum()
    }
}

/// `gamma = sqrt(1 - |z|^2) - 1`, defined for `|z| <= 1/2`.
pub fn gamma_of_z(z: Complex64) -> Result<f64> {
    let a = z.norm_sqr();
    if a > 0.25 * (1.0 + 1e-14) {
        return Err(Error::InvalidArgument(format!("|z| = {} exceeds 1/2", a.sqrt())));
    }
    Ok((1.0 - a).sqrt() - 1.0)
}

/// Director on `grid` from a modulation frame; `z` is interpolated to
/// `rho = r / sigma` and extended by zero beyond the frame's grid.
pub fn synthesize_director(frame: &ModulationFrame, grid: &RadialGrid, m: i32) -> Result<Vec<Vector3<f64>>> {
    if !(frame.sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", frame.sigma)));
    }
    check_len(frame.rho_grid.len(), frame.z.len())?;
    let (re, im) = split(&frame.z);
    let rho = frame.rho_grid.nodes();
    let (pre, pim) = (Pchip::new(rho, &re), Pchip::new(rho, &im));
    let last = rho[rho.len() - 1];
    let mut out = Vec::with_capacity(grid.len());
    for &r in grid.nodes() {
        let mut p = r / frame.sigma;
        // Rounding can push the end node just past the frame's last node.
        if p > last && p <= last * (1.0 + 1e-12) {
            p = last;
        }
        let z = Complex64::new(pre.eval(p).unwrap_or(0.0), pim.eval(p).unwrap_or(0.0));
        gamma_of_z(z)?;
        let (h1, h3) = h_pair(p, m);
        let v = rotate(frame.theta, &compose(h1, h3, z));
        out.push(v / v.norm());
    }
    Ok(out)
}

/// `z` components of `phi` for trial parameters, at the nodes of the r-grid.
fn perturbation(phi: &[Vector3<f64>], r: &[f64], sigma: f64, theta: f64, m: i32) -> Vec<Complex64> {
    phi.iter()
        .zip(r)
        .map(|(p, &ri)| {
            let zeta = rotate(-theta, p);
            let (h1, h3) = h_pair(ri / sigma, m);
            // h x e2 = (-h3, 0, h1)
            Complex64::new(zeta.y, -h3 * zeta.x + h1 * zeta.z)
        })
        .collect()
}

/// Normalized orthogonality defect `int z h1 rho drho / int h1^2 rho drho`
/// on `grid.scaled(1/sigma)`.
fn constraint(phi: &[Vector3<f64>], grid: &RadialGrid, sigma: f64, theta: f64, m: i32) -> Complex64 {
    let r = grid.nodes();
    let w = grid.weights();
    let z = perturbation(phi, r, sigma, theta, m);
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in 0..r.len() {
        let h1 = h_pair(r[j] / sigma, m).0;
        num += z[j] * (w[j] * h1);
        den += w[j] * h1 * h1;
    }
    num / den
}

/// Solves the orthogonality conditions for `(sigma, Theta)` by damped Newton in
/// `(ln sigma, Theta)` with a finite-difference Jacobian, starting at `guess`.
///
/// If Newton fails or lands on a decomposition with `|z| > 1/2`, a coarse
/// search over scales and angles supplies a new starting point.
pub fn extract_modulation(
    phi: &[Vector3<f64>],
    grid: &RadialGrid,
    m: i32,
    guess: (f64, f64),
) -> Result<ModulationFrame> {
    check_len(grid.len(), phi.len())?;
    if !(guess.0 > 0.0) {
        return Err(Error::InvalidArgument(format!("guess sigma must be positive, got {}", guess.0)));
    }
    let first = newton(phi, grid, m, guess.0.ln(), guess.1);
    let attempt = match first {
        Ok((ls, th)) => finish(phi, grid, m, ls.exp(), th),
        Err(e) => Err(e),
    };
    match attempt {
        Ok(frame) => Ok(frame),
        Err(first_err) => {
            let (ls0, th0) = coarse_search(phi, grid, m, guess.0);
            match newton(phi, grid, m, ls0, th0) {
                Ok((ls, th)) => finish(phi, grid, m, ls.exp(), th).map_err(|_| first_err),
                Err(_) => Err(first_err),
            }
        }
    }
}

fn newton(phi: &[Vector3<f64>], grid: &RadialGrid, m: i32, mut ls: f64, mut th: f64) -> Result<(f64, f64)> {
    let f = |ls: f64, th: f64| constraint(phi, grid, ls.exp(), th, m);
    let mut fx = f(ls, th);
    for _ in 0..MAX_NEWTON {
        if fx.norm() < NEWTON_TOL {
            return Ok((ls, th));
        }
        let eps = 1e-7;
        let ds = (f(ls + eps, th) - f(ls - eps, th)) / (2.0 * eps);
        let dt = (f(ls, th + eps) - f(ls, th - eps)) / (2.0 * eps);
        let det = ds.re * dt.im - dt.re * ds.im;
        if det.abs() < 1e-300 || !det.is_finite() {
            break;
        }
        let step_ls = -(dt.im * fx.re - dt.re * fx.im) / det;
        let step_th = -(-ds.im * fx.re + ds.re * fx.im) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (nl, nt) = (ls + lambda * step_ls, th + lambda * step_th);
            let nf = f(nl, nt);
            if nf.norm() < fx.norm() || nf.norm() < NEWTON_TOL {
                ls = nl;
                th = nt;
                fx = nf;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if fx.norm() < NEWTON_ACCEPT {
        Ok((ls, th))
    } else {
        Err(Error::NoConvergence { iterations: MAX_NEWTON, residual: fx.norm() })
    }
}

/// Best `(ln sigma, Theta)` on a coarse lattice by the size of `z`.
fn coarse_search(phi: &[Vector3<f64>], grid: &RadialGrid, m: i32, sigma_hint: f64) -> (f64, f64) {
    let mut best = (f64::INFINITY, sigma_hint.ln(), 0.0);
    for i in -24..=24 {
        let ls = sigma_hint.ln() + 0.125 * i as f64;
        for k in 0..32 {
            let th = -std::f64::consts::PI + std::f64::consts::PI * k as f64 / 16.0;
            let z = perturbation(phi, grid.nodes(), ls.exp(), th, m);
            let size = grid.l2_norm(&z.iter().map(|v| v.norm()).collect::<Vec<_>>());
            if size < best.0 {
                best = (size, ls, th);
            }
        }
    }
    (best.1, best.2)
}

fn finish(phi: &[Vector3<f64>], grid: &RadialGrid, m: i32, sigma: f64, theta: f64) -> Result<ModulationFrame> {
    let r = grid.nodes();
    let z = perturbation(phi, r, sigma, theta, m);
    let sup = z.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    if sup > 0.5 {
        return Err(Error::DecompositionBreakdown(format!("sup |z| = {sup:.3e} exceeds 1/2")));
    }
    let gamma: Vec<f64> = z.iter().map(|v| (1.0 - v.norm_sqr()).sqrt() - 1.0).collect();
    let mut residual = 0.0_f64;
    for j in 0..r.len() {
        let zeta = rotate(-theta, &phi[j]);
        let (h1, h3) = h_pair(r[j] / sigma, m);
        let along = zeta.x * h1 + zeta.z * h3;
        residual = residual.max((along - (1.0 + gamma[j])).abs());
    }
    if residual >= RESIDUAL_TOL {
        return Err(Error::DecompositionBreakdown(format!("consistency residual {residual:.3e}")));
    }
    let theta = (theta + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    Ok(ModulationFrame { sigma, theta, rho_grid: grid.scaled(1.0 / sigma), z, gamma, residual })
}

/// `L_h z = d_rho z + (m/rho) h3 z`, or its `L^2(rho drho)` adjoint
/// `L_h* w = -d_rho w - w/rho + (m/rho) h3 w`.
pub fn apply_lh(z: &[Complex64], rho_grid: &RadialGrid, m: i32, adjoint: bool) -> Result<Vec<Complex64>> {
    check_len(rho_grid.len(), z.len())?;
    let (re, im) = split(z);
    let (dre, dim) = (rho_grid.d1_unchecked(&re), rho_grid.d1_unchecked(&im));
    let (rre, rim) = (rho_grid.div_r(&re), rho_grid.div_r(&im));
    let mf = m as f64;
    Ok((0..z.len())
        .map(|j| {
            let h3 = h_pair(rho_grid.nodes()[j], m).1;
            let d = Complex64::new(dre[j], dim[j]);
            let over = Complex64::new(rre[j], rim[j]);
            if adjoint {
                -d + (mf * h3 - 1.0) * over
            } else {
                d + mf * h3 * over
            }
        })
        .collect())
}

/// `N z = -(z'' + z'/rho + (m^2/rho^2)(2 h1^2 - 1) z)` in direct stencil form.
pub fn apply_n(z: &[Complex64], rho_grid: &RadialGrid, m: i32) -> Result<Vec<Complex64>> {
    check_len(rho_grid.len(), z.len())?;
    let (re, im) = split(z);
    let rho = rho_grid.nodes();
    let mf = m as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
    for j in 1..z.len() {
        let p = rho[j];
        let h1 = h_pair(p, m).0;
        let c = mf * mf / (p * p) * (2.0 * h1 * h1 - 1.0);
        let lre = rho_grid.d2_at(&re, j) + rho_grid.d1_at(&re, j) / p;
        let lim = rho_grid.d2_at(&im, j) + rho_grid.d1_at(&im, j) / p;
        out[j] = -(Complex64::new(lre, lim) + c * z[j]);
    }
    Ok(out)
}

/// The `Mod` and `HT` source terms of the `z` equation on the frame's grid.
///
/// `w` and `v_vert` are sampled at the frame's nodes, i.e. at `r_j = sigma rho_j`;
/// `w` is the full swirl `W^os + W*`. Axis values are set to zero.
pub fn compute_mod_ht(
    frame: &ModulationFrame,
    sigma_dot: f64,
    theta_dot: f64,
    w: &[f64],
    v_vert: &[f64],
    params: &ModelParams,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let g = &frame.rho_grid;
    let n = g.len();
    check_len(n, frame.z.len())?;
    check_len(n, w.len())?;
    check_len(n, v_vert.len())?;
    let m = params.m;
    let mf = params.mf();
    let mu2 = params.mu * params.mu;
    let sigma = frame.sigma;
    let s2 = sigma * sigma;
    let rate = sigma_dot / sigma;
    let (zre, zim) = split(&frame.z);
    let (dz1, dz2) = (g.d1_unchecked(&zre), g.d1_unchecked(&zim));
    let dgamma = g.d1_unchecked(&frame.gamma);
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut md = vec![zero; n];
    let mut ht = vec![zero; n];
    for j in 1..n {
        let p = g.nodes()[j];
        let (h1, h3) = h_pair(p, m);
        let z = frame.z[j];
        let (z1, z2) = (z.re, z.im);
        let gam = frame.gamma[j];
        let r = sigma * p;
        let drive = theta_dot + params.mu * v_vert[j] + mf * w[j] / (r * r);
        let dz = Complex64::new(dz1[j], dz2[j]);
        md[j] = -((1.0 + gam) * h1 + i * h3 * z) * drive
            + rate * (i * (1.0 + gam) * mf * h1 + p * dz)
            + mu2 * (i * (1.0 + gam) * h1 * h3 + i * h1 * h1 * z2 - h3 * h3 * z);
        let a = gam * h1 - z2 * h3;
        let k = mf * h1 / p;
        let quad = z1 * z1 + a * a + 2.0 * h1 * a;
        let grad = (dgamma[j] - k * z2).powi(2)
            + dz1[j] * dz1[j]
            + (dz2[j] + k * gam).powi(2)
            + 2.0 * k * (dz2[j] + k * gam);
        ht[j] = i * (2.0 * k / s2) * dgamma[j]
            + (mf * mf / (p * p * s2) + mu2) * quad * z
            + grad / s2 * z;
    }
    Ok((md, ht))
}
