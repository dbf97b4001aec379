//! Quantitative checks: energies and the energy identity, the X-norm,
//! coercivity spectra, rate fits, decay-bound verdicts and the bootstrap
//! assumptions.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::gauge::{apply_lm, compute_gauge, dot, GaugeFields};
use crate::grid::RadialGrid;
use crate::modulation::{apply_lh, apply_n, compute_mod_ht, synthesize_director, ModulationFrame};
use crate::profiles::{h_pair, oseen_w, oseen_w_over_r2_dr, ModelParams};
use crate::EquivariantState;

/// Per-output-time diagnostics of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub sigma: f64,
    pub theta: f64,
    pub x_norm_z: f64,
    /// `sigma ||z||_{L^2(rho drho)}`, the `L^2(r dr)` norm of `z(r / sigma)`.
    pub l2_z: f64,
    pub energy_e: f64,
    pub energy_estar: f64,
    pub dissipation: f64,
    pub oseen_forcing: f64,
    /// Centered residual of the energy identity; NaN at the first and last record.
    pub energy_identity_residual: f64,
    pub v_l2: f64,
    pub v1_sup: f64,
    pub v2_l2: f64,
    pub wstar_over_r_l2: f64,
    pub wstar1_over_r2_sup: f64,
    pub wstar2_over_r_l2: f64,
    pub weighted_z_accumulator: f64,
    pub bootstrap_a1_ok: bool,
    pub bootstrap_a2_ok: bool,
}

/// Energy terms of one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub e: f64,
    pub e_star: f64,
    pub dissipation: f64,
    pub forcing: f64,
}

/// `W* = W - W^os(t)`.
pub(crate) fn w_star(state: &EquivariantState, params: &ModelParams, grid: &RadialGrid) -> Vec<f64> {
    grid.nodes()
        .iter()
        .zip(&state.w)
        .map(|(&r, w)| w - oseen_w(r, state.t, params))
        .collect()
}

/// `E*`, `E = E* + mu^2 int |v|^2`, the dissipation and the Oseen forcing,
/// all against `r dr`.
pub fn energy_report(
    state: &EquivariantState,
    gauge: &GaugeFields,
    params: &ModelParams,
    grid: &RadialGrid,
) -> Result<EnergyReport> {
    let n = grid.len();
    check_len(n, state.len())?;
    check_len(n, gauge.q.len())?;
    check_len(n, gauge.v.len())?;
    let ws = w_star(state, params, grid);
    let ws_r = grid.div_r(&ws);
    let dws = grid.d1_unchecked(&ws);
    let dws_r = grid.div_r(&dws);
    let dv = grid.d1_unchecked(&state.v_vert);
    let phi3: Vec<f64> = state.phi.iter().map(|p| p.z).collect();
    let lq = apply_lm(&gauge.q, &phi3, grid, params.m)?;
    let mu2 = params.mu * params.mu;
    let i = Complex64::new(0.0, 1.0);
    let r = grid.nodes();
    let mut e_star = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    let mut diss = vec![0.0; n];
    let mut force = vec![0.0; n];
    for j in 0..n {
        e_star[j] = gauge.q[j].norm_sqr() + state.v_vert[j].powi(2) + ws_r[j].powi(2);
        v2[j] = gauge.v[j].norm_sqr();
        diss[j] = (lq[j] + gauge.v[j] * (mu2 * phi3[j])).norm_sqr() + dv[j].powi(2) + dws_r[j].powi(2);
        force[j] = oseen_w_over_r2_dr(r[j], state.t, params) * dot(gauge.q[j], i * gauge.v[j]);
    }
    let e_star = grid.integrate_unchecked(&e_star);
    Ok(EnergyReport {
        e: e_star + mu2 * grid.integrate_unchecked(&v2),
        e_star,
        dissipation: grid.integrate_unchecked(&diss),
        forcing: params.mf() * grid.integrate_unchecked(&force),
    })
}

/// Centered residual of `(1/2) dE/dt + dissipation = forcing` at the middle
/// record of a window of three equally spaced records.
pub fn energy_identity_residual(window: &[DiagnosticsRecord]) -> Result<f64> {
    if window.len() < 3 {
        return Err(Error::InsufficientWindow { needed: 3, found: window.len() });
    }
    let (a, b, c) = (&window[0], &window[1], &window[2]);
    let (d1, d2) = (b.t - a.t, c.t - b.t);
    if !(d1 > 0.0) || (d1 - d2).abs() > 1e-9 * d1.max(d2) {
        return Err(Error::InvalidArgument(format!("non-uniform window spacing {d1} vs {d2}")));
    }
    Ok(energy_residual_terms(a.energy_e, c.energy_e, d1, b.dissipation, b.oseen_forcing))
}

pub(crate) fn energy_residual_terms(e_prev: f64, e_next: f64, spacing: f64, diss: f64, forcing: f64) -> f64 {
    (0.5 * (e_next - e_prev) / (2.0 * spacing) + diss - forcing).abs()
}

/// `||z||_X = sqrt(int (|z'|^2 + |z|^2 / rho^2) rho drho)`.
///
/// On the first cell `z` is taken linear, so the axis value of `|z|^2/rho^2`
/// is `|z_1 / rho_1|^2`.
pub fn x_norm(z: &[Complex64], rho_grid: &RadialGrid) -> Result<f64> {
    check_len(rho_grid.len(), z.len())?;
    let scale = z.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    if z[0].norm() > 1e-12 * scale.max(1e-300) && z[0].norm() > 0.0 {
        return Err(Error::AxisSingularity { value: z[0].norm() });
    }
    Ok(x_norm_unchecked(z, rho_grid))
}

pub(crate) fn x_norm_unchecked(z: &[Complex64], g: &RadialGrid) -> f64 {
    let rho = g.nodes();
    let (re, im): (Vec<f64>, Vec<f64>) = z.iter().map(|c| (c.re, c.im)).unzip();
    let (dre, dim) = (g.d1_unchecked(&re), g.d1_unchecked(&im));
    let mut f = vec![0.0; z.len()];
    for j in 0..z.len() {
        let over = if j == 0 { (z[1] / rho[1]).norm_sqr() } else { (z[j] / rho[j]).norm_sqr() };
        f[j] = dre[j] * dre[j] + dim[j] * dim[j] + over;
    }
    g.integrate_unchecked(&f).sqrt()
}

/// Which quadratic form [`coercivity_spectrum`] minimizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoercivityOperator {
    /// `int |L_h z|^2 / ||z||_X^2`, with or without the constraint `z ⊥ h1`.
    Lh { constrained: bool },
    /// `int (|q_r|^2 + |q|^2/r^2) / int |L_m q|^2` over `q` fields of small-z
    /// states; reports the maximum over the family.
    LmContext { family_size: usize, x_norm: f64 },
}

/// Result of a coercivity computation.
#[derive(Clone, Debug)]
pub struct CoercivityResult {
    /// Smallest Rayleigh quotient (or the largest ratio for `LmContext`).
    pub value: f64,
    /// Minimizing direction on the grid nodes (empty for `LmContext`).
    pub eigenvector: Vec<f64>,
    /// `|cos|` of the angle between the minimizer and `h1` in the X inner product.
    pub h1_alignment: f64,
}

/// Coercivity constants on a `rho`-grid (see [`CoercivityOperator`]).
pub fn coercivity_spectrum(grid: &RadialGrid, m: i32, operator: CoercivityOperator) -> Result<CoercivityResult> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("coercivity requires m >= 3, got {m}")));
    }
    match operator {
        CoercivityOperator::Lh { constrained } => lh_spectrum(grid, m, constrained, false),
        CoercivityOperator::LmContext { family_size, x_norm } => lm_context(grid, m, family_size, x_norm),
    }
}

/// Dense matrices of the `L_h` energy and the X-norm Gram form on the
/// unknowns `z_1..z_{n-2}` (`z_0 = z_{n-1} = 0`).
fn lh_forms(grid: &RadialGrid, m: i32, flip_sign: bool) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = grid.len();
    let k = n - 2;
    let w = grid.weights();
    let rho = grid.nodes();
    // Columns: images of unit vectors.
    let mut l = DMatrix::<f64>::zeros(n, k);
    let mut d = DMatrix::<f64>::zeros(n, k);
    for c in 0..k {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[c + 1] = Complex64::new(1.0, 0.0);
        let img = if flip_sign { mutant_lh(&e, grid, m) } else { apply_lh(&e, grid, m, false)? };
        let (re, _): (Vec<f64>, Vec<f64>) = e.iter().map(|v| (v.re, v.im)).unzip();
        let de = grid.d1_unchecked(&re);
        for j in 0..n {
            l[(j, c)] = img[j].re;
            d[(j, c)] = de[j];
        }
    }
    let wl = DMatrix::from_fn(n, k, |j, c| w[j] * l[(j, c)]);
    let a = l.transpose() * wl;
    let wd = DMatrix::from_fn(n, k, |j, c| w[j] * d[(j, c)]);
    let mut b = d.transpose() * wd;
    for c in 0..k {
        let j = c + 1;
        b[(c, c)] += w[j] / (rho[j] * rho[j]);
    }
    b[(0, 0)] += w[0] / (rho[1] * rho[1]);
    Ok((a, b))
}

/// `L_h` with the sign of the potential term flipped: `d_rho z - (m/rho) h3 z`.
/// Used as a mutation check of the kernel test.
pub(crate) fn mutant_lh(z: &[Complex64], grid: &RadialGrid, m: i32) -> Vec<Complex64> {
    let mut out = apply_lh(z, grid, m, false).expect("sizes match");
    let over = grid.div_r(&z.iter().map(|v| v.re).collect::<Vec<_>>());
    for j in 0..z.len() {
        let h3 = h_pair(grid.nodes()[j], m).1;
        out[j] -= Complex64::new(2.0 * m as f64 * h3 * over[j], 0.0);
    }
    out
}

/// Smallest Rayleigh quotient of the unconstrained `L_h` energy when the
/// sign of its potential term is flipped. Its minimizer is not aligned with `h1`,
/// so a kernel check on the alignment must fail on it.
pub fn mutated_lh_minimum(grid: &RadialGrid, m: i32) -> Result<CoercivityResult> {
    lh_spectrum(grid, m, false, true)
}

fn lh_spectrum(grid: &RadialGrid, m: i32, constrained: bool, flip_sign: bool) -> Result<CoercivityResult> {
    let n = grid.len();
    let (a, b) = lh_forms(grid, m, flip_sign)?;
    let k = n - 2;
    // Basis of the admissible subspace: z = P y.
    let p = if constrained {
        let c: Vec<f64> = (1..n - 1).map(|j| grid.weights()[j] * h_pair(grid.nodes()[j], m).0).collect();
        let piv = (0..k).max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs())).unwrap_or(0);
        let mut p = DMatrix::<f64>::zeros(k, k - 1);
        let mut col = 0;
        for j in 0..k {
            if j == piv {
                continue;
            }
            p[(j, col)] = 1.0;
            p[(piv, col)] = -c[j] / c[piv];
            col += 1;
        }
        p
    } else {
        DMatrix::<f64>::identity(k, k)
    };
    let ar = p.transpose() * &a * &p;
    let br = p.transpose() * &b * &p;
    let chol = br
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigensolverFailure("X-norm Gram matrix is not positive definite".into()))?;
    let lmat = chol.l();
    let linv = lmat
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EigensolverFailure("singular Cholesky factor".into()))?;
    let c = &linv * ar * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::try_new(c, 1e-13, 10_000)
        .ok_or_else(|| Error::EigensolverFailure("symmetric eigensolver did not converge".into()))?;
    let (imin, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::EigensolverFailure("empty spectrum".into()))?;
    let y = linv.transpose() * eig.eigenvectors.column(imin);
    let zint = &p * y;
    let mut v = vec![0.0; n];
    for j in 0..k {
        v[j + 1] = zint[j];
    }
    let h1: Vec<f64> = (0..n)
        .map(|j| if j == 0 || j == n - 1 { 0.0 } else { h_pair(grid.nodes()[j], m).0 })
        .collect();
    let hv = DMatrix::from_fn(k, 1, |j, _| h1[j + 1]);
    let vv = DMatrix::from_fn(k, 1, |j, _| v[j + 1]);
    let hb = (hv.transpose() * &b * &vv)[(0, 0)];
    let hh = (hv.transpose() * &b * &hv)[(0, 0)];
    let vbv = (vv.transpose() * &b * &vv)[(0, 0)];
    let h1_alignment = hb.abs() / (hh * vbv).sqrt();
    Ok(CoercivityResult { value, eigenvector: v, h1_alignment })
}

fn lm_context(grid: &RadialGrid, m: i32, family_size: usize, target_x: f64) -> Result<CoercivityResult> {
    use crate::profiles::{make_test_perturbation, PerturbationKind};
    let mut worst = 0.0_f64;
    for k in 0..family_size.max(1) {
        let kind = PerturbationKind::Random { seed: 1000 + k as u64 };
        let sigma = 1.0;
        let rho = grid.scaled(1.0 / sigma);
        let mut z = make_test_perturbation(kind, 0.01, &rho, m)?;
        let x = x_norm_unchecked(&z, &rho);
        for v in &mut z {
            *v *= target_x / x;
        }
        let frame = ModulationFrame::new(sigma, 0.1 * k as f64, grid, z)?;
        let phi = synthesize_director(&frame, grid, m)?;
        let state = EquivariantState {
            phi,
            w: vec![0.0; grid.len()],
            v_vert: vec![0.0; grid.len()],
            t: 0.0,
        };
        let params = ModelParams { m, ..ModelParams::new(m, 1.0) };
        let g = compute_gauge(&state, &params, grid)?;
        let phi3: Vec<f64> = state.phi.iter().map(|p| p.z).collect();
        let lq = apply_lm(&g.q, &phi3, grid, m)?;
        let num = x_norm_unchecked(&g.q, grid).powi(2);
        let den = grid.integrate_unchecked(&lq.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>());
        worst = worst.max(num / den);
    }
    Ok(CoercivityResult { value: worst, eigenvector: Vec::new(), h1_alignment: f64::NAN })
}

/// `||q||_{L^2(r dr)} / ||z||_X` for the director synthesized from `frame`.
pub fn norm_equivalence_ratio(frame: &ModulationFrame, grid: &RadialGrid, params: &ModelParams) -> Result<f64> {
    let phi = synthesize_director(frame, grid, params.m)?;
    let state = EquivariantState { phi, w: vec![0.0; grid.len()], v_vert: vec![0.0; grid.len()], t: 0.0 };
    let g = compute_gauge(&state, params, grid)?;
    let q = grid.l2_norm(&g.q.iter().map(|v| v.norm()).collect::<Vec<_>>());
    Ok(q / x_norm(&frame.z, &frame.rho_grid)?)
}

/// Least-squares fit of `ln(value) = a + rate t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Exponential rate of `series` over `t_lo <= t <= t_hi`.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12)
        .collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientSamples { needed: 10, found: pts.len() });
    }
    for (i, (_, v)) in pts.iter().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::NonpositiveValue { index: i, value: *v });
        }
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let (dx, dy) = (t - mt, v.ln() - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mt;
    let ss_res: f64 = pts.iter().map(|(t, v)| (v.ln() - intercept - rate * t).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit { rate, intercept, r_squared, samples: pts.len() })
}

/// Verdict of [`decay_bound_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayVerdict {
    /// Smallest `C` with `value <= C base^exponent` over the whole series.
    pub c_min: f64,
    pub c_first_half: f64,
    pub c_second_half: f64,
    pub pass: bool,
}

/// Smallest constant `C` with `value <= C (1+t)^exponent` (or `C t^exponent`
/// without offset); passes when the constant needed on the second half of the
/// series does not exceed the one needed on the first half.
pub fn decay_bound_check(series: &[(f64, f64)], exponent: f64, offset: bool) -> Result<DecayVerdict> {
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| offset || *t > 0.0).collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientSamples { needed: 4, found: pts.len() });
    }
    if let Some((i, (_, v))) = pts.iter().enumerate().find(|(_, (_, v))| !(*v >= 0.0)) {
        return Err(Error::NonpositiveValue { index: i, value: *v });
    }
    let c: Vec<f64> = pts
        .iter()
        .map(|(t, v)| {
            let base = if offset { 1.0 + t } else { *t };
            v / base.powf(exponent)
        })
        .collect();
    let (t0, t1) = (pts[0].0, pts[pts.len() - 1].0);
    let mid = 0.5 * (t0 + t1);
    let max_where = |f: &dyn Fn(f64) -> bool| {
        pts.iter().zip(&c).filter(|((t, _), _)| f(*t)).fold(0.0_f64, |a, (_, c)| a.max(*c))
    };
    let c_first_half = max_where(&|t| t <= mid);
    let c_second_half = max_where(&|t| t > mid);
    Ok(DecayVerdict {
        c_min: c_first_half.max(c_second_half),
        c_first_half,
        c_second_half,
        pass: c_second_half <= c_first_half * (1.0 + 1e-9),
    })
}

/// Bootstrap assumptions: (A.1) `sigma` within `(1 ± eps/2) e^{-mu^2 t / m^2} sigma_in`,
/// (A.2) `int V2^2 <= eps_star^{3/2} (1+t)^{-2}`.
pub fn bootstrap_assumption_check(
    record: &DiagnosticsRecord,
    params: &ModelParams,
    epsilon: f64,
    epsilon_star: f64,
) -> (bool, bool) {
    let center = (params.predicted_rate() * record.t).exp() * params.sigma_in;
    let a1 = record.sigma >= (1.0 - 0.5 * epsilon) * center && record.sigma <= (1.0 + 0.5 * epsilon) * center;
    let a2 = record.v2_l2.powi(2) <= epsilon_star.powf(1.5) / (1.0 + record.t).powi(2);
    (a1, a2)
}

/// One sample of a run used by [`z_equation_residual`].
#[derive(Clone, Copy, Debug)]
pub struct Snapshot<'a> {
    pub state: &'a EquivariantState,
    pub frame: &'a ModulationFrame,
}

/// `||d_t z + sigma^{-2} N z - Mod - HT||_{L^2(rho drho)}` at the middle of three
/// equally spaced snapshots, with all time derivatives by centered differences.
///
/// The frames live on `grid.scaled(1/sigma(t))`, so node `j` of each frame sits
/// at `rho_j(t) = r_j / sigma(t)`; the derivative at fixed `rho` is recovered as
/// `d/dt z_j + (sigma'/sigma) rho_j d_rho z_j`.
pub fn z_equation_residual(window: [Snapshot<'_>; 3], grid: &RadialGrid, params: &ModelParams) -> Result<f64> {
    let [a, b, c] = window;
    let n = grid.len();
    for s in &window {
        check_len(n, s.state.len())?;
        check_len(n, s.frame.z.len())?;
    }
    let spacing = b.state.t - a.state.t;
    if !(spacing > 0.0) || (c.state.t - b.state.t - spacing).abs() > 1e-9 * spacing {
        return Err(Error::InvalidArgument("snapshots must be equally spaced".into()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let dtheta = (c.frame.theta - a.frame.theta + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    let theta_dot = dtheta / (2.0 * spacing);
    let sigma_dot = (c.frame.sigma - a.frame.sigma) / (2.0 * spacing);
    let f = b.frame;
    let rg = &f.rho_grid;
    let (mdv, ht) = compute_mod_ht(f, sigma_dot, theta_dot, &b.state.w, &b.state.v_vert, params)?;
    let nz = apply_n(&f.z, rg, params.m)?;
    let (re, im): (Vec<f64>, Vec<f64>) = f.z.iter().map(|v| (v.re, v.im)).unzip();
    let (dre, dim) = (rg.d1_unchecked(&re), rg.d1_unchecked(&im));
    let s2 = f.sigma * f.sigma;
    let mut res = vec![0.0; n];
    for j in 1..n {
        let dz_node = (c.frame.z[j] - a.frame.z[j]) / (2.0 * spacing);
        let dz = dz_node + (sigma_dot / f.sigma) * rg.nodes()[j] * Complex64::new(dre[j], dim[j]);
        res[j] = (dz + nz[j] / s2 - mdv[j] - ht[j]).norm();
    }
    Ok(rg.l2_norm(&res))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grading};
    use crate::profiles::rotated_scaled_profile;

    #[test]
    fn rate_fit_of_exact_exponential() {
        let s: Vec<(f64, f64)> = (0..40).map(|i| (0.1 * i as f64, (-(0.1 * i as f64) / 9.0).exp())).collect();
        let f = fit_exponential_rate(&s, (0.0, 4.0)).unwrap();
        assert!((f.rate + 1.0 / 9.0).abs() < 1e-14 && (f.r_squared - 1.0).abs() < 1e-12);
        let c: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 2.0)).collect();
        assert_eq!(fit_exponential_rate(&c, (0.0, 100.0)).unwrap().rate, 0.0);
        assert!(matches!(fit_exponential_rate(&s[..5], (0.0, 4.0)), Err(Error::InsufficientSamples { .. })));
        let mut bad = s.clone();
        bad[3].1 = -1.0;
        assert!(matches!(fit_exponential_rate(&bad, (0.0, 4.0)), Err(Error::NonpositiveValue { .. })));
    }

    #[test]
    fn decay_verdicts() {
        let s: Vec<(f64, f64)> = (0..50).map(|i| (0.2 * i as f64, 1.0 / (1.0 + 0.2 * i as f64))).collect();
        let v = decay_bound_check(&s, -1.0, true).unwrap();
        assert!((v.c_min - 1.0).abs() < 1e-12 && v.pass);
        let s: Vec<(f64, f64)> = (0..50).map(|i| (0.2 * i as f64, (1.0 + 0.2 * i as f64).powf(-0.5))).collect();
        assert!(!decay_bound_check(&s, -1.0, true).unwrap().pass);
    }

    #[test]
    fn bootstrap_bands() {
        let p = ModelParams::new(3, 1.0);
        let mut rec = blank_record();
        rec.sigma = p.sigma_in;
        assert_eq!(bootstrap_assumption_check(&rec, &p, 0.1, 0.1), (true, true));
        rec.t = 1.0;
        rec.sigma = 2.0 * (-1.0f64 / 9.0).exp() * p.sigma_in;
        assert!(!bootstrap_assumption_check(&rec, &p, 0.1, 0.1).0);
    }

    fn blank_record() -> DiagnosticsRecord {
        DiagnosticsRecord {
            t: 0.0, sigma: 0.0, theta: 0.0, x_norm_z: 0.0, l2_z: 0.0, energy_e: 0.0, energy_estar: 0.0,
            dissipation: 0.0, oseen_forcing: 0.0, energy_identity_residual: f64::NAN, v_l2: 0.0, v1_sup: 0.0,
            v2_l2: 0.0, wstar_over_r_l2: 0.0, wstar1_over_r2_sup: 0.0, wstar2_over_r_l2: 0.0,
            weighted_z_accumulator: 0.0, bootstrap_a1_ok: true, bootstrap_a2_ok: true,
        }
    }

    #[test]
    fn static_window_has_zero_residual() {
        let mut recs = vec![blank_record(), blank_record(), blank_record()];
        for (i, r) in recs.iter_mut().enumerate() {
            r.t = i as f64 * 0.1;
            r.energy_e = 0.25;
        }
        assert_eq!(energy_identity_residual(&recs).unwrap(), 0.0);
        assert!(matches!(energy_identity_residual(&recs[..2]), Err(Error::InsufficientWindow { .. })));
    }

    #[test]
    fn energy_of_harmonic_profile() {
        let g = make_grid(50.0, 1024, Grading::GeometricNearAxis).unwrap();
        let p = ModelParams::new(3, 1.0);
        let sigma = 0.5;
        let phi: Vec<_> = g.nodes().iter().map(|&r| rotated_scaled_profile(r, 0.0, sigma, 3).unwrap()).collect();
        let st = EquivariantState { phi, w: vec![0.0; g.len()], v_vert: vec![0.0; g.len()], t: 0.0 };
        let gauge = compute_gauge(&st, &p, &g).unwrap();
        let e = energy_report(&st, &gauge, &p, &g).unwrap();
        let i2 = 2.0 * std::f64::consts::PI / (9.0 * (std::f64::consts::PI / 3.0).sin());
        assert!(e.e_star < 1e-5, "{}", e.e_star);
        assert!((e.e - e.e_star - sigma * sigma * i2).abs() < 1e-4);
        assert_eq!(e.forcing, 0.0);
    }

    #[test]
    fn x_norm_oracle() {
        // z = rho e^{-rho^2}: int (|z'|^2 + |z|^2/rho^2) rho drho = 1/2 (closed form)
        let g = make_grid(12.0, 800, Grading::GeometricNearAxis).unwrap();
        let z: Vec<Complex64> = g.nodes().iter().map(|&p| Complex64::new(p * (-p * p).exp(), 0.0)).collect();
        let x = x_norm(&z, &g).unwrap();
        assert!((x * x - 0.5).abs() < 1e-3, "{}", x * x);
        assert_eq!(x_norm(&vec![Complex64::new(0.0, 0.0); g.len()], &g).unwrap(), 0.0);
        let mut bad = z.clone();
        bad[0] = Complex64::new(0.1, 0.0);
        assert!(matches!(x_norm(&bad, &g), Err(Error::AxisSingularity { .. })));
    }
}
