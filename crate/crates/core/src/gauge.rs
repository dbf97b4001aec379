//! Gauge variables along the director: the parallel frame `e`, the tangent
//! field `q`, the field `v` of direction cosines of `e3`, and the scalar `S`.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::RadialGrid;
use crate::profiles::{oseen_w_over_r2, ModelParams};
use crate::EquivariantState;

/// Tolerance on `| |phi| - 1 |` below which the projected `q` is trusted.
const TANGENCY_TOL: f64 = 1e-8;

/// Frame and gauge fields of one state.
#[derive(Clone, Debug)]
pub struct GaugeFields {
    pub e: Vec<Vector3<f64>>,
    pub q: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub s: Vec<f64>,
}

/// `R v = (-v2, v1, 0)`.
pub(crate) fn r_apply(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-v.y, v.x, 0.0)
}

/// Componentwise `d/dr` of a vector field.
pub(crate) fn vector_derivative(f: &[Vector3<f64>], grid: &RadialGrid) -> Vec<Vector3<f64>> {
    let comps: Vec<Vec<f64>> = (0..3)
        .map(|k| grid.d1_unchecked(&f.iter().map(|p| p[k]).collect::<Vec<_>>()))
        .collect();
    (0..f.len()).map(|i| Vector3::new(comps[0][i], comps[1][i], comps[2][i])).collect()
}

fn check_unit(phi: &[Vector3<f64>]) -> Result<()> {
    let worst = phi.iter().fold(0.0_f64, |a, p| a.max((p.norm() - 1.0).abs()));
    if worst > TANGENCY_TOL {
        return Err(Error::UnitNormViolation { max_deviation: worst });
    }
    Ok(())
}

/// Parallel frame along `phi`: solves `e_r = -<e, phi_r> phi` inward from
/// `e(r_max) = e2` with classical RK4, re-orthonormalizing at every node.
pub fn solve_frame(phi: &[Vector3<f64>], grid: &RadialGrid) -> Result<Vec<Vector3<f64>>> {
    check_len(grid.len(), phi.len())?;
    check_unit(phi)?;
    let n = grid.len();
    let r = grid.nodes();
    let dphi = vector_derivative(phi, grid);
    let rhs = |e: &Vector3<f64>, p: &Vector3<f64>, dp: &Vector3<f64>| -e.dot(dp) * p;
    let mut e = vec![Vector3::zeros(); n];
    e[n - 1] = orthonormalize(&Vector3::y(), &phi[n - 1], n - 1)?;
    for i in (0..n - 1).rev() {
        let h = r[i] - r[i + 1];
        let (pa, pb, da, db) = (phi[i + 1], phi[i], dphi[i + 1], dphi[i]);
        // Cubic Hermite midpoint of phi and its derivative.
        let pm = 0.5 * (pa + pb) + h * (da - db) / 8.0;
        let dm = 1.5 * (pb - pa) / h - 0.25 * (da + db);
        let y = e[i + 1];
        let k1 = rhs(&y, &pa, &da);
        let k2 = rhs(&(y + 0.5 * h * k1), &pm, &dm);
        let k3 = rhs(&(y + 0.5 * h * k2), &pm, &dm);
        let k4 = rhs(&(y + h * k3), &pb, &db);
        let next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        e[i] = orthonormalize(&next, &phi[i], i)?;
    }
    Ok(e)
}

fn orthonormalize(e: &Vector3<f64>, phi: &Vector3<f64>, index: usize) -> Result<Vector3<f64>> {
    let p = e - e.dot(phi) * phi;
    let length = p.norm();
    if length < 1e-8 {
        return Err(Error::DegenerateFrame { index, length });
    }
    Ok(p / length)
}

/// `q = q1 + i q2`, the frame components of `d_r phi - (m/r) phi x R phi`.
///
/// The derivative is projected onto the tangent plane of `phi` before taking
/// components; the discrete derivative of a unit field is tangent only up to
/// the stencil error. The axis value is the regularity limit `q(0) = 0`.
pub fn compute_q(
    phi: &[Vector3<f64>],
    e: &[Vector3<f64>],
    grid: &RadialGrid,
    m: i32,
) -> Result<Vec<Complex64>> {
    check_len(grid.len(), phi.len())?;
    check_len(grid.len(), e.len())?;
    if let Some((index, p)) = phi
        .iter()
        .enumerate()
        .find(|(_, p)| (p.norm() - 1.0).abs() > TANGENCY_TOL)
    {
        return Err(Error::TangencyViolation { index, value: p.norm() - 1.0 });
    }
    let dphi = vector_derivative(phi, grid);
    let r = grid.nodes();
    let mf = m as f64;
    let mut q = Vec::with_capacity(phi.len());
    q.push(Complex64::new(0.0, 0.0));
    for i in 1..phi.len() {
        let p = &phi[i];
        let tangent = dphi[i] - dphi[i].dot(p) * p;
        let qv = tangent - (mf / r[i]) * p.cross(&r_apply(p));
        let f = p.cross(&e[i]);
        q.push(Complex64::new(qv.dot(&e[i]), qv.dot(&f)));
    }
    Ok(q)
}

/// `v1 = <e3, e>`, `v2 = <e3, phi x e>`.
pub fn compute_v(phi: &[Vector3<f64>], e: &[Vector3<f64>]) -> Result<Vec<Complex64>> {
    check_len(phi.len(), e.len())?;
    Ok(phi
        .iter()
        .zip(e)
        .map(|(p, ei)| Complex64::new(ei.z, p.cross(ei).z))
        .collect())
}

/// `L_m q = d_r q + q / r - m phi3 q / r`, with the axis value from the limit.
pub fn apply_lm(q: &[Complex64], phi3: &[f64], grid: &RadialGrid, m: i32) -> Result<Vec<Complex64>> {
    check_len(grid.len(), q.len())?;
    check_len(grid.len(), phi3.len())?;
    let (re, im) = split(q);
    let (dre, dim) = (grid.d1_unchecked(&re), grid.d1_unchecked(&im));
    let (qre_r, qim_r) = (grid.div_r(&re), grid.div_r(&im));
    let mf = m as f64;
    Ok((0..q.len())
        .map(|i| {
            let c = 1.0 - mf * phi3[i];
            Complex64::new(dre[i] + c * qre_r[i], dim[i] + c * qim_r[i])
        })
        .collect())
}

pub(crate) fn split(z: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

/// Real inner product `<a, b> = Re(a conj(b))` of complex numbers seen as 2-vectors.
pub(crate) fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// `S(r) = int_r^{r_max} <L_m q + mu^2 v phi3 + i v (m W / tau^2 + mu V), i (q + m v / tau)> dtau`
/// by backward cumulative trapezoid in `dtau`.
pub fn compute_s(
    q: &[Complex64],
    v: &[Complex64],
    state: &EquivariantState,
    params: &ModelParams,
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    let n = grid.len();
    check_len(n, q.len())?;
    check_len(n, v.len())?;
    check_len(n, state.len())?;
    check_len(n, state.w.len())?;
    check_len(n, state.v_vert.len())?;
    let phi3: Vec<f64> = state.phi.iter().map(|p| p.z).collect();
    let lq = apply_lm(q, &phi3, grid, params.m)?;
    let (vre, vim) = split(v);
    let (vre_r, vim_r) = (grid.div_r(&vre), grid.div_r(&vim));
    let mut w_r2 = grid.div_r2(&state.w);
    // The Oseen part is known in closed form, including its axis limit.
    let r = grid.nodes();
    w_r2[0] = oseen_w_over_r2(0.0, state.t, params) + {
        let star: Vec<f64> = (0..n)
            .map(|i| state.w[i] - crate::profiles::oseen_w(r[i], state.t, params))
            .collect();
        grid.div_r2(&star)[0]
    };
    let mf = params.mf();
    let mu = params.mu;
    let i_unit = Complex64::new(0.0, 1.0);
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let a = lq[i]
                + v[i] * (mu * mu * phi3[i])
                + i_unit * v[i] * (mf * w_r2[i] + mu * state.v_vert[i]);
            let b = i_unit * (q[i] + mf * Complex64::new(vre_r[i], vim_r[i]));
            dot(a, b)
        })
        .collect();
    Ok(backward_cumulative(&integrand, r))
}

/// `out[i] = int_{r_i}^{r_last} f dr` by the trapezoid rule.
pub(crate) fn backward_cumulative(f: &[f64], r: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * (r[i + 1] - r[i]) * (f[i] + f[i + 1]);
    }
    out
}

/// All gauge fields of a state.
pub fn compute_gauge(state: &EquivariantState, params: &ModelParams, grid: &RadialGrid) -> Result<GaugeFields> {
    let e = solve_frame(&state.phi, grid)?;
    let q = compute_q(&state.phi, &e, grid, params.m)?;
    let v = compute_v(&state.phi, &e)?;
    let s = compute_s(&q, &v, state, params, grid)?;
    Ok(GaugeFields { e, q, v, s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Grading};
    use crate::profiles::{rotated_scaled_profile, rotate};

    fn profile(grid: &RadialGrid, alpha: f64, sigma: f64) -> Vec<Vector3<f64>> {
        grid.nodes()
            .iter()
            .map(|&r| rotated_scaled_profile(r, alpha, sigma, 3).unwrap())
            .collect()
    }

    #[test]
    fn frame_of_harmonic_profile_is_e2() {
        let g = make_grid(25.0, 300, Grading::GeometricNearAxis).unwrap();
        let phi = profile(&g, 0.0, 0.5);
        let e = solve_frame(&phi, &g).unwrap();
        for ei in &e {
            assert!((ei - Vector3::y()).norm() < 1e-12);
        }
        let v = compute_v(&phi, &e).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            let h1 = crate::profiles::h_pair(r / 0.5, 3).0;
            assert!(v[i].re.abs() < 1e-12 && (v[i].im - h1).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_invariants_for_rotated_profile() {
        let g = make_grid(25.0, 300, Grading::GeometricNearAxis).unwrap();
        let phi = profile(&g, 0.8, 0.7);
        let e = solve_frame(&phi, &g).unwrap();
        for (p, ei) in phi.iter().zip(&e) {
            assert!(ei.dot(p).abs() < 1e-10);
            assert!((ei.norm() - 1.0).abs() < 1e-10);
        }
        assert!((e[g.len() - 1] - Vector3::y()).norm() < 1e-4);
        // The component along e^{alpha R} e2 is transported unchanged.
        let fixed = rotate(0.8, &Vector3::y());
        for ei in &e {
            assert!((ei.dot(&fixed) - 0.8f64.cos()).abs() < 1e-6);
        }
    }

    #[test]
    fn q_vanishes_for_constant_north_pole() {
        let g = make_grid(5.0, 64, Grading::Uniform).unwrap();
        let phi = vec![Vector3::z(); g.len()];
        let e = vec![Vector3::y(); g.len()];
        let q = compute_q(&phi, &e, &g, 3).unwrap();
        assert!(q.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn q_rejects_non_unit_director() {
        let g = make_grid(5.0, 64, Grading::Uniform).unwrap();
        let mut phi = vec![Vector3::z(); g.len()];
        phi[10] *= 1.01;
        let e = vec![Vector3::y(); g.len()];
        assert!(matches!(compute_q(&phi, &e, &g, 3), Err(Error::TangencyViolation { index: 10, .. })));
    }

    #[test]
    fn s_of_zero_fields_and_cumulative_oracle() {
        let g = make_grid(10.0, 128, Grading::GeometricNearAxis).unwrap();
        let n = g.len();
        let p = ModelParams::new(3, 1.0);
        let st = EquivariantState {
            phi: vec![Vector3::z(); n],
            w: vec![0.0; n],
            v_vert: vec![0.0; n],
            t: 0.0,
        };
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let s = compute_s(&zero, &zero, &st, &p, &g).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
        let f: Vec<f64> = g.nodes().iter().map(|r| (-r).exp()).collect();
        let c = backward_cumulative(&f, g.nodes());
        for (i, r) in g.nodes().iter().enumerate() {
            let exact = (-r).exp() - (-10.0f64).exp();
            assert!((c[i] - exact).abs() < 2e-3, "{i}");
        }
        assert_eq!(c[n - 1], 0.0);
    }
}
