//! Radial geometry: node placement, quadrature against `r dr`, and finite
//! difference operators that stay regular at the axis `r = 0`.
//!
//! All integrals in this crate are taken against the planar measure `r dr`
//! (or `rho drho` on a rescaled grid). The quadrature weights stored in a
//! [`RadialGrid`] already contain that factor: `integrate(f) = sum_i w_i f_i`.
//! They are the exact integrals of the piecewise-linear interpolant of `f`
//! against `r dr`, so the rule is exact for piecewise-linear `f` and all
//! weights are nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Distribution of nodes over `[0, r_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    Uniform,
    /// Exponential stretching `r = r_max (e^{a xi} - 1) / (e^a - 1)` that
    /// clusters nodes near the axis.
    GeometricNearAxis,
}

/// Fraction of the nodes placed inside `r < r_max / 20` by the default
/// geometric grading.
const AXIS_NODE_FRACTION: f64 = 0.5;

/// Precomputed finite-difference stencil: `sum_k coef[k] * f[start + k]`.
#[derive(Clone, Copy, Debug)]
struct Stencil {
    start: usize,
    len: usize,
    coef: [f64; 4],
}

impl Stencil {
    fn apply(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.len {
            acc += self.coef[k] * f[self.start + k];
        }
        acc
    }

    fn from_points(nodes: &[f64], at: usize, start: usize, len: usize, order: usize) -> Self {
        let w = fornberg_weights(nodes[at], &nodes[start..start + len], order);
        let mut coef = [0.0; 4];
        coef[..len].copy_from_slice(&w[order][..len]);
        Stencil { start, len, coef }
    }
}

/// Graded 1D mesh on `[0, r_max]` with quadrature weights and difference stencils.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    r_max: f64,
    grading: Grading,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
}

impl RadialGrid {
    /// Builds a grid with `n` nodes on `[0, r_max]`.
    pub fn new(r_max: f64, n: usize, grading: Grading) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidArgument(format!("grid needs at least 16 nodes, got {n}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {r_max}")));
        }
        let cells = (n - 1) as f64;
        let nodes: Vec<f64> = match grading {
            Grading::Uniform => (0..n).map(|i| r_max * i as f64 / cells).collect(),
            Grading::GeometricNearAxis => {
                let a = stretch_parameter(n);
                let denom = a.exp_m1();
                (0..n)
                    .map(|i| r_max * (a * i as f64 / cells).exp_m1() / denom)
                    .collect()
            }
        };
        let mut nodes = nodes;
        nodes[n - 1] = r_max;
        Ok(Self::from_nodes(nodes, grading))
    }

    fn from_nodes(mut nodes: Vec<f64>, grading: Grading) -> Self {
        let n = nodes.len();
        nodes[0] = 0.0;
        let r_max = nodes[n - 1];
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let h = b - a;
            weights[i] += h * (2.0 * a + b) / 6.0;
            weights[i + 1] += h * (a + 2.0 * b) / 6.0;
        }
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                d1.push(Stencil::from_points(&nodes, 0, 0, 3, 1));
                d2.push(Stencil::from_points(&nodes, 0, 0, 4, 2));
            } else if i == n - 1 {
                d1.push(Stencil::from_points(&nodes, i, n - 3, 3, 1));
                d2.push(Stencil::from_points(&nodes, i, n - 4, 4, 2));
            } else {
                d1.push(Stencil::from_points(&nodes, i, i - 1, 3, 1));
                d2.push(Stencil::from_points(&nodes, i, i - 1, 3, 2));
            }
        }
        RadialGrid { nodes, weights, r_max, grading, d1, d2 }
    }

    /// The same node distribution with every radius multiplied by `factor`.
    ///
    /// Used for the self-similar variable `rho = r / sigma` (factor `1/sigma`);
    /// weights scale by `factor^2` so integrals are taken against `rho drho`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_nodes(self.nodes.iter().map(|r| r * factor).collect(), self.grading)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// `sum_i w_i f_i`, approximating the integral of `f` against `r dr`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        check_len(self.len(), f.len())?;
        Ok(self.integrate_unchecked(f))
    }

    pub(crate) fn integrate_unchecked(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Integral of `f(r)` for a closure, evaluated at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.weights.iter().zip(&self.nodes).map(|(w, &r)| w * f(r)).sum()
    }

    /// Square root of the integral of `f^2` against `r dr`.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn d1_at(&self, f: &[f64], i: usize) -> f64 {
        self.d1[i].apply(f)
    }

    pub(crate) fn d2_at(&self, f: &[f64], i: usize) -> f64 {
        self.d2[i].apply(f)
    }

    pub(crate) fn d1_unchecked(&self, f: &[f64]) -> Vec<f64> {
        self.d1.iter().map(|s| s.apply(f)).collect()
    }

    pub(crate) fn d2_unchecked(&self, f: &[f64]) -> Vec<f64> {
        self.d2.iter().map(|s| s.apply(f)).collect()
    }

    /// Interior three-point rows `(lower, diag, upper)` of
    /// `d^2/dr^2 + k r^{-1} d/dr` for nodes `1..n-1`.
    pub(crate) fn interior_rows(&self, k: f64) -> Vec<[f64; 3]> {
        (1..self.len() - 1)
            .map(|i| {
                let (s1, s2) = (&self.d1[i], &self.d2[i]);
                let r = self.nodes[i];
                [
                    s2.coef[0] + k * s1.coef[0] / r,
                    s2.coef[1] + k * s1.coef[1] / r,
                    s2.coef[2] + k * s1.coef[2] / r,
                ]
            })
            .collect()
    }

    /// `f / r` with the axis value replaced by its limit `f'(0)`; requires `f(0) = 0`.
    pub(crate) fn div_r(&self, f: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = f.iter().zip(&self.nodes).map(|(v, r)| v / r).collect();
        out[0] = self.d1_at(f, 0);
        out
    }

    /// `f / r^2` with the axis value obtained by quadratic extrapolation from
    /// nodes 1..=3; requires `f = O(r^2)` at the axis.
    pub(crate) fn div_r2(&self, f: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = f.iter().zip(&self.nodes).map(|(v, r)| v / (r * r)).collect();
        out[0] = self.extrapolate_to_axis(&out);
        out
    }

    /// Value at `r = 0` of the quadratic through nodes 1, 2, 3 of `f`.
    pub(crate) fn extrapolate_to_axis(&self, f: &[f64]) -> f64 {
        let x = &self.nodes[1..4];
        let w = fornberg_weights(0.0, x, 0);
        w[0][0] * f[1] + w[0][1] * f[2] + w[0][2] * f[3]
    }
}

/// Builds a [`RadialGrid`]; see [`RadialGrid::new`].
pub fn make_grid(r_max: f64, n: usize, grading: Grading) -> Result<RadialGrid> {
    RadialGrid::new(r_max, n, grading)
}

/// `sum_i w_i f(r_i)`, the trapezoid-type approximation of the integral of `f r dr`.
pub fn integrate_radial(f: &[f64], grid: &RadialGrid) -> Result<f64> {
    grid.integrate(f)
}

/// Order of a derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeOrder {
    First,
    Second,
}

/// Second-order accurate `d/dr` or `d^2/dr^2`: centered three-point stencils
/// inside, one-sided (three or four point) stencils at both ends.
pub fn apply_derivative(f: &[f64], grid: &RadialGrid, order: DerivativeOrder) -> Result<Vec<f64>> {
    check_len(grid.len(), f.len())?;
    Ok(match order {
        DerivativeOrder::First => grid.d1_unchecked(f),
        DerivativeOrder::Second => grid.d2_unchecked(f),
    })
}

/// Sign of the first-order term of the radial operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisSign {
    /// `d_rr + r^{-1} d_r`: the planar Laplacian of a radial function.
    Plus,
    /// `d_rr - r^{-1} d_r`: the operator acting on the swirl `W`.
    Minus,
}

/// `d_rr f +- r^{-1} d_r f` with the axis value taken from the regularity limit.
///
/// For [`AxisSign::Plus`] the axis value is `2 f''(0)`, using the even
/// extension of `f`. For [`AxisSign::Minus`] the field must vanish on the axis
/// and the axis value is extrapolated from the first interior nodes.
pub fn apply_radial_laplacian(f: &[f64], grid: &RadialGrid, sign: AxisSign) -> Result<Vec<f64>> {
    check_len(grid.len(), f.len())?;
    let r = grid.nodes();
    let n = grid.len();
    let k = match sign {
        AxisSign::Plus => 1.0,
        AxisSign::Minus => {
            let scale = f.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
            if f[0].abs() > 1e-10 * scale {
                return Err(Error::AxisSingularity { value: f[0] });
            }
            -1.0
        }
    };
    let mut out = vec![0.0; n];
    for i in 1..n {
        out[i] = grid.d2_at(f, i) + k * grid.d1_at(f, i) / r[i];
    }
    out[0] = match sign {
        AxisSign::Plus => 4.0 * (f[1] - f[0]) / (r[1] * r[1]),
        AxisSign::Minus => grid.extrapolate_to_axis(&out),
    };
    Ok(out)
}

/// Finite-difference weights (Fornberg 1988) for derivatives `0..=max_order`
/// at `x0` using the points `xs`. Returns `weights[order][point]`.
pub(crate) fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stretching parameter of the geometric grading: the larger of the value
/// that puts half of the nodes inside `r_max / 20` and the value that
/// puts at least three interior nodes inside `r_max / 100`.
fn stretch_parameter(n: usize) -> f64 {
    let frac = |a: f64, xi: f64| (a * xi).exp_m1() / a.exp_m1();
    let solve = |xi: f64, target: f64| {
        // frac(a, xi) decreases in a for xi < 1.
        let (mut lo, mut hi) = (1e-6, 60.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if frac(mid, xi) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let a_default = solve(AXIS_NODE_FRACTION, 0.05);
    let a_axis = solve(3.0 / (n - 1) as f64, 0.009);
    a_default.max(a_axis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grids() -> Vec<RadialGrid> {
        vec![
            RadialGrid::new(1.0, 65, Grading::Uniform).unwrap(),
            RadialGrid::new(3.0, 129, Grading::GeometricNearAxis).unwrap(),
        ]
    }

    #[test]
    fn uniform_nodes_are_exact_partition() {
        let g = make_grid(1.0, 17, Grading::Uniform).unwrap();
        for (i, r) in g.nodes().iter().enumerate() {
            assert!((r - i as f64 / 16.0).abs() < 1e-15);
        }
        assert_eq!(g.nodes()[16], 1.0);
    }

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(matches!(make_grid(1.0, 8, Grading::Uniform), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(0.0, 32, Grading::Uniform), Err(Error::InvalidArgument(_))));
        assert!(matches!(make_grid(-2.0, 32, Grading::Uniform), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn geometric_grading_clusters_near_axis() {
        let g = make_grid(50.0, 512, Grading::GeometricNearAxis).unwrap();
        assert!(g.nodes()[1] < 50.0 / 511.0);
        let inside = g.nodes().iter().filter(|&&r| r < 50.0 / 20.0).count();
        assert!((inside as f64 / 512.0 - 0.5).abs() < 0.01, "{inside}");
        for n in [16, 17, 40, 100, 1000] {
            let g = make_grid(10.0, n, Grading::GeometricNearAxis).unwrap();
            assert!(g.nodes()[3] < 0.1, "n = {n}: {}", g.nodes()[3]);
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            assert_eq!(*g.nodes().last().unwrap(), 10.0);
        }
    }

    #[test]
    fn weights_positive_and_measure_exact() {
        for g in grids() {
            assert!(g.weights().iter().all(|&w| w >= 0.0));
            let one = g.integrate(&vec![1.0; g.len()]).unwrap();
            let exact = 0.5 * g.r_max() * g.r_max();
            assert!((one - exact).abs() < 1e-13 * exact);
        }
    }

    #[test]
    fn integrates_linear_functions_exactly() {
        let g = make_grid(1.0, 17, Grading::Uniform).unwrap();
        let f: Vec<f64> = g.nodes().to_vec();
        assert!((integrate_radial(&f, &g).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let g = make_grid(2.0, 33, Grading::GeometricNearAxis).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| 3.0 - 0.5 * r).collect();
        // int_0^2 (3 - r/2) r dr = 6 - 4/3
        assert!((g.integrate(&f).unwrap() - (6.0 - 4.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = make_grid(1.0, 17, Grading::Uniform).unwrap();
        assert!(matches!(
            integrate_radial(&[1.0; 3], &g),
            Err(Error::SizeMismatch { expected: 17, found: 3 })
        ));
        assert!(apply_derivative(&[1.0; 3], &g, DerivativeOrder::First).is_err());
        assert!(apply_radial_laplacian(&[0.0; 3], &g, AxisSign::Plus).is_err());
    }

    #[test]
    fn derivatives_of_quadratics_are_exact() {
        for g in grids() {
            let f: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
            let d1 = apply_derivative(&f, &g, DerivativeOrder::First).unwrap();
            let d2 = apply_derivative(&f, &g, DerivativeOrder::Second).unwrap();
            for (i, r) in g.nodes().iter().enumerate() {
                assert!((d1[i] - 2.0 * r).abs() < 1e-9, "{i}");
                assert!((d2[i] - 2.0).abs() < 1e-7, "{i} {}", d2[i]);
            }
            let c = apply_derivative(&vec![4.2; g.len()], &g, DerivativeOrder::First).unwrap();
            assert!(c.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn radial_laplacians_of_r_squared() {
        for g in grids() {
            let f: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
            let plus = apply_radial_laplacian(&f, &g, AxisSign::Plus).unwrap();
            let minus = apply_radial_laplacian(&f, &g, AxisSign::Minus).unwrap();
            assert!(plus.iter().all(|v| (v - 4.0).abs() < 1e-7));
            assert!(minus.iter().all(|v| v.abs() < 1e-7));
        }
        let g = make_grid(1.0, 33, Grading::Uniform).unwrap();
        assert!(matches!(
            apply_radial_laplacian(&vec![1.0; 33], &g, AxisSign::Minus),
            Err(Error::AxisSingularity { .. })
        ));
    }

    fn observed_order(errors: &[f64]) -> f64 {
        let k = errors.len();
        (errors[k - 2] / errors[k - 1]).log2()
    }

    #[test]
    fn gaussian_convergence_order() {
        let f = |r: f64| (-r * r).exp();
        let fp = |r: f64| -2.0 * r * (-r * r).exp();
        let fpp = |r: f64| (4.0 * r * r - 2.0) * (-r * r).exp();
        for grading in [Grading::Uniform, Grading::GeometricNearAxis] {
            let (mut e1, mut e2, mut el) = (vec![], vec![], vec![]);
            for n in [65usize, 129, 257, 513] {
                let g = make_grid(5.0, n, grading).unwrap();
                let v: Vec<f64> = g.nodes().iter().map(|&r| f(r)).collect();
                let d1 = apply_derivative(&v, &g, DerivativeOrder::First).unwrap();
                let d2 = apply_derivative(&v, &g, DerivativeOrder::Second).unwrap();
                let lap = apply_radial_laplacian(&v, &g, AxisSign::Plus).unwrap();
                let mut m = [0.0f64; 3];
                for (i, &r) in g.nodes().iter().enumerate() {
                    m[0] = m[0].max((d1[i] - fp(r)).abs());
                    m[1] = m[1].max((d2[i] - fpp(r)).abs());
                    let exact = if r == 0.0 { -4.0 } else { fpp(r) + fp(r) / r };
                    m[2] = m[2].max((lap[i] - exact).abs());
                }
                e1.push(m[0]);
                e2.push(m[1]);
                el.push(m[2]);
            }
            assert!(observed_order(&e1) >= 1.9, "{grading:?} d1 {e1:?}");
            assert!(observed_order(&e2) >= 1.9, "{grading:?} d2 {e2:?}");
            assert!(observed_order(&el) >= 1.9, "{grading:?} lap {el:?}");
        }
    }

    #[test]
    fn scaled_grid_integrates_against_rho_drho() {
        let g = make_grid(4.0, 257, Grading::GeometricNearAxis).unwrap();
        let s = g.scaled(0.5);
        assert!((s.r_max() - 2.0).abs() < 1e-15);
        let one = s.integrate(&vec![1.0; s.len()]).unwrap();
        assert!((one - 2.0).abs() < 1e-13);
    }

    #[test]
    fn fornberg_reproduces_centered_weights() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
    }
}
