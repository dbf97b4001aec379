//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

/// Shape-preserving cubic interpolant through `(x_i, y_i)` with strictly
/// increasing `x`.
#[derive(Clone, Debug)]
pub(crate) struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    pub(crate) fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        debug_assert!(n >= 3 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Pchip { x, y, slopes: d }
    }

    /// Value at `t`; `None` outside `[x_0, x_last]`.
    pub(crate) fn eval(&self, t: f64) -> Option<f64> {
        let n = self.x.len();
        if !(t >= self.x[0] && t <= self.x[n - 1]) {
            return None;
        }
        let k = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(
            h00 * self.y[k]
                + h10 * h * self.slopes[k]
                + h01 * self.y[k + 1]
                + h11 * h * self.slopes[k + 1],
        )
    }
}

/// Three-point end slope with the usual monotonicity safeguards.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let x = [0.0, 0.5, 1.5, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let p = Pchip::new(&x, &y);
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a).unwrap() - b).abs() < 1e-14);
        }
        assert!((p.eval(3.1).unwrap() - 8.3).abs() < 1e-13);
        assert!(p.eval(4.01).is_none());
        assert!(p.eval(-0.1).is_none());
    }

    #[test]
    fn preserves_monotonicity() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).powf(1.5)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.min(20.0)).collect();
        let p = Pchip::new(&x, &y);
        let mut last = f64::NEG_INFINITY;
        for i in 0..=2000 {
            let v = p.eval(x[19] * i as f64 / 2000.0).unwrap();
            assert!(v >= last - 1e-12);
            assert!(v <= 20.0 + 1e-12);
            last = v;
        }
    }
}
