//! Small dense helpers: a factored tridiagonal solver for the implicit
//! diffusion steps.

/// LU factorization of a tridiagonal matrix (Thomas algorithm without pivoting).
///
/// The implicit operators used by the integrator are diagonally dominant
/// M-matrices, for which the elimination is stable.
#[derive(Clone, Debug)]
pub(crate) struct Tridiagonal {
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` couples row `i` to `i-1` (`lower[0]` unused), `upper[i]` couples
    /// row `i` to `i+1` (last entry unused).
    pub(crate) fn factor(lower: Vec<f64>, diag: &[f64], upper: Vec<f64>) -> Self {
        let n = diag.len();
        let mut inv_pivot = vec![0.0; n];
        let mut modified_upper = vec![0.0; n];
        let mut pivot = diag[0];
        inv_pivot[0] = 1.0 / pivot;
        for i in 1..n {
            modified_upper[i - 1] = upper[i - 1] * inv_pivot[i - 1];
            pivot = diag[i] - lower[i] * modified_upper[i - 1];
            inv_pivot[i] = 1.0 / pivot;
        }
        Tridiagonal { lower, upper: modified_upper, inv_pivot }
    }

    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        b[0] *= self.inv_pivot[0];
        for i in 1..n {
            b[i] = (b[i] - self.lower[i] * b[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            b[i] -= self.upper[i] * b[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_against_dense_product() {
        let n = 12;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.5 + 0.02 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * i as f64).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i] * x[i - 1];
            }
            if i + 1 < n {
                b[i] += upper[i] * x[i + 1];
            }
        }
        let t = Tridiagonal::factor(lower, &diag, upper);
        t.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }
}
