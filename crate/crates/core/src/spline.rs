//! Weighted cubic smoothing splines.
//!
//! Minimises `sum_k w_k (y_k - f(x_k))^2 + lambda * integral f''(x)^2 dx`
//! over natural cubic splines with knots at the (strictly increasing) `x_k`.
//! The fit is computed in Reinsch form: with the banded matrices `Q` (n x n-2)
//! and `R` (n-2 x n-2) of the knot spacing,
//!
//! ```text
//! (R / lambda + Q' W^-1 Q) delta = Q' y
//! g     = y - W^-1 Q delta          fitted values
//! gamma = delta / lambda            second derivatives at interior knots
//! ```
//!
//! which stays well conditioned as `lambda -> infinity`, where `g` becomes
//! the weighted least-squares line.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the smoothing parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Smoothing {
    /// Minimise generalized cross-validation.
    #[default]
    Gcv,
    Fixed(f64),
    /// The penalty-free limit: a weighted least-squares line.
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSpline {
    x: Vec<f64>,
    fitted: Vec<f64>,
    /// Second derivative at every knot; zero at both ends.
    second: Vec<f64>,
    lambda: f64,
    edf: f64,
    gcv: f64,
}

struct Reinsch {
    n: usize,
    /// Q' W^-1 Q
    qwq: DMatrix<f64>,
    r: DMatrix<f64>,
    q: DMatrix<f64>,
    w: Vec<f64>,
}

impl Reinsch {
    fn new(x: &[f64], w: &[f64]) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
        let mut q = DMatrix::zeros(n, n - 2);
        let mut r = DMatrix::zeros(n - 2, n - 2);
        for j in 1..n - 1 {
            let c = j - 1;
            q[(j - 1, c)] = 1.0 / h[j - 1];
            q[(j, c)] = -1.0 / h[j - 1] - 1.0 / h[j];
            q[(j + 1, c)] = 1.0 / h[j];
            r[(c, c)] = (h[j - 1] + h[j]) / 3.0;
            if c + 1 < n - 2 {
                r[(c, c + 1)] = h[j] / 6.0;
                r[(c + 1, c)] = h[j] / 6.0;
            }
        }
        let winv_q = DMatrix::from_fn(n, n - 2, |a, b| q[(a, b)] / w[a]);
        let qwq = q.transpose() * &winv_q;
        Reinsch {
            n,
            qwq,
            r,
            q,
            w: w.to_vec(),
        }
    }

    /// `(fitted, interior second derivatives, trace of the hat matrix)`.
    fn solve(&self, y: &[f64], lambda: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let mu = if lambda.is_infinite() { 0.0 } else { 1.0 / lambda };
        let a = &self.r * mu + &self.qwq;
        let chol = a.cholesky().ok_or_else(|| {
            Error::IllConditioned(format!(
                "Reinsch system not positive definite at lambda = {lambda:e}"
            ))
        })?;
        let yv = DVector::from_column_slice(y);
        let delta = chol.solve(&(self.q.transpose() * &yv));
        let qd = &self.q * &delta;
        let fitted: Vec<f64> = (0..self.n).map(|k| y[k] - qd[k] / self.w[k]).collect();
        let second: Vec<f64> = delta.iter().map(|v| v * mu).collect();
        // tr(S) = n - tr(A^-1 Q'W^-1Q)
        let trace = self.n as f64 - chol.solve(&self.qwq).trace();
        if fitted.iter().any(|v| !v.is_finite()) {
            return Err(Error::IllConditioned(format!(
                "non-finite spline fit at lambda = {lambda:e}"
            )));
        }
        Ok((fitted, second, trace))
    }

    fn gcv(&self, y: &[f64], lambda: f64) -> Result<f64> {
        let (fitted, _, trace) = self.solve(y, lambda)?;
        Ok(gcv_score(y, &fitted, &self.w, trace))
    }
}

fn gcv_score(y: &[f64], fitted: &[f64], w: &[f64], trace: f64) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = y
        .iter()
        .zip(fitted)
        .zip(w)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum();
    let denom = 1.0 - trace / n;
    if denom <= 1e-12 {
        return f64::INFINITY;
    }
    (rss / n) / (denom * denom)
}

/// Golden-section minimisation of `f` on `[a, b]`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

impl SmoothingSpline {
    /// Fits a smoothing spline. `x` must be strictly increasing with at least
    /// 3 points; `w` are positive weights (normalised internally to mean 1).
    pub fn fit(x: &[f64], y: &[f64], w: &[f64], smoothing: Smoothing) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n || w.len() != n {
            return Err(Error::invalid(format!(
                "smoothing spline needs >= 3 matching points, got x={n} y={} w={}",
                y.len(),
                w.len()
            )));
        }
        if x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("spline knots must be strictly increasing"));
        }
        if w.iter().any(|v| !(*v > 0.0 && v.is_finite())) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spline weights must be positive and data finite"));
        }
        let wsum: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v * n as f64 / wsum).collect();
        let sys = Reinsch::new(x, &w);

        let lambda = match smoothing {
            Smoothing::Fixed(l) if l > 0.0 => l,
            Smoothing::Fixed(l) => {
                return Err(Error::invalid(format!("smoothing parameter {l} must be > 0")))
            }
            Smoothing::Infinite => f64::INFINITY,
            Smoothing::Gcv => {
                // lambda = scale * 10^t, scale balancing R against Q'W^-1Q
                let scale = sys.r.trace() / sys.qwq.trace();
                let score = |t: f64| sys.gcv(y, scale * 10f64.powf(t)).unwrap_or(f64::INFINITY);
                let grid: Vec<f64> = (0..=96).map(|k| -12.0 + 0.25 * k as f64).collect();
                let scores: Vec<f64> = grid.iter().map(|&t| score(t)).collect();
                let best = (0..grid.len())
                    .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
                    .expect("non-empty grid");
                if !scores[best].is_finite() {
                    return Err(Error::IllConditioned(
                        "GCV is not finite for any smoothing parameter".into(),
                    ));
                }
                let lo = grid[best.saturating_sub(1)];
                let hi = grid[(best + 1).min(grid.len() - 1)];
                let t = golden_section(score, lo, hi, 1e-6);
                let t = if score(t) <= scores[best] { t } else { grid[best] };
                scale * 10f64.powf(t)
            }
        };

        let (fitted, interior, trace) = sys.solve(y, lambda)?;
        let mut second = Vec::with_capacity(n);
        second.push(0.0);
        second.extend(interior);
        second.push(0.0);
        let gcv = gcv_score(y, &fitted, &w, trace);
        Ok(SmoothingSpline {
            x: x.to_vec(),
            fitted,
            second,
            lambda,
            edf: trace,
            gcv,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Effective degrees of freedom (trace of the hat matrix).
    pub fn edf(&self) -> f64 {
        self.edf
    }

    pub fn gcv(&self) -> f64 {
        self.gcv
    }

    /// Evaluates the spline; beyond the end knots it continues linearly.
    pub fn eval(&self, t: f64) -> f64 {
        let (x, g, s) = (&self.x, &self.fitted, &self.second);
        let n = x.len();
        if t <= x[0] {
            let h = x[1] - x[0];
            let slope = (g[1] - g[0]) / h - h * s[1] / 6.0;
            return g[0] + slope * (t - x[0]);
        }
        if t >= x[n - 1] {
            let h = x[n - 1] - x[n - 2];
            let slope = (g[n - 1] - g[n - 2]) / h + h * s[n - 2] / 6.0;
            return g[n - 1] + slope * (t - x[n - 1]);
        }
        let i = x.partition_point(|&k| k <= t) - 1;
        let h = x[i + 1] - x[i];
        let (a, b) = (t - x[i], x[i + 1] - t);
        (b * g[i] + a * g[i + 1]) / h
            - a * b / 6.0 * ((1.0 + a / h) * s[i + 1] + (1.0 + b / h) * s[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line_is_reproduced() {
        let x: Vec<f64> = (0..12).map(|k| k as f64 * 0.3 + 0.05 * (k % 3) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.7 - 0.4 * v).collect();
        let w = vec![1.0; x.len()];
        for s in [Smoothing::Fixed(1e-6), Smoothing::Fixed(3.0), Smoothing::Infinite, Smoothing::Gcv] {
            let fit = SmoothingSpline::fit(&x, &y, &w, s).unwrap();
            for (a, b) in fit.fitted().iter().zip(&y) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
            assert_abs_diff_eq!(fit.eval(5.0), 0.7 - 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn interpolates_as_lambda_vanishes() {
        let x = [0.0, 1.0, 2.5, 3.0, 4.2];
        let y = [1.0, -1.0, 2.0, 0.5, 0.0];
        let fit = SmoothingSpline::fit(&x, &y, &[1.0; 5], Smoothing::Fixed(1e-12)).unwrap();
        for (a, b) in fit.fitted().iter().zip(&y) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        for (k, &xi) in x.iter().enumerate() {
            assert_abs_diff_eq!(fit.eval(xi), fit.fitted()[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn edf_between_two_and_n() {
        let x: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.7).sin()).collect();
        let w = vec![1.0; 20];
        for l in [1e-6, 1e-2, 1.0, 1e2, 1e6] {
            let fit = SmoothingSpline::fit(&x, &y, &w, Smoothing::Fixed(l)).unwrap();
            assert!(fit.edf() >= 2.0 - 1e-9 && fit.edf() <= 20.0 + 1e-9, "edf {}", fit.edf());
        }
        let inf = SmoothingSpline::fit(&x, &y, &w, Smoothing::Infinite).unwrap();
        assert_abs_diff_eq!(inf.edf(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let w = [1.0; 4];
        assert!(SmoothingSpline::fit(&[0.0, 1.0], &[0.0, 1.0], &w[..2], Smoothing::Gcv).is_err());
        assert!(SmoothingSpline::fit(&[0.0, 1.0, 1.0, 2.0], &[0.0; 4], &w, Smoothing::Gcv).is_err());
        assert!(SmoothingSpline::fit(&[0.0, 1.0, 2.0, 3.0], &[0.0; 4], &w, Smoothing::Fixed(-1.0)).is_err());
    }

    #[test]
    fn evaluation_is_continuous_and_linear_outside() {
        let x = [0.0, 0.5, 1.2, 2.0, 2.2, 3.0];
        let y = [0.0, 0.4, 0.1, 0.9, 0.7, 0.2];
        let fit = SmoothingSpline::fit(&x, &y, &[1.0; 6], Smoothing::Fixed(0.05)).unwrap();
        for &k in &x[1..5] {
            assert_abs_diff_eq!(fit.eval(k - 1e-9), fit.eval(k + 1e-9), epsilon = 1e-6);
        }
        let (a, b, c) = (fit.eval(3.5), fit.eval(4.0), fit.eval(4.5));
        assert_abs_diff_eq!(b - a, c - b, epsilon = 1e-12);
        let (a, b, c) = (fit.eval(-1.0), fit.eval(-0.5), fit.eval(0.0));
        assert_abs_diff_eq!(b - a, c - b, epsilon = 1e-12);
    }
}
