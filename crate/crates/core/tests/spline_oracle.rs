//! Smoothing spline against a dense penalized least-squares solve in the
//! truncated-power natural cubic spline basis.

use chinet_core::spline::{Smoothing, SmoothingSpline};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Natural cubic spline basis with knots `xi`: 1, x, d_k(x) - d_{K-1}(x).
struct NaturalBasis {
    xi: Vec<f64>,
}

impl NaturalBasis {
    fn d(&self, k: usize, t: f64) -> f64 {
        let big = *self.xi.last().unwrap();
        let cube = |a: f64| a.max(0.0).powi(3);
        (cube(t - self.xi[k]) - cube(t - big)) / (big - self.xi[k])
    }

    fn d2(&self, k: usize, t: f64) -> f64 {
        let big = *self.xi.last().unwrap();
        let lin = |a: f64| 6.0 * a.max(0.0);
        (lin(t - self.xi[k]) - lin(t - big)) / (big - self.xi[k])
    }

    fn len(&self) -> usize {
        self.xi.len()
    }

    fn value(&self, j: usize, t: f64) -> f64 {
        let kk = self.len();
        match j {
            0 => 1.0,
            1 => t,
            _ => self.d(j - 2, t) - self.d(kk - 2, t),
        }
    }

    fn second(&self, j: usize, t: f64) -> f64 {
        let kk = self.len();
        match j {
            0 | 1 => 0.0,
            _ => self.d2(j - 2, t) - self.d2(kk - 2, t),
        }
    }

    /// Integral of N_a'' N_b''; each factor is linear between knots, so
    /// Simpson's rule per interval is exact.
    fn penalty(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut om = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for w in self.xi.windows(2) {
                    let (l, r) = (w[0], w[1]);
                    let m = 0.5 * (l + r);
                    let f = |t| self.second(a, t) * self.second(b, t);
                    s += (r - l) / 6.0 * (f(l) + 4.0 * f(m) + f(r));
                }
                om[(a, b)] = s;
            }
        }
        om
    }
}

/// Minimises `|W^1/2 (y - N theta)|^2 + lambda theta' Omega theta` as the
/// stacked least-squares problem `[W^1/2 N; sqrt(lambda) L] theta ~ [W^1/2 y; 0]`
/// with `Omega = L' L`, solved by SVD.
fn dense_fit(x: &[f64], y: &[f64], w: &[f64], lambda: f64) -> (NaturalBasis, DVector<f64>) {
    let n = x.len();
    let mean_w = w.iter().sum::<f64>() / n as f64;
    let basis = NaturalBasis { xi: x.to_vec() };
    // the penalty only touches the n - 2 non-linear basis functions
    let om = basis.penalty().view((2, 2), (n - 2, n - 2)).into_owned();
    let l = om.cholesky().expect("penalty block is positive definite").l().transpose();
    let mut a = DMatrix::zeros(2 * n - 2, n);
    let mut b = DVector::zeros(2 * n - 2);
    for i in 0..n {
        let sw = (w[i] / mean_w).sqrt();
        for j in 0..n {
            a[(i, j)] = sw * basis.value(j, x[i]);
        }
        b[i] = sw * y[i];
    }
    for r in 0..n - 2 {
        for c in 0..n - 2 {
            a[(n + r, 2 + c)] = lambda.sqrt() * l[(r, c)];
        }
    }
    let theta = a.svd(true, true).solve(&b, 1e-15).expect("svd solve");
    (basis, theta)
}

fn eval_dense(basis: &NaturalBasis, theta: &DVector<f64>, t: f64) -> f64 {
    (0..basis.len()).map(|j| theta[j] * basis.value(j, t)).sum()
}

fn random_bins(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut x: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..1.4)).collect();
    x.sort_by(f64::total_cmp);
    for k in 1..x.len() {
        if x[k] - x[k - 1] < 0.01 {
            x[k] = x[k - 1] + 0.01;
        }
    }
    let y = x
        .iter()
        .map(|h| 2.0 * (-4.0 * h).exp() - 0.5 + rng.random_range(-0.1..0.1))
        .collect();
    let w = (0..10).map(|_| rng.random_range(0.5..3.0)).collect();
    (x, y, w)
}

#[test]
fn matches_dense_penalized_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let (x, y, w) = random_bins(&mut rng);
        let w = if case % 2 == 0 { vec![1.0; 10] } else { w };
        for lambda in [1e-6, 1e-4, 1e-2, 1.0] {
            let fit = SmoothingSpline::fit(&x, &y, &w, Smoothing::Fixed(lambda)).unwrap();
            let (basis, theta) = dense_fit(&x, &y, &w, lambda);
            for (k, &xk) in x.iter().enumerate() {
                let want = eval_dense(&basis, &theta, xk);
                assert!(
                    (fit.fitted()[k] - want).abs() < 1e-8,
                    "case {case} lambda {lambda} knot {k}: {} vs {want}",
                    fit.fitted()[k]
                );
            }
            // between knots as well
            for s in 0..50 {
                let t = x[0] + (x[9] - x[0]) * s as f64 / 49.0;
                let want = eval_dense(&basis, &theta, t);
                assert!((fit.eval(t) - want).abs() < 1e-8, "case {case} t {t}");
            }
        }
    }
}

#[test]
fn infinite_smoothing_is_the_least_squares_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let (x, y, w) = random_bins(&mut rng);
        let fit = SmoothingSpline::fit(&x, &y, &w, Smoothing::Infinite).unwrap();
        // weighted normal equations
        let sw: f64 = w.iter().sum();
        let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let sxy: f64 = (0..10).map(|k| w[k] * (x[k] - mx) * (y[k] - my)).sum();
        let sxx: f64 = (0..10).map(|k| w[k] * (x[k] - mx).powi(2)).sum();
        let slope = sxy / sxx;
        for k in 0..10 {
            let want = my + slope * (x[k] - mx);
            assert!((fit.fitted()[k] - want).abs() < 1e-8);
        }
        // a very large finite lambda approaches the same line
        let stiff = SmoothingSpline::fit(&x, &y, &w, Smoothing::Fixed(1e12)).unwrap();
        for k in 0..10 {
            assert!((stiff.fitted()[k] - fit.fitted()[k]).abs() < 1e-6);
        }
    }
}

#[test]
fn gcv_choice_minimises_the_criterion() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let (x, y, w) = random_bins(&mut rng);
        let best = SmoothingSpline::fit(&x, &y, &w, Smoothing::Gcv).unwrap();
        for e in -10..=4 {
            let other = SmoothingSpline::fit(&x, &y, &w, Smoothing::Fixed(10f64.powi(e))).unwrap();
            assert!(best.gcv() <= other.gcv() * (1.0 + 1e-9), "lambda 1e{e} beats GCV choice");
        }
        assert!(best.edf() >= 2.0 - 1e-9 && best.edf() <= 10.0 + 1e-9);
    }
}
