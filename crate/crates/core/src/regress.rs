//! Simple-regression fits of a long-distance connectivity series on a
//! covariate: least squares for the log-ratio, Poisson log-link GLM for the
//! counts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

pub const IRLS_TOLERANCE: f64 = 1e-10;
pub const IRLS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianIdentity,
    PoissonLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficient {
    pub estimate: f64,
    pub std_error: f64,
    /// t statistic (Gaussian) or Wald z (Poisson).
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub family: Family,
    /// Intercept first, then the slope when the model has one.
    pub coefficients: Vec<Coefficient>,
    pub n: usize,
    /// Residual sum of squares (Gaussian) or deviance (Poisson).
    pub deviance: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl RegressionFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0].estimate
    }

    pub fn slope(&self) -> Option<f64> {
        self.coefficients.get(1).map(|c| c.estimate)
    }
}

fn two_sided_normal(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * n.sf(z.abs())).clamp(0.0, 1.0)
}

fn check_series(x: &[f64], y_len: usize) -> Result<()> {
    if x.len() != y_len {
        return Err(Error::invalid(format!(
            "covariate has {} values, response {y_len}",
            x.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 observations, got {}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariate must be finite"));
    }
    Ok(())
}

/// Ordinary least squares `y = a0 + a1 x + e` with t(n-2) inference.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    check_series(x, y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("response must be finite"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0).powi(2) {
        return Err(Error::invalid("covariate is constant; slope is unidentifiable"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = n - 2.0;
    let sigma2 = rss / df;
    let se_slope = (sigma2 / sxx).sqrt();
    let se_int = (sigma2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let t = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let coef = |estimate: f64, se: f64| {
        let statistic = if se > 0.0 {
            estimate / se
        } else if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(estimate)
        };
        let p_value = if statistic.is_infinite() {
            0.0
        } else {
            (2.0 * t.sf(statistic.abs())).clamp(0.0, 1.0)
        };
        Coefficient {
            estimate,
            std_error: se,
            statistic,
            p_value,
        }
    };
    let log_likelihood = if sigma2 > 0.0 {
        let s2 = rss / n;
        -0.5 * n * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(RegressionFit {
        family: Family::GaussianIdentity,
        coefficients: vec![coef(intercept, se_int), coef(slope, se_slope)],
        n: x.len(),
        deviance: rss,
        log_likelihood,
        iterations: 1,
    })
}

fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

/// Poisson log-likelihood at linear predictor `eta`.
pub fn poisson_log_likelihood(counts: &[u64], eta: &[f64]) -> f64 {
    counts
        .iter()
        .zip(eta)
        .map(|(&k, &e)| k as f64 * e - e.exp() - ln_factorial(k))
        .sum()
}

fn poisson_deviance(counts: &[u64], mu: &[f64]) -> f64 {
    2.0 * counts
        .iter()
        .zip(mu)
        .map(|(&k, &m)| {
            let k = k as f64;
            let term = if k > 0.0 { k * (k / m).ln() } else { 0.0 };
            term - (k - m)
        })
        .sum::<f64>()
}

/// Poisson GLM with log link on an arbitrary design (columns = predictors),
/// fitted by iteratively reweighted least squares.
pub fn poisson_irls(design: &DMatrix<f64>, counts: &[u64], offset: Option<&[f64]>) -> Result<RegressionFit> {
    let (n, p) = design.shape();
    if counts.len() != n {
        return Err(Error::invalid("design and counts differ in length"));
    }
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 observations, got {n}")));
    }
    if counts.iter().all(|&k| k == 0) {
        return Err(Error::invalid("all counts are zero; the Poisson MLE does not exist"));
    }
    let offset: Vec<f64> = match offset {
        Some(o) if o.len() == n && o.iter().all(|v| v.is_finite()) => o.to_vec(),
        Some(_) => return Err(Error::invalid("offset must be finite and match the counts")),
        None => vec![0.0; n],
    };
    let y = DVector::from_iterator(n, counts.iter().map(|&k| k as f64));

    // start from the saturated-ish working response log(y + 0.5)
    let mut eta: Vec<f64> = (0..n).map(|i| (y[i] + 0.5).ln()).collect();
    let mut beta = DVector::zeros(p);
    let mut dev_old = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut gradient_norm = f64::INFINITY;
    for it in 1..=IRLS_MAX_ITERATIONS {
        iterations = it;
        let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        // working response z = eta - offset + (y - mu) / mu, weights mu
        let z = DVector::from_iterator(n, (0..n).map(|i| eta[i] - offset[i] + (y[i] - mu[i]) / mu[i]));
        let wx = DMatrix::from_fn(n, p, |i, j| design[(i, j)] * mu[i]);
        let xtwx = design.transpose() * &wx;
        let rhs = wx.transpose() * &z;
        let chol = xtwx.cholesky().ok_or_else(|| {
            Error::IllConditioned("X'WX is singular; is the covariate constant?".into())
        })?;
        let mut next = chol.solve(&rhs);

        // step-halve if the deviance goes up
        let mut eta_next: Vec<f64>;
        let mut dev;
        let mut halvings = 0;
        loop {
            let lin = design * &next;
            eta_next = (0..n).map(|i| lin[i] + offset[i]).collect();
            let mu_next: Vec<f64> = eta_next.iter().map(|e| e.exp()).collect();
            dev = poisson_deviance(counts, &mu_next);
            if (dev.is_finite() && dev <= dev_old * (1.0 + 1e-12) + 1e-12) || halvings >= 30 || it == 1 {
                break;
            }
            next = (&next + &beta) * 0.5;
            halvings += 1;
        }
        let step = (&next - &beta).amax() / (1.0 + next.amax());
        let dev_change = (dev_old - dev).abs() / (dev.abs() + 0.1);
        beta = next;
        eta = eta_next;
        dev_old = dev;
        let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        let score = design.transpose() * DVector::from_iterator(n, (0..n).map(|i| y[i] - mu[i]));
        gradient_norm = score.norm();
        // a flat likelihood can leave the step above tolerance once the
        // deviance and score are at rounding level
        let stalled = dev_change < IRLS_TOLERANCE && gradient_norm < 1e-6 * (1.0 + y.sum());
        if it > 1 && (step < IRLS_TOLERANCE || stalled) {
            converged = true;
            break;
        }
    }
    if !converged || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::NonConvergence {
            iterations,
            gradient_norm,
            last: beta.iter().copied().collect(),
        });
    }
    // Wald covariance from the information at the solution
    let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
    let wx = DMatrix::from_fn(n, p, |i, j| design[(i, j)] * mu[i]);
    let cov = (design.transpose() * &wx)
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("information matrix is singular".into()))?;
    let coefficients = (0..p)
        .map(|j| {
            let se = cov[(j, j)].max(0.0).sqrt();
            let z = beta[j] / se;
            Coefficient {
                estimate: beta[j],
                std_error: se,
                statistic: z,
                p_value: two_sided_normal(z),
            }
        })
        .collect();
    Ok(RegressionFit {
        family: Family::PoissonLog,
        coefficients,
        n,
        deviance: dev_old,
        log_likelihood: poisson_log_likelihood(counts, &eta),
        iterations,
    })
}

/// `log E[N] = b0 + b1 x (+ offset)`.
pub fn poisson_glm_fit(x: &[f64], counts: &[u64], offset: Option<&[f64]>) -> Result<RegressionFit> {
    check_series(x, counts.len())?;
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    if x.iter().all(|v| (v - mean).abs() <= 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::invalid("covariate is constant; slope is unidentifiable"));
    }
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    poisson_irls(&design, counts, offset)
}

/// Intercept-only Poisson model.
pub fn poisson_intercept_fit(counts: &[u64], offset: Option<&[f64]>) -> Result<RegressionFit> {
    let design = DMatrix::from_element(counts.len(), 1, 1.0);
    poisson_irls(&design, counts, offset)
}
