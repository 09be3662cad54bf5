//! Distance-decay curve of `chi_hat`, and the variance `tau^2(h)` of the true
//! pairwise `chi` around it.

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapSummary;
use crate::domain::DistanceMatrix;
use crate::error::{Error, Result};
use crate::madogram::ChiMatrix;
use crate::spline::{Smoothing, SmoothingSpline};

pub const DEFAULT_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    /// Equal-width bins over `(0, max h]`.
    #[default]
    EqualWidth,
    /// Bins holding (nearly) equal numbers of pairs.
    EqualCount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiBin {
    pub mean_distance: f64,
    pub mean_chi: f64,
    pub count: usize,
    /// Sample variance of `chi_hat` in the bin (0 for a single pair).
    pub variance: f64,
    #[serde(skip)]
    pub members: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedChi {
    pub bins: Vec<ChiBin>,
    pub requested: usize,
    pub scheme: BinScheme,
}

fn summarize(members: Vec<(usize, usize, f64, f64)>) -> ChiBin {
    let n = members.len() as f64;
    let mean_distance = members.iter().map(|m| m.2).sum::<f64>() / n;
    let mean_chi = members.iter().map(|m| m.3).sum::<f64>() / n;
    let variance = if members.len() > 1 {
        members.iter().map(|m| (m.3 - mean_chi).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ChiBin {
        mean_distance,
        mean_chi,
        count: members.len(),
        variance,
        members: members.iter().map(|m| (m.0, m.1)).collect(),
    }
}

/// Groups estimable pairs into `k` distance bins; empty bins are dropped.
pub fn bin_chi(cm: &ChiMatrix, dm: &DistanceMatrix, k: usize, scheme: BinScheme) -> Result<BinnedChi> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {k}")));
    }
    if cm.dim() != dm.dim() {
        return Err(Error::invalid("chi and distance matrices differ in size"));
    }
    let mut pairs: Vec<(usize, usize, f64, f64)> = cm
        .chi_hat
        .pairs()
        .filter_map(|(i, j)| cm.get(i, j).map(|c| (i, j, dm.get(i, j), c)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::invalid("no estimable pairs to bin"));
    }
    let mut groups: Vec<Vec<(usize, usize, f64, f64)>> = vec![Vec::new(); k];
    match scheme {
        BinScheme::EqualWidth => {
            let hmax = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
            let width = hmax / k as f64;
            for p in pairs {
                let b = if width > 0.0 {
                    ((p.2 / width).ceil() as usize).clamp(1, k) - 1
                } else {
                    0
                };
                groups[b].push(p);
            }
        }
        BinScheme::EqualCount => {
            pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
            let n = pairs.len();
            for (r, p) in pairs.into_iter().enumerate() {
                groups[r * k / n].push(p);
            }
        }
    }
    let bins = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(summarize)
        .collect();
    Ok(BinnedChi {
        bins,
        requested: k,
        scheme,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinWeighting {
    #[default]
    Unweighted,
    PairCount,
}

/// Smooth estimate of `chi` as a function of distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiCurve {
    spline: SmoothingSpline,
}

impl ChiCurve {
    pub fn eval(&self, h: f64) -> f64 {
        self.spline.eval(h)
    }

    pub fn spline(&self) -> &SmoothingSpline {
        &self.spline
    }

    pub fn lambda(&self) -> f64 {
        self.spline.lambda()
    }

    pub fn fitted(&self) -> &[f64] {
        self.spline.fitted()
    }
}

fn bin_weights(b: &BinnedChi, weighting: BinWeighting) -> Vec<f64> {
    b.bins
        .iter()
        .map(|bin| match weighting {
            BinWeighting::Unweighted => 1.0,
            BinWeighting::PairCount => bin.count as f64,
        })
        .collect()
}

/// Cubic smoothing spline through the bin means `(h^k, chi^k)`.
pub fn fit_chi_curve(b: &BinnedChi, weighting: BinWeighting, smoothing: Smoothing) -> Result<ChiCurve> {
    if b.bins.len() < 4 {
        return Err(Error::invalid(format!(
            "need at least 4 non-empty bins, got {}",
            b.bins.len()
        )));
    }
    let x: Vec<f64> = b.bins.iter().map(|k| k.mean_distance).collect();
    let y: Vec<f64> = b.bins.iter().map(|k| k.mean_chi).collect();
    let spline = SmoothingSpline::fit(&x, &y, &bin_weights(b, weighting), smoothing)?;
    Ok(ChiCurve { spline })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Tau2Mode {
    /// `a / (1 + exp(-b (h - c)))`
    Logistic { a: f64, b: f64, c: f64 },
    /// Bin-wise excess of the `chi_hat` spread over the bootstrap variance,
    /// smoothed over distance.
    Estimated,
}

impl Tau2Mode {
    /// The logistic used for the simulation benchmark.
    pub const BENCHMARK: Tau2Mode = Tau2Mode::Logistic {
        a: 0.095,
        b: 6.0,
        c: 0.72,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tau2Fn {
    Logistic { a: f64, b: f64, c: f64 },
    Estimated { spline: SmoothingSpline, per_bin: Vec<(f64, f64)> },
}

impl Tau2Fn {
    /// `tau^2(h)`, never negative.
    pub fn eval(&self, h: f64) -> f64 {
        match self {
            Tau2Fn::Logistic { a, b, c } => a / (1.0 + (-b * (h - c)).exp()),
            Tau2Fn::Estimated { spline, .. } => spline.eval(h).max(0.0),
        }
    }

    pub fn provenance(&self) -> &'static str {
        match self {
            Tau2Fn::Logistic { .. } => "parametric_logistic",
            Tau2Fn::Estimated { .. } => "estimated",
        }
    }
}

pub fn estimate_tau2(
    b: &BinnedChi,
    bs: &BootstrapSummary,
    mode: Tau2Mode,
    weighting: BinWeighting,
) -> Result<Tau2Fn> {
    match mode {
        Tau2Mode::Logistic { a, b, c } => {
            if !(a >= 0.0 && a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(Error::invalid(format!(
                    "logistic tau^2 parameters ({a}, {b}, {c}) invalid; need a >= 0 and finite values"
                )));
            }
            Ok(Tau2Fn::Logistic { a, b, c })
        }
        Tau2Mode::Estimated => {
            let per_bin: Vec<(f64, f64)> = b
                .bins
                .iter()
                .map(|bin| {
                    let vars: Vec<f64> = bin
                        .members
                        .iter()
                        .filter_map(|&(i, j)| bs.variance(i, j))
                        .collect();
                    let mean_var = if vars.is_empty() {
                        0.0
                    } else {
                        vars.iter().sum::<f64>() / vars.len() as f64
                    };
                    (bin.mean_distance, (bin.variance - mean_var).max(0.0))
                })
                .collect();
            if per_bin.len() < 4 {
                return Err(Error::invalid("need at least 4 non-empty bins to estimate tau^2"));
            }
            let x: Vec<f64> = per_bin.iter().map(|p| p.0).collect();
            let y: Vec<f64> = per_bin.iter().map(|p| p.1).collect();
            let spline = SmoothingSpline::fit(&x, &y, &bin_weights(b, weighting), Smoothing::Gcv)?;
            Ok(Tau2Fn::Estimated { spline, per_bin })
        }
    }
}
