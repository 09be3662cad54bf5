//! Empirical-Bayes correction of `chi_hat` toward the distance curve, network
//! thresholding and network comparison.
//!
//! Each pair is treated as `chi_hat_ij ~ N(chi_ij, sigma_ij^2)` with
//! `chi_ij ~ N(chi(h_ij), tau^2(h_ij))`; the posterior mean is
//!
//! ```text
//! chi_tilde_ij = lambda_ij chi_hat_ij + (1 - lambda_ij) chi(h_ij)
//! lambda_ij    = tau^2(h_ij) / (tau^2(h_ij) + sigma_ij^2)
//! ```
//!
//! with the bootstrap variance standing in for `sigma_ij^2`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapSummary;
use crate::brsim::TrueNetwork;
use crate::chicurve::{ChiCurve, Tau2Fn};
use crate::domain::{DistanceMatrix, SymMatrix};
use crate::error::{Error, Result};
use crate::madogram::ChiMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkChi {
    pub chi_tilde: SymMatrix,
    pub lambda: SymMatrix,
}

/// Shrinkage weight; `0` when both variances vanish.
pub fn shrinkage_weight(tau2: f64, sigma2: f64) -> f64 {
    let total = tau2 + sigma2;
    if total > 0.0 {
        tau2 / total
    } else {
        0.0
    }
}

pub fn shrink(
    cm: &ChiMatrix,
    curve: &ChiCurve,
    tau2: &Tau2Fn,
    bs: &BootstrapSummary,
    dm: &DistanceMatrix,
) -> Result<ShrunkChi> {
    let d = cm.dim();
    if dm.dim() != d || bs.sd.dim() != d {
        return Err(Error::invalid("chi, bootstrap and distance matrices differ in size"));
    }
    let mut chi_tilde = SymMatrix::filled(d, f64::NAN);
    let mut lambda = SymMatrix::filled(d, f64::NAN);
    for i in 0..d {
        chi_tilde.set(i, i, 1.0);
        lambda.set(i, i, 1.0);
    }
    for (i, j) in cm.chi_hat.pairs() {
        let (Some(c), Some(s2)) = (cm.get(i, j), bs.variance(i, j)) else {
            continue;
        };
        let h = dm.get(i, j);
        let l = shrinkage_weight(tau2.eval(h), s2);
        lambda.set(i, j, l);
        chi_tilde.set(i, j, l * c + (1.0 - l) * curve.eval(h));
    }
    Ok(ShrunkChi { chi_tilde, lambda })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Empirical,
    Corrected,
    True,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    pub d: usize,
    pub chi_min: f64,
    pub estimator: EstimatorTag,
    pub edges: Vec<Edge>,
}

impl Network {
    pub fn pairs(&self) -> BTreeSet<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }
}

/// Connects every pair whose estimate is strictly greater than `chi_min`.
pub fn threshold_network(chi: &SymMatrix, dm: &DistanceMatrix, chi_min: f64, estimator: EstimatorTag) -> Network {
    let edges = chi
        .pairs()
        .filter_map(|(i, j)| {
            chi.value(i, j).filter(|&c| c > chi_min).map(|weight| Edge {
                i,
                j,
                weight,
                distance: dm.get(i, j),
            })
        })
        .collect();
    Network {
        d: chi.dim(),
        chi_min,
        estimator,
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetMetrics {
    /// `None` when the true network is empty.
    pub tpr: Option<f64>,
    /// `None` when the estimated network is empty.
    pub ppv: Option<f64>,
    pub true_count: usize,
    pub estimated_count: usize,
    pub overlap: usize,
}

pub fn compare_edges(est: &BTreeSet<(usize, usize)>, truth: &BTreeSet<(usize, usize)>) -> NetMetrics {
    let overlap = est.intersection(truth).count();
    let ratio = |den: usize| (den > 0).then(|| overlap as f64 / den as f64);
    NetMetrics {
        tpr: ratio(truth.len()),
        ppv: ratio(est.len()),
        true_count: truth.len(),
        estimated_count: est.len(),
        overlap,
    }
}

pub fn tpr_ppv(est: &Network, truth: &TrueNetwork) -> NetMetrics {
    compare_edges(&est.pairs(), &truth.edges)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeSummary {
    pub degrees: Vec<usize>,
    pub edge_count: usize,
    /// Edge distances in increasing order.
    pub edge_distances: Vec<f64>,
    pub mean_degree: f64,
    pub max_degree: usize,
}

pub fn degree_summary(net: &Network) -> DegreeSummary {
    let mut degrees = vec![0usize; net.d];
    for e in &net.edges {
        degrees[e.i] += 1;
        degrees[e.j] += 1;
    }
    let mut edge_distances: Vec<f64> = net.edges.iter().map(|e| e.distance).collect();
    edge_distances.sort_by(f64::total_cmp);
    let mean_degree = if net.d > 0 {
        degrees.iter().sum::<usize>() as f64 / net.d as f64
    } else {
        0.0
    };
    DegreeSummary {
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        degrees,
        edge_count: net.edges.len(),
        edge_distances,
        mean_degree,
    }
}
