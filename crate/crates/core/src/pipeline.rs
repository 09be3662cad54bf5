//! End-to-end estimation and the Monte Carlo benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_sd, BootstrapSummary, DEFAULT_REPLICATES};
use crate::brsim::{true_network_from_distances, uniform_stations, BrParams, BrownResnick, SimMethod, TrueNetwork};
use crate::chicurve::{
    bin_chi, estimate_tau2, fit_chi_curve, BinScheme, BinWeighting, BinnedChi, ChiCurve, Tau2Fn, Tau2Mode,
    DEFAULT_BINS,
};
use crate::domain::{edf_ranks, pairwise_distances, DistanceMatrix, MaximaMatrix, RankConvention};
use crate::error::{Error, Result};
use crate::madogram::{chi_matrix, ChiMatrix, PairRanking};
use crate::rng::{derive_seed, Purpose};
use crate::shrinkage::{shrink, threshold_network, tpr_ppv, EstimatorTag, NetMetrics, Network, ShrunkChi};
use crate::spline::Smoothing;

pub const DEFAULT_CHI_MIN: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub chi_min: f64,
    pub bins: usize,
    pub bin_scheme: BinScheme,
    pub bin_weighting: BinWeighting,
    pub smoothing: Smoothing,
    pub bootstrap_replicates: usize,
    pub rank_convention: RankConvention,
    pub pair_ranking: PairRanking,
    pub tau2: Tau2Mode,
    pub seed: u64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            chi_min: DEFAULT_CHI_MIN,
            bins: DEFAULT_BINS,
            bin_scheme: BinScheme::default(),
            bin_weighting: BinWeighting::default(),
            smoothing: Smoothing::default(),
            bootstrap_replicates: DEFAULT_REPLICATES,
            rank_convention: RankConvention::default(),
            pair_ranking: PairRanking::default(),
            tau2: Tau2Mode::Estimated,
            seed: 0,
        }
    }
}

impl EstimationConfig {
    /// Settings of the simulation benchmark: fixed logistic `tau^2` and
    /// rank / (m + 1) plotting positions.
    pub fn benchmark(seed: u64) -> Self {
        EstimationConfig {
            tau2: Tau2Mode::BENCHMARK,
            rank_convention: RankConvention::OverMPlusOne,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi_min.is_finite()) {
            return Err(Error::invalid("chi_min must be finite"));
        }
        if self.bins < 4 {
            return Err(Error::invalid(format!("need at least 4 bins, got {}", self.bins)));
        }
        if self.bootstrap_replicates < 2 {
            return Err(Error::invalid("need at least 2 bootstrap replicates"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub chi: ChiMatrix,
    pub bootstrap: BootstrapSummary,
    pub binned: BinnedChi,
    pub curve: ChiCurve,
    pub tau2: Tau2Fn,
    pub shrunk: ShrunkChi,
    pub empirical: Network,
    pub corrected: Network,
}

/// `chi_hat`, bootstrap, distance curve, `tau^2`, shrinkage and both networks.
pub fn estimate(mx: &MaximaMatrix, dm: &DistanceMatrix, cfg: &EstimationConfig) -> Result<Estimate> {
    cfg.validate()?;
    if dm.dim() != mx.stations() {
        return Err(Error::invalid(format!(
            "{} stations in the distance matrix, {} in the maxima",
            dm.dim(),
            mx.stations()
        )));
    }
    let ranks = edf_ranks(mx, cfg.rank_convention)?;
    let chi = chi_matrix(&ranks, cfg.pair_ranking);
    let bootstrap = bootstrap_sd(
        mx,
        cfg.bootstrap_replicates,
        derive_seed(cfg.seed, Purpose::Bootstrap, 0),
        cfg.rank_convention,
        cfg.pair_ranking,
    )?;
    let binned = bin_chi(&chi, dm, cfg.bins, cfg.bin_scheme)?;
    let curve = fit_chi_curve(&binned, cfg.bin_weighting, cfg.smoothing)?;
    let tau2 = estimate_tau2(&binned, &bootstrap, cfg.tau2, cfg.bin_weighting)?;
    let shrunk = shrink(&chi, &curve, &tau2, &bootstrap, dm)?;
    let empirical = threshold_network(&chi.chi_hat, dm, cfg.chi_min, EstimatorTag::Empirical);
    let corrected = threshold_network(&shrunk.chi_tilde, dm, cfg.chi_min, EstimatorTag::Corrected);
    Ok(Estimate {
        chi,
        bootstrap,
        binned,
        curve,
        tau2,
        shrunk,
        empirical,
        corrected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub stations: usize,
    pub blocks: usize,
    pub rho: f64,
    pub kappa: f64,
    pub replicates: usize,
    pub method: SimMethod,
    pub estimation: EstimationConfig,
}

impl EvaluationConfig {
    /// 100 stations on the unit square, 50 blocks, `rho = 0.05`, `kappa = 1`,
    /// 100 replicates.
    pub fn benchmark(seed: u64) -> Self {
        EvaluationConfig {
            stations: 100,
            blocks: 50,
            rho: 0.05,
            kappa: 1.0,
            replicates: 100,
            method: SimMethod::default(),
            estimation: EstimationConfig::benchmark(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub true_edges: usize,
    pub empirical: NetMetrics,
    pub corrected: NetMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Percentiles {
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    /// Replicates contributing a value.
    pub n: usize,
}

pub const SUMMARY_PROBS: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Sample quantile with linear interpolation between order statistics
/// (`x[floor(h)] + (h - floor(h)) (x[floor(h)+1] - x[floor(h)])`, `h = (n-1)p`).
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn percentiles(values: &[f64]) -> Option<Percentiles> {
    let q = |p| quantile(values, p);
    Some(Percentiles {
        p05: q(0.05)?,
        p25: q(0.25)?,
        p50: q(0.50)?,
        p75: q(0.75)?,
        p95: q(0.95)?,
        n: values.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub tpr: Option<Percentiles>,
    pub ppv: Option<Percentiles>,
    pub edge_count: Option<Percentiles>,
}

fn summarize(rows: &[&NetMetrics]) -> MetricSummary {
    let tpr: Vec<f64> = rows.iter().filter_map(|m| m.tpr).collect();
    let ppv: Vec<f64> = rows.iter().filter_map(|m| m.ppv).collect();
    let edges: Vec<f64> = rows.iter().map(|m| m.estimated_count as f64).collect();
    MetricSummary {
        tpr: percentiles(&tpr),
        ppv: percentiles(&ppv),
        edge_count: percentiles(&edges),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub true_network: TrueNetwork,
    pub replicates: Vec<ReplicateOutcome>,
    pub empirical: MetricSummary,
    pub corrected: MetricSummary,
}

/// Monte Carlo comparison of the empirical and corrected networks against
/// the true network. Station locations are drawn once; replicate `r`
/// simulates and bootstraps from seeds derived from `(seed, r)`.
pub fn evaluate(cfg: &EvaluationConfig) -> Result<Evaluation> {
    if cfg.replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let seed = cfg.estimation.seed;
    let stations = uniform_stations(cfg.stations, derive_seed(seed, Purpose::Locations, 0))?;
    let params = BrParams::new(cfg.rho, cfg.kappa, seed)?;
    let dm = pairwise_distances(&stations);
    let truth = true_network_from_distances(&dm, &params, cfg.estimation.chi_min);
    let model = BrownResnick::new(&stations, params)?;
    let replicates = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(&model, &dm, &truth, cfg, r))
        .collect::<Result<Vec<_>>>()?;
    let emp: Vec<&NetMetrics> = replicates.iter().map(|o| &o.empirical).collect();
    let cor: Vec<&NetMetrics> = replicates.iter().map(|o| &o.corrected).collect();
    Ok(Evaluation {
        empirical: summarize(&emp),
        corrected: summarize(&cor),
        true_network: truth,
        replicates,
    })
}

fn run_replicate(
    model: &BrownResnick,
    dm: &DistanceMatrix,
    truth: &TrueNetwork,
    cfg: &EvaluationConfig,
    r: usize,
) -> Result<ReplicateOutcome> {
    let base = derive_seed(cfg.estimation.seed, Purpose::MonteCarlo, r as u64);
    let mx = model.simulate(cfg.blocks, base, cfg.method)?;
    let est_cfg = EstimationConfig {
        seed: base,
        ..cfg.estimation.clone()
    };
    let est = estimate(&mx, dm, &est_cfg)?;
    Ok(ReplicateOutcome {
        replicate: r,
        true_edges: truth.edges.len(),
        empirical: tpr_ppv(&est.empirical, truth),
        corrected: tpr_ppv(&est.corrected, truth),
    })
}
