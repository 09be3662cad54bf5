//! Brown-Resnick max-stable processes on planar station sets.
//!
//! The process is `Z(x) = max_k zeta_k exp(W_k(x) - V(x - o) / 2)` for a
//! Gaussian process `W` with stationary increments and variogram
//! `V(h) = Var(W(x + h) - W(x)) = 2 h^kappa / rho`. With this variogram the
//! pairwise tail dependence is
//!
//! ```text
//! chi(h) = 2 - 2 Phi(sqrt(V(h)) / 2) = 2 - 2 Phi(sqrt(h^kappa / (2 rho)))
//! ```
//!
//! Exact samples are drawn with the extremal-function construction: sites
//! are visited in turn, spectral functions normalised at the current site
//! arrive in decreasing order of `1/Gamma`, and a function is kept only if it
//! does not exceed the running maximum at any earlier site. Every margin is
//! unit Frechet.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domain::{pairwise_distances, CoordSystem, DistanceMatrix, MaximaMatrix, StationSet};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

const CHOLESKY_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrParams {
    pub rho: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl BrParams {
    pub fn new(rho: f64, kappa: f64, seed: u64) -> Result<Self> {
        let p = BrParams { rho, kappa, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("range rho = {} must be > 0", self.rho)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 2.0) {
            return Err(Error::invalid(format!(
                "smoothness kappa = {} must lie in (0, 2]",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Full variogram `Var(W(x) - W(y))` at distance `h`.
    pub fn variogram(&self, h: f64) -> f64 {
        2.0 * h.powf(self.kappa) / self.rho
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn br_true_chi(h: f64, p: &BrParams) -> f64 {
    2.0 * std_normal().sf((h.powf(p.kappa) / (2.0 * p.rho)).sqrt())
}

/// Distance at which `br_true_chi` equals `chi_min`; `None` outside (0, 1).
pub fn chi_cutoff_distance(chi_min: f64, p: &BrParams) -> Option<f64> {
    if !(chi_min > 0.0 && chi_min < 1.0) {
        return None;
    }
    let z = std_normal().inverse_cdf(1.0 - chi_min / 2.0);
    Some((2.0 * p.rho * z * z).powf(1.0 / p.kappa))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SimMethod {
    /// Extremal-function construction; exact unit-Frechet max-stable samples.
    #[default]
    Exact,
    /// Maximum over the first `spectral` Poisson points only (approximate).
    Approximate { spectral: usize },
}

/// A Brown-Resnick model bound to a station set, with the Gaussian
/// factorisation cached for repeated sampling.
#[derive(Debug, Clone)]
pub struct BrownResnick {
    params: BrParams,
    d: usize,
    /// Lower Cholesky factor of Cov(W(x_i) - W(x_0)), i = 1..d-1, row-major.
    chol: Vec<f64>,
    /// V(h_ij), row-major d x d.
    vario: Vec<f64>,
}

impl BrownResnick {
    pub fn new(stations: &StationSet, params: BrParams) -> Result<Self> {
        params.validate()?;
        if stations.system() != CoordSystem::Planar {
            return Err(Error::invalid("Brown-Resnick simulation needs planar stations"));
        }
        let dm = pairwise_distances(stations);
        let d = stations.len();
        for (i, j) in dm.as_sym().pairs() {
            if dm.get(i, j) == 0.0 {
                return Err(Error::invalid(format!(
                    "stations {i} and {j} share a location"
                )));
            }
        }
        let vario: Vec<f64> = (0..d * d)
            .map(|k| params.variogram(dm.get(k / d, k % d)))
            .collect();
        // Increments relative to station 0: Cov = (V(i,0) + V(j,0) - V(i,j)) / 2.
        let n = d - 1;
        let cov = DMatrix::from_fn(n, n, |a, b| {
            let (i, j) = (a + 1, b + 1);
            let c = 0.5 * (vario[i * d] + vario[j * d] - vario[i * d + j]);
            if a == b {
                c + CHOLESKY_JITTER
            } else {
                c
            }
        });
        let l = cov
            .cholesky()
            .ok_or_else(|| Error::IllConditioned("variogram covariance is not positive definite".into()))?
            .l();
        let mut chol = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..=a {
                chol[a * n + b] = l[(a, b)];
            }
        }
        Ok(BrownResnick {
            params,
            d,
            chol,
            vario,
        })
    }

    pub fn params(&self) -> &BrParams {
        &self.params
    }

    /// One draw of `W(x_i) - W(x_0)` for every station (entry 0 is 0).
    fn gaussian(&self, rng: &mut ChaCha8Rng, eps: &mut [f64], out: &mut [f64]) {
        let n = self.d - 1;
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        out[0] = 0.0;
        for a in 0..n {
            let row = &self.chol[a * n..a * n + a + 1];
            out[a + 1] = row.iter().zip(&eps[..=a]).map(|(l, e)| l * e).sum();
        }
    }

    /// Spectral function normalised to 1 at station `site`.
    fn extremal_function(&self, site: usize, rng: &mut ChaCha8Rng, eps: &mut [f64], g: &mut [f64], y: &mut [f64]) {
        self.gaussian(rng, eps, g);
        let d = self.d;
        for i in 0..d {
            y[i] = (g[i] - g[site] - 0.5 * self.vario[site * d + i]).exp();
        }
    }

    /// One max-stable replicate with unit-Frechet margins.
    pub fn sample_exact(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.d;
        let mut z = vec![0.0f64; d];
        let mut eps = vec![0.0; d - 1];
        let mut g = vec![0.0; d];
        let mut y = vec![0.0; d];
        for site in 0..d {
            let mut gamma: f64 = rng.sample(Exp1);
            while 1.0 / gamma > z[site] {
                self.extremal_function(site, rng, &mut eps, &mut g, &mut y);
                let scale = 1.0 / gamma;
                if (0..site).all(|i| y[i] * scale < z[i]) {
                    for i in 0..d {
                        z[i] = z[i].max(y[i] * scale);
                    }
                }
                gamma += rng.sample::<f64, _>(Exp1);
            }
        }
        z
    }

    /// Truncated spectral representation over `spectral` Poisson points,
    /// normalised at station 0.
    pub fn sample_approximate(&self, rng: &mut ChaCha8Rng, spectral: usize) -> Vec<f64> {
        let d = self.d;
        let mut z = vec![0.0f64; d];
        let mut eps = vec![0.0; d - 1];
        let mut g = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut gamma = 0.0;
        for _ in 0..spectral.max(1) {
            gamma += rng.sample::<f64, _>(Exp1);
            self.extremal_function(0, rng, &mut eps, &mut g, &mut y);
            for i in 0..d {
                z[i] = z[i].max(y[i] / gamma);
            }
        }
        z
    }

    /// `m` independent replicates; block `t` uses its own random stream, so
    /// output does not depend on the number of worker threads.
    pub fn simulate(&self, m: usize, seed: u64, method: SimMethod) -> Result<MaximaMatrix> {
        if m < 2 {
            return Err(Error::invalid("need at least 2 blocks"));
        }
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, Purpose::Simulation, t as u64);
                match method {
                    SimMethod::Exact => self.sample_exact(&mut rng),
                    SimMethod::Approximate { spectral } => self.sample_approximate(&mut rng, spectral),
                }
            })
            .collect();
        MaximaMatrix::from_rows(m, self.d, rows.concat())
    }
}

/// Exact simulation of `m` replicates at planar stations, seeded by `p.seed`.
pub fn br_simulate(s: &StationSet, p: &BrParams, m: usize) -> Result<MaximaMatrix> {
    BrownResnick::new(s, *p)?.simulate(m, p.seed, SimMethod::Exact)
}

/// `d` points uniform on the unit square.
pub fn uniform_stations(d: usize, seed: u64) -> Result<StationSet> {
    let mut rng = stream(seed, Purpose::Locations, 0);
    StationSet::planar((0..d).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect())
}

/// Edges `(i, j)`, `i < j`, whose model `chi` exceeds `chi_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueNetwork {
    pub edges: BTreeSet<(usize, usize)>,
    pub chi_min: f64,
    /// Distance below which pairs are connected, when `chi_min` is in (0, 1).
    pub cutoff_distance: Option<f64>,
    pub d: usize,
}

pub fn true_network(s: &StationSet, p: &BrParams, chi_min: f64) -> TrueNetwork {
    true_network_from_distances(&pairwise_distances(s), p, chi_min)
}

pub fn true_network_from_distances(dm: &DistanceMatrix, p: &BrParams, chi_min: f64) -> TrueNetwork {
    let edges = dm
        .as_sym()
        .pairs()
        .filter(|&(i, j)| br_true_chi(dm.get(i, j), p) > chi_min)
        .collect();
    TrueNetwork {
        edges,
        chi_min,
        cutoff_distance: chi_cutoff_distance(chi_min, p),
        d: dm.dim(),
    }
}
