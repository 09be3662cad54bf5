//! Per-block co-exceedance networks and their long-distance connectivity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DistanceMatrix, RankMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_U_STAR: f64 = 0.95;
pub const DEFAULT_LONG_DISTANCE_KM: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualNetwork {
    pub label: i32,
    /// `(i, j)` with `i < j`, both ranks above the threshold.
    pub edges: Vec<(usize, usize)>,
    /// Stations with a valid value in this block.
    #[serde(skip)]
    pub active: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnualNetworkSeries {
    pub threshold: f64,
    pub blocks: Vec<AnnualNetwork>,
    #[serde(skip)]
    pub d: usize,
}

pub fn annual_networks(r: &RankMatrix, u_star: f64) -> Result<AnnualNetworkSeries> {
    if !(u_star > 0.0 && u_star < 1.0) {
        return Err(Error::invalid(format!("threshold u* = {u_star} outside (0, 1)")));
    }
    let d = r.stations();
    let blocks = (0..r.blocks())
        .into_par_iter()
        .map(|t| {
            let hot: Vec<usize> = (0..d)
                .filter(|&i| r.get(t, i).is_some_and(|u| u > u_star))
                .collect();
            let mut edges = Vec::with_capacity(hot.len() * hot.len().saturating_sub(1) / 2);
            for (a, &i) in hot.iter().enumerate() {
                for &j in &hot[a + 1..] {
                    edges.push((i, j));
                }
            }
            AnnualNetwork {
                label: r.labels()[t],
                edges,
                active: (0..d).map(|i| r.get(t, i).is_some()).collect(),
            }
        })
        .collect();
    Ok(AnnualNetworkSeries {
        threshold: u_star,
        blocks,
        d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EligiblePairs {
    /// Pairs among stations with valid data in the block.
    #[default]
    PerBlock,
    /// Every station pair, every block.
    AllStations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCounts {
    /// Blocks with no long-distance edges get no log-ratio.
    #[default]
    Exclude,
    /// Use `log((N + 0.5) / P)` for every block.
    ContinuityCorrection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongDistancePoint {
    pub label: i32,
    pub count: usize,
    pub eligible: usize,
    pub log_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongDistanceSeries {
    pub distance: f64,
    pub eligible_mode: EligiblePairs,
    pub zero_counts: ZeroCounts,
    pub points: Vec<LongDistancePoint>,
}

/// Counts edges longer than `distance` in each block.
pub fn long_distance_series(
    a: &AnnualNetworkSeries,
    dm: &DistanceMatrix,
    distance: f64,
    eligible_mode: EligiblePairs,
    zero_counts: ZeroCounts,
) -> Result<LongDistanceSeries> {
    if !(distance >= 0.0) {
        return Err(Error::invalid(format!("distance {distance} must be >= 0")));
    }
    if dm.dim() != a.d {
        return Err(Error::invalid("distance matrix does not match the networks"));
    }
    let long: Vec<(usize, usize)> = dm
        .as_sym()
        .pairs()
        .filter(|&(i, j)| dm.get(i, j) > distance)
        .collect();
    if long.is_empty() {
        return Err(Error::NoEligiblePairs { distance });
    }
    let points = a
        .blocks
        .iter()
        .map(|b| {
            let count = b
                .edges
                .iter()
                .filter(|&&(i, j)| dm.get(i, j) > distance)
                .count();
            let eligible = match eligible_mode {
                EligiblePairs::AllStations => long.len(),
                EligiblePairs::PerBlock => long
                    .iter()
                    .filter(|&&(i, j)| b.active[i] && b.active[j])
                    .count(),
            };
            let log_ratio = match zero_counts {
                _ if eligible == 0 => None,
                ZeroCounts::Exclude if count == 0 => None,
                ZeroCounts::Exclude => Some((count as f64 / eligible as f64).ln()),
                ZeroCounts::ContinuityCorrection => {
                    Some(((count as f64 + 0.5) / eligible as f64).ln())
                }
            };
            LongDistancePoint {
                label: b.label,
                count,
                eligible,
                log_ratio,
            }
        })
        .collect();
    Ok(LongDistanceSeries {
        distance,
        eligible_mode,
        zero_counts,
        points,
    })
}
