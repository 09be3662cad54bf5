//! `chinet annual`: per-block co-exceedance networks and their
//! long-distance connections.

use anyhow::Result;
use serde::Serialize;

use chinet_core::annualnet::{annual_networks, long_distance_series, EligiblePairs, ZeroCounts};
use chinet_core::domain::{edf_ranks, DistanceUnits, RankConvention};

use crate::config::AnnualConfig;
use crate::input::{self, IngestReport};
use crate::io::{self, Output};

#[derive(Serialize)]
struct Summary<'a> {
    stations: usize,
    blocks: usize,
    u_star: f64,
    long_distance: f64,
    distance_units: DistanceUnits,
    rank_convention: RankConvention,
    eligible: EligiblePairs,
    zero_counts: ZeroCounts,
    total_edges: usize,
    total_long_edges: usize,
    blocks_without_edges: usize,
    ingest: Option<&'a IngestReport>,
}

pub fn run(cfg: &AnnualConfig, out: &mut Output) -> Result<()> {
    let data = input::load(&cfg.input)?;
    let dm = &data.distances;
    let ranks = edf_ranks(&data.maxima, cfg.rank_convention)?;
    let nets = annual_networks(&ranks, cfg.u_star)?;
    // fails before anything is written when no pair is long enough
    let series = long_distance_series(&nets, dm, cfg.long_distance, cfg.eligible, cfg.zero_counts)?;

    io::write_stations(out, &data.stations)?;
    input::write_ingest(out, &data)?;
    let rows = nets.blocks.iter().flat_map(|b| {
        b.edges.iter().map(move |&(i, j)| {
            vec![b.label.to_string(), i.to_string(), j.to_string(), io::num(dm.get(i, j))]
        })
    });
    out.csv("annual_edges.csv", &["block", "i", "j", "distance"], rows)?;
    let rows = nets.blocks.iter().map(|b| {
        let active = b.active.iter().filter(|&&a| a).count();
        vec![b.label.to_string(), active.to_string(), b.edges.len().to_string()]
    });
    out.csv("annual_counts.csv", &["block", "active_stations", "edges"], rows)?;
    let rows = series
        .points
        .iter()
        .map(|p| vec![p.label.to_string(), p.count.to_string(), p.eligible.to_string(), io::opt(p.log_ratio)]);
    out.csv("long_distance.csv", &["block", "count", "eligible", "log_ratio"], rows)?;

    out.json(
        "summary.json",
        &Summary {
            stations: data.stations.len(),
            blocks: nets.blocks.len(),
            u_star: cfg.u_star,
            long_distance: cfg.long_distance,
            distance_units: dm.units(),
            rank_convention: cfg.rank_convention,
            eligible: cfg.eligible,
            zero_counts: cfg.zero_counts,
            total_edges: nets.blocks.iter().map(|b| b.edges.len()).sum(),
            total_long_edges: series.points.iter().map(|p| p.count).sum(),
            blocks_without_edges: nets.blocks.iter().filter(|b| b.edges.is_empty()).count(),
            ingest: data.ingest.as_ref(),
        },
    )
}
