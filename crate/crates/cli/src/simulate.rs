//! `chinet simulate`: Brown-Resnick maxima with their true network.

use anyhow::Result;
use serde::Serialize;

use chinet_core::brsim::{br_true_chi, true_network_from_distances, uniform_stations, BrParams, BrownResnick};
use chinet_core::domain::{pairwise_distances, CoordSystem};
use chinet_core::rng::{derive_seed, Purpose};

use crate::config::SimulateConfig;
use crate::io::{self, Output};

#[derive(Serialize)]
struct Summary {
    stations: usize,
    blocks: usize,
    rho: f64,
    kappa: f64,
    chi_min: f64,
    cutoff_distance: Option<f64>,
    true_edges: usize,
}

/// Locations and maxima use the same derived seeds as replicate 0 of
/// `evaluate`, so the two commands agree for equal settings.
pub fn run(cfg: &SimulateConfig, out: &mut Output) -> Result<()> {
    let stations = match &cfg.station_file {
        Some(p) => {
            let table = io::read_station_table(p)?;
            let ids: Vec<String> = table.keys().cloned().collect();
            io::stations_for(&table, &ids, CoordSystem::Planar)?
        }
        None => uniform_stations(cfg.stations, derive_seed(cfg.seed, Purpose::Locations, 0))?,
    };
    let params = BrParams::new(cfg.rho, cfg.kappa, cfg.seed)?;
    let model = BrownResnick::new(&stations, params)?;
    let mx = model.simulate(cfg.blocks, derive_seed(cfg.seed, Purpose::MonteCarlo, 0), cfg.method)?;
    let dm = pairwise_distances(&stations);
    let truth = true_network_from_distances(&dm, &params, cfg.chi_min);
    let ids = stations.ids();

    io::write_stations(out, &stations)?;
    io::write_maxima(out, ids, &mx)?;
    io::write_matrix(out, "true_chi.csv", ids, |i, j| {
        Some(if i == j { 1.0 } else { br_true_chi(dm.get(i, j), &params) })
    })?;
    let rows = truth.edges.iter().map(|&(i, j)| {
        vec![
            i.to_string(),
            j.to_string(),
            io::num(br_true_chi(dm.get(i, j), &params)),
            io::num(dm.get(i, j)),
        ]
    });
    out.csv("true_edges.csv", &["i", "j", "chi", "distance"], rows)?;
    out.json(
        "summary.json",
        &Summary {
            stations: stations.len(),
            blocks: cfg.blocks,
            rho: cfg.rho,
            kappa: cfg.kappa,
            chi_min: cfg.chi_min,
            cutoff_distance: truth.cutoff_distance,
            true_edges: truth.edges.len(),
        },
    )
}
