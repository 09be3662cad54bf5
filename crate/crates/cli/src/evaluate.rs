//! `chinet evaluate`: Monte Carlo TPR / PPV of both networks.

use anyhow::Result;
use serde::Serialize;

use chinet_core::brsim::{br_true_chi, uniform_stations, BrParams};
use chinet_core::domain::pairwise_distances;
use chinet_core::pipeline::{evaluate, EvaluationConfig, MetricSummary, Percentiles};
use chinet_core::rng::{derive_seed, Purpose};

use crate::io::{self, Output};

#[derive(Serialize)]
struct Summary<'a> {
    quantile_rule: &'static str,
    replicates: usize,
    true_edges: usize,
    cutoff_distance: Option<f64>,
    empirical: &'a MetricSummary,
    corrected: &'a MetricSummary,
}

fn summary_row(estimator: &str, metric: &str, p: &Option<Percentiles>) -> Vec<String> {
    let mut r = vec![estimator.to_string(), metric.to_string()];
    match p {
        Some(p) => {
            r.extend([p.p05, p.p25, p.p50, p.p75, p.p95].map(io::num));
            r.push(p.n.to_string());
        }
        None => {
            r.extend(std::iter::repeat_n(String::new(), 5));
            r.push("0".into());
        }
    }
    r
}

pub fn run(cfg: &EvaluationConfig, out: &mut Output) -> Result<()> {
    let ev = evaluate(cfg)?;
    let seed = cfg.estimation.seed;
    let stations = uniform_stations(cfg.stations, derive_seed(seed, Purpose::Locations, 0))?;
    let dm = pairwise_distances(&stations);
    let params = BrParams::new(cfg.rho, cfg.kappa, seed)?;

    io::write_stations(out, &stations)?;
    let rows = ev.true_network.edges.iter().map(|&(i, j)| {
        vec![
            i.to_string(),
            j.to_string(),
            io::num(br_true_chi(dm.get(i, j), &params)),
            io::num(dm.get(i, j)),
        ]
    });
    out.csv("true_edges.csv", &["i", "j", "chi", "distance"], rows)?;

    let rows = ev.replicates.iter().map(|o| {
        vec![
            o.replicate.to_string(),
            o.true_edges.to_string(),
            io::opt(o.empirical.tpr),
            io::opt(o.empirical.ppv),
            o.empirical.estimated_count.to_string(),
            io::opt(o.corrected.tpr),
            io::opt(o.corrected.ppv),
            o.corrected.estimated_count.to_string(),
        ]
    });
    out.csv(
        "replicates.csv",
        &[
            "replicate",
            "true_edges",
            "empirical_tpr",
            "empirical_ppv",
            "empirical_edges",
            "corrected_tpr",
            "corrected_ppv",
            "corrected_edges",
        ],
        rows,
    )?;

    let mut rows = Vec::new();
    for (name, s) in [("empirical", &ev.empirical), ("corrected", &ev.corrected)] {
        rows.push(summary_row(name, "tpr", &s.tpr));
        rows.push(summary_row(name, "ppv", &s.ppv));
        rows.push(summary_row(name, "edges", &s.edge_count));
    }
    out.csv("summary.csv", &["estimator", "metric", "p05", "p25", "p50", "p75", "p95", "n"], rows)?;
    out.json(
        "summary.json",
        &Summary {
            quantile_rule: "linear interpolation, h = (n - 1) p",
            replicates: ev.replicates.len(),
            true_edges: ev.true_network.edges.len(),
            cutoff_distance: ev.true_network.cutoff_distance,
            empirical: &ev.empirical,
            corrected: &ev.corrected,
        },
    )
}
