//! `chinet chinet`: empirical and bias-corrected chi networks.

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Value};

use chinet_core::domain::{CoordSystem, DistanceUnits, StationSet};
use chinet_core::pipeline::{estimate, Estimate, EstimationConfig};
use chinet_core::shrinkage::{degree_summary, DegreeSummary, Network};
use chinet_core::spline::Smoothing;

use crate::config::ChinetConfig;
use crate::input::{self, IngestReport};
use crate::io::{self, Output};

/// Points of the plotted curve, from 0 to the largest distance.
const CURVE_GRID: usize = 201;

#[derive(Serialize)]
struct NetworkStats {
    edges: usize,
    mean_degree: f64,
    max_degree: usize,
    degrees: Vec<usize>,
}

impl From<DegreeSummary> for NetworkStats {
    fn from(s: DegreeSummary) -> Self {
        NetworkStats {
            edges: s.edge_count,
            mean_degree: s.mean_degree,
            max_degree: s.max_degree,
            degrees: s.degrees,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    stations: usize,
    blocks: usize,
    distance_units: DistanceUnits,
    estimation: &'a EstimationConfig,
    bins_used: usize,
    spline_lambda: f64,
    spline_edf: f64,
    smoothing: Smoothing,
    tau2_source: &'static str,
    empirical: NetworkStats,
    corrected: NetworkStats,
    ingest: Option<&'a IngestReport>,
}

fn write_edges(out: &mut Output, name: &str, net: &Network) -> Result<()> {
    let rows = net
        .edges
        .iter()
        .map(|e| vec![e.i.to_string(), e.j.to_string(), io::num(e.weight), io::num(e.distance)]);
    out.csv(name, &["i", "j", "chi", "distance"], rows)
}

fn features(s: &StationSet, net: &Network, label: &str) -> Vec<Value> {
    let c = s.coords();
    net.edges
        .iter()
        .map(|e| {
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": [c[e.i], c[e.j]]},
                "properties": {
                    "network": label,
                    "i": s.ids()[e.i],
                    "j": s.ids()[e.j],
                    "chi": e.weight,
                    "distance_km": e.distance,
                },
            })
        })
        .collect()
}

pub fn run(cfg: &ChinetConfig, out: &mut Output) -> Result<()> {
    let data = input::load(&cfg.input)?;
    let est: Estimate = estimate(&data.maxima, &data.distances, &cfg.estimation)?;
    let ids = data.stations.ids();
    let dm = &data.distances;

    io::write_stations(out, &data.stations)?;
    input::write_ingest(out, &data)?;
    io::write_matrix(out, "chi_hat.csv", ids, |i, j| est.chi.get(i, j))?;
    io::write_matrix(out, "sigma_star.csv", ids, |i, j| {
        if i == j {
            Some(0.0)
        } else {
            est.bootstrap.sd.value(i, j)
        }
    })?;
    io::write_matrix(out, "chi_tilde.csv", ids, |i, j| est.shrunk.chi_tilde.value(i, j))?;
    io::write_matrix(out, "shrinkage_weight.csv", ids, |i, j| est.shrunk.lambda.value(i, j))?;

    let rows = est.binned.bins.iter().enumerate().map(|(k, b)| {
        vec![
            k.to_string(),
            io::num(b.mean_distance),
            io::num(b.mean_chi),
            b.count.to_string(),
            io::num(b.variance),
            io::num(est.curve.fitted()[k]),
            io::num(est.tau2.eval(b.mean_distance)),
        ]
    });
    out.csv(
        "binned_curve.csv",
        &["bin", "mean_distance", "mean_chi", "count", "variance", "curve", "tau2"],
        rows,
    )?;
    let hmax = dm.max();
    let rows = (0..CURVE_GRID).map(|k| {
        let h = hmax * k as f64 / (CURVE_GRID - 1) as f64;
        vec![io::num(h), io::num(est.curve.eval(h)), io::num(est.tau2.eval(h))]
    });
    out.csv("chi_curve.csv", &["distance", "chi", "tau2"], rows)?;

    write_edges(out, "edges_empirical.csv", &est.empirical)?;
    write_edges(out, "edges_corrected.csv", &est.corrected)?;

    if data.stations.system() == CoordSystem::Geographic {
        let mut f = features(&data.stations, &est.empirical, "empirical");
        f.extend(features(&data.stations, &est.corrected, "corrected"));
        out.json("network.geojson", &json!({"type": "FeatureCollection", "features": f}))?;
    }

    let spline = est.curve.spline();
    out.json(
        "network_summary.json",
        &Summary {
            stations: data.stations.len(),
            blocks: data.maxima.blocks(),
            distance_units: dm.units(),
            estimation: &cfg.estimation,
            bins_used: est.binned.bins.len(),
            spline_lambda: spline.lambda(),
            spline_edf: spline.edf(),
            smoothing: cfg.estimation.smoothing,
            tau2_source: est.tau2.provenance(),
            empirical: degree_summary(&est.empirical).into(),
            corrected: degree_summary(&est.corrected).into(),
            ingest: data.ingest.as_ref(),
        },
    )
}
