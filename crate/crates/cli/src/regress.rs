//! `chinet regress`: long-distance connectivity against a yearly covariate.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use chinet_core::ingest::parse_sst_grid;
use chinet_core::regress::{ols_fit, poisson_glm_fit, RegressionFit};

use crate::config::{CovariateSource, RegressConfig};
use crate::io::{self, Output};

const MIN_YEARS: usize = 3;

struct SeriesRow {
    count: u64,
    eligible: u64,
    log_ratio: Option<f64>,
}

fn read_series(path: &Path) -> Result<BTreeMap<i32, SeriesRow>> {
    let mut rdr = io::csv_reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["block", "count", "eligible", "log_ratio"] {
        bail!("{}: expected header block,count,eligible,log_ratio, found {header:?}", path.display());
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let at = || format!("{}:{line}", path.display());
        let year: i32 = rec[0].parse().with_context(|| format!("{}: bad block {:?}", at(), &rec[0]))?;
        let row = SeriesRow {
            count: rec[1].parse().with_context(|| format!("{}: bad count", at()))?,
            eligible: rec[2].parse().with_context(|| format!("{}: bad eligible", at()))?,
            log_ratio: match &rec[3] {
                "" => None,
                s => Some(s.parse().with_context(|| format!("{}: bad log_ratio", at()))?),
            },
        };
        if out.insert(year, row).is_some() {
            bail!("{}: repeated block {year}", at());
        }
    }
    Ok(out)
}

fn read_covariate(path: &Path) -> Result<BTreeMap<i32, f64>> {
    let mut rdr = io::csv_reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["year", "value"] {
        bail!("{}: expected header year,value, found {header:?}", path.display());
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let at = || format!("{}:{line}", path.display());
        let year: i32 = rec[0].parse().with_context(|| format!("{}: bad year", at()))?;
        let v: f64 = rec[1].parse().with_context(|| format!("{}: bad value", at()))?;
        if out.insert(year, v).is_some() {
            bail!("{}: repeated year {year}", at());
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Report<'a> {
    covariate: &'a CovariateSource,
    offset: bool,
    joined_years: Vec<i32>,
    series_only_years: Vec<i32>,
    covariate_only_years: Vec<i32>,
    /// `log_ratio ~ covariate`, years with a log-ratio.
    ols: RegressionFit,
    /// `count ~ covariate`, Poisson with log link.
    poisson: RegressionFit,
}

pub fn run(cfg: &RegressConfig, out: &mut Output) -> Result<()> {
    let series = read_series(&cfg.series)?;
    let covariate = match &cfg.covariate {
        CovariateSource::SstGrid { path, region } => parse_sst_grid(path, *region)
            .with_context(|| format!("{}", path.display()))?
            .points
            .iter()
            .map(|p| (p.year, p.sst))
            .collect(),
        CovariateSource::Series { path } => read_covariate(path)?,
    };
    let joined: Vec<i32> = series.keys().filter(|y| covariate.contains_key(y)).copied().collect();
    if joined.len() < MIN_YEARS {
        bail!("only {} year(s) join the series and the covariate; need at least {MIN_YEARS}", joined.len());
    }

    let with_ratio: Vec<i32> = joined.iter().filter(|y| series[y].log_ratio.is_some()).copied().collect();
    if with_ratio.len() < MIN_YEARS {
        bail!(
            "only {} joined year(s) have a log-ratio; need at least {MIN_YEARS} \
             (`annual --zero-counts continuity-correction` gives every year one)",
            with_ratio.len()
        );
    }
    let x: Vec<f64> = with_ratio.iter().map(|y| covariate[y]).collect();
    let r: Vec<f64> = with_ratio.iter().filter_map(|y| series[y].log_ratio).collect();
    let ols = ols_fit(&x, &r).context("log-ratio regression")?;

    // an offset of log 0 is undefined, so those years drop out
    let usable: Vec<i32> = joined
        .iter()
        .filter(|y| !cfg.offset || series[y].eligible > 0)
        .copied()
        .collect();
    if usable.len() < MIN_YEARS {
        bail!("only {} joined year(s) have eligible pairs; need at least {MIN_YEARS}", usable.len());
    }
    let x: Vec<f64> = usable.iter().map(|y| covariate[y]).collect();
    let counts: Vec<u64> = usable.iter().map(|y| series[y].count).collect();
    let offset: Option<Vec<f64>> = cfg
        .offset
        .then(|| usable.iter().map(|y| (series[y].eligible as f64).ln()).collect());
    let poisson = poisson_glm_fit(&x, &counts, offset.as_deref()).context("Poisson regression")?;

    let rows = joined.iter().map(|y| {
        let s = &series[y];
        vec![
            y.to_string(),
            s.count.to_string(),
            s.eligible.to_string(),
            io::opt(s.log_ratio),
            io::num(covariate[y]),
        ]
    });
    out.csv("joined.csv", &["year", "count", "eligible", "log_ratio", "covariate"], rows)?;
    out.json(
        "regression.json",
        &Report {
            covariate: &cfg.covariate,
            offset: cfg.offset,
            series_only_years: series.keys().filter(|y| !covariate.contains_key(y)).copied().collect(),
            covariate_only_years: covariate.keys().filter(|y| !series.contains_key(y)).copied().collect(),
            joined_years: joined,
            ols,
            poisson,
        },
    )
}
