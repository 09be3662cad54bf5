//! Station data for `chinet` and `annual`: a wide maxima table, or daily
//! records reduced to seasonal maxima.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::Datelike;
use serde::Serialize;

use chinet_core::domain::{pairwise_distances, DistanceMatrix, MaximaMatrix, StationSet};
use chinet_core::ingest::{filter_stations, parse_daily_csv, parse_ghcn_dly, seasonal_maxima, DailyTable, Reject};

use crate::config::InputConfig;
use crate::io::{self, Output};

pub struct Loaded {
    pub stations: StationSet,
    pub distances: DistanceMatrix,
    pub maxima: MaximaMatrix,
    pub ingest: Option<IngestReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub years: (i32, i32),
    pub months: Vec<u32>,
    pub records: usize,
    pub rejected_rows: usize,
    pub stations_read: usize,
    pub stations_kept_by_coverage: usize,
    /// Kept by coverage but with fewer than two valid seasons.
    pub stations_dropped_for_seasons: Vec<String>,
    pub coverage_period: chinet_core::ingest::CoveragePeriod,
    pub min_coverage: f64,
    pub completeness: f64,
    #[serde(skip)]
    rejects: Vec<(PathBuf, Reject)>,
    #[serde(skip)]
    coverage: Vec<chinet_core::ingest::StationCoverage>,
}

impl IngestReport {
    /// `rejects.csv` and `coverage.csv`.
    pub fn write(&self, out: &mut Output) -> Result<()> {
        let rows = self.rejects.iter().map(|(f, r)| {
            vec![f.display().to_string(), r.line.to_string(), r.reason.clone(), r.raw.clone()]
        });
        out.csv("rejects.csv", &["file", "line", "reason", "raw"], rows)?;
        let rows = self
            .coverage
            .iter()
            .map(|c| vec![c.station.clone(), io::num(c.fraction), c.kept.to_string()]);
        out.csv("coverage.csv", &["station", "fraction", "kept"], rows)
    }
}

fn daily_files(cfg: &InputConfig) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in &cfg.dly {
        if p.is_dir() {
            let found = io::dir_files(p, "dly")?;
            if found.is_empty() {
                bail!("no .dly files in {}", p.display());
            }
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn read_daily(cfg: &InputConfig) -> Result<(DailyTable, Vec<(PathBuf, Reject)>)> {
    let mut table = DailyTable::default();
    let mut rejects = Vec::new();
    let mut absorb = |path: &Path, parsed: chinet_core::ingest::Parsed| {
        table.records.extend(parsed.table.records);
        rejects.extend(parsed.rejects.into_iter().map(|r| (path.to_path_buf(), r)));
    };
    if let Some(p) = &cfg.daily {
        absorb(p, parse_daily_csv(p).with_context(|| format!("{}", p.display()))?);
    }
    for p in daily_files(cfg)? {
        absorb(&p, parse_ghcn_dly(&p).with_context(|| format!("{}", p.display()))?);
    }
    Ok((table, rejects))
}

pub fn load(cfg: &InputConfig) -> Result<Loaded> {
    cfg.validate()?;
    let table = io::read_station_table(&cfg.stations)?;
    if let Some(path) = &cfg.maxima {
        let wide = io::read_maxima(path)?;
        let stations = io::stations_for(&table, &wide.ids, cfg.coords)?;
        return Ok(Loaded {
            distances: pairwise_distances(&stations),
            stations,
            maxima: wide.maxima,
            ingest: None,
        });
    }

    let (daily, rejects) = read_daily(cfg)?;
    if daily.records.is_empty() {
        bail!("daily input holds no usable records");
    }
    let years = match cfg.years {
        Some(y) => y,
        None => {
            let ys = daily.records.iter().map(|r| r.date.year());
            (ys.clone().min().unwrap_or_default(), ys.max().unwrap_or_default())
        }
    };
    let filtered = filter_stations(&daily, cfg.min_coverage, years.0..=years.1, cfg.coverage_period)?;
    let kept = filtered.coverage.iter().filter(|c| c.kept).count();
    if kept < 2 {
        bail!("{kept} station(s) pass the {} coverage filter; need at least 2", cfg.min_coverage);
    }
    let seasonal = seasonal_maxima(&filtered.table, &cfg.months, years.0..=years.1, cfg.completeness)?;
    let stations = io::stations_for(&table, &seasonal.station_ids, cfg.coords)?;
    let report = IngestReport {
        years,
        months: cfg.months.clone(),
        records: daily.records.len(),
        rejected_rows: rejects.len(),
        stations_read: filtered.coverage.len(),
        stations_kept_by_coverage: kept,
        stations_dropped_for_seasons: seasonal.dropped.clone(),
        coverage_period: cfg.coverage_period,
        min_coverage: cfg.min_coverage,
        completeness: cfg.completeness,
        rejects,
        coverage: filtered.coverage,
    };
    Ok(Loaded {
        distances: pairwise_distances(&stations),
        stations,
        maxima: seasonal.maxima,
        ingest: Some(report),
    })
}

/// Writes the derived maxima and the ingest reports when daily data was read.
pub fn write_ingest(out: &mut Output, l: &Loaded) -> Result<()> {
    if let Some(report) = &l.ingest {
        io::write_maxima(out, l.stations.ids(), &l.maxima)?;
        report.write(out)?;
    }
    Ok(())
}
