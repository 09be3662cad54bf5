//! Readers for daily station precipitation (CSV interchange and GHCN-Daily
//! `.dly`), station coverage filtering, seasonal maxima and area-averaged
//! SST series.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::domain::{block_maxima_cells, BlockRule, DailySeries, MaximaMatrix};
use crate::error::{Error, Result};

pub const DAILY_HEADER: [&str; 3] = ["station", "date", "prcp"];
pub const SST_HEADER: [&str; 5] = ["lon", "lat", "year", "month", "sst"];
pub const MISSING_SENTINEL: f64 = -9999.0;
pub const DEFAULT_MIN_COVERAGE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct DailyRecord {
    pub station: String,
    pub date: NaiveDate,
    pub prcp: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailyTable {
    pub records: Vec<DailyRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Parsed {
    pub table: DailyTable,
    pub rejects: Vec<Reject>,
}

impl DailyTable {
    pub fn station_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.iter().map(|r| r.station.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// One date-sorted series per station, stations in id order. A repeated
    /// date keeps its first record.
    pub fn by_station(&self) -> BTreeMap<String, DailySeries> {
        let mut grouped: BTreeMap<&str, BTreeMap<NaiveDate, Option<f64>>> = BTreeMap::new();
        for r in &self.records {
            grouped
                .entry(&r.station)
                .or_default()
                .entry(r.date)
                .or_insert(r.prcp);
        }
        grouped
            .into_iter()
            .map(|(id, days)| (id.to_string(), DailySeries { days: days.into_iter().collect() }))
            .collect()
    }
}

fn parse_value(field: &str) -> std::result::Result<Option<f64>, String> {
    let f = field.trim();
    if f.is_empty() || f.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    let v: f64 = f.parse().map_err(|_| format!("unparseable precipitation {f:?}"))?;
    if v == MISSING_SENTINEL {
        return Ok(None);
    }
    if !v.is_finite() {
        return Err(format!("non-finite precipitation {f:?}"));
    }
    if v < 0.0 {
        return Err(format!("negative precipitation {v}"));
    }
    Ok(Some(v))
}

/// Parses the `station,date,prcp` interchange format. Malformed rows are
/// collected instead of failing the read.
pub fn read_daily_csv<R: Read>(reader: R) -> Result<Parsed> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != DAILY_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header station,date,prcp, found {}", names.join(",")),
        });
    }
    let mut out = Parsed::default();
    let mut seen = std::collections::HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let raw = rec.iter().collect::<Vec<_>>().join(",");
        let mut reject = |reason: String| {
            out.rejects.push(Reject {
                line,
                reason,
                raw: raw.clone(),
            })
        };
        if rec.len() != 3 {
            reject(format!("expected 3 fields, found {}", rec.len()));
            continue;
        }
        let station = rec[0].trim();
        if station.is_empty() {
            reject("empty station id".into());
            continue;
        }
        let date = match NaiveDate::parse_from_str(rec[1].trim(), "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                reject(format!("invalid date {:?}", rec[1].trim()));
                continue;
            }
        };
        let prcp = match parse_value(&rec[2]) {
            Ok(v) => v,
            Err(e) => {
                reject(e);
                continue;
            }
        };
        if !seen.insert((station.to_string(), date)) {
            reject(format!("duplicate record for {station} on {date}"));
            continue;
        }
        out.table.records.push(DailyRecord {
            station: station.to_string(),
            date,
            prcp,
        });
    }
    Ok(out)
}

pub fn parse_daily_csv(path: impl AsRef<Path>) -> Result<Parsed> {
    read_daily_csv(std::fs::File::open(path)?)
}

/// Writes the interchange format; missing values are left empty.
pub fn write_daily_csv<W: Write>(t: &DailyTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DAILY_HEADER)?;
    for r in &t.records {
        let v = r.prcp.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([r.station.as_str(), &r.date.format("%Y-%m-%d").to_string(), &v])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejects<W: Write>(rejects: &[Reject], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["line", "reason", "raw"])?;
    for r in rejects {
        w.write_record([r.line.to_string().as_str(), &r.reason, &r.raw])?;
    }
    w.flush()?;
    Ok(())
}

const DLY_DAYS: usize = 31;
const DLY_LINE: usize = 21 + 8 * DLY_DAYS;

/// Parses GHCN-Daily fixed-width records, keeping `PRCP`. Values are tenths
/// of a millimetre; `-9999` or any quality flag marks the day missing.
pub fn read_ghcn_dly<R: Read>(reader: R) -> Result<Parsed> {
    let mut out = Parsed::default();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = k as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let reject = |reason: String| Reject {
            line: lineno,
            reason,
            raw: line.clone(),
        };
        if !line.is_ascii() || line.len() < 21 {
            out.rejects.push(reject("not a fixed-width GHCN-Daily record".into()));
            continue;
        }
        let padded = format!("{line:<DLY_LINE$}");
        let id = padded[0..11].trim();
        let element = &padded[17..21];
        if element != "PRCP" {
            continue;
        }
        let (Ok(year), Ok(month)) = (padded[11..15].parse::<i32>(), padded[15..17].parse::<u32>()) else {
            out.rejects.push(reject("unparseable year or month".into()));
            continue;
        };
        if id.is_empty() || !(1..=12).contains(&month) {
            out.rejects.push(reject("invalid station id or month".into()));
            continue;
        }
        for day in 0..DLY_DAYS {
            let start = 21 + 8 * day;
            let Some(date) = NaiveDate::from_ymd_opt(year, month, day as u32 + 1) else {
                continue;
            };
            let field = padded[start..start + 5].trim();
            let qflag = &padded[start + 6..start + 7];
            let prcp = match field.parse::<i64>() {
                Ok(-9999) => None,
                Ok(v) if v < 0 => {
                    out.rejects.push(reject(format!("negative precipitation on day {}", day + 1)));
                    None
                }
                Ok(_) if qflag != " " => None,
                Ok(v) => Some(v as f64 / 10.0),
                Err(_) if field.is_empty() => None,
                Err(_) => {
                    out.rejects.push(reject(format!("unparseable value {field:?} on day {}", day + 1)));
                    None
                }
            };
            out.table.records.push(DailyRecord {
                station: id.to_string(),
                date,
                prcp,
            });
        }
    }
    Ok(out)
}

pub fn parse_ghcn_dly(path: impl AsRef<Path>) -> Result<Parsed> {
    read_ghcn_dly(std::fs::File::open(path)?)
}

/// The days a station's coverage fraction is measured over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveragePeriod {
    /// Every day of the configured years.
    #[default]
    StudyPeriod,
    /// The configured years cut down to the station's first and last record.
    StationSpan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationCoverage {
    pub station: String,
    pub fraction: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub table: DailyTable,
    pub coverage: Vec<StationCoverage>,
}

/// Keeps stations whose share of non-missing days over the period is at
/// least `min_fraction`. Days absent from the table count as missing.
pub fn filter_stations(
    t: &DailyTable,
    min_fraction: f64,
    years: RangeInclusive<i32>,
    period: CoveragePeriod,
) -> Result<Filtered> {
    if !(min_fraction > 0.0 && min_fraction <= 1.0) {
        return Err(Error::invalid(format!("min_fraction {min_fraction} outside (0, 1]")));
    }
    let invalid_range = || Error::invalid(format!("invalid year range {years:?}"));
    let first = NaiveDate::from_ymd_opt(*years.start(), 1, 1).ok_or_else(invalid_range)?;
    let last = NaiveDate::from_ymd_opt(*years.end(), 12, 31).ok_or_else(invalid_range)?;
    if last < first {
        return Err(invalid_range());
    }
    let mut coverage = Vec::new();
    for (id, s) in t.by_station() {
        let (lo, hi) = match period {
            CoveragePeriod::StudyPeriod => (first, last),
            CoveragePeriod::StationSpan => match (s.days.first(), s.days.last()) {
                (Some(a), Some(b)) => (a.0.max(first), b.0.min(last)),
                _ => (first, first.pred_opt().unwrap_or(first)),
            },
        };
        let total = (hi - lo).num_days() + 1;
        let present = s
            .days
            .iter()
            .filter(|(d, v)| v.is_some() && *d >= lo && *d <= hi)
            .count();
        let fraction = if total > 0 { present as f64 / total as f64 } else { 0.0 };
        coverage.push(StationCoverage {
            station: id,
            fraction,
            kept: fraction >= min_fraction,
        });
    }
    let keep: std::collections::HashSet<&str> = coverage
        .iter()
        .filter(|c| c.kept)
        .map(|c| c.station.as_str())
        .collect();
    let table = DailyTable {
        records: t
            .records
            .iter()
            .filter(|r| keep.contains(r.station.as_str()))
            .cloned()
            .collect(),
    };
    Ok(Filtered { table, coverage })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalMaxima {
    /// Column order of `maxima`.
    pub station_ids: Vec<String>,
    pub maxima: MaximaMatrix,
    /// Stations with fewer than two valid blocks.
    pub dropped: Vec<String>,
}

/// Per station-year maxima over `months`, stations in id order.
pub fn seasonal_maxima(
    t: &DailyTable,
    months: &[u32],
    years: RangeInclusive<i32>,
    completeness: f64,
) -> Result<SeasonalMaxima> {
    let rule = BlockRule::Months(months.to_vec());
    let grouped = t.by_station();
    let ids: Vec<String> = grouped.keys().cloned().collect();
    let series: Vec<DailySeries> = grouped.into_values().collect();
    let (labels, cells) = block_maxima_cells(&series, &rule, years, completeness)?;
    let d = series.len();
    let m = labels.len();
    let (mut keep, mut dropped) = (Vec::new(), Vec::new());
    for (i, id) in ids.into_iter().enumerate() {
        let valid = (0..m).filter(|&r| cells[r * d + i].is_some()).count();
        if valid >= 2 {
            keep.push((i, id));
        } else {
            dropped.push(id);
        }
    }
    if keep.len() < 2 {
        return Err(Error::invalid(format!(
            "only {} station(s) have at least two valid seasons",
            keep.len()
        )));
    }
    let mut kept_cells = Vec::with_capacity(m * keep.len());
    for r in 0..m {
        kept_cells.extend(keep.iter().map(|&(i, _)| cells[r * d + i]));
    }
    let maxima = MaximaMatrix::new(labels, keep.len(), kept_cells)?;
    Ok(SeasonalMaxima {
        station_ids: keep.into_iter().map(|(_, id)| id).collect(),
        maxima,
        dropped,
    })
}

/// Longitude/latitude box in degrees, boundaries inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLatBox {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl LonLatBox {
    /// 95W-83W, 23N-29N.
    pub const GULF_OF_MEXICO: LonLatBox = LonLatBox {
        lon_min: -95.0,
        lon_max: -83.0,
        lat_min: 23.0,
        lat_max: 29.0,
    };

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        let lon = if lon > 180.0 { lon - 360.0 } else { lon };
        (self.lon_min..=self.lon_max).contains(&lon) && (self.lat_min..=self.lat_max).contains(&lat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SstPoint {
    /// Year in which the window ends.
    pub year: i32,
    pub sst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SstSeries {
    pub region: LonLatBox,
    /// First month of the 12-month window, counted in the year before the label.
    pub window_start_month: u32,
    pub points: Vec<SstPoint>,
}

/// Reads a `lon,lat,year,month,sst` grid and averages it over `region`:
/// cos(latitude)-weighted per month, then the plain mean of July of the
/// previous year through June. A year is reported only when all twelve
/// months have data.
pub fn sst_area_average<R: Read>(reader: R, region: LonLatBox) -> Result<SstSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if names != SST_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header lon,lat,year,month,sst, found {}", names.join(",")),
        });
    }
    // (year, month) -> (weighted sum, weight)
    let mut monthly: BTreeMap<(i32, u32), (f64, f64)> = BTreeMap::new();
    let mut any_cell = false;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line()) as usize;
        let field = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad {} value {:?}", SST_HEADER[k], field(k)),
            })
        };
        let (lon, lat) = (num(0)?, num(1)?);
        if !region.contains(lon, lat) {
            continue;
        }
        any_cell = true;
        let year = num(2)? as i32;
        let month = num(3)? as u32;
        if !(1..=12).contains(&month) {
            return Err(Error::Parse {
                line,
                message: format!("month {month} out of range"),
            });
        }
        let s = field(4);
        if s.is_empty() || s.eq_ignore_ascii_case("na") {
            continue;
        }
        let v = num(4)?;
        if !v.is_finite() {
            continue;
        }
        let w = lat.to_radians().cos();
        let e = monthly.entry((year, month)).or_insert((0.0, 0.0));
        e.0 += w * v;
        e.1 += w;
    }
    if !any_cell {
        return Err(Error::invalid("no grid cells fall inside the box"));
    }
    let means: BTreeMap<(i32, u32), f64> = monthly
        .into_iter()
        .filter(|(_, (_, w))| *w > 0.0)
        .map(|(k, (s, w))| (k, s / w))
        .collect();
    let years: std::collections::BTreeSet<i32> = means.keys().map(|&(y, m)| if m >= 7 { y + 1 } else { y }).collect();
    let points = years
        .into_iter()
        .filter_map(|label| {
            let window = (7..=12).map(|m| (label - 1, m)).chain((1..=6).map(|m| (label, m)));
            let vals: Option<Vec<f64>> = window.map(|k| means.get(&k).copied()).collect();
            vals.map(|v| SstPoint {
                year: label,
                sst: v.iter().sum::<f64>() / 12.0,
            })
        })
        .collect();
    Ok(SstSeries {
        region,
        window_start_month: 7,
        points,
    })
}

pub fn parse_sst_grid(path: impl AsRef<Path>, region: LonLatBox) -> Result<SstSeries> {
    sst_area_average(std::fs::File::open(path)?, region)
}

/// Calendar-year label of a date inside the July-June window.
pub fn sst_window_label(date: NaiveDate) -> i32 {
    if date.month() >= 7 {
        date.year() + 1
    } else {
        date.year()
    }
}
