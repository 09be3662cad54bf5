//! Stations, distances, block maxima and empirical-CDF ranks.

use std::collections::HashSet;
use std::ops::RangeInclusive;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used for great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Default minimum fraction of non-missing days for a block maximum to count.
pub const DEFAULT_BLOCK_COMPLETENESS: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordSystem {
    /// Unitless Euclidean plane.
    Planar,
    /// Longitude/latitude in degrees.
    Geographic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationSet {
    ids: Vec<String>,
    coords: Vec<[f64; 2]>,
    system: CoordSystem,
}

impl StationSet {
    /// Builds a station set. For geographic sets coordinates are `[lon, lat]`.
    pub fn new(ids: Vec<String>, coords: Vec<[f64; 2]>, system: CoordSystem) -> Result<Self> {
        if ids.len() != coords.len() {
            return Err(Error::invalid(format!(
                "{} station ids but {} coordinates",
                ids.len(),
                coords.len()
            )));
        }
        if ids.len() < 2 {
            return Err(Error::invalid("a station set needs at least 2 stations"));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate station id {id:?}")));
            }
        }
        for (id, c) in ids.iter().zip(&coords) {
            if !c[0].is_finite() || !c[1].is_finite() {
                return Err(Error::invalid(format!("station {id}: non-finite coordinate")));
            }
            if system == CoordSystem::Geographic
                && !((-180.0..=180.0).contains(&c[0]) && (-90.0..=90.0).contains(&c[1]))
            {
                return Err(Error::invalid(format!(
                    "station {id}: ({}, {}) is outside lon [-180,180] / lat [-90,90]",
                    c[0], c[1]
                )));
            }
        }
        Ok(StationSet { ids, coords, system })
    }

    /// Stations labelled `s0, s1, ...` on the plane.
    pub fn planar(coords: Vec<[f64; 2]>) -> Result<Self> {
        let ids = (0..coords.len()).map(|i| format!("s{i}")).collect();
        Self::new(ids, coords, CoordSystem::Planar)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn system(&self) -> CoordSystem {
        self.system
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|s| s == id)
    }

    /// Keeps the listed stations, in the listed order.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        Self::new(
            keep.iter().map(|&i| self.ids[i].clone()).collect(),
            keep.iter().map(|&i| self.coords[i]).collect(),
            self.system,
        )
    }
}

/// Symmetric `d x d` matrix of reals. `NaN` marks a missing entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    d: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn filled(d: usize, value: f64) -> Self {
        SymMatrix {
            d,
            data: vec![value; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Raw entry; `NaN` when missing.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    /// Entry, or `None` when missing.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.get(i, j);
        (!v.is_nan()).then_some(v)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.d + j] = v;
        self.data[j * self.d + i] = v;
    }

    /// Iterates `(i, j)` over the strict upper triangle in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        upper_pairs(self.d)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SymMatrix {
            d: self.d,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

pub fn upper_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| (i + 1..d).map(move |j| (i, j)))
}

/// Number of unordered pairs among `d` items.
pub fn pair_count(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceUnits {
    Unitless,
    Kilometres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    matrix: SymMatrix,
    units: DistanceUnits,
}

impl DistanceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn units(&self) -> DistanceUnits {
        self.units
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.matrix
    }

    /// Largest off-diagonal distance.
    pub fn max(&self) -> f64 {
        self.matrix
            .pairs()
            .map(|(i, j)| self.get(i, j))
            .fold(0.0, f64::max)
    }
}

/// Great-circle distance in km between two `[lon, lat]` points in degrees.
pub fn haversine_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let s_lat = ((lat2 - lat1) / 2.0).sin();
    let s_lon = ((lon2 - lon1) / 2.0).sin();
    let h = s_lat * s_lat + lat1.cos() * lat2.cos() * s_lon * s_lon;
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn pairwise_distances(s: &StationSet) -> DistanceMatrix {
    let d = s.len();
    let mut matrix = SymMatrix::filled(d, 0.0);
    let c = s.coords();
    for (i, j) in upper_pairs(d) {
        let h = match s.system() {
            CoordSystem::Planar => (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]),
            CoordSystem::Geographic => haversine_km(c[i], c[j]),
        };
        matrix.set(i, j, h);
    }
    let units = match s.system() {
        CoordSystem::Planar => DistanceUnits::Unitless,
        CoordSystem::Geographic => DistanceUnits::Kilometres,
    };
    DistanceMatrix { matrix, units }
}

/// `m` blocks by `d` stations of block maxima. Missing cells are stored as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximaMatrix {
    m: usize,
    d: usize,
    values: Vec<f64>,
    labels: Vec<i32>,
}

impl MaximaMatrix {
    /// `cells` is row-major (`m` rows of `d` stations); `None` or `NaN` is invalid.
    pub fn new(labels: Vec<i32>, d: usize, cells: Vec<Option<f64>>) -> Result<Self> {
        let m = labels.len();
        if cells.len() != m * d {
            return Err(Error::invalid(format!(
                "expected {} cells for {m} blocks x {d} stations, got {}",
                m * d,
                cells.len()
            )));
        }
        let values: Vec<f64> = cells
            .into_iter()
            .map(|c| c.filter(|v| !v.is_nan()).unwrap_or(f64::NAN))
            .collect();
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::invalid("block maxima must be finite"));
        }
        let mx = MaximaMatrix {
            m,
            d,
            values,
            labels,
        };
        for i in 0..d {
            let n = mx.valid_count(i);
            if n < 2 {
                return Err(Error::invalid(format!(
                    "station column {i} has {n} valid blocks (need >= 2)"
                )));
            }
        }
        Ok(mx)
    }

    /// Complete matrix from row-major values with blocks labelled `1..=m`.
    pub fn from_rows(m: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(
            (1..=m as i32).collect(),
            d,
            values.into_iter().map(Some).collect(),
        )
    }

    pub fn blocks(&self) -> usize {
        self.m
    }

    pub fn stations(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn get(&self, t: usize, i: usize) -> Option<f64> {
        let v = self.values[t * self.d + i];
        (!v.is_nan()).then_some(v)
    }

    /// Row-major raw storage, `NaN` for invalid cells.
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.m).map(|t| self.values[t * self.d + i]).collect()
    }

    pub fn valid_count(&self, i: usize) -> usize {
        (0..self.m)
            .filter(|&t| !self.values[t * self.d + i].is_nan())
            .count()
    }

    /// Reorders or repeats rows; used for permutations and resampling.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut cells = Vec::with_capacity(rows.len() * self.d);
        for &t in rows {
            cells.extend((0..self.d).map(|i| self.get(t, i)));
        }
        Self::new(rows.iter().map(|&t| self.labels[t]).collect(), self.d, cells)
    }

    /// Keeps the listed station columns.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut cells = Vec::with_capacity(self.m * cols.len());
        for t in 0..self.m {
            cells.extend(cols.iter().map(|&i| self.get(t, i)));
        }
        Self::new(self.labels.clone(), cols.len(), cells)
    }

    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let cells = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| (!v.is_nan()).then(|| f(k % self.d, v)))
            .collect();
        Self::new(self.labels.clone(), self.d, cells)
    }
}

/// Plotting position used to turn ranks into empirical-CDF values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankConvention {
    /// rank / m; the largest value maps to 1.
    #[default]
    OverM,
    /// rank / (m + 1); every value stays strictly below 1.
    OverMPlusOne,
}

impl RankConvention {
    pub fn denominator(self, n: usize) -> f64 {
        match self {
            RankConvention::OverM => n as f64,
            RankConvention::OverMPlusOne => n as f64 + 1.0,
        }
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n && values[order[end]] == values[order[k]] {
            end += 1;
        }
        // positions k..end (0-based) hold ranks k+1..=end
        let r = (k + 1 + end) as f64 / 2.0;
        for &idx in &order[k..end] {
            ranks[idx] = r;
        }
        k = end;
    }
    ranks
}

/// Empirical-CDF values for the non-`NaN` entries of `col`; `NaN`s pass through.
pub(crate) fn edf_column(col: &[f64], convention: RankConvention) -> Vec<f64> {
    let idx: Vec<usize> = (0..col.len()).filter(|&t| !col[t].is_nan()).collect();
    let vals: Vec<f64> = idx.iter().map(|&t| col[t]).collect();
    let ranks = average_ranks(&vals);
    let denom = convention.denominator(vals.len());
    let mut out = vec![f64::NAN; col.len()];
    for (&t, r) in idx.iter().zip(ranks) {
        out[t] = r / denom;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    m: usize,
    d: usize,
    values: Vec<f64>,
    labels: Vec<i32>,
    convention: RankConvention,
}

impl RankMatrix {
    pub fn blocks(&self) -> usize {
        self.m
    }

    pub fn stations(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn convention(&self) -> RankConvention {
        self.convention
    }

    pub fn get(&self, t: usize, i: usize) -> Option<f64> {
        let v = self.values[t * self.d + i];
        (!v.is_nan()).then_some(v)
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.m).map(|t| self.values[t * self.d + i]).collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }
}

pub fn edf_ranks(mx: &MaximaMatrix, convention: RankConvention) -> Result<RankMatrix> {
    let (m, d) = (mx.blocks(), mx.stations());
    let mut values = vec![f64::NAN; m * d];
    for i in 0..d {
        let col = mx.column(i);
        let valid = col.iter().filter(|v| !v.is_nan()).count();
        if valid < 2 {
            return Err(Error::invalid(format!(
                "station column {i} has {valid} valid blocks (need >= 2)"
            )));
        }
        for (t, u) in edf_column(&col, convention).into_iter().enumerate() {
            values[t * d + i] = u;
        }
    }
    Ok(RankMatrix {
        m,
        d,
        values,
        labels: mx.labels().to_vec(),
        convention,
    })
}

/// How daily observations are grouped into blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRule {
    CalendarYear,
    /// The listed months (1-12) of each calendar year, e.g. June-October.
    Months(Vec<u32>),
}

impl BlockRule {
    pub fn hurricane_season() -> Self {
        BlockRule::Months(vec![6, 7, 8, 9, 10])
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        match self {
            BlockRule::CalendarYear => true,
            BlockRule::Months(ms) => ms.contains(&date.month()),
        }
    }

    /// Number of calendar days the block covers in `year`.
    pub fn days_in_block(&self, year: i32) -> usize {
        let Some(mut day) = NaiveDate::from_ymd_opt(year, 1, 1) else {
            return 0;
        };
        let mut n = 0;
        while day.year() == year {
            if self.contains(day) {
                n += 1;
            }
            match day.succ_opt() {
                Some(next) => day = next,
                None => break,
            }
        }
        n
    }

    fn validate(&self) -> Result<()> {
        if let BlockRule::Months(ms) = self {
            if ms.is_empty() || ms.iter().any(|m| !(1..=12).contains(m)) {
                return Err(Error::invalid(format!("invalid month set {ms:?}")));
            }
        }
        Ok(())
    }
}

/// One station's daily record; `None` marks a missing day.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailySeries {
    pub days: Vec<(NaiveDate, Option<f64>)>,
}

/// Per-block maxima for each series. A block counts only if at least
/// `completeness` of its calendar days carry a value.
pub fn block_maxima(
    series: &[DailySeries],
    rule: &BlockRule,
    years: RangeInclusive<i32>,
    completeness: f64,
) -> Result<MaximaMatrix> {
    let (labels, cells) = block_maxima_cells(series, rule, years, completeness)?;
    MaximaMatrix::new(labels, series.len(), cells)
}

/// Labels and row-major cells of [`block_maxima`] without the per-column
/// validity check.
pub(crate) fn block_maxima_cells(
    series: &[DailySeries],
    rule: &BlockRule,
    years: RangeInclusive<i32>,
    completeness: f64,
) -> Result<(Vec<i32>, Vec<Option<f64>>)> {
    rule.validate()?;
    if !(0.0..=1.0).contains(&completeness) {
        return Err(Error::invalid(format!(
            "completeness {completeness} outside [0, 1]"
        )));
    }
    let labels: Vec<i32> = years.clone().collect();
    if labels.is_empty() {
        return Err(Error::invalid("empty year range"));
    }
    let first = *years.start();
    let d = series.len();
    let m = labels.len();
    let mut max = vec![f64::NEG_INFINITY; m * d];
    let mut present = vec![0usize; m * d];
    for (i, s) in series.iter().enumerate() {
        for &(date, v) in &s.days {
            let Some(v) = v else { continue };
            if !years.contains(&date.year()) || !rule.contains(date) {
                continue;
            }
            let cell = (date.year() - first) as usize * d + i;
            present[cell] += 1;
            max[cell] = max[cell].max(v);
        }
    }
    let cells = (0..m * d)
        .map(|cell| {
            let need = rule.days_in_block(labels[cell / d]) as f64 * completeness;
            (present[cell] > 0 && present[cell] as f64 >= need).then_some(max[cell])
        })
        .collect();
    Ok((labels, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn planar_distance_is_pythagorean() {
        let s = StationSet::planar(vec![[0.0, 0.0], [3.0, 4.0]]).unwrap();
        let dm = pairwise_distances(&s);
        assert_eq!(dm.get(0, 1), 5.0);
        assert_eq!(dm.get(1, 0), 5.0);
        assert_eq!(dm.get(0, 0), 0.0);
        assert_eq!(dm.units(), DistanceUnits::Unitless);
    }

    #[test]
    fn quarter_meridian() {
        // pi/2 * 6371
        let s = StationSet::new(
            vec!["a".into(), "b".into()],
            vec![[0.0, 0.0], [0.0, 90.0]],
            CoordSystem::Geographic,
        )
        .unwrap();
        let dm = pairwise_distances(&s);
        assert_abs_diff_eq!(dm.get(0, 1), 10007.543398, epsilon = 1e-5);
        assert_eq!(dm.units(), DistanceUnits::Kilometres);
    }

    #[test]
    fn station_set_rejects_bad_input() {
        assert!(StationSet::planar(vec![[0.0, 0.0]]).is_err());
        assert!(StationSet::new(
            vec!["a".into(), "a".into()],
            vec![[0.0, 0.0], [1.0, 1.0]],
            CoordSystem::Planar
        )
        .is_err());
        assert!(StationSet::new(
            vec!["a".into(), "b".into()],
            vec![[0.0, 0.0], [190.0, 1.0]],
            CoordSystem::Geographic
        )
        .is_err());
    }

    fn single_column(vals: &[f64]) -> MaximaMatrix {
        MaximaMatrix::from_rows(vals.len(), 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn edf_examples() {
        let r = edf_ranks(&single_column(&[10.0, 30.0, 20.0]), RankConvention::OverM).unwrap();
        assert_eq!(r.column(0), vec![1.0 / 3.0, 1.0, 2.0 / 3.0]);
        let r = edf_ranks(&single_column(&[5.0, 5.0]), RankConvention::OverM).unwrap();
        assert_eq!(r.column(0), vec![0.75, 0.75]);
        let r = edf_ranks(
            &single_column(&[10.0, 30.0, 20.0]),
            RankConvention::OverMPlusOne,
        )
        .unwrap();
        assert_eq!(r.column(0), vec![0.25, 0.75, 0.5]);
    }

    #[test]
    fn edf_keeps_invalid_cells_invalid() {
        let mx = MaximaMatrix::new(vec![1, 2, 3], 1, vec![Some(1.0), None, Some(4.0)]).unwrap();
        let r = edf_ranks(&mx, RankConvention::OverM).unwrap();
        assert_eq!(r.get(0, 0), Some(0.5));
        assert_eq!(r.get(1, 0), None);
        assert_eq!(r.get(2, 0), Some(1.0));
    }

    #[test]
    fn maxima_needs_two_valid_per_column() {
        let err = MaximaMatrix::new(vec![1, 2], 1, vec![Some(1.0), None]);
        assert!(err.is_err());
    }

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn block_maximum_of_one_block() {
        let s = DailySeries {
            days: vec![
                (day(2000, 1, 1), Some(1.0)),
                (day(2000, 1, 2), Some(7.0)),
                (day(2000, 1, 3), Some(3.0)),
            ],
        };
        let full_year = DailySeries {
            days: (0..366)
                .map(|k| (day(2000, 1, 1) + chrono::Days::new(k), Some(0.5)))
                .collect(),
        };
        let mx = block_maxima(
            &[s.clone(), full_year.clone()],
            &BlockRule::CalendarYear,
            2000..=2001,
            0.0,
        );
        // second block has no data for either station -> only one valid block each
        assert!(mx.is_err());
        let s2 = DailySeries {
            days: s
                .days
                .iter()
                .copied()
                .chain([(day(2001, 5, 5), Some(2.0))])
                .collect(),
        };
        let fy2 = DailySeries {
            days: full_year
                .days
                .iter()
                .copied()
                .chain([(day(2001, 5, 5), Some(2.0))])
                .collect(),
        };
        let mx = block_maxima(&[s2, fy2], &BlockRule::CalendarYear, 2000..=2001, 0.0).unwrap();
        assert_eq!(mx.get(0, 0), Some(7.0));
        assert_eq!(mx.get(1, 0), Some(2.0));
    }

    #[test]
    fn incomplete_and_missing_blocks_are_invalid() {
        let rule = BlockRule::Months(vec![1]);
        let mut days = Vec::new();
        for y in 2000..=2003 {
            for dd in 1..=31 {
                let v = match y {
                    2001 => None,                         // all missing
                    2002 if dd > 20 => None,              // 20/31 < 0.8
                    _ => Some(dd as f64),
                };
                days.push((day(y, 1, dd), v));
            }
        }
        let mx = block_maxima(&[DailySeries { days }], &rule, 2000..=2003, 0.8).unwrap();
        assert_eq!(mx.get(0, 0), Some(31.0));
        assert_eq!(mx.get(1, 0), None);
        assert_eq!(mx.get(2, 0), None);
        assert_eq!(mx.get(3, 0), Some(31.0));
    }

    #[test]
    fn seasonal_rule_matches_direct_scan() {
        // synthetic two-year daily record, deterministic pseudo-random values
        let rule = BlockRule::hurricane_season();
        let mut days = Vec::new();
        let mut x: u64 = 12345;
        let mut scan = [f64::NEG_INFINITY; 2];
        for (k, y) in [2015, 2016].into_iter().enumerate() {
            let mut dte = day(y, 1, 1);
            while dte.year() == y {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = (x >> 33) as f64 / (1u64 << 31) as f64 * 100.0;
                days.push((dte, Some(v)));
                if (6..=10).contains(&dte.month()) {
                    scan[k] = scan[k].max(v);
                }
                dte = dte.succ_opt().unwrap();
            }
        }
        let mx = block_maxima(&[DailySeries { days }], &rule, 2015..=2016, 0.8).unwrap();
        assert_eq!((mx.blocks(), mx.stations()), (2, 1));
        assert_eq!(mx.get(0, 0), Some(scan[0]));
        assert_eq!(mx.get(1, 0), Some(scan[1]));
    }

    #[test]
    fn days_in_season() {
        assert_eq!(BlockRule::hurricane_season().days_in_block(2017), 153);
        assert_eq!(BlockRule::CalendarYear.days_in_block(2016), 366);
    }

    proptest! {
        #[test]
        fn ranks_invariant_under_increasing_transform(vals in proptest::collection::vec(-50.0f64..50.0, 2..30)) {
            let mx = single_column(&vals);
            let tx = mx.map_values(|_, v| (v / 10.0).exp() + 3.0).unwrap();
            let a = edf_ranks(&mx, RankConvention::OverM).unwrap();
            let b = edf_ranks(&tx, RankConvention::OverM).unwrap();
            prop_assert_eq!(a.raw(), b.raw());
            prop_assert!(a.raw().iter().all(|&u| u > 0.0 && u <= 1.0));
        }

        #[test]
        fn row_permutation_permutes_ranks(vals in proptest::collection::vec(0.0f64..10.0, 12), seed in 0u64..1000) {
            let mx = MaximaMatrix::from_rows(6, 2, vals).unwrap();
            let mut perm: Vec<usize> = (0..6).collect();
            let mut s = seed;
            for k in (1..6).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                perm.swap(k, (s >> 33) as usize % (k + 1));
            }
            let a = edf_ranks(&mx, RankConvention::OverM).unwrap();
            let b = edf_ranks(&mx.select_rows(&perm).unwrap(), RankConvention::OverM).unwrap();
            for (t, &p) in perm.iter().enumerate() {
                for i in 0..2 {
                    prop_assert_eq!(b.get(t, i), a.get(p, i));
                }
            }
        }

        #[test]
        fn distances_symmetric_and_metric(pts in proptest::collection::vec((-170.0f64..170.0, -80.0f64..80.0), 3..8)) {
            let s = StationSet::new(
                (0..pts.len()).map(|i| i.to_string()).collect(),
                pts.iter().map(|&(a, b)| [a, b]).collect(),
                CoordSystem::Geographic,
            ).unwrap();
            let dm = pairwise_distances(&s);
            let d = s.len();
            for i in 0..d {
                prop_assert_eq!(dm.get(i, i), 0.0);
                for j in 0..d {
                    prop_assert_eq!(dm.get(i, j), dm.get(j, i));
                    for k in 0..d {
                        prop_assert!(dm.get(i, k) <= dm.get(i, j) + dm.get(j, k) + 1e-6);
                    }
                }
            }
        }
    }
}
