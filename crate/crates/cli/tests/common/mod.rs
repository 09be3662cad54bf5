//! Helpers shared by the CLI test targets: running the binary and writing
//! a synthetic GHCN-Daily fixture.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chinet_core::domain::haversine_km;
use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};

pub const BIN: &str = env!("CARGO_BIN_EXE_chinet");

pub fn chinet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn chinet")
}

pub fn chinet_threads(args: &[&str], threads: usize) -> Output {
    Command::new(BIN)
        .args(args)
        .args(["--threads", &threads.to_string()])
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("spawn chinet")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// All files of a directory, by name.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Data rows of a CSV written by the CLI (hash line and header skipped).
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .expect("open csv");
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).expect("read json")).expect("parse json")
}

pub struct GulfFixture {
    pub stations: PathBuf,
    pub dly_dir: PathBuf,
    pub sst: PathBuf,
    pub first_year: i32,
    pub last_year: i32,
    pub station_count: usize,
}

pub const FIXTURE_STATIONS: usize = 30;
pub const FIXTURE_YEARS: i32 = 40;

/// Thirty stations along the northern Gulf coast with forty years of daily
/// precipitation in GHCN-Daily `.dly` layout, plus a monthly SST grid.
///
/// Each June-October season gets a Poisson number of storms whose log-rate
/// rises with that year's SST anomaly. A storm has a random centre, radius
/// and heavy-tailed intensity; a station's season maximum is the largest of
/// its storm totals and a Frechet background. Other days are exponential
/// amounts kept below the season maximum. About 1% of days are `-9999` and
/// 0.2% carry a quality flag; the last station has no data before its
/// fourteenth year and fails a 90% coverage filter.
pub fn write_gulf_fixture(dir: &Path, seed: u64) -> GulfFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_year = 1978;
    let last_year = first_year + FIXTURE_YEARS - 1;
    let d = FIXTURE_STATIONS;
    let ids: Vec<String> = (0..d).map(|k| format!("USC00{:06}", 410 + 7 * k)).collect();
    // spread along the coast so that many pairs are over 1000 km apart
    let lonlat: Vec<[f64; 2]> = (0..d)
        .map(|k| {
            let lon = -97.5 + 17.0 * (k as f64 + rng.random_range(0.1..0.9)) / d as f64;
            [lon, rng.random_range(28.0..32.5)]
        })
        .collect();

    let stations = dir.join("stations.csv");
    let mut s = String::from("id,x,y\n");
    for (id, c) in ids.iter().zip(&lonlat) {
        writeln!(s, "{id},{:.4},{:.4}", c[0], c[1]).unwrap();
    }
    std::fs::write(&stations, s).unwrap();

    // SST anomaly of the window ending in June of each year
    let anomaly = Normal::new(0.0, 0.4).unwrap();
    let sst_anomaly: BTreeMap<i32, f64> = (first_year - 1..=last_year).map(|y| (y, anomaly.sample(&mut rng))).collect();

    // season maxima in tenths of a millimetre, [year][station]
    let season_max: Vec<Vec<i64>> = (first_year..=last_year)
        .map(|year| {
            let rate = (1.5 + 1.5 * sst_anomaly[&year]).exp();
            let storms = Poisson::new(rate).unwrap().sample(&mut rng) as usize;
            let mut z: Vec<f64> = (0..d)
                .map(|_| 300.0 * (-rng.random::<f64>().ln()).powf(-0.25))
                .collect();
            for _ in 0..storms {
                let centre = [rng.random_range(-99.0..-79.0), rng.random_range(27.0..31.0)];
                let radius = rng.random_range(200.0..900.0);
                let intensity = 800.0 * rng.random::<f64>().powf(-0.15);
                for (zi, c) in z.iter_mut().zip(&lonlat) {
                    let h = haversine_km(*c, centre) / radius;
                    *zi = zi.max(intensity * (-0.5 * h * h).exp());
                }
            }
            z.into_iter().map(|v| v.round() as i64).collect()
        })
        .collect();

    let dly_dir = dir.join("dly");
    std::fs::create_dir_all(&dly_dir).unwrap();
    let wet: Exp<f64> = Exp::new(1.0 / 8.0).unwrap();
    for i in 0..d {
        let mut text = String::new();
        for (t, year) in (first_year..=last_year).enumerate() {
            // tenths of a millimetre
            let season_max = season_max[t][i];
            let season_days: Vec<NaiveDate> = (6..=10)
                .flat_map(|m| (1..=31).filter_map(move |dd| NaiveDate::from_ymd_opt(year, m, dd)))
                .collect();
            let peak = season_days[rng.random_range(0..season_days.len())];
            let absent = i == d - 1 && t < 13;
            for month in 1..=12u32 {
                write!(text, "{}{year:04}{month:02}PRCP", ids[i]).unwrap();
                for day in 1..=31u32 {
                    let Some(date) = NaiveDate::from_ymd_opt(year, month, day) else {
                        text.push_str("-9999   ");
                        continue;
                    };
                    let u: f64 = rng.random();
                    let in_season = (6..=10).contains(&date.month());
                    let (value, qflag) = if absent || u < 0.01 {
                        (-9999, ' ')
                    } else if date == peak {
                        (season_max, ' ')
                    } else {
                        let amount = if rng.random::<f64>() < 0.3 {
                            (wet.sample(&mut rng) * 10.0).round() as i64
                        } else {
                            0
                        };
                        let amount = if in_season { amount.min(season_max * 9 / 10) } else { amount };
                        (amount, if u > 0.998 { 'X' } else { ' ' })
                    };
                    write!(text, "{value:>5} {qflag}7").unwrap();
                }
                text.push('\n');
            }
            // an element the reader must skip
            writeln!(text, "{}{year:04}07TMAX{}", ids[i], "  300  7".repeat(31)).unwrap();
        }
        std::fs::write(dly_dir.join(format!("{}.dly", ids[i])), text).unwrap();
    }

    let sst = dir.join("sst.csv");
    let mut text = String::from("lon,lat,year,month,sst\n");
    for year in first_year - 1..=last_year {
        let a = sst_anomaly[&year];
        for month in 1..=12 {
            let seasonal = 2.0 * ((month as f64 - 2.0) / 12.0 * std::f64::consts::TAU).sin();
            for lon in [-94.0, -91.0, -88.0, -85.0] {
                for lat in [24.0, 26.0, 28.0] {
                    let v = 26.5 + seasonal + a + 0.1 * anomaly.sample(&mut rng);
                    writeln!(text, "{lon},{lat},{year},{month},{v:.3}").unwrap();
                }
            }
            // outside the averaging box
            writeln!(text, "-60.0,15.0,{year},{month},29.0").unwrap();
        }
    }
    std::fs::write(&sst, text).unwrap();

    GulfFixture {
        stations,
        dly_dir,
        sst,
        first_year,
        last_year,
        station_count: d,
    }
}
