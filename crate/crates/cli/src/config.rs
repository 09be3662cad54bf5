//! Run configuration and the per-run manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use chinet_core::annualnet::{EligiblePairs, ZeroCounts};
use chinet_core::brsim::SimMethod;
use chinet_core::domain::{CoordSystem, RankConvention};
use chinet_core::ingest::{CoveragePeriod, LonLatBox};
use chinet_core::pipeline::{EstimationConfig, EvaluationConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Where station data comes from for `chinet` and `annual`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    /// `id,x,y` coordinates.
    pub stations: PathBuf,
    pub coords: CoordSystem,
    /// Wide block-maxima CSV; exclusive with the daily inputs.
    pub maxima: Option<PathBuf>,
    pub daily: Option<PathBuf>,
    /// `.dly` files, or directories holding them.
    pub dly: Vec<PathBuf>,
    /// Inclusive year range for daily input; the data span when absent.
    pub years: Option<(i32, i32)>,
    pub months: Vec<u32>,
    pub min_coverage: f64,
    pub coverage_period: CoveragePeriod,
    pub completeness: f64,
}

impl InputConfig {
    pub fn validate(&self) -> Result<()> {
        let daily = self.daily.is_some() || !self.dly.is_empty();
        match (self.maxima.is_some(), daily) {
            (true, true) => bail!("give either --maxima or daily input (--daily/--dly), not both"),
            (false, false) => bail!("no input: give --maxima or --daily/--dly"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub stations: usize,
    pub blocks: usize,
    pub rho: f64,
    pub kappa: f64,
    pub chi_min: f64,
    pub method: SimMethod,
    pub seed: u64,
    /// Fixed `id,x,y` locations instead of uniform draws.
    pub station_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChinetConfig {
    pub input: InputConfig,
    pub estimation: EstimationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualConfig {
    pub input: InputConfig,
    pub u_star: f64,
    /// In the distance units of the coordinates (km when geographic).
    pub long_distance: f64,
    pub rank_convention: RankConvention,
    pub eligible: EligiblePairs,
    pub zero_counts: ZeroCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateSource {
    /// `lon,lat,year,month,sst` grid averaged over a box.
    SstGrid { path: PathBuf, region: LonLatBox },
    /// `year,value` series.
    Series { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressConfig {
    /// `long_distance.csv` written by `annual`.
    pub series: PathBuf,
    pub covariate: CovariateSource,
    /// Use log(eligible pairs) as the Poisson offset.
    pub offset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Simulate(SimulateConfig),
    Chinet(ChinetConfig),
    Evaluate(EvaluationConfig),
    Annual(AnnualConfig),
    Regress(RegressConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Simulate(_) => "simulate",
            RunConfig::Chinet(_) => "chinet",
            RunConfig::Evaluate(_) => "evaluate",
            RunConfig::Annual(_) => "annual",
            RunConfig::Regress(_) => "regress",
        }
    }

    /// Files the run reads, in a fixed order.
    pub fn input_paths(&self) -> Vec<PathBuf> {
        let input = |i: &InputConfig| {
            let mut v = vec![i.stations.clone()];
            v.extend(i.maxima.clone());
            v.extend(i.daily.clone());
            v.extend(i.dly.iter().cloned());
            v
        };
        match self {
            RunConfig::Simulate(c) => c.station_file.iter().cloned().collect(),
            RunConfig::Chinet(c) => input(&c.input),
            RunConfig::Evaluate(_) => Vec::new(),
            RunConfig::Annual(c) => input(&c.input),
            RunConfig::Regress(c) => {
                let cov = match &c.covariate {
                    CovariateSource::SstGrid { path, .. } | CovariateSource::Series { path } => path.clone(),
                };
                vec![c.series.clone(), cov]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    #[serde(default)]
    pub outputs: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of every input file; directories contribute each file in name order.
fn digest_inputs(paths: &[PathBuf]) -> Result<Vec<InputDigest>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            for f in crate::io::dir_files(p, "dly")? {
                out.push(digest_file(&f)?);
            }
        } else {
            out.push(digest_file(p)?);
        }
    }
    Ok(out)
}

fn digest_file(p: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
    Ok(InputDigest {
        path: p.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

impl Manifest {
    pub fn new(config: RunConfig) -> Result<Self> {
        let inputs = digest_inputs(&config.input_paths())?;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&config)?);
        for d in &inputs {
            hasher.update(d.sha256.as_bytes());
        }
        Ok(Manifest {
            tool: "chinet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: hex::encode(hasher.finalize()),
            config,
            inputs,
            outputs: Vec::new(),
        })
    }

    /// Configuration of a previous run. Fails when an input file no longer
    /// has the digest recorded in the manifest.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("{} is not a manifest", path.display()))?;
        let now = digest_inputs(&m.config.input_paths())?;
        if now != m.inputs {
            bail!("inputs differ from those recorded in {}", path.display());
        }
        Ok(m.config)
    }
}
