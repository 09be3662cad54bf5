//! Command-line arguments and their mapping onto [`RunConfig`].

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use chinet_core::annualnet::{EligiblePairs, ZeroCounts, DEFAULT_LONG_DISTANCE_KM, DEFAULT_U_STAR};
use chinet_core::brsim::SimMethod;
use chinet_core::chicurve::{BinScheme, BinWeighting, Tau2Mode};
use chinet_core::domain::{CoordSystem, RankConvention, DEFAULT_BLOCK_COMPLETENESS};
use chinet_core::ingest::{CoveragePeriod, LonLatBox, DEFAULT_MIN_COVERAGE};
use chinet_core::madogram::PairRanking;
use chinet_core::pipeline::{EstimationConfig, EvaluationConfig};
use chinet_core::spline::Smoothing;

use crate::config::{
    AnnualConfig, ChinetConfig, CovariateSource, InputConfig, RegressConfig, RunConfig, SimulateConfig,
};

#[derive(Parser, Debug)]
#[command(name = "chinet", version, about = "Tail-dependence (chi) networks from block maxima")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate Brown-Resnick maxima and the true chi network.
    Simulate(SimulateArgs),
    /// Estimate empirical and bias-corrected chi networks.
    Chinet(ChinetArgs),
    /// Monte Carlo TPR / PPV of both networks on simulated data.
    Evaluate(EvaluateArgs),
    /// Per-block extremal networks and long-distance counts.
    Annual(AnnualArgs),
    /// Regress long-distance connectivity on a yearly covariate.
    Regress(RegressArgs),
}

impl Command {
    pub fn run_args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a) => &a.run,
            Command::Chinet(a) => &a.run,
            Command::Evaluate(a) => &a.run,
            Command::Annual(a) => &a.run,
            Command::Regress(a) => &a.run,
        }
    }

    /// The run configuration: from `--manifest` when given, else from flags.
    pub fn config(&self) -> Result<RunConfig> {
        if let Some(path) = &self.run_args().manifest {
            let cfg = crate::config::Manifest::load(path)?;
            let name = self.name();
            if cfg.command() != name {
                bail!("manifest {} is for `{}`, not `{name}`", path.display(), cfg.command());
            }
            return Ok(cfg);
        }
        Ok(match self {
            Command::Simulate(a) => RunConfig::Simulate(a.config()?),
            Command::Chinet(a) => RunConfig::Chinet(a.config()?),
            Command::Evaluate(a) => RunConfig::Evaluate(a.config()?),
            Command::Annual(a) => RunConfig::Annual(a.config()?),
            Command::Regress(a) => RunConfig::Regress(a.config()?),
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Chinet(_) => "chinet",
            Command::Evaluate(_) => "evaluate",
            Command::Annual(_) => "annual",
            Command::Regress(_) => "regress",
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Re-run from a manifest; its configuration replaces every other flag.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Convention {
    OverM,
    OverMPlusOne,
}

impl From<Convention> for RankConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::OverM => RankConvention::OverM,
            Convention::OverMPlusOne => RankConvention::OverMPlusOne,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Tau2Choice {
    Estimated,
    Logistic,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Binning {
    EqualWidth,
    EqualCount,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Weighting {
    Unweighted,
    PairCount,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Ranking {
    CommonBlocks,
    PerStation,
}

fn parse_smoothing(s: &str) -> std::result::Result<Smoothing, String> {
    match s {
        "gcv" => Ok(Smoothing::Gcv),
        "infinite" => Ok(Smoothing::Infinite),
        other => match other.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Smoothing::Fixed(v)),
            _ => Err(format!("expected gcv, infinite or a positive number, got {other:?}")),
        },
    }
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated numbers a,b,c".to_string())
}

fn parse_years(s: &str) -> std::result::Result<(i32, i32), String> {
    let (a, b) = s.split_once(':').ok_or("expected FIRST:LAST")?;
    let a = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if b < a {
        return Err(format!("{s}: last year precedes first"));
    }
    Ok((a, b))
}

fn parse_box(s: &str) -> std::result::Result<LonLatBox, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [lon_min, lon_max, lat_min, lat_max] if lon_min <= lon_max && lat_min <= lat_max => Ok(LonLatBox {
            lon_min,
            lon_max,
            lat_min,
            lat_max,
        }),
        _ => Err("expected LON_MIN,LON_MAX,LAT_MIN,LAT_MAX".into()),
    }
}

/// Flags of the estimation pipeline. Unset flags keep the command's defaults.
#[derive(Args, Debug)]
pub struct EstimationArgs {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Edge threshold on chi [default: 0.3].
    #[arg(long)]
    pub chi_min: Option<f64>,
    /// Number of distance bins [default: 100].
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub bin_scheme: Option<Binning>,
    #[arg(long, value_enum)]
    pub bin_weighting: Option<Weighting>,
    /// gcv, infinite, or a fixed positive lambda [default: gcv].
    #[arg(long, value_parser = parse_smoothing)]
    pub smoothing: Option<Smoothing>,
    /// Bootstrap replicates [default: 500].
    #[arg(long)]
    pub boot: Option<usize>,
    #[arg(long, value_enum)]
    pub rank_convention: Option<Convention>,
    #[arg(long, value_enum)]
    pub pair_ranking: Option<Ranking>,
    /// How tau^2(h) is obtained.
    #[arg(long, value_enum)]
    pub tau2: Option<Tau2Choice>,
    /// Logistic tau^2 parameters a,b,c of a / (1 + exp(-b (h - c))).
    #[arg(long, value_parser = parse_triple)]
    pub tau2_params: Option<[f64; 3]>,
}

impl EstimationArgs {
    fn apply(&self, mut c: EstimationConfig) -> Result<EstimationConfig> {
        c.seed = self.seed;
        if let Some(v) = self.chi_min {
            c.chi_min = v;
        }
        if let Some(v) = self.bins {
            c.bins = v;
        }
        if let Some(v) = self.bin_scheme {
            c.bin_scheme = match v {
                Binning::EqualWidth => BinScheme::EqualWidth,
                Binning::EqualCount => BinScheme::EqualCount,
            };
        }
        if let Some(v) = self.bin_weighting {
            c.bin_weighting = match v {
                Weighting::Unweighted => BinWeighting::Unweighted,
                Weighting::PairCount => BinWeighting::PairCount,
            };
        }
        if let Some(v) = self.smoothing {
            c.smoothing = v;
        }
        if let Some(v) = self.boot {
            c.bootstrap_replicates = v;
        }
        if let Some(v) = self.rank_convention {
            c.rank_convention = v.into();
        }
        if let Some(v) = self.pair_ranking {
            c.pair_ranking = match v {
                Ranking::CommonBlocks => PairRanking::CommonBlocks,
                Ranking::PerStation => PairRanking::PerStation,
            };
        }
        match (self.tau2, self.tau2_params) {
            (Some(Tau2Choice::Estimated), Some(_)) => bail!("--tau2-params needs --tau2 logistic"),
            (Some(Tau2Choice::Estimated), None) => c.tau2 = Tau2Mode::Estimated,
            (_, Some([a, b, cc])) => c.tau2 = Tau2Mode::Logistic { a, b, c: cc },
            (Some(Tau2Choice::Logistic), None) => {
                if !matches!(c.tau2, Tau2Mode::Logistic { .. }) {
                    c.tau2 = Tau2Mode::BENCHMARK;
                }
            }
            (None, None) => {}
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stations drawn uniformly on the unit square.
    #[arg(long, default_value_t = 100)]
    pub stations: usize,
    /// Fixed planar `id,x,y` locations instead of random ones.
    #[arg(long, conflicts_with = "stations")]
    pub station_file: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.05)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = chinet_core::pipeline::DEFAULT_CHI_MIN)]
    pub chi_min: f64,
    /// Truncate to this many spectral functions (approximate) instead of
    /// exact simulation.
    #[arg(long)]
    pub approximate: Option<usize>,
}

fn method(approximate: Option<usize>) -> SimMethod {
    match approximate {
        Some(spectral) => SimMethod::Approximate { spectral },
        None => SimMethod::Exact,
    }
}

impl SimulateArgs {
    fn config(&self) -> Result<SimulateConfig> {
        if self.blocks < 2 {
            bail!("--blocks must be at least 2");
        }
        Ok(SimulateConfig {
            stations: self.stations,
            blocks: self.blocks,
            rho: self.rho,
            kappa: self.kappa,
            chi_min: self.chi_min,
            method: method(self.approximate),
            seed: self.seed,
            station_file: self.station_file.clone(),
        })
    }
}

/// Station data: a wide maxima table or daily records.
#[derive(Args, Debug)]
pub struct InputArgs {
    /// `id,x,y` station coordinates (lon,lat when --geographic).
    #[arg(long)]
    pub stations: Option<PathBuf>,
    /// Treat coordinates as lon/lat degrees; distances in km.
    #[arg(long)]
    pub geographic: bool,
    /// Wide block-maxima CSV: `block,<station>...`.
    #[arg(long)]
    pub maxima: Option<PathBuf>,
    /// Daily `station,date,prcp` CSV.
    #[arg(long)]
    pub daily: Option<PathBuf>,
    /// GHCN-Daily `.dly` file or directory; repeatable.
    #[arg(long)]
    pub dly: Vec<PathBuf>,
    /// Study years FIRST:LAST [default: span of the daily data].
    #[arg(long, value_parser = parse_years)]
    pub years: Option<(i32, i32)>,
    /// Months forming each block.
    #[arg(long, value_delimiter = ',', default_values_t = [6u32, 7, 8, 9, 10])]
    pub months: Vec<u32>,
    /// Minimum share of non-missing days for a station to be kept.
    #[arg(long, default_value_t = DEFAULT_MIN_COVERAGE)]
    pub min_coverage: f64,
    /// Measure coverage over the whole study period or each station's span.
    #[arg(long, value_enum, default_value = "study-period")]
    pub coverage_period: Period,
    /// Minimum share of non-missing days for a block maximum to count.
    #[arg(long, default_value_t = DEFAULT_BLOCK_COMPLETENESS)]
    pub completeness: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Period {
    StudyPeriod,
    StationSpan,
}

impl InputArgs {
    fn config(&self) -> Result<InputConfig> {
        let c = InputConfig {
            stations: self.stations.clone().context("--stations is required")?,
            coords: if self.geographic {
                CoordSystem::Geographic
            } else {
                CoordSystem::Planar
            },
            maxima: self.maxima.clone(),
            daily: self.daily.clone(),
            dly: self.dly.clone(),
            years: self.years,
            months: self.months.clone(),
            min_coverage: self.min_coverage,
            coverage_period: match self.coverage_period {
                Period::StudyPeriod => CoveragePeriod::StudyPeriod,
                Period::StationSpan => CoveragePeriod::StationSpan,
            },
            completeness: self.completeness,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct ChinetArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

impl ChinetArgs {
    fn config(&self) -> Result<ChinetConfig> {
        Ok(ChinetConfig {
            input: self.input.config()?,
            estimation: self.estimation.apply(EstimationConfig::default())?,
        })
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 100)]
    pub stations: usize,
    #[arg(long, default_value_t = 50)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.05)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long)]
    pub approximate: Option<usize>,
    /// Defaults to the benchmark settings: logistic tau^2 and rank / (m + 1).
    #[command(flatten)]
    pub estimation: EstimationArgs,
}

impl EvaluateArgs {
    fn config(&self) -> Result<EvaluationConfig> {
        if self.replicates == 0 {
            bail!("--replicates must be positive");
        }
        Ok(EvaluationConfig {
            stations: self.stations,
            blocks: self.blocks,
            rho: self.rho,
            kappa: self.kappa,
            replicates: self.replicates,
            method: method(self.approximate),
            estimation: self.estimation.apply(EstimationConfig::benchmark(self.estimation.seed))?,
        })
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Eligible {
    PerBlock,
    AllStations,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Zeros {
    Exclude,
    ContinuityCorrection,
}

#[derive(Args, Debug)]
pub struct AnnualArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Rank level both stations must exceed in a block.
    #[arg(long, default_value_t = DEFAULT_U_STAR)]
    pub u_star: f64,
    /// Long-distance cut-off, in km for geographic stations.
    #[arg(long, default_value_t = DEFAULT_LONG_DISTANCE_KM)]
    pub long_km: f64,
    #[arg(long, value_enum, default_value = "over-m-plus-one")]
    pub rank_convention: Convention,
    /// Pairs counted as eligible in each block.
    #[arg(long, value_enum, default_value = "per-block")]
    pub eligible: Eligible,
    /// Log-ratio handling of blocks without long edges.
    #[arg(long, value_enum, default_value = "exclude")]
    pub zero_counts: Zeros,
}

impl AnnualArgs {
    fn config(&self) -> Result<AnnualConfig> {
        if !(self.u_star > 0.0 && self.u_star < 1.0) {
            bail!("--u-star must lie in (0, 1)");
        }
        if !(self.long_km >= 0.0) {
            bail!("--long-km must be non-negative");
        }
        Ok(AnnualConfig {
            input: self.input.config()?,
            u_star: self.u_star,
            long_distance: self.long_km,
            rank_convention: self.rank_convention.into(),
            eligible: match self.eligible {
                Eligible::PerBlock => EligiblePairs::PerBlock,
                Eligible::AllStations => EligiblePairs::AllStations,
            },
            zero_counts: match self.zero_counts {
                Zeros::Exclude => ZeroCounts::Exclude,
                Zeros::ContinuityCorrection => ZeroCounts::ContinuityCorrection,
            },
        })
    }
}

#[derive(Args, Debug)]
pub struct RegressArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// `long_distance.csv` from `annual`.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Monthly `lon,lat,year,month,sst` grid.
    #[arg(long, conflicts_with = "covariate")]
    pub sst_grid: Option<PathBuf>,
    /// Averaging box LON_MIN,LON_MAX,LAT_MIN,LAT_MAX [default: Gulf of Mexico].
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    pub sst_box: Option<LonLatBox>,
    /// Ready-made `year,value` covariate.
    #[arg(long)]
    pub covariate: Option<PathBuf>,
    /// Use log(eligible pairs) as the Poisson offset.
    #[arg(long)]
    pub offset: bool,
}

impl RegressArgs {
    fn config(&self) -> Result<RegressConfig> {
        let covariate = match (&self.sst_grid, &self.covariate) {
            (Some(path), None) => CovariateSource::SstGrid {
                path: path.clone(),
                region: self.sst_box.unwrap_or(LonLatBox::GULF_OF_MEXICO),
            },
            (None, Some(path)) => {
                if self.sst_box.is_some() {
                    bail!("--sst-box applies to --sst-grid only");
                }
                CovariateSource::Series { path: path.clone() }
            }
            _ => bail!("give --sst-grid or --covariate"),
        };
        Ok(RegressConfig {
            series: self.series.clone().context("--series is required")?,
            covariate,
            offset: self.offset,
        })
    }
}
