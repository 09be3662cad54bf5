//! Resampling whole block vectors to measure the variability of `chi_hat`.

use rand::Rng;
use rayon::prelude::*;

use crate::domain::{pair_count, upper_pairs, MaximaMatrix, RankConvention, SymMatrix};
use crate::error::{Error, Result};
use crate::madogram::{chi_from_columns, Columns, PairRanking};
use crate::rng::{stream, Purpose};

pub const DEFAULT_REPLICATES: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSummary {
    /// Per-pair standard deviation of `chi_hat` across replicates; `NaN` when
    /// the pair was unestimable in more than half of them.
    pub sd: SymMatrix,
    pub replicates: usize,
    pub seed: u64,
}

impl BootstrapSummary {
    pub fn variance(&self, i: usize, j: usize) -> Option<f64> {
        self.sd.value(i, j).map(|s| s * s)
    }
}

/// Upper-triangle `chi_hat` of one bootstrap replicate.
fn replicate_chi(
    mx: &MaximaMatrix,
    b: usize,
    seed: u64,
    convention: RankConvention,
    mode: PairRanking,
) -> Vec<f64> {
    let (m, d) = (mx.blocks(), mx.stations());
    let mut rng = stream(seed, Purpose::Bootstrap, b as u64);
    let rows: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
    let mut raw = Vec::with_capacity(m * d);
    for &t in &rows {
        raw.extend_from_slice(&mx.raw()[t * d..(t + 1) * d]);
    }
    // Ranks are recomputed on the resample; duplicated rows become ties.
    let cols = Columns::from_row_major(m, d, &raw).ranked(convention);
    let cm = chi_from_columns(&cols, convention, mode, false);
    upper_pairs(d).map(|(i, j)| cm.chi_hat.get(i, j)).collect()
}

/// Bootstrap standard deviations of the pairwise `chi_hat`.
///
/// Replicate `b` draws its rows from stream `b` of `seed`, and the
/// reduction runs over replicates in index order, so the result is the same
/// for any worker count, and the first `B` replicates of a larger run equal
/// a run with `B` replicates.
pub fn bootstrap_sd(
    mx: &MaximaMatrix,
    replicates: usize,
    seed: u64,
    convention: RankConvention,
    mode: PairRanking,
) -> Result<BootstrapSummary> {
    if replicates < 2 {
        return Err(Error::invalid("bootstrap needs at least 2 replicates"));
    }
    let d = mx.stations();
    let reps: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|b| replicate_chi(mx, b, seed, convention, mode))
        .collect();

    let mut sd = SymMatrix::filled(d, f64::NAN);
    for (k, (i, j)) in upper_pairs(d).enumerate() {
        let vals: Vec<f64> = reps.iter().map(|r| r[k]).filter(|v| !v.is_nan()).collect();
        let n = vals.len();
        if 2 * n < replicates || n < 2 {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
        sd.set(i, j, (ss / (n - 1) as f64).sqrt());
    }
    for i in 0..d {
        sd.set(i, i, 0.0);
    }
    debug_assert_eq!(reps.first().map_or(0, Vec::len), pair_count(d));
    Ok(BootstrapSummary {
        sd,
        replicates,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brsim::{br_simulate, uniform_stations, BrParams};

    fn sample() -> MaximaMatrix {
        let s = uniform_stations(8, 2).unwrap();
        br_simulate(&s, &BrParams::new(0.05, 1.0, 3).unwrap(), 30).unwrap()
    }

    #[test]
    fn identical_rows_have_zero_spread() {
        // every row the same -> every replicate identical
        let row = [1.0, 5.0, 2.0];
        let mut v = Vec::new();
        for _ in 0..6 {
            v.extend_from_slice(&row);
        }
        let mx = MaximaMatrix::from_rows(6, 3, v).unwrap();
        let bs = bootstrap_sd(&mx, 50, 1, RankConvention::OverM, PairRanking::CommonBlocks).unwrap();
        for (i, j) in bs.sd.pairs() {
            assert_eq!(bs.sd.value(i, j), Some(0.0));
        }
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let mx = sample();
        let a = bootstrap_sd(&mx, 100, 9, RankConvention::OverM, PairRanking::CommonBlocks).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| {
            bootstrap_sd(&mx, 100, 9, RankConvention::OverM, PairRanking::CommonBlocks).unwrap()
        });
        assert_eq!(a, b);
        for (i, j) in a.sd.pairs() {
            assert_eq!(a.sd.get(i, j).to_bits(), a.sd.get(j, i).to_bits());
            assert!(a.sd.get(i, j) >= 0.0);
        }
    }

    #[test]
    fn invariant_under_increasing_transform() {
        let mx = sample();
        let tx = mx.map_values(|_, v| v.ln() * 3.0 + 1.0).unwrap();
        let a = bootstrap_sd(&mx, 60, 4, RankConvention::OverM, PairRanking::CommonBlocks).unwrap();
        let b = bootstrap_sd(&tx, 60, 4, RankConvention::OverM, PairRanking::CommonBlocks).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_too_few_replicates() {
        assert!(bootstrap_sd(&sample(), 1, 0, RankConvention::OverM, PairRanking::CommonBlocks).is_err());
    }

    #[test]
    fn mostly_unestimable_pair_is_missing() {
        // the stations share a single block; a resample needs it twice
        let cells: Vec<Option<f64>> = (0..10)
            .flat_map(|t| {
                let a = (t < 5).then_some(t as f64);
                let b = (t == 0 || t >= 5).then_some(10.0 - t as f64);
                [a, b]
            })
            .collect();
        let mx = MaximaMatrix::new((1..=10).collect(), 2, cells).unwrap();
        let bs = bootstrap_sd(&mx, 200, 3, RankConvention::OverM, PairRanking::CommonBlocks).unwrap();
        assert_eq!(bs.sd.value(0, 1), None);
    }
}
