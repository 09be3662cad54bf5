//! Pairwise extremal dependence from empirical-CDF values.
//!
//! Under max-stability the F-madogram `nu`, the extremal coefficient `theta`
//! and the tail dependence coefficient `chi` determine each other:
//!
//! ```text
//! theta = (1 + 2 nu) / (1 - 2 nu)
//! chi   = 2 - theta
//! ```
//!
//! so `chi` can be estimated without choosing an exceedance threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{edf_column, RankConvention, RankMatrix, SymMatrix};
use crate::error::{Error, Result};

/// How a pair's empirical CDFs are formed when the stations' valid blocks differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRanking {
    /// Re-rank both stations on the blocks valid at both.
    #[default]
    CommonBlocks,
    /// Use each station's ranks over all of its own valid blocks.
    PerStation,
}

/// Estimated F-madogram of two rank columns of equal length.
///
/// Returns `None` when fewer than two blocks are available.
pub fn f_madogram_pair(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "rank columns differ in length");
    if x.len() < 2 {
        return None;
    }
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    Some(0.5 * sum / x.len() as f64)
}

pub fn nu_to_theta(nu: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::Domain(format!("madogram {nu} outside [0, 1/2)")));
    }
    Ok((1.0 + 2.0 * nu) / (1.0 - 2.0 * nu))
}

pub fn theta_to_nu(theta: f64) -> Result<f64> {
    if !(theta >= 1.0) || theta.is_infinite() {
        return Err(Error::Domain(format!("extremal coefficient {theta} below 1")));
    }
    Ok((theta - 1.0) / (2.0 * (theta + 1.0)))
}

pub fn nu_to_chi(nu: f64) -> Result<f64> {
    Ok(2.0 - nu_to_theta(nu)?)
}

/// Pairwise `chi` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    /// `NaN` for unestimable pairs; diagonal is 1.
    pub chi_hat: SymMatrix,
    /// Common valid blocks per pair.
    pub n_pairs_used: Vec<usize>,
    d: usize,
}

impl ChiMatrix {
    /// Wraps externally computed values (e.g. model `chi`); `NaN` marks missing.
    pub fn from_parts(chi_hat: SymMatrix, n_pairs_used: Vec<usize>) -> Self {
        let d = chi_hat.dim();
        assert_eq!(n_pairs_used.len(), d * d, "n_pairs_used must be d x d");
        ChiMatrix {
            chi_hat,
            n_pairs_used,
            d,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.chi_hat.value(i, j)
    }

    pub fn blocks_used(&self, i: usize, j: usize) -> usize {
        self.n_pairs_used[i * self.d + j]
    }
}

/// Columns of a rank-like matrix laid out contiguously per station.
pub(crate) struct Columns {
    pub m: usize,
    pub d: usize,
    /// station-major: `data[i * m + t]`
    pub data: Vec<f64>,
    pub complete: Vec<bool>,
}

impl Columns {
    pub fn from_row_major(m: usize, d: usize, raw: &[f64]) -> Self {
        let mut data = vec![0.0; m * d];
        for t in 0..m {
            for i in 0..d {
                data[i * m + t] = raw[t * d + i];
            }
        }
        let complete = (0..d)
            .map(|i| data[i * m..(i + 1) * m].iter().all(|v| !v.is_nan()))
            .collect();
        Columns {
            m,
            d,
            data,
            complete,
        }
    }

    pub fn col(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Raw values converted to per-station empirical CDFs.
    pub fn ranked(&self, convention: RankConvention) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for i in 0..self.d {
            data.extend(edf_column(self.col(i), convention));
        }
        Columns {
            m: self.m,
            d: self.d,
            data,
            complete: self.complete.clone(),
        }
    }
}

/// `(chi_hat, blocks used)` for one pair of rank columns, `None` if unestimable.
pub(crate) fn pair_chi(
    cols: &Columns,
    i: usize,
    j: usize,
    convention: RankConvention,
    mode: PairRanking,
) -> (Option<f64>, usize) {
    let (x, y) = (cols.col(i), cols.col(j));
    let nu = if cols.complete[i] && cols.complete[j] {
        (f_madogram_pair(x, y), cols.m)
    } else {
        let (cx, cy): (Vec<f64>, Vec<f64>) = x
            .iter()
            .zip(y)
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .map(|(a, b)| (*a, *b))
            .unzip();
        let n = cx.len();
        match mode {
            PairRanking::CommonBlocks => (
                f_madogram_pair(&edf_column(&cx, convention), &edf_column(&cy, convention)),
                n,
            ),
            PairRanking::PerStation => (f_madogram_pair(&cx, &cy), n),
        }
    };
    // Per-station ranks on a subset can push nu to 1/2 or beyond; such pairs
    // carry no usable estimate.
    (nu.0.and_then(|v| nu_to_chi(v).ok()), nu.1)
}

pub(crate) fn chi_from_columns(
    cols: &Columns,
    convention: RankConvention,
    mode: PairRanking,
    parallel: bool,
) -> ChiMatrix {
    let d = cols.d;
    let row = |i: usize| -> Vec<(Option<f64>, usize)> {
        (i + 1..d)
            .map(|j| pair_chi(cols, i, j, convention, mode))
            .collect()
    };
    let rows: Vec<Vec<(Option<f64>, usize)>> = if parallel {
        (0..d).into_par_iter().map(row).collect()
    } else {
        (0..d).map(row).collect()
    };
    let mut chi_hat = SymMatrix::filled(d, f64::NAN);
    let mut used = vec![0usize; d * d];
    for (i, r) in rows.into_iter().enumerate() {
        chi_hat.set(i, i, 1.0);
        used[i * d + i] = cols.m;
        for (k, (c, n)) in r.into_iter().enumerate() {
            let j = i + 1 + k;
            chi_hat.set(i, j, c.unwrap_or(f64::NAN));
            used[i * d + j] = n;
            used[j * d + i] = n;
        }
    }
    ChiMatrix {
        chi_hat,
        n_pairs_used: used,
        d,
    }
}

/// Madogram-based `chi_hat` for every station pair.
///
/// Pairs are evaluated in parallel; each cell depends only on its own two
/// columns so the result does not depend on scheduling.
pub fn chi_matrix(r: &RankMatrix, mode: PairRanking) -> ChiMatrix {
    let cols = Columns::from_row_major(r.blocks(), r.stations(), r.raw());
    chi_from_columns(&cols, r.convention(), mode, true)
}

/// Finite-level conditional exceedance curve `P(Y > u | X > u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiUCurve {
    pub u: Vec<f64>,
    /// `None` where no block has `x > u`.
    pub chi: Vec<Option<f64>>,
}

pub fn chi_u_curve(x: &[f64], y: &[f64], grid: &[f64]) -> Result<ChiUCurve> {
    if x.len() != y.len() {
        return Err(Error::invalid("rank columns differ in length"));
    }
    if let Some(u) = grid.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
        return Err(Error::invalid(format!("threshold {u} outside (0, 1)")));
    }
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(a, b)| (*a, *b))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::invalid("fewer than two common valid blocks"));
    }
    let chi = grid
        .iter()
        .map(|&u| {
            let above_x = pairs.iter().filter(|(a, _)| *a > u).count();
            let both = pairs.iter().filter(|(a, b)| *a > u && *b > u).count();
            (above_x > 0).then(|| both as f64 / above_x as f64)
        })
        .collect();
    Ok(ChiUCurve {
        u: grid.to_vec(),
        chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{edf_ranks, MaximaMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ranks(cols: &[&[f64]]) -> RankMatrix {
        let m = cols[0].len();
        let d = cols.len();
        let mut v = Vec::new();
        for t in 0..m {
            for c in cols {
                v.push(c[t]);
            }
        }
        edf_ranks(&MaximaMatrix::from_rows(m, d, v).unwrap(), RankConvention::OverM).unwrap()
    }

    #[test]
    fn madogram_examples() {
        let x = [0.25, 0.5, 0.75, 1.0];
        assert_eq!(f_madogram_pair(&x, &x), Some(0.0));
        let y = [1.0, 0.75, 0.5, 0.25];
        assert_eq!(f_madogram_pair(&x, &y), Some(0.25));
        assert_eq!(f_madogram_pair(&[0.5], &[0.5]), None);
    }

    #[test]
    fn independent_uniforms_give_one_sixth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let a: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let r = ranks(&[&a, &b]);
        let nu = f_madogram_pair(&r.column(0), &r.column(1)).unwrap();
        assert!((nu - 1.0 / 6.0).abs() < 0.005, "nu = {nu}");
    }

    #[test]
    fn nu_chi_examples() {
        assert_eq!(nu_to_chi(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(nu_to_chi(1.0 / 6.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(nu_to_chi(0.1).unwrap(), 0.5, epsilon = 1e-15);
        assert!(nu_to_chi(0.5).is_err());
        assert!(nu_to_chi(-0.1).is_err());
        assert!(theta_to_nu(0.9).is_err());
    }

    #[test]
    fn chi_matrix_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let cm = chi_matrix(&ranks(&[&a, &a]), PairRanking::CommonBlocks);
        assert_eq!(cm.get(0, 1), Some(1.0));
        assert_eq!(cm.get(1, 1), Some(1.0));

        let rev = [4.0, 3.0, 2.0, 1.0];
        let other = [2.0, 1.0, 4.0, 3.0];
        let cm = chi_matrix(&ranks(&[&a, &rev, &other]), PairRanking::CommonBlocks);
        // nu = 0.25 -> theta = 3 -> chi = -1
        assert_abs_diff_eq!(cm.get(0, 1).unwrap(), -1.0, epsilon = 1e-15);
        assert_eq!(cm.blocks_used(0, 1), 4);
    }

    #[test]
    fn missing_blocks_rerank_on_intersection() {
        let mx = MaximaMatrix::new(
            vec![1, 2, 3, 4, 5],
            2,
            vec![
                Some(1.0), Some(10.0),
                Some(2.0), None,
                Some(3.0), Some(30.0),
                None, Some(40.0),
                Some(5.0), Some(50.0),
            ],
        )
        .unwrap();
        let r = edf_ranks(&mx, RankConvention::OverM).unwrap();
        let cm = chi_matrix(&r, PairRanking::CommonBlocks);
        // common blocks {1,3,5} are comonotone
        assert_eq!(cm.get(0, 1), Some(1.0));
        assert_eq!(cm.blocks_used(0, 1), 3);
        let per = chi_matrix(&r, PairRanking::PerStation);
        assert!(per.get(0, 1).unwrap() < 1.0);
    }

    #[test]
    fn pair_without_common_blocks_is_missing() {
        let mx = MaximaMatrix::new(
            vec![1, 2, 3, 4],
            2,
            vec![
                Some(1.0), None,
                Some(2.0), None,
                None, Some(3.0),
                None, Some(4.0),
            ],
        )
        .unwrap();
        let cm = chi_matrix(&edf_ranks(&mx, RankConvention::OverM).unwrap(), PairRanking::CommonBlocks);
        assert_eq!(cm.get(0, 1), None);
        assert_eq!(cm.blocks_used(0, 1), 0);
    }

    /// Direct enumeration of `#{x>u, y>u} / #{x>u}`.
    fn enumerate_chi_u(x: &[f64], y: &[f64], u: f64) -> Option<f64> {
        let mut num = 0;
        let mut den = 0;
        for t in 0..x.len() {
            if x[t] > u {
                den += 1;
                if y[t] > u {
                    num += 1;
                }
            }
        }
        (den > 0).then(|| num as f64 / den as f64)
    }

    #[test]
    fn chi_u_examples() {
        let x = [0.2, 0.4, 0.6, 0.8, 1.0];
        let y = [1.0, 0.8, 0.6, 0.4, 0.2];
        let c = chi_u_curve(&x, &x, &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(c.chi, vec![Some(1.0); 3]);

        let c = chi_u_curve(&x, &y, &[0.5]).unwrap();
        let expected = enumerate_chi_u(&x, &y, 0.5);
        assert_eq!(expected, Some(1.0 / 3.0));
        assert_eq!(c.chi[0], expected);

        let c = chi_u_curve(&[0.2, 0.4], &[0.2, 0.4], &[0.5]).unwrap();
        assert_eq!(c.chi[0], None);
        assert!(chi_u_curve(&x, &y, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn theta_round_trip(theta in 1.0f64..2.0, wide in 1.0f64..1000.0) {
            let back = nu_to_theta(theta_to_nu(theta).unwrap()).unwrap();
            prop_assert!((back - theta).abs() <= 1e-12);
            let back = nu_to_theta(theta_to_nu(wide).unwrap()).unwrap();
            prop_assert!((back - wide).abs() <= 1e-12 * wide);
        }

        #[test]
        fn nu_to_chi_decreasing(a in 0.0f64..0.4999, b in 0.0f64..0.4999) {
            prop_assume!(a < b);
            prop_assert!(nu_to_chi(a).unwrap() > nu_to_chi(b).unwrap());
        }

        #[test]
        fn chi_matrix_symmetric_and_rank_based(vals in proptest::collection::vec(0.0f64..100.0, 8 * 4)) {
            let mx = MaximaMatrix::from_rows(8, 4, vals).unwrap();
            let tx = mx.map_values(|i, v| (v + 1.0).ln() * (i as f64 + 1.0) - 7.0).unwrap();
            let a = chi_matrix(&edf_ranks(&mx, RankConvention::OverM).unwrap(), PairRanking::CommonBlocks);
            let b = chi_matrix(&edf_ranks(&tx, RankConvention::OverM).unwrap(), PairRanking::CommonBlocks);
            prop_assert_eq!(&a, &b);
            for i in 0..4 {
                prop_assert_eq!(a.get(i, i), Some(1.0));
                for j in 0..4 {
                    prop_assert_eq!(a.chi_hat.get(i, j).to_bits(), a.chi_hat.get(j, i).to_bits());
                    let c = a.get(i, j).unwrap();
                    prop_assert!((-1.0..=1.0).contains(&c));
                }
            }
        }

        #[test]
        fn self_pair_is_exactly_one(vals in proptest::collection::vec(0.0f64..1.0, 2..40)) {
            let r = ranks(&[&vals]);
            let col = r.column(0);
            prop_assert_eq!(nu_to_chi(f_madogram_pair(&col, &col).unwrap()).unwrap(), 1.0);
        }
    }
}
