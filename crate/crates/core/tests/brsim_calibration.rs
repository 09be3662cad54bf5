//! Monte Carlo checks of the Brown-Resnick simulator: unit Frechet margins,
//! max-stability, and pairwise chi against the closed form.

use chinet_core::brsim::{br_true_chi, BrParams, BrownResnick, SimMethod};
use chinet_core::domain::{edf_ranks, RankConvention, StationSet};
use chinet_core::madogram::{chi_matrix, PairRanking};

/// Asymptotic Kolmogorov-Smirnov p-value with the small-sample correction
/// `(sqrt(n) + 0.12 + 0.11 / sqrt(n)) D`.
fn ks_p_value(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &v) in sample.iter().enumerate() {
        let f = cdf(v);
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    let lam = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut q = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        q += 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lam * lam).exp();
    }
    q.clamp(0.0, 1.0)
}

fn frechet(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (-1.0 / z).exp()
    }
}

fn scattered(d: usize) -> StationSet {
    StationSet::planar(
        (0..d)
            .map(|k| {
                let t = k as f64;
                [(t * 0.618_034).fract(), (t * 0.414_214 + 0.1).fract()]
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn ks_oracle_sanity() {
    // exact uniform quantiles have D = 1/(2n) and a p-value near 1
    let mut u: Vec<f64> = (0..1000).map(|k| (k as f64 + 0.5) / 1000.0).collect();
    assert!(ks_p_value(&mut u, |x| x) > 0.99);
    let mut shifted: Vec<f64> = (0..1000).map(|k| 0.5 + (k as f64 + 0.5) / 2000.0).collect();
    assert!(ks_p_value(&mut shifted, |x| x) < 1e-6);
}

#[test]
fn margins_are_unit_frechet() {
    let s = scattered(5);
    let model = BrownResnick::new(&s, BrParams::new(0.05, 1.0, 0).unwrap()).unwrap();
    let mx = model.simulate(1000, 2024, SimMethod::Exact).unwrap();
    for i in 0..5 {
        let mut col = mx.column(i);
        let p = ks_p_value(&mut col, frechet);
        assert!(p > 0.01, "station {i}: KS p = {p}");
    }
}

#[test]
fn rescaled_maxima_stay_unit_frechet() {
    let s = scattered(4);
    let model = BrownResnick::new(&s, BrParams::new(0.05, 1.0, 0).unwrap()).unwrap();
    let groups = 10;
    let mx = model.simulate(1000 * groups, 77, SimMethod::Exact).unwrap();
    for i in 0..4 {
        let col = mx.column(i);
        let mut m: Vec<f64> = col
            .chunks(groups)
            .map(|c| c.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / groups as f64)
            .collect();
        let p = ks_p_value(&mut m, frechet);
        assert!(p > 0.01, "station {i}: KS p = {p}");
    }
}

#[test]
fn empirical_chi_tracks_closed_form() {
    let hs = [0.02, 0.05, 0.107];
    let p = BrParams::new(0.05, 1.0, 0).unwrap();
    let coords: Vec<[f64; 2]> = hs
        .iter()
        .enumerate()
        .flat_map(|(k, h)| [[k as f64 * 5.0, 0.0], [k as f64 * 5.0 + h, 0.0]])
        .collect();
    let s = StationSet::planar(coords).unwrap();
    let model = BrownResnick::new(&s, p).unwrap();
    let reps = 100;
    let mut mean = [0.0; 3];
    for r in 0..reps {
        let mx = model.simulate(500, 5000 + r, SimMethod::Exact).unwrap();
        let cm = chi_matrix(&edf_ranks(&mx, RankConvention::OverM).unwrap(), PairRanking::CommonBlocks);
        for k in 0..3 {
            mean[k] += cm.get(2 * k, 2 * k + 1).unwrap() / reps as f64;
        }
    }
    for k in 0..3 {
        let truth = br_true_chi(hs[k], &p);
        assert!((mean[k] - truth).abs() < 0.05, "h = {}: {} vs {truth}", hs[k], mean[k]);
    }
    // the h = 0.05 pair sits near chi = 0.5
    assert!((br_true_chi(0.05, &p) - 0.4795).abs() < 1e-4);
}

#[test]
fn approximate_mode_is_exact_only_at_the_reference_station() {
    let s = scattered(3);
    let model = BrownResnick::new(&s, BrParams::new(0.05, 1.0, 0).unwrap()).unwrap();
    let mx = model
        .simulate(1000, 9, SimMethod::Approximate { spectral: 200 })
        .unwrap();
    let mut col = mx.column(0);
    assert!(ks_p_value(&mut col, frechet) > 0.01);
    // truncation leaves distant stations too small: median below 1/ln 2
    for i in 1..3 {
        let mut col = mx.column(i);
        col.sort_by(f64::total_cmp);
        assert!(col[500] < 1.0 / 2f64.ln());
    }
}
