//! Library results checked against independent computations: bisection,
//! brute-force corner enumeration, exact replays and fixed-seed simulation.

use num_rational::Ratio;
use proptest::prelude::*;
use serde_json::Value;

use veil_core::cfmm::find_sure_loss;
use veil_core::freq::gap_trace;
use veil_core::game;
use veil_core::game::{corner_extrema_full, mixed_equilibrium, payoff_row, veiled_aggregate_payoff};
use veil_core::oracle::veiled_asset_price;
use veil_core::prefs::oheu_value;
use veil_core::{
    AggregatorParams, BoSGame, DrawStream, MachineOne, MachineOneConfig, MachineTwoConfig,
    PriceBracket, ReserveState, SearchSpace,
};

type Q = Ratio<i64>;

fn fixture(name: &str) -> Value {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Row player's payoff gap between the two pure actions against column mix q.
fn indifference_gap(lambda: f64, q: f64) -> f64 {
    let g = BoSGame::new(lambda).unwrap();
    payoff_row(&g, 1.0, q) - payoff_row(&g, 0.0, q)
}

fn bisect_equilibrium(lambda: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign_lo = indifference_gap(lambda, lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if indifference_gap(lambda, mid).signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn equilibrium_matches_indifference_search() {
    for &(lambda, e_expected, c_expected) in &[(0.5, 2.0 / 3.0, 1.0 / 3.0), (0.25, 0.8, 0.2)] {
        let (e, c) = mixed_equilibrium(&BoSGame::new(lambda).unwrap());
        assert!((bisect_equilibrium(lambda) - e).abs() < 1e-12);
        assert!((e - e_expected).abs() < 1e-12 && (c - c_expected).abs() < 1e-12);
    }
    let (e, _) = mixed_equilibrium(&BoSGame::new(0.999).unwrap());
    assert!((e - bisect_equilibrium(0.999)).abs() < 1e-12);
    assert!((e - 0.50025).abs() < 1e-5);
}

fn brute_corners(lambda: Q, a: (Q, Q), b: (Q, Q)) -> Vec<(Q, Q, Q)> {
    let one = Q::from_integer(1);
    let mut out = Vec::new();
    for &p in &[a.0, a.1] {
        for &q in &[b.0, b.1] {
            // row gets 1 on (top, right) and lambda on (bottom, left)
            out.push((p, q, p * (one - q) + lambda * (one - p) * q));
        }
    }
    out
}

#[test]
fn corner_extrema_match_enumeration() {
    let lambda = Q::new(1, 2);
    let g = game::BoSGame::new(lambda).unwrap();
    let (e, _) = mixed_equilibrium(&g);
    for k in 0..=6 {
        let a = Q::new(k, 30);
        let s = game::IntervalStrategy::new(e - a, e + a).unwrap();
        let ex = corner_extrema_full(&g, &s, &s);
        let corners = brute_corners(lambda, (s.low, s.high), (s.low, s.high));
        let min = corners.iter().map(|c| c.2).min().unwrap();
        let max = corners.iter().map(|c| c.2).max().unwrap();
        assert_eq!((ex.min, ex.max), (min, max), "a = {a}");
    }
    let s = game::IntervalStrategy::new(e - Q::new(1, 5), e + Q::new(1, 5)).unwrap();
    let ex = corner_extrema_full(&g, &s, &s);
    assert_eq!((ex.min, ex.max), (Q::new(13, 75), Q::new(37, 75)));
    assert_eq!(ex.argmin, (Q::new(13, 15), Q::new(13, 15)));
    assert_eq!(veiled_aggregate_payoff(&g, Q::new(1, 5)).unwrap(), Q::new(59, 150));
}

#[test]
fn witness_matches_fixture() {
    let fx = fixture("sure_loss_witness.json");
    let ty = &fx["type"];
    let params = AggregatorParams::new(ty["alpha"].as_f64().unwrap(), ty["rho"].as_f64().unwrap()).unwrap();
    let pool = &fx["pool"];
    let reserves = ReserveState::new(
        pool["r1"].as_f64().unwrap(),
        pool["r2"].as_f64().unwrap(),
        pool["k"].as_f64().unwrap(),
    )
    .unwrap();
    let br = &fx["bracket"];
    let bracket = PriceBracket::new(br[0].as_f64().unwrap(), br[1].as_f64().unwrap()).unwrap();
    let space = SearchSpace::new(
        fx["depth"].as_u64().unwrap() as usize,
        fx["trade_grid"].as_f64().unwrap(),
    )
    .unwrap();
    let w = find_sure_loss(&params, &bracket, &reserves, &space).unwrap().unwrap();
    assert!((w.payoff_at_low - fx["payoff_at_low"].as_f64().unwrap()).abs() < 1e-12);
    assert!((w.payoff_at_high - fx["payoff_at_high"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn machine_one_window_means_stay_near_measure() {
    let mut m = MachineOne::new(MachineOneConfig::with_measure(0.3, 1).unwrap());
    let bits: Vec<bool> = (0..1_000_000).map(|_| m.next_bit()).collect();
    let trace = gap_trace::<f64>(&bits, 10_000, 10_000).unwrap();
    assert!(trace.iter().all(|&(_, x)| (x - 0.3).abs() <= 0.05));
}

const WANDER_WINDOW: usize = 1_000;

#[test]
fn veiled_price_wanders_across_the_bracket() {
    let window = WANDER_WINDOW;
    let mut visiting = 0;
    for seed in 1..=10 {
        let mut s = DrawStream::new(MachineTwoConfig::with_seed(seed)).unwrap();
        let prices: Vec<f64> = (0..100_000).map(|_| veiled_asset_price(&mut s, 1.0, 2.0).unwrap()).collect();
        let means: Vec<f64> = prices.chunks(window).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        if means.iter().any(|&m| m < 1.2) && means.iter().any(|&m| m > 1.8) {
            visiting += 1;
        }
    }
    assert!(visiting >= 5, "only {visiting} of 10 seeds visit both ends");
}

proptest! {
    #[test]
    fn ces_matches_direct_formula(alpha in 0.05f64..0.95, rho in -4.0f64..4.0, w in 0.1f64..10.0, f in 0.01f64..1.0) {
        prop_assume!(rho.abs() > 1e-3);
        let b = w * f;
        let p = AggregatorParams::new(alpha, rho).unwrap();
        let direct = (alpha * w.powf(rho) + (1.0 - alpha) * b.powf(rho)).powf(1.0 / rho);
        let u = oheu_value(&p, w, b).unwrap();
        prop_assert!((u - direct).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn veiled_payoff_is_quadratic_exactly(num in 1i64..100, den in 1i64..100, k in 0i64..10) {
        let lambda = Q::new(num.min(den), num.max(den) + 1);
        let g = game::BoSGame::new(lambda).unwrap();
        let (_, c) = mixed_equilibrium(&g);
        let a = g.max_half_width() * Q::new(k, 10);
        let v = veiled_aggregate_payoff(&g, a).unwrap();
        prop_assert_eq!(v, c + (Q::from_integer(1) + lambda) * a * a);
    }
}
