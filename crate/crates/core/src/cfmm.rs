//! Two-token constant-product market maker.
//!
//! Reserves `(r1, r2)` are valid while `r1 * r2 >= k`. Prices are quoted as
//! token-2 per token-1 and every payoff is measured in token 2. A trade sends
//! `delta_in` of token 1 into the pool and takes `delta_out` of token 2 out;
//! negative amounts run the other way.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::prefs::{oheu_value, signed_value, AggregatorParams};
use crate::scalar::Real;

/// Slack on the product invariant, per unit of `k` once `k > 1`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// A coordinate counts as nonnegative above this.
pub const NONNEG_TOL: f64 = 1e-12;
pub const DEFAULT_GRID_POINTS: usize = 11;
pub const DEFAULT_DEPTH: usize = 2;
/// Largest searched trade as a fraction of the token-1 reserve.
pub const MAX_TRADE_FRACTION: f64 = 0.1;

/// Payoff in token 2 at the low and at the high bracket price.
pub type Payoff<T> = [T; 2];

fn slack<T: Real>(k: T) -> T {
    T::lit(FEASIBILITY_TOL) * k.max(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReserveState<T> {
    pub r1: T,
    pub r2: T,
    pub k: T,
}

impl<T: Real> ReserveState<T> {
    pub fn new(r1: T, r2: T, k: T) -> Result<Self> {
        if !(r1 > T::zero() && r2 > T::zero() && k > T::zero()) {
            return Err(Error::Config(format!(
                "reserves ({r1}, {r2}) and k = {k} must be positive"
            )));
        }
        if r1 * r2 < k - slack(k) {
            return Err(Error::Config(format!(
                "reserves ({r1}, {r2}) violate r1 * r2 >= k = {k}"
            )));
        }
        Ok(Self { r1, r2, k })
    }

    /// Pool holding `r1` of token 1 whose marginal price is `price`.
    pub fn anchored(price: T, r1: T) -> Result<Self> {
        let r2 = price * r1;
        Self::new(r1, r2, r1 * r2)
    }

    pub fn price(&self) -> T {
        self.r2 / self.r1
    }

    /// Reserves after `trade` without any validity check.
    pub fn after(&self, trade: &PricedTrade<T>) -> (T, T) {
        (self.r1 + trade.delta_in, self.r2 - trade.delta_out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricedTrade<T> {
    pub delta_in: T,
    pub delta_out: T,
    pub price: T,
}

impl<T: Real> PricedTrade<T> {
    pub fn zero(price: T) -> Self {
        Self {
            delta_in: T::zero(),
            delta_out: T::zero(),
            price,
        }
    }

    /// Trader's token-2 payoff if token 1 is worth `p`.
    pub fn payoff_at(&self, p: T) -> T {
        self.delta_out - p * self.delta_in
    }

    pub fn value(&self) -> T {
        self.payoff_at(self.price)
    }

    pub fn endpoint_payoff(&self, bracket: &PriceBracket<T>) -> Payoff<T> {
        [self.payoff_at(bracket.p_low), self.payoff_at(bracket.p_high)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBracket<T> {
    pub p_low: T,
    pub p_high: T,
}

impl<T: Real> PriceBracket<T> {
    pub fn new(p_low: T, p_high: T) -> Result<Self> {
        if !(p_low > T::zero() && p_low <= p_high && p_high.is_finite()) {
            return Err(Error::Config(format!(
                "bracket [{p_low}, {p_high}] must satisfy 0 < low <= high"
            )));
        }
        Ok(Self { p_low, p_high })
    }

    pub fn is_degenerate(&self) -> bool {
        self.p_low == self.p_high
    }

    pub fn mid(&self) -> T {
        (self.p_low + self.p_high) * T::lit(0.5)
    }

    /// `points` evenly spaced prices including both ends; one point when
    /// degenerate.
    pub fn grid(&self, points: usize) -> Vec<T> {
        if self.is_degenerate() || points <= 1 {
            return vec![self.p_low];
        }
        let step = (self.p_high - self.p_low) / T::lit((points - 1) as f64);
        (0..points)
            .map(|i| {
                if i + 1 == points {
                    self.p_high
                } else {
                    self.p_low + step * T::lit(i as f64)
                }
            })
            .collect()
    }
}

/// A trade settled at a price hidden inside the bracket, sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeiledTrade<T> {
    pub bracket: PriceBracket<T>,
    pub outcomes: Vec<PricedTrade<T>>,
    pub grid_points: usize,
}

impl<T: Real> VeiledTrade<T> {
    pub fn new(bracket: PriceBracket<T>, outcomes: Vec<PricedTrade<T>>) -> Result<Self> {
        if outcomes.is_empty() {
            return domain("veiled trade needs at least one outcome");
        }
        let (lo, hi) = (bracket.p_low, bracket.p_high);
        if let Some(o) = outcomes.iter().find(|o| !(o.price >= lo && o.price <= hi)) {
            return domain(format!("outcome price {} outside [{lo}, {hi}]", o.price));
        }
        let grid_points = outcomes.len();
        Ok(Self {
            bracket,
            outcomes,
            grid_points,
        })
    }

    /// Deliver token 1 worth `notional` token 2 at the hidden price `pi`,
    /// quoted against `reserves`, for each grid price `pi`.
    pub fn quoted(
        reserves: &ReserveState<T>,
        bracket: PriceBracket<T>,
        notional: T,
        points: usize,
    ) -> Result<Self> {
        let outcomes = bracket
            .grid(points)
            .into_iter()
            .map(|pi| {
                let delta_in = notional / pi;
                Ok(PricedTrade {
                    delta_in,
                    delta_out: quote(reserves, delta_in)?,
                    price: pi,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bracket, outcomes)
    }

    pub fn payoff_vectors(&self) -> Vec<Payoff<T>> {
        self.outcomes
            .iter()
            .map(|o| o.endpoint_payoff(&self.bracket))
            .collect()
    }
}

/// Token-2 amount paid out for `delta_in` token 1, keeping `r1 * r2 = k`.
pub fn quote<T: Real>(reserves: &ReserveState<T>, delta_in: T) -> Result<T> {
    let r1_new = reserves.r1 + delta_in;
    if !(r1_new > T::zero()) {
        return Err(Error::ReserveDepletion(
            r1_new.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(reserves.r2 - reserves.k / r1_new)
}

pub fn validate_trade<T: Real>(reserves: &ReserveState<T>, trade: &PricedTrade<T>) -> bool {
    let (r1, r2) = reserves.after(trade);
    r1 > T::zero() && r2 > T::zero() && r1 * r2 >= reserves.k - slack(reserves.k)
}

pub fn validate_veiled_trade<T: Real>(reserves: &ReserveState<T>, vt: &VeiledTrade<T>) -> bool {
    vt.outcomes.iter().all(|o| validate_trade(reserves, o))
}

/// All sums `w_1 x_1 + ... + w_n x_n` with `x_i` drawn from the i-th set.
pub fn minkowski_aggregate<T: Real>(sets: &[Vec<Payoff<T>>], weights: &[T]) -> Result<Vec<Payoff<T>>> {
    if sets.is_empty() {
        return domain("minkowski_aggregate: no sets");
    }
    if sets.len() != weights.len() {
        return domain(format!(
            "minkowski_aggregate: {} sets but {} weights",
            sets.len(),
            weights.len()
        ));
    }
    if weights.iter().any(|&w| !(w > T::zero())) {
        return domain("minkowski_aggregate: weights must be positive");
    }
    if sets.iter().any(|s| s.is_empty()) {
        return domain("minkowski_aggregate: empty input set");
    }
    let mut acc: Vec<Payoff<T>> = vec![[T::zero(), T::zero()]];
    for (set, &w) in sets.iter().zip(weights) {
        acc = acc
            .iter()
            .flat_map(|a| set.iter().map(move |x| [a[0] + w * x[0], a[1] + w * x[1]]))
            .collect();
    }
    Ok(acc)
}

pub fn contains_nonnegative<T: Real>(set: &[Payoff<T>]) -> Result<bool> {
    if set.is_empty() {
        return domain("contains_nonnegative: empty set");
    }
    let tol = -T::lit(NONNEG_TOL);
    Ok(set.iter().any(|x| x.iter().all(|&c| c >= tol)))
}

/// Individually acceptable trades that lose at both bracket prices together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SureLoss<T> {
    pub trades: Vec<PricedTrade<T>>,
    /// Summed payoff at the low price; for veiled trades, the best case.
    pub payoff_at_low: T,
    pub payoff_at_high: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace<T> {
    pub depth: usize,
    pub trade_grid: T,
}

impl<T: Real> SearchSpace<T> {
    pub fn new(depth: usize, trade_grid: T) -> Result<Self> {
        if depth < 2 {
            return Err(Error::Config(format!("search depth {depth} must be at least 2")));
        }
        if !(trade_grid > T::zero()) {
            return Err(Error::Config(format!("trade grid {trade_grid} must be positive")));
        }
        Ok(Self { depth, trade_grid })
    }

    /// `{-G, ..., -g, g, ..., G}` in ascending order, `G` a tenth of `r1`.
    pub fn amounts(&self, reserves: &ReserveState<T>) -> Vec<T> {
        let cap = reserves.r1 * T::lit(MAX_TRADE_FRACTION);
        let n = (cap / self.trade_grid + T::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0);
        let pos: Vec<T> = (1..=n).map(|i| self.trade_grid * T::lit(i as f64)).collect();
        pos.iter().rev().map(|&x| -x).chain(pos.iter().copied()).collect()
    }
}

/// Calls `visit` on every non-decreasing index tuple of length `1..=depth`
/// over `n` items, shortest first and lexicographic within a length, until
/// it returns `Some`.
fn first_combination<R>(
    n: usize,
    depth: usize,
    mut visit: impl FnMut(&[usize]) -> Result<Option<R>>,
) -> Result<Option<R>> {
    if n == 0 {
        return Ok(None);
    }
    for len in 1..=depth {
        let mut idx = vec![0usize; len];
        loop {
            if let Some(r) = visit(&idx)? {
                return Ok(Some(r));
            }
            // advance to the next non-decreasing tuple
            let Some(pos) = (0..len).rev().find(|&i| idx[i] + 1 < n) else {
                break;
            };
            let v = idx[pos] + 1;
            idx[pos..].iter_mut().for_each(|x| *x = v);
        }
    }
    Ok(None)
}

/// Value of a two-point prospect to the agent, worst case allowed negative.
fn endpoint_value<T: Real>(params: &AggregatorParams<T>, x: Payoff<T>) -> Result<T> {
    signed_value(params, x[0].max(x[1]), x[0].min(x[1]))
}

/// Dutch book against a single-price agent: each grid trade is quoted
/// against `reserves` and offered on its own; the agent accepts when its
/// aggregated endpoint payoff is nonnegative.
pub fn find_sure_loss<T: Real>(
    params: &AggregatorParams<T>,
    bracket: &PriceBracket<T>,
    reserves: &ReserveState<T>,
    space: &SearchSpace<T>,
) -> Result<Option<SureLoss<T>>> {
    let mut accepted = Vec::new();
    for delta in space.amounts(reserves) {
        let trade = PricedTrade {
            delta_in: delta,
            delta_out: quote(reserves, delta)?,
            price: reserves.price(),
        };
        let payoff = trade.endpoint_payoff(bracket);
        if endpoint_value(params, payoff)? >= T::zero() {
            accepted.push((trade, payoff));
        }
    }
    first_combination(accepted.len(), space.depth, |idx| {
        let (mut low, mut high) = (T::zero(), T::zero());
        for &i in idx {
            low = low + accepted[i].1[0];
            high = high + accepted[i].1[1];
        }
        Ok((low < T::zero() && high < T::zero()).then(|| SureLoss {
            trades: idx.iter().map(|&i| accepted[i].0).collect(),
            payoff_at_low: low,
            payoff_at_high: high,
        }))
    })
}

/// Dutch book against an agent who trades set-valued: every grid trade
/// becomes a veiled trade over `grid_points` bracket prices, accepted iff its
/// outcome set holds a nonnegative point, and a bundle is a sure loss only
/// if every point of the Minkowski sum is negative at both prices.
pub fn find_sure_loss_veiled<T: Real>(
    bracket: &PriceBracket<T>,
    reserves: &ReserveState<T>,
    space: &SearchSpace<T>,
    grid_points: usize,
) -> Result<Option<SureLoss<T>>> {
    let mut accepted = Vec::new();
    for delta in space.amounts(reserves) {
        let vt = VeiledTrade::quoted(reserves, *bracket, delta * reserves.price(), grid_points)?;
        let set = vt.payoff_vectors();
        if contains_nonnegative(&set)? {
            accepted.push((vt, set));
        }
    }
    first_combination(accepted.len(), space.depth, |idx| {
        let sets: Vec<Vec<Payoff<T>>> = idx.iter().map(|&i| accepted[i].1.clone()).collect();
        let agg = minkowski_aggregate(&sets, &vec![T::one(); sets.len()])?;
        if agg.iter().any(|x| x[0] >= T::zero() || x[1] >= T::zero()) {
            return Ok(None);
        }
        let best = |c: usize| agg.iter().fold(T::neg_infinity(), |m, x| m.max(x[c]));
        Ok(Some(SureLoss {
            trades: idx.iter().flat_map(|&i| accepted[i].0.outcomes.clone()).collect(),
            payoff_at_low: best(0),
            payoff_at_high: best(1),
        }))
    })
}

/// Aggregated value of a veiled trade over its best and worst outcome, each
/// valued at its own settlement price.
pub fn veiled_payoff<T: Real>(vt: &VeiledTrade<T>, params: &AggregatorParams<T>) -> Result<T> {
    if vt.outcomes.is_empty() {
        return domain("veiled_payoff: no outcomes");
    }
    let (mut w, mut b) = (T::neg_infinity(), T::infinity());
    for o in &vt.outcomes {
        let v = o.value();
        w = w.max(v);
        b = b.min(v);
    }
    oheu_value(params, w, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pool() -> ReserveState<f64> {
        ReserveState::new(100.0, 100.0, 10_000.0).unwrap()
    }

    fn params(alpha: f64, rho: f64) -> AggregatorParams<f64> {
        AggregatorParams::new(alpha, rho).unwrap()
    }

    #[test]
    fn quote_examples() {
        let r = pool();
        assert_eq!(quote(&r, 0.0).unwrap(), 0.0);
        assert!((quote(&r, 10.0).unwrap() - (100.0 - 10_000.0 / 110.0)).abs() < 1e-12);
        assert!((quote(&r, -50.0).unwrap() + 100.0).abs() < 1e-12);
        assert!(matches!(quote(&r, -100.0), Err(Error::ReserveDepletion(_))));
    }

    #[test]
    fn reserve_validation() {
        assert!(ReserveState::new(10.0, 10.0, 101.0).is_err());
        assert!(ReserveState::new(0.0, 10.0, 1.0).is_err());
        let a = ReserveState::anchored(1.5, 100.0).unwrap();
        assert_eq!((a.r2, a.k), (150.0, 15_000.0));
    }

    #[test]
    fn validate_examples() {
        let r = pool();
        assert!(validate_trade(&r, &PricedTrade::zero(1.0)));
        let d = quote(&r, 10.0).unwrap();
        let t = PricedTrade { delta_in: 10.0, delta_out: d, price: 1.0 };
        assert!(validate_trade(&r, &t));
        let bad = PricedTrade { delta_in: 10.0, delta_out: 20.0, price: 1.0 };
        assert!(!validate_trade(&r, &bad));
    }

    #[test]
    fn veiled_validation() {
        let r = pool();
        let br = PriceBracket::new(0.8, 1.2).unwrap();
        let mut vt = VeiledTrade::quoted(&r, br, 5.0, 11).unwrap();
        assert_eq!(vt.grid_points, 11);
        assert!(validate_veiled_trade(&r, &vt));
        vt.outcomes[3].delta_out += 1.0;
        assert!(!validate_veiled_trade(&r, &vt));

        let point = PriceBracket::new(1.0, 1.0).unwrap();
        let single = VeiledTrade::quoted(&r, point, 5.0, 11).unwrap();
        assert_eq!(single.outcomes.len(), 1);
        assert_eq!(validate_veiled_trade(&r, &single), validate_trade(&r, &single.outcomes[0]));

        assert!(VeiledTrade::new(br, vec![]).is_err());
        assert!(VeiledTrade::new(br, vec![PricedTrade::zero(2.0)]).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let s = minkowski_aggregate(&[vec![[1.0, 0.0]], vec![[0.0, 1.0]]], &[1.0, 1.0]).unwrap();
        assert_eq!(s, vec![[1.0, 1.0]]);
        let s = minkowski_aggregate(
            &[vec![[2.0, -1.0], [-1.0, 2.0]], vec![[-1.0, 2.0], [2.0, -1.0]]],
            &[1.0, 1.0],
        )
        .unwrap();
        assert!(s.contains(&[1.0, 1.0]));
        assert!(minkowski_aggregate::<f64>(&[], &[]).is_err());
        assert!(minkowski_aggregate(&[vec![[0.0, 0.0]]], &[0.0]).is_err());
        assert!(minkowski_aggregate(&[vec![[0.0, 0.0]]], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn nonnegative_examples() {
        assert!(contains_nonnegative(&[[-1.0, -1.0], [0.0, 0.0]]).unwrap());
        assert!(!contains_nonnegative(&[[-1.0, 1.0], [1.0, -1.0]]).unwrap());
        assert!(contains_nonnegative::<f64>(&[]).is_err());
    }

    #[test]
    fn search_space_grid() {
        let s = SearchSpace::new(2, 0.1).unwrap();
        let g = s.amounts(&pool());
        assert_eq!(g.len(), 200);
        assert!((g[0] + 10.0).abs() < 1e-12);
        assert!((g[199] - 10.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(SearchSpace::new(1, 0.1).is_err());
        assert!(SearchSpace::new(2, 0.0).is_err());
    }

    #[test]
    fn combination_order() {
        let mut seen = Vec::new();
        let _: Option<()> = first_combination(3, 2, |idx| {
            seen.push(idx.to_vec());
            Ok(None)
        })
        .unwrap();
        let expect: Vec<Vec<usize>> = vec![
            vec![0], vec![1], vec![2],
            vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2], vec![2, 2],
        ];
        assert_eq!(seen, expect);
    }

    #[test]
    fn neutral_type_has_no_sure_loss() {
        let space = SearchSpace::new(2, 0.1).unwrap();
        for &(lo, hi) in &[(1.0, 2.0), (1.0, 1.5), (0.5, 2.0)] {
            let br = PriceBracket::new(lo, hi).unwrap();
            let r = ReserveState::anchored(br.mid(), 100.0).unwrap();
            assert!(find_sure_loss(&params(0.5, 1.0), &br, &r, &space).unwrap().is_none());
        }
    }

    #[test]
    fn convex_type_is_dutch_booked() {
        let br = PriceBracket::new(1.0, 2.0).unwrap();
        let r = ReserveState::anchored(1.5, 100.0).unwrap();
        let space = SearchSpace::new(2, 0.1).unwrap();
        let w = find_sure_loss(&params(0.5, 2.0), &br, &r, &space).unwrap().unwrap();
        assert_eq!(w.trades.len(), 2);
        assert!(w.payoff_at_low < 0.0 && w.payoff_at_high < 0.0);
        for t in &w.trades {
            assert!(validate_trade(&r, t));
        }
    }

    #[test]
    fn degenerate_bracket_has_no_sure_loss() {
        let br = PriceBracket::new(1.5, 1.5).unwrap();
        let r = ReserveState::anchored(1.5, 100.0).unwrap();
        let space = SearchSpace::new(2, 0.5).unwrap();
        for &(a, rho) in &[(0.5, 2.0), (0.9, 3.0), (0.1, -1.0), (0.5, 1.0)] {
            assert!(find_sure_loss(&params(a, rho), &br, &r, &space).unwrap().is_none());
        }
    }

    #[test]
    fn veiled_search_finds_nothing() {
        let br = PriceBracket::new(1.0, 2.0).unwrap();
        let r = ReserveState::anchored(1.5, 100.0).unwrap();
        let space = SearchSpace::new(2, 0.5).unwrap();
        assert!(find_sure_loss_veiled(&br, &r, &space, 11).unwrap().is_none());
    }

    #[test]
    fn veiled_payoff_examples() {
        let br = PriceBracket::new(1.0, 1.0).unwrap();
        let valued = |vals: &[f64]| {
            let outs = vals
                .iter()
                .map(|&v| PricedTrade { delta_in: 0.0, delta_out: v, price: 1.0 })
                .collect();
            VeiledTrade::new(br, outs).unwrap()
        };
        assert_eq!(veiled_payoff(&valued(&[0.7]), &params(0.3, 2.0)).unwrap(), 0.7);
        assert_eq!(veiled_payoff(&valued(&[0.0, 2.0]), &params(0.5, 1.0)).unwrap(), 1.0);
        let cd = veiled_payoff(&valued(&[1.0, 4.0]), &params(0.5, 0.0)).unwrap();
        assert!((cd - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quotes_are_feasible(r1 in 1.0f64..1e4, price in 0.01f64..100.0, frac in -0.9f64..5.0) {
            let r = ReserveState::anchored(price, r1).unwrap();
            let delta = frac * r1;
            let t = PricedTrade { delta_in: delta, delta_out: quote(&r, delta).unwrap(), price };
            prop_assert!(validate_trade(&r, &t));
            let (a, b) = r.after(&t);
            prop_assert!((a * b - r.k).abs() <= 1e-9 * r.k.max(1.0));
        }

        #[test]
        fn round_trip_never_gains_both(r1 in 1.0f64..1e4, price in 0.01f64..100.0, frac in 0.001f64..0.9) {
            let r = ReserveState::anchored(price, r1).unwrap();
            let delta = frac * r1;
            let out = quote(&r, delta).unwrap();
            let mid = ReserveState { r1: r.r1 + delta, r2: r.r2 - out, k: r.k };
            let back = quote(&mid, -delta).unwrap();
            let (r1_end, r2_end) = (mid.r1 - delta, mid.r2 - back);
            prop_assert!(!(r1_end > r.r1 + 1e-9 && r2_end > r.r2 + 1e-9));
        }

        #[test]
        fn minkowski_keeps_a_nonnegative_point(
            sets in prop::collection::vec(
                (prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..4), 0.0f64..3.0, 0.0f64..3.0, 0.1f64..3.0),
                1..4,
            )
        ) {
            let mut inputs = Vec::new();
            let mut weights = Vec::new();
            for (pts, nx, ny, w) in sets {
                let mut s: Vec<Payoff<f64>> = pts.into_iter().map(|(x, y)| [x, y]).collect();
                s.push([nx, ny]);
                inputs.push(s);
                weights.push(w);
            }
            let agg = minkowski_aggregate(&inputs, &weights).unwrap();
            prop_assert!(contains_nonnegative(&agg).unwrap());
        }
    }
}
