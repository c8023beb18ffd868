//! Forked-asset oracle: resolving a derivative asset to a single fair price
//! versus veiling it inside the candidate bracket, and the welfare of a
//! population of aggregator types under each design.
//!
//! Under `Avg` every type faces single-price liquidity at the derived price
//! and an exploiter running [`find_sure_loss`] against it. Under `Veil` the
//! price each epoch comes from the non-ergodic stream and types trade
//! set-valued, so the exploiter runs [`find_sure_loss_veiled`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cfmm::{
    find_sure_loss, find_sure_loss_veiled, veiled_payoff, PriceBracket, PricedTrade, ReserveState,
    SearchSpace, VeiledTrade, DEFAULT_DEPTH, DEFAULT_GRID_POINTS,
};
use crate::error::{domain, Error, Result};
use crate::game::{find_veiled_equilibrium, mixed_equilibrium, BoSGame};
use crate::prefs::{reasonable_action_set, signed_value, ActionProfile, AggregatorParams, BeliefInterval};
use crate::rng::{DrawStream, MachineTwoConfig};
use crate::scalar::Real;

pub const WEIGHT_SUM_TOL: f64 = 1e-9;
pub const WELFARE_TOL: f64 = 1e-9;
pub const DEFAULT_POOL_DEPTH: f64 = 100.0;
pub const DEFAULT_TRADE_GRID: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForkScenario<T> {
    pub p_s: T,
    pub p_n: T,
    pub epochs: usize,
    pub seed: u64,
}

impl<T: Real> ForkScenario<T> {
    pub fn new(p_s: T, p_n: T, epochs: usize, seed: u64) -> Result<Self> {
        if !(p_s > T::zero() && p_s <= p_n && p_n.is_finite()) {
            return Err(Error::Config(format!(
                "candidate prices ({p_s}, {p_n}) must satisfy 0 < p_S <= p_N"
            )));
        }
        Ok(Self { p_s, p_n, epochs, seed })
    }

    pub fn bracket(&self) -> PriceBracket<T> {
        PriceBracket {
            p_low: self.p_s,
            p_high: self.p_n,
        }
    }
}

/// How a single price is extracted from the two candidates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FairnessFunctional<T> {
    Linear { alpha: T },
    WorstOff,
    CobbDouglas { alpha: T },
}

impl<T: Real> FairnessFunctional<T> {
    pub fn average() -> Self {
        Self::Linear { alpha: T::lit(0.5) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Linear { alpha } | Self::CobbDouglas { alpha } => {
                if !(alpha >= T::zero() && alpha <= T::one()) {
                    return Err(Error::Config(format!("fairness alpha = {alpha} must lie in [0, 1]")));
                }
                Ok(())
            }
            Self::WorstOff => Ok(()),
        }
    }
}

pub fn derived_asset_price<T: Real>(f: &FairnessFunctional<T>, p_s: T, p_n: T) -> Result<T> {
    f.validate()?;
    if !(p_s <= p_n) {
        return domain(format!("p_S = {p_s} exceeds p_N = {p_n}"));
    }
    let price = match *f {
        FairnessFunctional::Linear { alpha } => alpha * p_n + (T::one() - alpha) * p_s,
        FairnessFunctional::WorstOff => p_s,
        FairnessFunctional::CobbDouglas { alpha } => p_n.powf(alpha) * p_s.powf(T::one() - alpha),
    };
    // rounding can push the geometric mean a hair outside
    Ok(price.max(p_s).min(p_n))
}

/// Next veiled price; a degenerate bracket returns `p_s` without drawing.
pub fn veiled_asset_price<T: Real>(stream: &mut DrawStream<T>, p_s: T, p_n: T) -> Result<T> {
    if p_s == p_n {
        return Ok(p_s);
    }
    stream.next_in_interval(p_s, p_n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec<T> {
    pub types: Vec<(AggregatorParams<T>, T)>,
}

impl<T: Real> PopulationSpec<T> {
    pub fn new(types: Vec<(AggregatorParams<T>, T)>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Config("population has no types".into()));
        }
        if let Some((_, w)) = types.iter().find(|(_, w)| !(*w >= T::zero())) {
            return Err(Error::Config(format!("type weight {w} is negative")));
        }
        let total = types.iter().fold(T::zero(), |s, (_, w)| s + *w);
        if (total - T::one()).abs() > T::lit(WEIGHT_SUM_TOL) {
            return Err(Error::Config(format!("type weights sum to {total}, not 1")));
        }
        Ok(Self { types })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Settlement {
    /// Final price is one of the two candidates.
    Endpoint,
    /// Final price is one more veiled draw.
    Veiled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design<T> {
    Avg(FairnessFunctional<T>),
    Veil,
}

impl<T> Design<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Design::Avg(_) => "AVG",
            Design::Veil => "VEIL",
        }
    }
}

/// The coordination game played between the two currency communities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinationLayer<T> {
    pub lambda: T,
    pub grid_step: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig<T> {
    /// Token-1 reserve of the pools the exploiter trades against.
    pub pool_depth: T,
    pub search: SearchSpace<T>,
    pub grid_points: usize,
    /// Stream parameters; the seed is taken from the scenario.
    pub machine: MachineTwoConfig<T>,
    pub settlement: Settlement,
    pub coordination: Option<CoordinationLayer<T>>,
}

impl<T: Real> Default for SimulationConfig<T> {
    fn default() -> Self {
        Self {
            pool_depth: T::lit(DEFAULT_POOL_DEPTH),
            search: SearchSpace {
                depth: DEFAULT_DEPTH,
                trade_grid: T::lit(DEFAULT_TRADE_GRID),
            },
            grid_points: DEFAULT_GRID_POINTS,
            machine: MachineTwoConfig::default(),
            settlement: Settlement::Endpoint,
            coordination: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeUtility<T> {
    pub alpha: T,
    pub rho: T,
    pub weight: T,
    pub mean_utility: T,
    /// Worst single-epoch utility.
    pub min_utility: T,
    /// Trading at the posted price is a reasonable action for this type.
    pub trades: bool,
    /// The exploiter found a sure loss.
    pub exploited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityTable<T> {
    pub design: &'static str,
    pub rows: Vec<TypeUtility<T>>,
    pub welfare: T,
    pub settlement_price: Option<T>,
}

fn exploit_value<T: Real>(params: &AggregatorParams<T>, low: T, high: T) -> Result<T> {
    signed_value(params, low.max(high), low.min(high))
}

/// Whether selling one unit at `price` is an argmax somewhere in the bracket
/// belief, against standing aside.
fn trading_is_reasonable<T: Real>(price: T, bracket: &PriceBracket<T>) -> Result<bool> {
    let actions = [
        ActionProfile::new(price - bracket.p_high, price - bracket.p_low),
        ActionProfile::new(T::zero(), T::zero()),
    ];
    let belief = BeliefInterval::new(T::zero(), T::one())?;
    Ok(reasonable_action_set(&actions, &belief, T::lit(1e-3))?.contains(&0))
}

fn settle<T: Real>(
    scenario: &ForkScenario<T>,
    config: &SimulationConfig<T>,
    stream: &mut DrawStream<T>,
) -> Result<T> {
    match config.settlement {
        Settlement::Endpoint => {
            let mut coin = ChaCha8Rng::seed_from_u64(scenario.seed);
            Ok(if coin.gen_bool(0.5) { scenario.p_n } else { scenario.p_s })
        }
        Settlement::Veiled => veiled_asset_price(stream, scenario.p_s, scenario.p_n),
    }
}

/// Coordination payoff of a neutral type: the mixed equilibrium value under
/// a single price, the veiled interval value under veiling.
fn coordination_bonus<T: Real>(layer: &CoordinationLayer<T>, veiled: bool) -> Result<T> {
    let game = BoSGame::new(layer.lambda)?;
    if veiled {
        Ok(find_veiled_equilibrium(&game, layer.grid_step)?.veiled_payoff)
    } else {
        Ok(mixed_equilibrium(&game).1)
    }
}

pub fn simulate_population<T: Real>(
    pop: &PopulationSpec<T>,
    scenario: &ForkScenario<T>,
    design: &Design<T>,
    config: &SimulationConfig<T>,
) -> Result<UtilityTable<T>> {
    let bracket = scenario.bracket();
    let mut machine = config.machine;
    machine.seed = scenario.seed;
    let mut stream = DrawStream::new(machine)?;
    let veiled = matches!(design, Design::Veil);
    let bonus = match &config.coordination {
        Some(layer) => Some(coordination_bonus(layer, veiled)?),
        None => None,
    };
    let with_bonus = |params: &AggregatorParams<T>, u: T| match bonus {
        Some(b) if params.is_neutral() => u + b,
        _ => u,
    };

    if scenario.epochs == 0 {
        return Ok(UtilityTable {
            design: design.label(),
            rows: Vec::new(),
            welfare: T::zero(),
            settlement_price: None,
        });
    }
    let epochs = T::lit(scenario.epochs as f64);

    let rows = match design {
        Design::Avg(f) => {
            // the posted price never moves, so one epoch stands for all
            let price = derived_asset_price(f, scenario.p_s, scenario.p_n)?;
            let pool = ReserveState::anchored(price, config.pool_depth)?;
            let trades = trading_is_reasonable(price, &bracket)?;
            pop.types
                .iter()
                .map(|(params, weight)| {
                    let loss = find_sure_loss(params, &bracket, &pool, &config.search)?;
                    let u = match &loss {
                        Some(w) => exploit_value(params, w.payoff_at_low, w.payoff_at_high)?,
                        None => T::zero(),
                    };
                    let u = with_bonus(params, u);
                    Ok(TypeUtility {
                        alpha: params.alpha,
                        rho: params.rho,
                        weight: *weight,
                        mean_utility: u,
                        min_utility: u,
                        trades,
                        exploited: loss.is_some(),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Design::Veil => {
            let n = pop.types.len();
            let mut sums = vec![T::zero(); n];
            let mut mins = vec![T::infinity(); n];
            let mut exploited = vec![false; n];
            let mut trades = vec![false; n];
            for _ in 0..scenario.epochs {
                let price = veiled_asset_price(&mut stream, scenario.p_s, scenario.p_n)?;
                let pool = ReserveState::anchored(price, config.pool_depth)?;
                let loss = find_sure_loss_veiled(&bracket, &pool, &config.search, config.grid_points)?;
                let standing = VeiledTrade::new(bracket, vec![PricedTrade::zero(price)])?;
                let reasonable = trading_is_reasonable(price, &bracket)?;
                for (i, (params, _)) in pop.types.iter().enumerate() {
                    let u = match &loss {
                        Some(w) => exploit_value(params, w.payoff_at_low, w.payoff_at_high)?,
                        None => veiled_payoff(&standing, params)?,
                    };
                    sums[i] = sums[i] + u;
                    mins[i] = mins[i].min(u);
                    exploited[i] |= loss.is_some();
                    trades[i] |= reasonable;
                }
            }
            pop.types
                .iter()
                .enumerate()
                .map(|(i, (params, weight))| TypeUtility {
                    alpha: params.alpha,
                    rho: params.rho,
                    weight: *weight,
                    mean_utility: with_bonus(params, sums[i] / epochs),
                    min_utility: with_bonus(params, mins[i]),
                    trades: trades[i],
                    exploited: exploited[i],
                })
                .collect()
        }
    };

    let welfare = rows
        .iter()
        .fold(T::zero(), |s, r: &TypeUtility<T>| s + r.weight * r.mean_utility);
    let settlement_price = Some(settle(scenario, config, &mut stream)?);
    Ok(UtilityTable {
        design: design.label(),
        rows,
        welfare,
        settlement_price,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport<T> {
    pub per_type_delta: Vec<T>,
    pub welfare_avg: T,
    pub welfare_veil: T,
    pub welfare_delta: T,
    /// `welfare_veil < welfare_avg - tol`.
    pub violation: bool,
}

pub fn welfare_compare<T: Real>(avg: &UtilityTable<T>, veil: &UtilityTable<T>) -> Result<WelfareReport<T>> {
    if avg.rows.len() != veil.rows.len() {
        return Err(Error::PopulationMismatch(format!(
            "{} types against {}",
            avg.rows.len(),
            veil.rows.len()
        )));
    }
    let mut per_type_delta = Vec::with_capacity(avg.rows.len());
    for (a, v) in avg.rows.iter().zip(&veil.rows) {
        if (a.alpha, a.rho, a.weight) != (v.alpha, v.rho, v.weight) {
            return Err(Error::PopulationMismatch(format!(
                "type ({}, {}, {}) paired with ({}, {}, {})",
                a.alpha, a.rho, a.weight, v.alpha, v.rho, v.weight
            )));
        }
        per_type_delta.push(v.mean_utility - a.mean_utility);
    }
    let welfare_delta = veil.welfare - avg.welfare;
    Ok(WelfareReport {
        per_type_delta,
        welfare_avg: avg.welfare,
        welfare_veil: veil.welfare,
        welfare_delta,
        violation: veil.welfare < avg.welfare - T::lit(WELFARE_TOL),
    })
}
