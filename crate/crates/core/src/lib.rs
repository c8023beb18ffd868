//! Ambiguity-aware randomness, preferences and market primitives.
//!
//! The math is generic over the scalar; the aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfmm;
pub mod error;
pub mod freq;
pub mod game;
pub mod oracle;
pub mod prefs;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

pub use cfmm::{
    contains_nonnegative, find_sure_loss, find_sure_loss_veiled, minkowski_aggregate, quote,
    validate_trade, validate_veiled_trade, veiled_payoff, Payoff, SureLoss,
};
pub use freq::{classify_stream, empirical_bounds, gap_trace, odds_from_freq, Classification, WindowSpec};
pub use game::{
    corner_extrema_full, find_veiled_equilibrium, mixed_equilibrium, designated_corner_pair, payoff_row,
    setwise_best_response_check, veiled_aggregate_payoff,
};
pub use oracle::{derived_asset_price, simulate_population, veiled_asset_price, welfare_compare};
pub use prefs::{is_linear_additive, oheu_value, reasonable_action_set, signed_value};

pub type MachineOneConfig = rng::MachineOneConfig<f64>;
pub type MachineOne = rng::MachineOne<f64>;
pub type MachineTwoConfig = rng::MachineTwoConfig<f64>;
pub type DrawStream = rng::DrawStream<f64>;
pub type FrequencyBounds = freq::FrequencyBounds<f64>;
pub type AggregatorParams = prefs::AggregatorParams<f64>;
pub type BeliefInterval = prefs::BeliefInterval<f64>;
pub type ActionProfile = prefs::ActionProfile<f64>;
pub type ReserveState = cfmm::ReserveState<f64>;
pub type PricedTrade = cfmm::PricedTrade<f64>;
pub type PriceBracket = cfmm::PriceBracket<f64>;
pub type VeiledTrade = cfmm::VeiledTrade<f64>;
pub type SearchSpace = cfmm::SearchSpace<f64>;
pub type BoSGame = game::BoSGame<f64>;
pub type IntervalStrategy = game::IntervalStrategy<f64>;
pub type EquilibriumReport = game::EquilibriumReport<f64>;
pub type ForkScenario = oracle::ForkScenario<f64>;
pub type FairnessFunctional = oracle::FairnessFunctional<f64>;
pub type PopulationSpec = oracle::PopulationSpec<f64>;
pub type SimulationConfig = oracle::SimulationConfig<f64>;
pub type UtilityTable = oracle::UtilityTable<f64>;
