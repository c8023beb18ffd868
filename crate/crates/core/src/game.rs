//! Asymmetric two-player coordination game and its interval strategies.
//!
//! The row player's payoff from mixing `p` against the column player's `q`
//! is `p(1 - q) + lambda (1 - p) q`: 1 for the preferred coordination,
//! `lambda` for the other one, 0 on a miss. The column player's game is the
//! mirror image with `lambda` and 1 interchanged, so only the row side is
//! computed.
//!
//! An interval strategy `[A_lo, A_hi]` is valued by the half-sum of two
//! designated corners, `1/2 pi(A_lo, B_hi) + 1/2 pi(A_hi, B_lo)`. The true
//! bilinear extrema over the rectangle are provided alongside; the two
//! conventions disagree on the minimum corner.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::scalar::Field;

/// Improvement threshold in the perturbation check.
pub const IMPROVEMENT_TOL: f64 = 1e-9;
pub const DEFAULT_GRID_STEP: f64 = 1e-3;
/// Agreement tolerance for the point-response check.
pub const POINT_RESPONSE_TOL: f64 = 1e-9;

fn half<T: Field>() -> T {
    T::one() / (T::one() + T::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoSGame<T> {
    pub lambda: T,
}

impl<T: Field> BoSGame<T> {
    pub fn new(lambda: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda < T::one()) {
            return Err(Error::Config(format!("lambda = {lambda:?} must lie in (0, 1)")));
        }
        Ok(Self { lambda })
    }

    /// Largest symmetric half-width around `e` that stays inside `[0, 1]`.
    pub fn max_half_width(&self) -> T {
        let (e, _) = mixed_equilibrium(self);
        e.min_of(T::one() - e)
    }

    fn check_half_width(&self, a: T) -> Result<()> {
        if !(a >= T::zero() && a <= self.max_half_width()) {
            return domain(format!(
                "half-width {a:?} outside [0, {:?}]",
                self.max_half_width()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalStrategy<T> {
    pub low: T,
    pub high: T,
}

impl<T: Field> IntervalStrategy<T> {
    pub fn new(low: T, high: T) -> Result<Self> {
        if !(low >= T::zero() && low <= high && high <= T::one()) {
            return domain(format!("interval [{low:?}, {high:?}] must satisfy 0 <= low <= high <= 1"));
        }
        Ok(Self { low, high })
    }

    pub fn point(p: T) -> Result<Self> {
        Self::new(p, p)
    }

    /// `[center - a, center + a]` clipped to `[0, 1]`; the flag reports
    /// whether clipping happened.
    pub fn symmetric_clamped(center: T, a: T) -> (Self, bool) {
        let (lo, hi) = (center - a, center + a);
        let clamped = lo < T::zero() || hi > T::one();
        let low = lo.max_of(T::zero()).min_of(T::one());
        let high = hi.min_of(T::one()).max_of(low);
        (Self { low, high }, clamped)
    }
}

pub fn payoff_row<T: Field>(game: &BoSGame<T>, p: T, q: T) -> T {
    p * (T::one() - q) + game.lambda * (T::one() - p) * q
}

/// `(e, c)`: the mixing probability that leaves the opponent indifferent
/// and the resulting payoff.
pub fn mixed_equilibrium<T: Field>(game: &BoSGame<T>) -> (T, T) {
    let denom = T::one() + game.lambda;
    (T::one() / denom, game.lambda / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerExtrema<T> {
    pub min: T,
    pub max: T,
    pub argmin: (T, T),
    pub argmax: (T, T),
}

/// Exact extrema of the row payoff over `A x B`, found at the corners.
pub fn corner_extrema_full<T: Field>(
    game: &BoSGame<T>,
    a: &IntervalStrategy<T>,
    b: &IntervalStrategy<T>,
) -> CornerExtrema<T> {
    let corners = [
        (a.low, b.low),
        (a.low, b.high),
        (a.high, b.low),
        (a.high, b.high),
    ];
    let first = payoff_row(game, corners[0].0, corners[0].1);
    let mut out = CornerExtrema {
        min: first,
        max: first,
        argmin: corners[0],
        argmax: corners[0],
    };
    for &(p, q) in &corners[1..] {
        let v = payoff_row(game, p, q);
        if v < out.min {
            out.min = v;
            out.argmin = (p, q);
        }
        if v > out.max {
            out.max = v;
            out.argmax = (p, q);
        }
    }
    out
}

/// Midrange of the true corner extrema.
pub fn full_aggregate<T: Field>(
    game: &BoSGame<T>,
    a: &IntervalStrategy<T>,
    b: &IntervalStrategy<T>,
) -> T {
    let ex = corner_extrema_full(game, a, b);
    half::<T>() * (ex.min + ex.max)
}

/// `(pi(e - a, e + a), pi(e + a, e - a))`.
pub fn designated_corner_pair<T: Field>(game: &BoSGame<T>, a: T) -> Result<(T, T)> {
    game.check_half_width(a)?;
    let (e, _) = mixed_equilibrium(game);
    Ok((payoff_row(game, e - a, e + a), payoff_row(game, e + a, e - a)))
}

/// Designated-corner value of `A` against `B`.
pub fn interval_aggregate<T: Field>(
    game: &BoSGame<T>,
    a: &IntervalStrategy<T>,
    b: &IntervalStrategy<T>,
) -> T {
    half::<T>() * (payoff_row(game, a.low, b.high) + payoff_row(game, a.high, b.low))
}

/// Designated-corner value of the symmetric pair `[e - a, e + a]`.
pub fn veiled_aggregate_payoff<T: Field>(game: &BoSGame<T>, a: T) -> Result<T> {
    let (lo, hi) = designated_corner_pair(game, a)?;
    Ok(half::<T>() * (lo + hi))
}

pub fn closed_form_payoff<T: Field>(game: &BoSGame<T>, a: T) -> T {
    let (_, c) = mixed_equilibrium(game);
    c + (T::one() + game.lambda) * a * a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CornerConvention {
    /// `1/2 pi(A_lo, B_hi) + 1/2 pi(A_hi, B_lo)`.
    Designated,
    /// Midrange of the true extrema over `A x B`.
    FullExtrema,
}

fn aggregate_by<T: Field>(
    convention: CornerConvention,
    game: &BoSGame<T>,
    a: &IntervalStrategy<T>,
    b: &IntervalStrategy<T>,
) -> T {
    match convention {
        CornerConvention::Designated => interval_aggregate(game, a, b),
        CornerConvention::FullExtrema => full_aggregate(game, a, b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BestResponseCheck {
    pub is_best_response: bool,
    /// An interval had to be clipped to `[0, 1]`.
    pub boundary: bool,
}

fn perturbation_check<T: Field>(
    convention: CornerConvention,
    game: &BoSGame<T>,
    a: &IntervalStrategy<T>,
    b: &IntervalStrategy<T>,
    delta: T,
) -> bool {
    let base = aggregate_by(convention, game, a, b);
    let tol = T::lit(IMPROVEMENT_TOL);
    let clip = |x: T| x.max_of(T::zero()).min_of(T::one());
    let moves = [
        (a.low - delta, a.high),
        (a.low + delta, a.high),
        (a.low, a.high - delta),
        (a.low, a.high + delta),
    ];
    moves.iter().all(|&(lo, hi)| {
        let (lo, hi) = (clip(lo), clip(hi));
        if lo > hi {
            return true;
        }
        let alt = IntervalStrategy { low: lo, high: hi };
        aggregate_by(convention, game, &alt, b) - base <= tol
    })
}

/// True iff no inward or outward move of either end of `A` by `delta`
/// raises the designated-corner value against `B` by more than the
/// tolerance.
pub fn setwise_best_response_check<T: Field>(
    game: &BoSGame<T>,
    a: &IntervalStrategy<T>,
    b: &IntervalStrategy<T>,
    delta: T,
) -> BestResponseCheck {
    BestResponseCheck {
        is_best_response: perturbation_check(CornerConvention::Designated, game, a, b, delta),
        boundary: false,
    }
}

/// The check for `A = B = [e - a, e + a]`; fails with the boundary flag when
/// the pair does not fit in `[0, 1]`.
pub fn symmetric_best_response_check<T: Field>(
    game: &BoSGame<T>,
    a: T,
    delta: T,
    convention: CornerConvention,
) -> BestResponseCheck {
    let (e, _) = mixed_equilibrium(game);
    let (s, clamped) = IntervalStrategy::symmetric_clamped(e, a);
    if clamped {
        return BestResponseCheck {
            is_best_response: false,
            boundary: true,
        };
    }
    BestResponseCheck {
        is_best_response: perturbation_check(convention, game, &s, &s, delta),
        boundary: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConventionResult<T> {
    /// Largest grid half-width passing the perturbation check.
    pub a_star: T,
    pub veiled_payoff: T,
    pub pareto_dominates: bool,
    /// Number of grid half-widths that passed.
    pub passing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumReport<T> {
    pub lambda: T,
    pub e: T,
    pub c: T,
    pub a_star: T,
    pub veiled_payoff: T,
    pub pareto_dominates: bool,
    /// Only the degenerate pair `a = 0` passed the check.
    pub degenerate_only: bool,
    /// Number of grid half-widths that passed.
    pub passing: usize,
    /// The point `e` earns the interval payoff against the equilibrium interval.
    pub point_response: bool,
    pub grid_step: T,
    pub full_extrema: ConventionResult<T>,
}

/// `{0, step, 2 step, ...}` up to `max`.
pub fn half_width_grid<T: Field>(step: T, max: T) -> Vec<T> {
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let a = step * T::lit(i as f64);
        if a > max {
            break;
        }
        out.push(a);
        i += 1;
    }
    out
}

fn scan<T: Field>(
    game: &BoSGame<T>,
    grid: &[T],
    delta: T,
    convention: CornerConvention,
) -> (T, usize) {
    let mut best = T::zero();
    let mut passing = 0;
    for &a in grid {
        if symmetric_best_response_check(game, a, delta, convention).is_best_response {
            passing += 1;
            if a > best {
                best = a;
            }
        }
    }
    (best, passing)
}

/// Scans symmetric pairs on the half-width grid and reports the widest one
/// that is a setwise best response, under both corner conventions.
pub fn find_veiled_equilibrium<T: Field>(game: &BoSGame<T>, grid_step: T) -> Result<EquilibriumReport<T>> {
    let max = game.max_half_width();
    if !(grid_step > T::zero() && grid_step <= max) {
        return Err(Error::Config(format!(
            "grid step {grid_step:?} must lie in (0, {max:?}]"
        )));
    }
    let (e, c) = mixed_equilibrium(game);
    let grid = half_width_grid(grid_step, max);
    let delta = grid_step / T::lit(10.0);

    let (a_star, passing) = scan(game, &grid, delta, CornerConvention::Designated);
    let veiled_payoff = veiled_aggregate_payoff(game, a_star)?;
    let (s, _) = IntervalStrategy::symmetric_clamped(e, a_star);
    let point = IntervalStrategy { low: e, high: e };
    let point_value = interval_aggregate(game, &point, &s);
    let point_response = (point_value - veiled_payoff).abs_val() <= T::lit(POINT_RESPONSE_TOL);

    let (full_a, full_passing) = scan(game, &grid, delta, CornerConvention::FullExtrema);
    let (fs, _) = IntervalStrategy::symmetric_clamped(e, full_a);
    let full_payoff = full_aggregate(game, &fs, &fs);

    Ok(EquilibriumReport {
        lambda: game.lambda,
        e,
        c,
        a_star,
        veiled_payoff,
        pareto_dominates: a_star > T::zero() && veiled_payoff > c,
        degenerate_only: a_star == T::zero(),
        passing,
        point_response,
        grid_step,
        full_extrema: ConventionResult {
            a_star: full_a,
            veiled_payoff: full_payoff,
            pareto_dominates: full_payoff > c,
            passing: full_passing,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub a: T,
    pub veiled_payoff: T,
    pub closed_form: T,
    pub designated_min_corner: T,
    pub designated_max_corner: T,
    pub full_min: T,
    pub full_max: T,
}

/// Both corner conventions along the half-width grid.
pub fn sweep<T: Field>(game: &BoSGame<T>, grid_step: T) -> Result<Vec<SweepRow<T>>> {
    if !(grid_step > T::zero()) {
        return Err(Error::Config(format!("grid step {grid_step:?} must be positive")));
    }
    let (e, _) = mixed_equilibrium(game);
    half_width_grid(grid_step, game.max_half_width())
        .into_iter()
        .map(|a| {
            let (lo, hi) = designated_corner_pair(game, a)?;
            let s = IntervalStrategy { low: e - a, high: e + a };
            let full = corner_extrema_full(game, &s, &s);
            Ok(SweepRow {
                a,
                veiled_payoff: half::<T>() * (lo + hi),
                closed_form: closed_form_payoff(game, a),
                designated_min_corner: lo,
                designated_max_corner: hi,
                full_min: full.min,
                full_max: full.max,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(n, d)
    }

    fn g(l: f64) -> BoSGame<f64> {
        BoSGame::new(l).unwrap()
    }

    #[test]
    fn payoff_examples() {
        let game = g(0.5);
        assert_eq!(payoff_row(&game, 1.0, 0.0), 1.0);
        assert_eq!(payoff_row(&game, 0.0, 1.0), 0.5);
        assert_eq!(payoff_row(&game, 1.0, 1.0), 0.0);
        assert!(BoSGame::new(1.0).is_err());
        assert!(BoSGame::new(0.0).is_err());
    }

    #[test]
    fn equilibrium_exact() {
        let game = BoSGame::new(q(1, 2)).unwrap();
        assert_eq!(mixed_equilibrium(&game), (q(2, 3), q(1, 3)));
        let game = BoSGame::new(q(1, 4)).unwrap();
        assert_eq!(mixed_equilibrium(&game), (q(4, 5), q(1, 5)));
        let (e, c) = mixed_equilibrium(&game);
        for p in [q(0, 1), q(1, 2), q(1, 1)] {
            assert_eq!(payoff_row(&game, p, e), c);
        }
    }

    #[test]
    fn near_symmetric_limit() {
        let (e, c) = mixed_equilibrium(&g(0.999_999));
        assert!((e - 0.5).abs() < 1e-6 && (c - 0.5).abs() < 1e-6);
    }

    #[test]
    fn full_corners_exact() {
        let game = BoSGame::new(q(1, 2)).unwrap();
        let (e, c) = mixed_equilibrium(&game);
        let a = q(1, 5);
        let s = IntervalStrategy::new(e - a, e + a).unwrap();
        let ex = corner_extrema_full(&game, &s, &s);
        assert_eq!(ex.min, q(13, 75));
        assert_eq!(ex.max, q(37, 75));
        assert_eq!(ex.argmin, (e + a, e + a));
        assert_eq!(ex.argmax, (e + a, e - a));
        assert_eq!((ex.min + ex.max) / q(2, 1), c);

        let pt = IntervalStrategy::point(e).unwrap();
        let ex = corner_extrema_full(&game, &pt, &pt);
        assert_eq!((ex.min, ex.max), (c, c));

        let whole = IntervalStrategy::new(q(0, 1), q(1, 1)).unwrap();
        let zero = IntervalStrategy::point(q(0, 1)).unwrap();
        let ex = corner_extrema_full(&game, &whole, &zero);
        assert_eq!((ex.min, ex.max), (q(0, 1), q(1, 1)));
    }

    #[test]
    fn designated_corners_exact() {
        let game = BoSGame::new(q(1, 2)).unwrap();
        let (_, c) = mixed_equilibrium(&game);
        assert_eq!(designated_corner_pair(&game, q(0, 1)).unwrap(), (c, c));
        let (lo, hi) = designated_corner_pair(&game, q(1, 5)).unwrap();
        assert_eq!((lo, hi), (q(22, 75), q(37, 75)));
        assert_eq!(lo + hi, q(59, 75));
        assert_eq!(veiled_aggregate_payoff(&game, q(1, 5)).unwrap(), q(59, 150));
        assert_eq!(veiled_aggregate_payoff(&game, q(1, 5)).unwrap(), closed_form_payoff(&game, q(1, 5)));
        assert!(designated_corner_pair(&game, q(1, 2)).is_err());
        assert!(designated_corner_pair(&game, q(-1, 10)).is_err());
    }

    #[test]
    fn closed_form_identity_exact() {
        for lambda in [q(1, 4), q(1, 2), q(3, 4)] {
            let game = BoSGame::new(lambda).unwrap();
            let (_, c) = mixed_equilibrium(&game);
            for a in half_width_grid(q(1, 20), game.max_half_width()) {
                let v = veiled_aggregate_payoff(&game, a).unwrap();
                assert_eq!(v, closed_form_payoff(&game, a));
                if a > q(0, 1) {
                    assert!(v > c);
                }
            }
        }
    }

    #[test]
    fn point_opponent_makes_everything_a_best_response() {
        let game = g(0.5);
        let (e, _) = mixed_equilibrium(&game);
        let b = IntervalStrategy::point(e).unwrap();
        for &(lo, hi) in &[(0.1, 0.9), (0.5, 0.5), (0.0, 1.0)] {
            let a = IntervalStrategy::new(lo, hi).unwrap();
            assert!(setwise_best_response_check(&game, &a, &b, 1e-4).is_best_response);
        }
    }

    #[test]
    fn infeasible_pair_reports_boundary() {
        let game = g(0.5);
        let r = symmetric_best_response_check(&game, 0.4, 1e-4, CornerConvention::Designated);
        assert_eq!(r, BestResponseCheck { is_best_response: false, boundary: true });
    }

    #[test]
    fn designated_corners_reward_widening() {
        // for a > 0 raising A_hi gains (1 + lambda) a / 2 per unit
        let game = g(0.5);
        let r = symmetric_best_response_check(&game, 0.1, 1e-4, CornerConvention::Designated);
        assert!(!r.is_best_response && !r.boundary);
        let r = symmetric_best_response_check(&game, 0.1, 1e-4, CornerConvention::FullExtrema);
        assert!(r.is_best_response);
    }

    #[test]
    fn equilibrium_search_f64() {
        let game = g(0.5);
        let rep = find_veiled_equilibrium(&game, 1e-3).unwrap();
        assert!((rep.e - 2.0 / 3.0).abs() < 1e-12);
        assert!((rep.c - 1.0 / 3.0).abs() < 1e-12);
        assert!((rep.veiled_payoff - closed_form_payoff(&game, rep.a_star)).abs() < 1e-12);
        assert_eq!(rep.pareto_dominates, rep.a_star > 0.0);
        assert!(rep.point_response);
        assert!(rep.full_extrema.a_star > 0.3);
        assert!((rep.full_extrema.veiled_payoff - rep.c).abs() < 1e-12);
        assert!(find_veiled_equilibrium(&game, 0.0).is_err());
        assert!(find_veiled_equilibrium(&game, 0.5).is_err());
    }

    #[test]
    fn equilibrium_search_exact() {
        let game = BoSGame::new(q(1, 2)).unwrap();
        let rep = find_veiled_equilibrium(&game, q(1, 100)).unwrap();
        assert_eq!(rep.a_star, q(0, 1));
        assert!(rep.degenerate_only && rep.point_response);
        assert_eq!(rep.full_extrema.a_star, q(33, 100));
        assert_eq!(rep.full_extrema.passing, 34);
    }

    #[test]
    fn sweep_rows() {
        let game = g(0.5);
        let rows = sweep(&game, 0.05).unwrap();
        assert_eq!(rows.len(), 7);
        assert!((rows[0].veiled_payoff - 1.0 / 3.0).abs() < 1e-12);
        for r in &rows {
            assert!((r.veiled_payoff - r.closed_form).abs() < 1e-12);
            assert!(r.full_min <= r.designated_min_corner + 1e-12);
            assert!(((r.full_min + r.full_max) / 2.0 - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn affine_in_each_argument(l in 0.01f64..0.99, x in 0.0f64..1.0, y in 0.0f64..1.0, t in 0.0f64..1.0) {
                let game = g(l);
                let mid = t * x + (1.0 - t) * y;
                for fixed in [0.0, 0.3, 0.77, 1.0] {
                    let lhs = payoff_row(&game, mid, fixed);
                    let rhs = t * payoff_row(&game, x, fixed) + (1.0 - t) * payoff_row(&game, y, fixed);
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                    let lhs = payoff_row(&game, fixed, mid);
                    let rhs = t * payoff_row(&game, fixed, x) + (1.0 - t) * payoff_row(&game, fixed, y);
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                }
            }

            #[test]
            fn clamped_intervals_stay_in_unit(center in 0.0f64..1.0, a in 0.0f64..1.0) {
                let (s, _) = IntervalStrategy::symmetric_clamped(center, a);
                prop_assert!(0.0 <= s.low && s.low <= s.high && s.high <= 1.0);
            }
        }
    }
}
