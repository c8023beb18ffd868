//! Best/worst-case aggregators over the agent type space.
//!
//! A type is a pair `(alpha, rho)` and values a prospect with best case `w`
//! and worst case `b` as the CES mean
//!
//! ```text
//! U(w, b) = [alpha * w^rho + (1 - alpha) * b^rho]^(1/rho)
//! ```
//!
//! with the Cobb-Douglas limit `w^alpha * b^(1-alpha)` at `rho -> 0` and
//! `min(w, b) = b` at `rho = -inf`. `alpha` weights the best case, so maxmin
//! is reached either by `alpha = 0` or by `rho = -inf`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// `|rho|` below this switches to the closed-form Cobb-Douglas limit.
pub const RHO_ZERO_SWITCH: f64 = 1e-9;
/// Tolerance of the additivity test.
pub const ADDITIVITY_TOL: f64 = 1e-12;
/// Tie tolerance in the reasonable-action argmax.
pub const ARGMAX_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatorParams<T> {
    pub alpha: T,
    /// Finite, or `-inf` for the Leontief limit.
    pub rho: T,
}

impl<T: Real> AggregatorParams<T> {
    pub fn new(alpha: T, rho: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::Config(format!("alpha = {alpha} must lie in [0, 1]")));
        }
        if rho.is_nan() || rho == T::infinity() {
            return Err(Error::Config(format!("rho = {rho} must be finite or -inf")));
        }
        Ok(Self { alpha, rho })
    }

    pub fn leontief(alpha: T) -> Result<Self> {
        Self::new(alpha, T::neg_infinity())
    }

    /// The ambiguity-neutral type `(1/2, 1)`.
    pub fn neutral() -> Self {
        Self {
            alpha: T::lit(0.5),
            rho: T::one(),
        }
    }

    pub fn is_neutral(&self) -> bool {
        let tol = T::lit(1e-12);
        (self.alpha - T::lit(0.5)).abs() <= tol && (self.rho - T::one()).abs() <= tol
    }

    fn is_cobb_douglas(&self) -> bool {
        self.rho.abs() < T::lit(RHO_ZERO_SWITCH)
    }

    fn integer_rho(&self) -> bool {
        self.rho.is_finite() && self.rho.fract() == T::zero()
    }
}

/// Raw CES mean with `x` in the `alpha` slot, no ordering required.
/// Arguments must be nonnegative.
fn ces<T: Real>(p: &AggregatorParams<T>, x: T, y: T) -> T {
    let (a, one_minus_a) = (p.alpha, T::one() - p.alpha);
    if p.rho == T::neg_infinity() {
        return x.min(y);
    }
    if p.is_cobb_douglas() {
        return x.powf(a) * y.powf(one_minus_a);
    }
    if p.rho < T::zero() {
        // a zero argument with positive weight drives the mean to zero
        if (x == T::zero() && a > T::zero()) || (y == T::zero() && one_minus_a > T::zero()) {
            return T::zero();
        }
        if a == T::zero() {
            return y;
        }
        if one_minus_a == T::zero() {
            return x;
        }
    }
    // factor out the dominant argument so large |rho| cannot overflow
    let m = if p.rho > T::zero() { x.max(y) } else { x.min(y) };
    if m == T::zero() {
        return T::zero();
    }
    m * (a * (x / m).powf(p.rho) + one_minus_a * (y / m).powf(p.rho)).powf(p.rho.recip())
}

fn int_pow<T: Real>(x: T, n: T) -> T {
    x.powi(n.to_i32().expect("integer exponent in i32 range"))
}

/// Aggregated value of a prospect with best case `w >= b`.
pub fn oheu_value<T: Real>(params: &AggregatorParams<T>, w: T, b: T) -> Result<T> {
    if w.is_nan() || b.is_nan() {
        return domain("oheu_value: NaN payoff");
    }
    if w < b {
        return domain(format!("oheu_value: best case {w} is below worst case {b}"));
    }
    if params.rho == T::neg_infinity() {
        return Ok(b);
    }
    let negative = b < T::zero();
    if params.is_cobb_douglas() {
        if negative {
            return domain("oheu_value: Cobb-Douglas limit needs nonnegative payoffs");
        }
        return Ok(ces(params, w, b));
    }
    if w == b {
        return Ok(w);
    }
    if !negative {
        return Ok(ces(params, w, b));
    }
    if params.rho < T::zero() {
        return domain("oheu_value: rho <= 0 needs nonnegative payoffs");
    }
    if !params.integer_rho() {
        return domain(format!(
            "oheu_value: negative payoff with non-integer rho = {}",
            params.rho
        ));
    }
    let s = params.alpha * int_pow(w, params.rho)
        + (T::one() - params.alpha) * int_pow(b, params.rho);
    let root = params.rho.recip();
    if s >= T::zero() {
        Ok(s.powf(root))
    } else {
        // only odd rho can get here; take the real root
        Ok(-(-s).powf(root))
    }
}

/// Aggregator extended to prospects whose worst case may be negative.
///
/// Nonnegative prospects use [`oheu_value`] unchanged. Otherwise the prospect
/// is anchored at its worst case, `b + U(w - b, 0)`, which agrees with the
/// plain aggregator at `b = 0`, is monotone in both arguments, idempotent, and
/// defined for every type.
pub fn signed_value<T: Real>(params: &AggregatorParams<T>, w: T, b: T) -> Result<T> {
    if b >= T::zero() {
        return oheu_value(params, w, b);
    }
    if w < b {
        return domain(format!("signed_value: best case {w} is below worst case {b}"));
    }
    Ok(b + oheu_value(params, w - b, T::zero())?)
}

/// Residual `U(1,1) - U(1,0) - U(0,1)` on the complementary payoffs
/// `X = (1,0)`, `Y = (0,1)`, each fed to the aggregator positionally.
pub fn additivity_residual<T: Real>(params: &AggregatorParams<T>) -> T {
    let (one, zero) = (T::one(), T::zero());
    ces(params, one, one) - ces(params, one, zero) - ces(params, zero, one)
}

pub fn is_linear_additive<T: Real>(params: &AggregatorParams<T>) -> bool {
    additivity_residual(params).abs() <= T::lit(ADDITIVITY_TOL)
}

/// Interval belief `p_lower <= p(E) <= p_upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefInterval<T> {
    pub p_lower: T,
    pub p_upper: T,
}

impl<T: Real> BeliefInterval<T> {
    pub fn new(p_lower: T, p_upper: T) -> Result<Self> {
        if !(p_lower >= T::zero() && p_upper <= T::one() && p_lower <= p_upper) {
            return Err(Error::Config(format!(
                "belief interval [{p_lower}, {p_upper}] must satisfy 0 <= lower <= upper <= 1"
            )));
        }
        Ok(Self { p_lower, p_upper })
    }

    pub fn width(&self) -> T {
        self.p_upper - self.p_lower
    }

    /// `{lower, lower + step, ...}` plus `upper` itself.
    pub fn grid(&self, step: T) -> Result<Vec<T>> {
        if self.width() == T::zero() {
            return Ok(vec![self.p_lower]);
        }
        if !(step > T::zero() && step <= self.width()) {
            return domain(format!(
                "grid step {step} must lie in (0, {}]",
                self.width()
            ));
        }
        let n = (self.width() / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        let mut grid: Vec<T> = (0..=n)
            .map(|i| self.p_lower + step * T::lit(i as f64))
            .filter(|&p| p < self.p_upper)
            .collect();
        grid.push(self.p_upper);
        Ok(grid)
    }
}

/// Payoffs of an action when `E` happens and when it does not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile<T> {
    pub if_event: T,
    pub if_not: T,
}

impl<T: Real> ActionProfile<T> {
    pub fn new(if_event: T, if_not: T) -> Self {
        Self { if_event, if_not }
    }

    pub fn expected(&self, p: T) -> T {
        p * self.if_event + (T::one() - p) * self.if_not
    }
}

/// Indices of the actions that are an argmax at some grid frequency of the
/// belief interval. A frequency stands in for a justifying sequence: the
/// non-ergodic stream sustains any frequency in the interval over arbitrarily
/// long stretches.
pub fn reasonable_action_set<T: Real>(
    actions: &[ActionProfile<T>],
    belief: &BeliefInterval<T>,
    grid_step: T,
) -> Result<Vec<usize>> {
    if actions.is_empty() {
        return domain("reasonable_action_set: no actions");
    }
    let tol = T::lit(ARGMAX_TIE_TOL);
    let mut reasonable = vec![false; actions.len()];
    for p in belief.grid(grid_step)? {
        let values: Vec<T> = actions.iter().map(|a| a.expected(p)).collect();
        let best = values.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        for (flag, v) in reasonable.iter_mut().zip(&values) {
            if *v >= best - tol {
                *flag = true;
            }
        }
    }
    Ok(reasonable
        .iter()
        .enumerate()
        .filter_map(|(i, &r)| r.then_some(i))
        .collect())
}
