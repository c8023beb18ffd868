//! Bit and real generators.
//!
//! [`MachineOne`] thresholds i.i.d. uniforms against a fixed measurable set,
//! so its running frequency converges. [`DrawStream`] is the non-ergodic
//! generator: a Cauchy walk whose scale depends on the state two steps back,
//!
//! ```text
//! Z0 ~ U[0,1]
//! Z1 ~ C[Z0, 1]
//! Zn ~ C[Z(n-1), phi*|Z(n-2)| + psi]      n >= 2
//! ```
//!
//! Reals are mapped to bits and intervals through the arctan CDF at the
//! configured `(x0, gamma)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Lower clamp on the Cauchy scale of the iterative step.
pub const SCALE_EPSILON: f64 = 1e-12;

/// Inverse-CDF Cauchy sample: `location + scale * tan(pi * (u - 1/2))`.
pub fn cauchy_sample<T: Real>(location: T, scale: T, u: T) -> Result<T> {
    if !(u > T::zero() && u < T::one()) {
        return domain(format!("cauchy_sample: u = {u} must lie in (0, 1)"));
    }
    if !(scale > T::zero()) {
        return domain(format!("cauchy_sample: scale = {scale} must be positive"));
    }
    let half = T::lit(0.5);
    Ok(location + scale * (T::PI() * (u - half)).tan())
}

/// Cauchy CDF `1/pi * arctan((x - x0) / gamma) + 1/2`.
pub fn cauchy_cdf<T: Real>(x: T, location: T, scale: T) -> T {
    ((x - location) / scale).atan() / T::PI() + T::lit(0.5)
}

/// Uniform on the open interval (0, 1) built from the top 53 bits.
fn open_uniform<T: Real>(rng: &mut ChaCha8Rng) -> T {
    let bits = rng.next_u64() >> 11;
    let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    T::lit(u)
}

/// Closed subinterval `[lo, hi]` of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subinterval<T> {
    pub lo: T,
    pub hi: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineOneConfig<T> {
    subset: Vec<Subinterval<T>>,
    pub seed: u64,
}

impl<T: Real> MachineOneConfig<T> {
    /// Validates that the pieces are inside [0,1] and pairwise disjoint.
    pub fn new(mut subset: Vec<Subinterval<T>>, seed: u64) -> Result<Self> {
        for s in &subset {
            if !(s.lo >= T::zero() && s.hi <= T::one() && s.lo <= s.hi) {
                return Err(Error::Config(format!(
                    "subinterval [{}, {}] is not inside [0, 1]",
                    s.lo, s.hi
                )));
            }
        }
        subset.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite bounds"));
        for pair in subset.windows(2) {
            // touching endpoints are a measure-zero overlap; allow them
            if pair[1].lo < pair[0].hi {
                return Err(Error::Config(format!(
                    "subintervals [{}, {}] and [{}, {}] overlap",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(Self { subset, seed })
    }

    /// The single-interval set `[0, p]`.
    pub fn with_measure(p: T, seed: u64) -> Result<Self> {
        Self::new(vec![Subinterval { lo: T::zero(), hi: p }], seed)
    }

    pub fn subset(&self) -> &[Subinterval<T>] {
        &self.subset
    }

    /// Lebesgue measure of the set.
    pub fn measure(&self) -> T {
        self.subset
            .iter()
            .fold(T::zero(), |acc, s| acc + (s.hi - s.lo))
    }

    pub fn contains(&self, u: T) -> bool {
        self.subset.iter().any(|s| u >= s.lo && u <= s.hi)
    }
}

/// Measurable generator: `x_n = 1` iff a fresh uniform lands in the set.
#[derive(Debug, Clone)]
pub struct MachineOne<T> {
    config: MachineOneConfig<T>,
    rng: ChaCha8Rng,
    draw_count: u64,
}

impl<T: Real> MachineOne<T> {
    pub fn new(config: MachineOneConfig<T>) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self {
            config,
            rng,
            draw_count: 0,
        }
    }

    pub fn config(&self) -> &MachineOneConfig<T> {
        &self.config
    }

    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    /// Returns the uniform draw together with its membership bit.
    pub fn next_sample(&mut self) -> (T, bool) {
        let u: T = open_uniform(&mut self.rng);
        self.draw_count += 1;
        (u, self.config.contains(u))
    }

    pub fn next_bit(&mut self) -> bool {
        self.next_sample().1
    }
}

/// Parameters of the non-ergodic generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineTwoConfig<T> {
    pub phi: T,
    pub psi: T,
    pub location_x0: T,
    pub scale_gamma: T,
    pub seed: u64,
    pub fee_per_draw: T,
    /// Mix fresh OS entropy into the generator every `k` draws. Breaks
    /// reproducibility, so it is off unless asked for.
    pub reseed_every: Option<u64>,
}

impl<T: Real> Default for MachineTwoConfig<T> {
    fn default() -> Self {
        Self {
            phi: T::zero(),
            psi: T::lit(0.5),
            location_x0: T::zero(),
            scale_gamma: T::one(),
            seed: 42,
            fee_per_draw: T::zero(),
            reseed_every: None,
        }
    }
}

impl<T: Real> MachineTwoConfig<T> {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi >= T::zero() && self.phi <= T::one()) {
            return Err(Error::Config(format!("phi = {} must lie in [0, 1]", self.phi)));
        }
        if !(self.psi > T::zero() && self.psi <= T::one()) {
            return Err(Error::Config(format!("psi = {} must lie in (0, 1]", self.psi)));
        }
        if !(self.scale_gamma > T::zero()) {
            return Err(Error::Config(format!(
                "gamma = {} must be positive",
                self.scale_gamma
            )));
        }
        if !self.location_x0.is_finite() {
            return Err(Error::Config("x0 must be finite".into()));
        }
        if !(self.fee_per_draw >= T::zero()) {
            return Err(Error::Config(format!(
                "fee_per_draw = {} must be nonnegative",
                self.fee_per_draw
            )));
        }
        if self.reseed_every == Some(0) {
            return Err(Error::Config("reseed_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// One emitted value of the non-ergodic stream with its CDF image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw<T> {
    pub z: T,
    pub u: T,
}

/// Mutable state of the non-ergodic generator. Single owner; not `Sync`-safe
/// to share for mutation, but independent seeds can run in parallel.
#[derive(Debug, Clone)]
pub struct DrawStream<T> {
    config: MachineTwoConfig<T>,
    z_prev: T,
    z_prev2: T,
    draw_count: u64,
    fees_accrued: T,
    rng: ChaCha8Rng,
}

impl<T: Real> DrawStream<T> {
    pub fn new(config: MachineTwoConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            z_prev: T::zero(),
            z_prev2: T::zero(),
            draw_count: 0,
            fees_accrued: T::zero(),
        })
    }

    pub fn config(&self) -> &MachineTwoConfig<T> {
        &self.config
    }

    pub fn draw_count(&self) -> u64 {
        self.draw_count
    }

    pub fn fees_accrued(&self) -> T {
        self.fees_accrued
    }

    /// `(Z_{n-1}, Z_{n-2})` after the last draw.
    pub fn state(&self) -> (T, T) {
        (self.z_prev, self.z_prev2)
    }

    /// Largest magnitude the state and scale are allowed to reach.
    fn ceiling() -> T {
        T::max_value().sqrt()
    }

    /// Scale the next iterative step would use.
    pub fn effective_scale(&self) -> T {
        let raw = self.config.phi * self.z_prev2.abs() + self.config.psi;
        raw.max(T::lit(SCALE_EPSILON)).min(Self::ceiling())
    }

    /// Arctan CDF at the configured `(x0, gamma)`.
    pub fn cdf(&self, z: T) -> T {
        cauchy_cdf(z, self.config.location_x0, self.config.scale_gamma)
    }

    fn maybe_reseed(&mut self) {
        if let Some(k) = self.config.reseed_every {
            if self.draw_count > 0 && self.draw_count.is_multiple_of(k) {
                let mut fresh = [0u8; 32];
                rand::rngs::OsRng.fill_bytes(&mut fresh);
                let mut seed = [0u8; 32];
                self.rng.fill_bytes(&mut seed);
                for (s, f) in seed.iter_mut().zip(fresh) {
                    *s ^= f;
                }
                self.rng = ChaCha8Rng::from_seed(seed);
            }
        }
    }

    /// Next `Z_n`. The first call yields `Z0`, the second `Z1`.
    pub fn next_raw(&mut self) -> T {
        self.maybe_reseed();
        let u: T = open_uniform(&mut self.rng);
        let z = match self.draw_count {
            0 => u,
            1 => cauchy_sample(self.z_prev, T::one(), u).expect("valid by construction"),
            _ => {
                let scale = self.effective_scale();
                cauchy_sample(self.z_prev, scale, u).expect("valid by construction")
            }
        };
        let cap = Self::ceiling();
        let z = z.max(-cap).min(cap);
        self.z_prev2 = self.z_prev;
        self.z_prev = z;
        self.draw_count += 1;
        self.fees_accrued = self.config.fee_per_draw * T::lit(self.draw_count as f64);
        z
    }

    pub fn next_draw(&mut self) -> Draw<T> {
        let z = self.next_raw();
        Draw { z, u: self.cdf(z) }
    }

    /// Affine image `lo + (hi - lo) * F(Z_n)` of the next draw.
    pub fn next_in_interval(&mut self, lo: T, hi: T) -> Result<T> {
        if !(lo < hi) {
            return domain(format!("interval [{lo}, {hi}] must have lo < hi"));
        }
        let z = self.next_raw();
        Ok(map_to_interval(self.cdf(z), lo, hi))
    }

    /// `true` iff `F(Z_n) >= threshold`.
    pub fn next_bit(&mut self, threshold: T) -> Result<bool> {
        check_threshold(threshold)?;
        let z = self.next_raw();
        Ok(self.cdf(z) >= threshold)
    }
}

pub(crate) fn check_threshold<T: Real>(threshold: T) -> Result<()> {
    if threshold > T::zero() && threshold < T::one() {
        Ok(())
    } else {
        domain(format!("threshold = {threshold} must lie in (0, 1)"))
    }
}

/// `lo + (hi - lo) * f`, pulled strictly inside `(lo, hi)` where rounding
/// would otherwise land on an endpoint.
pub fn map_to_interval<T: Real>(f: T, lo: T, hi: T) -> T {
    let x = lo + (hi - lo) * f;
    if x <= lo {
        next_up(lo).min(hi)
    } else if x >= hi {
        next_down(hi).max(lo)
    } else {
        x
    }
}

fn next_up<T: Real>(x: T) -> T {
    let step = x.abs().max(T::min_positive_value()) * T::epsilon();
    x + step
}

fn next_down<T: Real>(x: T) -> T {
    let step = x.abs().max(T::min_positive_value()) * T::epsilon();
    x - step
}

/// Bit image of a single real, used when replaying dumped streams.
pub fn bit_of<T: Real>(z: T, location: T, scale: T, threshold: T) -> Result<bool> {
    check_threshold(threshold)?;
    Ok(cauchy_cdf(z, location, scale) >= threshold)
}
