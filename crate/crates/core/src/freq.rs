//! Finite-sample lower/upper frequencies of 0-1 streams.
//!
//! The lower and upper limiting frequencies over all shifted subsequences are
//! not computable from a finite sample. They are approximated by the minimum
//! and maximum mean over contiguous windows of the configured lengths, stepped
//! by `stride`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

pub const DEFAULT_MIN_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub min_window: usize,
    pub window_lengths: Vec<usize>,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(min_window: usize, window_lengths: Vec<usize>, stride: usize) -> Result<Self> {
        let spec = Self {
            min_window,
            window_lengths,
            stride,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One window length, stride a tenth of it.
    pub fn single(window: usize) -> Result<Self> {
        Self::new(
            DEFAULT_MIN_WINDOW.min(window),
            vec![window],
            (window / 10).max(1),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_window == 0 {
            return Err(Error::Config("min_window must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.window_lengths.is_empty() {
            return Err(Error::Config("at least one window length is required".into()));
        }
        if let Some(w) = self.window_lengths.iter().find(|&&w| w < self.min_window) {
            return Err(Error::Config(format!(
                "window length {w} is below min_window {}",
                self.min_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBounds<T> {
    pub lower: T,
    pub upper: T,
    pub spec: WindowSpec,
    pub sample_size: usize,
}

impl<T: Real> FrequencyBounds<T> {
    pub fn gap(&self) -> T {
        self.upper - self.lower
    }

    /// Bounds of the stream with 0 and 1 swapped.
    pub fn relabeled(&self) -> Self {
        Self {
            lower: T::one() - self.upper,
            upper: T::one() - self.lower,
            spec: self.spec.clone(),
            sample_size: self.sample_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Convergent,
    Ambiguous,
}

fn prefix_sums(bits: &[bool]) -> Vec<u64> {
    let mut acc = Vec::with_capacity(bits.len() + 1);
    acc.push(0);
    let mut total = 0u64;
    for &b in bits {
        total += b as u64;
        acc.push(total);
    }
    acc
}

fn window_means<T: Real>(
    prefix: &[u64],
    window: usize,
    stride: usize,
) -> impl Iterator<Item = (usize, T)> + '_ {
    let n = prefix.len() - 1;
    let denom = T::lit(window as f64);
    (0..=n - window)
        .step_by(stride)
        .map(move |start| {
            let ones = prefix[start + window] - prefix[start];
            (start, T::lit(ones as f64) / denom)
        })
}

/// Minimum and maximum window mean across every configured window length.
pub fn empirical_bounds<T: Real>(bits: &[bool], spec: &WindowSpec) -> Result<FrequencyBounds<T>> {
    spec.validate()?;
    let needed = 2 * spec.min_window;
    if bits.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: bits.len(),
        });
    }
    if let Some(&w) = spec.window_lengths.iter().find(|&&w| w > bits.len()) {
        return Err(Error::InsufficientData {
            needed: w,
            got: bits.len(),
        });
    }
    let prefix = prefix_sums(bits);
    let mut lower = T::one();
    let mut upper = T::zero();
    for &w in &spec.window_lengths {
        for (_, mean) in window_means::<T>(&prefix, w, spec.stride) {
            lower = lower.min(mean);
            upper = upper.max(mean);
        }
    }
    Ok(FrequencyBounds {
        lower,
        upper,
        spec: spec.clone(),
        sample_size: bits.len(),
    })
}

/// Running window means, one per stride position, for plotting.
pub fn gap_trace<T: Real>(bits: &[bool], window: usize, stride: usize) -> Result<Vec<(usize, T)>> {
    if window == 0 || stride == 0 {
        return domain("window and stride must be positive");
    }
    if window > bits.len() {
        return Err(Error::InsufficientData {
            needed: window,
            got: bits.len(),
        });
    }
    let prefix = prefix_sums(bits);
    Ok(window_means(&prefix, window, stride).collect())
}

/// `Ambiguous` iff `upper - lower > epsilon`; a gap equal to epsilon is convergent.
pub fn classify_stream<T: Real>(bounds: &FrequencyBounds<T>, epsilon: T) -> Classification {
    if bounds.gap() > epsilon {
        Classification::Ambiguous
    } else {
        Classification::Convergent
    }
}

/// Odds `p / (1 - p)`; `+inf` at `p = 1`.
pub fn odds_from_freq<T: Real>(p: T) -> Result<T> {
    if !(p >= T::zero() && p <= T::one()) {
        return domain(format!("frequency {p} outside [0, 1]"));
    }
    if p == T::one() {
        return Ok(T::infinity());
    }
    Ok(p / (T::one() - p))
}

/// Lower and upper odds implied by a frequency interval.
pub fn odds_interval<T: Real>(bounds: &FrequencyBounds<T>) -> Result<(T, T)> {
    Ok((odds_from_freq(bounds.lower)?, odds_from_freq(bounds.upper)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bounds(bits: &[bool], window: usize) -> FrequencyBounds<f64> {
        let spec = WindowSpec::new(window.min(DEFAULT_MIN_WINDOW), vec![window], 1).unwrap();
        empirical_bounds(bits, &spec).unwrap()
    }

    #[test]
    fn constant_ones() {
        let bits = vec![true; 500];
        let b = bounds(&bits, 100);
        assert_eq!((b.lower, b.upper), (1.0, 1.0));
    }

    #[test]
    fn alternation_with_window_two() {
        let bits: Vec<bool> = (0..400).map(|i| i % 2 == 1).collect();
        let spec = WindowSpec::new(2, vec![2], 1).unwrap();
        let b: FrequencyBounds<f64> = empirical_bounds(&bits, &spec).unwrap();
        assert_eq!((b.lower, b.upper), (0.5, 0.5));
    }

    #[test]
    fn blocks_reach_both_extremes() {
        let mut bits = Vec::new();
        for _ in 0..10 {
            bits.extend(std::iter::repeat_n(false, 1000));
            bits.extend(std::iter::repeat_n(true, 1000));
        }
        let b = bounds(&bits, 100);
        assert_eq!((b.lower, b.upper), (0.0, 1.0));
    }

    #[test]
    fn short_sequence_is_rejected() {
        let spec = WindowSpec::new(100, vec![100], 10).unwrap();
        let err = empirical_bounds::<f64>(&[true; 150], &spec).unwrap_err();
        assert_eq!(err, Error::InsufficientData { needed: 200, got: 150 });
    }

    #[test]
    fn window_spec_validation() {
        assert!(WindowSpec::new(100, vec![50], 1).is_err());
        assert!(WindowSpec::new(100, vec![100], 0).is_err());
        assert!(WindowSpec::new(0, vec![100], 1).is_err());
        assert!(WindowSpec::new(10, vec![], 1).is_err());
    }

    #[test]
    fn gap_trace_flat_for_constant_stream() {
        let trace: Vec<(usize, f64)> = gap_trace(&[true; 1000], 100, 50).unwrap();
        assert_eq!(trace.len(), 19);
        assert!(trace.iter().all(|&(_, m)| m == 1.0));
        assert!(gap_trace::<f64>(&[true; 10], 11, 1).is_err());
    }

    #[test]
    fn classification_examples() {
        let mk = |lower, upper| FrequencyBounds {
            lower,
            upper,
            spec: WindowSpec::single(100).unwrap(),
            sample_size: 1000,
        };
        assert_eq!(classify_stream(&mk(0.29, 0.31), 0.1), Classification::Convergent);
        assert_eq!(classify_stream(&mk(0.05, 0.95), 0.1), Classification::Ambiguous);
        // exact tie at the threshold; use dyadic values so the gap is exact
        assert_eq!(classify_stream(&mk(0.25, 0.375), 0.125), Classification::Convergent);
    }

    #[test]
    fn odds_examples() {
        assert_eq!(odds_from_freq(0.0).unwrap(), 0.0);
        assert_eq!(odds_from_freq(0.5).unwrap(), 1.0);
        assert_eq!(odds_from_freq(0.75).unwrap(), 3.0);
        assert_eq!(odds_from_freq(1.0f64).unwrap(), f64::INFINITY);
        assert!(odds_from_freq(-0.1).is_err());
        assert!(odds_from_freq(1.1).is_err());
    }

    proptest! {
        #[test]
        fn odds_strictly_increasing(a in 0.0f64..0.999, b in 0.0f64..0.999) {
            prop_assume!(a < b);
            prop_assert!(odds_from_freq(a).unwrap() < odds_from_freq(b).unwrap());
        }

        #[test]
        fn refinement_is_monotone(
            bits in prop::collection::vec(any::<bool>(), 200..600),
            extra in 10usize..100,
        ) {
            let coarse = WindowSpec::new(10, vec![100], 7).unwrap();
            let fine = WindowSpec::new(10, vec![100, extra], 7).unwrap();
            let a: FrequencyBounds<f64> = empirical_bounds(&bits, &coarse).unwrap();
            let b: FrequencyBounds<f64> = empirical_bounds(&bits, &fine).unwrap();
            prop_assert!(b.lower <= a.lower);
            prop_assert!(b.upper >= a.upper);
        }

        #[test]
        fn relabeling_preserves_classification(
            bits in prop::collection::vec(any::<bool>(), 200..600),
            eps in 0.01f64..0.99,
        ) {
            let spec = WindowSpec::new(10, vec![50], 3).unwrap();
            let flipped: Vec<bool> = bits.iter().map(|b| !b).collect();
            let a: FrequencyBounds<f64> = empirical_bounds(&bits, &spec).unwrap();
            let b: FrequencyBounds<f64> = empirical_bounds(&flipped, &spec).unwrap();
            let r = a.relabeled();
            prop_assert!((r.lower - b.lower).abs() < 1e-12);
            prop_assert!((r.upper - b.upper).abs() < 1e-12);
            prop_assert_eq!(classify_stream(&a, eps), classify_stream(&b, eps));
        }
    }
}
