//! Saturated-contention attempt probabilities.
//!
//! For `n` saturated contenders with DCF binary exponential backoff the
//! long-run per-slot attempt probability `beta` solves the decoupled fixed
//! point
//!
//! ```text
//! gamma     = 1 - (1 - beta)^(n - 1)
//! beta      = sum_{i=0..K} gamma^i / sum_{i=0..K} gamma^i * b_i
//! b_i       = (min(2^i * cw_min, cw_max) - 1) / 2
//! ```

use thiserror::Error;

use crate::params::PhyMacParams;
use crate::scalar::{powu, Real};

const DAMPING: f64 = 0.5;
const START: f64 = 0.1;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaturationError {
    #[error("contender count must be at least 1")]
    NoContenders,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("fixed point did not converge after {iterations} iterations (last iterate {last})")]
    NoConvergence { iterations: usize, last: f64 },
}

/// Mean backoff (slots) per stage, `b_0 ..= b_K`.
fn mean_backoffs<T: Real>(p: &PhyMacParams<T>) -> Vec<T> {
    let cw_max = u64::from(p.cw_max());
    (0..=p.backoff_stages)
        .map(|i| {
            let cw = (u64::from(p.cw_min) << i).min(cw_max);
            T::lit((cw as f64 - 1.0) / 2.0)
        })
        .collect()
}

/// Attempt rate as a function of the conditional collision probability.
pub fn attempt_rate<T: Real>(gamma: T, p: &PhyMacParams<T>) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    let mut g = T::one();
    for b in mean_backoffs(p) {
        num += g;
        den += g * b;
        g *= gamma;
    }
    num / den
}

fn collision_prob<T: Real>(beta: T, n: usize) -> T {
    T::one() - powu(T::one() - beta, n - 1)
}

/// Solves for the attempt probability with `n` saturated contenders.
pub fn solve_attempt_prob<T: Real>(n: usize, p: &PhyMacParams<T>, tol: T) -> Result<T, SaturationError> {
    if n == 0 {
        return Err(SaturationError::NoContenders);
    }
    if !(tol > T::zero() && tol < T::one()) {
        return Err(SaturationError::BadTolerance);
    }
    let alpha = T::lit(DAMPING);
    let mut beta = T::lit(START);
    for _ in 0..MAX_ITERATIONS {
        let mapped = attempt_rate(collision_prob(beta, n), p);
        if (beta - mapped).abs() <= tol {
            return Ok(beta);
        }
        beta = (T::one() - alpha) * beta + alpha * mapped;
    }
    Err(SaturationError::NoConvergence {
        iterations: MAX_ITERATIONS,
        last: beta.to_f64().unwrap_or(f64::NAN),
    })
}

/// Attempt probabilities `beta[1..=n_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptProbTable<T> {
    betas: Vec<T>,
    pub cw_min: u32,
    pub backoff_stages: u32,
}

impl<T: Real> AttemptProbTable<T> {
    pub fn build(n_max: usize, p: &PhyMacParams<T>, tol: T) -> Result<Self, SaturationError> {
        if n_max == 0 {
            return Err(SaturationError::NoContenders);
        }
        let betas = (1..=n_max)
            .map(|n| solve_attempt_prob(n, p, tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            betas,
            cw_min: p.cw_min,
            backoff_stages: p.backoff_stages,
        })
    }

    /// Table from explicit values, `values[0]` being `beta_1`.
    pub fn from_values(values: Vec<T>) -> Self {
        Self {
            betas: values,
            cw_min: 0,
            backoff_stages: 0,
        }
    }

    /// `beta_n` for `n` contenders (1-based).
    pub fn beta(&self, n: usize) -> T {
        assert!(n >= 1 && n <= self.betas.len(), "no attempt probability for {n} contenders");
        self.betas[n - 1]
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.betas
    }
}

/// Default solver tolerance used by the scenario constructors.
pub fn default_tolerance<T: Real>() -> T {
    T::lit(1e-13).max(T::epsilon() * T::lit(16.0))
}

/// Convenience wrapper over [`AttemptProbTable::build`].
pub fn build_table<T: Real>(n_max: usize, p: &PhyMacParams<T>, tol: T) -> Result<AttemptProbTable<T>, SaturationError> {
    AttemptProbTable::build(n_max, p, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhyMacParams<f64> {
        PhyMacParams::default()
    }

    #[test]
    fn single_contender_closed_form() {
        let beta = solve_attempt_prob(1, &params(), 1e-14).unwrap();
        assert!((beta - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn zero_contenders_rejected() {
        assert_eq!(
            solve_attempt_prob(0, &params(), 1e-9),
            Err(SaturationError::NoContenders)
        );
    }

    #[test]
    fn bad_tolerance_rejected() {
        let err = build_table(3, &params(), 0.0).unwrap_err();
        assert_eq!(err.to_string(), "tolerance must be positive");
        assert!(build_table(3, &params(), 1.0).is_err());
    }

    #[test]
    fn residual_within_tolerance() {
        let p = params();
        for n in 1..=40 {
            let tol = 1e-12;
            let b = solve_attempt_prob(n, &p, tol).unwrap();
            let r = (b - attempt_rate(collision_prob(b, n), &p)).abs();
            assert!(r <= tol, "n={n} residual {r}");
        }
    }

    /// Undamped bisection on the monotone residual, used as an oracle.
    fn bisect(n: usize, p: &PhyMacParams<f64>) -> f64 {
        let f = |b: f64| b - attempt_rate(collision_prob(b, n), p);
        let (mut lo, mut hi) = (1e-9, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_bisection_oracle() {
        let p = params();
        for n in [2, 3, 5, 9, 17] {
            let b = solve_attempt_prob(n, &p, 1e-14).unwrap();
            assert!((b - bisect(n, &p)).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn two_contenders_attempt_less() {
        let t = build_table(2, &params(), 1e-12).unwrap();
        assert!(t.beta(2) < t.beta(1));
    }

    #[test]
    fn single_entry_table() {
        let t = build_table(1, &params(), 1e-12).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.beta(1) - 2.0 / 31.0).abs() < 1e-12);
    }

    #[test]
    fn table_is_monotone_up_to_64() {
        let t = build_table(64, &params(), 1e-12).unwrap();
        for n in 1..64 {
            assert!(t.beta(n + 1) <= t.beta(n), "n={n}");
            assert!(t.beta(n) > 0.0 && t.beta(n) < 1.0);
        }
    }

    #[test]
    fn f32_table_is_usable() {
        let p = PhyMacParams::<f32>::default();
        let t = build_table(8, &p, default_tolerance()).unwrap();
        assert!((t.beta(1) - 2.0 / 31.0).abs() < 4.0 * default_tolerance::<f32>());
    }
}
