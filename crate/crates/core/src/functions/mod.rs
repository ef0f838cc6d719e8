//! Loss functions, distributions over them, and the concrete families.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};

mod hat;
mod point_mass;
mod relu;

pub use hat::{f_sigma, hat_function, HatGrid, HatGridFamily, SignFunction, SignedHats};
pub use point_mass::{Cone, FnLoss, MultiWell, PointMass};
pub use relu::{relu_forward, ReluFamily, ReluSample, RELU_OUTPUT_WEIGHTS};

/// A real-valued loss on `[-1, 1]^d`, expected to be 1-Lipschitz.
pub trait Loss {
    fn dim(&self) -> usize;
    fn eval(&self, theta: &[f64]) -> f64;
}

/// One sampled loss function, cheap to clone.
#[derive(Clone)]
pub struct LossSample {
    f: Arc<dyn Loss + Send + Sync>,
}

impl LossSample {
    pub fn new(f: impl Loss + Send + Sync + 'static) -> Self {
        LossSample { f: Arc::new(f) }
    }

    pub fn from_arc(f: Arc<dyn Loss + Send + Sync>) -> Self {
        LossSample { f }
    }

    #[inline]
    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.f.eval(theta)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.f.dim()
    }
}

impl core::fmt::Debug for LossSample {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LossSample").field("dim", &self.dim()).finish()
    }
}

/// A distribution over loss functions, with optional closed-form expectation.
pub trait LossDistribution: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn sample(&self, rng: &mut dyn RngCore) -> LossSample;

    /// Closed-form expected loss `F(theta)`, when known.
    fn expected_loss(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Known minimizer of the expected loss.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    /// Known minimum value of the expected loss.
    fn min_value(&self) -> Option<f64> {
        let theta = self.minimizer()?;
        self.expected_loss(&theta)
    }
}

/// Mean of the first half of a machine's samples.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalLoss<'a> {
    samples: &'a [LossSample],
}

impl<'a> EmpiricalLoss<'a> {
    /// Uses the first `floor(n / 2)` of the `n` given samples.
    pub fn first_half(all: &'a [LossSample]) -> Result<Self> {
        let half = &all[..all.len() / 2];
        if half.is_empty() {
            return Err(Error::Empty("empirical loss needs at least two samples"));
        }
        Ok(EmpiricalLoss { samples: half })
    }

    pub fn samples(&self) -> &'a [LossSample] {
        self.samples
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        let s: f64 = self.samples.iter().map(|f| f.eval(theta)).sum();
        s / self.samples.len() as f64
    }
}

/// Empirical loss of a machine's `n` samples at `theta`.
pub fn empirical_loss(samples: &[LossSample], theta: &[f64]) -> Result<f64> {
    Ok(EmpiricalLoss::first_half(samples)?.eval(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn constant(v: f64) -> LossSample {
        LossSample::new(FnLoss::new(1, move |_| v))
    }

    #[test]
    fn empirical_loss_uses_first_half() {
        let s = vec![constant(0.2), constant(0.4), constant(100.0), constant(-7.0)];
        assert!((empirical_loss(&s, &[0.0]).unwrap() - 0.3).abs() < 1e-15);
        let s = vec![constant(0.2), constant(9.0)];
        assert_eq!(empirical_loss(&s, &[0.0]).unwrap(), 0.2);
        let s = vec![constant(0.5), constant(0.5), constant(0.5)];
        assert_eq!(empirical_loss(&s, &[0.3]).unwrap(), 0.5);
        assert!(empirical_loss(&s[..1], &[0.0]).is_err());
        assert!(empirical_loss(&[], &[0.0]).is_err());
    }

    #[test]
    fn identical_samples_give_that_function() {
        let f = LossSample::new(Cone::new(vec![0.2, -0.1]));
        let s = vec![f.clone(); 6];
        for theta in [[0.0, 0.0], [0.5, 0.5], [-1.0, 1.0]] {
            assert_eq!(empirical_loss(&s, &theta).unwrap(), f.eval(&theta));
        }
    }
}
