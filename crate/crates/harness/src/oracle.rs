use mrenc_core::functions::LossDistribution;
use rand::RngCore;

use crate::error::{HarnessError, Result};

/// A value with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(v: f64) -> Self {
        Estimate { mean: v, se: 0.0 }
    }
}

fn mean_and_se(mc_samples: usize, mut draw: impl FnMut() -> f64) -> Estimate {
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..mc_samples {
        let v = draw();
        sum += v;
        sq += v * v;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Estimate {
        mean,
        se: (var / n).sqrt(),
    }
}

/// `F(theta)`, exact when the family has a closed form.
pub fn true_loss_oracle(
    dist: &dyn LossDistribution,
    theta: &[f64],
    mc_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<Estimate> {
    if let Some(v) = dist.expected_loss(theta) {
        return Ok(Estimate::exact(v));
    }
    if mc_samples < 1000 {
        return Err(HarnessError::Config("mc_samples must be at least 1000".into()));
    }
    Ok(mean_and_se(mc_samples, || dist.sample(rng).eval(theta)))
}

/// `F(theta) - F(theta*)`.
///
/// Without a closed form the difference is estimated on paired draws, so
/// callers that share `rng` seeds across estimators compare on common samples.
pub fn loss_gap(
    dist: &dyn LossDistribution,
    theta: &[f64],
    mc_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<Estimate> {
    if let (Some(v), Some(min)) = (dist.expected_loss(theta), dist.min_value()) {
        return Ok(Estimate::exact(v - min));
    }
    let star = dist
        .minimizer()
        .ok_or_else(|| HarnessError::Runtime(format!("{} has no known minimizer", dist.name())))?;
    if mc_samples < 1000 {
        return Err(HarnessError::Config("mc_samples must be at least 1000".into()));
    }
    Ok(mean_and_se(mc_samples, || {
        let f = dist.sample(rng);
        f.eval(theta) - f.eval(&star)
    }))
}
