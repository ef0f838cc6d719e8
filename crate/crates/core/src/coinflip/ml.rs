use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{config_err, Result};
use crate::math;

const COINS: usize = 9;

/// Outcome of the nine-coin maximum-likelihood experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NineCoinReport {
    pub trials: usize,
    pub error_rate: f64,
    pub error_se: f64,
    /// Fraction of trials where the biased count exceeded `mn/2 + 0.4 sqrt(mn)`.
    pub biased_exceeds: f64,
    pub biased_exceeds_se: f64,
    /// Fraction of fair-coin counts (pooled) at or below the same threshold.
    pub fair_below: f64,
    pub fair_below_se: f64,
}

fn binomial_se(p: f64, count: usize) -> f64 {
    math::sqrt(p * (1.0 - p) / count as f64)
}

/// Nine coins, one with `P(1) = 1/2 + 1/(4 sqrt(mn))`. Each trial draws the
/// heads count of every coin over `mn` flips and guesses the coin with the
/// largest count.
pub fn ml_nine_coin_test<R: Rng + ?Sized>(mn: u64, trials: usize, rng: &mut R) -> Result<NineCoinReport> {
    if mn < 1 || trials < 1 {
        return Err(config_err!("need at least one flip and one trial"));
    }
    let root = math::sqrt(mn as f64);
    let p_biased = 0.5 + 1.0 / (4.0 * root);
    if p_biased >= 1.0 {
        return Err(config_err!("mn = {mn} gives an invalid bias"));
    }
    let threshold = mn as f64 / 2.0 + 0.4 * root;
    let fair = Binomial::new(mn, 0.5).map_err(|e| config_err!("{e}"))?;
    let biased = Binomial::new(mn, p_biased).map_err(|e| config_err!("{e}"))?;

    let (mut errors, mut exceed, mut below) = (0usize, 0usize, 0usize);
    let mut counts = [0u64; COINS];
    for _ in 0..trials {
        let target = rng.random_range(0..COINS);
        for (i, c) in counts.iter_mut().enumerate() {
            *c = if i == target {
                biased.sample(rng)
            } else {
                fair.sample(rng)
            };
            if i != target && (*c as f64) <= threshold {
                below += 1;
            }
        }
        if counts[target] as f64 > threshold {
            exceed += 1;
        }
        let best = *counts.iter().max().expect("nine coins");
        let ties = counts.iter().filter(|&&c| c == best).count();
        let pick = rng.random_range(0..ties);
        let guess = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == best)
            .nth(pick)
            .map(|(i, _)| i)
            .expect("pick is within the tie set");
        if guess != target {
            errors += 1;
        }
    }
    let fair_total = trials * (COINS - 1);
    let error_rate = errors as f64 / trials as f64;
    let biased_exceeds = exceed as f64 / trials as f64;
    let fair_below = below as f64 / fair_total as f64;
    Ok(NineCoinReport {
        trials,
        error_rate,
        error_se: binomial_se(error_rate, trials),
        biased_exceeds,
        biased_exceeds_se: binomial_se(biased_exceeds, trials),
        fair_below,
        fair_below_se: binomial_se(fair_below, fair_total),
    })
}
