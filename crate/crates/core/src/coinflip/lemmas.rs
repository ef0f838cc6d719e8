use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{config_err, Result};
use crate::math;

/// Entropy in bits; zero entries contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| math::plog2p(x)).sum::<f64>()
}

/// Fano lower bound on the identification error among `k` hypotheses.
pub fn fano_bound(info_bits: f64, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(config_err!("need at least two hypotheses"));
    }
    if !(info_bits >= 0.0) {
        return Err(config_err!("mutual information must be non-negative"));
    }
    let log_k = math::log2(k as f64);
    Ok((1.0 - info_bits / log_k - 1.0 / log_k).max(0.0))
}

/// Returns `((sum_u alpha_u P(u))^2, 1.5 (n - H(P)))` for a distribution
/// over `{0,1}^n` and a zero-sum weight vector in `[-1, 1]`.
pub fn lemma5_check(alpha: &[f64], p: &[f64]) -> Result<(f64, f64)> {
    let len = p.len();
    if len < 2 || !len.is_power_of_two() || len > 1 << 16 {
        return Err(config_err!("distribution length must be 2^n with 1 <= n <= 16"));
    }
    if alpha.len() != len {
        return Err(config_err!("alpha has {} entries, expected {len}", alpha.len()));
    }
    if alpha.iter().any(|a| !(-1.0..=1.0).contains(a)) {
        return Err(config_err!("alpha entries must lie in [-1, 1]"));
    }
    if alpha.iter().sum::<f64>().abs() > 1e-9 {
        return Err(config_err!("alpha must sum to zero"));
    }
    if p.iter().any(|x| !(*x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(config_err!("P must be a probability distribution"));
    }
    let n = len.trailing_zeros() as f64;
    let dot: f64 = alpha.iter().zip(p).map(|(a, q)| a * q).sum();
    Ok((dot * dot, 1.5 * (n - shannon_entropy(p))))
}

/// Zero-sum vector with entries in `[-1, 1]`.
pub fn random_alpha<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut a: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mean = a.iter().sum::<f64>() / len as f64;
    a.iter_mut().for_each(|x| *x -= mean);
    let peak = a.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter_mut().for_each(|x| *x /= peak);
    a
}

/// Uniform draw from the probability simplex.
pub fn random_distribution<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}
