//! Biased-coin identification: `k` coins, one of them biased, observed by
//! `m` flippers that each flip every coin `n` times and send a `B`-bit signal.
//!
//! Tiny instances are handled exactly by enumerating every outcome matrix,
//! which is enough to check the information inequalities the lower bound
//! is assembled from.

mod conditions;
mod info;
mod lemmas;
mod ml;

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{config_err, Result};
use crate::math;

pub use conditions::{min_machines, theorem1_conditions, Check, ConditionReport};
pub use info::{
    conditional_signal_distribution, deterministic_dominance_check, exact_mutual_information, joint_mutual_information,
    mutual_information_from_conditionals, signal_entropy, subadditivity_check, Coding, DominanceReport,
    SubadditivityReport, MAX_ENUMERATED_OUTCOMES,
};
pub use lemmas::{fano_bound, lemma5_check, random_alpha, random_distribution, shannon_entropy};
pub use ml::{ml_nine_coin_test, NineCoinReport};

/// Parameters of the coin-flipping system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinWorld {
    k: usize,
    n: usize,
    m: usize,
    bias: f64,
}

impl CoinWorld {
    /// World whose biased coin shows 1 with probability `1/2 + 1/(2 C sqrt(n) ln k)`.
    pub fn new(k: usize, n: usize, m: usize, c: f64) -> Result<Self> {
        if k < 2 {
            return Err(config_err!("need at least two coins"));
        }
        if n < 1 {
            return Err(config_err!("need at least one flip per coin"));
        }
        if !(c >= 1.0) {
            return Err(config_err!("constant C must be at least 1"));
        }
        let bias = 1.0 / (2.0 * c * math::sqrt(n as f64) * math::ln(k as f64));
        Self::with_bias(k, n, m, bias)
    }

    /// World with an explicit bias in `[0, 1/2)`.
    pub fn with_bias(k: usize, n: usize, m: usize, bias: f64) -> Result<Self> {
        if k < 2 || n < 1 {
            return Err(config_err!("need k >= 2 coins and n >= 1 flips"));
        }
        if !(0.0..0.5).contains(&bias) {
            return Err(config_err!("bias must be in [0, 1/2), got {bias}"));
        }
        Ok(CoinWorld { k, n, m, bias })
    }

    pub fn coins(&self) -> usize {
        self.k
    }

    pub fn flips(&self) -> usize {
        self.n
    }

    pub fn flippers(&self) -> usize {
        self.m
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Probability that the biased coin shows 1.
    pub fn p_biased(&self) -> f64 {
        0.5 + self.bias
    }

    /// Entries per outcome matrix, `n * k`.
    pub fn cells(&self) -> usize {
        self.n * self.k
    }

    /// Probability of the outcome matrix encoded by `w` when coin `biased` is the biased one.
    ///
    /// Entry `(row j, coin c)` is bit `j * k + c` of `w`.
    pub fn outcome_probability(&self, w: u64, biased: usize) -> f64 {
        let mut ones = 0;
        for j in 0..self.n {
            ones += (w >> (j * self.k + biased)) & 1;
        }
        let fair = math::exp2i(-((self.n * (self.k - 1)) as i32));
        let p = self.p_biased();
        fair * libm::pow(p, ones as f64) * libm::pow(1.0 - p, (self.n as u64 - ones) as f64)
    }
}

/// An `n x k` binary outcome matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipMatrix {
    n: usize,
    k: usize,
    cells: Vec<u8>,
}

impl FlipMatrix {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.k
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.k + col]
    }

    pub fn column_ones(&self, col: usize) -> usize {
        (0..self.n).map(|j| self.get(j, col) as usize).sum()
    }

    /// Outcome index in the bit convention of [`CoinWorld::outcome_probability`].
    pub fn to_index(&self) -> Option<u64> {
        if self.cells.len() > 64 {
            return None;
        }
        Some(
            self.cells
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i)),
        )
    }
}

/// One flipper's outcomes: coin `biased` is Bernoulli(1/2 + bias), the rest fair.
pub fn simulate_flips<R: Rng + ?Sized>(world: &CoinWorld, biased: usize, rng: &mut R) -> FlipMatrix {
    assert!(biased < world.k, "biased coin index out of range");
    let p = world.p_biased();
    let cells = (0..world.n * world.k)
        .map(|i| {
            let one = if i % world.k == biased {
                rng.random::<f64>() < p
            } else {
                rng.random::<bool>()
            };
            one as u8
        })
        .collect();
    FlipMatrix {
        n: world.n,
        k: world.k,
        cells,
    }
}
