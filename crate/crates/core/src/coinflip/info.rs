use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::lemmas::{random_distribution, shannon_entropy};
use super::CoinWorld;
use crate::error::{config_err, Error, Result};

/// Largest outcome space that exact routines will enumerate.
pub const MAX_ENUMERATED_OUTCOMES: u64 = 1 << 16;

const MAX_DETERMINISTIC_CODINGS: u64 = 1 << 20;

/// A mapping from outcome matrices (by index) to signals `0..2^B`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coding {
    Deterministic { signals: usize, map: Vec<usize> },
    Randomized { signals: usize, table: Vec<Vec<f64>> },
}

impl Coding {
    pub fn deterministic(bits: u32, map: Vec<usize>) -> Result<Self> {
        let signals = signal_count(bits)?;
        if let Some(s) = map.iter().find(|&&s| s >= signals) {
            return Err(config_err!("signal {s} out of range for {bits}-bit coding"));
        }
        Ok(Coding::Deterministic { signals, map })
    }

    /// Each row of `table` is the signal distribution for one outcome.
    pub fn randomized(bits: u32, table: Vec<Vec<f64>>) -> Result<Self> {
        let signals = signal_count(bits)?;
        for (w, row) in table.iter().enumerate() {
            if row.len() != signals {
                return Err(config_err!("row {w} has {} entries, expected {signals}", row.len()));
            }
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(config_err!("row {w} has a negative or NaN entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(config_err!("row {w} sums to {s}"));
            }
        }
        Ok(Coding::Randomized { signals, table })
    }

    /// Every outcome sends signal 0.
    pub fn constant(bits: u32, outcomes: usize) -> Result<Self> {
        Self::deterministic(bits, vec![0; outcomes])
    }

    /// One-bit coding that forwards the first flip of coin `coin`.
    pub fn coin_bit(world: &CoinWorld, coin: usize) -> Result<Self> {
        let outcomes = outcome_count(world)?;
        if coin >= world.coins() {
            return Err(config_err!("coin {coin} out of range"));
        }
        Self::deterministic(1, (0..outcomes).map(|w| (w >> coin) & 1).collect())
    }

    /// Draws a randomized coding with independent random rows.
    pub fn random<R: Rng + ?Sized>(bits: u32, outcomes: usize, rng: &mut R) -> Result<Self> {
        let signals = signal_count(bits)?;
        let table = (0..outcomes).map(|_| random_distribution(signals, rng)).collect();
        Self::randomized(bits, table)
    }

    /// Row-by-row convex combination `lambda * a + (1 - lambda) * b`.
    pub fn mixture(a: &Coding, b: &Coding, lambda: f64) -> Result<Self> {
        if a.signals() != b.signals() || a.outcomes() != b.outcomes() {
            return Err(config_err!("mixed codings must share shape"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(config_err!("mixture weight must be in [0, 1]"));
        }
        let table = (0..a.outcomes())
            .map(|w| {
                (0..a.signals())
                    .map(|s| lambda * a.prob(s, w) + (1.0 - lambda) * b.prob(s, w))
                    .collect()
            })
            .collect();
        Ok(Coding::Randomized {
            signals: a.signals(),
            table,
        })
    }

    pub fn signals(&self) -> usize {
        match self {
            Coding::Deterministic { signals, .. } | Coding::Randomized { signals, .. } => *signals,
        }
    }

    pub fn outcomes(&self) -> usize {
        match self {
            Coding::Deterministic { map, .. } => map.len(),
            Coding::Randomized { table, .. } => table.len(),
        }
    }

    /// `Q(s | w)`.
    pub fn prob(&self, s: usize, w: usize) -> f64 {
        match self {
            Coding::Deterministic { map, .. } => (map[w] == s) as u8 as f64,
            Coding::Randomized { table, .. } => table[w][s],
        }
    }

    /// Same map written as a probability table.
    pub fn to_randomized(&self) -> Self {
        let table = (0..self.outcomes())
            .map(|w| (0..self.signals()).map(|s| self.prob(s, w)).collect())
            .collect();
        Coding::Randomized {
            signals: self.signals(),
            table,
        }
    }
}

fn signal_count(bits: u32) -> Result<usize> {
    if bits == 0 || bits > 16 {
        return Err(config_err!("coding bits must be in 1..=16, got {bits}"));
    }
    Ok(1usize << bits)
}

fn outcome_count(world: &CoinWorld) -> Result<usize> {
    let cells = world.cells() as u64;
    if cells > 16 || (1u64 << cells) > MAX_ENUMERATED_OUTCOMES {
        return Err(Error::TooLarge(alloc::format!(
            "2^{cells} outcome matrices exceed the enumeration limit"
        )));
    }
    Ok(1usize << cells)
}

/// `P(S = s | T = t)` for every coin `t`, by enumerating all outcomes.
pub fn conditional_signal_distribution(world: &CoinWorld, coding: &Coding) -> Result<Vec<Vec<f64>>> {
    let outcomes = outcome_count(world)?;
    if coding.outcomes() != outcomes {
        return Err(config_err!(
            "coding covers {} outcomes, world has {outcomes}",
            coding.outcomes()
        ));
    }
    let signals = coding.signals();
    let mut out = vec![vec![0.0; signals]; world.coins()];
    for (t, row) in out.iter_mut().enumerate() {
        for w in 0..outcomes {
            let pw = world.outcome_probability(w as u64, t);
            match coding {
                Coding::Deterministic { map, .. } => row[map[w]] += pw,
                Coding::Randomized { table, .. } => {
                    for (acc, q) in row.iter_mut().zip(&table[w]) {
                        *acc += pw * q;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `H(S) - mean_t H(S | T = t)` for a uniform prior on `T`.
pub fn mutual_information_from_conditionals(cond: &[Vec<f64>]) -> f64 {
    let k = cond.len() as f64;
    let len = cond.first().map_or(0, Vec::len);
    let mut marginal = vec![0.0; len];
    for row in cond {
        for (m, p) in marginal.iter_mut().zip(row) {
            *m += p / k;
        }
    }
    let conditional: f64 = cond.iter().map(|r| shannon_entropy(r)).sum::<f64>() / k;
    (shannon_entropy(&marginal) - conditional).max(0.0)
}

/// Exact `I(T; S)` in bits.
pub fn exact_mutual_information(world: &CoinWorld, coding: &Coding) -> Result<f64> {
    Ok(mutual_information_from_conditionals(&conditional_signal_distribution(
        world, coding,
    )?))
}

/// Exact `H(S)` in bits.
pub fn signal_entropy(world: &CoinWorld, coding: &Coding) -> Result<f64> {
    let cond = conditional_signal_distribution(world, coding)?;
    let k = cond.len() as f64;
    let marginal: Vec<f64> = (0..coding.signals())
        .map(|s| cond.iter().map(|r| r[s]).sum::<f64>() / k)
        .collect();
    Ok(shannon_entropy(&marginal))
}

/// Exact `I(T; S^1, ..., S^m)` for flippers that observe independent outcomes.
pub fn joint_mutual_information(world: &CoinWorld, codings: &[Coding]) -> Result<f64> {
    if codings.is_empty() {
        return Err(Error::Empty("codings"));
    }
    let joint_size = codings.iter().try_fold(1u64, |acc, c| {
        let next = acc.saturating_mul(c.signals() as u64);
        (next <= MAX_ENUMERATED_OUTCOMES).then_some(next)
    });
    if joint_size.is_none() {
        return Err(Error::TooLarge(
            "joint signal space exceeds the enumeration limit".into(),
        ));
    }
    let conds = codings
        .iter()
        .map(|c| conditional_signal_distribution(world, c))
        .collect::<Result<Vec<_>>>()?;
    let joint: Vec<Vec<f64>> = (0..world.coins())
        .map(|t| {
            conds.iter().fold(vec![1.0], |acc, cond| {
                acc.iter().flat_map(|a| cond[t].iter().map(move |p| a * p)).collect()
            })
        })
        .collect();
    Ok(mutual_information_from_conditionals(&joint))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubadditivityReport {
    pub joint: f64,
    pub marginals: Vec<f64>,
    pub holds: bool,
}

impl SubadditivityReport {
    pub fn marginal_sum(&self) -> f64 {
        self.marginals.iter().sum()
    }
}

/// Compares the joint information against the sum of per-flipper informations.
pub fn subadditivity_check(world: &CoinWorld, codings: &[Coding]) -> Result<SubadditivityReport> {
    let joint = joint_mutual_information(world, codings)?;
    let marginals = codings
        .iter()
        .map(|c| exact_mutual_information(world, c))
        .collect::<Result<Vec<_>>>()?;
    let holds = joint <= marginals.iter().sum::<f64>() + 1e-12;
    Ok(SubadditivityReport {
        joint,
        marginals,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub deterministic_codings: u64,
    pub best_deterministic: f64,
    pub randomized_trials: usize,
    pub best_randomized: f64,
    /// Trials whose information exceeded the deterministic optimum by more than 1e-12.
    pub violations: usize,
}

impl DominanceReport {
    pub fn dominated(&self) -> bool {
        self.violations == 0
    }
}

/// Enumerates every deterministic `bits`-bit coding and checks that none of
/// `trials` random randomized codings carries more information.
pub fn deterministic_dominance_check<R: Rng + ?Sized>(
    world: &CoinWorld,
    bits: u32,
    trials: usize,
    rng: &mut R,
) -> Result<DominanceReport> {
    let outcomes = outcome_count(world)?;
    let signals = signal_count(bits)?;
    let total = (signals as u64)
        .checked_pow(outcomes as u32)
        .filter(|&c| c <= MAX_DETERMINISTIC_CODINGS)
        .ok_or_else(|| Error::TooLarge("deterministic coding space is too large".into()))?;

    let mut best_deterministic = 0.0f64;
    let mut map = vec![0usize; outcomes];
    for code in 0..total {
        let mut rest = code;
        for slot in map.iter_mut() {
            *slot = (rest % signals as u64) as usize;
            rest /= signals as u64;
        }
        let coding = Coding::Deterministic {
            signals,
            map: map.clone(),
        };
        best_deterministic = best_deterministic.max(exact_mutual_information(world, &coding)?);
    }

    let mut best_randomized = 0.0f64;
    let mut violations = 0;
    for _ in 0..trials {
        let coding = Coding::random(bits, outcomes, rng)?;
        let info = exact_mutual_information(world, &coding)?;
        best_randomized = best_randomized.max(info);
        if info > best_deterministic + 1e-12 {
            violations += 1;
        }
    }
    Ok(DominanceReport {
        deterministic_codings: total,
        best_deterministic,
        randomized_trials: trials,
        best_randomized,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h2(p: f64) -> f64 {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }

    #[test]
    fn first_coin_information() {
        let w = CoinWorld::with_bias(2, 1, 1, 0.25).unwrap();
        let c = Coding::coin_bit(&w, 0).unwrap();
        let i = exact_mutual_information(&w, &c).unwrap();
        let expected = h2(0.625) - (h2(0.75) + 1.0) / 2.0;
        assert!((i - expected).abs() < 1e-12);
        assert!((i - 0.048795).abs() < 1e-6);
    }

    #[test]
    fn constant_coding_carries_nothing() {
        let w = CoinWorld::with_bias(3, 2, 1, 0.3).unwrap();
        let c = Coding::constant(2, 64).unwrap();
        assert_eq!(exact_mutual_information(&w, &c).unwrap(), 0.0);
    }

    #[test]
    fn identity_coding_bounded_by_log_k() {
        let w = CoinWorld::with_bias(4, 2, 1, 0.45).unwrap();
        let c = Coding::deterministic(8, (0..256).collect()).unwrap();
        let i = exact_mutual_information(&w, &c).unwrap();
        assert!(i <= 2.0 + 1e-12);
        assert!(i <= signal_entropy(&w, &c).unwrap() + 1e-12);
        assert!(i > 0.0);
    }

    #[test]
    fn enumeration_gate() {
        let w = CoinWorld::with_bias(17, 1, 1, 0.1).unwrap();
        let c = Coding::constant(1, 4).unwrap();
        assert!(matches!(exact_mutual_information(&w, &c), Err(Error::TooLarge(_))));
        let small = CoinWorld::with_bias(2, 1, 1, 0.1).unwrap();
        assert!(exact_mutual_information(&small, &c).is_ok());
        assert!(exact_mutual_information(&small, &Coding::constant(1, 8).unwrap()).is_err());
    }

    #[test]
    fn randomized_copy_of_deterministic_is_equal() {
        let w = CoinWorld::with_bias(2, 2, 1, 0.2).unwrap();
        let d = Coding::deterministic(2, (0..16).map(|x| (x * 7 + 3) % 4).collect()).unwrap();
        let a = exact_mutual_information(&w, &d).unwrap();
        let b = exact_mutual_information(&w, &d.to_randomized()).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn mixture_no_better_than_components() {
        let w = CoinWorld::with_bias(2, 2, 1, 0.3).unwrap();
        let a = Coding::coin_bit(&w, 0).unwrap();
        let b = Coding::deterministic(1, (0..16).map(|x| ((x >> 1) ^ (x >> 3)) & 1).collect()).unwrap();
        let ia = exact_mutual_information(&w, &a).unwrap();
        let ib = exact_mutual_information(&w, &b).unwrap();
        for lambda in [0.1, 0.35, 0.5, 0.9] {
            let mix = Coding::mixture(&a, &b, lambda).unwrap();
            assert!(exact_mutual_information(&w, &mix).unwrap() <= ia.max(ib) + 1e-12);
        }
    }

    #[test]
    fn dominance_on_four_outcomes() {
        let w = CoinWorld::with_bias(2, 1, 1, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = deterministic_dominance_check(&w, 1, 1000, &mut rng).unwrap();
        assert_eq!(r.deterministic_codings, 16);
        assert!(r.dominated());
        assert!(r.best_randomized <= r.best_deterministic + 1e-12);
    }

    #[test]
    fn subadditivity_cases() {
        let w = CoinWorld::with_bias(2, 2, 2, 0.3).unwrap();
        let a = Coding::coin_bit(&w, 0).unwrap();
        let one = subadditivity_check(&w, core::slice::from_ref(&a)).unwrap();
        assert!((one.joint - one.marginals[0]).abs() < 1e-14);

        let konst = Coding::constant(1, 16).unwrap();
        let r = subadditivity_check(&w, &[a.clone(), konst]).unwrap();
        assert!((r.joint - r.marginals[0]).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let c1 = Coding::random(1, 16, &mut rng).unwrap();
            let c2 = Coding::random(2, 16, &mut rng).unwrap();
            assert!(subadditivity_check(&w, &[c1, c2]).unwrap().holds);
        }
    }

    #[test]
    fn coding_validation() {
        assert!(Coding::deterministic(1, vec![0, 2]).is_err());
        assert!(Coding::randomized(1, vec![vec![0.5, 0.6]]).is_err());
        assert!(Coding::randomized(1, vec![vec![0.5]]).is_err());
        assert!(Coding::constant(0, 4).is_err());
    }
}
