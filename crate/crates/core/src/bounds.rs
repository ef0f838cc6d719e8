//! Closed-form accuracy bounds as functions of the system size.

use crate::coinflip::Check;
use crate::error::{config_err, Result};
use crate::math;

fn positive(m: u64, n: u64, bits: u64, d: usize) -> Result<()> {
    if m == 0 || n == 0 || bits == 0 || d == 0 {
        return Err(config_err!("m, n, B and d must be positive"));
    }
    Ok(())
}

/// Minimax lower bound `max(1/(C sqrt(n) (mB)^{1/d} ln mB), 1/(4 sqrt(mn)))`.
pub fn lower_bound_value(m: u64, n: u64, bits: u64, d: usize, c: f64) -> Result<f64> {
    positive(m, n, bits, d)?;
    if !(c >= 1.0) {
        return Err(config_err!("constant C must be at least 1"));
    }
    let mb = m as f64 * bits as f64;
    if mb < 2.0 {
        return Err(config_err!("mB must be at least 2"));
    }
    let nf = n as f64;
    let first = 1.0 / (c * math::sqrt(nf) * math::powf(mb, 1.0 / d as f64) * math::ln(mb));
    let second = 1.0 / (4.0 * math::sqrt(m as f64 * nf));
    Ok(first.max(second))
}

/// Achievable error `4 sqrt(d) ln^2(mn) max(ln(mn)/(sqrt(n) (mB)^{1/d}), 1/sqrt(mn))`.
pub fn upper_bound_value(m: u64, n: u64, bits: u64, d: usize) -> Result<f64> {
    positive(m, n, bits, d)?;
    let mn = m as f64 * n as f64;
    let mb = m as f64 * bits as f64;
    let l = math::ln(mn);
    let first = l / (math::sqrt(n as f64) * math::powf(mb, 1.0 / d as f64));
    let second = 1.0 / math::sqrt(mn);
    Ok(4.0 * math::sqrt(d as f64) * l * l * first.max(second))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionReport {
    /// `m >= ln^2(mn)`
    pub machines: Check,
    /// `ln(mn) >= 8 sqrt(d)`
    pub log_scale: Check,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.machines.holds && self.log_scale.holds
    }
}

pub fn assumption_check(m: u64, n: u64, d: usize) -> AssumptionReport {
    let l = math::ln(m as f64 * n as f64);
    AssumptionReport {
        machines: Check::at_least(m as f64, l * l),
        log_scale: Check::at_least(l, 8.0 * math::sqrt(d as f64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_bound_example() {
        let v = lower_bound_value(1_000_000, 100, 64, 2, 25.0).unwrap();
        assert!((v - 2.5e-5).abs() < 1e-15);
        assert!(lower_bound_value(10, 10, 1, 2, 0.5).is_err());
    }

    #[test]
    fn lower_bound_shrinks_with_n() {
        let mut prev = f64::INFINITY;
        for n in [1, 10, 100, 1000, 10_000] {
            let v = lower_bound_value(1000, n, 8, 3, 2.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn lower_bound_high_dimension_limit() {
        let limit = 1.0 / (2.0 * 10f64.sqrt() * (8000f64).ln());
        let v = lower_bound_value(1000, 10, 8, 10_000, 2.0).unwrap();
        assert!(v < limit && v > 0.999 * limit);
    }

    #[test]
    fn upper_bound_example() {
        let v = upper_bound_value(1_000_000, 10, 64, 2).unwrap();
        assert!((v - 0.936).abs() < 2e-3, "{v}");
    }

    #[test]
    fn upper_bound_takes_larger_branch() {
        // B large enough that the 1/sqrt(mn) branch dominates
        let (m, n, b, d) = (1000u64, 4u64, 1u64 << 40, 1usize);
        let mn = (m * n) as f64;
        let expected = 4.0 * mn.ln().powi(2) / mn.sqrt();
        assert!((upper_bound_value(m, n, b, d).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn assumption_examples() {
        let r = assumption_check(1_000_000, 10, 2);
        assert!(r.holds());
        let r = assumption_check(100, 2, 4);
        assert!(r.machines.holds && !r.log_scale.holds);
        // ln(mn) = 8 exactly is impossible with integers; test the machine boundary instead
        let r = assumption_check(1, 1, 1);
        assert!(r.machines.holds);
    }
}
