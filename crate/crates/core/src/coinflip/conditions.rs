use crate::error::{config_err, Result};
use crate::math;

/// One inequality `lhs >= rhs` or `lhs <= rhs`, already evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    pub(crate) fn at_least(lhs: f64, rhs: f64) -> Self {
        Check {
            lhs,
            rhs,
            holds: lhs >= rhs,
        }
    }

    pub(crate) fn at_most(lhs: f64, rhs: f64) -> Self {
        Check {
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }
}

/// The five sufficient conditions for the lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `C sqrt(ln mB) >= 15`
    pub log_scale: Check,
    /// `mB >= 10240`
    pub coin_count: Check,
    /// `23/(C sqrt(mB)) + 1/mB <= 1/7`
    pub concentration: Check,
    /// Per-bit information bound `<= 1/10`.
    pub information: Check,
    /// `mn >= 350000`
    pub sample_count: Check,
}

impl ConditionReport {
    pub fn checks(&self) -> [(&'static str, Check); 5] {
        [
            ("log_scale", self.log_scale),
            ("coin_count", self.coin_count),
            ("concentration", self.concentration),
            ("information", self.information),
            ("sample_count", self.sample_count),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.checks().iter().all(|(_, c)| c.holds)
    }
}

pub fn theorem1_conditions(m: u64, n: u64, bits: u64, c: f64) -> Result<ConditionReport> {
    if !(c >= 1.0) {
        return Err(config_err!("constant C must be at least 1"));
    }
    if m == 0 || n == 0 || bits == 0 {
        return Err(config_err!("m, n and B must be positive"));
    }
    let k = m as f64 * bits as f64;
    let b = bits as f64;
    let bracket = (313.0 / c) * (313.0 / c)
        + 94.0 * 94.0 / (c * math::sqrt(k))
        + 192.0 / k
        + 15.0 / math::powf(k, 1.5)
        + (49.0 + 6.0 * b) / (k * k);
    // log2(1) = 0 makes the information ratio infinite at mB = 1.
    let information = if k > 1.0 {
        bracket / (b * math::log2(k))
    } else {
        f64::INFINITY
    };
    Ok(ConditionReport {
        log_scale: Check::at_least(c * math::sqrt(math::ln(k)), 15.0),
        coin_count: Check::at_least(k, 10240.0),
        concentration: Check::at_most(23.0 / (c * math::sqrt(k)) + 1.0 / k, 1.0 / 7.0),
        information: Check::at_most(information, 0.1),
        sample_count: Check::at_least(m as f64 * n as f64, 350_000.0),
    })
}

/// Smallest `m <= max_m` satisfying every condition, by bisection.
pub fn min_machines(n: u64, bits: u64, c: f64, max_m: u64) -> Result<Option<u64>> {
    let passes = |m: u64| theorem1_conditions(m, n, bits, c).map(|r| r.all_hold());
    if max_m == 0 || !passes(max_m)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0u64, max_m);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
