use crate::error::{config_err, Result};
use crate::math;

/// Uniform scalar quantizer over `[-range, range]` with `2^bits` levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    range: f64,
    bits: u32,
}

/// Widest supported field; codes must stay exactly representable in `f64`.
pub const MAX_FIELD_BITS: u32 = 52;

impl QuantizerSpec {
    pub fn new(range: f64, bits: u32) -> Result<Self> {
        if !(1..=MAX_FIELD_BITS).contains(&bits) {
            return Err(config_err!(
                "quantizer bits must be in 1..={MAX_FIELD_BITS}, got {bits}"
            ));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(config_err!("quantizer range must be positive, got {range}"));
        }
        Ok(QuantizerSpec { range, bits })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn max_code(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// Spacing between reconstruction levels, `2R / (2^q - 1)`.
    pub fn step(&self) -> f64 {
        2.0 * self.range / self.max_code() as f64
    }

    /// Clamps to the range, then rounds to the nearest level (halves away from zero).
    pub fn quantize(&self, v: f64) -> u64 {
        let v = if v.is_nan() {
            0.0
        } else {
            v.clamp(-self.range, self.range)
        };
        let code = math::round((v + self.range) / self.step());
        (code as u64).min(self.max_code())
    }

    pub fn dequantize(&self, code: u64) -> f64 {
        if code >= self.max_code() {
            return self.range;
        }
        -self.range + code as f64 * self.step()
    }
}
