use serde::{Deserialize, Serialize};

use super::RuntimeError;

/// Number of fractional bits kept by rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixedPrecision {
    p: u32,
}

pub const DEFAULT_PRECISION: u32 = 24;
pub const MAX_PRECISION: u32 = 60;

impl Default for FixedPrecision {
    fn default() -> Self {
        Self {
            p: DEFAULT_PRECISION,
        }
    }
}

impl FixedPrecision {
    /// `p` must lie in `1..=MAX_PRECISION`.
    pub fn new(p: u32) -> Result<Self, RuntimeError> {
        if (1..=MAX_PRECISION).contains(&p) {
            Ok(Self { p })
        } else {
            Err(RuntimeError::InvalidPrecision(p))
        }
    }

    pub fn bits(self) -> u32 {
        self.p
    }

    /// Grid spacing `2^-p`.
    pub fn ulp(self) -> f64 {
        (-(self.p as i32) as f64).exp2()
    }

    /// Nearest multiple of `2^-p`, ties to even. Non-finite input is returned
    /// as is; use [`round_fixed`] for the checked version.
    #[inline]
    pub fn round(self, x: f64) -> f64 {
        // At or above 2^(52-p) every double is already on the grid.
        if !x.is_finite() || x.abs() >= ((52 - self.p as i32) as f64).exp2() {
            return x;
        }
        let scale = (self.p as f64).exp2();
        (x * scale).round_ties_even() / scale
    }
}

/// Rounds `x` to `fp` fractional bits, ties to even.
pub fn round_fixed(x: f64, fp: FixedPrecision) -> Result<f64, RuntimeError> {
    if !x.is_finite() {
        return Err(RuntimeError::NonFinite);
    }
    Ok(fp.round(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(p: u32) -> FixedPrecision {
        FixedPrecision::new(p).unwrap()
    }

    #[test]
    fn nearest_multiple() {
        assert_eq!(round_fixed(0.3, fp(4)).unwrap(), 0.3125);
        assert_eq!(round_fixed(-0.3, fp(4)).unwrap(), -0.3125);
    }

    #[test]
    fn ties_go_to_even() {
        assert_eq!(round_fixed(0.09375, fp(4)).unwrap(), 0.125);
        // 2.5/16 -> 2/16
        assert_eq!(round_fixed(0.15625, fp(4)).unwrap(), 0.125);
    }

    #[test]
    fn representable_values_fixed() {
        for p in [1, 4, 24, 52, 60] {
            assert_eq!(round_fixed(1.0, fp(p)).unwrap(), 1.0);
            assert_eq!(round_fixed(0.0, fp(p)).unwrap(), 0.0);
        }
        assert_eq!(round_fixed(1e300, fp(24)).unwrap(), 1e300);
    }

    #[test]
    fn errors() {
        assert_eq!(round_fixed(f64::NAN, fp(4)), Err(RuntimeError::NonFinite));
        assert_eq!(round_fixed(f64::INFINITY, fp(4)), Err(RuntimeError::NonFinite));
        assert!(FixedPrecision::new(0).is_err());
        assert!(FixedPrecision::new(61).is_err());
    }
}
