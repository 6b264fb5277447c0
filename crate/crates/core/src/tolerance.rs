//! Process-wide zero tolerance.
//!
//! Every "is this zero?" decision in the crate goes through [`tolerance`],
//! applied relative to the largest magnitude of the expression under test.

use std::sync::atomic::{AtomicU64, Ordering};

/// Default zero tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Threshold on `|Im z| / (1 + |Re z|)` below which a root counts as real.
pub const REAL_ROOT_THRESHOLD: f64 = 1e-7;

/// Standard loop-closure acceptance threshold.
pub const LOOP_TOLERANCE: f64 = 1e-8;

static TOLERANCE_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current global tolerance.
pub fn tolerance() -> f64 {
    f64::from_bits(TOLERANCE_BITS.load(Ordering::Relaxed))
}

/// Overrides the global tolerance. Non-positive or non-finite values are ignored.
pub fn set_tolerance(tol: f64) {
    if tol.is_finite() && tol > 0.0 {
        TOLERANCE_BITS.store(tol.to_bits(), Ordering::Relaxed);
    }
}

/// `true` when `value` is zero relative to `scale` at the global tolerance.
pub(crate) fn is_negligible(value: f64, scale: f64) -> bool {
    value.abs() <= tolerance() * scale.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bits_decode_to_1e_9() {
        assert_eq!(f64::from_bits(0x3E11_2E0B_E826_D695), DEFAULT_TOLERANCE);
    }
}
