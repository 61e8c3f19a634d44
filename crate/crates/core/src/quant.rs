//! Flat scalar quantization and the QP to step mapping.

pub const MAX_QP: u8 = 63;
/// Largest dequantized magnitude fed to the inverse transform.
pub const MAX_DEQUANT: i32 = 1 << 17;

/// Quantizer for one QP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantParams {
    pub qp: u8,
    pub step: i32,
}

/// `max(1, round(2^((qp + 32) / 12)))`.
pub fn qp_to_step(qp: u8) -> i32 {
    (2f64.powf((qp as f64 + 32.0) / 12.0).round() as i32).max(1)
}

impl QuantParams {
    pub fn new(qp: u8) -> Self {
        let qp = qp.min(MAX_QP);
        QuantParams { qp, step: qp_to_step(qp) }
    }

    /// `sign(c) * floor(|c| / step + 1/2)`.
    #[inline]
    pub fn quantize(&self, coeff: i32) -> i32 {
        let mag = (2 * coeff.unsigned_abs() as i64 + self.step as i64) / (2 * self.step as i64);
        if coeff < 0 {
            -(mag as i32)
        } else {
            mag as i32
        }
    }

    /// `level * step`, clamped to the inverse transform's input range.
    #[inline]
    pub fn dequantize(&self, level: i32) -> i32 {
        (level as i64 * self.step as i64).clamp(-(MAX_DEQUANT as i64), MAX_DEQUANT as i64) as i32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_endpoints() {
        assert_eq!(qp_to_step(23), 24);
        assert_eq!(qp_to_step(63), 242);
        assert_eq!(qp_to_step(0), 6);
    }

    #[test]
    fn formula_example() {
        let q = QuantParams { qp: 23, step: 24 };
        assert_eq!(q.quantize(100), 4);
        assert_eq!(q.dequantize(4), 96);
        assert_eq!(q.quantize(-100), -4);
        assert_eq!(q.quantize(12), 1);
        assert_eq!(q.quantize(11), 0);
    }

    #[test]
    fn zero_fixpoint_and_monotone_steps() {
        for qp in 0..=MAX_QP {
            assert_eq!(QuantParams::new(qp).quantize(0), 0);
            if qp > 0 {
                assert!(qp_to_step(qp) >= qp_to_step(qp - 1));
            }
        }
    }
}
