//! Entropy coding: adaptive multi-symbol range coder, raw bit packing and
//! rate estimation.

mod bits;
mod cdf;
mod range;

pub use bits::{BitReader, BitWriter};
pub use cdf::{Cdf, CDF_PRECISION, CDF_TOTAL, MAX_SYMBOLS};
pub use range::{RangeDecoder, RangeEncoder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BitioError {
    #[error("stream truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("malformed {what} at byte {offset}")]
    Malformed { offset: usize, what: &'static str },
}

/// Destination of coded syntax elements.
///
/// Implemented by the real encoder and by [`BitCounter`], which only
/// accumulates the ideal code length so that rate-distortion search can
/// share the syntax writing code with the final pass.
pub trait SymbolSink {
    fn symbol(&mut self, cdf: &mut Cdf, symbol: usize);
    fn bit(&mut self, bit: bool);
    fn literal(&mut self, value: u32, bits: u32) {
        for i in (0..bits).rev() {
            self.bit((value >> i) & 1 != 0);
        }
    }
    fn golomb(&mut self, value: u32);
}

impl SymbolSink for RangeEncoder {
    #[inline]
    fn symbol(&mut self, cdf: &mut Cdf, symbol: usize) {
        self.encode_symbol(cdf, symbol)
    }
    #[inline]
    fn bit(&mut self, bit: bool) {
        self.encode_bit(bit)
    }
    fn literal(&mut self, value: u32, bits: u32) {
        self.encode_literal(value, bits)
    }
    fn golomb(&mut self, value: u32) {
        self.encode_golomb(value)
    }
}

/// Rate estimator: sums `-log2 p` without touching the models.
#[derive(Clone, Copy, Debug, Default)]
pub struct BitCounter {
    pub bits: f32,
}

impl BitCounter {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SymbolSink for BitCounter {
    #[inline]
    fn symbol(&mut self, cdf: &mut Cdf, symbol: usize) {
        self.bits += cdf.cost(symbol);
    }
    #[inline]
    fn bit(&mut self, _bit: bool) {
        self.bits += 1.0;
    }
    #[inline]
    fn literal(&mut self, _value: u32, bits: u32) {
        self.bits += bits as f32;
    }
    #[inline]
    fn golomb(&mut self, value: u32) {
        let len = 64 - (value as u64 + 1).leading_zeros();
        self.bits += (2 * len - 1) as f32;
    }
}

/// Empirical (zeroth-order) entropy of a symbol sequence in bits.
pub fn empirical_entropy_bits(symbols: &[usize], alphabet: usize) -> f64 {
    let mut counts = vec![0usize; alphabet];
    for &s in symbols {
        counts[s] += 1;
    }
    let n = symbols.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -(c as f64) * p.log2()
        })
        .sum()
}
