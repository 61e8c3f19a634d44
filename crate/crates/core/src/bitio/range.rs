//! Byte-oriented range coder driven by 15-bit cumulative frequencies.
//!
//! The encoder keeps a 32-bit range of at least 2^24 and propagates carries
//! into bytes held back in a pending run of 0xFF bytes.

use super::cdf::{Cdf, CDF_PRECISION, CDF_TOTAL};
use super::BitioError;

const TOP: u32 = 1 << 24;

/// Encoder half of the range coder.
#[derive(Clone, Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    /// Last byte not yet emitted, since a carry may still reach it.
    cache: u8,
    /// Bytes held back: the cache followed by `pending - 1` 0xFF bytes.
    pending: usize,
    /// The first byte of the value is always zero and is never written.
    started: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder { low: 0, range: u32::MAX, cache: 0, pending: 1, started: false, out: Vec::new() }
    }

    #[inline]
    fn encode_interval(&mut self, lo: u32, hi: u32) {
        debug_assert!(lo < hi && hi <= CDF_TOTAL as u32);
        let r = self.range >> CDF_PRECISION;
        self.low += (r * lo) as u64;
        // The top symbol absorbs the truncation remainder.
        self.range = if hi == CDF_TOTAL as u32 { self.range - r * lo } else { r * (hi - lo) };
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            for _ in 0..self.pending {
                if self.started {
                    self.out.push(byte.wrapping_add(carry));
                }
                self.started = true;
                byte = 0xFF;
            }
            self.pending = 0;
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    /// Codes `symbol` with `cdf` and adapts the model.
    #[inline]
    pub fn encode_symbol(&mut self, cdf: &mut Cdf, symbol: usize) {
        let (lo, hi) = cdf.interval(symbol);
        self.encode_interval(lo, hi);
        cdf.update(symbol);
    }

    /// Codes `symbol` with a fixed model.
    #[inline]
    pub fn encode_static(&mut self, cdf: &Cdf, symbol: usize) {
        let (lo, hi) = cdf.interval(symbol);
        self.encode_interval(lo, hi);
    }

    /// Equiprobable bit.
    #[inline]
    pub fn encode_bit(&mut self, bit: bool) {
        let half = CDF_TOTAL as u32 / 2;
        if bit {
            self.encode_interval(half, CDF_TOTAL as u32)
        } else {
            self.encode_interval(0, half)
        }
    }

    /// `bits` equiprobable bits of `value`, most significant first.
    pub fn encode_literal(&mut self, value: u32, bits: u32) {
        for i in (0..bits).rev() {
            self.encode_bit((value >> i) & 1 != 0);
        }
    }

    /// Order-0 Exp-Golomb code of `value` using equiprobable bits.
    pub fn encode_golomb(&mut self, value: u32) {
        let v = value as u64 + 1;
        let len = 64 - v.leading_zeros();
        for _ in 1..len {
            self.encode_bit(false);
        }
        for i in (0..len).rev() {
            self.encode_bit((v >> i) & 1 != 0);
        }
    }

    /// Bytes emitted so far, excluding the pending state.
    pub fn bytes_so_far(&self) -> usize {
        self.out.len()
    }

    /// Flushes the coder state and returns the payload.
    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

/// Decoder half of the range coder.
#[derive(Clone, Debug)]
pub struct RangeDecoder<'a> {
    range: u32,
    /// Offset of the coded value from the bottom of the current interval.
    code: u32,
    data: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self, BitioError> {
        if data.len() < 4 {
            return Err(BitioError::Truncated { offset: data.len() });
        }
        let code = u32::from_be_bytes([data[0], data[1], data[2], data[3]]);
        Ok(RangeDecoder { range: u32::MAX, code, data, pos: 4 })
    }

    /// Byte offset of the next unread byte.
    pub fn position(&self) -> usize {
        self.pos
    }

    #[inline]
    fn target(&self) -> (u32, u32) {
        let r = self.range >> CDF_PRECISION;
        (r, (self.code / r).min(CDF_TOTAL as u32 - 1))
    }

    #[inline]
    fn consume(&mut self, r: u32, lo: u32, hi: u32) -> Result<(), BitioError> {
        self.code -= r * lo;
        self.range = if hi == CDF_TOTAL as u32 { self.range - r * lo } else { r * (hi - lo) };
        while self.range < TOP {
            let byte = *self
                .data
                .get(self.pos)
                .ok_or(BitioError::Truncated { offset: self.pos })?;
            self.pos += 1;
            self.code = (self.code << 8) | byte as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    /// Decodes one symbol and applies the same adaptation as the encoder.
    #[inline]
    pub fn decode_symbol(&mut self, cdf: &mut Cdf) -> Result<usize, BitioError> {
        let s = self.decode_static(cdf)?;
        cdf.update(s);
        Ok(s)
    }

    /// Decodes one symbol with a fixed model.
    #[inline]
    pub fn decode_static(&mut self, cdf: &Cdf) -> Result<usize, BitioError> {
        let (r, t) = self.target();
        let s = cdf.find(t);
        let (lo, hi) = cdf.interval(s);
        self.consume(r, lo, hi)?;
        Ok(s)
    }

    #[inline]
    pub fn decode_bit(&mut self) -> Result<bool, BitioError> {
        let half = CDF_TOTAL as u32 / 2;
        let (r, t) = self.target();
        if t >= half {
            self.consume(r, half, CDF_TOTAL as u32)?;
            Ok(true)
        } else {
            self.consume(r, 0, half)?;
            Ok(false)
        }
    }

    pub fn decode_literal(&mut self, bits: u32) -> Result<u32, BitioError> {
        let mut v = 0u32;
        for _ in 0..bits {
            v = (v << 1) | self.decode_bit()? as u32;
        }
        Ok(v)
    }

    /// Inverse of [`RangeEncoder::encode_golomb`]; rejects prefixes longer
    /// than `max_prefix` zeros.
    pub fn decode_golomb(&mut self, max_prefix: u32) -> Result<u32, BitioError> {
        let mut zeros = 0;
        while !self.decode_bit()? {
            zeros += 1;
            if zeros > max_prefix {
                return Err(BitioError::Malformed { offset: self.pos, what: "golomb prefix" });
            }
        }
        let mut v = 1u64;
        for _ in 0..zeros {
            v = (v << 1) | self.decode_bit()? as u64;
        }
        Ok((v - 1) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fair_coin_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut enc = RangeEncoder::new();
        let mut cdf = Cdf::uniform(2);
        let syms: Vec<usize> = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        for &s in &syms {
            enc.encode_symbol(&mut cdf, s);
        }
        let bits = enc.finish().len() * 8;
        assert!((1000..=1040).contains(&bits), "{bits} bits");
    }

    #[test]
    fn sixteen_symbol_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut enc = RangeEncoder::new();
        let mut cdf = Cdf::uniform(16);
        for _ in 0..1000 {
            enc.encode_symbol(&mut cdf, rng.gen_range(0..16));
        }
        let bits = enc.finish().len() * 8;
        assert!((4000..=4100).contains(&bits), "{bits} bits");
    }

    #[test]
    fn empty_payload_is_truncated() {
        assert!(matches!(RangeDecoder::new(&[]), Err(BitioError::Truncated { .. })));
    }

    #[test]
    fn truncated_stream_errors() {
        let mut enc = RangeEncoder::new();
        let mut cdf = Cdf::uniform(16);
        for i in 0..400 {
            enc.encode_symbol(&mut cdf, i % 16);
        }
        let bytes = enc.finish();
        let cut = &bytes[..bytes.len() / 2];
        let mut dec = RangeDecoder::new(cut).unwrap();
        let mut cdf = Cdf::uniform(16);
        let res: Result<Vec<_>, _> = (0..400).map(|_| dec.decode_symbol(&mut cdf)).collect();
        assert!(matches!(res, Err(BitioError::Truncated { .. })));
    }

    #[test]
    fn mixed_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut enc = RangeEncoder::new();
        let mut cdfs = [Cdf::uniform(3), Cdf::uniform(16)];
        let mut log = Vec::new();
        for _ in 0..5000 {
            match rng.gen_range(0..4) {
                0 => {
                    let s = rng.gen_range(0..3);
                    enc.encode_symbol(&mut cdfs[0], s);
                    log.push((0, s as u32));
                }
                1 => {
                    let s = rng.gen_range(0..16);
                    enc.encode_symbol(&mut cdfs[1], s);
                    log.push((1, s as u32));
                }
                2 => {
                    let v = rng.gen_range(0..1000);
                    enc.encode_golomb(v);
                    log.push((2, v));
                }
                _ => {
                    let v = rng.gen_range(0..64);
                    enc.encode_literal(v, 6);
                    log.push((3, v));
                }
            }
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        let mut dcdfs = [Cdf::uniform(3), Cdf::uniform(16)];
        for &(kind, v) in &log {
            let got = match kind {
                0 => dec.decode_symbol(&mut dcdfs[0]).unwrap() as u32,
                1 => dec.decode_symbol(&mut dcdfs[1]).unwrap() as u32,
                2 => dec.decode_golomb(32).unwrap(),
                _ => dec.decode_literal(6).unwrap(),
            };
            assert_eq!(got, v);
        }
        assert_eq!(cdfs, dcdfs);
        assert_eq!(dec.position(), bytes.len());
    }
}
