//! Plain MSB-first bit packing for fixed header fields.

use super::BitioError;

#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    nbits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_bit(&mut self, bit: bool) {
        if self.nbits % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.nbits % 8);
        }
        self.nbits += 1;
    }

    pub fn put_bits(&mut self, value: u32, bits: u32) {
        for i in (0..bits).rev() {
            self.put_bit((value >> i) & 1 != 0);
        }
    }

    /// Order-0 Exp-Golomb.
    pub fn put_golomb(&mut self, value: u32) {
        let v = value as u64 + 1;
        let len = 64 - v.leading_zeros();
        for _ in 1..len {
            self.put_bit(false);
        }
        for i in (0..len).rev() {
            self.put_bit((v >> i) & 1 != 0);
        }
    }

    pub fn bit_len(&self) -> usize {
        self.nbits
    }

    /// Returns the packed bytes, zero-padded to a byte boundary.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0 }
    }

    pub fn get_bit(&mut self) -> Result<bool, BitioError> {
        let byte = *self
            .data
            .get(self.pos / 8)
            .ok_or(BitioError::Truncated { offset: self.pos / 8 })?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn get_bits(&mut self, bits: u32) -> Result<u32, BitioError> {
        let mut v = 0;
        for _ in 0..bits {
            v = (v << 1) | self.get_bit()? as u32;
        }
        Ok(v)
    }

    pub fn get_golomb(&mut self, max_prefix: u32) -> Result<u32, BitioError> {
        let mut zeros = 0;
        while !self.get_bit()? {
            zeros += 1;
            if zeros > max_prefix {
                return Err(BitioError::Malformed { offset: self.pos / 8, what: "golomb prefix" });
            }
        }
        let mut v = 1u64;
        for _ in 0..zeros {
            v = (v << 1) | self.get_bit()? as u64;
        }
        Ok((v - 1) as u32)
    }

    /// Bytes consumed, counting a partially read byte as whole.
    pub fn byte_len(&self) -> usize {
        self.pos.div_ceil(8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golomb_codes() {
        let mut w = BitWriter::new();
        w.put_golomb(0);
        w.put_golomb(1);
        w.put_golomb(2);
        w.put_golomb(7);
        // 1 | 010 | 011 | 0001000
        assert_eq!(w.bit_len(), 1 + 3 + 3 + 7);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.get_golomb(20).unwrap(), 0);
        assert_eq!(r.get_golomb(20).unwrap(), 1);
        assert_eq!(r.get_golomb(20).unwrap(), 2);
        assert_eq!(r.get_golomb(20).unwrap(), 7);
        assert_eq!(r.byte_len(), 2);
    }

    #[test]
    fn reading_past_end_fails() {
        let mut r = BitReader::new(&[0xff]);
        assert_eq!(r.get_bits(8).unwrap(), 0xff);
        assert!(r.get_bit().is_err());
    }
}
