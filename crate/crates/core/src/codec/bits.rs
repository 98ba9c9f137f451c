//! MSB-first bit packing.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, count: u32) {
        debug_assert!(count <= 56);
        if count == 0 {
            return;
        }
        let masked = value & ((1u64 << count) - 1);
        self.acc = (self.acc << count) | masked;
        self.nbits += count;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.bytes.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    /// Pads the last partial byte with zero bits.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.bytes.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.bytes
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<u32> {
        let byte = self
            .bytes
            .get(self.pos / 8)
            .ok_or_else(|| Error::Decode("bitstream truncated".into()))?;
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(u32::from(bit))
    }

    pub fn read(&mut self, count: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..count {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    /// Bytes consumed so far, counting a partially read byte as consumed.
    pub fn bytes_consumed(&self) -> usize {
        self.pos.div_ceil(8)
    }
}
