//! MSB-first packed bit sequences.

use crate::error::{Error, Result};

/// Packed bits, MSB-first within each byte. Padding bits in the last byte are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl Bitstream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps packed bytes; fails if the byte count or padding disagrees with `bit_len`.
    pub fn from_bytes(bytes: Vec<u8>, bit_len: u64) -> Result<Self> {
        if bytes.len() as u64 != bit_len.div_ceil(8) {
            return Err(Error::Corruption(format!(
                "{} bytes cannot hold exactly {bit_len} bits",
                bytes.len()
            )));
        }
        let pad = (bytes.len() as u64 * 8 - bit_len) as u32;
        if pad > 0 && bytes.last().unwrap() & ((1u8 << pad) - 1) != 0 {
            return Err(Error::Corruption("nonzero padding bits".into()));
        }
        Ok(Self { bytes, bit_len })
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bit(&self, i: u64) -> bool {
        debug_assert!(i < self.bit_len);
        (self.bytes[(i / 8) as usize] >> (7 - (i % 8))) & 1 == 1
    }

    /// Reads `n` (≤ 64) bits starting at bit `pos`, zero-filling past the end.
    pub fn peek(&self, pos: u64, n: u32) -> u64 {
        debug_assert!(n <= 64);
        let mut out = 0u64;
        let mut got = 0u32;
        let mut p = pos;
        while got < n {
            let byte_idx = (p / 8) as usize;
            let byte = self.bytes.get(byte_idx).copied().unwrap_or(0);
            let off = (p % 8) as u32;
            let avail = 8 - off;
            let take = avail.min(n - got);
            let chunk = ((byte as u64) >> (avail - take)) & ((1u64 << take) - 1);
            out = (out << take) | chunk;
            got += take;
            p += take as u64;
        }
        if pos >= self.bit_len {
            return 0;
        }
        if pos + n as u64 > self.bit_len {
            // mask bits beyond the logical end
            let valid = (self.bit_len - pos) as u32;
            let drop = n - valid;
            return (out >> drop) << drop;
        }
        out
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader { bits: self, pos: 0 }
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    acc_bits: u32,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity_bits(bits: u64) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8) as usize),
            ..Self::default()
        }
    }

    /// Appends the low `len` bits of `value`, most significant first. `len` ≤ 56.
    pub fn write(&mut self, value: u64, len: u32) {
        debug_assert!(len <= 56);
        if len == 0 {
            return;
        }
        debug_assert!(len == 64 || value >> len == 0);
        self.acc = (self.acc << len) | value;
        self.acc_bits += len;
        self.bit_len += len as u64;
        while self.acc_bits >= 8 {
            self.acc_bits -= 8;
            self.bytes.push((self.acc >> self.acc_bits) as u8);
        }
        self.acc &= (1u64 << self.acc_bits) - 1;
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn finish(mut self) -> Bitstream {
        if self.acc_bits > 0 {
            self.bytes.push((self.acc << (8 - self.acc_bits)) as u8);
        }
        Bitstream {
            bytes: self.bytes,
            bit_len: self.bit_len,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bits: &'a Bitstream,
    pos: u64,
}

impl BitReader<'_> {
    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bits.bit_len - self.pos
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.bits.bit_len {
            return None;
        }
        let b = self.bits.bit(self.pos);
        self.pos += 1;
        Some(b)
    }

    pub fn read(&mut self, n: u32) -> Option<u64> {
        if self.remaining() < n as u64 {
            return None;
        }
        let v = self.bits.peek(self.pos, n);
        self.pos += n as u64;
        Some(v)
    }
}
