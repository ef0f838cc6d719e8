//! Most-significant-bit-first bit stream writer and reader.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "value does not fit in {width} bits");
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            if self.len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.len() - 1;
                self.bytes[last] |= 0x80 >> (self.len % 8);
            }
            self.len += 1;
        }
    }

    /// The written bits, zero-padded to a byte boundary.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        if (width as usize) > self.remaining() {
            return Err(Error::Decode("truncated bit stream".to_string()));
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    /// Checks that every remaining bit is zero padding within the final byte.
    pub fn finish(self) -> Result<()> {
        if self.remaining() >= 8 {
            return Err(Error::Decode("trailing bytes after the last sub-signal".to_string()));
        }
        let mut rest = self;
        while rest.remaining() > 0 {
            if rest.read(1)? != 0 {
                return Err(Error::Decode("non-zero padding".to_string()));
            }
        }
        Ok(())
    }
}
