//! Canonical byte encoding shared by hashing, the wire format and files.
//!
//! Every field is written as a big-endian `u32` length followed by the field
//! bytes. Group elements and scalars are fixed-width big-endian integers whose
//! width is set by the group parameters; composite values are the ordered
//! concatenation of their fields.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("input truncated")]
    Truncated,
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
    #[error("field has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("value is not a member of the prime-order subgroup")]
    NotInSubgroup,
    #[error("scalar is not reduced")]
    ScalarRange,
    #[error("bad magic header")]
    Magic,
    #[error("unsupported format version {0}")]
    Version(u8),
    #[error("unknown tag {0:#04x}")]
    UnknownTag(u8),
    #[error("invalid value: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one length-prefixed field.
    pub fn bytes(&mut self, field: &[u8]) -> &mut Self {
        let len = u32::try_from(field.len()).expect("field longer than u32::MAX");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(field);
        self
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.bytes(&[v])
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    /// Fixed-width big-endian integer, left-padded with zeros.
    pub fn uint(&mut self, v: &BigUint, width: usize) -> &mut Self {
        self.bytes(&to_fixed_width(v, width))
    }

    /// Variable-width big-endian integer (minimal encoding).
    pub fn uint_var(&mut self, v: &BigUint) -> &mut Self {
        self.bytes(&v.to_bytes_be())
    }

    /// Raw bytes with no length prefix. Only used for headers and tags.
    pub fn raw(&mut self, data: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(data);
        self
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub fn to_fixed_width(v: &BigUint, width: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    assert!(raw.len() <= width, "integer wider than its declared field");
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    buf: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < 4 {
            return Err(DecodeError::Truncated);
        }
        let len = u32::from_be_bytes(self.buf[..4].try_into().unwrap()) as usize;
        let rest = &self.buf[4..];
        if rest.len() < len {
            return Err(DecodeError::Truncated);
        }
        let (field, tail) = rest.split_at(len);
        self.buf = tail;
        Ok(field)
    }

    pub fn fixed<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let field = self.bytes()?;
        field.try_into().map_err(|_| DecodeError::Length {
            got: field.len(),
            expected: N,
        })
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.fixed::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.fixed()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.fixed()?))
    }

    pub fn uint(&mut self, width: usize) -> Result<BigUint, DecodeError> {
        let field = self.bytes()?;
        if field.len() != width {
            return Err(DecodeError::Length {
                got: field.len(),
                expected: width,
            });
        }
        Ok(BigUint::from_bytes_be(field))
    }

    pub fn uint_var(&mut self) -> Result<BigUint, DecodeError> {
        Ok(BigUint::from_bytes_be(self.bytes()?))
    }

    pub fn raw(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(DecodeError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    /// Reads a `u32` element count and bounds it by the remaining input, so a
    /// hostile count cannot trigger a huge allocation.
    pub fn count(&mut self) -> Result<usize, DecodeError> {
        let n = self.u32()? as usize;
        if n > self.buf.len() / 4 {
            return Err(DecodeError::Truncated);
        }
        Ok(n)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}
