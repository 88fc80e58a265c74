//! Domain-separated SHA-256.

use sha2::{Digest as _, Sha256};

pub type Digest = [u8; 32];

/// SHA-256 over `len(label) || label || data`, with a 4-byte big-endian length.
pub fn hash(label: &[u8], data: &[u8]) -> Digest {
    let mut h = Sha256::new();
    let len = u32::try_from(label.len()).expect("label longer than u32::MAX");
    h.update(len.to_be_bytes());
    h.update(label);
    h.update(data);
    h.finalize().into()
}

/// Counter-mode expansion: `hash(label, counter_be32 || data)` blocks,
/// concatenated and truncated to `len` bytes.
pub fn expand(label: &[u8], data: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter: u32 = 0;
    let mut block_input = Vec::with_capacity(4 + data.len());
    while out.len() < len {
        block_input.clear();
        block_input.extend_from_slice(&counter.to_be_bytes());
        block_input.extend_from_slice(data);
        out.extend_from_slice(&hash(label, &block_input));
        counter += 1;
    }
    out.truncate(len);
    out
}

/// Number of leading zero bits of a digest.
pub fn leading_zero_bits(d: &[u8]) -> u32 {
    let mut bits = 0;
    for &b in d {
        if b == 0 {
            bits += 8;
        } else {
            bits += b.leading_zeros();
            break;
        }
    }
    bits
}
