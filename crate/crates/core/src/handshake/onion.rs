//! Layered encryption. Keys are ordered from the first hop (outermost
//! layer) to the last hop (innermost layer); each relay removes one layer.

use rand::RngCore;

use super::HandshakeError;
use crate::crypto::aead::open_bytes;
use crate::crypto::{seal, Sealed, SymmetricKey};

/// Seals `cell` for the last key, then wraps outward.
pub fn onion_wrap<R: RngCore + ?Sized>(keys: &[SymmetricKey], cell: &[u8], rng: &mut R) -> Vec<u8> {
    let mut out = cell.to_vec();
    for key in keys.iter().rev() {
        out = seal(key, &out, rng).into_bytes();
    }
    out
}

/// Wraps an innermost layer that the caller already sealed (for example
/// with a sequence nonce) in the layers for `outer_keys`.
pub fn onion_wrap_sealed<R: RngCore + ?Sized>(
    outer_keys: &[SymmetricKey],
    inner: Sealed,
    rng: &mut R,
) -> Vec<u8> {
    onion_wrap(outer_keys, inner.as_bytes(), rng)
}

/// Removes one layer.
pub fn onion_unwrap(key: &SymmetricKey, bytes: &[u8]) -> Result<Vec<u8>, HandshakeError> {
    open_bytes(key, bytes).map_err(|_| HandshakeError::Auth)
}

/// Removes the layers for `keys`, outermost first.
pub fn onion_peel(keys: &[SymmetricKey], bytes: &[u8]) -> Result<Vec<u8>, HandshakeError> {
    keys.iter()
        .try_fold(bytes.to_vec(), |acc, k| onion_unwrap(k, &acc))
}
