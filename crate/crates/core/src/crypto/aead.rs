//! Symmetric authenticated encryption and session-key derivation.
//!
//! Encrypt-then-MAC: the keystream is SHA-256 in counter mode over
//! `(enc_key, nonce, block)`, and the tag is HMAC-SHA256 over `nonce || ct`.
//! Sealed layout: `nonce (16) || ciphertext || tag (32)`.

use hmac::{Hmac, KeyInit, Mac};
use rand::RngCore;
use sha2::Sha256;

use super::group::{GroupElement, GroupParams};
use super::hash::{hash, Digest};
use super::CryptoError;

pub const NONCE_LEN: usize = 16;
pub const TAG_LEN: usize = 32;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymmetricKey([u8; 32]);

impl std::fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

impl SymmetricKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        Self(k)
    }

    fn enc_key(&self) -> Digest {
        hash(b"aead-enc", &self.0)
    }

    fn mac_key(&self) -> Digest {
        hash(b"aead-mac", &self.0)
    }
}

/// `nonce || ciphertext || tag`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Sealed(Vec<u8>);

impl Sealed {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Deterministic nonce for the `seq`-th message of a logged stream.
pub fn sequence_nonce(seq: u64) -> [u8; NONCE_LEN] {
    let mut nonce = [0u8; NONCE_LEN];
    nonce[..4].copy_from_slice(b"seq:");
    nonce[8..].copy_from_slice(&seq.to_be_bytes());
    nonce
}

fn keystream_xor(enc_key: &Digest, nonce: &[u8], data: &mut [u8]) {
    let mut block_input = [0u8; 32 + NONCE_LEN + 8];
    block_input[..32].copy_from_slice(enc_key);
    block_input[32..32 + NONCE_LEN].copy_from_slice(nonce);
    for (i, chunk) in data.chunks_mut(32).enumerate() {
        block_input[32 + NONCE_LEN..].copy_from_slice(&(i as u64).to_be_bytes());
        let ks = hash(b"aead-stream", &block_input);
        for (b, k) in chunk.iter_mut().zip(ks.iter()) {
            *b ^= k;
        }
    }
}

fn mac(key: &SymmetricKey) -> Hmac<Sha256> {
    <Hmac<Sha256> as KeyInit>::new_from_slice(&key.mac_key()).expect("hmac accepts any key length")
}

pub fn seal_with_nonce(key: &SymmetricKey, nonce: [u8; NONCE_LEN], plaintext: &[u8]) -> Sealed {
    let mut out = Vec::with_capacity(NONCE_LEN + plaintext.len() + TAG_LEN);
    out.extend_from_slice(&nonce);
    out.extend_from_slice(plaintext);
    keystream_xor(&key.enc_key(), &nonce, &mut out[NONCE_LEN..]);
    let mut m = mac(key);
    m.update(&out);
    out.extend_from_slice(&m.finalize().into_bytes());
    Sealed(out)
}

pub fn seal<R: RngCore + ?Sized>(key: &SymmetricKey, plaintext: &[u8], rng: &mut R) -> Sealed {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    seal_with_nonce(key, nonce, plaintext)
}

pub fn open_sealed(key: &SymmetricKey, sealed: &Sealed) -> Result<Vec<u8>, CryptoError> {
    open_bytes(key, &sealed.0)
}

pub fn open_bytes(key: &SymmetricKey, sealed: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if sealed.len() < NONCE_LEN + TAG_LEN {
        return Err(CryptoError::Auth);
    }
    let (body, tag) = sealed.split_at(sealed.len() - TAG_LEN);
    let mut m = mac(key);
    m.update(body);
    m.verify_slice(tag).map_err(|_| CryptoError::Auth)?;
    let (nonce, ct) = body.split_at(NONCE_LEN);
    let mut pt = ct.to_vec();
    keystream_xor(&key.enc_key(), nonce, &mut pt);
    Ok(pt)
}

/// Session key and key-confirmation digest from a DH result and the
/// handshake transcript:
/// `key = H("key", enc(K) || hs)`, `confirmation = H("confirm", enc(K) || hs)`.
pub fn derive_keys(
    params: &GroupParams,
    shared: &GroupElement,
    transcript: &[u8],
) -> (SymmetricKey, Digest) {
    let mut input = params.element_bytes(shared);
    input.extend_from_slice(transcript);
    (SymmetricKey(hash(b"key", &input)), hash(b"confirm", &input))
}
