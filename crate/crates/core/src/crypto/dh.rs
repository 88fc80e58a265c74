//! Diffie-Hellman shares and ephemeral-DH hybrid encryption.

use rand::RngCore;

use super::aead::{open_sealed, seal, Sealed};
use super::group::{GroupElement, GroupParams, Scalar};
use super::{derive_keys, CryptoError};
use crate::encoding::{DecodeError, Decoder, Encoder};

/// `x` uniform in `[1, q)` and `X = g^x`.
pub fn dh_keygen<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> (Scalar, GroupElement) {
    let x = params.random_nonzero_scalar(rng);
    let big_x = params.g_pow(&x);
    (x, big_x)
}

/// `K = Y^x`. Subgroup membership is guaranteed by the element type; the
/// identity is rejected since it would fix the shared value.
pub fn dh_shared(
    params: &GroupParams,
    x: &Scalar,
    peer: &GroupElement,
) -> Result<GroupElement, CryptoError> {
    if *peer == params.identity() {
        return Err(CryptoError::Subgroup);
    }
    Ok(params.pow(peer, x))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridCiphertext {
    pub ephemeral: GroupElement,
    pub sealed: Sealed,
}

impl HybridCiphertext {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.ephemeral);
        enc.bytes(self.sealed.as_bytes());
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            ephemeral: params.get_element(dec)?,
            sealed: Sealed::from_bytes(dec.bytes()?.to_vec()),
        })
    }

    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(params, &mut enc);
        enc.finish()
    }
}

fn hybrid_transcript(
    params: &GroupParams,
    ephemeral: &GroupElement,
    recipient: &GroupElement,
) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(b"hybrid");
    params.put_element(&mut enc, ephemeral);
    params.put_element(&mut enc, recipient);
    enc.finish()
}

pub fn hybrid_encrypt<R: RngCore + ?Sized>(
    params: &GroupParams,
    recipient: &GroupElement,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<HybridCiphertext, CryptoError> {
    let (e, ephemeral) = dh_keygen(params, rng);
    let shared = dh_shared(params, &e, recipient)?;
    let (key, _) = derive_keys(
        params,
        &shared,
        &hybrid_transcript(params, &ephemeral, recipient),
    );
    Ok(HybridCiphertext {
        sealed: seal(&key, plaintext, rng),
        ephemeral,
    })
}

pub fn hybrid_decrypt(
    params: &GroupParams,
    secret: &Scalar,
    ct: &HybridCiphertext,
) -> Result<Vec<u8>, CryptoError> {
    let shared = dh_shared(params, secret, &ct.ephemeral)?;
    let recipient = params.g_pow(secret);
    let (key, _) = derive_keys(
        params,
        &shared,
        &hybrid_transcript(params, &ct.ephemeral, &recipient),
    );
    open_sealed(&key, &ct.sealed)
}
