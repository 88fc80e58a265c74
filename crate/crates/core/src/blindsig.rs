//! Epoch-keyed RSA full-domain-hash blind signatures.
//!
//! A token for commitment `com` at epoch `e` is `FDH_e(com)^d mod n`, made
//! without the signer seeing `com`: the user sends `beta = FDH_e(com) * r^e`,
//! receives `beta^d`, and divides out `r`.

use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::RngCore;
use thiserror::Error;

use crate::crypto::commit::Commitment;
use crate::crypto::hash::{expand, hash, Digest};
use crate::crypto::prime::{mod_inverse, random_prime};
use crate::crypto::sigma::{schnorr_sign, schnorr_verify, SigmaProof};
use crate::crypto::{GroupElement, GroupParams, Scalar};
use crate::encoding::{DecodeError, Decoder, Encoder};

pub const DEFAULT_MODULUS_BITS: u64 = 1024;
pub const MIN_MODULUS_BITS: u64 = 1024;
pub const PUBLIC_EXPONENT: u32 = 65537;
/// Tokens from up to this many epochs back are accepted.
pub const DEFAULT_EPOCH_WINDOW: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlindSigError {
    #[error("no published key for epoch {0}")]
    UnknownEpoch(u64),
    #[error("token expired")]
    TokenExpired,
    #[error("token does not verify")]
    TokenInvalid,
    #[error("blinding factor is not invertible modulo n")]
    NonInvertible,
    #[error("modulus of {0} bits is below the minimum")]
    ModulusTooSmall(u64),
    #[error("value out of range for the modulus")]
    OutOfRange,
}

/// Published part of an epoch key.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpochPublicKey {
    pub epoch: u64,
    /// 0 for the shared entry-group key; otherwise identifies a node key.
    pub key_id: u64,
    pub n: BigUint,
    pub e: BigUint,
}

impl EpochPublicKey {
    pub fn modulus_len(&self) -> usize {
        self.n.bits().div_ceil(8) as usize
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.epoch)
            .u64(self.key_id)
            .uint_var(&self.n)
            .uint_var(&self.e);
    }

    pub fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let epoch = dec.u64()?;
        let key_id = dec.u64()?;
        let n = dec.uint_var()?;
        let e = dec.uint_var()?;
        if n.bits() < 8 || n.is_even() || e < BigUint::from(3u32) || e.is_even() {
            return Err(DecodeError::Invalid("rsa public key"));
        }
        Ok(Self {
            epoch,
            key_id,
            n,
            e,
        })
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(&mut enc);
        enc.finish()
    }
}

#[derive(Clone)]
pub struct EpochSignerKeys {
    public: EpochPublicKey,
    d: BigUint,
    p: BigUint,
    q: BigUint,
    dp: BigUint,
    dq: BigUint,
    q_inv: BigUint,
}

impl std::fmt::Debug for EpochSignerKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EpochSignerKeys")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl EpochSignerKeys {
    /// Fresh key of `bits` bits (at least [`MIN_MODULUS_BITS`]).
    pub fn generate<R: RngCore + ?Sized>(
        epoch: u64,
        key_id: u64,
        bits: u64,
        rng: &mut R,
    ) -> Result<Self, BlindSigError> {
        if bits < MIN_MODULUS_BITS {
            return Err(BlindSigError::ModulusTooSmall(bits));
        }
        let e = BigUint::from(PUBLIC_EXPONENT);
        loop {
            let p = random_prime(bits / 2, rng);
            let q = random_prime(bits - bits / 2, rng);
            if p == q {
                continue;
            }
            if let Some(keys) = Self::from_parts(epoch, key_id, p, q, e.clone()) {
                return Ok(keys);
            }
        }
    }

    /// Builds keys from known primes without any size check. Only for
    /// worked examples at toy sizes.
    #[doc(hidden)]
    pub fn insecure_from_primes(epoch: u64, p: u64, q: u64, e: u32) -> Option<Self> {
        Self::from_parts(epoch, 0, p.into(), q.into(), e.into())
    }

    fn from_parts(epoch: u64, key_id: u64, p: BigUint, q: BigUint, e: BigUint) -> Option<Self> {
        let n = &p * &q;
        let phi = (&p - 1u32) * (&q - 1u32);
        let d = mod_inverse(&e, &phi)?;
        let dp = &d % (&p - 1u32);
        let dq = &d % (&q - 1u32);
        let q_inv = mod_inverse(&q, &p)?;
        Some(Self {
            public: EpochPublicKey {
                epoch,
                key_id,
                n,
                e,
            },
            d,
            p,
            q,
            dp,
            dq,
            q_inv,
        })
    }

    pub fn public(&self) -> &EpochPublicKey {
        &self.public
    }

    pub fn epoch(&self) -> u64 {
        self.public.epoch
    }

    pub fn private_exponent(&self) -> &BigUint {
        &self.d
    }

    /// `x^d mod n` via CRT, checked against the public exponent.
    fn private_op(&self, x: &BigUint) -> BigUint {
        let mp = x.modpow(&self.dp, &self.p);
        let mq = x.modpow(&self.dq, &self.q);
        let diff = (&mp + &self.p - (&mq % &self.p)) % &self.p;
        let h = (&self.q_inv * diff) % &self.p;
        let s = mq + h * &self.q;
        let n = &self.public.n;
        if s.modpow(&self.public.e, n) == x % n {
            s
        } else {
            // A faulty CRT result would leak a factor; fall back to the
            // plain exponentiation.
            x.modpow(&self.d, n)
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.raw(b"FTBK").raw(&[1]);
        self.public.encode(&mut enc);
        enc.uint_var(&self.p).uint_var(&self.q);
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        if dec.raw(4)? != b"FTBK" {
            return Err(DecodeError::Magic);
        }
        match dec.raw(1)?[0] {
            1 => {}
            v => return Err(DecodeError::Version(v)),
        }
        let public = EpochPublicKey::decode(&mut dec)?;
        let p = dec.uint_var()?;
        let q = dec.uint_var()?;
        dec.finish()?;
        if &p * &q != public.n {
            return Err(DecodeError::Invalid("rsa factors"));
        }
        Self::from_parts(public.epoch, public.key_id, p, q, public.e)
            .ok_or(DecodeError::Invalid("rsa exponent"))
    }
}

/// Full-domain hash of `data` into `[0, n)` under epoch `e`: SHA-256 in
/// counter mode to the modulus width, top bits masked, rejection-sampled.
pub fn fdh(pk: &EpochPublicKey, data: &[u8]) -> BigUint {
    let label = format!("fdh/epoch/{}", pk.epoch);
    let bits = pk.n.bits();
    let len = bits.div_ceil(8) as usize;
    let excess = (len as u64 * 8 - bits) as u32;
    for attempt in 0u32.. {
        let mut enc = Encoder::new();
        enc.u32(attempt).u64(pk.key_id).uint_var(&pk.n).bytes(data);
        let mut bytes = expand(label.as_bytes(), enc.as_slice(), len);
        bytes[0] &= 0xff >> excess;
        let x = BigUint::from_bytes_be(&bytes);
        if x < pk.n {
            return x;
        }
    }
    unreachable!()
}

pub fn commitment_fdh(params: &GroupParams, pk: &EpochPublicKey, com: &Commitment) -> BigUint {
    fdh(pk, &params.element_bytes(com.element()))
}

/// Blinding factor `r` in `[2, n)` with `gcd(r, n) = 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct BlindingSecret(BigUint);

impl std::fmt::Debug for BlindingSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BlindingSecret(..)")
    }
}

impl BlindingSecret {
    pub fn random<R: RngCore + ?Sized>(pk: &EpochPublicKey, rng: &mut R) -> Self {
        let two = BigUint::from(2u32);
        loop {
            let r = rng.gen_biguint_range(&two, &pk.n);
            if r.gcd(&pk.n).is_one() {
                return Self(r);
            }
        }
    }

    pub fn from_value(pk: &EpochPublicKey, r: BigUint) -> Result<Self, BlindSigError> {
        if r < BigUint::from(2u32) || r >= pk.n {
            return Err(BlindSigError::OutOfRange);
        }
        Ok(Self(r))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlindedMessage(pub BigUint);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlindedSignature(pub BigUint);

/// Unblinded signature on a commitment, tagged with its epoch key.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlindToken {
    pub epoch: u64,
    pub key_id: u64,
    pub value: BigUint,
}

impl BlindToken {
    pub fn encode(&self, enc: &mut Encoder, pk: &EpochPublicKey) {
        enc.u64(self.epoch)
            .u64(self.key_id)
            .uint(&self.value, pk.modulus_len());
    }

    /// Reads epoch and key id first so the caller can pick the key; the
    /// value is read at variable width and range-checked at verification.
    pub fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            epoch: dec.u64()?,
            key_id: dec.u64()?,
            value: dec.uint_var()?,
        })
    }
}

/// `m * r^e mod n`.
pub fn blind_value(pk: &EpochPublicKey, m: &BigUint, r: &BlindingSecret) -> BigUint {
    (m * r.0.modpow(&pk.e, &pk.n)) % &pk.n
}

/// Digest binding a blinded value into the surrounding transcript.
pub fn blinding_binding(pk: &EpochPublicKey, beta: &BlindedMessage, transcript: &[u8]) -> Digest {
    let mut enc = Encoder::new();
    pk.encode(&mut enc);
    enc.uint(&beta.0, pk.modulus_len()).bytes(transcript);
    hash(b"blind-binding", enc.as_slice())
}

pub fn bgs_setup_epoch<R: RngCore + ?Sized>(epoch: u64, rng: &mut R) -> EpochSignerKeys {
    EpochSignerKeys::generate(epoch, 0, DEFAULT_MODULUS_BITS, rng)
        .expect("default width meets the minimum")
}

/// Blinds `com` for the key `pk`. Returns the blinded value, its binding to
/// `transcript`, and the secret needed to unblind.
pub fn bgs_blind<R: RngCore + ?Sized>(
    params: &GroupParams,
    com: &Commitment,
    pk: &EpochPublicKey,
    transcript: &[u8],
    rng: &mut R,
) -> (BlindedMessage, Digest, BlindingSecret) {
    let r = BlindingSecret::random(pk, rng);
    let beta = BlindedMessage(blind_value(pk, &commitment_fdh(params, pk, com), &r));
    let binding = blinding_binding(pk, &beta, transcript);
    (beta, binding, r)
}

/// `beta^d mod n`. The caller is responsible for deciding the request
/// deserves a signature.
pub fn bgs_sign_blinded(
    beta: &BlindedMessage,
    keys: &EpochSignerKeys,
) -> Result<BlindedSignature, BlindSigError> {
    if beta.0 >= keys.public.n {
        return Err(BlindSigError::OutOfRange);
    }
    Ok(BlindedSignature(keys.private_op(&beta.0)))
}

/// `beta~ * r^-1 mod n`.
pub fn bgs_unblind(
    sig: &BlindedSignature,
    r: &BlindingSecret,
    pk: &EpochPublicKey,
) -> Result<BlindToken, BlindSigError> {
    let r_inv = mod_inverse(&r.0, &pk.n).ok_or(BlindSigError::NonInvertible)?;
    Ok(BlindToken {
        epoch: pk.epoch,
        key_id: pk.key_id,
        value: (&sig.0 * r_inv) % &pk.n,
    })
}

/// RSA relation only, no epoch policy.
pub fn token_matches(pk: &EpochPublicKey, token: &BlindToken, fdh_value: &BigUint) -> bool {
    token.epoch == pk.epoch
        && token.key_id == pk.key_id
        && token.value < pk.n
        && &token.value.modpow(&pk.e, &pk.n) == fdh_value
}

/// Published epoch keys, indexed by `(epoch, key_id)`.
#[derive(Clone, Debug, Default)]
pub struct KeyRing {
    keys: BTreeMap<(u64, u64), EpochPublicKey>,
}

impl KeyRing {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pk: EpochPublicKey) {
        self.keys.insert((pk.epoch, pk.key_id), pk);
    }

    pub fn get(&self, epoch: u64, key_id: u64) -> Option<&EpochPublicKey> {
        self.keys.get(&(epoch, key_id))
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Drops keys for epochs older than `oldest`.
    pub fn prune_before(&mut self, oldest: u64) {
        self.keys.retain(|(e, _), _| *e >= oldest);
    }
}

/// Full token check: expiry, key lookup, RSA relation.
pub fn bgs_check(
    params: &GroupParams,
    token: &BlindToken,
    com: &Commitment,
    ring: &KeyRing,
    current_epoch: u64,
    window: u64,
) -> Result<(), BlindSigError> {
    if token.epoch <= current_epoch && current_epoch - token.epoch > window {
        return Err(BlindSigError::TokenExpired);
    }
    let pk = ring
        .get(token.epoch, token.key_id)
        .ok_or(BlindSigError::UnknownEpoch(token.epoch))?;
    if token.epoch > current_epoch || !token_matches(pk, token, &commitment_fdh(params, pk, com)) {
        return Err(BlindSigError::TokenInvalid);
    }
    Ok(())
}

/// Boolean form of [`bgs_check`]; only a missing epoch key is an error.
pub fn bgs_verify(
    params: &GroupParams,
    token: &BlindToken,
    com: &Commitment,
    ring: &KeyRing,
    current_epoch: u64,
    window: u64,
) -> Result<bool, BlindSigError> {
    match bgs_check(params, token, com, ring, current_epoch, window) {
        Ok(()) => Ok(true),
        Err(BlindSigError::UnknownEpoch(e)) => Err(BlindSigError::UnknownEpoch(e)),
        Err(_) => Ok(false),
    }
}

/// Epoch key as published by the directory, with the directory's Schnorr
/// signature over its canonical encoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochKeyRecord {
    pub key: EpochPublicKey,
    pub signature: SigmaProof,
}

impl EpochKeyRecord {
    fn message(key: &EpochPublicKey) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.bytes(b"epoch-key-record").bytes(&key.to_bytes());
        enc.finish()
    }

    pub fn sign<R: RngCore + ?Sized>(
        params: &GroupParams,
        directory_secret: &Scalar,
        key: EpochPublicKey,
        rng: &mut R,
    ) -> Self {
        let signature = schnorr_sign(params, directory_secret, &Self::message(&key), rng);
        Self { key, signature }
    }

    pub fn verify(&self, params: &GroupParams, directory_public: &GroupElement) -> bool {
        schnorr_verify(
            params,
            directory_public,
            &Self::message(&self.key),
            &self.signature,
        )
    }

    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        self.key.encode(enc);
        self.signature.encode(params, enc);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            key: EpochPublicKey::decode(dec)?,
            signature: SigmaProof::decode(params, dec)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::commit::commit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::OnceLock;

    /// Two 1024-bit epoch keys shared across tests (generation dominates).
    fn desk_keys() -> &'static [EpochSignerKeys; 2] {
        static KEYS: OnceLock<[EpochSignerKeys; 2]> = OnceLock::new();
        KEYS.get_or_init(|| {
            let mut rng = ChaCha20Rng::seed_from_u64(100);
            [bgs_setup_epoch(5, &mut rng), bgs_setup_epoch(6, &mut rng)]
        })
    }

    fn toy() -> EpochSignerKeys {
        EpochSignerKeys::insecure_from_primes(0, 11, 17, 3).unwrap()
    }

    fn random_com(rng: &mut ChaCha20Rng) -> Commitment {
        let params = GroupParams::desk();
        commit(
            &params,
            &params.random_scalar(rng),
            &params.random_scalar(rng),
        )
    }

    #[test]
    fn desk_keys_shape() {
        let [a, b] = desk_keys();
        assert_eq!(a.public().n.bits(), 1024);
        assert_ne!(a.public().n, b.public().n);
        let probe = BigUint::from(123456789u64);
        let s = a.private_op(&probe);
        assert_eq!(s.modpow(&a.public().e, &a.public().n), probe);
        assert_eq!(
            EpochSignerKeys::generate(0, 0, 512, &mut ChaCha20Rng::seed_from_u64(1)).unwrap_err(),
            BlindSigError::ModulusTooSmall(512)
        );
    }

    #[test]
    fn round_trip_and_epochs() {
        let params = GroupParams::desk();
        let [k5, k6] = desk_keys();
        let mut ring = KeyRing::new();
        ring.insert(k5.public().clone());
        ring.insert(k6.public().clone());
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let com = random_com(&mut rng);
        let (beta, _, r) = bgs_blind(&params, &com, k5.public(), b"t", &mut rng);
        let sig = bgs_sign_blinded(&beta, k5).unwrap();
        assert_eq!(sig.0.modpow(&k5.public().e, &k5.public().n), beta.0);
        assert_eq!(bgs_sign_blinded(&beta, k5).unwrap(), sig);
        let token = bgs_unblind(&sig, &r, k5.public()).unwrap();
        assert_eq!(bgs_verify(&params, &token, &com, &ring, 5, 1), Ok(true));
        assert_eq!(bgs_verify(&params, &token, &com, &ring, 6, 1), Ok(true));
        assert_eq!(
            bgs_check(&params, &token, &com, &ring, 7, 1),
            Err(BlindSigError::TokenExpired)
        );
        // Same value relabelled to the other epoch.
        let relabelled = BlindToken {
            epoch: 6,
            ..token.clone()
        };
        assert_eq!(
            bgs_verify(&params, &relabelled, &com, &ring, 6, 1),
            Ok(false)
        );
        // Other commitment.
        let other = random_com(&mut rng);
        assert_eq!(bgs_verify(&params, &token, &other, &ring, 5, 1), Ok(false));
        // Missing key.
        let orphan = BlindToken {
            epoch: 4,
            ..token.clone()
        };
        assert_eq!(
            bgs_verify(&params, &orphan, &com, &ring, 5, 1),
            Err(BlindSigError::UnknownEpoch(4))
        );
        // Bit flip.
        let mut flipped = token.clone();
        flipped.value ^= BigUint::one() << 17u32;
        assert_eq!(bgs_verify(&params, &flipped, &com, &ring, 5, 1), Ok(false));
        // Wrong blinding secret.
        let wrong = BlindingSecret::random(k5.public(), &mut rng);
        let bad = bgs_unblind(&sig, &wrong, k5.public()).unwrap();
        assert_eq!(bgs_verify(&params, &bad, &com, &ring, 5, 1), Ok(false));
    }

    #[test]
    fn tokens_independent_of_blinding() {
        let params = GroupParams::desk();
        let k = &desk_keys()[0];
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let com = random_com(&mut rng);
        let (b1, _, r1) = bgs_blind(&params, &com, k.public(), b"", &mut rng);
        let (b2, _, r2) = bgs_blind(&params, &com, k.public(), b"", &mut rng);
        assert_ne!(b1, b2);
        let t1 = bgs_unblind(&bgs_sign_blinded(&b1, k).unwrap(), &r1, k.public()).unwrap();
        let t2 = bgs_unblind(&bgs_sign_blinded(&b2, k).unwrap(), &r2, k.public()).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn blinded_values_share_no_bytes_with_com_or_token() {
        let params = GroupParams::desk();
        let k = &desk_keys()[0];
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let com = random_com(&mut rng);
            let (beta, _, r) = bgs_blind(&params, &com, k.public(), b"", &mut rng);
            let sig = bgs_sign_blinded(&beta, k).unwrap();
            let token = bgs_unblind(&sig, &r, k.public()).unwrap();
            let hidden = [
                params.element_bytes(com.element()),
                token.value.to_bytes_be(),
            ];
            let seen = [beta.0.to_bytes_be(), sig.0.to_bytes_be()];
            for h in &hidden {
                for window in h.windows(8) {
                    assert!(seen.iter().all(|s| !s.windows(8).any(|w| w == window)));
                }
            }
        }
    }

    #[test]
    fn fdh_in_range_and_epoch_separated() {
        let k = toy();
        let other = EpochSignerKeys::insecure_from_primes(1, 11, 17, 3).unwrap();
        let mut same = 0;
        for i in 0u32..200 {
            let a = fdh(k.public(), &i.to_be_bytes());
            assert!(a < k.public().n);
            if a == fdh(other.public(), &i.to_be_bytes()) {
                same += 1;
            }
        }
        // Collisions at n = 187 occur at rate about 1/187.
        assert!(same < 10);
    }

    #[test]
    fn toy_worked_example() {
        let k = toy();
        let pk = k.public();
        assert_eq!(k.private_exponent(), &BigUint::from(107u32));
        let r = BlindingSecret::from_value(pk, 5u32.into()).unwrap();
        let beta = blind_value(pk, &BigUint::from(42u32), &r);
        assert_eq!(beta, BigUint::from(14u32));
        let signed = bgs_sign_blinded(&BlindedMessage(beta), &k).unwrap();
        assert_eq!(signed.0, BigUint::from(163u32));
        let token = bgs_unblind(&signed, &r, pk).unwrap();
        assert_eq!(token.value, BigUint::from(70u32));
        assert!(token_matches(pk, &token, &BigUint::from(42u32)));
    }

    #[test]
    fn toy_unblind_non_invertible() {
        let k = toy();
        let r = BlindingSecret::from_value(k.public(), 11u32.into()).unwrap();
        assert_eq!(
            bgs_unblind(&BlindedSignature(1u32.into()), &r, k.public()),
            Err(BlindSigError::NonInvertible)
        );
    }

    /// Cubing mod 187 is a permutation, so each message has exactly one
    /// valid signature, and it is the one the signer produces.
    #[test]
    fn toy_unforgeability_exhaustive() {
        let k = toy();
        let pk = k.public();
        for m in 0u64..187 {
            let valid: Vec<u64> = (0u64..187)
                .filter(|&v| v * v % 187 * v % 187 == m)
                .collect();
            let signed = bgs_sign_blinded(&BlindedMessage(m.into()), &k).unwrap();
            assert_eq!(valid, vec![u64::try_from(&signed.0).unwrap()], "m = {m}");
            let token = BlindToken {
                epoch: 0,
                key_id: 0,
                value: signed.0,
            };
            assert!(token_matches(pk, &token, &BigUint::from(m)));
        }
    }

    /// For a fixed unit message and uniform units `r != 1`, `beta` is uniform
    /// over the 159 units other than the message itself.
    #[test]
    fn toy_blinded_values_uniform() {
        let k = toy();
        let pk = k.public();
        let m = BigUint::from(42u32);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut counts: BTreeMap<BigUint, u64> = BTreeMap::new();
        let samples = 159 * 60;
        for _ in 0..samples {
            let r = BlindingSecret::random(pk, &mut rng);
            *counts.entry(blind_value(pk, &m, &r)).or_default() += 1;
        }
        assert!(!counts.contains_key(&m));
        assert_eq!(counts.len(), 159);
        let expected = samples as f64 / 159.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi-square with 158 degrees of freedom.
        assert!(chi2 < 218.7, "chi2 = {chi2}");
    }

    #[test]
    fn records_signed_by_directory() {
        let params = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let dir_sk = params.random_nonzero_scalar(&mut rng);
        let dir_pk = params.g_pow(&dir_sk);
        let rec = EpochKeyRecord::sign(&params, &dir_sk, desk_keys()[0].public().clone(), &mut rng);
        assert!(rec.verify(&params, &dir_pk));
        let mut enc = Encoder::new();
        rec.encode(&params, &mut enc);
        let bytes = enc.finish();
        let back = EpochKeyRecord::decode(&params, &mut Decoder::new(&bytes)).unwrap();
        assert_eq!(back, rec);
        let mut forged = rec.clone();
        forged.key.epoch += 1;
        assert!(!forged.verify(&params, &dir_pk));
        let imposter = params.g_pow(&params.random_nonzero_scalar(&mut rng));
        assert!(!rec.verify(&params, &imposter));
    }

    #[test]
    fn signer_keys_roundtrip() {
        let k = &desk_keys()[1];
        let back = EpochSignerKeys::decode(&k.encode()).unwrap();
        assert_eq!(back.public(), k.public());
        assert_eq!(back.private_exponent(), k.private_exponent());
    }
}
