//! Signatures: ElGamal encryption of the signer's tag under the opener key,
//! plus a one-of-N OR-proof that the plaintext is some allowed tag whose
//! discrete log (base `h`) the signer knows.
//!
//! Branch `j` of the proof is for tag `T_j` and shows knowledge of `(rho, s)`:
//!
//! ```text
//! c1 = g_op^rho      c2 / T_j = OPK^rho      T_j = h^s
//! ```
//!
//! Responses are `z = k - c*x`. The verifier recomputes each branch's
//! commitments from its share `c_j` and responses `(z1_j, z2_j)`:
//!
//! ```text
//! A1 = g_op^z1 * c1^c     A2 = OPK^z1 * (c2 / T_j)^c     A3 = h^z2 * T_j^c
//! ```
//!
//! and accepts iff the shares sum to the hash of everything in the
//! challenge space.

use rand::RngCore;

use super::keys::{AllowedSet, GroupKey, GroupManagerKey, MemberKey, TagTable};
use super::GroupSigError;
use crate::crypto::elgamal::{elgamal_decrypt, ElGamalCiphertext};
use crate::crypto::{GroupElement, GroupParams, Scalar};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::par;

pub const DEFAULT_VERSION_WINDOW: u64 = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub challenge: Scalar,
    pub z1: Scalar,
    pub z2: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSignature {
    /// Allowed-set version the proof was made over.
    pub version: u64,
    pub ciphertext: ElGamalCiphertext,
    pub branches: Vec<Branch>,
}

impl GroupSignature {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        enc.u64(self.version);
        self.ciphertext.encode(params, enc);
        enc.u32(self.branches.len() as u32);
        for b in &self.branches {
            params.put_scalar(enc, &b.challenge);
            params.put_scalar(enc, &b.z1);
            params.put_scalar(enc, &b.z2);
        }
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let version = dec.u64()?;
        let ciphertext = ElGamalCiphertext::decode(params, dec)?;
        let n = dec.count()?;
        let mut branches = Vec::with_capacity(n);
        for _ in 0..n {
            branches.push(Branch {
                challenge: params.get_scalar(dec)?,
                z1: params.get_scalar(dec)?,
                z2: params.get_scalar(dec)?,
            });
        }
        Ok(Self {
            version,
            ciphertext,
            branches,
        })
    }

    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode(params, &mut enc);
        enc.finish()
    }

    pub fn from_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let sig = Self::decode(params, &mut dec)?;
        dec.finish()?;
        Ok(sig)
    }
}

type Triple = [GroupElement; 3];

/// Verifier-side commitments for one branch.
fn branch_commitments(gk: &GroupKey, ct: &ElGamalCiphertext, tag: &TagTable, b: &Branch) -> Triple {
    let params = gk.params();
    let a1 = params.mul(&params.gop_pow(&b.z1), &params.pow(&ct.c1, &b.challenge));
    let a2 = params.mul(
        &gk.opk_base().pow(params, &b.z1),
        &params.pow(&params.mul(&ct.c2, &tag.inverse), &b.challenge),
    );
    let a3 = params.mul(&params.h_pow(&b.z2), &tag.base.pow(params, &b.challenge));
    [a1, a2, a3]
}

fn top_challenge(
    gk: &GroupKey,
    set: &AllowedSet,
    msg: &[u8],
    ct: &ElGamalCiphertext,
    commitments: &[Triple],
) -> Scalar {
    let params = gk.params();
    let mut enc = Encoder::new();
    enc.bytes(params.id());
    params.put_element(&mut enc, gk.opk());
    enc.u64(set.version()).bytes(set.digest()).bytes(msg);
    ct.encode(params, &mut enc);
    for triple in commitments {
        for a in triple {
            params.put_element(&mut enc, a);
        }
    }
    params.hash_to_challenge(b"gs-sign", enc.as_slice())
}

/// Signs `msg` over the current allowed set.
pub fn gs_sign<R: RngCore + ?Sized>(
    msg: &[u8],
    member: &MemberKey,
    gk: &GroupKey,
    rng: &mut R,
) -> Result<GroupSignature, GroupSigError> {
    gs_sign_at(msg, member, gk, gk.version(), rng)
}

/// Signs over the allowed set of a specific (possibly older) version.
pub fn gs_sign_at<R: RngCore + ?Sized>(
    msg: &[u8],
    member: &MemberKey,
    gk: &GroupKey,
    version: u64,
    rng: &mut R,
) -> Result<GroupSignature, GroupSigError> {
    gs_sign_with_randomness(msg, member, gk, version, rng).map(|(sig, _)| sig)
}

/// As [`gs_sign_at`], also returning the ElGamal randomness `rho` so the
/// signer can later prove two of its signatures encrypt the same tag.
pub fn gs_sign_with_randomness<R: RngCore + ?Sized>(
    msg: &[u8],
    member: &MemberKey,
    gk: &GroupKey,
    version: u64,
    rng: &mut R,
) -> Result<(GroupSignature, Scalar), GroupSigError> {
    let params = gk.params();
    let set = gk
        .allowed_set(version)
        .ok_or(GroupSigError::InvalidSignature)?;
    let me = set
        .position(member.tag())
        .ok_or(GroupSigError::NotInAllowedSet)?;

    let rho = params.random_scalar(rng);
    let k1 = params.random_scalar(rng);
    let k2 = params.random_scalar(rng);
    // Simulated shares and responses for every branch; the real branch's
    // entries are overwritten below.
    let mut branches: Vec<Branch> = (0..set.len())
        .map(|_| Branch {
            challenge: params.random_challenge(rng),
            z1: params.random_scalar(rng),
            z2: params.random_scalar(rng),
        })
        .collect();

    let ct = ElGamalCiphertext {
        c1: params.gop_pow(&rho),
        c2: params.mul(member.tag(), &gk.opk_base().pow(params, &rho)),
    };
    let real = [
        params.gop_pow(&k1),
        gk.opk_base().pow(params, &k1),
        params.h_pow(&k2),
    ];
    let indexed: Vec<usize> = (0..set.len()).collect();
    let commitments: Vec<Triple> = par::map(&indexed, |&j| {
        if j == me {
            real.clone()
        } else {
            branch_commitments(gk, &ct, &set.tables()[j], &branches[j])
        }
    });

    let c = top_challenge(gk, set, msg, &ct, &commitments);
    let others = branches
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != me)
        .fold(params.scalar_u64(0), |acc, (_, b)| {
            params.cadd(&acc, &b.challenge)
        });
    let c_me = params.csub(&c, &others);
    branches[me] = Branch {
        z1: params.ssub(&k1, &params.smul(&c_me, &rho)),
        z2: params.ssub(&k2, &params.smul(&c_me, member.secret())),
        challenge: c_me,
    };
    let sig = GroupSignature {
        version,
        ciphertext: ct,
        branches,
    };
    Ok((sig, rho))
}

fn verify_proof(sig: &GroupSignature, msg: &[u8], gk: &GroupKey, set: &AllowedSet) -> bool {
    let params = gk.params();
    if sig.branches.len() != set.len() || set.is_empty() {
        return false;
    }
    let q = params.q();
    let ct = &sig.ciphertext;
    if sig
        .branches
        .iter()
        .any(|b| !params.is_challenge(&b.challenge) || b.z1.value() >= q || b.z2.value() >= q)
    {
        return false;
    }
    let pairs: Vec<(&std::sync::Arc<TagTable>, &Branch)> =
        set.tables().iter().zip(&sig.branches).collect();
    let commitments: Vec<Triple> = par::map(&pairs, |(tag, b)| branch_commitments(gk, ct, tag, b));
    let c = top_challenge(gk, set, msg, ct, &commitments);
    let sum = sig.branches.iter().fold(params.scalar_u64(0), |acc, b| {
        params.cadd(&acc, &b.challenge)
    });
    sum == c
}

/// Checks the version rule, then the proof against that version's allowed set.
pub fn gs_check(
    sig: &GroupSignature,
    msg: &[u8],
    gk: &GroupKey,
    window: u64,
) -> Result<(), GroupSigError> {
    gk.check_version(sig.version, window)?;
    let set = gk
        .allowed_set(sig.version)
        .ok_or(GroupSigError::InvalidSignature)?;
    if verify_proof(sig, msg, gk, set) {
        Ok(())
    } else {
        Err(GroupSigError::InvalidSignature)
    }
}

pub fn gs_verify(sig: &GroupSignature, msg: &[u8], gk: &GroupKey, window: u64) -> bool {
    gs_check(sig, msg, gk, window).is_ok()
}

/// Verifies against the allowed set of the signature's own version,
/// ignoring the window and later revocations. Used when judging evidence
/// about a past circuit.
pub fn gs_verify_historic(sig: &GroupSignature, msg: &[u8], gk: &GroupKey) -> bool {
    match gk.allowed_set(sig.version) {
        Some(set) => verify_proof(sig, msg, gk, set),
        None => false,
    }
}

/// Plain ElGamal decryption of the signature's ciphertext.
pub fn gs_decrypt(sig: &GroupSignature, mk: &GroupManagerKey) -> GroupElement {
    elgamal_decrypt(mk.params(), mk.opener_secret(), &sig.ciphertext)
}

/// Recovers the signer's tag; fails if it is not a registered member.
pub fn gs_open(sig: &GroupSignature, mk: &GroupManagerKey) -> Result<GroupElement, GroupSigError> {
    let tag = gs_decrypt(sig, mk);
    match mk.member_id(&tag) {
        Some(_) => Ok(tag),
        None => Err(GroupSigError::UnknownTag),
    }
}

pub fn gs_trace(sig: &GroupSignature, mk: &GroupManagerKey, target: &GroupElement) -> bool {
    matches!(gs_open(sig, mk), Ok(tag) if &tag == target)
}
