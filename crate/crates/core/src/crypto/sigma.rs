//! Fiat-Shamir sigma protocols over the subgroup.
//!
//! All three statement kinds prove knowledge of one exponent `w` satisfying a
//! list of relations `public_i = base_i^w`:
//!
//! * `Dlog`:  `X = g^w`
//! * `Dleq`:  `A = B^w` and `C = D^w` (Chaum-Pedersen)
//! * `EncEq`: two ElGamal ciphertexts under the same key encrypt the same
//!   plaintext; `w` is the difference of their randomness and the relations
//!   are the component-wise ratio against `(base, key)`.
//!
//! Responses are `z = k - c*w`, so the verifier checks `base^z * public^c = A`
//! with a short positive challenge and no inversions. Ratios are checked
//! cross-multiplied.

use rand::RngCore;

use super::elgamal::ElGamalCiphertext;
use super::group::{GroupElement, GroupParams, Scalar};
use super::CryptoError;
use crate::encoding::{DecodeError, Decoder, Encoder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SigmaKind {
    Dlog,
    Dleq,
    EncEq,
}

impl SigmaKind {
    fn tag(self) -> u8 {
        match self {
            SigmaKind::Dlog => 1,
            SigmaKind::Dleq => 2,
            SigmaKind::EncEq => 3,
        }
    }

    fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        match tag {
            1 => Ok(SigmaKind::Dlog),
            2 => Ok(SigmaKind::Dleq),
            3 => Ok(SigmaKind::EncEq),
            other => Err(DecodeError::UnknownTag(other)),
        }
    }

    fn label(self) -> &'static [u8] {
        match self {
            SigmaKind::Dlog => b"sigma/dlog",
            SigmaKind::Dleq => b"sigma/dleq",
            SigmaKind::EncEq => b"sigma/enc-eq",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Dlog {
        base: GroupElement,
        public: GroupElement,
    },
    Dleq {
        base1: GroupElement,
        public1: GroupElement,
        base2: GroupElement,
        public2: GroupElement,
    },
    EncEq {
        base: GroupElement,
        key: GroupElement,
        first: ElGamalCiphertext,
        second: ElGamalCiphertext,
    },
}

impl Statement {
    pub fn kind(&self) -> SigmaKind {
        match self {
            Statement::Dlog { .. } => SigmaKind::Dlog,
            Statement::Dleq { .. } => SigmaKind::Dleq,
            Statement::EncEq { .. } => SigmaKind::EncEq,
        }
    }

    /// `(base, num, den)` triples with `num = base^w * den`.
    fn relations(&self) -> Vec<(&GroupElement, &GroupElement, Option<&GroupElement>)> {
        match self {
            Statement::Dlog { base, public } => vec![(base, public, None)],
            Statement::Dleq {
                base1,
                public1,
                base2,
                public2,
            } => vec![(base1, public1, None), (base2, public2, None)],
            Statement::EncEq {
                base,
                key,
                first,
                second,
            } => vec![
                (base, &first.c1, Some(&second.c1)),
                (key, &first.c2, Some(&second.c2)),
            ],
        }
    }

    fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        enc.u8(self.kind().tag());
        match self {
            Statement::Dlog { base, public } => {
                params.put_element(enc, base);
                params.put_element(enc, public);
            }
            Statement::Dleq {
                base1,
                public1,
                base2,
                public2,
            } => {
                for e in [base1, public1, base2, public2] {
                    params.put_element(enc, e);
                }
            }
            Statement::EncEq {
                base,
                key,
                first,
                second,
            } => {
                params.put_element(enc, base);
                params.put_element(enc, key);
                first.encode(params, enc);
                second.encode(params, enc);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaProof {
    pub kind: SigmaKind,
    pub commitments: Vec<GroupElement>,
    pub challenge: Scalar,
    pub responses: Vec<Scalar>,
}

impl SigmaProof {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        enc.u8(self.kind.tag());
        enc.u32(self.commitments.len() as u32);
        for a in &self.commitments {
            params.put_element(enc, a);
        }
        params.put_scalar(enc, &self.challenge);
        enc.u32(self.responses.len() as u32);
        for z in &self.responses {
            params.put_scalar(enc, z);
        }
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let kind = SigmaKind::from_tag(dec.u8()?)?;
        let n = dec.count()?;
        let commitments = (0..n)
            .map(|_| params.get_element(dec))
            .collect::<Result<_, _>>()?;
        let challenge = params.get_scalar(dec)?;
        let n = dec.count()?;
        let responses = (0..n)
            .map(|_| params.get_scalar(dec))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            kind,
            commitments,
            challenge,
            responses,
        })
    }
}

fn challenge(
    params: &GroupParams,
    statement: &Statement,
    context: &[u8],
    commitments: &[GroupElement],
) -> Scalar {
    let mut enc = Encoder::new();
    enc.bytes(params.id());
    statement.encode(params, &mut enc);
    enc.bytes(context);
    for a in commitments {
        params.put_element(&mut enc, a);
    }
    params.hash_to_challenge(statement.kind().label(), enc.as_slice())
}

/// Proves knowledge of `witness` for `statement`, bound to `context`.
pub fn sigma_prove<R: RngCore + ?Sized>(
    params: &GroupParams,
    statement: &Statement,
    witness: &Scalar,
    context: &[u8],
    rng: &mut R,
) -> Result<SigmaProof, CryptoError> {
    let relations = statement.relations();
    let holds = relations.iter().all(|(base, num, den)| {
        let lhs = params.pow(base, witness);
        let lhs = match den {
            Some(d) => params.mul(&lhs, d),
            None => lhs,
        };
        &&lhs == num
    });
    if !holds {
        return Err(CryptoError::WitnessMismatch);
    }
    let k = params.random_scalar(rng);
    let commitments: Vec<GroupElement> = relations
        .iter()
        .map(|(base, _, _)| params.pow(base, &k))
        .collect();
    let c = challenge(params, statement, context, &commitments);
    let z = params.ssub(&k, &params.smul(&c, witness));
    Ok(SigmaProof {
        kind: statement.kind(),
        commitments,
        challenge: c,
        responses: vec![z],
    })
}

/// Never panics on well-formed input; any mismatch yields `false`.
pub fn sigma_verify(
    params: &GroupParams,
    statement: &Statement,
    proof: &SigmaProof,
    context: &[u8],
) -> bool {
    let relations = statement.relations();
    if proof.kind != statement.kind()
        || proof.commitments.len() != relations.len()
        || proof.responses.len() != 1
        || !params.is_challenge(&proof.challenge)
        || proof.responses[0].value() >= params.q()
    {
        return false;
    }
    if challenge(params, statement, context, &proof.commitments) != proof.challenge {
        return false;
    }
    let (z, c) = (&proof.responses[0], &proof.challenge);
    relations
        .iter()
        .zip(&proof.commitments)
        .all(|((base, num, den), a)| {
            let lhs = params.mul(&params.pow(base, z), &params.pow(num, c));
            let rhs = match den {
                Some(d) => params.mul(a, &params.pow(d, c)),
                None => (*a).clone(),
            };
            lhs == rhs
        })
}

/// Schnorr signature: a DLOG proof for `public = g^secret` bound to `msg`.
pub fn schnorr_sign<R: RngCore + ?Sized>(
    params: &GroupParams,
    secret: &Scalar,
    msg: &[u8],
    rng: &mut R,
) -> SigmaProof {
    let statement = Statement::Dlog {
        base: params.g().clone(),
        public: params.g_pow(secret),
    };
    sigma_prove(params, &statement, secret, msg, rng).expect("witness matches by construction")
}

pub fn schnorr_verify(
    params: &GroupParams,
    public: &GroupElement,
    msg: &[u8],
    sig: &SigmaProof,
) -> bool {
    let statement = Statement::Dlog {
        base: params.g().clone(),
        public: public.clone(),
    };
    sigma_verify(params, &statement, sig, msg)
}
