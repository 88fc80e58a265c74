//! Entry handshake. The user obtains a blind token on a commitment to a
//! group signature over a fresh exit DH share, and the entry node checks by
//! cut-and-choose that the hidden signature is by the same member who signed
//! the entry share.
//!
//! The user prepares `k` instances, each with its own exit share `X2_j`,
//! signature `sigma2_j`, commitment `com_j = Com(sigma2_j, r1_j)` and blinded
//! value `beta_j`. All but one survivor are opened: the entry node rebuilds
//! `com_j` and `beta_j` from the opening, checks an ENC_EQ proof that
//! `sigma2_j` encrypts the same tag as `sigma1`, and verifies `sigma2_j`.
//! The survivor's `beta` is then blind-signed.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore};

use super::exit::ExitMaterial;
use super::{check_instance_count, transcript, HandshakeError};
use crate::blindsig::{
    bgs_blind, bgs_sign_blinded, bgs_unblind, blind_value, blinding_binding, commitment_fdh,
    token_matches, BlindedMessage, BlindedSignature, BlindingSecret, EpochPublicKey,
    EpochSignerKeys,
};
use crate::crypto::commit::commit_bytes;
use crate::crypto::hash::{hash, Digest};
use crate::crypto::sigma::{sigma_prove, sigma_verify, SigmaProof, Statement};
use crate::crypto::{
    derive_keys, dh_keygen, dh_shared, hybrid_decrypt, hybrid_encrypt, Commitment, GroupElement,
    GroupParams, HybridCiphertext, Scalar, SymmetricKey,
};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::groupsig::{gs_check, gs_sign_with_randomness, GroupKey, GroupSignature, MemberKey};
use crate::par;

/// One instance before blinding: an exit share and the member's signature on it.
#[derive(Clone, Debug)]
pub struct SignedInstance {
    pub x2: Scalar,
    pub x2_pub: GroupElement,
    pub sigma2: GroupSignature,
    /// ElGamal randomness inside `sigma2`.
    pub rho2: Scalar,
}

/// A signed instance committed and blinded for the current epoch key.
#[derive(Clone, Debug)]
pub struct BlindedInstance {
    pub signed: SignedInstance,
    pub r1: Scalar,
    pub com: Commitment,
    pub r2: BlindingSecret,
    pub beta: BlindedMessage,
    pub binding: Digest,
}

/// User-side state between building the request and reading the response.
#[derive(Clone, Debug)]
pub struct UserEntryState {
    pub pk: EpochPublicKey,
    pub x1: Scalar,
    pub x1_pub: GroupElement,
    pub sigma1: GroupSignature,
    pub rho1: Scalar,
    pub instances: Vec<BlindedInstance>,
    pub survivor: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceCommitment {
    pub beta: BigUint,
    pub binding: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryCommitBody {
    pub x1_pub: GroupElement,
    pub sigma1: GroupSignature,
    pub epoch: u64,
    pub key_id: u64,
    pub instances: Vec<InstanceCommitment>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub index: u32,
    pub x2_pub: GroupElement,
    pub sigma2: GroupSignature,
    pub r1: Scalar,
    pub r2: BigUint,
    /// `sigma2` and `sigma1` encrypt the same tag.
    pub same_member: SigmaProof,
}

/// Non-interactive request: commitments, the Fiat-Shamir survivor, openings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryRequestBody {
    pub commit: EntryCommitBody,
    pub survivor: u32,
    pub openings: Vec<Opening>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryOpeningBody {
    pub openings: Vec<Opening>,
}

/// Request bodies travel hybrid-encrypted to the entry node's static key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryRequest {
    pub sealed: HybridCiphertext,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryCommit {
    pub sealed: HybridCiphertext,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryChallenge {
    pub survivor: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryOpening {
    pub sealed: HybridCiphertext,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryResponse {
    pub y1_pub: GroupElement,
    pub beta_signed: BlindedSignature,
    pub confirm: Digest,
}

/// What the entry node needs to judge a request.
#[derive(Clone, Copy, Debug)]
pub struct EntryContext<'a> {
    pub params: &'a GroupParams,
    pub node_secret: &'a Scalar,
    pub gk: &'a GroupKey,
    pub signer: &'a EpochSignerKeys,
    pub k: usize,
    pub window: u64,
}

#[derive(Clone, Debug)]
pub struct EntryAccepted {
    pub response: EntryResponse,
    pub key: SymmetricKey,
    pub survivor: usize,
}

/// Entry-side state of an interactive handshake awaiting the opening.
#[derive(Clone, Debug)]
pub struct EntryPending {
    pub commit: EntryCommitBody,
    pub survivor: usize,
}

// ---- encoding ----

impl InstanceCommitment {
    fn encode(&self, enc: &mut Encoder) {
        enc.uint_var(&self.beta).bytes(&self.binding);
    }

    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            beta: dec.uint_var()?,
            binding: dec.fixed()?,
        })
    }
}

impl EntryCommitBody {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.x1_pub);
        self.sigma1.encode(params, enc);
        enc.u64(self.epoch).u64(self.key_id);
        enc.u32(self.instances.len() as u32);
        for inst in &self.instances {
            inst.encode(enc);
        }
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let x1_pub = params.get_element(dec)?;
        let sigma1 = GroupSignature::decode(params, dec)?;
        let epoch = dec.u64()?;
        let key_id = dec.u64()?;
        let n = dec.count()?;
        let instances = (0..n)
            .map(|_| InstanceCommitment::decode(dec))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            x1_pub,
            sigma1,
            epoch,
            key_id,
            instances,
        })
    }
}

impl Opening {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        enc.u32(self.index);
        params.put_element(enc, &self.x2_pub);
        self.sigma2.encode(params, enc);
        params.put_scalar(enc, &self.r1);
        enc.uint_var(&self.r2);
        self.same_member.encode(params, enc);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            index: dec.u32()?,
            x2_pub: params.get_element(dec)?,
            sigma2: GroupSignature::decode(params, dec)?,
            r1: params.get_scalar(dec)?,
            r2: dec.uint_var()?,
            same_member: SigmaProof::decode(params, dec)?,
        })
    }
}

fn encode_openings(params: &GroupParams, openings: &[Opening], enc: &mut Encoder) {
    enc.u32(openings.len() as u32);
    for o in openings {
        o.encode(params, enc);
    }
}

fn decode_openings(
    params: &GroupParams,
    dec: &mut Decoder<'_>,
) -> Result<Vec<Opening>, DecodeError> {
    let n = dec.count()?;
    (0..n).map(|_| Opening::decode(params, dec)).collect()
}

impl EntryRequestBody {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        self.commit.encode(params, enc);
        enc.u32(self.survivor);
        encode_openings(params, &self.openings, enc);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            commit: EntryCommitBody::decode(params, dec)?,
            survivor: dec.u32()?,
            openings: decode_openings(params, dec)?,
        })
    }
}

impl EntryOpeningBody {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        encode_openings(params, &self.openings, enc);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            openings: decode_openings(params, dec)?,
        })
    }
}

impl EntryResponse {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.y1_pub);
        enc.uint_var(&self.beta_signed.0).bytes(&self.confirm);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            y1_pub: params.get_element(dec)?,
            beta_signed: BlindedSignature(dec.uint_var()?),
            confirm: dec.fixed()?,
        })
    }
}

fn seal_body<R: RngCore + ?Sized>(
    params: &GroupParams,
    entry_pub: &GroupElement,
    bytes: &[u8],
    rng: &mut R,
) -> HybridCiphertext {
    hybrid_encrypt(params, entry_pub, bytes, rng).expect("entry key is a published group element")
}

fn open_body<T>(
    params: &GroupParams,
    node_secret: &Scalar,
    sealed: &HybridCiphertext,
    decode: impl FnOnce(&GroupParams, &mut Decoder<'_>) -> Result<T, DecodeError>,
) -> Result<T, HandshakeError> {
    let bytes =
        hybrid_decrypt(params, node_secret, sealed).map_err(|_| HandshakeError::DecryptFailed)?;
    let mut dec = Decoder::new(&bytes);
    let body = decode(params, &mut dec)?;
    dec.finish()?;
    Ok(body)
}

impl EntryRequest {
    pub fn open(
        &self,
        params: &GroupParams,
        node_secret: &Scalar,
    ) -> Result<EntryRequestBody, HandshakeError> {
        open_body(params, node_secret, &self.sealed, EntryRequestBody::decode)
    }
}

impl EntryCommit {
    pub fn open(
        &self,
        params: &GroupParams,
        node_secret: &Scalar,
    ) -> Result<EntryCommitBody, HandshakeError> {
        open_body(params, node_secret, &self.sealed, EntryCommitBody::decode)
    }
}

impl EntryOpening {
    pub fn open(
        &self,
        params: &GroupParams,
        node_secret: &Scalar,
    ) -> Result<EntryOpeningBody, HandshakeError> {
        open_body(params, node_secret, &self.sealed, EntryOpeningBody::decode)
    }
}

pub fn seal_entry_request<R: RngCore + ?Sized>(
    params: &GroupParams,
    entry_pub: &GroupElement,
    body: &EntryRequestBody,
    rng: &mut R,
) -> EntryRequest {
    let mut enc = Encoder::new();
    body.encode(params, &mut enc);
    EntryRequest {
        sealed: seal_body(params, entry_pub, enc.as_slice(), rng),
    }
}

pub fn seal_entry_commit<R: RngCore + ?Sized>(
    params: &GroupParams,
    entry_pub: &GroupElement,
    body: &EntryCommitBody,
    rng: &mut R,
) -> EntryCommit {
    let mut enc = Encoder::new();
    body.encode(params, &mut enc);
    EntryCommit {
        sealed: seal_body(params, entry_pub, enc.as_slice(), rng),
    }
}

pub fn seal_entry_opening<R: RngCore + ?Sized>(
    params: &GroupParams,
    entry_pub: &GroupElement,
    body: &EntryOpeningBody,
    rng: &mut R,
) -> EntryOpening {
    let mut enc = Encoder::new();
    body.encode(params, &mut enc);
    EntryOpening {
        sealed: seal_body(params, entry_pub, enc.as_slice(), rng),
    }
}

// ---- contexts bound into proofs and digests ----

fn instance_context(params: &GroupParams, x1_pub: &GroupElement, index: usize) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(b"cc-instance");
    params.put_element(&mut enc, x1_pub);
    enc.u32(index as u32);
    enc.finish()
}

fn opening_context(params: &GroupParams, x1_pub: &GroupElement, index: usize) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(b"cc-open");
    params.put_element(&mut enc, x1_pub);
    enc.u32(index as u32);
    enc.finish()
}

fn same_member_statement(
    gk: &GroupKey,
    sigma1: &GroupSignature,
    sigma2: &GroupSignature,
) -> Statement {
    Statement::EncEq {
        base: gk.params().g_op().clone(),
        key: gk.opk().clone(),
        first: sigma1.ciphertext.clone(),
        second: sigma2.ciphertext.clone(),
    }
}

/// `s = H("cc", sigma1 || X1 || beta_1 .. beta_k) mod k`.
pub fn fs_survivor(params: &GroupParams, body: &EntryCommitBody, modulus_len: usize) -> usize {
    let mut enc = Encoder::new();
    body.sigma1.encode(params, &mut enc);
    params.put_element(&mut enc, &body.x1_pub);
    for inst in &body.instances {
        enc.uint(&inst.beta, modulus_len);
    }
    let digest = hash(b"cc", enc.as_slice());
    let k = BigUint::from(body.instances.len());
    (BigUint::from_bytes_be(&digest) % k)
        .to_usize()
        .expect("below k")
}

// ---- user side ----

/// Fresh exit share and the member's signature on it.
pub fn sign_instance<R: RngCore + ?Sized>(
    params: &GroupParams,
    member: &MemberKey,
    gk: &GroupKey,
    rng: &mut R,
) -> Result<SignedInstance, HandshakeError> {
    let (x2, x2_pub) = dh_keygen(params, rng);
    let (sigma2, rho2) = gs_sign_with_randomness(
        &params.element_bytes(&x2_pub),
        member,
        gk,
        gk.version(),
        rng,
    )?;
    Ok(SignedInstance {
        x2,
        x2_pub,
        sigma2,
        rho2,
    })
}

impl BlindedInstance {
    /// Commits to the instance's signature and blinds the commitment.
    pub fn new<R: RngCore + ?Sized>(
        params: &GroupParams,
        signed: SignedInstance,
        pk: &EpochPublicKey,
        x1_pub: &GroupElement,
        index: usize,
        rng: &mut R,
    ) -> Self {
        let r1 = params.random_scalar(rng);
        let com = commit_bytes(params, &signed.sigma2.to_bytes(params), &r1);
        let (beta, binding, r2) = bgs_blind(
            params,
            &com,
            pk,
            &instance_context(params, x1_pub, index),
            rng,
        );
        Self {
            signed,
            r1,
            com,
            r2,
            beta,
            binding,
        }
    }
}

impl UserEntryState {
    pub fn commit_body(&self) -> EntryCommitBody {
        EntryCommitBody {
            x1_pub: self.x1_pub.clone(),
            sigma1: self.sigma1.clone(),
            epoch: self.pk.epoch,
            key_id: self.pk.key_id,
            instances: self
                .instances
                .iter()
                .map(|i| InstanceCommitment {
                    beta: i.beta.0.clone(),
                    binding: i.binding,
                })
                .collect(),
        }
    }

    /// Opens every instance except `survivor` and remembers the survivor.
    pub fn open_all_but<R: RngCore + ?Sized>(
        &mut self,
        params: &GroupParams,
        gk: &GroupKey,
        survivor: usize,
        rng: &mut R,
    ) -> Result<Vec<Opening>, HandshakeError> {
        if survivor >= self.instances.len() {
            return Err(HandshakeError::CutAndChooseMismatch);
        }
        self.survivor = Some(survivor);
        (0..self.instances.len())
            .filter(|&j| j != survivor)
            .map(|j| open_instance(params, gk, self, j, rng))
            .collect()
    }
}

/// Opening of instance `j`, with the proof that its signature encrypts the
/// same tag as `sigma1`.
pub fn open_instance<R: RngCore + ?Sized>(
    params: &GroupParams,
    gk: &GroupKey,
    state: &UserEntryState,
    j: usize,
    rng: &mut R,
) -> Result<Opening, HandshakeError> {
    let inst = &state.instances[j];
    let statement = same_member_statement(gk, &state.sigma1, &inst.signed.sigma2);
    let witness = params.ssub(&state.rho1, &inst.signed.rho2);
    let same_member = sigma_prove(
        params,
        &statement,
        &witness,
        &opening_context(params, &state.x1_pub, j),
        rng,
    )
    .map_err(|_| HandshakeError::CutAndChooseMismatch)?;
    Ok(Opening {
        index: j as u32,
        x2_pub: inst.signed.x2_pub.clone(),
        sigma2: inst.signed.sigma2.clone(),
        r1: inst.r1.clone(),
        r2: inst.r2.value().clone(),
        same_member,
    })
}

/// Entry share, `sigma1`, and `k` signed and blinded instances.
pub fn prepare_entry<R: RngCore + ?Sized>(
    params: &GroupParams,
    member: &MemberKey,
    gk: &GroupKey,
    pk: &EpochPublicKey,
    k: usize,
    rng: &mut R,
) -> Result<UserEntryState, HandshakeError> {
    check_instance_count(k)?;
    let (x1, x1_pub) = dh_keygen(params, rng);
    let (sigma1, rho1) = gs_sign_with_randomness(
        &params.element_bytes(&x1_pub),
        member,
        gk,
        gk.version(),
        rng,
    )?;
    let mut instances = Vec::with_capacity(k);
    for j in 0..k {
        let signed = sign_instance(params, member, gk, rng)?;
        instances.push(BlindedInstance::new(params, signed, pk, &x1_pub, j, rng));
    }
    Ok(UserEntryState {
        pk: pk.clone(),
        x1,
        x1_pub,
        sigma1,
        rho1,
        instances,
        survivor: None,
    })
}

/// Non-interactive entry request with a Fiat-Shamir survivor.
pub fn build_entry_request<R: RngCore + ?Sized>(
    params: &GroupParams,
    member: &MemberKey,
    gk: &GroupKey,
    pk: &EpochPublicKey,
    entry_pub: &GroupElement,
    k: usize,
    rng: &mut R,
) -> Result<(EntryRequest, UserEntryState), HandshakeError> {
    let mut state = prepare_entry(params, member, gk, pk, k, rng)?;
    let commit = state.commit_body();
    let survivor = fs_survivor(params, &commit, pk.modulus_len());
    let openings = state.open_all_but(params, gk, survivor, rng)?;
    let body = EntryRequestBody {
        commit,
        survivor: survivor as u32,
        openings,
    };
    Ok((seal_entry_request(params, entry_pub, &body, rng), state))
}

/// Checks the confirmation, unblinds the survivor's token and checks it.
pub fn user_finish_entry(
    params: &GroupParams,
    state: &UserEntryState,
    resp: &EntryResponse,
) -> Result<(SymmetricKey, ExitMaterial), HandshakeError> {
    let s = state.survivor.ok_or(HandshakeError::CutAndChooseMismatch)?;
    let shared =
        dh_shared(params, &state.x1, &resp.y1_pub).map_err(|_| HandshakeError::ConfirmMismatch)?;
    let (key, confirm) = derive_keys(
        params,
        &shared,
        &transcript(params, b"entry", &state.x1_pub, &resp.y1_pub),
    );
    if !super::confirm_matches(&confirm, &resp.confirm) {
        return Err(HandshakeError::ConfirmMismatch);
    }
    let inst = &state.instances[s];
    let token = bgs_unblind(&resp.beta_signed, &inst.r2, &state.pk)?;
    if !token_matches(
        &state.pk,
        &token,
        &commitment_fdh(params, &state.pk, &inst.com),
    ) {
        return Err(HandshakeError::TokenInvalid);
    }
    Ok((
        key,
        ExitMaterial {
            x2: inst.signed.x2.clone(),
            x2_pub: inst.signed.x2_pub.clone(),
            sigma2: inst.signed.sigma2.clone(),
            r1: inst.r1.clone(),
            com: inst.com.clone(),
            token,
        },
    ))
}

// ---- entry side ----

/// Key match, instance count, and the group signature on `X1`. The last is
/// the blocking check: a revoked member fails here.
fn check_commit(ctx: &EntryContext<'_>, body: &EntryCommitBody) -> Result<(), HandshakeError> {
    let pk = ctx.signer.public();
    if body.epoch != pk.epoch || body.key_id != pk.key_id {
        return Err(HandshakeError::UnknownEpoch(body.epoch));
    }
    if body.instances.len() != ctx.k || body.instances.iter().any(|i| i.beta >= pk.n) {
        return Err(HandshakeError::CutAndChooseMismatch);
    }
    gs_check(
        &body.sigma1,
        &ctx.params.element_bytes(&body.x1_pub),
        ctx.gk,
        ctx.window,
    )?;
    Ok(())
}

/// Openings must cover every index but the survivor, each exactly once.
/// Checks run cheapest first over all openings: commitment and blinding
/// reconstruction, then the same-member proofs, then the signatures.
fn verify_openings(
    ctx: &EntryContext<'_>,
    body: &EntryCommitBody,
    survivor: usize,
    openings: &[Opening],
) -> Result<(), HandshakeError> {
    let params = ctx.params;
    let k = body.instances.len();
    let mut seen = vec![false; k];
    seen[survivor] = true;
    for o in openings {
        let j = o.index as usize;
        if j >= k || seen[j] {
            return Err(HandshakeError::CutAndChooseMismatch);
        }
        seen[j] = true;
    }
    if openings.len() != k - 1 {
        return Err(HandshakeError::CutAndChooseMismatch);
    }
    let pk = ctx.signer.public();
    let rebuilds = par::all(openings, |o| {
        let j = o.index as usize;
        let inst = &body.instances[j];
        let Ok(r2) = BlindingSecret::from_value(pk, o.r2.clone()) else {
            return false;
        };
        let com = commit_bytes(params, &o.sigma2.to_bytes(params), &o.r1);
        let beta = BlindedMessage(blind_value(pk, &commitment_fdh(params, pk, &com), &r2));
        beta.0 == inst.beta
            && blinding_binding(pk, &beta, &instance_context(params, &body.x1_pub, j))
                == inst.binding
    });
    let same_member = rebuilds
        && par::all(openings, |o| {
            let st = same_member_statement(ctx.gk, &body.sigma1, &o.sigma2);
            sigma_verify(
                params,
                &st,
                &o.same_member,
                &opening_context(params, &body.x1_pub, o.index as usize),
            )
        });
    let signatures = same_member
        && par::all(openings, |o| {
            gs_check(
                &o.sigma2,
                &params.element_bytes(&o.x2_pub),
                ctx.gk,
                ctx.window,
            )
            .is_ok()
        });
    if signatures {
        Ok(())
    } else {
        Err(HandshakeError::CutAndChooseMismatch)
    }
}

fn accept<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    body: &EntryCommitBody,
    survivor: usize,
    rng: &mut R,
) -> Result<EntryAccepted, HandshakeError> {
    let params = ctx.params;
    let beta_signed = bgs_sign_blinded(
        &BlindedMessage(body.instances[survivor].beta.clone()),
        ctx.signer,
    )?;
    let (y1, y1_pub) = dh_keygen(params, rng);
    let shared = dh_shared(params, &y1, &body.x1_pub).map_err(|_| HandshakeError::DecryptFailed)?;
    let (key, confirm) = derive_keys(
        params,
        &shared,
        &transcript(params, b"entry", &body.x1_pub, &y1_pub),
    );
    Ok(EntryAccepted {
        response: EntryResponse {
            y1_pub,
            beta_signed,
            confirm,
        },
        key,
        survivor,
    })
}

/// Non-interactive mode: one request, survivor recomputed by Fiat-Shamir.
pub fn en_process_entry_request<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    req: &EntryRequest,
    rng: &mut R,
) -> Result<EntryAccepted, HandshakeError> {
    let body = req.open(ctx.params, ctx.node_secret)?;
    en_verify_entry_body(ctx, &body, rng)
}

/// The checks of [`en_process_entry_request`] on an already decrypted body.
pub fn en_verify_entry_body<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    body: &EntryRequestBody,
    rng: &mut R,
) -> Result<EntryAccepted, HandshakeError> {
    check_commit(ctx, &body.commit)?;
    let survivor = fs_survivor(ctx.params, &body.commit, ctx.signer.public().modulus_len());
    if body.survivor as usize != survivor {
        return Err(HandshakeError::CutAndChooseMismatch);
    }
    verify_openings(ctx, &body.commit, survivor, &body.openings)?;
    accept(ctx, &body.commit, survivor, rng)
}

/// Interactive mode, first move: check the commitments and pick the
/// survivor at random.
pub fn en_process_commit<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    msg: &EntryCommit,
    rng: &mut R,
) -> Result<(EntryChallenge, EntryPending), HandshakeError> {
    let commit = msg.open(ctx.params, ctx.node_secret)?;
    en_process_commit_body(ctx, commit, rng)
}

pub fn en_process_commit_body<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    commit: EntryCommitBody,
    rng: &mut R,
) -> Result<(EntryChallenge, EntryPending), HandshakeError> {
    check_commit(ctx, &commit)?;
    let survivor = rng.gen_range(0..commit.instances.len());
    Ok((
        EntryChallenge {
            survivor: survivor as u32,
        },
        EntryPending { commit, survivor },
    ))
}

/// Interactive mode, last move.
pub fn en_process_opening<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    pending: &EntryPending,
    msg: &EntryOpening,
    rng: &mut R,
) -> Result<EntryAccepted, HandshakeError> {
    let body = msg.open(ctx.params, ctx.node_secret)?;
    en_process_opening_body(ctx, pending, &body, rng)
}

pub fn en_process_opening_body<R: RngCore + ?Sized>(
    ctx: &EntryContext<'_>,
    pending: &EntryPending,
    body: &EntryOpeningBody,
    rng: &mut R,
) -> Result<EntryAccepted, HandshakeError> {
    verify_openings(ctx, &pending.commit, pending.survivor, &body.openings)?;
    accept(ctx, &pending.commit, pending.survivor, rng)
}
