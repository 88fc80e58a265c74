//! Exit handshake: the user presents `sigma2` on its exit share, the
//! commitment opening `r1`, and the blind token on `Com(sigma2, r1)`.

use rand::RngCore;

use super::{transcript, HandshakeError, ReplayCache};
use crate::blindsig::{bgs_check, BlindToken, KeyRing};
use crate::crypto::commit::commit_bytes;
use crate::crypto::hash::Digest;
use crate::crypto::{
    derive_keys, dh_keygen, dh_shared, hybrid_decrypt, hybrid_encrypt, Commitment, GroupElement,
    GroupParams, HybridCiphertext, Scalar, SymmetricKey,
};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::groupsig::{gs_check, GroupKey, GroupSignature};

/// The survivor instance after the entry handshake: everything needed to
/// build the exit request.
#[derive(Clone, Debug)]
pub struct ExitMaterial {
    pub x2: Scalar,
    pub x2_pub: GroupElement,
    pub sigma2: GroupSignature,
    pub r1: Scalar,
    pub com: Commitment,
    pub token: BlindToken,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitRequestBody {
    pub x2_pub: GroupElement,
    pub sigma2: GroupSignature,
    pub r1: Scalar,
    pub token: BlindToken,
}

/// Body hybrid-encrypted to the exit node's static key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitRequest {
    pub sealed: HybridCiphertext,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitResponse {
    pub y2_pub: GroupElement,
    pub confirm: Digest,
}

#[derive(Clone, Debug)]
pub struct UserExitState {
    pub x2: Scalar,
    pub x2_pub: GroupElement,
}

#[derive(Clone, Copy, Debug)]
pub struct ExitContext<'a> {
    pub params: &'a GroupParams,
    pub node_secret: &'a Scalar,
    pub gk: &'a GroupKey,
    pub ring: &'a KeyRing,
    pub current_epoch: u64,
    pub gs_window: u64,
    pub token_window: u64,
}

/// Handshake outputs the exit keeps as evidence.
#[derive(Clone, Debug)]
pub struct ExitSessionRecord {
    pub x2_pub: GroupElement,
    pub y2_pub: GroupElement,
    pub y2: Scalar,
    pub shared: GroupElement,
    pub sigma2: GroupSignature,
    pub r1: Scalar,
    pub epoch: u64,
}

#[derive(Clone, Debug)]
pub struct ExitAccepted {
    pub response: ExitResponse,
    pub key: SymmetricKey,
    pub record: ExitSessionRecord,
}

impl ExitRequestBody {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.x2_pub);
        self.sigma2.encode(params, enc);
        params.put_scalar(enc, &self.r1);
        enc.u64(self.token.epoch)
            .u64(self.token.key_id)
            .uint_var(&self.token.value);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            x2_pub: params.get_element(dec)?,
            sigma2: GroupSignature::decode(params, dec)?,
            r1: params.get_scalar(dec)?,
            token: BlindToken::decode(dec)?,
        })
    }
}

impl ExitResponse {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.y2_pub);
        enc.bytes(&self.confirm);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            y2_pub: params.get_element(dec)?,
            confirm: dec.fixed()?,
        })
    }
}

impl ExitRequest {
    pub fn open(
        &self,
        params: &GroupParams,
        node_secret: &Scalar,
    ) -> Result<ExitRequestBody, HandshakeError> {
        let bytes = hybrid_decrypt(params, node_secret, &self.sealed)
            .map_err(|_| HandshakeError::DecryptFailed)?;
        let mut dec = Decoder::new(&bytes);
        let body = ExitRequestBody::decode(params, &mut dec)?;
        dec.finish()?;
        Ok(body)
    }
}

pub fn build_exit_request<R: RngCore + ?Sized>(
    params: &GroupParams,
    material: Option<&ExitMaterial>,
    exit_pub: &GroupElement,
    rng: &mut R,
) -> Result<(ExitRequest, UserExitState), HandshakeError> {
    let m = material.ok_or(HandshakeError::NoToken)?;
    let body = ExitRequestBody {
        x2_pub: m.x2_pub.clone(),
        sigma2: m.sigma2.clone(),
        r1: m.r1.clone(),
        token: m.token.clone(),
    };
    let mut enc = Encoder::new();
    body.encode(params, &mut enc);
    let sealed = hybrid_encrypt(params, exit_pub, enc.as_slice(), rng)
        .map_err(|_| HandshakeError::DecryptFailed)?;
    Ok((
        ExitRequest { sealed },
        UserExitState {
            x2: m.x2.clone(),
            x2_pub: m.x2_pub.clone(),
        },
    ))
}

/// Checks run cheapest first: replay lookup, token, then the group
/// signature. The commitment is recorded only once everything passed.
pub fn ex_process_exit_request<R: RngCore + ?Sized>(
    ctx: &ExitContext<'_>,
    cache: &mut ReplayCache,
    req: &ExitRequest,
    rng: &mut R,
) -> Result<ExitAccepted, HandshakeError> {
    let body = req.open(ctx.params, ctx.node_secret)?;
    ex_process_exit_body(ctx, cache, body, rng)
}

/// The checks of [`ex_process_exit_request`] on an already decrypted body.
pub fn ex_process_exit_body<R: RngCore + ?Sized>(
    ctx: &ExitContext<'_>,
    cache: &mut ReplayCache,
    body: ExitRequestBody,
    rng: &mut R,
) -> Result<ExitAccepted, HandshakeError> {
    let params = ctx.params;
    let com = commit_bytes(params, &body.sigma2.to_bytes(params), &body.r1);
    if cache.contains(params, &com) {
        return Err(HandshakeError::Replayed);
    }
    bgs_check(
        params,
        &body.token,
        &com,
        ctx.ring,
        ctx.current_epoch,
        ctx.token_window,
    )?;
    gs_check(
        &body.sigma2,
        &params.element_bytes(&body.x2_pub),
        ctx.gk,
        ctx.gs_window,
    )?;
    cache.insert(params, &com, body.token.epoch);

    let (y2, y2_pub) = dh_keygen(params, rng);
    let shared = dh_shared(params, &y2, &body.x2_pub).map_err(|_| HandshakeError::DecryptFailed)?;
    let (key, confirm) = derive_keys(
        params,
        &shared,
        &transcript(params, b"exit", &body.x2_pub, &y2_pub),
    );
    Ok(ExitAccepted {
        response: ExitResponse {
            y2_pub: y2_pub.clone(),
            confirm,
        },
        key,
        record: ExitSessionRecord {
            x2_pub: body.x2_pub,
            y2_pub,
            y2,
            shared,
            sigma2: body.sigma2,
            r1: body.r1,
            epoch: body.token.epoch,
        },
    })
}

pub fn user_finish_exit(
    params: &GroupParams,
    state: &UserExitState,
    resp: &ExitResponse,
) -> Result<SymmetricKey, HandshakeError> {
    let shared =
        dh_shared(params, &state.x2, &resp.y2_pub).map_err(|_| HandshakeError::ConfirmMismatch)?;
    let (key, confirm) = derive_keys(
        params,
        &shared,
        &transcript(params, b"exit", &state.x2_pub, &resp.y2_pub),
    );
    if !super::confirm_matches(&confirm, &resp.confirm) {
        return Err(HandshakeError::ConfirmMismatch);
    }
    Ok(key)
}
