//! Unmodified DH handshake for middle hops.

use rand::RngCore;

use super::{transcript, HandshakeError};
use crate::crypto::hash::Digest;
use crate::crypto::{
    derive_keys, dh_keygen, dh_shared, GroupElement, GroupParams, Scalar, SymmetricKey,
};
use crate::encoding::{DecodeError, Decoder, Encoder};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainRequest {
    pub x_pub: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainResponse {
    pub y_pub: GroupElement,
    pub confirm: Digest,
}

#[derive(Clone, Debug)]
pub struct PlainScratch {
    x: Scalar,
    x_pub: GroupElement,
}

impl PlainRequest {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.x_pub);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            x_pub: params.get_element(dec)?,
        })
    }
}

impl PlainResponse {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.y_pub);
        enc.bytes(&self.confirm);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            y_pub: params.get_element(dec)?,
            confirm: dec.fixed()?,
        })
    }
}

pub fn plain_request<R: RngCore + ?Sized>(
    params: &GroupParams,
    rng: &mut R,
) -> (PlainRequest, PlainScratch) {
    let (x, x_pub) = dh_keygen(params, rng);
    (
        PlainRequest {
            x_pub: x_pub.clone(),
        },
        PlainScratch { x, x_pub },
    )
}

pub fn plain_respond<R: RngCore + ?Sized>(
    params: &GroupParams,
    req: &PlainRequest,
    rng: &mut R,
) -> Result<(PlainResponse, SymmetricKey), HandshakeError> {
    let (y, y_pub) = dh_keygen(params, rng);
    let shared = dh_shared(params, &y, &req.x_pub).map_err(|_| HandshakeError::DecryptFailed)?;
    let (key, confirm) = derive_keys(
        params,
        &shared,
        &transcript(params, b"plain", &req.x_pub, &y_pub),
    );
    Ok((PlainResponse { y_pub, confirm }, key))
}

pub fn plain_finish(
    params: &GroupParams,
    scratch: &PlainScratch,
    resp: &PlainResponse,
) -> Result<SymmetricKey, HandshakeError> {
    let shared =
        dh_shared(params, &scratch.x, &resp.y_pub).map_err(|_| HandshakeError::ConfirmMismatch)?;
    let (key, confirm) = derive_keys(
        params,
        &shared,
        &transcript(params, b"plain", &scratch.x_pub, &resp.y_pub),
    );
    if !super::confirm_matches(&confirm, &resp.confirm) {
        return Err(HandshakeError::ConfirmMismatch);
    }
    Ok(key)
}
