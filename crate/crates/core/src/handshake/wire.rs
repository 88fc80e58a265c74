//! Wire format: a one-byte type tag followed by the canonical body.

use super::entry::{EntryChallenge, EntryCommit, EntryOpening, EntryRequest, EntryResponse};
use super::exit::{ExitRequest, ExitResponse};
use super::plain::{PlainRequest, PlainResponse};
use crate::crypto::{GroupParams, HybridCiphertext};
use crate::encoding::{DecodeError, Decoder, Encoder};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    EntryRequest(EntryRequest),
    EntryResponse(EntryResponse),
    ExitRequest(ExitRequest),
    ExitResponse(ExitResponse),
    PlainRequest(PlainRequest),
    PlainResponse(PlainResponse),
    EntryCommit(EntryCommit),
    EntryChallenge(EntryChallenge),
    EntryOpening(EntryOpening),
    /// Onion-layered payload for a relay.
    Relay(Vec<u8>),
    /// Circuit torn down, with a reason code.
    Destroy(String),
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::EntryRequest(_) => 0x01,
            Message::EntryResponse(_) => 0x02,
            Message::ExitRequest(_) => 0x03,
            Message::ExitResponse(_) => 0x04,
            Message::PlainRequest(_) => 0x05,
            Message::PlainResponse(_) => 0x06,
            Message::EntryCommit(_) => 0x07,
            Message::EntryChallenge(_) => 0x08,
            Message::EntryOpening(_) => 0x09,
            Message::Relay(_) => 0x0a,
            Message::Destroy(_) => 0x0b,
        }
    }

    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.raw(&[self.tag()]);
        match self {
            Message::EntryRequest(m) => m.sealed.encode(params, &mut enc),
            Message::EntryResponse(m) => m.encode(params, &mut enc),
            Message::ExitRequest(m) => m.sealed.encode(params, &mut enc),
            Message::ExitResponse(m) => m.encode(params, &mut enc),
            Message::PlainRequest(m) => m.encode(params, &mut enc),
            Message::PlainResponse(m) => m.encode(params, &mut enc),
            Message::EntryCommit(m) => m.sealed.encode(params, &mut enc),
            Message::EntryChallenge(m) => {
                enc.u32(m.survivor);
            }
            Message::EntryOpening(m) => m.sealed.encode(params, &mut enc),
            Message::Relay(bytes) => {
                enc.bytes(bytes);
            }
            Message::Destroy(reason) => {
                enc.bytes(reason.as_bytes());
            }
        }
        enc.finish()
    }

    pub fn decode(params: &GroupParams, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let tag = dec.raw(1)?[0];
        let hybrid = |dec: &mut Decoder<'_>| HybridCiphertext::decode(params, dec);
        let msg = match tag {
            0x01 => Message::EntryRequest(EntryRequest {
                sealed: hybrid(&mut dec)?,
            }),
            0x02 => Message::EntryResponse(EntryResponse::decode(params, &mut dec)?),
            0x03 => Message::ExitRequest(ExitRequest {
                sealed: hybrid(&mut dec)?,
            }),
            0x04 => Message::ExitResponse(ExitResponse::decode(params, &mut dec)?),
            0x05 => Message::PlainRequest(PlainRequest::decode(params, &mut dec)?),
            0x06 => Message::PlainResponse(PlainResponse::decode(params, &mut dec)?),
            0x07 => Message::EntryCommit(EntryCommit {
                sealed: hybrid(&mut dec)?,
            }),
            0x08 => Message::EntryChallenge(EntryChallenge {
                survivor: dec.u32()?,
            }),
            0x09 => Message::EntryOpening(EntryOpening {
                sealed: hybrid(&mut dec)?,
            }),
            0x0a => Message::Relay(dec.bytes()?.to_vec()),
            0x0b => Message::Destroy(
                String::from_utf8(dec.bytes()?.to_vec())
                    .map_err(|_| DecodeError::Invalid("reason is not utf-8"))?,
            ),
            other => return Err(DecodeError::UnknownTag(other)),
        };
        dec.finish()?;
        Ok(msg)
    }
}
