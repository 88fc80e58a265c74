//! Circuit handshakes: the entry handshake with cut-and-choose token
//! issuance, the exit handshake that spends the token, plain middle-hop
//! handshakes, and onion layering.

mod entry;
mod exit;
mod onion;
mod plain;
mod replay;
pub mod wire;

use subtle::ConstantTimeEq;
use thiserror::Error;

use crate::blindsig::BlindSigError;
use crate::crypto::hash::Digest;
use crate::crypto::{GroupElement, GroupParams};
use crate::encoding::{DecodeError, Encoder};
use crate::groupsig::GroupSigError;

pub use entry::{
    build_entry_request, en_process_commit, en_process_commit_body, en_process_entry_request,
    en_process_opening, en_process_opening_body, en_verify_entry_body, fs_survivor, open_instance,
    prepare_entry, seal_entry_commit, seal_entry_opening, seal_entry_request, sign_instance,
    user_finish_entry, BlindedInstance, EntryAccepted, EntryChallenge, EntryCommit,
    EntryCommitBody, EntryContext, EntryOpening, EntryOpeningBody, EntryPending, EntryRequest,
    EntryRequestBody, EntryResponse, InstanceCommitment, Opening, SignedInstance, UserEntryState,
};
pub use exit::{
    build_exit_request, ex_process_exit_body, ex_process_exit_request, user_finish_exit,
    ExitAccepted, ExitContext, ExitMaterial, ExitRequest, ExitRequestBody, ExitResponse,
    ExitSessionRecord, UserExitState,
};
pub use onion::{onion_peel, onion_unwrap, onion_wrap, onion_wrap_sealed};
pub use plain::{
    plain_finish, plain_request, plain_respond, PlainRequest, PlainResponse, PlainScratch,
};
pub use replay::ReplayCache;

pub const DEFAULT_INSTANCES: usize = 16;
pub const MIN_INSTANCES: usize = 4;
pub const MAX_INSTANCES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HandshakeError {
    #[error("request could not be decrypted")]
    DecryptFailed,
    #[error("malformed message: {0}")]
    Malformed(#[from] DecodeError),
    #[error("group signature invalid")]
    SigInvalid,
    #[error("group signature made over an allowed set outside the accepted window")]
    StaleVersion,
    #[error("signer is not in the allowed set")]
    NotInAllowedSet,
    #[error("cut-and-choose opening does not match its commitment")]
    CutAndChooseMismatch,
    #[error("fewer than {MIN_INSTANCES} cut-and-choose instances")]
    MinInstances,
    #[error("more than {MAX_INSTANCES} cut-and-choose instances")]
    TooManyInstances,
    #[error("key confirmation mismatch")]
    ConfirmMismatch,
    #[error("blinding factor not invertible")]
    NonInvertible,
    #[error("no token held for the exit handshake")]
    NoToken,
    #[error("token invalid")]
    TokenInvalid,
    #[error("token expired")]
    TokenExpired,
    #[error("no signing key for epoch {0}")]
    UnknownEpoch(u64),
    #[error("token already spent at this exit")]
    Replayed,
    #[error("layer authentication failed")]
    Auth,
}

impl HandshakeError {
    /// Stable reason code for logs and statistics.
    pub fn code(&self) -> &'static str {
        match self {
            HandshakeError::DecryptFailed => "DecryptFailed",
            HandshakeError::Malformed(_) => "Malformed",
            HandshakeError::SigInvalid => "SigInvalid",
            HandshakeError::StaleVersion => "StaleVersion",
            HandshakeError::NotInAllowedSet => "NotInAllowedSet",
            HandshakeError::CutAndChooseMismatch => "CutAndChooseMismatch",
            HandshakeError::MinInstances => "MinInstances",
            HandshakeError::TooManyInstances => "TooManyInstances",
            HandshakeError::ConfirmMismatch => "ConfirmMismatch",
            HandshakeError::NonInvertible => "NonInvertible",
            HandshakeError::NoToken => "NoToken",
            HandshakeError::TokenInvalid => "TokenInvalid",
            HandshakeError::TokenExpired => "TokenExpired",
            HandshakeError::UnknownEpoch(_) => "UnknownEpoch",
            HandshakeError::Replayed => "Replayed",
            HandshakeError::Auth => "Auth",
        }
    }
}

impl From<GroupSigError> for HandshakeError {
    fn from(e: GroupSigError) -> Self {
        match e {
            GroupSigError::StaleVersion => HandshakeError::StaleVersion,
            GroupSigError::NotInAllowedSet => HandshakeError::NotInAllowedSet,
            _ => HandshakeError::SigInvalid,
        }
    }
}

impl From<BlindSigError> for HandshakeError {
    fn from(e: BlindSigError) -> Self {
        match e {
            BlindSigError::UnknownEpoch(ep) => HandshakeError::UnknownEpoch(ep),
            BlindSigError::TokenExpired => HandshakeError::TokenExpired,
            BlindSigError::NonInvertible => HandshakeError::NonInvertible,
            _ => HandshakeError::TokenInvalid,
        }
    }
}

/// Constant-time comparison of key-confirmation digests.
pub(crate) fn confirm_matches(ours: &Digest, theirs: &Digest) -> bool {
    ours.ct_eq(theirs).into()
}

/// `hs = canonical(label, X, Y)`: the transcript a session key is bound to.
pub fn transcript(
    params: &GroupParams,
    label: &[u8],
    x_pub: &GroupElement,
    y_pub: &GroupElement,
) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(label);
    params.put_element(&mut enc, x_pub);
    params.put_element(&mut enc, y_pub);
    enc.finish()
}

pub(crate) fn check_instance_count(k: usize) -> Result<(), HandshakeError> {
    if k < MIN_INSTANCES {
        Err(HandshakeError::MinInstances)
    } else if k > MAX_INSTANCES {
        Err(HandshakeError::TooManyInstances)
    } else {
        Ok(())
    }
}
