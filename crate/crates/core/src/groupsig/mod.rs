//! Group signatures over an explicit allowed set: join with proof of work,
//! sign, verify (which is where blocking happens), open, trace and revoke.

mod keys;
mod pow;
mod signature;

use thiserror::Error;

pub use keys::{
    decode_revocation_list, enroll, gs_join, gs_revoke, gs_setup, gs_setup_with_secret,
    version_digest, AllowedSet, GroupKey, GroupManagerKey, JoinRequest, MemberKey, MembershipEvent,
};
pub use pow::{
    pow_solve, pow_solve_counted, pow_verify, PowPuzzle, PowSolution, DEFAULT_POW_DIFFICULTY,
};
pub use signature::{
    gs_check, gs_decrypt, gs_open, gs_sign, gs_sign_at, gs_sign_with_randomness, gs_trace,
    gs_verify, gs_verify_historic, Branch, GroupSignature, DEFAULT_VERSION_WINDOW,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupSigError {
    #[error("proof of work does not solve an issued puzzle")]
    PowInvalid,
    #[error("proof of knowledge of the member secret failed")]
    ProofInvalid,
    #[error("tag already registered")]
    DuplicateTag,
    #[error("signer is not in the allowed set")]
    NotInAllowedSet,
    #[error("decrypted tag is not registered")]
    UnknownTag,
    #[error("tag not registered")]
    NotFound,
    #[error("tag already revoked")]
    AlreadyRevoked,
    #[error("signature version is outside the accepted window")]
    StaleVersion,
    #[error("signature does not verify")]
    InvalidSignature,
    #[error("manager key and group key do not belong together")]
    KeyMismatch,
}
