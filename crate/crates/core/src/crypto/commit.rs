//! Pedersen commitments `g^m h^r`.

use super::group::{GroupElement, GroupParams, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Commitment(pub GroupElement);

impl Commitment {
    pub fn element(&self) -> &GroupElement {
        &self.0
    }
}

pub fn commit(params: &GroupParams, m: &Scalar, r: &Scalar) -> Commitment {
    Commitment(params.mul(&params.g_pow(m), &params.h_pow(r)))
}

/// Commits to arbitrary bytes by hashing them to a scalar first.
pub fn commit_bytes(params: &GroupParams, msg: &[u8], r: &Scalar) -> Commitment {
    commit(params, &message_scalar(params, msg), r)
}

pub fn message_scalar(params: &GroupParams, msg: &[u8]) -> Scalar {
    params.hash_to_scalar(b"commit-msg", msg)
}

pub fn open_commit(params: &GroupParams, c: &Commitment, m: &Scalar, r: &Scalar) -> bool {
    &commit(params, m, r) == c
}
