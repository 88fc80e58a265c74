//! ElGamal over an arbitrary generator of the subgroup.

use super::group::{GroupElement, GroupParams, Scalar};
use crate::encoding::{DecodeError, Decoder, Encoder};

/// `(base^r, m * key^r)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElGamalCiphertext {
    pub c1: GroupElement,
    pub c2: GroupElement,
}

impl ElGamalCiphertext {
    pub fn encode(&self, params: &GroupParams, enc: &mut Encoder) {
        params.put_element(enc, &self.c1);
        params.put_element(enc, &self.c2);
    }

    pub fn decode(params: &GroupParams, dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            c1: params.get_element(dec)?,
            c2: params.get_element(dec)?,
        })
    }
}

pub fn elgamal_encrypt(
    params: &GroupParams,
    base: &GroupElement,
    key: &GroupElement,
    m: &GroupElement,
    r: &Scalar,
) -> ElGamalCiphertext {
    ElGamalCiphertext {
        c1: params.pow(base, r),
        c2: params.mul(m, &params.pow(key, r)),
    }
}

/// `c2 / c1^secret`.
pub fn elgamal_decrypt(
    params: &GroupParams,
    secret: &Scalar,
    ct: &ElGamalCiphertext,
) -> GroupElement {
    params.mul(&ct.c2, &params.pow_neg(&ct.c1, secret))
}
