//! File format for a relay's static Diffie-Hellman key pair.

use std::sync::Arc;

use fairtor_core::crypto::{GroupElement, GroupParams, Scalar};
use fairtor_core::encoding::{DecodeError, Decoder, Encoder};

const NODE_MAGIC: &[u8; 4] = b"FTNK";
const NODE_FORMAT: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeKeyFile {
    pub params: Arc<GroupParams>,
    pub secret: Scalar,
    pub public: GroupElement,
}

impl NodeKeyFile {
    /// `"FTNK" || version || params || secret || public`.
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.raw(NODE_MAGIC).u8(NODE_FORMAT);
        self.params.encode(&mut enc);
        self.params.put_scalar(&mut enc, &self.secret);
        self.params.put_element(&mut enc, &self.public);
        enc.finish()
    }

    /// Rejects files whose public key does not match the secret.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        if dec.raw(4)? != NODE_MAGIC {
            return Err(DecodeError::Magic);
        }
        match dec.u8()? {
            NODE_FORMAT => {}
            other => return Err(DecodeError::Version(other)),
        }
        let params = GroupParams::decode_shared(&mut dec)?;
        let secret = params.get_scalar(&mut dec)?;
        let public = params.get_element(&mut dec)?;
        dec.finish()?;
        if params.g_pow(&secret) != public {
            return Err(DecodeError::Invalid("public key does not match secret"));
        }
        Ok(Self {
            params,
            secret,
            public,
        })
    }
}
