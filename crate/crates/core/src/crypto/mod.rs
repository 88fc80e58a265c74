//! Group arithmetic, hashing, symmetric and hybrid encryption, commitments
//! and sigma protocols.

pub mod aead;
pub mod commit;
pub mod dh;
pub mod elgamal;
pub mod group;
pub mod hash;
pub mod prime;
pub mod sigma;

use thiserror::Error;

pub use aead::{derive_keys, open_sealed, seal, Sealed, SymmetricKey};
pub use commit::{commit, commit_bytes, open_commit, Commitment};
pub use dh::{dh_keygen, dh_shared, hybrid_decrypt, hybrid_encrypt, HybridCiphertext};
pub use elgamal::ElGamalCiphertext;
pub use group::{FixedBase, GroupElement, GroupParams, Scalar};
pub use hash::{hash, Digest};
pub use sigma::{sigma_prove, sigma_verify, SigmaKind, SigmaProof, Statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("element is not in the prime-order subgroup")]
    Subgroup,
    #[error("authentication failed")]
    Auth,
    #[error("witness does not satisfy the statement")]
    WitnessMismatch,
    #[error("invalid group parameters: {0}")]
    InvalidParams(&'static str),
}
