pub mod blindsig;
pub mod crypto;
pub mod encoding;
pub mod fairness;
pub mod groupsig;
pub mod handshake;
pub mod par;
