//! Byte-window scanning for values that must stay on one side of a circuit.

use std::collections::HashSet;

use fairtor_core::groupsig::GroupSignature;
use fairtor_core::handshake::{ExitMaterial, UserEntryState};
use num_bigint::BigUint;

/// Shortest subsequence length that counts as an occurrence.
pub const WINDOW: usize = 8;

/// Every `WINDOW`-byte substring of a set of secret field values.
#[derive(Clone, Debug, Default)]
pub struct WindowSet {
    windows: HashSet<u64>,
}

fn window_key(w: &[u8]) -> u64 {
    u64::from_be_bytes(w.try_into().expect("window width"))
}

impl WindowSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_fields(fields: &[Vec<u8>]) -> Self {
        let mut s = Self::new();
        for f in fields {
            s.add(f);
        }
        s
    }

    pub fn add(&mut self, field: &[u8]) {
        self.windows.extend(field.windows(WINDOW).map(window_key));
    }

    pub fn extend(&mut self, other: &WindowSet) {
        self.windows.extend(other.windows.iter().copied());
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Number of positions in `haystack` where some window occurs.
    pub fn hits(&self, haystack: &[u8]) -> usize {
        if self.windows.is_empty() {
            return 0;
        }
        haystack
            .windows(WINDOW)
            .filter(|w| self.windows.contains(&window_key(w)))
            .count()
    }
}

/// Big-endian magnitude without leading zeros: the value itself, not its
/// padded encoding, so zero padding never counts as a match.
pub fn value_bytes(v: &BigUint) -> Vec<u8> {
    v.to_bytes_be()
}

pub fn signature_fields(sig: &GroupSignature) -> Vec<Vec<u8>> {
    let mut out = vec![
        value_bytes(sig.ciphertext.c1.value()),
        value_bytes(sig.ciphertext.c2.value()),
    ];
    for b in &sig.branches {
        out.push(value_bytes(b.challenge.value()));
        out.push(value_bytes(b.z1.value()));
        out.push(value_bytes(b.z2.value()));
    }
    out
}

/// Values only the exit may see: sigma2, r1, g^x2, com and the token.
pub fn exit_side_fields(material: &ExitMaterial) -> Vec<Vec<u8>> {
    let mut out = signature_fields(&material.sigma2);
    out.push(value_bytes(material.r1.value()));
    out.push(value_bytes(material.x2_pub.value()));
    out.push(value_bytes(material.com.element().value()));
    out.push(value_bytes(&material.token.value));
    out
}

/// Values only the entry may see: sigma1, g^x1, the blinded commitments
/// and the blind signature.
pub fn entry_side_fields(state: &UserEntryState, beta_signed: &BigUint) -> Vec<Vec<u8>> {
    let mut out = signature_fields(&state.sigma1);
    out.push(value_bytes(state.x1_pub.value()));
    out.extend(state.instances.iter().map(|i| value_bytes(&i.beta.0)));
    out.push(value_bytes(beta_signed));
    out
}
