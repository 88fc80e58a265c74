//! Per-exit cache of spent token commitments.

use std::collections::HashMap;

use crate::crypto::{Commitment, GroupParams};

#[derive(Clone, Debug, Default)]
pub struct ReplayCache {
    seen: HashMap<Vec<u8>, u64>,
}

impl ReplayCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, params: &GroupParams, com: &Commitment) -> bool {
        self.seen.contains_key(&params.element_bytes(com.element()))
    }

    /// Records `com` as spent with a token from `epoch`.
    pub fn insert(&mut self, params: &GroupParams, com: &Commitment, epoch: u64) {
        self.seen.insert(params.element_bytes(com.element()), epoch);
    }

    /// Forgets commitments whose tokens have expired anyway.
    pub fn prune(&mut self, current_epoch: u64, token_window: u64) -> usize {
        let before = self.seen.len();
        self.seen.retain(|_, e| *e + token_window >= current_epoch);
        before - self.seen.len()
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}
