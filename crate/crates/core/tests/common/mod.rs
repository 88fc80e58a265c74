#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use fairtor_core::blindsig::{EpochSignerKeys, KeyRing, DEFAULT_MODULUS_BITS};
use fairtor_core::crypto::{dh_keygen, GroupElement, GroupParams, Scalar};
use fairtor_core::groupsig::{
    enroll, gs_setup, GroupKey, GroupManagerKey, MemberKey, DEFAULT_VERSION_WINDOW,
};
use fairtor_core::handshake::{EntryContext, ExitContext};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const TOKEN_WINDOW: u64 = 1;

/// Epoch keys for epochs 0..3, generated once per test binary.
pub fn epoch_keys() -> &'static [EpochSignerKeys] {
    static KEYS: OnceLock<Vec<EpochSignerKeys>> = OnceLock::new();
    KEYS.get_or_init(|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0xe90c);
        (0..3)
            .map(|e| EpochSignerKeys::generate(e, 0, DEFAULT_MODULUS_BITS, &mut rng).unwrap())
            .collect()
    })
}

pub struct World {
    pub params: Arc<GroupParams>,
    pub mk: GroupManagerKey,
    pub gk: GroupKey,
    pub members: Vec<MemberKey>,
    pub entry_secret: Scalar,
    pub entry_pub: GroupElement,
    pub exit_secret: Scalar,
    pub exit_pub: GroupElement,
    pub ring: KeyRing,
    pub epoch: u64,
    pub k: usize,
    pub rng: ChaCha20Rng,
}

impl World {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        let params = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mut mk, mut gk) = gs_setup(params.clone(), &mut rng);
        mk.set_pow_difficulty(4);
        let members = (0..n)
            .map(|_| enroll(&mut mk, &mut gk, &mut rng).unwrap())
            .collect();
        let (entry_secret, entry_pub) = dh_keygen(&params, &mut rng);
        let (exit_secret, exit_pub) = dh_keygen(&params, &mut rng);
        let mut ring = KeyRing::new();
        for k in epoch_keys() {
            ring.insert(k.public().clone());
        }
        Self {
            params,
            mk,
            gk,
            members,
            entry_secret,
            entry_pub,
            exit_secret,
            exit_pub,
            ring,
            epoch: 0,
            k,
            rng,
        }
    }

    pub fn signer(&self) -> &'static EpochSignerKeys {
        &epoch_keys()[self.epoch as usize]
    }

    pub fn entry_ctx(&self) -> EntryContext<'_> {
        EntryContext {
            params: &self.params,
            node_secret: &self.entry_secret,
            gk: &self.gk,
            signer: self.signer(),
            k: self.k,
            window: DEFAULT_VERSION_WINDOW,
        }
    }

    pub fn exit_ctx(&self) -> ExitContext<'_> {
        ExitContext {
            params: &self.params,
            node_secret: &self.exit_secret,
            gk: &self.gk,
            ring: &self.ring,
            current_epoch: self.epoch,
            gs_window: DEFAULT_VERSION_WINDOW,
            token_window: TOKEN_WINDOW,
        }
    }
}
