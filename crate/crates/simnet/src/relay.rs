//! Relay actors. Every relay telescopes and forwards; entries additionally
//! run the entry handshake and exits the exit handshake, the evidence log
//! and denunciation.

use std::collections::BTreeMap;
use std::sync::Arc;

use fairtor_core::blindsig::{EpochPublicKey, EpochSignerKeys, KeyRing};
use fairtor_core::crypto::{seal, GroupElement, GroupParams, Scalar, Sealed, SymmetricKey};
use fairtor_core::encoding::Encoder;
use fairtor_core::fairness::{build_denunciation, ExitLogRecord, FairnessError, LogStore};
use fairtor_core::groupsig::GroupKey;
use fairtor_core::handshake::wire::Message;
use fairtor_core::handshake::{
    en_process_commit_body, en_process_opening_body, en_verify_entry_body, ex_process_exit_body,
    onion_unwrap, plain_respond, EntryAccepted, EntryContext, EntryPending, ExitContext,
    ExitRequest, HandshakeError, ReplayCache,
};
use rand::RngCore;
use serde_json::json;

use crate::events::EventKind;
use crate::network::{
    decode_extend, detail, CircuitKey, Cx, Envelope, NetConfig, Observation, Payload,
};
use crate::network::{AUTHORITY, SERVER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Entry,
    Middle,
    Exit,
}

/// Per-circuit state at one relay.
#[derive(Clone, Debug)]
pub struct Hop {
    pub key: SymmetricKey,
    /// Next hop and the link id towards it, once extended.
    pub next: Option<CircuitKey>,
    /// Server-side stream id at an exit.
    pub stream: Option<u64>,
}

pub struct Relay {
    pub name: String,
    pub role: Role,
    secret: Scalar,
    pub public: GroupElement,
    gk: Option<GroupKey>,
    pub(crate) signer: Option<Arc<EpochSignerKeys>>,
    ring: KeyRing,
    replay: ReplayCache,
    logs: LogStore,
    hops: BTreeMap<CircuitKey, Hop>,
    back: BTreeMap<CircuitKey, CircuitKey>,
    pending: BTreeMap<CircuitKey, EntryPending>,
}

pub(crate) fn fairness_code(e: &FairnessError) -> String {
    match e {
        FairnessError::Expired => "Expired".into(),
        FairnessError::UnknownRecord => "UnknownRecord".into(),
        FairnessError::SeqOutOfRange { .. } => "SeqOutOfRange".into(),
        FairnessError::VerifyFailed(r) => r.code().into(),
        FairnessError::UnknownTag => "UnknownTag".into(),
        FairnessError::AlreadyRevoked => "AlreadyRevoked".into(),
        FairnessError::KeyMismatch => "KeyMismatch".into(),
    }
}

impl Relay {
    pub fn new(name: String, role: Role, secret: Scalar, public: GroupElement) -> Self {
        Self {
            name,
            role,
            secret,
            public,
            gk: None,
            signer: None,
            ring: KeyRing::new(),
            replay: ReplayCache::new(),
            logs: LogStore::new(),
            hops: BTreeMap::new(),
            back: BTreeMap::new(),
            pending: BTreeMap::new(),
        }
    }

    pub fn hop(&self, key: &CircuitKey) -> Option<&Hop> {
        self.hops.get(key)
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    pub fn logs(&self) -> &LogStore {
        &self.logs
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    pub(crate) fn sync(
        &mut self,
        gk: &GroupKey,
        epoch_key: Option<&EpochPublicKey>,
        epoch: u64,
        token_window: u64,
    ) {
        if self.gk.as_ref().map(GroupKey::version) != Some(gk.version()) {
            self.gk = Some(gk.clone());
        }
        if self.role == Role::Exit {
            if let Some(pk) = epoch_key {
                if self.ring.get(pk.epoch, pk.key_id).is_none() {
                    self.ring.insert(pk.clone());
                }
            }
            self.ring.prune_before(epoch.saturating_sub(token_window));
        }
    }

    /// Epoch change at an exit: drop expired evidence and replay entries.
    /// Returns the number of purged records.
    pub(crate) fn rotate(&mut self, epoch: u64, token_window: u64) -> Option<usize> {
        if self.role != Role::Exit {
            return None;
        }
        self.replay.prune(epoch, token_window);
        let n = self.logs.purge_expired(epoch);
        (n > 0).then_some(n)
    }

    fn observe(&self, cx: &mut Cx<'_>, circuit: &CircuitKey, bytes: &[u8]) {
        cx.observed.push(Observation {
            relay: self.name.clone(),
            role: self.role,
            circuit: circuit.clone(),
            bytes: bytes.to_vec(),
        });
    }

    fn send_wire(&self, cx: &mut Cx<'_>, circuit: &CircuitKey, to: &CircuitKey, msg: &Message) {
        let bytes = msg.encode(cx.params);
        self.observe(cx, circuit, &bytes);
        cx.send(&self.name, &to.0, to.1, Payload::Wire(bytes));
    }

    fn destroy(&self, cx: &mut Cx<'_>, circuit: &CircuitKey, reason: &str) {
        self.send_wire(cx, circuit, circuit, &Message::Destroy(reason.to_string()));
    }

    pub(crate) fn handle(&mut self, cx: &mut Cx<'_>, env: Envelope) {
        let from: CircuitKey = (env.from.clone(), env.link);
        match env.payload {
            Payload::Wire(bytes) => {
                if let Some(prev) = self.back.get(&from).cloned() {
                    self.backward(cx, &prev, &bytes);
                } else {
                    self.forward_in(cx, &from, &bytes);
                }
            }
            Payload::Complaint { seq, data } if self.role == Role::Exit => {
                self.denounce(cx, env.link, seq, &data);
            }
            _ => {}
        }
    }

    /// Traffic arriving from the previous hop.
    fn forward_in(&mut self, cx: &mut Cx<'_>, from: &CircuitKey, bytes: &[u8]) {
        self.observe(cx, from, bytes);
        let msg = match Message::decode(cx.params, bytes) {
            Ok(m) => m,
            Err(_) => return self.destroy(cx, from, "Malformed"),
        };
        match msg {
            Message::EntryRequest(req) if self.role == Role::Entry => {
                let result = req.open(cx.params, &self.secret).and_then(|body| {
                    self.observe_body(cx, from, |enc| body.encode(cx.params, enc));
                    let (params, cfg) = (cx.params, cx.cfg);
                    let ctx = self.entry_context(params, cfg, cx.epoch)?;
                    en_verify_entry_body(&ctx, &body, cx.rng)
                });
                self.finish_entry(cx, from, result);
            }
            Message::EntryCommit(req) if self.role == Role::Entry => {
                let result = req.open(cx.params, &self.secret).and_then(|body| {
                    self.observe_body(cx, from, |enc| body.encode(cx.params, enc));
                    let (params, cfg) = (cx.params, cx.cfg);
                    let ctx = self.entry_context(params, cfg, cx.epoch)?;
                    en_process_commit_body(&ctx, body, cx.rng)
                });
                match result {
                    Ok((challenge, pending)) => {
                        self.pending.insert(from.clone(), pending);
                        self.send_wire(cx, from, from, &Message::EntryChallenge(challenge));
                    }
                    Err(e) => self.reject_entry(cx, from, &e),
                }
            }
            Message::EntryOpening(req) if self.role == Role::Entry => {
                let Some(pending) = self.pending.remove(from) else {
                    return self.reject_entry(cx, from, &HandshakeError::CutAndChooseMismatch);
                };
                let result = req.open(cx.params, &self.secret).and_then(|body| {
                    self.observe_body(cx, from, |enc| body.encode(cx.params, enc));
                    let (params, cfg) = (cx.params, cx.cfg);
                    let ctx = self.entry_context(params, cfg, cx.epoch)?;
                    en_process_opening_body(&ctx, &pending, &body, cx.rng)
                });
                self.finish_entry(cx, from, result);
            }
            Message::PlainRequest(req) => match plain_respond(cx.params, &req, cx.rng) {
                Ok((resp, key)) => {
                    self.hops.insert(
                        from.clone(),
                        Hop {
                            key,
                            next: None,
                            stream: None,
                        },
                    );
                    cx.emit(&self.name, EventKind::HopAccepted, detail([]));
                    self.send_wire(cx, from, from, &Message::PlainResponse(resp));
                }
                Err(e) => {
                    cx.emit(
                        &self.name,
                        EventKind::HopRejected,
                        detail([("reason", json!(e.code()))]),
                    );
                    self.destroy(cx, from, e.code());
                }
            },
            Message::ExitRequest(req) if self.role == Role::Exit => {
                self.exit_handshake(cx, from, &req)
            }
            Message::Relay(cell) => self.relay_forward(cx, from, &cell),
            Message::Destroy(_) => {
                self.hops.remove(from);
                self.pending.remove(from);
            }
            _ => self.destroy(cx, from, "Unexpected"),
        }
    }

    fn entry_context<'a>(
        &'a self,
        params: &'a GroupParams,
        cfg: &NetConfig,
        epoch: u64,
    ) -> Result<EntryContext<'a>, HandshakeError> {
        let signer = self
            .signer
            .as_deref()
            .ok_or(HandshakeError::UnknownEpoch(epoch))?;
        Ok(EntryContext {
            params,
            node_secret: &self.secret,
            gk: self.gk.as_ref().expect("synced before traffic"),
            signer,
            k: cfg.k,
            window: cfg.gs_window,
        })
    }

    /// Decrypted request bodies count as observed by the relay.
    fn observe_body(&self, cx: &mut Cx<'_>, from: &CircuitKey, encode: impl FnOnce(&mut Encoder)) {
        let mut enc = Encoder::new();
        encode(&mut enc);
        self.observe(cx, from, enc.as_slice());
    }

    fn finish_entry(
        &mut self,
        cx: &mut Cx<'_>,
        from: &CircuitKey,
        result: Result<EntryAccepted, HandshakeError>,
    ) {
        match result {
            Ok(acc) => {
                self.hops.insert(
                    from.clone(),
                    Hop {
                        key: acc.key,
                        next: None,
                        stream: None,
                    },
                );
                cx.emit(
                    &self.name,
                    EventKind::EntryAccepted,
                    detail([("from", json!(from.0)), ("survivor", json!(acc.survivor))]),
                );
                cx.emit(
                    &self.name,
                    EventKind::TokenIssued,
                    detail([("token_epoch", json!(cx.epoch))]),
                );
                self.send_wire(cx, from, from, &Message::EntryResponse(acc.response));
            }
            Err(e) => self.reject_entry(cx, from, &e),
        }
    }

    fn reject_entry(&self, cx: &mut Cx<'_>, from: &CircuitKey, e: &HandshakeError) {
        cx.emit(
            &self.name,
            EventKind::EntryRejected,
            detail([("from", json!(from.0)), ("reason", json!(e.code()))]),
        );
        self.destroy(cx, from, e.code());
    }

    fn exit_handshake(&mut self, cx: &mut Cx<'_>, from: &CircuitKey, req: &ExitRequest) {
        let body = match req.open(cx.params, &self.secret) {
            Ok(body) => body,
            Err(e) => return self.reject_exit(cx, from, &e),
        };
        self.observe_body(cx, from, |enc| body.encode(cx.params, enc));
        let ctx = ExitContext {
            params: cx.params,
            node_secret: &self.secret,
            gk: self.gk.as_ref().expect("synced before traffic"),
            ring: &self.ring,
            current_epoch: cx.epoch,
            gs_window: cx.cfg.gs_window,
            token_window: cx.cfg.token_window,
        };
        let result = ex_process_exit_body(&ctx, &mut self.replay, body, cx.rng);
        match result {
            Ok(acc) => {
                let stream = cx.rng.next_u64();
                self.logs.insert(ExitLogRecord::new(
                    stream,
                    &acc.record,
                    cx.epoch,
                    cx.cfg.retention,
                ));
                self.hops.insert(
                    from.clone(),
                    Hop {
                        key: acc.key,
                        next: None,
                        stream: Some(stream),
                    },
                );
                cx.emit(
                    &self.name,
                    EventKind::ExitAccepted,
                    detail([("token_epoch", json!(acc.record.epoch))]),
                );
                self.send_wire(cx, from, from, &Message::ExitResponse(acc.response));
            }
            Err(e) => self.reject_exit(cx, from, &e),
        }
    }

    fn reject_exit(&self, cx: &mut Cx<'_>, from: &CircuitKey, e: &HandshakeError) {
        cx.emit(
            &self.name,
            EventKind::ExitRejected,
            detail([("reason", json!(e.code()))]),
        );
        self.destroy(cx, from, e.code());
    }

    /// Removes this relay's layer; the result goes to the next hop, to the
    /// server (at an exit), or is an extend command (at the last hop).
    fn relay_forward(&mut self, cx: &mut Cx<'_>, from: &CircuitKey, cell: &[u8]) {
        let Some(hop) = self.hops.get(from).cloned() else {
            return self.destroy(cx, from, "UnknownCircuit");
        };
        let inner = match onion_unwrap(&hop.key, cell) {
            Ok(b) => b,
            Err(e) => return self.destroy(cx, from, e.code()),
        };
        self.observe(cx, from, &inner);
        if let Some(next) = &hop.next {
            return self.send_wire(cx, from, next, &Message::Relay(inner));
        }
        if let Some(stream) = hop.stream {
            let seq = match self.logs.get_mut(stream) {
                Ok(record) => record.append(Sealed::from_bytes(cell.to_vec())),
                Err(e) => return self.destroy(cx, from, &fairness_code(&e)),
            };
            cx.send(
                &self.name,
                SERVER,
                stream,
                Payload::Deliver { seq, data: inner },
            );
            return;
        }
        let Some((to, handshake)) = decode_extend(&inner) else {
            return self.destroy(cx, from, "Malformed");
        };
        let link = cx.rng.next_u64();
        let next = (to, link);
        self.back.insert(next.clone(), from.clone());
        if let Some(h) = self.hops.get_mut(from) {
            h.next = Some(next.clone());
        }
        self.observe(cx, from, &handshake);
        cx.send(&self.name, &next.0, next.1, Payload::Wire(handshake));
    }

    /// Traffic from the next hop: add this relay's layer and pass it back.
    fn backward(&mut self, cx: &mut Cx<'_>, prev: &CircuitKey, bytes: &[u8]) {
        let Some(hop) = self.hops.get(prev) else {
            return;
        };
        self.observe(cx, prev, bytes);
        let sealed = seal(&hop.key, bytes, cx.rng).into_bytes();
        self.send_wire(cx, prev, prev, &Message::Relay(sealed));
    }

    fn denounce(&mut self, cx: &mut Cx<'_>, stream: u64, seq: u64, msg: &[u8]) {
        let built = self
            .logs
            .get(stream)
            .and_then(|record| build_denunciation(cx.params, record, msg, seq, cx.epoch, cx.rng));
        match built {
            Ok(bundle) => {
                cx.emit(
                    &self.name,
                    EventKind::Denounced,
                    detail([("seq", json!(seq))]),
                );
                cx.send(
                    &self.name,
                    AUTHORITY,
                    0,
                    Payload::Bundle(bundle.to_file_bytes(cx.params)),
                );
            }
            Err(e) => cx.emit(
                &self.name,
                EventKind::DenounceFailed,
                detail([("seq", json!(seq)), ("reason", json!(fairness_code(&e)))]),
            ),
        }
    }
}
