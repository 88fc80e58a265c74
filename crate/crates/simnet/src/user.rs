//! User actors: join, telescope circuits hop by hop, and send data.

use std::collections::BTreeMap;

use fairtor_core::blindsig::EpochPublicKey;
use fairtor_core::crypto::aead::{seal_with_nonce, sequence_nonce};
use fairtor_core::crypto::{Scalar, SymmetricKey};
use fairtor_core::groupsig::{GroupKey, JoinRequest, MemberKey};
use fairtor_core::handshake::wire::Message;
use fairtor_core::handshake::{
    build_entry_request, build_exit_request, onion_unwrap, onion_wrap, onion_wrap_sealed,
    plain_finish, plain_request, prepare_entry, seal_entry_commit, seal_entry_opening,
    user_finish_entry, user_finish_exit, BlindedInstance, EntryOpeningBody, ExitMaterial,
    HandshakeError, PlainScratch, UserEntryState, UserExitState,
};
use num_bigint::BigUint;
use rand::RngCore;
use serde_json::json;

use crate::events::EventKind;
use crate::leakage::{signature_fields, value_bytes, WindowSet};
use crate::network::{detail, encode_extend, AuditWindows, Cx, Envelope, Payload, AUTHORITY};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitStatus {
    Building,
    Open,
    /// `hop` is the index of the relay that refused (0 is the entry).
    Failed {
        hop: usize,
        reason: String,
    },
}

#[derive(Clone, Debug)]
pub struct UserCircuit {
    pub name: String,
    pub path: Vec<String>,
    pub link: u64,
    pub keys: Vec<SymmetricKey>,
    pub status: CircuitStatus,
    pub entry_state: Option<UserEntryState>,
    pub material: Option<ExitMaterial>,
    pub beta_signed: Option<BigUint>,
    plain: Option<PlainScratch>,
    exit_state: Option<UserExitState>,
    next_seq: u64,
}

pub struct User {
    pub name: String,
    join_secret: Option<Scalar>,
    member: Option<MemberKey>,
    gk: Option<GroupKey>,
    epoch_key: Option<EpochPublicKey>,
    circuits: BTreeMap<String, UserCircuit>,
    by_link: BTreeMap<u64, String>,
}

/// The survivor's exit-side values, known to the user before anything is
/// sent.
fn survivor_windows(inst: &BlindedInstance) -> WindowSet {
    let mut fields = signature_fields(&inst.signed.sigma2);
    fields.push(value_bytes(inst.r1.value()));
    fields.push(value_bytes(inst.signed.x2_pub.value()));
    fields.push(value_bytes(inst.com.element().value()));
    WindowSet::from_fields(&fields)
}

impl User {
    pub fn new(name: String) -> Self {
        Self {
            name,
            join_secret: None,
            member: None,
            gk: None,
            epoch_key: None,
            circuits: BTreeMap::new(),
            by_link: BTreeMap::new(),
        }
    }

    pub fn is_member(&self) -> bool {
        self.member.is_some()
    }

    pub fn member(&self) -> Option<&MemberKey> {
        self.member.as_ref()
    }

    /// Version of the group key this user signs against.
    pub fn group_key_version(&self) -> Option<u64> {
        self.gk.as_ref().map(GroupKey::version)
    }

    pub fn circuit(&self, name: &str) -> Option<&UserCircuit> {
        self.circuits.get(name)
    }

    pub fn circuits(&self) -> impl Iterator<Item = &UserCircuit> {
        self.circuits.values()
    }

    /// Adopts a newer group key only while still listed in it.
    pub(crate) fn sync(&mut self, gk: &GroupKey, epoch_key: Option<&EpochPublicKey>) {
        if let Some(m) = &self.member {
            let newer = self.gk.as_ref().is_none_or(|g| g.version() < gk.version());
            if newer && gk.current().contains(m.tag()) {
                self.gk = Some(gk.clone());
            }
        }
        if let Some(pk) = epoch_key {
            self.epoch_key = Some(pk.clone());
        }
    }

    pub(crate) fn request_join(&mut self, cx: &mut Cx<'_>) {
        if self.member.is_none() {
            cx.send(&self.name, AUTHORITY, 0, Payload::PuzzleRequest);
        }
    }

    pub(crate) fn handle(&mut self, cx: &mut Cx<'_>, env: Envelope) {
        match env.payload {
            Payload::Puzzle(puzzle) => {
                let secret = cx.params.random_nonzero_scalar(cx.rng);
                let request = JoinRequest::new(cx.params, &secret, &puzzle, cx.rng);
                self.join_secret = Some(secret);
                cx.send(&self.name, AUTHORITY, 0, Payload::Join(Box::new(request)));
            }
            Payload::JoinAccepted { member } => {
                if let Some(secret) = self.join_secret.take() {
                    self.member = Some(MemberKey::new(cx.params, member, secret));
                }
            }
            Payload::JoinRejected { .. } => self.join_secret = None,
            Payload::Wire(bytes) => {
                if let Some(name) = self.by_link.get(&env.link).cloned() {
                    self.on_circuit_message(cx, &name, &bytes);
                }
            }
            _ => {}
        }
    }

    fn fail(&mut self, cx: &mut Cx<'_>, circuit: &str, hop: usize, reason: &str) {
        if let Some(c) = self.circuits.get_mut(circuit) {
            c.status = CircuitStatus::Failed {
                hop,
                reason: reason.to_string(),
            };
            cx.emit(
                &self.name,
                EventKind::CircuitFailed,
                detail([
                    ("circuit", json!(circuit)),
                    ("hop", json!(hop)),
                    ("reason", json!(reason)),
                ]),
            );
        }
    }

    pub(crate) fn start_circuit(&mut self, cx: &mut Cx<'_>, name: &str, path: Vec<String>) {
        let link = cx.rng.next_u64();
        self.by_link.insert(link, name.to_string());
        self.circuits.insert(
            name.to_string(),
            UserCircuit {
                name: name.to_string(),
                path: path.clone(),
                link,
                keys: Vec::new(),
                status: CircuitStatus::Building,
                entry_state: None,
                material: None,
                beta_signed: None,
                plain: None,
                exit_state: None,
                next_seq: 0,
            },
        );
        let (Some(member), Some(gk), Some(pk)) = (&self.member, &self.gk, &self.epoch_key) else {
            return self.fail(cx, name, 0, "NotJoined");
        };
        let entry = &path[0];
        let entry_pub = &cx.consensus[entry];
        let (msg, state) = if cx.cfg.interactive_cc {
            match prepare_entry(cx.params, member, gk, pk, cx.cfg.k, cx.rng) {
                Ok(state) => {
                    let commit =
                        seal_entry_commit(cx.params, entry_pub, &state.commit_body(), cx.rng);
                    (Message::EntryCommit(commit), state)
                }
                Err(e) => return self.fail(cx, name, 0, e.code()),
            }
        } else {
            match build_entry_request(cx.params, member, gk, pk, entry_pub, cx.cfg.k, cx.rng) {
                Ok((req, state)) => (Message::EntryRequest(req), state),
                Err(e) => return self.fail(cx, name, 0, e.code()),
            }
        };
        if let Some(s) = state.survivor {
            cx.audits.push(AuditWindows {
                entry: entry.clone(),
                circuit: (self.name.clone(), link),
                windows: survivor_windows(&state.instances[s]),
            });
        }
        self.circuits.get_mut(name).expect("inserted").entry_state = Some(state);
        cx.send(
            &self.name,
            entry,
            link,
            Payload::Wire(msg.encode(cx.params)),
        );
    }

    /// Peels backward layers until the message from the responding hop.
    fn on_circuit_message(&mut self, cx: &mut Cx<'_>, name: &str, bytes: &[u8]) {
        let circuit = &self.circuits[name];
        if circuit.status != CircuitStatus::Building {
            return;
        }
        let mut depth = 0;
        let mut msg = Message::decode(cx.params, bytes);
        while let Ok(Message::Relay(cell)) = &msg {
            let Some(key) = circuit.keys.get(depth) else {
                break;
            };
            msg = match onion_unwrap(key, cell) {
                Ok(inner) => Message::decode(cx.params, &inner),
                Err(e) => return self.fail(cx, name, depth, e.code()),
            };
            depth += 1;
        }
        let Ok(msg) = msg else {
            return self.fail(cx, name, depth, "Malformed");
        };
        if let Message::Destroy(reason) = &msg {
            return self.fail(cx, name, depth, reason);
        }
        if depth != circuit.keys.len() {
            return self.fail(cx, name, depth, "Unexpected");
        }
        match self.advance(cx, name, msg) {
            Ok(Progress::HopAdded) => self.extend(cx, name),
            Ok(Progress::Waiting) => {}
            Err(e) => self.fail(cx, name, depth, e.code()),
        }
    }

    /// Consumes the handshake response of the hop being added.
    fn advance(
        &mut self,
        cx: &mut Cx<'_>,
        name: &str,
        msg: Message,
    ) -> Result<Progress, HandshakeError> {
        let gk = self.gk.as_ref();
        let circuit = self.circuits.get_mut(name).expect("known circuit");
        match msg {
            Message::EntryChallenge(ch) if circuit.keys.is_empty() => {
                let state = circuit
                    .entry_state
                    .as_mut()
                    .ok_or(HandshakeError::NoToken)?;
                let gk = gk.ok_or(HandshakeError::SigInvalid)?;
                let survivor = ch.survivor as usize;
                let openings = state.open_all_but(cx.params, gk, survivor, cx.rng)?;
                cx.audits.push(AuditWindows {
                    entry: circuit.path[0].clone(),
                    circuit: (self.name.clone(), circuit.link),
                    windows: survivor_windows(&state.instances[survivor]),
                });
                let entry_pub = &cx.consensus[&circuit.path[0]];
                let opening = seal_entry_opening(
                    cx.params,
                    entry_pub,
                    &EntryOpeningBody { openings },
                    cx.rng,
                );
                let bytes = Message::EntryOpening(opening).encode(cx.params);
                cx.send(
                    &self.name,
                    &circuit.path[0],
                    circuit.link,
                    Payload::Wire(bytes),
                );
                return Ok(Progress::Waiting);
            }
            Message::EntryResponse(resp) if circuit.keys.is_empty() => {
                let state = circuit
                    .entry_state
                    .as_ref()
                    .ok_or(HandshakeError::NoToken)?;
                let (key, material) = user_finish_entry(cx.params, state, &resp)?;
                cx.audits.push(AuditWindows {
                    entry: circuit.path[0].clone(),
                    circuit: (self.name.clone(), circuit.link),
                    windows: WindowSet::from_fields(&[value_bytes(&material.token.value)]),
                });
                circuit.beta_signed = Some(resp.beta_signed.0.clone());
                circuit.material = Some(material);
                circuit.keys.push(key);
            }
            Message::PlainResponse(resp) => {
                let scratch = circuit
                    .plain
                    .take()
                    .ok_or(HandshakeError::ConfirmMismatch)?;
                circuit.keys.push(plain_finish(cx.params, &scratch, &resp)?);
            }
            Message::ExitResponse(resp) => {
                let state = circuit
                    .exit_state
                    .take()
                    .ok_or(HandshakeError::ConfirmMismatch)?;
                circuit
                    .keys
                    .push(user_finish_exit(cx.params, &state, &resp)?);
            }
            _ => return Err(HandshakeError::ConfirmMismatch),
        }
        Ok(Progress::HopAdded)
    }

    /// Sends the next extend command, or marks the circuit open once the
    /// exit answered.
    fn extend(&mut self, cx: &mut Cx<'_>, name: &str) {
        let circuit = self.circuits.get_mut(name).expect("known circuit");
        let i = circuit.keys.len();
        if i == circuit.path.len() {
            circuit.status = CircuitStatus::Open;
            cx.emit(
                &self.name,
                EventKind::CircuitBuilt,
                detail([("circuit", json!(name)), ("hops", json!(i))]),
            );
            return;
        }
        let hop = circuit.path[i].clone();
        let hop_pub = &cx.consensus[&hop];
        let handshake = if i + 1 == circuit.path.len() {
            match build_exit_request(cx.params, circuit.material.as_ref(), hop_pub, cx.rng) {
                Ok((req, state)) => {
                    circuit.exit_state = Some(state);
                    Message::ExitRequest(req)
                }
                Err(e) => return self.fail(cx, name, i, e.code()),
            }
        } else {
            let (req, scratch) = plain_request(cx.params, cx.rng);
            circuit.plain = Some(scratch);
            Message::PlainRequest(req)
        };
        let command = encode_extend(&hop, &handshake.encode(cx.params));
        let cell = onion_wrap(&circuit.keys, &command, cx.rng);
        let bytes = Message::Relay(cell).encode(cx.params);
        cx.send(
            &self.name,
            &circuit.path[0],
            circuit.link,
            Payload::Wire(bytes),
        );
    }

    /// After the network went idle: a circuit still building has stalled.
    pub(crate) fn settle(&mut self, cx: &mut Cx<'_>, name: &str) -> CircuitStatus {
        let Some(circuit) = self.circuits.get(name) else {
            return CircuitStatus::Failed {
                hop: 0,
                reason: "UnknownCircuit".into(),
            };
        };
        if circuit.status == CircuitStatus::Building {
            let hop = circuit.keys.len();
            self.fail(cx, name, hop, "Stalled");
        }
        self.circuits[name].status.clone()
    }

    /// The exit layer is sealed under the message's sequence number, the
    /// rest are ordinary onion layers.
    pub(crate) fn send_data(&mut self, cx: &mut Cx<'_>, name: &str, data: &[u8]) {
        let Some(circuit) = self.circuits.get_mut(name) else {
            return;
        };
        if circuit.status != CircuitStatus::Open {
            cx.emit(
                &self.name,
                EventKind::SendFailed,
                detail([
                    ("circuit", json!(name)),
                    ("reason", json!("CircuitNotOpen")),
                ]),
            );
            return;
        }
        let (exit_key, outer) = circuit.keys.split_last().expect("open circuit has keys");
        let inner = seal_with_nonce(exit_key, sequence_nonce(circuit.next_seq), data);
        circuit.next_seq += 1;
        let cell = onion_wrap_sealed(outer, inner, cx.rng);
        let bytes = Message::Relay(cell).encode(cx.params);
        cx.send(
            &self.name,
            &circuit.path[0],
            circuit.link,
            Payload::Wire(bytes),
        );
    }
}

enum Progress {
    HopAdded,
    /// Interactive cut-and-choose: the opening was sent, the entry's
    /// response is still to come.
    Waiting,
}
