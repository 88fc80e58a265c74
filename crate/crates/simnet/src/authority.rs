//! The revocation authority (group manager) and the external server that
//! receives exit traffic and complains about abuse.

use fairtor_core::fairness::{apply_revocation, DenunciationBundle, RevocationAuthority};
use fairtor_core::groupsig::{gs_join, GroupKey};
use serde_json::json;

use crate::directory::RecordKind;
use crate::events::EventKind;
use crate::network::{detail, Cx, Envelope, Payload, AUTHORITY, DIRECTORY, SERVER};
use crate::relay::fairness_code;
use crate::scenario::ABUSE_MARKER;

pub struct Authority {
    ra: RevocationAuthority,
    gk: GroupKey,
    bundles: Vec<Vec<u8>>,
}

impl Authority {
    pub fn new(ra: RevocationAuthority, gk: GroupKey) -> Self {
        Self {
            ra,
            gk,
            bundles: Vec::new(),
        }
    }

    /// The authoritative group key, including every revocation.
    pub fn group_key(&self) -> &GroupKey {
        &self.gk
    }

    pub fn revocation_authority(&self) -> &RevocationAuthority {
        &self.ra
    }

    /// Bundle files as received, accepted or not.
    pub fn bundles(&self) -> &[Vec<u8>] {
        &self.bundles
    }

    fn publish(&self, cx: &mut Cx<'_>, revocation: bool) {
        let version = self.gk.version();
        cx.send(
            AUTHORITY,
            DIRECTORY,
            0,
            Payload::Publish {
                kind: RecordKind::GroupKey,
                version,
                bytes: self.gk.encode(),
            },
        );
        if revocation {
            cx.send(
                AUTHORITY,
                DIRECTORY,
                0,
                Payload::Publish {
                    kind: RecordKind::RevocationList,
                    version,
                    bytes: self.gk.encode_revocation_list(),
                },
            );
        }
    }

    pub(crate) fn handle(&mut self, cx: &mut Cx<'_>, env: Envelope) {
        match env.payload {
            Payload::PuzzleRequest => {
                let puzzle = self.ra.manager_key_mut().issue_puzzle(cx.rng);
                cx.send(AUTHORITY, &env.from, 0, Payload::Puzzle(puzzle));
            }
            Payload::Join(request) => {
                match gs_join(self.ra.manager_key_mut(), &mut self.gk, &request) {
                    Ok(member) => {
                        cx.emit(
                            AUTHORITY,
                            EventKind::Joined,
                            detail([("user", json!(env.from)), ("member", json!(member))]),
                        );
                        self.publish(cx, false);
                        cx.send(AUTHORITY, &env.from, 0, Payload::JoinAccepted { member });
                    }
                    Err(e) => {
                        let reason = format!("{e:?}");
                        cx.emit(
                            AUTHORITY,
                            EventKind::JoinRejected,
                            detail([("user", json!(env.from)), ("reason", json!(reason))]),
                        );
                        cx.send(AUTHORITY, &env.from, 0, Payload::JoinRejected { reason });
                    }
                }
            }
            Payload::Bundle(bytes) => self.on_bundle(cx, &env.from, bytes),
            _ => {}
        }
    }

    fn on_bundle(&mut self, cx: &mut Cx<'_>, from: &str, bytes: Vec<u8>) {
        let bundle = DenunciationBundle::from_file_bytes(cx.params, &bytes);
        self.bundles.push(bytes);
        let bundle = match bundle {
            Ok(b) => b,
            Err(_) => {
                return cx.emit(
                    AUTHORITY,
                    EventKind::DenunciationRejected,
                    detail([("from", json!(from)), ("reason", json!("Malformed"))]),
                )
            }
        };
        match apply_revocation(&bundle, &self.ra, &mut self.gk) {
            Ok(outcome) => {
                let member = outcome
                    .verdict
                    .opened_tag
                    .as_ref()
                    .and_then(|t| self.ra.manager_key().member_id(t));
                let kind = if outcome.revoked {
                    EventKind::Revoked
                } else {
                    EventKind::NotRevoked
                };
                cx.emit(
                    AUTHORITY,
                    kind,
                    detail([
                        ("from", json!(from)),
                        ("member", json!(member)),
                        ("version", json!(outcome.version)),
                    ]),
                );
                if outcome.revoked {
                    self.publish(cx, true);
                }
            }
            Err(e) => cx.emit(
                AUTHORITY,
                EventKind::DenunciationRejected,
                detail([("from", json!(from)), ("reason", json!(fairness_code(&e)))]),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delivery {
    pub exit: String,
    pub stream: u64,
    pub seq: u64,
    pub data: Vec<u8>,
    pub reported: bool,
}

impl Delivery {
    pub fn is_abusive(&self) -> bool {
        self.data.starts_with(ABUSE_MARKER.as_bytes())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Server {
    deliveries: Vec<Delivery>,
}

impl Server {
    pub fn deliveries(&self) -> &[Delivery] {
        &self.deliveries
    }

    pub(crate) fn handle(&mut self, cx: &mut Cx<'_>, env: Envelope) {
        if let Payload::Deliver { seq, data } = env.payload {
            cx.emit(
                SERVER,
                EventKind::MsgDelivered,
                detail([
                    ("exit", json!(env.from)),
                    ("seq", json!(seq)),
                    ("len", json!(data.len())),
                ]),
            );
            self.deliveries.push(Delivery {
                exit: env.from,
                stream: env.link,
                seq,
                data,
                reported: false,
            });
        }
    }

    pub(crate) fn complain_all(&mut self, cx: &mut Cx<'_>) {
        for d in self
            .deliveries
            .iter_mut()
            .filter(|d| d.is_abusive() && !d.reported)
        {
            d.reported = true;
            cx.emit(
                SERVER,
                EventKind::Complained,
                detail([("exit", json!(d.exit)), ("seq", json!(d.seq))]),
            );
            cx.send(
                SERVER,
                &d.exit,
                d.stream,
                Payload::Complaint {
                    seq: d.seq,
                    data: d.data.clone(),
                },
            );
        }
    }
}
