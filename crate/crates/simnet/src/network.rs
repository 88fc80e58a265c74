//! The actor network: a FIFO schedule of envelopes over users, relays, the
//! directory, the revocation authority and an external server.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use fairtor_core::blindsig::{bgs_setup_epoch, EpochKeyRecord, EpochSignerKeys};
use fairtor_core::crypto::{dh_keygen, GroupElement, GroupParams, Scalar, SymmetricKey};
use fairtor_core::encoding::{Decoder, Encoder};
use fairtor_core::fairness::RevocationAuthority;
use fairtor_core::groupsig::{gs_setup, GroupKey, JoinRequest, PowPuzzle};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};

use crate::authority::{Authority, Server};
use crate::directory::{Directory, RecordKind};
use crate::events::{Detail, Event, EventKind, EventLog, Stats};
use crate::leakage::WindowSet;
use crate::relay::{Relay, Role};
use crate::scenario::{entry_name, exit_name, middle_name, user_name, RelayCounts, Scenario};
use crate::user::{CircuitStatus, User, UserCircuit};

pub const SERVER: &str = "srv";
pub const AUTHORITY: &str = "ra";
pub const DIRECTORY: &str = "dir";

/// Upper bound on deliveries per pump; a protocol loop is a bug.
const MAX_DELIVERIES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetConfig {
    pub group_size: usize,
    pub k: usize,
    pub retention: u64,
    pub epoch_length: u64,
    pub relays: RelayCounts,
    pub pow_difficulty: u32,
    pub interactive_cc: bool,
    pub token_window: u64,
    pub gs_window: u64,
    /// Keep every byte string the entry and exit relays observe.
    pub record_views: bool,
}

impl NetConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            group_size: s.group_size,
            k: s.k,
            retention: s.retention,
            epoch_length: s.epoch_length,
            relays: s.relays.clone(),
            pow_difficulty: s.pow_difficulty,
            interactive_cc: s.interactive_cc,
            token_window: s.token_window,
            gs_window: s.gs_window,
            record_views: false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Payload {
    /// Circuit traffic in wire format.
    Wire(Vec<u8>),
    /// Exit to server: one relayed message on a stream.
    Deliver {
        seq: u64,
        data: Vec<u8>,
    },
    /// Server to exit: a message it considers abusive.
    Complaint {
        seq: u64,
        data: Vec<u8>,
    },
    /// Exit to authority: a denunciation bundle file.
    Bundle(Vec<u8>),
    PuzzleRequest,
    Puzzle(PowPuzzle),
    Join(Box<JoinRequest>),
    JoinAccepted {
        member: u64,
    },
    JoinRejected {
        reason: String,
    },
    Publish {
        kind: RecordKind,
        version: u64,
        bytes: Vec<u8>,
    },
}

#[derive(Clone, Debug)]
pub struct Envelope {
    pub from: String,
    pub to: String,
    /// Link-local circuit or stream id.
    pub link: u64,
    pub payload: Payload,
}

/// A circuit as one relay knows it: the previous hop and its link id.
pub type CircuitKey = (String, u64);

/// Bytes a relay saw for one of its circuits.
#[derive(Clone, Debug)]
pub struct Observation {
    pub relay: String,
    pub role: Role,
    pub circuit: CircuitKey,
    pub bytes: Vec<u8>,
}

/// Values that must never reach `entry` on `circuit`.
pub(crate) struct AuditWindows {
    pub entry: String,
    pub circuit: CircuitKey,
    pub windows: WindowSet,
}

/// What a handler may touch while processing one envelope.
pub(crate) struct Cx<'a> {
    pub params: &'a Arc<GroupParams>,
    pub cfg: &'a NetConfig,
    pub rng: &'a mut ChaCha20Rng,
    pub log: &'a mut EventLog,
    pub tick: u64,
    pub epoch: u64,
    pub consensus: &'a BTreeMap<String, GroupElement>,
    pub out: Vec<Envelope>,
    pub observed: Vec<Observation>,
    pub audits: Vec<AuditWindows>,
}

impl Cx<'_> {
    pub fn emit(&mut self, actor: &str, event: EventKind, detail: Detail) {
        self.log.push(Event {
            tick: self.tick,
            epoch: self.epoch,
            actor: actor.to_string(),
            event,
            detail,
        });
    }

    pub fn send(&mut self, from: &str, to: &str, link: u64, payload: Payload) {
        self.out.push(Envelope {
            from: from.to_string(),
            to: to.to_string(),
            link,
            payload,
        });
    }
}

/// Builds an event detail map from key/value pairs.
pub fn detail<const N: usize>(pairs: [(&str, Value); N]) -> Detail {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Telescoping command carried in the innermost layer: extend the circuit
/// from the current last hop to `to`.
pub(crate) fn encode_extend(to: &str, handshake: &[u8]) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.u8(1).bytes(to.as_bytes()).bytes(handshake);
    enc.finish()
}

pub(crate) fn decode_extend(bytes: &[u8]) -> Option<(String, Vec<u8>)> {
    let mut dec = Decoder::new(bytes);
    if dec.u8().ok()? != 1 {
        return None;
    }
    let to = String::from_utf8(dec.bytes().ok()?.to_vec()).ok()?;
    let handshake = dec.bytes().ok()?.to_vec();
    dec.finish().ok()?;
    Some((to, handshake))
}

pub struct Network {
    cfg: NetConfig,
    params: Arc<GroupParams>,
    rng: ChaCha20Rng,
    tick: u64,
    epoch: u64,
    queue: VecDeque<Envelope>,
    log: EventLog,
    directory: Directory,
    dir_secret: Scalar,
    dir_public: GroupElement,
    consensus: BTreeMap<String, GroupElement>,
    entry_keys: Arc<EpochSignerKeys>,
    users: BTreeMap<String, User>,
    relays: BTreeMap<String, Relay>,
    authority: Authority,
    server: Server,
    gk_cache: Option<GroupKey>,
    circuit_owner: BTreeMap<String, String>,
    audit: BTreeMap<(String, CircuitKey), WindowSet>,
    unscanned: BTreeMap<(String, CircuitKey), Vec<Vec<u8>>>,
    views: BTreeMap<String, Vec<(CircuitKey, Vec<u8>)>>,
    revoke_checks: u64,
}

impl Network {
    /// Keys for every actor, the initial group key and the epoch-0 signing
    /// key, all drawn from one generator seeded with `seed`.
    pub fn new(cfg: NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let params = GroupParams::desk();
        let (mut mk, gk) = gs_setup(params.clone(), &mut rng);
        mk.set_pow_difficulty(cfg.pow_difficulty);
        let (dir_secret, dir_public) = dh_keygen(&params, &mut rng);

        let mut relays = BTreeMap::new();
        let mut consensus = BTreeMap::new();
        let roles = [
            (
                Role::Entry,
                cfg.relays.entry,
                entry_name as fn(usize) -> String,
            ),
            (Role::Middle, cfg.relays.middle, middle_name),
            (Role::Exit, cfg.relays.exit, exit_name),
        ];
        for (role, count, name) in roles {
            for i in 0..count {
                let (secret, public) = dh_keygen(&params, &mut rng);
                consensus.insert(name(i), public.clone());
                relays.insert(name(i), Relay::new(name(i), role, secret, public));
            }
        }
        let users = (0..cfg.group_size)
            .map(|i| (user_name(i), User::new(user_name(i))))
            .collect();
        let entry_keys = Arc::new(bgs_setup_epoch(0, &mut rng));

        let mut net = Self {
            params,
            rng,
            tick: 0,
            epoch: 0,
            queue: VecDeque::new(),
            log: EventLog::new(),
            directory: Directory::new(),
            dir_secret,
            dir_public,
            consensus,
            entry_keys,
            users,
            relays,
            authority: Authority::new(RevocationAuthority::new(mk), gk.clone()),
            server: Server::default(),
            gk_cache: None,
            circuit_owner: BTreeMap::new(),
            audit: BTreeMap::new(),
            unscanned: BTreeMap::new(),
            views: BTreeMap::new(),
            revoke_checks: 0,
            cfg,
        };
        net.publish(RecordKind::GroupKey, gk.version(), gk.encode());
        net.publish(
            RecordKind::RevocationList,
            gk.version(),
            gk.encode_revocation_list(),
        );
        net.install_epoch_keys();
        net.sync();
        net
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Arc<GroupParams> {
        &self.params
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    pub fn stats(&self) -> Stats {
        Stats::from_events(self.log.events())
    }

    pub fn directory(&self) -> &Directory {
        &self.directory
    }

    /// The group key as last fetched from the directory.
    pub fn group_key(&self) -> &GroupKey {
        self.gk_cache.as_ref().expect("published at construction")
    }

    pub fn authority(&self) -> &Authority {
        &self.authority
    }

    pub fn server(&self) -> &Server {
        &self.server
    }

    pub fn relay(&self, name: &str) -> Option<&Relay> {
        self.relays.get(name)
    }

    pub fn relays(&self) -> impl Iterator<Item = &Relay> {
        self.relays.values()
    }

    pub fn user(&self, name: &str) -> Option<&User> {
        self.users.get(name)
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn circuit(&self, name: &str) -> Option<&UserCircuit> {
        let owner = self.circuit_owner.get(name)?;
        self.users.get(owner)?.circuit(name)
    }

    /// Everything `relay` observed, when views are recorded.
    pub fn views(&self, relay: &str) -> &[(CircuitKey, Vec<u8>)] {
        self.views.get(relay).map_or(&[], Vec::as_slice)
    }

    /// Relay-side keys along an open circuit, first hop first.
    pub fn trace_circuit(&self, name: &str) -> Option<Vec<(String, SymmetricKey)>> {
        let owner = self.circuit_owner.get(name)?;
        let circuit = self.users.get(owner)?.circuit(name)?;
        let mut out = Vec::new();
        let mut at = circuit.path.first()?.clone();
        let mut key: CircuitKey = (owner.clone(), circuit.link);
        loop {
            let hop = self.relays.get(&at)?.hop(&key)?;
            out.push((at.clone(), hop.key.clone()));
            match &hop.next {
                Some((next, link)) => {
                    key = (at.clone(), *link);
                    at = next.clone();
                }
                None => return Some(out),
            }
        }
    }

    fn emit(&mut self, actor: &str, event: EventKind, d: Detail) {
        self.log.push(Event {
            tick: self.tick,
            epoch: self.epoch,
            actor: actor.to_string(),
            event,
            detail: d,
        });
    }

    fn publish(&mut self, kind: RecordKind, version: u64, bytes: Vec<u8>) {
        match self.directory.publish(kind, version, self.tick, bytes) {
            Ok(()) => self.emit(
                DIRECTORY,
                EventKind::Published,
                detail([
                    ("kind", json!(kind.to_string())),
                    ("version", json!(version)),
                ]),
            ),
            Err(e) => panic!("directory publish out of order: {e}"),
        }
    }

    /// New shared signing key for the entry group, published as a record
    /// signed by the directory.
    fn install_epoch_keys(&mut self) {
        if self.epoch > 0 {
            self.entry_keys = Arc::new(bgs_setup_epoch(self.epoch, &mut self.rng));
        }
        for relay in self.relays.values_mut() {
            if relay.role == Role::Entry {
                relay.signer = Some(self.entry_keys.clone());
            }
        }
        let record = EpochKeyRecord::sign(
            &self.params,
            &self.dir_secret,
            self.entry_keys.public().clone(),
            &mut self.rng,
        );
        let mut enc = Encoder::new();
        record.encode(&self.params, &mut enc);
        self.publish(RecordKind::EpochKey, self.epoch, enc.finish());
    }

    /// Every actor pulls the latest directory records. Users whose tag was
    /// removed keep their stale group key.
    fn sync(&mut self) {
        let rec = self
            .directory
            .fetch(RecordKind::GroupKey)
            .expect("group key published at construction");
        if self.gk_cache.as_ref().map(GroupKey::version) != Some(rec.version) {
            let gk = GroupKey::decode(&rec.bytes).expect("directory holds a valid group key");
            self.gk_cache = Some(gk);
        }
        let gk = self.gk_cache.as_ref().expect("just set");

        let rec = self
            .directory
            .fetch(RecordKind::EpochKey)
            .expect("epoch key published at construction");
        let mut dec = Decoder::new(&rec.bytes);
        let epoch_record =
            EpochKeyRecord::decode(&self.params, &mut dec).expect("directory record decodes");
        let epoch_key = epoch_record
            .verify(&self.params, &self.dir_public)
            .then_some(epoch_record.key);

        for relay in self.relays.values_mut() {
            relay.sync(gk, epoch_key.as_ref(), self.epoch, self.cfg.token_window);
        }
        for user in self.users.values_mut() {
            user.sync(gk, epoch_key.as_ref());
        }
    }

    /// Delivers queued envelopes until the network is idle.
    pub fn pump(&mut self) {
        let mut delivered = 0;
        while let Some(env) = self.queue.pop_front() {
            self.tick += 1;
            self.deliver(env);
            delivered += 1;
            assert!(delivered < MAX_DELIVERIES, "message loop in simulation");
        }
    }

    fn deliver(&mut self, env: Envelope) {
        if env.to == DIRECTORY {
            if let Payload::Publish {
                kind,
                version,
                bytes,
            } = env.payload
            {
                self.publish(kind, version, bytes);
            }
            return;
        }
        let Network {
            params,
            cfg,
            rng,
            log,
            tick,
            epoch,
            consensus,
            users,
            relays,
            authority,
            server,
            ..
        } = self;
        let mut cx = Cx {
            params,
            cfg,
            rng,
            log,
            tick: *tick,
            epoch: *epoch,
            consensus,
            out: Vec::new(),
            observed: Vec::new(),
            audits: Vec::new(),
        };
        match env.to.as_str() {
            AUTHORITY => authority.handle(&mut cx, env),
            SERVER => server.handle(&mut cx, env),
            to => {
                if let Some(user) = users.get_mut(to) {
                    user.handle(&mut cx, env);
                } else if let Some(relay) = relays.get_mut(to) {
                    relay.handle(&mut cx, env);
                }
            }
        }
        let Cx {
            out,
            observed,
            audits,
            ..
        } = cx;
        self.queue.extend(out);
        for a in audits {
            self.register_audit(a);
        }
        for o in observed {
            self.observe(o);
        }
    }

    fn register_audit(&mut self, a: AuditWindows) {
        let key = (a.entry, a.circuit);
        if let Some(buffered) = self.unscanned.remove(&key) {
            for bytes in buffered {
                self.scan(&key, &a.windows, &bytes);
            }
        }
        self.audit.entry(key).or_default().extend(&a.windows);
    }

    /// Entry observations are checked against the circuit's exit-side
    /// values as soon as those are known.
    fn observe(&mut self, o: Observation) {
        if o.role == Role::Entry {
            let key = (o.relay.clone(), o.circuit.clone());
            if let Some(windows) = self.audit.get(&key) {
                if windows.hits(&o.bytes) > 0 {
                    let windows = windows.clone();
                    self.scan(&key, &windows, &o.bytes);
                }
            } else {
                self.unscanned.entry(key).or_default().push(o.bytes.clone());
            }
        }
        if self.cfg.record_views && o.role != Role::Middle {
            self.views
                .entry(o.relay)
                .or_default()
                .push((o.circuit, o.bytes));
        }
    }

    fn scan(&mut self, key: &(String, CircuitKey), windows: &WindowSet, bytes: &[u8]) {
        let hits = windows.hits(bytes);
        if hits > 0 {
            self.emit(
                &key.0.clone(),
                EventKind::Leakage,
                detail([("from", json!(key.1 .0)), ("positions", json!(hits))]),
            );
        }
    }

    fn with_cx<T>(
        &mut self,
        f: impl FnOnce(&mut Cx<'_>, &mut BTreeMap<String, User>, &mut Server) -> T,
    ) -> T {
        let Network {
            params,
            cfg,
            rng,
            log,
            tick,
            epoch,
            consensus,
            users,
            server,
            ..
        } = self;
        let mut cx = Cx {
            params,
            cfg,
            rng,
            log,
            tick: *tick,
            epoch: *epoch,
            consensus,
            out: Vec::new(),
            observed: Vec::new(),
            audits: Vec::new(),
        };
        let result = f(&mut cx, users, server);
        let Cx { out, audits, .. } = cx;
        self.queue.extend(out);
        for a in audits {
            self.register_audit(a);
        }
        result
    }

    // ---- steps ----

    /// Joins `user` through the authority's puzzle and admission flow.
    pub fn join(&mut self, user: &str) {
        self.sync();
        self.with_cx(|cx, users, _| {
            if let Some(u) = users.get_mut(user) {
                u.request_join(cx);
            }
        });
        self.pump();
        self.sync();
    }

    pub fn join_all(&mut self) {
        let pending: Vec<String> = self
            .users
            .values()
            .filter(|u| !u.is_member())
            .map(|u| u.name.clone())
            .collect();
        for u in pending {
            self.join(&u);
        }
    }

    fn pick_path(&mut self, hops: usize, entry: Option<&str>, exit: Option<&str>) -> Vec<String> {
        let pick = |role: Role, relays: &BTreeMap<String, Relay>| -> Vec<String> {
            relays
                .values()
                .filter(|r| r.role == role)
                .map(|r| r.name.clone())
                .collect()
        };
        let entries = pick(Role::Entry, &self.relays);
        let middles = pick(Role::Middle, &self.relays);
        let exits = pick(Role::Exit, &self.relays);
        let entry = entry
            .map(str::to_string)
            .unwrap_or_else(|| entries.choose(&mut self.rng).expect("an entry").clone());
        let chosen: Vec<String> = middles
            .choose_multiple(&mut self.rng, hops - 2)
            .cloned()
            .collect();
        let exit = exit
            .map(str::to_string)
            .unwrap_or_else(|| exits.choose(&mut self.rng).expect("an exit").clone());
        let mut path = vec![entry];
        path.extend(chosen);
        path.push(exit);
        path
    }

    /// Telescopes a circuit hop by hop. Returns the final status.
    pub fn build_circuit(
        &mut self,
        user: &str,
        circuit: &str,
        hops: usize,
        entry: Option<&str>,
        exit: Option<&str>,
    ) -> CircuitStatus {
        self.sync();
        let hops = hops.clamp(2, 2 + self.cfg.relays.middle);
        let path = self.pick_path(hops, entry, exit);
        self.circuit_owner
            .insert(circuit.to_string(), user.to_string());
        self.with_cx(|cx, users, _| {
            let u = users.get_mut(user).expect("validated user");
            u.start_circuit(cx, circuit, path);
        });
        self.pump();
        self.with_cx(|cx, users, _| {
            users
                .get_mut(user)
                .expect("validated user")
                .settle(cx, circuit)
        })
    }

    pub fn send(&mut self, circuit: &str, data: &[u8]) {
        let Some(owner) = self.circuit_owner.get(circuit).cloned() else {
            return;
        };
        self.with_cx(|cx, users, _| {
            users
                .get_mut(&owner)
                .expect("owner exists")
                .send_data(cx, circuit, data)
        });
        self.pump();
    }

    /// The server reports every abusive message not yet reported.
    pub fn denounce(&mut self) {
        self.with_cx(|cx, _, server| server.complain_all(cx));
        self.pump();
        self.sync();
    }

    /// A fresh circuit attempt by `user`; true when the entry rejected it.
    pub fn revoke_check(&mut self, user: &str) -> (bool, Option<String>) {
        self.revoke_checks += 1;
        let name = format!("{user}/revoke-check-{}", self.revoke_checks);
        let hops = (2 + self.cfg.relays.middle).min(3);
        let status = self.build_circuit(user, &name, hops, None, None);
        let (blocked, reason) = match &status {
            CircuitStatus::Failed { hop: 0, reason } => (true, Some(reason.clone())),
            CircuitStatus::Failed { reason, .. } => (false, Some(reason.clone())),
            _ => (false, None),
        };
        self.emit(
            user,
            EventKind::RevokeCheck,
            detail([("blocked", json!(blocked)), ("reason", json!(reason))]),
        );
        (blocked, reason)
    }

    /// Moves to the next epoch: new entry-group key, replay and log
    /// pruning at the exits.
    pub fn advance_epoch(&mut self) {
        self.epoch += 1;
        self.tick = self.tick.max(self.epoch * self.cfg.epoch_length);
        self.emit(
            DIRECTORY,
            EventKind::EpochAdvanced,
            detail([("epoch", json!(self.epoch))]),
        );
        self.install_epoch_keys();
        let (epoch, window) = (self.epoch, self.cfg.token_window);
        let mut purged = Vec::new();
        for relay in self.relays.values_mut() {
            if let Some(n) = relay.rotate(epoch, window) {
                purged.push((relay.name.clone(), n));
            }
        }
        for (name, n) in purged {
            self.emit(&name, EventKind::Purged, detail([("count", json!(n))]));
        }
        self.sync();
    }

    pub(crate) fn emit_assert(&mut self, passed: bool, d: Detail) {
        let kind = if passed {
            EventKind::AssertPassed
        } else {
            EventKind::AssertFailed
        };
        self.emit("harness", kind, d);
    }
}
