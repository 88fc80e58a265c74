//! Manager, group and member keys, and the versioned membership history.

use std::sync::Arc;

use rand::RngCore;

use super::pow::{pow_solve, pow_verify, PowPuzzle, PowSolution, DEFAULT_POW_DIFFICULTY};
use super::GroupSigError;
use crate::crypto::hash::{hash, Digest};
use crate::crypto::sigma::{sigma_prove, sigma_verify, SigmaProof, Statement};
use crate::crypto::{FixedBase, GroupElement, GroupParams, Scalar};
use crate::encoding::{DecodeError, Decoder, Encoder};

const GK_MAGIC: &[u8; 4] = b"FTGK";
const MK_MAGIC: &[u8; 4] = b"FTMK";
const RL_MAGIC: &[u8; 4] = b"FTRL";
const FORMAT_VERSION: u8 = 1;

/// Verifier-side precomputation for one member tag: a power table and the
/// inverse. Shared between the snapshots that contain the tag.
#[derive(Debug)]
pub(crate) struct TagTable {
    pub(crate) base: FixedBase,
    pub(crate) inverse: GroupElement,
}

impl TagTable {
    pub(crate) fn new(params: &GroupParams, tag: &GroupElement) -> Self {
        Self {
            base: FixedBase::new(params, tag.clone()),
            inverse: params.inv(tag),
        }
    }
}

/// Allowed set at one version.
#[derive(Clone, Debug)]
pub struct AllowedSet {
    version: u64,
    tags: Vec<GroupElement>,
    digest: Digest,
    tables: Vec<Arc<TagTable>>,
}

impl PartialEq for AllowedSet {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version && self.tags == other.tags
    }
}

impl Eq for AllowedSet {}

impl AllowedSet {
    fn new(
        params: &GroupParams,
        version: u64,
        tags: Vec<GroupElement>,
        tables: Vec<Arc<TagTable>>,
    ) -> Self {
        let digest = version_digest(params, version, &tags);
        Self {
            version,
            tags,
            digest,
            tables,
        }
    }

    pub(crate) fn tables(&self) -> &[Arc<TagTable>] {
        &self.tables
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn tags(&self) -> &[GroupElement] {
        &self.tags
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn position(&self, tag: &GroupElement) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    pub fn contains(&self, tag: &GroupElement) -> bool {
        self.position(tag).is_some()
    }
}

/// `H("gk-version", version || tags)`.
pub fn version_digest(params: &GroupParams, version: u64, tags: &[GroupElement]) -> Digest {
    let mut enc = Encoder::new();
    enc.u64(version);
    for t in tags {
        params.put_element(&mut enc, t);
    }
    hash(b"gk-version", enc.as_slice())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MembershipEvent {
    Join(GroupElement),
    Revoke(GroupElement),
}

/// Public group key. Every join or revocation appends one event and bumps
/// the version by one; the allowed set of every past version is retained.
#[derive(Clone, Debug)]
pub struct GroupKey {
    params: Arc<GroupParams>,
    opk: FixedBase,
    events: Vec<MembershipEvent>,
    snapshots: Vec<Arc<AllowedSet>>,
    revocation_versions: Vec<u64>,
}

impl PartialEq for GroupKey {
    fn eq(&self, other: &Self) -> bool {
        *self.params == *other.params && self.opk == other.opk && self.events == other.events
    }
}

impl Eq for GroupKey {}

impl GroupKey {
    fn empty(params: Arc<GroupParams>, opk: GroupElement) -> Self {
        params.register_fixed_base(&opk);
        let opk = FixedBase::new(&params, opk);
        let first = Arc::new(AllowedSet::new(&params, 0, Vec::new(), Vec::new()));
        Self {
            params,
            opk,
            events: Vec::new(),
            snapshots: vec![first],
            revocation_versions: Vec::new(),
        }
    }

    pub fn params(&self) -> &Arc<GroupParams> {
        &self.params
    }

    pub fn opk(&self) -> &GroupElement {
        self.opk.element()
    }

    pub(crate) fn opk_base(&self) -> &FixedBase {
        &self.opk
    }

    pub fn version(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn current(&self) -> &AllowedSet {
        self.snapshots.last().expect("version 0 always present")
    }

    pub fn allowed_set(&self, version: u64) -> Option<&AllowedSet> {
        self.snapshots
            .get(usize::try_from(version).ok()?)
            .map(|s| s.as_ref())
    }

    pub fn events(&self) -> &[MembershipEvent] {
        &self.events
    }

    /// Tags revoked so far, in revocation order.
    pub fn revocation_list(&self) -> Vec<GroupElement> {
        self.events
            .iter()
            .filter_map(|e| match e {
                MembershipEvent::Revoke(t) => Some(t.clone()),
                MembershipEvent::Join(_) => None,
            })
            .collect()
    }

    pub fn is_registered(&self, tag: &GroupElement) -> bool {
        self.events
            .iter()
            .any(|e| matches!(e, MembershipEvent::Join(t) if t == tag))
    }

    /// Whether signatures made at `version` are still acceptable: not from
    /// the future, at most `window` versions old, and no revocation since.
    pub fn check_version(&self, version: u64, window: u64) -> Result<(), GroupSigError> {
        let current = self.version();
        if version > current {
            return Err(GroupSigError::InvalidSignature);
        }
        if current - version > window {
            return Err(GroupSigError::StaleVersion);
        }
        if self.revocation_versions.iter().any(|&r| r > version) {
            return Err(GroupSigError::InvalidSignature);
        }
        Ok(())
    }

    fn apply(&mut self, event: MembershipEvent) -> Result<(), GroupSigError> {
        let mut tags = self.current().tags.clone();
        let mut tables = self.current().tables.clone();
        match &event {
            MembershipEvent::Join(tag) => {
                if self.is_registered(tag) {
                    return Err(GroupSigError::DuplicateTag);
                }
                tags.push(tag.clone());
                tables.push(Arc::new(TagTable::new(&self.params, tag)));
            }
            MembershipEvent::Revoke(tag) => {
                if !self.is_registered(tag) {
                    return Err(GroupSigError::NotFound);
                }
                let pos = self
                    .current()
                    .position(tag)
                    .ok_or(GroupSigError::AlreadyRevoked)?;
                tags.remove(pos);
                tables.remove(pos);
            }
        }
        let version = self.version() + 1;
        if matches!(event, MembershipEvent::Revoke(_)) {
            self.revocation_versions.push(version);
        }
        self.events.push(event);
        self.snapshots.push(Arc::new(AllowedSet::new(
            &self.params,
            version,
            tags,
            tables,
        )));
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.raw(GK_MAGIC).raw(&[FORMAT_VERSION]);
        self.params.encode(&mut enc);
        self.params.put_element(&mut enc, self.opk());
        enc.u32(self.events.len() as u32);
        for e in &self.events {
            let (kind, tag) = match e {
                MembershipEvent::Join(t) => (1u8, t),
                MembershipEvent::Revoke(t) => (2u8, t),
            };
            enc.u8(kind);
            self.params.put_element(&mut enc, tag);
        }
        enc.finish()
    }

    /// Decodes and replays the event log, rebuilding every version's
    /// allowed set. A log that would be rejected by join/revoke is invalid.
    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        read_header(&mut dec, GK_MAGIC)?;
        let params = GroupParams::decode_shared(&mut dec)?;
        let opk = params.get_element(&mut dec)?;
        let mut gk = Self::empty(params.clone(), opk);
        let n = dec.count()?;
        for _ in 0..n {
            let event = match dec.u8()? {
                1 => MembershipEvent::Join(params.get_element(&mut dec)?),
                2 => MembershipEvent::Revoke(params.get_element(&mut dec)?),
                other => return Err(DecodeError::UnknownTag(other)),
            };
            gk.apply(event)
                .map_err(|_| DecodeError::Invalid("membership log"))?;
        }
        dec.finish()?;
        Ok(gk)
    }

    /// Published revocation list: header with the group version, then one
    /// encoded tag per record.
    pub fn encode_revocation_list(&self) -> Vec<u8> {
        let list = self.revocation_list();
        let mut enc = Encoder::new();
        enc.raw(RL_MAGIC).raw(&[FORMAT_VERSION]);
        enc.u64(self.version());
        enc.u32(list.len() as u32);
        for t in &list {
            self.params.put_element(&mut enc, t);
        }
        enc.finish()
    }
}

/// Decodes a revocation list produced by [`GroupKey::encode_revocation_list`].
pub fn decode_revocation_list(
    params: &GroupParams,
    bytes: &[u8],
) -> Result<(u64, Vec<GroupElement>), DecodeError> {
    let mut dec = Decoder::new(bytes);
    read_header(&mut dec, RL_MAGIC)?;
    let version = dec.u64()?;
    let n = dec.count()?;
    let tags = (0..n)
        .map(|_| params.get_element(&mut dec))
        .collect::<Result<_, _>>()?;
    dec.finish()?;
    Ok((version, tags))
}

fn read_header(dec: &mut Decoder<'_>, magic: &[u8; 4]) -> Result<(), DecodeError> {
    if dec.raw(4)? != magic {
        return Err(DecodeError::Magic);
    }
    match dec.raw(1)?[0] {
        FORMAT_VERSION => Ok(()),
        other => Err(DecodeError::Version(other)),
    }
}

/// Secret manager key: the opener's ElGamal secret and the member registry.
#[derive(Clone, Debug)]
pub struct GroupManagerKey {
    params: Arc<GroupParams>,
    opener_secret: Scalar,
    registry: Vec<(u64, GroupElement)>,
    pow_difficulty: u32,
    pending: Vec<PowPuzzle>,
}

impl GroupManagerKey {
    pub fn params(&self) -> &Arc<GroupParams> {
        &self.params
    }

    pub fn opener_secret(&self) -> &Scalar {
        &self.opener_secret
    }

    pub fn registry(&self) -> &[(u64, GroupElement)] {
        &self.registry
    }

    pub fn pow_difficulty(&self) -> u32 {
        self.pow_difficulty
    }

    pub fn set_pow_difficulty(&mut self, d: u32) {
        self.pow_difficulty = d;
    }

    pub fn member_id(&self, tag: &GroupElement) -> Option<u64> {
        self.registry
            .iter()
            .find(|(_, t)| t == tag)
            .map(|(id, _)| *id)
    }

    /// Issues a join puzzle; it is consumed by the join that presents it.
    pub fn issue_puzzle<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> PowPuzzle {
        let puzzle = PowPuzzle::random(self.pow_difficulty, rng);
        self.pending.push(puzzle.clone());
        puzzle
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.raw(MK_MAGIC).raw(&[FORMAT_VERSION]);
        self.params.encode(&mut enc);
        self.params.put_scalar(&mut enc, &self.opener_secret);
        enc.u32(self.pow_difficulty);
        enc.u32(self.registry.len() as u32);
        for (id, tag) in &self.registry {
            enc.u64(*id);
            self.params.put_element(&mut enc, tag);
        }
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        read_header(&mut dec, MK_MAGIC)?;
        let params = GroupParams::decode_shared(&mut dec)?;
        let opener_secret = params.get_scalar(&mut dec)?;
        let pow_difficulty = dec.u32()?;
        let n = dec.count()?;
        let mut registry = Vec::with_capacity(n);
        for _ in 0..n {
            registry.push((dec.u64()?, params.get_element(&mut dec)?));
        }
        dec.finish()?;
        Ok(Self {
            params,
            opener_secret,
            registry,
            pow_difficulty,
            pending: Vec::new(),
        })
    }
}

/// A member's signing key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemberKey {
    id: u64,
    secret: Scalar,
    tag: GroupElement,
}

impl MemberKey {
    pub fn new(params: &GroupParams, id: u64, secret: Scalar) -> Self {
        let tag = params.h_pow(&secret);
        Self { id, secret, tag }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn secret(&self) -> &Scalar {
        &self.secret
    }

    pub fn tag(&self) -> &GroupElement {
        &self.tag
    }
}

/// What a prospective member submits: tag, proof of knowledge of its
/// secret, and the solved puzzle.
#[derive(Clone, Debug)]
pub struct JoinRequest {
    pub tag: GroupElement,
    pub proof: SigmaProof,
    pub puzzle: PowPuzzle,
    pub solution: PowSolution,
}

fn join_context(puzzle: &PowPuzzle) -> Vec<u8> {
    let mut enc = Encoder::new();
    enc.bytes(b"join")
        .bytes(&puzzle.challenge)
        .u32(puzzle.difficulty);
    enc.finish()
}

impl JoinRequest {
    /// Solves the puzzle and proves knowledge of `secret` for `h^secret`.
    pub fn new<R: RngCore + ?Sized>(
        params: &GroupParams,
        secret: &Scalar,
        puzzle: &PowPuzzle,
        rng: &mut R,
    ) -> Self {
        let solution = pow_solve(puzzle);
        Self::with_solution(params, secret, puzzle, solution, rng)
    }

    pub fn with_solution<R: RngCore + ?Sized>(
        params: &GroupParams,
        secret: &Scalar,
        puzzle: &PowPuzzle,
        solution: PowSolution,
        rng: &mut R,
    ) -> Self {
        let tag = params.h_pow(secret);
        let statement = Statement::Dlog {
            base: params.h().clone(),
            public: tag.clone(),
        };
        let proof = sigma_prove(params, &statement, secret, &join_context(puzzle), rng)
            .expect("tag derived from the secret");
        Self {
            tag,
            proof,
            puzzle: puzzle.clone(),
            solution,
        }
    }
}

pub fn gs_setup<R: RngCore + ?Sized>(
    params: Arc<GroupParams>,
    rng: &mut R,
) -> (GroupManagerKey, GroupKey) {
    let secret = params.random_nonzero_scalar(rng);
    gs_setup_with_secret(params, secret)
}

/// Setup with a caller-chosen opener secret.
pub fn gs_setup_with_secret(
    params: Arc<GroupParams>,
    opener_secret: Scalar,
) -> (GroupManagerKey, GroupKey) {
    let opk = params.gop_pow(&opener_secret);
    let gk = GroupKey::empty(params.clone(), opk);
    let mk = GroupManagerKey {
        params,
        opener_secret,
        registry: Vec::new(),
        pow_difficulty: DEFAULT_POW_DIFFICULTY,
        pending: Vec::new(),
    };
    (mk, gk)
}

fn check_pair(mk: &GroupManagerKey, gk: &GroupKey) -> Result<(), GroupSigError> {
    if *gk.params != *mk.params || gk.opk() != &mk.params.gop_pow(&mk.opener_secret) {
        return Err(GroupSigError::KeyMismatch);
    }
    Ok(())
}

/// Admits a member. Returns the new member id; the caller keeps its secret.
pub fn gs_join(
    mk: &mut GroupManagerKey,
    gk: &mut GroupKey,
    request: &JoinRequest,
) -> Result<u64, GroupSigError> {
    check_pair(mk, gk)?;
    let pending = mk
        .pending
        .iter()
        .position(|p| p == &request.puzzle)
        .ok_or(GroupSigError::PowInvalid)?;
    if !pow_verify(&request.puzzle, &request.solution) {
        return Err(GroupSigError::PowInvalid);
    }
    let params = &mk.params;
    let statement = Statement::Dlog {
        base: params.h().clone(),
        public: request.tag.clone(),
    };
    if !sigma_verify(
        params,
        &statement,
        &request.proof,
        &join_context(&request.puzzle),
    ) {
        return Err(GroupSigError::ProofInvalid);
    }
    if mk.member_id(&request.tag).is_some() {
        return Err(GroupSigError::DuplicateTag);
    }
    gk.apply(MembershipEvent::Join(request.tag.clone()))?;
    mk.pending.swap_remove(pending);
    let id = mk.registry.len() as u64;
    mk.registry.push((id, request.tag.clone()));
    Ok(id)
}

/// Full join flow for a locally simulated user: fresh secret, puzzle,
/// solution, proof, admission.
pub fn enroll<R: RngCore + ?Sized>(
    mk: &mut GroupManagerKey,
    gk: &mut GroupKey,
    rng: &mut R,
) -> Result<MemberKey, GroupSigError> {
    let params = mk.params.clone();
    let secret = params.random_nonzero_scalar(rng);
    let puzzle = mk.issue_puzzle(rng);
    let request = JoinRequest::new(&params, &secret, &puzzle, rng);
    let id = gs_join(mk, gk, &request)?;
    Ok(MemberKey::new(&params, id, secret))
}

/// Removes `tag` from the allowed set. It stays in the registry so old
/// signatures still open.
pub fn gs_revoke(
    mk: &GroupManagerKey,
    gk: &mut GroupKey,
    tag: &GroupElement,
) -> Result<(), GroupSigError> {
    check_pair(mk, gk)?;
    if mk.member_id(tag).is_none() {
        return Err(GroupSigError::NotFound);
    }
    gk.apply(MembershipEvent::Revoke(tag.clone()))
}
