//! Exit-side evidence logging, denunciation bundles and revocation.
//!
//! An exit keeps one [`ExitLogRecord`] per accepted circuit. Relayed
//! messages are stored exactly as received, sealed under the exit session
//! key with sequence-numbered nonces, so any of them can later be denounced
//! to a third party holding only the group key.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use thiserror::Error;

use crate::crypto::aead::open_bytes;
use crate::crypto::{
    derive_keys, sigma_prove, sigma_verify, GroupElement, GroupParams, Scalar, Sealed, SigmaProof,
    Statement, SymmetricKey,
};
use crate::encoding::{DecodeError, Decoder, Encoder};
use crate::groupsig::{
    gs_open, gs_revoke, gs_verify_historic, GroupKey, GroupManagerKey, GroupSigError,
    GroupSignature,
};
use crate::handshake::{transcript, ExitSessionRecord};

pub const DEFAULT_RETENTION: u64 = 24;

const BUNDLE_MAGIC: &[u8; 4] = b"FTDN";
const BUNDLE_VERSION: u8 = 1;
const DLEQ_CONTEXT: &[u8] = b"denunciation";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FairnessError {
    #[error("record has expired")]
    Expired,
    #[error("no such record")]
    UnknownRecord,
    #[error("sequence number {seq} out of range ({len} messages logged)")]
    SeqOutOfRange { seq: u64, len: u64 },
    #[error("denunciation rejected: {0}")]
    VerifyFailed(VerdictReason),
    #[error("signature opens to no registered member")]
    UnknownTag,
    #[error("member already revoked")]
    AlreadyRevoked,
    #[error("group manager key does not match the group key")]
    KeyMismatch,
}

/// Evidence an exit keeps for one circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitLogRecord {
    pub circuit_id: u64,
    pub x2_pub: GroupElement,
    pub y2_pub: GroupElement,
    pub y2: Scalar,
    pub shared: GroupElement,
    pub sigma2: GroupSignature,
    pub r1: Scalar,
    /// Relayed messages as received; the index is the sequence number.
    pub messages: Vec<Sealed>,
    pub created: u64,
    pub expiry: u64,
}

impl ExitLogRecord {
    pub fn new(circuit_id: u64, session: &ExitSessionRecord, created: u64, retention: u64) -> Self {
        Self {
            circuit_id,
            x2_pub: session.x2_pub.clone(),
            y2_pub: session.y2_pub.clone(),
            y2: session.y2.clone(),
            shared: session.shared.clone(),
            sigma2: session.sigma2.clone(),
            r1: session.r1.clone(),
            messages: Vec::new(),
            created,
            expiry: created + retention,
        }
    }

    pub fn session_key(&self, params: &GroupParams) -> SymmetricKey {
        session_key(params, &self.shared, &self.x2_pub, &self.y2_pub)
    }

    /// Appends a relayed message and returns its sequence number.
    pub fn append(&mut self, sealed: Sealed) -> u64 {
        self.messages.push(sealed);
        self.messages.len() as u64 - 1
    }

    pub fn is_expired(&self, current_epoch: u64) -> bool {
        self.expiry <= current_epoch
    }
}

fn session_key(
    params: &GroupParams,
    shared: &GroupElement,
    x2_pub: &GroupElement,
    y2_pub: &GroupElement,
) -> SymmetricKey {
    derive_keys(params, shared, &transcript(params, b"exit", x2_pub, y2_pub)).0
}

/// Exit log keyed by circuit id. Purged ids are remembered so that late
/// denunciation requests fail with `Expired` rather than `UnknownRecord`.
#[derive(Clone, Debug, Default)]
pub struct LogStore {
    records: BTreeMap<u64, ExitLogRecord>,
    purged: BTreeSet<u64>,
}

impl LogStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: ExitLogRecord) {
        self.purged.remove(&record.circuit_id);
        self.records.insert(record.circuit_id, record);
    }

    pub fn get(&self, circuit_id: u64) -> Result<&ExitLogRecord, FairnessError> {
        self.lookup(circuit_id)?;
        Ok(&self.records[&circuit_id])
    }

    pub fn get_mut(&mut self, circuit_id: u64) -> Result<&mut ExitLogRecord, FairnessError> {
        self.lookup(circuit_id)?;
        Ok(self.records.get_mut(&circuit_id).expect("checked above"))
    }

    fn lookup(&self, circuit_id: u64) -> Result<(), FairnessError> {
        if self.records.contains_key(&circuit_id) {
            Ok(())
        } else if self.purged.contains(&circuit_id) {
            Err(FairnessError::Expired)
        } else {
            Err(FairnessError::UnknownRecord)
        }
    }

    /// Removes every record with `expiry <= current_epoch`.
    pub fn purge_expired(&mut self, current_epoch: u64) -> usize {
        let expired: Vec<u64> = self
            .records
            .values()
            .filter(|r| r.is_expired(current_epoch))
            .map(|r| r.circuit_id)
            .collect();
        for id in &expired {
            self.records.remove(id);
            self.purged.insert(*id);
        }
        expired.len()
    }

    pub fn records(&self) -> impl Iterator<Item = &ExitLogRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Evidence handed to a third party: the logged ciphertext, the exit
/// session values, the user's group signature on its share, and a proof
/// that the exit knows `y2` with `Y2 = g^y2` and `K2 = X2^y2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenunciationBundle {
    pub sealed: Sealed,
    pub shared: GroupElement,
    pub x2_pub: GroupElement,
    pub y2_pub: GroupElement,
    pub sigma2: GroupSignature,
    pub dleq: SigmaProof,
    pub msg: Vec<u8>,
}

fn dleq_statement(
    params: &GroupParams,
    y2_pub: &GroupElement,
    x2_pub: &GroupElement,
    shared: &GroupElement,
) -> Statement {
    Statement::Dleq {
        base1: params.g().clone(),
        public1: y2_pub.clone(),
        base2: x2_pub.clone(),
        public2: shared.clone(),
    }
}

pub fn build_denunciation<R: RngCore + ?Sized>(
    params: &GroupParams,
    record: &ExitLogRecord,
    msg: &[u8],
    seq: u64,
    current_epoch: u64,
    rng: &mut R,
) -> Result<DenunciationBundle, FairnessError> {
    if record.is_expired(current_epoch) {
        return Err(FairnessError::Expired);
    }
    let sealed = record
        .messages
        .get(seq as usize)
        .ok_or(FairnessError::SeqOutOfRange {
            seq,
            len: record.messages.len() as u64,
        })?
        .clone();
    let statement = dleq_statement(params, &record.y2_pub, &record.x2_pub, &record.shared);
    let dleq = sigma_prove(params, &statement, &record.y2, DLEQ_CONTEXT, rng)
        .expect("record holds the exit secret for its own share");
    Ok(DenunciationBundle {
        sealed,
        shared: record.shared.clone(),
        x2_pub: record.x2_pub.clone(),
        y2_pub: record.y2_pub.clone(),
        sigma2: record.sigma2.clone(),
        dleq,
        msg: msg.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictReason {
    Accepted,
    DecryptMismatch,
    SigInvalid,
    DleqInvalid,
}

impl VerdictReason {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Accepted => "Accepted",
            Self::DecryptMismatch => "DecryptMismatch",
            Self::SigInvalid => "SigInvalid",
            Self::DleqInvalid => "DleqInvalid",
        }
    }
}

impl std::fmt::Display for VerdictReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: VerdictReason,
    /// Set only when the bundle was accepted and opened.
    pub opened_tag: Option<GroupElement>,
}

impl Verdict {
    fn from_reason(reason: VerdictReason) -> Self {
        Self {
            accepted: reason == VerdictReason::Accepted,
            reason,
            opened_tag: None,
        }
    }
}

/// Public checks, in order: the logged ciphertext opens to the claimed
/// message under the key derived from `(K2, X2, Y2)`; `sigma2` verifies on
/// `X2` at its own version; the DLEQ proof verifies.
pub fn verify_denunciation(bundle: &DenunciationBundle, gk: &GroupKey) -> Verdict {
    let params = gk.params();
    let key = session_key(params, &bundle.shared, &bundle.x2_pub, &bundle.y2_pub);
    let reason = match open_bytes(&key, bundle.sealed.as_bytes()) {
        Ok(pt) if pt == bundle.msg => {
            if !gs_verify_historic(&bundle.sigma2, &params.element_bytes(&bundle.x2_pub), gk) {
                VerdictReason::SigInvalid
            } else if !sigma_verify(
                params,
                &dleq_statement(params, &bundle.y2_pub, &bundle.x2_pub, &bundle.shared),
                &bundle.dleq,
                DLEQ_CONTEXT,
            ) {
                VerdictReason::DleqInvalid
            } else {
                VerdictReason::Accepted
            }
        }
        _ => VerdictReason::DecryptMismatch,
    };
    Verdict::from_reason(reason)
}

/// Decides whether an accepted denunciation leads to revocation.
pub type RevocationPolicy = Box<dyn Fn(&DenunciationBundle, &Verdict) -> bool + Send + Sync>;

/// Holder of the group manager key that turns accepted denunciations into
/// revocations.
pub struct RevocationAuthority {
    mk: GroupManagerKey,
    policy: RevocationPolicy,
}

impl std::fmt::Debug for RevocationAuthority {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RevocationAuthority")
            .finish_non_exhaustive()
    }
}

/// Result of [`apply_revocation`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevocationOutcome {
    pub verdict: Verdict,
    /// False when the policy declined to revoke.
    pub revoked: bool,
    pub version: u64,
}

impl RevocationAuthority {
    /// Authority that revokes on every accepted denunciation.
    pub fn new(mk: GroupManagerKey) -> Self {
        Self::with_policy(mk, Box::new(|_, _| true))
    }

    pub fn with_policy(mk: GroupManagerKey, policy: RevocationPolicy) -> Self {
        Self { mk, policy }
    }

    pub fn manager_key(&self) -> &GroupManagerKey {
        &self.mk
    }

    pub fn manager_key_mut(&mut self) -> &mut GroupManagerKey {
        &mut self.mk
    }
}

pub fn apply_revocation(
    bundle: &DenunciationBundle,
    authority: &RevocationAuthority,
    gk: &mut GroupKey,
) -> Result<RevocationOutcome, FairnessError> {
    let mut verdict = verify_denunciation(bundle, gk);
    if !verdict.accepted {
        return Err(FairnessError::VerifyFailed(verdict.reason));
    }
    let tag = gs_open(&bundle.sigma2, &authority.mk).map_err(|_| FairnessError::UnknownTag)?;
    verdict.opened_tag = Some(tag.clone());
    let revoked = (authority.policy)(bundle, &verdict);
    if revoked {
        gs_revoke(&authority.mk, gk, &tag).map_err(|e| match e {
            GroupSigError::AlreadyRevoked => FairnessError::AlreadyRevoked,
            GroupSigError::NotFound => FairnessError::UnknownTag,
            _ => FairnessError::KeyMismatch,
        })?;
    }
    Ok(RevocationOutcome {
        verdict,
        revoked,
        version: gk.version(),
    })
}

impl DenunciationBundle {
    /// File form: `"FTDN" || version || canonical fields`, with the group
    /// parameter id so a bundle is not checked against the wrong group.
    pub fn to_file_bytes(&self, params: &GroupParams) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.raw(BUNDLE_MAGIC).raw(&[BUNDLE_VERSION]);
        enc.bytes(params.id());
        enc.bytes(self.sealed.as_bytes());
        for e in [&self.shared, &self.x2_pub, &self.y2_pub] {
            params.put_element(&mut enc, e);
        }
        self.sigma2.encode(params, &mut enc);
        self.dleq.encode(params, &mut enc);
        enc.bytes(&self.msg);
        enc.finish()
    }

    pub fn from_file_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        if dec.raw(4)? != BUNDLE_MAGIC {
            return Err(DecodeError::Magic);
        }
        let version = dec.raw(1)?[0];
        if version != BUNDLE_VERSION {
            return Err(DecodeError::Version(version));
        }
        if dec.bytes()? != params.id() {
            return Err(DecodeError::Invalid(
                "bundle is for different group parameters",
            ));
        }
        let bundle = Self {
            sealed: Sealed::from_bytes(dec.bytes()?.to_vec()),
            shared: params.get_element(&mut dec)?,
            x2_pub: params.get_element(&mut dec)?,
            y2_pub: params.get_element(&mut dec)?,
            sigma2: GroupSignature::decode(params, &mut dec)?,
            dleq: SigmaProof::decode(params, &mut dec)?,
            msg: dec.bytes()?.to_vec(),
        };
        dec.finish()?;
        Ok(bundle)
    }
}
