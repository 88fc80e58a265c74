//! Append-only event log and the counters derived from it.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Joined,
    JoinRejected,
    Published,
    EpochAdvanced,
    EntryAccepted,
    EntryRejected,
    TokenIssued,
    HopAccepted,
    HopRejected,
    ExitAccepted,
    ExitRejected,
    CircuitBuilt,
    CircuitFailed,
    SendFailed,
    MsgDelivered,
    Complained,
    Denounced,
    DenounceFailed,
    Revoked,
    NotRevoked,
    DenunciationRejected,
    RevokeCheck,
    Purged,
    Leakage,
    AssertPassed,
    AssertFailed,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Joined => "JOINED",
            EventKind::JoinRejected => "JOIN_REJECTED",
            EventKind::Published => "PUBLISHED",
            EventKind::EpochAdvanced => "EPOCH_ADVANCED",
            EventKind::EntryAccepted => "ENTRY_ACCEPTED",
            EventKind::EntryRejected => "ENTRY_REJECTED",
            EventKind::TokenIssued => "TOKEN_ISSUED",
            EventKind::HopAccepted => "HOP_ACCEPTED",
            EventKind::HopRejected => "HOP_REJECTED",
            EventKind::ExitAccepted => "EXIT_ACCEPTED",
            EventKind::ExitRejected => "EXIT_REJECTED",
            EventKind::CircuitBuilt => "CIRCUIT_BUILT",
            EventKind::CircuitFailed => "CIRCUIT_FAILED",
            EventKind::SendFailed => "SEND_FAILED",
            EventKind::MsgDelivered => "MSG_DELIVERED",
            EventKind::Complained => "COMPLAINED",
            EventKind::Denounced => "DENOUNCED",
            EventKind::DenounceFailed => "DENOUNCE_FAILED",
            EventKind::Revoked => "REVOKED",
            EventKind::NotRevoked => "NOT_REVOKED",
            EventKind::DenunciationRejected => "DENUNCIATION_REJECTED",
            EventKind::RevokeCheck => "REVOKE_CHECK",
            EventKind::Purged => "PURGED",
            EventKind::Leakage => "LEAKAGE",
            EventKind::AssertPassed => "ASSERT_PASSED",
            EventKind::AssertFailed => "ASSERT_FAILED",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type Detail = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    pub epoch: u64,
    pub actor: String,
    pub event: EventKind,
    #[serde(flatten)]
    pub detail: Detail,
}

impl Event {
    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.detail.get(key).and_then(Value::as_str)
    }

    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.detail.get(key).and_then(Value::as_u64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogParseError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.event == kind)
    }

    /// True when `kinds` occur in this order (not necessarily adjacent).
    pub fn contains_in_order(&self, kinds: &[EventKind]) -> bool {
        let mut want = kinds.iter().peekable();
        for e in &self.events {
            if want.peek() == Some(&&e.event) {
                want.next();
            }
        }
        want.peek().is_none()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self, LogParseError> {
        let mut events = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line).map_err(|source| LogParseError::Json {
                line: i + 1,
                source,
            })?;
            events.push(event);
        }
        Ok(Self { events })
    }
}

/// Counters over a log. Every counter in [`Stats::BASE`] is present even
/// when zero; per-reason rejections appear as `<counter>.<reason>`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub counters: BTreeMap<String, u64>,
}

impl Stats {
    pub const BASE: [&'static str; 14] = [
        "joins",
        "entry_accepted",
        "entry_rejected",
        "tokens_issued",
        "exit_accepted",
        "exit_rejected",
        "circuits_built",
        "circuits_failed",
        "messages_delivered",
        "denunciations",
        "revocations",
        "purged",
        "leakage",
        "assert_failed",
    ];

    pub fn from_events(events: &[Event]) -> Self {
        let mut s = Stats {
            counters: Self::BASE.iter().map(|k| (k.to_string(), 0)).collect(),
        };
        for e in events {
            match e.event {
                EventKind::Joined => s.bump("joins", 1),
                EventKind::EntryAccepted => s.bump("entry_accepted", 1),
                EventKind::EntryRejected => s.bump_reason("entry_rejected", e),
                EventKind::TokenIssued => s.bump("tokens_issued", 1),
                EventKind::ExitAccepted => s.bump("exit_accepted", 1),
                EventKind::ExitRejected => s.bump_reason("exit_rejected", e),
                EventKind::CircuitBuilt => s.bump("circuits_built", 1),
                EventKind::CircuitFailed => s.bump("circuits_failed", 1),
                EventKind::MsgDelivered => s.bump("messages_delivered", 1),
                EventKind::Denounced => s.bump("denunciations", 1),
                EventKind::Revoked => s.bump("revocations", 1),
                EventKind::Purged => s.bump("purged", e.get_u64("count").unwrap_or(0)),
                EventKind::Leakage => s.bump("leakage", 1),
                EventKind::AssertFailed => s.bump("assert_failed", 1),
                _ => {}
            }
        }
        s
    }

    fn bump(&mut self, key: &str, by: u64) {
        *self.counters.entry(key.to_string()).or_default() += by;
    }

    fn bump_reason(&mut self, key: &str, e: &Event) {
        self.bump(key, 1);
        let reason = e.get_str("reason").unwrap_or("unknown");
        self.bump(&format!("{key}.{reason}"), 1);
    }

    pub fn get(&self, key: &str) -> u64 {
        self.counters.get(key).copied().unwrap_or(0)
    }

    /// Entry accepts equal tokens issued and no exit accepts more than
    /// were issued.
    pub fn conserved(&self) -> bool {
        self.get("entry_accepted") == self.get("tokens_issued")
            && self.get("exit_accepted") <= self.get("tokens_issued")
    }
}
