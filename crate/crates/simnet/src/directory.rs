//! Versioned publication channel for group keys, epoch keys and revocation
//! lists.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    GroupKey,
    EpochKey,
    RevocationList,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::GroupKey => "group-key",
            RecordKind::EpochKey => "epoch-key",
            RecordKind::RevocationList => "revocation-list",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectoryRecord {
    pub kind: RecordKind,
    pub version: u64,
    pub published_at: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DirectoryError {
    #[error("nothing published for {0}")]
    UnknownKind(RecordKind),
    #[error("{kind} version {got} does not advance past {latest}")]
    NotMonotone {
        kind: RecordKind,
        latest: u64,
        got: u64,
    },
}

#[derive(Clone, Debug, Default)]
pub struct Directory {
    records: BTreeMap<RecordKind, Vec<DirectoryRecord>>,
}

impl Directory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Versions must strictly increase per kind.
    pub fn publish(
        &mut self,
        kind: RecordKind,
        version: u64,
        tick: u64,
        bytes: Vec<u8>,
    ) -> Result<(), DirectoryError> {
        let history = self.records.entry(kind).or_default();
        if let Some(last) = history.last() {
            if version <= last.version {
                return Err(DirectoryError::NotMonotone {
                    kind,
                    latest: last.version,
                    got: version,
                });
            }
        }
        history.push(DirectoryRecord {
            kind,
            version,
            published_at: tick,
            bytes,
        });
        Ok(())
    }

    /// Latest record of `kind`.
    pub fn fetch(&self, kind: RecordKind) -> Result<&DirectoryRecord, DirectoryError> {
        self.records
            .get(&kind)
            .and_then(|h| h.last())
            .ok_or(DirectoryError::UnknownKind(kind))
    }

    pub fn history(&self, kind: RecordKind) -> &[DirectoryRecord] {
        self.records.get(&kind).map_or(&[], Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fetch_before_publish_is_unknown() {
        let dir = Directory::new();
        assert_eq!(
            dir.fetch(RecordKind::GroupKey),
            Err(DirectoryError::UnknownKind(RecordKind::GroupKey))
        );
    }

    #[test]
    fn publish_then_fetch_latest() {
        let mut dir = Directory::new();
        dir.publish(RecordKind::GroupKey, 1, 0, vec![1]).unwrap();
        assert_eq!(dir.fetch(RecordKind::GroupKey).unwrap().version, 1);
        dir.publish(RecordKind::GroupKey, 2, 5, vec![2]).unwrap();
        let rec = dir.fetch(RecordKind::GroupKey).unwrap();
        assert_eq!(
            (rec.version, rec.published_at, rec.bytes.as_slice()),
            (2, 5, &[2u8][..])
        );
        assert_eq!(dir.history(RecordKind::GroupKey).len(), 2);
        assert!(dir.fetch(RecordKind::EpochKey).is_err());
    }

    #[test]
    fn versions_are_monotone() {
        let mut dir = Directory::new();
        dir.publish(RecordKind::EpochKey, 3, 0, vec![]).unwrap();
        assert_eq!(
            dir.publish(RecordKind::EpochKey, 3, 1, vec![]),
            Err(DirectoryError::NotMonotone {
                kind: RecordKind::EpochKey,
                latest: 3,
                got: 3
            })
        );
        dir.publish(RecordKind::RevocationList, 0, 1, vec![])
            .unwrap();
    }
}
