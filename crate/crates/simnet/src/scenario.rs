//! Scenario scripts: network shape plus an ordered list of steps.

use std::collections::BTreeSet;
use std::path::Path;

use fairtor_core::blindsig::DEFAULT_EPOCH_WINDOW;
use fairtor_core::fairness::DEFAULT_RETENTION;
use fairtor_core::groupsig::DEFAULT_VERSION_WINDOW;
use fairtor_core::handshake::{DEFAULT_INSTANCES, MAX_INSTANCES, MIN_INSTANCES};
use serde::Deserialize;
use thiserror::Error;

use crate::events::EventKind;

pub const MAX_GROUP_SIZE: usize = 64;
pub const DEFAULT_SIM_POW_DIFFICULTY: u32 = 8;
/// Prefix the simulated server treats as abusive traffic.
pub const ABUSE_MARKER: &str = "ABUSE";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("step {step}: {reason}")]
    Step { step: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayCounts {
    pub entry: usize,
    pub middle: usize,
    pub exit: usize,
}

impl Default for RelayCounts {
    fn default() -> Self {
        Self {
            entry: 1,
            middle: 1,
            exit: 1,
        }
    }
}

fn default_k() -> usize {
    DEFAULT_INSTANCES
}
fn default_retention() -> u64 {
    DEFAULT_RETENTION
}
fn default_epoch_length() -> u64 {
    1000
}
fn default_pow() -> u32 {
    DEFAULT_SIM_POW_DIFFICULTY
}
fn default_token_window() -> u64 {
    DEFAULT_EPOCH_WINDOW
}
fn default_gs_window() -> u64 {
    DEFAULT_VERSION_WINDOW
}
fn default_hops() -> usize {
    3
}
fn default_one() -> u64 {
    1
}
fn default_true() -> bool {
    true
}
fn default_abuse() -> String {
    ABUSE_MARKER.to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub group_size: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Epochs an exit keeps a circuit's evidence.
    #[serde(default = "default_retention")]
    pub retention: u64,
    /// Ticks per epoch; the clock jumps to the next boundary on
    /// `advance-epoch`.
    #[serde(default = "default_epoch_length")]
    pub epoch_length: u64,
    #[serde(default)]
    pub relays: RelayCounts,
    #[serde(default = "default_pow")]
    pub pow_difficulty: u32,
    #[serde(default)]
    pub interactive_cc: bool,
    #[serde(default = "default_token_window")]
    pub token_window: u64,
    #[serde(default = "default_gs_window")]
    pub gs_window: u64,
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Step {
    /// One user, or every user not yet joined.
    Join {
        #[serde(default)]
        user: Option<String>,
    },
    BuildCircuit {
        user: String,
        circuit: String,
        #[serde(default = "default_hops")]
        hops: usize,
        #[serde(default)]
        entry: Option<String>,
        #[serde(default)]
        exit: Option<String>,
    },
    /// Explicit messages, or `count` generated ones.
    Send {
        circuit: String,
        #[serde(default)]
        messages: Vec<String>,
        #[serde(default)]
        count: usize,
    },
    Misbehave {
        circuit: String,
        #[serde(default = "default_abuse")]
        message: String,
    },
    /// The server complains about every abusive message not yet reported.
    Denounce {},
    /// The user tries a fresh circuit; the outcome must match.
    RevokeCheck {
        user: String,
        #[serde(default = "default_true")]
        expect_blocked: bool,
    },
    AdvanceEpoch {
        #[serde(default = "default_one")]
        by: u64,
    },
    Assert {
        that: Check,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    CircuitOpen {
        circuit: String,
    },
    CircuitFailed {
        circuit: String,
        #[serde(default)]
        reason: Option<String>,
    },
    Revoked {
        user: String,
    },
    NotRevoked {
        user: String,
    },
    Delivered {
        count: u64,
    },
    Counter {
        name: String,
        value: u64,
    },
    EventsInOrder {
        events: Vec<EventKind>,
    },
    Records {
        exit: String,
        count: usize,
    },
    Conservation {},
    NoLeakage {},
}

pub fn user_name(i: usize) -> String {
    format!("u{i}")
}

pub fn entry_name(i: usize) -> String {
    format!("E{i}")
}

pub fn middle_name(i: usize) -> String {
    format!("M{i}")
}

pub fn exit_name(i: usize) -> String {
    format!("X{i}")
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn users(&self) -> Vec<String> {
        (0..self.group_size).map(user_name).collect()
    }

    /// Shape limits, then a pass over the steps tracking which users have
    /// joined and which circuits exist.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let config = |m: String| Err(ScenarioError::Config(m));
        if self.group_size == 0 || self.group_size > MAX_GROUP_SIZE {
            return config(format!("group_size must be in 1..={MAX_GROUP_SIZE}"));
        }
        if !(MIN_INSTANCES..=MAX_INSTANCES).contains(&self.k) {
            return config(format!("k must be in {MIN_INSTANCES}..={MAX_INSTANCES}"));
        }
        if self.relays.entry == 0 || self.relays.exit == 0 {
            return config("at least one entry and one exit relay are required".into());
        }
        if self.epoch_length == 0 {
            return config("epoch_length must be positive".into());
        }
        if self.pow_difficulty > 24 {
            return config("pow_difficulty above 24 is not supported".into());
        }

        let users: BTreeSet<String> = self.users().into_iter().collect();
        let mut joined = BTreeSet::new();
        let mut circuits = BTreeSet::new();
        for (i, step) in self.steps.iter().enumerate() {
            let fail = |reason: String| Err(ScenarioError::Step { step: i, reason });
            let known_user = |u: &str| users.contains(u);
            match step {
                Step::Join { user: Some(u) } => {
                    if !known_user(u) {
                        return fail(format!("unknown user {u}"));
                    }
                    joined.insert(u.clone());
                }
                Step::Join { user: None } => joined.extend(users.iter().cloned()),
                Step::BuildCircuit {
                    user,
                    circuit,
                    hops,
                    entry,
                    exit,
                } => {
                    if !joined.contains(user) {
                        return fail(format!("user {user} has not joined"));
                    }
                    if !circuits.insert(circuit.clone()) {
                        return fail(format!("circuit {circuit} declared twice"));
                    }
                    if *hops < 2 || *hops > 2 + self.relays.middle {
                        return fail(format!(
                            "hops must be in 2..={} for this relay set",
                            2 + self.relays.middle
                        ));
                    }
                    if let Some(e) = entry {
                        if !(0..self.relays.entry).any(|j| entry_name(j) == *e) {
                            return fail(format!("unknown entry relay {e}"));
                        }
                    }
                    if let Some(x) = exit {
                        if !(0..self.relays.exit).any(|j| exit_name(j) == *x) {
                            return fail(format!("unknown exit relay {x}"));
                        }
                    }
                }
                Step::Send { circuit, .. } | Step::Misbehave { circuit, .. } => {
                    if !circuits.contains(circuit) {
                        return fail(format!("undeclared circuit {circuit}"));
                    }
                }
                Step::RevokeCheck { user, .. } => {
                    if !joined.contains(user) {
                        return fail(format!("user {user} has not joined"));
                    }
                }
                Step::Assert { that } => match that {
                    Check::CircuitOpen { circuit } | Check::CircuitFailed { circuit, .. } => {
                        if !circuits.contains(circuit) {
                            return fail(format!("undeclared circuit {circuit}"));
                        }
                    }
                    Check::Revoked { user } | Check::NotRevoked { user } => {
                        if !joined.contains(user) {
                            return fail(format!("user {user} has not joined"));
                        }
                    }
                    Check::Records { exit, .. }
                        if !(0..self.relays.exit).any(|j| exit_name(j) == *exit) =>
                    {
                        return fail(format!("unknown exit relay {exit}"));
                    }
                    _ => {}
                },
                Step::Denounce {} | Step::AdvanceEpoch { .. } => {}
            }
        }
        Ok(())
    }
}
