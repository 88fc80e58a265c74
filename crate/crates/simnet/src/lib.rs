//! Deterministic in-process relay network for the fairtor protocol: users,
//! entry, middle and exit relays, a revocation authority, a directory and a
//! destination server exchanging wire messages over a single event queue.

pub mod authority;
pub mod directory;
pub mod events;
pub mod keyfiles;
pub mod leakage;
pub mod network;
pub mod relay;
pub mod runner;
pub mod scenario;
pub mod user;

pub use events::{Event, EventKind, EventLog, Stats};
pub use network::{NetConfig, Network};
pub use runner::{run_scenario, RunOptions, RunOutcome};
pub use scenario::{Scenario, ScenarioError};
