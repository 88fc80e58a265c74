//! Executes a scenario against a fresh network and evaluates its checks.

use serde_json::json;

use crate::events::{EventKind, EventLog};
use crate::network::{detail, NetConfig, Network};
use crate::scenario::{Check, Scenario, ScenarioError, Step};
use crate::user::CircuitStatus;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the scenario's instance count.
    pub k: Option<usize>,
    /// Forces the interactive cut-and-choose variant.
    pub interactive_cc: bool,
    pub record_views: bool,
}

pub struct RunOutcome {
    pub network: Network,
    pub exit_code: i32,
    pub failed_checks: usize,
}

impl RunOutcome {
    pub fn log(&self) -> &EventLog {
        self.network.log()
    }
}

/// Validates `scenario` (with `opts` applied) and runs it to completion.
/// Failed checks and violated invariants give `EXIT_ASSERT`.
pub fn run_scenario(
    scenario: &Scenario,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutcome, ScenarioError> {
    let mut scenario = scenario.clone();
    if let Some(k) = opts.k {
        scenario.k = k;
    }
    scenario.interactive_cc |= opts.interactive_cc;
    scenario.validate()?;

    let mut cfg = NetConfig::from_scenario(&scenario);
    cfg.record_views = opts.record_views;
    let mut net = Network::new(cfg, seed);
    let mut failed = 0;
    for (i, step) in scenario.steps.iter().enumerate() {
        if !run_step(&mut net, i, step) {
            failed += 1;
        }
    }
    for (name, ok) in [
        ("conservation", net.stats().conserved()),
        ("no-leakage", net.stats().get("leakage") == 0),
    ] {
        net.emit_assert(ok, detail([("invariant", json!(name))]));
        if !ok {
            failed += 1;
        }
    }
    Ok(RunOutcome {
        network: net,
        exit_code: if failed == 0 { EXIT_OK } else { EXIT_ASSERT },
        failed_checks: failed,
    })
}

/// Runs one step; false when it carried an expectation that did not hold.
fn run_step(net: &mut Network, index: usize, step: &Step) -> bool {
    match step {
        Step::Join { user: Some(u) } => net.join(u),
        Step::Join { user: None } => net.join_all(),
        Step::BuildCircuit {
            user,
            circuit,
            hops,
            entry,
            exit,
        } => {
            net.build_circuit(user, circuit, *hops, entry.as_deref(), exit.as_deref());
        }
        Step::Send {
            circuit,
            messages,
            count,
        } => {
            for m in messages {
                net.send(circuit, m.as_bytes());
            }
            for n in 0..*count {
                net.send(circuit, format!("{circuit} message {n}").as_bytes());
            }
        }
        Step::Misbehave { circuit, message } => net.send(circuit, message.as_bytes()),
        Step::Denounce {} => net.denounce(),
        Step::RevokeCheck {
            user,
            expect_blocked,
        } => {
            let (blocked, reason) = net.revoke_check(user);
            let ok = blocked == *expect_blocked;
            net.emit_assert(
                ok,
                detail([
                    ("step", json!(index)),
                    ("check", json!("revoke-check")),
                    ("user", json!(user)),
                    ("blocked", json!(blocked)),
                    ("reason", json!(reason)),
                ]),
            );
            return ok;
        }
        Step::AdvanceEpoch { by } => {
            for _ in 0..*by {
                net.advance_epoch();
            }
        }
        Step::Assert { that } => {
            let (ok, observed) = evaluate(net, that);
            net.emit_assert(
                ok,
                detail([
                    ("step", json!(index)),
                    ("check", json!(check_name(that))),
                    ("observed", observed),
                ]),
            );
            return ok;
        }
    }
    true
}

fn check_name(check: &Check) -> &'static str {
    match check {
        Check::CircuitOpen { .. } => "circuit-open",
        Check::CircuitFailed { .. } => "circuit-failed",
        Check::Revoked { .. } => "revoked",
        Check::NotRevoked { .. } => "not-revoked",
        Check::Delivered { .. } => "delivered",
        Check::Counter { .. } => "counter",
        Check::EventsInOrder { .. } => "events-in-order",
        Check::Records { .. } => "records",
        Check::Conservation {} => "conservation",
        Check::NoLeakage {} => "no-leakage",
    }
}

fn status_json(status: Option<&CircuitStatus>) -> serde_json::Value {
    match status {
        None => json!(null),
        Some(CircuitStatus::Building) => json!("building"),
        Some(CircuitStatus::Open) => json!("open"),
        Some(CircuitStatus::Failed { hop, reason }) => json!({ "hop": hop, "reason": reason }),
    }
}

/// Whether `user`'s tag is registered but no longer in the allowed set.
fn is_revoked(net: &Network, user: &str) -> Option<bool> {
    let tag = net.user(user)?.member()?.tag().clone();
    let gk = net.authority().group_key();
    Some(gk.is_registered(&tag) && !gk.current().contains(&tag))
}

/// Outcome of `check` plus the observed value for the log.
fn evaluate(net: &Network, check: &Check) -> (bool, serde_json::Value) {
    match check {
        Check::CircuitOpen { circuit } => {
            let status = net.circuit(circuit).map(|c| &c.status);
            (
                matches!(status, Some(CircuitStatus::Open)),
                status_json(status),
            )
        }
        Check::CircuitFailed { circuit, reason } => {
            let status = net.circuit(circuit).map(|c| &c.status);
            let ok = match status {
                Some(CircuitStatus::Failed { reason: got, .. }) => {
                    reason.as_ref().is_none_or(|want| want == got)
                }
                _ => false,
            };
            (ok, status_json(status))
        }
        Check::Revoked { user } => {
            let r = is_revoked(net, user);
            (r == Some(true), json!(r))
        }
        Check::NotRevoked { user } => {
            let r = is_revoked(net, user);
            (r == Some(false), json!(r))
        }
        Check::Delivered { count } => {
            let got = net.server().deliveries().len() as u64;
            (got == *count, json!(got))
        }
        Check::Counter { name, value } => {
            let got = net.stats().get(name);
            (got == *value, json!(got))
        }
        Check::EventsInOrder { events } => {
            let ok = net.log().contains_in_order(events);
            (ok, json!(ok))
        }
        Check::Records { exit, count } => {
            let got = net.relay(exit).map(|r| r.logs().len());
            (got == Some(*count), json!(got))
        }
        Check::Conservation {} => {
            let stats = net.stats();
            (
                stats.conserved(),
                json!({
                    "entry_accepted": stats.get("entry_accepted"),
                    "tokens_issued": stats.get("tokens_issued"),
                    "exit_accepted": stats.get("exit_accepted"),
                }),
            )
        }
        Check::NoLeakage {} => {
            let got = net.stats().get("leakage");
            (got == 0, json!(got))
        }
    }
}

/// Whether an event log records an assertion failure.
pub fn log_has_failures(log: &EventLog) -> bool {
    log.of_kind(EventKind::AssertFailed).next().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(steps: &str) -> Scenario {
        Scenario::from_json(&format!(
            r#"{{"group_size": 2, "k": 4, "pow_difficulty": 2, "steps": {steps}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn legit_circuit_passes_checks() {
        let s = tiny(
            r#"[{"op":"join"},
                {"op":"build-circuit","user":"u0","circuit":"c"},
                {"op":"send","circuit":"c","count":2},
                {"op":"assert","that":{"kind":"circuit-open","circuit":"c"}},
                {"op":"assert","that":{"kind":"delivered","count":2}}]"#,
        );
        let out = run_scenario(&s, 1, &RunOptions::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.log().to_jsonl());
    }

    #[test]
    fn failed_check_gives_assert_exit() {
        let s = tiny(r#"[{"op":"join"},{"op":"assert","that":{"kind":"delivered","count":1}}]"#);
        let out = run_scenario(&s, 1, &RunOptions::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_ASSERT);
        assert_eq!(out.failed_checks, 1);
        assert!(log_has_failures(out.log()));
    }

    #[test]
    fn k_override_is_validated() {
        let s = tiny(r#"[]"#);
        let opts = RunOptions {
            k: Some(2),
            ..RunOptions::default()
        };
        assert!(matches!(
            run_scenario(&s, 1, &opts),
            Err(ScenarioError::Config(_))
        ));
    }
}
