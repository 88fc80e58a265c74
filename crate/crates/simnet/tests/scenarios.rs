use std::path::PathBuf;

use fairtor_sim::runner::EXIT_OK;
use fairtor_sim::{run_scenario, EventKind, RunOptions, Scenario};

fn bundled(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name);
    Scenario::from_file(&path).unwrap()
}

#[test]
fn legit_scenario_stats() {
    let out = run_scenario(&bundled("legit.json"), 7, &RunOptions::default()).unwrap();
    assert_eq!(out.exit_code, EXIT_OK, "{}", out.log().to_jsonl());
    let stats = out.network.stats();
    assert_eq!(stats.get("entry_accepted"), 1);
    assert_eq!(stats.get("exit_accepted"), 1);
    assert_eq!(stats.get("entry_rejected"), 0);
    assert_eq!(stats.get("exit_rejected"), 0);
    assert_eq!(stats.get("messages_delivered"), 5);
}

#[test]
fn denounce_scenario_blocks_retry() {
    let out = run_scenario(&bundled("denounce.json"), 7, &RunOptions::default()).unwrap();
    assert_eq!(out.exit_code, EXIT_OK, "{}", out.log().to_jsonl());
    let log = out.log();
    assert!(log.contains_in_order(&[EventKind::Revoked, EventKind::EntryRejected]));
    assert!(log
        .of_kind(EventKind::EntryRejected)
        .any(|e| e.get_str("reason") == Some("SigInvalid")));
}

#[test]
fn interactive_variant_runs_both_scenarios() {
    let opts = RunOptions {
        interactive_cc: true,
        ..RunOptions::default()
    };
    for name in ["legit.json", "denounce.json"] {
        let out = run_scenario(&bundled(name), 11, &opts).unwrap();
        assert_eq!(out.exit_code, EXIT_OK, "{name}: {}", out.log().to_jsonl());
    }
}

#[test]
fn same_seed_same_log() {
    let s = bundled("denounce.json");
    let a = run_scenario(&s, 3, &RunOptions::default()).unwrap();
    let b = run_scenario(&s, 3, &RunOptions::default()).unwrap();
    assert_eq!(a.log().to_jsonl(), b.log().to_jsonl());
}
