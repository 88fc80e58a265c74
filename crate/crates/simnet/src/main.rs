use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairtor_core::blindsig::bgs_setup_epoch;
use fairtor_core::crypto::{dh_keygen, GroupParams};
use fairtor_core::fairness::{verify_denunciation, DenunciationBundle};
use fairtor_core::groupsig::{gs_setup, GroupKey};
use fairtor_sim::keyfiles::NodeKeyFile;
use fairtor_sim::runner::{EXIT_ASSERT, EXIT_CONFIG, EXIT_OK};
use fairtor_sim::{run_scenario, EventLog, RunOptions, Scenario, Stats};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Parser)]
#[command(
    name = "fairtor",
    version,
    about = "Simulator and tools for accountable anonymous circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and emit its event log as JSON lines.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Override the scenario's cut-and-choose instance count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        interactive_cc: bool,
        /// Write the log here instead of stdout.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write the final group key and every denunciation bundle here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Generate a key and write it to a file.
    Keygen {
        #[arg(long, value_enum)]
        role: Role,
        #[arg(long)]
        out: PathBuf,
        /// Deterministic generation; fresh OS entropy when absent.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a denunciation bundle against a group key.
    DenounceVerify {
        bundle: PathBuf,
        #[arg(long)]
        groupkey: PathBuf,
    },
    /// Summarize an event log.
    Stats { log: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    /// Group manager key; the group key goes to `<out>.gk`.
    Manager,
    /// Entry-group blind signing key for epoch 0.
    Entry,
    /// Relay Diffie-Hellman key pair.
    Node,
}

/// A failure that maps to an exit code with a message on stderr.
struct Failure(u8, String);

impl Failure {
    fn config(what: impl std::fmt::Display) -> Self {
        Self(EXIT_CONFIG as u8, what.to_string())
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn sim(
    scenario: &Path,
    seed: u64,
    opts: RunOptions,
    log: Option<&Path>,
    export: Option<&Path>,
) -> Result<u8, Failure> {
    let scenario = Scenario::from_file(scenario).map_err(Failure::config)?;
    let outcome = run_scenario(&scenario, seed, &opts).map_err(Failure::config)?;
    let text = outcome.log().to_jsonl();
    match log {
        Some(path) => write(path, text.as_bytes())?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(Failure::config)?,
    }
    if let Some(dir) = export {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("{}: {e}", dir.display())))?;
        let authority = outcome.network.authority();
        write(&dir.join("group.gk"), &authority.group_key().encode())?;
        for (i, bundle) in authority.bundles().iter().enumerate() {
            write(&dir.join(format!("bundle-{i}.ftdn")), bundle)?;
        }
    }
    if outcome.exit_code != EXIT_OK {
        eprintln!("{} check(s) failed", outcome.failed_checks);
    }
    Ok(outcome.exit_code as u8)
}

fn keygen(role: Role, out: &Path, seed: Option<u64>) -> Result<u8, Failure> {
    let mut rng = match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    };
    let params = GroupParams::desk();
    match role {
        Role::Manager => {
            let (mk, gk) = gs_setup(params, &mut rng);
            write(out, &mk.encode())?;
            let mut gk_path = out.as_os_str().to_owned();
            gk_path.push(".gk");
            write(Path::new(&gk_path), &gk.encode())?;
        }
        Role::Entry => write(out, &bgs_setup_epoch(0, &mut rng).encode())?,
        Role::Node => {
            let (secret, public) = dh_keygen(&params, &mut rng);
            let file = NodeKeyFile {
                params,
                secret,
                public,
            };
            write(out, &file.encode())?;
        }
    }
    Ok(EXIT_OK as u8)
}

fn denounce_verify(bundle: &Path, groupkey: &Path) -> Result<u8, Failure> {
    let gk = GroupKey::decode(&read(groupkey)?)
        .map_err(|e| Failure::config(format!("group key: {e}")))?;
    let bundle = DenunciationBundle::from_file_bytes(gk.params(), &read(bundle)?)
        .map_err(|e| Failure::config(format!("bundle: {e}")))?;
    let verdict = verify_denunciation(&bundle, &gk);
    if verdict.accepted {
        println!("ACCEPT");
        Ok(EXIT_OK as u8)
    } else {
        println!("REJECT {}", verdict.reason.code());
        Ok(EXIT_ASSERT as u8)
    }
}

fn stats(log: &Path) -> Result<u8, Failure> {
    let file = File::open(log).map_err(|e| Failure::config(format!("{}: {e}", log.display())))?;
    let log = EventLog::from_jsonl(BufReader::new(file)).map_err(Failure::config)?;
    let stats = Stats::from_events(log.events());
    for (name, value) in &stats.counters {
        println!("{name} {value}");
    }
    Ok(EXIT_OK as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Sim {
            scenario,
            seed,
            k,
            interactive_cc,
            log,
            export,
        } => sim(
            &scenario,
            seed,
            RunOptions {
                k,
                interactive_cc,
                record_views: false,
            },
            log.as_deref(),
            export.as_deref(),
        ),
        Command::Keygen { role, out, seed } => keygen(role, &out, seed),
        Command::DenounceVerify { bundle, groupkey } => denounce_verify(&bundle, &groupkey),
        Command::Stats { log } => stats(&log),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
