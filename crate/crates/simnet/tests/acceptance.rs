//! Acceptance suite at desk parameters: prints one PASS/FAIL line per
//! criterion plus the total running time, and exits nonzero on any failure.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use fairtor_core::blindsig::{
    bgs_sign_blinded, bgs_unblind, blind_value, BlindedMessage, BlindingSecret, EpochSignerKeys,
    KeyRing, DEFAULT_EPOCH_WINDOW, DEFAULT_MODULUS_BITS,
};
use fairtor_core::crypto::aead::{seal_with_nonce, sequence_nonce};
use fairtor_core::crypto::elgamal::{elgamal_decrypt, elgamal_encrypt};
use fairtor_core::crypto::{
    commit, dh_keygen, dh_shared, sigma_prove, sigma_verify, ElGamalCiphertext, GroupElement,
    GroupParams, Scalar, SigmaProof, Statement,
};
use fairtor_core::fairness::{
    apply_revocation, build_denunciation, verify_denunciation, DenunciationBundle, ExitLogRecord,
    FairnessError, LogStore, RevocationAuthority, VerdictReason, DEFAULT_RETENTION,
};
use fairtor_core::groupsig::{
    enroll, gs_join, gs_open, gs_setup, gs_setup_with_secret, pow_solve_counted, pow_verify,
    GroupKey, GroupManagerKey, GroupSignature, JoinRequest, MemberKey, PowPuzzle, PowSolution,
    DEFAULT_VERSION_WINDOW,
};
use fairtor_core::handshake::{
    build_entry_request, build_exit_request, en_process_entry_request, en_verify_entry_body,
    ex_process_exit_request, fs_survivor, open_instance, prepare_entry, seal_entry_request,
    sign_instance, user_finish_entry, user_finish_exit, BlindedInstance, EntryAccepted,
    EntryContext, EntryRequestBody, ExitAccepted, ExitContext, ExitMaterial, HandshakeError,
    Opening, ReplayCache, SignedInstance, UserEntryState,
};
use fairtor_sim::leakage::{entry_side_fields, exit_side_fields, WindowSet};
use fairtor_sim::scenario::{user_name, RelayCounts};
use fairtor_sim::user::CircuitStatus;
use fairtor_sim::{NetConfig, Network};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const SUITE_BUDGET: Duration = Duration::from_secs(120);
/// Instance count at desk scale.
const K: usize = 16;
/// Group members in the core-level fixture.
const N: usize = 3;
const CHEATER_TRIALS: usize = 2000;

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Verdict);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn hs<T>(r: Result<T, HandshakeError>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

/// Group, members, one entry, two exits and epoch keys for epochs 0..3.
struct Desk {
    params: Arc<GroupParams>,
    mk: GroupManagerKey,
    gk: GroupKey,
    members: Vec<MemberKey>,
    entry_secret: Scalar,
    entry_pub: GroupElement,
    exits: Vec<(Scalar, GroupElement)>,
    signers: Vec<EpochSignerKeys>,
    ring: KeyRing,
}

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let params = GroupParams::desk();
        let mut rng = rng(0xde5c);
        let (mut mk, mut gk) = gs_setup(params.clone(), &mut rng);
        mk.set_pow_difficulty(4);
        let members = (0..N)
            .map(|_| enroll(&mut mk, &mut gk, &mut rng).expect("enroll"))
            .collect();
        let (entry_secret, entry_pub) = dh_keygen(&params, &mut rng);
        let exits = (0..2).map(|_| dh_keygen(&params, &mut rng)).collect();
        let signers: Vec<EpochSignerKeys> = (0..3)
            .map(|e| EpochSignerKeys::generate(e, 0, DEFAULT_MODULUS_BITS, &mut rng).unwrap())
            .collect();
        let mut ring = KeyRing::new();
        for s in &signers {
            ring.insert(s.public().clone());
        }
        Desk {
            params,
            mk,
            gk,
            members,
            entry_secret,
            entry_pub,
            exits,
            signers,
            ring,
        }
    })
}

impl Desk {
    fn entry_ctx<'a>(&'a self, gk: &'a GroupKey, epoch: u64, k: usize) -> EntryContext<'a> {
        EntryContext {
            params: &self.params,
            node_secret: &self.entry_secret,
            gk,
            signer: &self.signers[epoch as usize],
            k,
            window: DEFAULT_VERSION_WINDOW,
        }
    }

    fn exit_ctx(&self, exit: usize, current_epoch: u64) -> ExitContext<'_> {
        ExitContext {
            params: &self.params,
            node_secret: &self.exits[exit].0,
            gk: &self.gk,
            ring: &self.ring,
            current_epoch,
            gs_window: DEFAULT_VERSION_WINDOW,
            token_window: DEFAULT_EPOCH_WINDOW,
        }
    }

    /// Entry handshake where the user signs against `user_gk` and the entry
    /// verifies against `entry_gk`.
    fn entry(
        &self,
        member: &MemberKey,
        user_gk: &GroupKey,
        entry_gk: &GroupKey,
        epoch: u64,
        rng: &mut ChaCha20Rng,
    ) -> Result<(EntryAccepted, UserEntryState), HandshakeError> {
        let pk = self.signers[epoch as usize].public();
        let (req, state) =
            build_entry_request(&self.params, member, user_gk, pk, &self.entry_pub, K, rng)?;
        let acc = en_process_entry_request(&self.entry_ctx(entry_gk, epoch, K), &req, rng)?;
        Ok((acc, state))
    }

    /// Token and exit material issued to `member` in `epoch`.
    fn token(
        &self,
        member: usize,
        epoch: u64,
        rng: &mut ChaCha20Rng,
    ) -> Result<ExitMaterial, String> {
        let m = &self.members[member];
        let (acc, state) = hs(self.entry(m, &self.gk, &self.gk, epoch, rng), "entry")?;
        let (_, material) = hs(
            user_finish_entry(&self.params, &state, &acc.response),
            "finish",
        )?;
        Ok(material)
    }

    fn exit(
        &self,
        exit: usize,
        current_epoch: u64,
        cache: &mut ReplayCache,
        material: &ExitMaterial,
        rng: &mut ChaCha20Rng,
    ) -> Result<ExitAccepted, HandshakeError> {
        let (req, _) = build_exit_request(&self.params, Some(material), &self.exits[exit].1, rng)?;
        ex_process_exit_request(&self.exit_ctx(exit, current_epoch), cache, &req, rng)
    }

    /// Full circuit for `member`; returns the exit's record holding one
    /// sealed copy of each message.
    fn logged_circuit(
        &self,
        member: usize,
        id: u64,
        messages: &[Vec<u8>],
        rng: &mut ChaCha20Rng,
    ) -> Result<ExitLogRecord, String> {
        let material = self.token(member, 0, rng)?;
        let (req, ustate) = hs(
            build_exit_request(&self.params, Some(&material), &self.exits[0].1, rng),
            "exit request",
        )?;
        let ex = hs(
            ex_process_exit_request(&self.exit_ctx(0, 0), &mut ReplayCache::new(), &req, rng),
            "exit",
        )?;
        let k2 = hs(
            user_finish_exit(&self.params, &ustate, &ex.response),
            "exit finish",
        )?;
        let mut record = ExitLogRecord::new(id, &ex.record, 0, DEFAULT_RETENTION);
        for (seq, m) in messages.iter().enumerate() {
            record.append(seal_with_nonce(&k2, sequence_nonce(seq as u64), m));
        }
        Ok(record)
    }
}

fn sim_config(group_size: usize, record_views: bool) -> NetConfig {
    NetConfig {
        group_size,
        k: K,
        retention: DEFAULT_RETENTION,
        epoch_length: 1000,
        relays: RelayCounts {
            entry: 2,
            middle: 2,
            exit: 2,
        },
        pow_difficulty: 4,
        interactive_cc: false,
        token_window: DEFAULT_EPOCH_WINDOW,
        gs_window: DEFAULT_VERSION_WINDOW,
        record_views,
    }
}

fn c1_end_to_end() -> Verdict {
    let mut net = Network::new(sim_config(N, false), 0xc1);
    net.join_all();
    for i in 0..100 {
        let name = format!("c{i}");
        let status = net.build_circuit(&user_name(i % N), &name, 3, None, None);
        ensure!(status == CircuitStatus::Open, "{name}: {status:?}");
        let circuit = net.circuit(&name).expect("built");
        let relay_keys = net
            .trace_circuit(&name)
            .ok_or(format!("{name}: no relay path"))?;
        ensure!(
            relay_keys.len() == 3 && circuit.keys.len() == 3,
            "{name}: {} relay keys, {} user keys",
            relay_keys.len(),
            circuit.keys.len()
        );
        for ((relay, node_key), user_key) in relay_keys.iter().zip(&circuit.keys) {
            ensure!(
                node_key.as_bytes() == user_key.as_bytes(),
                "{name}: key mismatch at {relay}"
            );
        }
        net.send(&name, format!("probe {i}").as_bytes());
    }
    let stats = net.stats();
    ensure!(
        stats.get("entry_accepted") == 100 && stats.get("exit_accepted") == 100,
        "entry/exit accepts {}/{}",
        stats.get("entry_accepted"),
        stats.get("exit_accepted")
    );
    ensure!(
        net.server().deliveries().len() == 100,
        "{} messages delivered",
        net.server().deliveries().len()
    );
    Ok("100/100 circuits open, 300/300 hop keys byte-identical, 100/100 messages delivered".into())
}

fn c2_blocking() -> Verdict {
    let d = desk();
    let mut rng = rng(0xc2);
    let victim = 0;
    let record = d.logged_circuit(victim, 1, &[b"abuse".to_vec()], &mut rng)?;
    let bundle = build_denunciation(&d.params, &record, b"abuse", 0, 0, &mut rng)
        .map_err(|e| format!("bundle: {e}"))?;
    let stale = d.gk.clone();
    let mut gk = d.gk.clone();
    let authority = RevocationAuthority::new(d.mk.clone());
    let out = apply_revocation(&bundle, &authority, &mut gk).map_err(|e| format!("revoke: {e}"))?;
    ensure!(out.revoked, "policy declined");

    let mut blocked = 0;
    for i in 0..100 {
        match d.entry(&d.members[victim], &stale, &gk, 0, &mut rng) {
            Err(HandshakeError::SigInvalid) => blocked += 1,
            other => return Err(format!("revoked attempt {i}: {:?}", other.map(|_| ()))),
        }
    }
    let mut accepted = 0;
    for i in 0..100 {
        let m = 1 + i % (N - 1);
        let (acc, state) = hs(d.entry(&d.members[m], &gk, &gk, 0, &mut rng), "member")?;
        hs(
            user_finish_entry(&d.params, &state, &acc.response),
            "member finish",
        )?;
        accepted += 1;
    }
    Ok(format!(
        "revoked member rejected SigInvalid {blocked}/100, other members accepted {accepted}/100"
    ))
}

fn mutations(
    params: &GroupParams,
    b: &DenunciationBundle,
    foreign_sigma2: &GroupSignature,
) -> Vec<(&'static str, DenunciationBundle, VerdictReason)> {
    let g = params.g();
    let mut msg = b.clone();
    match msg.msg.last_mut() {
        Some(last) => *last ^= 1,
        None => msg.msg.push(0),
    }
    let mut shared = b.clone();
    shared.shared = params.mul(&b.shared, g);
    let mut x2 = b.clone();
    x2.x2_pub = params.mul(&b.x2_pub, g);
    let mut y2 = b.clone();
    y2.y2_pub = params.mul(&b.y2_pub, g);
    let mut sigma = b.clone();
    sigma.sigma2 = foreign_sigma2.clone();
    let mut sigma_z = b.clone();
    sigma_z.sigma2.branches[0].z1 = params.sadd(&b.sigma2.branches[0].z1, &params.scalar_u64(1));
    let mut dleq = b.clone();
    dleq.dleq.responses[0] = params.sadd(&b.dleq.responses[0], &params.scalar_u64(1));
    vec![
        ("msg", msg, VerdictReason::DecryptMismatch),
        ("K2", shared, VerdictReason::DecryptMismatch),
        ("g^x2", x2, VerdictReason::DecryptMismatch),
        ("g^y2", y2, VerdictReason::DecryptMismatch),
        ("sigma2 swap", sigma, VerdictReason::SigInvalid),
        ("sigma2 response", sigma_z, VerdictReason::SigInvalid),
        ("DLEQ", dleq, VerdictReason::DleqInvalid),
    ]
}

fn c3_denunciation() -> Verdict {
    let d = desk();
    let mut rng = rng(0xc3);
    let messages: Vec<Vec<u8>> = (0..5)
        .map(|i| format!("message {i}").into_bytes())
        .collect();
    let mut bundles = Vec::new();
    for c in 0..20 {
        let record = d.logged_circuit(c % N, c as u64, &messages, &mut rng)?;
        for (seq, m) in messages.iter().enumerate() {
            let b = build_denunciation(&d.params, &record, m, seq as u64, 0, &mut rng)
                .map_err(|e| format!("bundle: {e}"))?;
            bundles.push(b);
        }
    }
    let mut honest = 0;
    let mut rejected = 0;
    let mut total = 0;
    for (i, b) in bundles.iter().enumerate() {
        let v = verify_denunciation(b, &d.gk);
        ensure!(v.accepted, "honest bundle {i}: {}", v.reason);
        honest += 1;
        // A valid signature from another circuit, on a different share.
        let foreign = &bundles[(i + 5) % bundles.len()].sigma2;
        for (field, mutated, want) in mutations(&d.params, b, foreign) {
            total += 1;
            let v = verify_denunciation(&mutated, &d.gk);
            ensure!(
                !v.accepted && v.reason == want,
                "bundle {i} field {field}: got {}, want {want}",
                v.reason
            );
            rejected += 1;
        }
    }
    Ok(format!(
        "honest accepted {honest}/{}, mutations rejected with expected code {rejected}/{total}",
        bundles.len()
    ))
}

/// An entry request for `member` where instance `j` (forced to be opened)
/// carries `foreign`; `swap_after` replaces only the opened signature, so
/// the commitment no longer matches, otherwise the instance is committed
/// and blinded honestly and borrows another instance's same-member proof.
fn spliced_entry(
    d: &Desk,
    member: &MemberKey,
    foreign: &SignedInstance,
    swap_after: bool,
    rng: &mut ChaCha20Rng,
) -> Result<HandshakeError, String> {
    let pk = d.signers[0].public();
    let mut state = hs(
        prepare_entry(&d.params, member, &d.gk, pk, K, rng),
        "prepare",
    )?;
    let j = rng.gen_range(0..K);
    let donor = (j + 1) % K;
    let donor_proof = hs(open_instance(&d.params, &d.gk, &state, donor, rng), "open")?.same_member;
    if !swap_after {
        state.instances[j] =
            BlindedInstance::new(&d.params, foreign.clone(), pk, &state.x1_pub, j, rng);
    }
    let mut commit = state.commit_body();
    let mut survivor = fs_survivor(&d.params, &commit, pk.modulus_len());
    while survivor == j {
        // Re-blind an honest instance until instance j is opened.
        let r = (j + 2) % K;
        let signed = state.instances[r].signed.clone();
        state.instances[r] = BlindedInstance::new(&d.params, signed, pk, &state.x1_pub, r, rng);
        commit = state.commit_body();
        survivor = fs_survivor(&d.params, &commit, pk.modulus_len());
    }
    let mut openings = Vec::with_capacity(K - 1);
    for i in (0..K).filter(|&i| i != survivor) {
        let mut o = if i == j {
            let inst = &state.instances[j];
            Opening {
                index: j as u32,
                x2_pub: inst.signed.x2_pub.clone(),
                sigma2: inst.signed.sigma2.clone(),
                r1: inst.r1.clone(),
                r2: inst.r2.value().clone(),
                same_member: donor_proof.clone(),
            }
        } else {
            hs(open_instance(&d.params, &d.gk, &state, i, rng), "open")?
        };
        if i == j && swap_after {
            o.sigma2.ciphertext = foreign.sigma2.ciphertext.clone();
        }
        openings.push(o);
    }
    let body = EntryRequestBody {
        commit,
        survivor: survivor as u32,
        openings,
    };
    let req = seal_entry_request(&d.params, &d.entry_pub, &body, rng);
    match en_process_entry_request(&d.entry_ctx(&d.gk, 0, K), &req, rng) {
        Ok(_) => Err("spliced entry request accepted".into()),
        Err(e) => Ok(e),
    }
}

fn c4_non_frameability() -> Verdict {
    let d = desk();
    let mut rng = rng(0xc4);
    const TRIALS: usize = 25;
    let mut counts = [0usize; 4];
    for t in 0..TRIALS {
        let (a, b) = (t % N, (t + 1) % N);
        let mine = d.token(a, 0, &mut rng)?;
        let theirs = d.token(b, 0, &mut rng)?;

        // Own token, another member's sigma2 over the same exit share.
        let foreign_sig =
            sign_instance(&d.params, &d.members[b], &d.gk, &mut rng).map_err(|e| e.to_string())?;
        let framed_sig = fairtor_core::groupsig::gs_sign(
            &d.params.element_bytes(&mine.x2_pub),
            &d.members[b],
            &d.gk,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
        let spliced = ExitMaterial {
            sigma2: framed_sig,
            ..mine.clone()
        };
        let r = d.exit(0, 0, &mut ReplayCache::new(), &spliced, &mut rng);
        ensure!(
            matches!(r, Err(HandshakeError::TokenInvalid)),
            "foreign sigma2 with own token: {:?}",
            r.map(|_| ())
        );
        counts[0] += 1;

        // Another member's token with own sigma2.
        let spliced = ExitMaterial {
            token: theirs.token.clone(),
            ..mine.clone()
        };
        let r = d.exit(0, 0, &mut ReplayCache::new(), &spliced, &mut rng);
        ensure!(
            matches!(r, Err(HandshakeError::TokenInvalid)),
            "foreign token with own sigma2: {:?}",
            r.map(|_| ())
        );
        counts[1] += 1;

        // Foreign ciphertext in an opened instance, committed honestly.
        let e = spliced_entry(d, &d.members[a], &foreign_sig, false, &mut rng)?;
        ensure!(
            e == HandshakeError::CutAndChooseMismatch,
            "foreign instance: {e}"
        );
        counts[2] += 1;

        // Foreign ciphertext swapped into an opening after commitment.
        let e = spliced_entry(d, &d.members[a], &foreign_sig, true, &mut rng)?;
        ensure!(
            e == HandshakeError::CutAndChooseMismatch,
            "swapped ciphertext: {e}"
        );
        counts[3] += 1;
    }
    Ok(format!(
        "rejected: foreign sigma2 + own token {}/{TRIALS} (TokenInvalid), foreign token + own sigma2 {}/{TRIALS} (TokenInvalid), foreign instance {}/{TRIALS} and swapped ciphertext {}/{TRIALS} (CutAndChooseMismatch)",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

fn c5_unlinkability() -> Verdict {
    const CIRCUITS: usize = 1000;
    let mut net = Network::new(sim_config(N, true), 0xc5);
    net.join_all();
    for i in 0..CIRCUITS {
        let name = format!("c{i}");
        let status = net.build_circuit(&user_name(i % N), &name, 3, None, None);
        ensure!(status == CircuitStatus::Open, "{name}: {status:?}");
        net.send(&name, format!("payload {i}").as_bytes());
    }
    // Exit-side values must stay away from entries and vice versa.
    let mut exit_side = WindowSet::new();
    let mut entry_side = WindowSet::new();
    for i in 0..CIRCUITS {
        let c = net.circuit(&format!("c{i}")).expect("built");
        let (Some(material), Some(state), Some(beta)) =
            (&c.material, &c.entry_state, &c.beta_signed)
        else {
            return Err(format!("c{i}: handshake values not kept"));
        };
        exit_side.extend(&WindowSet::from_fields(&exit_side_fields(material)));
        entry_side.extend(&WindowSet::from_fields(&entry_side_fields(state, beta)));
    }
    let scan = |prefix: &str, windows: &WindowSet| -> (usize, usize, usize) {
        let (mut messages, mut bytes, mut hits) = (0, 0, 0);
        for relay in net.relays().filter(|r| r.name.starts_with(prefix)) {
            for (_, view) in net.views(&relay.name) {
                messages += 1;
                bytes += view.len();
                hits += windows.hits(view);
            }
        }
        (messages, bytes, hits)
    };
    let (entry_msgs, entry_bytes, entry_hits) = scan("E", &exit_side);
    let (exit_msgs, exit_bytes, exit_hits) = scan("X", &entry_side);
    // Control: each side does see its own values, so the scan can find them.
    let (_, _, entry_control) = scan("E", &entry_side);
    let (_, _, exit_control) = scan("X", &exit_side);
    ensure!(
        entry_control > 0 && exit_control > 0,
        "scanner control found nothing ({entry_control}, {exit_control})"
    );
    ensure!(
        entry_hits == 0 && exit_hits == 0,
        "leaked windows: {entry_hits} at entries, {exit_hits} at exits"
    );
    Ok(format!(
        "{CIRCUITS} circuits: 0 exit-side windows in {entry_msgs} entry messages ({entry_bytes} B), 0 entry-side windows in {exit_msgs} exit messages ({exit_bytes} B)"
    ))
}

/// Acceptance count for a non-grinding cheater whose instance `bad` holds
/// another member's signature: it commits once per trial and never
/// retries. Same-member proofs do not depend on the per-trial commitment
/// randomness, so they are made once; the bad instance borrows one.
fn cheater_acceptance(d: &Desk, k: usize, trials: usize, seed: u64) -> Result<usize, String> {
    let mut rng = rng(seed);
    let params = &d.params;
    let pk = d.signers[0].public();
    let mut state = hs(
        prepare_entry(params, &d.members[0], &d.gk, pk, k, &mut rng),
        "prepare",
    )?;
    let bad = rng.gen_range(0..k);
    let mut proofs: Vec<SigmaProof> = Vec::with_capacity(k);
    for j in 0..k {
        let j = if j == bad { (bad + 1) % k } else { j };
        proofs.push(hs(open_instance(params, &d.gk, &state, j, &mut rng), "open")?.same_member);
    }
    let foreign = hs(
        sign_instance(params, &d.members[1], &d.gk, &mut rng),
        "sign",
    )?;
    let mut signed: Vec<SignedInstance> =
        state.instances.iter().map(|i| i.signed.clone()).collect();
    signed[bad] = foreign;
    let ctx = d.entry_ctx(&d.gk, 0, k);
    let mut accepted = 0;
    for t in 0..trials {
        for (j, s) in signed.iter().enumerate() {
            state.instances[j] =
                BlindedInstance::new(params, s.clone(), pk, &state.x1_pub, j, &mut rng);
        }
        let commit = state.commit_body();
        let survivor = fs_survivor(params, &commit, pk.modulus_len());
        let openings = (0..k)
            .filter(|&j| j != survivor)
            .map(|j| {
                let inst = &state.instances[j];
                Opening {
                    index: j as u32,
                    x2_pub: inst.signed.x2_pub.clone(),
                    sigma2: inst.signed.sigma2.clone(),
                    r1: inst.r1.clone(),
                    r2: inst.r2.value().clone(),
                    same_member: proofs[j].clone(),
                }
            })
            .collect();
        let body = EntryRequestBody {
            commit,
            survivor: survivor as u32,
            openings,
        };
        match en_verify_entry_body(&ctx, &body, &mut rng) {
            Ok(_) => {
                ensure!(
                    survivor == bad,
                    "k={k} trial {t}: accepted with bad instance opened"
                );
                accepted += 1;
            }
            Err(HandshakeError::CutAndChooseMismatch) => {
                ensure!(
                    survivor != bad,
                    "k={k} trial {t}: rejected with bad instance hidden"
                );
            }
            Err(e) => return Err(format!("k={k} trial {t}: unexpected {e}")),
        }
    }
    Ok(accepted)
}

fn c6_cut_and_choose() -> Verdict {
    let d = desk();
    let n = CHEATER_TRIALS as f64;
    let mut parts = Vec::new();
    for (k, seed) in [(4usize, 0xc64), (8, 0xc68), (16, 0xc616)] {
        let accepted = cheater_acceptance(d, k, CHEATER_TRIALS, seed)?;
        let p = 1.0 / k as f64;
        let bound = p + 3.0 * (p * (1.0 - p) / n).sqrt();
        let rate = accepted as f64 / n;
        let within = rate <= bound;
        ensure!(within, "k={k}: acceptance {rate:.4} above bound {bound:.4}");
        parts.push(format!(
            "k={k} {accepted}/{CHEATER_TRIALS}={rate:.4}<={bound:.4}"
        ));
    }
    Ok(format!("cheater acceptance {}", parts.join(", ")))
}

fn c7_token_lifetime() -> Verdict {
    let d = desk();
    let mut rng = rng(0xc7);
    let w = DEFAULT_EPOCH_WINDOW;
    let mut steps = 0;
    for issued in 0..2u64 {
        let material = d.token(issued as usize % N, issued, &mut rng)?;
        for current in issued..=issued + w {
            let r = d.exit(0, current, &mut ReplayCache::new(), &material, &mut rng);
            ensure!(
                r.is_ok(),
                "issued {issued}, current {current}: {:?}",
                r.map(|_| ())
            );
            steps += 1;
        }
        let r = d.exit(
            0,
            issued + w + 1,
            &mut ReplayCache::new(),
            &material,
            &mut rng,
        );
        ensure!(
            matches!(r, Err(HandshakeError::TokenExpired)),
            "issued {issued}, current {}: {:?}",
            issued + w + 1,
            r.map(|_| ())
        );
        steps += 1;
    }
    const TOKENS: usize = 25;
    let mut caches = [ReplayCache::new(), ReplayCache::new()];
    let mut replays = 0;
    for t in 0..TOKENS {
        let material = d.token(t % N, 0, &mut rng)?;
        let (req, _) = hs(
            build_exit_request(&d.params, Some(&material), &d.exits[0].1, &mut rng),
            "exit request",
        )?;
        hs(
            ex_process_exit_request(&d.exit_ctx(0, 0), &mut caches[0], &req, &mut rng),
            "first spend",
        )?;
        let again = ex_process_exit_request(&d.exit_ctx(0, 0), &mut caches[0], &req, &mut rng);
        ensure!(
            matches!(again, Err(HandshakeError::Replayed)),
            "token {t} resent: {:?}",
            again.map(|_| ())
        );
        let rebuilt = d.exit(0, 0, &mut caches[0], &material, &mut rng);
        ensure!(
            matches!(rebuilt, Err(HandshakeError::Replayed)),
            "token {t} in a new request: {:?}",
            rebuilt.map(|_| ())
        );
        replays += 2;
        // Replay state is per exit.
        hs(
            d.exit(1, 0, &mut caches[1], &material, &mut rng),
            "other exit",
        )?;
    }
    Ok(format!(
        "W_e={w}: {steps}/{steps} epoch steps exact (valid through issue+W_e, TokenExpired at issue+W_e+1), replays rejected {replays}/{replays}"
    ))
}

fn c8_retention() -> Verdict {
    let d = desk();
    let mut rng = rng(0xc8);
    let base = d.logged_circuit(1, 0, &[b"m".to_vec()], &mut rng)?;
    let seeded = |retention: u64, epochs: u64| -> Vec<ExitLogRecord> {
        (0..epochs)
            .map(|e| {
                let mut r = base.clone();
                r.circuit_id = e;
                r.created = e;
                r.expiry = e + retention;
                r
            })
            .collect()
    };

    // Worked example: retention 2, records at epochs 0..2, current 3.
    let mut store = LogStore::new();
    for r in seeded(2, 3) {
        store.insert(r);
    }
    ensure!(store.purge_expired(3) == 2, "worked example purge count");
    ensure!(
        store.records().map(|r| r.circuit_id).collect::<Vec<_>>() == vec![2],
        "worked example survivors"
    );

    let mut checks = 0;
    let records = seeded(DEFAULT_RETENTION, 50);
    for current in 0..(50 + DEFAULT_RETENTION + 2) {
        let mut store = LogStore::new();
        for r in &records {
            store.insert(r.clone());
        }
        store.purge_expired(current);
        let mut kept: Vec<u64> = store.records().map(|r| r.circuit_id).collect();
        kept.sort_unstable();
        let want: Vec<u64> = (0..50)
            .filter(|e| e + DEFAULT_RETENTION > current)
            .collect();
        ensure!(kept == want, "current {current}: kept {kept:?}");
        for r in records.iter().filter(|r| r.expiry <= current) {
            ensure!(
                store.get(r.circuit_id).err() == Some(FairnessError::Expired),
                "current {current}: lookup of purged {}",
                r.circuit_id
            );
            ensure!(
                build_denunciation(&d.params, r, b"m", 0, current, &mut rng).err()
                    == Some(FairnessError::Expired),
                "current {current}: denunciation of purged {}",
                r.circuit_id
            );
        }
        checks += 1;
    }
    let kept = &records[49];
    ensure!(
        build_denunciation(&d.params, kept, b"m", 0, 49, &mut rng).is_ok(),
        "live record not denounceable"
    );
    Ok(format!(
        "50-epoch store exact at {checks}/{checks} purge points (retention {DEFAULT_RETENTION}); purged records give Expired"
    ))
}

/// Brute-force modular power by repeated multiplication.
fn brute_pow(base: u64, exp: u64, m: u64) -> u64 {
    (0..exp).fold(1, |acc, _| acc * base % m)
}

fn brute_log(base: u64, target: u64, m: u64) -> u64 {
    (0..m)
        .find(|&e| brute_pow(base, e, m) == target)
        .expect("in subgroup")
}

fn c9_toy_oracles() -> Verdict {
    let params = GroupParams::toy();
    let big = |v: u64| BigUint::from(v);
    let el = |v: u64| params.element(big(v)).unwrap();
    let mut checked = 0;

    ensure!(brute_pow(4, 5, 23) == 12, "oracle: 4^5");
    ensure!(
        params.g_pow(&params.scalar_u64(5)).value() == &big(12),
        "dh_keygen x=5"
    );
    checked += 1;

    ensure!(
        brute_pow(4, 2, 23) == 16 && brute_pow(16, 3, 23) == 2,
        "oracle: shared"
    );
    let k = dh_shared(&params, &params.scalar_u64(3), &el(16)).map_err(|e| e.to_string())?;
    ensure!(k.value() == &big(2), "dh_shared");
    checked += 1;

    let oracle_commit = brute_pow(4, 5, 23) * brute_pow(9, 7, 23) % 23;
    ensure!(oracle_commit == 2, "oracle: commit");
    let c = commit(&params, &params.scalar_u64(5), &params.scalar_u64(7));
    ensure!(c.element().value() == &big(oracle_commit), "commit(5, 7)");
    checked += 1;

    // ElGamal under g_op = 3 with secret 7, tag 8, randomness 3 and 5.
    let key_v = brute_pow(3, 7, 23);
    let enc = |m: u64, r: u64| ElGamalCiphertext {
        c1: el(brute_pow(3, r, 23)),
        c2: el(m * brute_pow(key_v, r, 23) % 23),
    };
    let key = el(key_v);
    let (a, b) = (enc(8, 3), enc(8, 5));
    ensure!(
        elgamal_encrypt(&params, params.g_op(), &key, &el(8), &params.scalar_u64(3)) == a,
        "elgamal_encrypt"
    );
    ensure!(
        elgamal_decrypt(&params, &params.scalar_u64(7), &b).value() == &big(8),
        "elgamal_decrypt"
    );
    let witness = params.ssub(&params.scalar_u64(3), &params.scalar_u64(5));
    let st = Statement::EncEq {
        base: params.g_op().clone(),
        key: key.clone(),
        first: a.clone(),
        second: b,
    };
    let mut rng = rng(0xc9);
    let proof = sigma_prove(&params, &st, &witness, b"", &mut rng).map_err(|e| e.to_string())?;
    ensure!(sigma_verify(&params, &st, &proof, b""), "ENC_EQ honest");
    let changed = Statement::EncEq {
        base: params.g_op().clone(),
        key,
        first: a,
        second: enc(9, 5),
    };
    ensure!(
        !sigma_verify(&params, &changed, &proof, b""),
        "ENC_EQ changed plaintext"
    );
    checked += 2;

    // Opening (g_op^3, 8 * OPK^3) with opener secret 6.
    let (mut mk, mut gk) = gs_setup_with_secret(params.clone(), params.scalar_u64(6));
    mk.set_pow_difficulty(0);
    let opk = brute_pow(3, 6, 23);
    ensure!(gk.opk().value() == &big(opk), "OPK");
    let s = brute_log(9, 8, 23);
    let puzzle = mk.issue_puzzle(&mut rng);
    let req = JoinRequest::new(&params, &params.scalar_u64(s), &puzzle, &mut rng);
    gs_join(&mut mk, &mut gk, &req).map_err(|e| e.to_string())?;
    let sig = GroupSignature {
        version: gk.version(),
        ciphertext: enc_with(&el, opk, 8, 3),
        branches: vec![],
    };
    ensure!(
        gs_open(&sig, &mk).map_err(|e| e.to_string())?.value() == &big(8),
        "gs_open"
    );
    checked += 1;

    // Blind RSA with n = 187 = 11 * 17, e = 3.
    let keys = EpochSignerKeys::insecure_from_primes(0, 11, 17, 3).ok_or("toy RSA key")?;
    let phi = 10 * 16;
    let d_oracle = (1..phi).find(|d| 3 * d % phi == 1).expect("invertible");
    ensure!(d_oracle == 107, "oracle: private exponent");
    ensure!(
        keys.private_exponent() == &big(d_oracle),
        "private exponent"
    );
    let pk = keys.public();
    let r = BlindingSecret::from_value(pk, big(5)).map_err(|e| e.to_string())?;
    let beta_oracle = 42 * brute_pow(5, 3, 187) % 187;
    ensure!(beta_oracle == 14, "oracle: beta");
    let beta = blind_value(pk, &big(42), &r);
    ensure!(beta == big(beta_oracle), "blind 42 with r2=5");
    let signed_oracle = brute_pow(14, d_oracle, 187);
    ensure!(
        brute_pow(signed_oracle, 3, 187) == 14,
        "oracle: signature check"
    );
    let signed = bgs_sign_blinded(&BlindedMessage(beta), &keys).map_err(|e| e.to_string())?;
    ensure!(signed.0 == big(signed_oracle), "blind signature");
    let inv5 = (1..187).find(|v| v * 5 % 187 == 1).expect("invertible");
    let token_oracle = signed_oracle * inv5 % 187;
    let token = bgs_unblind(&signed, &r, pk).map_err(|e| e.to_string())?;
    ensure!(token.value == big(token_oracle), "unblind");
    ensure!(brute_pow(token_oracle, 3, 187) == 42, "oracle: token");
    checked += 3;

    Ok(format!(
        "{checked}/{checked} toy values match brute force (p=23: 4^5=12, K=2, commit=2, ENC_EQ accept/reject, open=8; n=187: d=107, beta=14, beta~={signed_oracle}, token={token_oracle})"
    ))
}

fn enc_with(el: &dyn Fn(u64) -> GroupElement, key: u64, m: u64, r: u64) -> ElGamalCiphertext {
    ElGamalCiphertext {
        c1: el(brute_pow(3, r, 23)),
        c2: el(m * brute_pow(key, r, 23) % 23),
    }
}

fn c10_pow() -> Verdict {
    let mut rng = rng(0xc10);
    const PUZZLES: u64 = 200;
    let mut total = 0;
    for i in 0..PUZZLES {
        let puzzle = PowPuzzle::random(8, &mut rng);
        let (solution, attempts) = pow_solve_counted(&puzzle);
        ensure!(
            pow_verify(&puzzle, &solution),
            "puzzle {i}: solution rejected"
        );
        // The solver returns the first nonce that verifies.
        for n in 0..attempts - 1 {
            let earlier = PowSolution {
                nonce: n.to_be_bytes(),
            };
            ensure!(
                !pow_verify(&puzzle, &earlier),
                "puzzle {i}: nonce {n} verifies"
            );
        }
        ensure!(
            u64::from_be_bytes(solution.nonce) == attempts - 1,
            "puzzle {i}: count"
        );
        total += attempts;
    }
    let mean = total as f64 / PUZZLES as f64;
    ensure!((128.0..=512.0).contains(&mean), "mean attempts {mean:.1}");
    Ok(format!("d=8 mean attempts {mean:.1} over {PUZZLES} puzzles, pow_verify exact on all {total} nonces tried"))
}

fn c11_determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenarios = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut runs = 0;
    for name in ["legit.json", "denounce.json"] {
        for interactive in [false, true] {
            let mut logs = Vec::new();
            for run in 0..2 {
                let log = dir.path().join(format!("{name}-{interactive}-{run}.jsonl"));
                let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairtor"));
                cmd.arg("sim")
                    .arg("--scenario")
                    .arg(scenarios.join(name))
                    .args(["--seed", "1234", "--log"])
                    .arg(&log);
                if interactive {
                    cmd.arg("--interactive-cc");
                }
                let status = cmd.status().map_err(|e| e.to_string())?;
                ensure!(status.success(), "{name}: exit {status}");
                logs.push(std::fs::read(&log).map_err(|e| e.to_string())?);
                runs += 1;
            }
            ensure!(!logs[0].is_empty(), "{name}: empty log");
            ensure!(
                logs[0] == logs[1],
                "{name} interactive={interactive}: logs differ"
            );
        }
    }
    Ok(format!(
        "{runs} runs of `fairtor sim`, logs byte-identical per (scenario, seed, mode)"
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "end-to-end correctness", c1_end_to_end),
        (2, "blocking", c2_blocking),
        (3, "denunciation soundness", c3_denunciation),
        (4, "non-frameability", c4_non_frameability),
        (5, "collusion unlinkability", c5_unlinkability),
        (6, "cut-and-choose soundness", c6_cut_and_choose),
        (7, "token lifetime", c7_token_lifetime),
        (8, "retention", c8_retention),
        (9, "small-parameter oracles", c9_toy_oracles),
        (10, "proof of work", c10_pow),
        (11, "determinism", c11_determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (n, name, run) in criteria {
        let t = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(summary) => println!("PASS {n:>2} {name}: {summary} [{secs:.1}s]"),
            Err(reason) => {
                failures += 1;
                println!("FAIL {n:>2} {name}: {reason} [{secs:.1}s]");
            }
        }
    }
    let total = start.elapsed();
    let within = total <= SUITE_BUDGET;
    println!(
        "{} suite time {:.1}s (budget {}s)",
        if within { "PASS" } else { "FAIL" },
        total.as_secs_f64(),
        SUITE_BUDGET.as_secs()
    );
    if failures > 0 || !within {
        std::process::exit(1);
    }
}
