use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use coop_attest::attestation::{self, AttestationDoc, BlindedAttestation, PlainAttestation, SubjectMode};
use coop_attest::canonical;
use coop_attest::cooperative::{Cooperative, CooperativeConfig, CooperativeState, Status};
use coop_attest::crypto::{self, Digest, PublicKey};
use coop_attest::notary::{DisclosureOutcome, Notary, NotaryConfig, NotaryState, Purpose};
use coop_attest::sim::{self, HarnessError, ScenarioConfig};
use coop_attest::Tick;

#[derive(Parser)]
#[command(
    name = "coop-attest",
    version,
    about = "Issue, countersign, verify and disclose cooperative attestations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Absent,
    Handle,
}

#[derive(Clone, Copy, ValueEnum)]
enum PurposeArg {
    TravelRule,
    DsnDispute,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a key pair from a hex seed; also writes `<out>.pub`.
    Keygen {
        #[arg(long)]
        seed: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Issue a plain/blinded pair. The cooperative file is rewritten as state.
    Issue {
        #[arg(long)]
        coop: PathBuf,
        #[arg(long)]
        member: String,
        #[arg(long, value_delimiter = ',')]
        attrs: Vec<String>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        now: Tick,
        #[arg(long)]
        ttl: u64,
        #[arg(long)]
        out_plain: PathBuf,
        #[arg(long)]
        out_blinded: PathBuf,
    },
    /// Witness a pair and countersign the blinded half. The notary file is
    /// rewritten as state.
    Countersign {
        #[arg(long)]
        notary: PathBuf,
        #[arg(long)]
        plain: PathBuf,
        #[arg(long)]
        blinded: PathBuf,
        #[arg(long)]
        now: Tick,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a countersigned attestation offline.
    Verify {
        #[arg(long)]
        csa: PathBuf,
        #[arg(long)]
        issuer_key: PathBuf,
        #[arg(long)]
        notary_key: PathBuf,
        #[arg(long)]
        now: Tick,
    },
    /// Revoke an attestation by its blinded id. The cooperative file is rewritten as state
    Revoke {
        #[arg(long)]
        coop: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        now: Tick,
    },
    /// Revalidation status as the issuing cooperative reports it.
    Status {
        #[arg(long)]
        id: String,
        #[arg(long)]
        now: Tick,
        #[arg(long, env = "COOP_ATTEST_COOP")]
        coop: Option<PathBuf>,
    },
    /// Ask a notary to disclose the subject behind an attestation.
    Disclose {
        #[arg(long)]
        notary: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        jurisdiction: String,
        #[arg(long, value_enum)]
        purpose: PurposeArg,
        #[arg(long, default_value_t = 0)]
        now: Tick,
    },
    /// Run a scenario config and write its event log.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario config without running it
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    /// Verification or decision failed; exit 1.
    Rejected(String),
    /// Bad input, unreadable file or invalid config; exit 2.
    Usage(String),
}

type CliResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn decode<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    canonical::canonical_deserialize(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn encode<T: Serialize>(path: &Path, value: &T) -> CliResult {
    write(path, &canonical::canonical_serialize(value).map_err(usage)?)
}

fn parse_id(hex: &str) -> Result<Digest, Failure> {
    Digest::from_hex(hex).map_err(|e| usage(format!("--id: {e}")))
}

fn load_coop(path: &Path) -> Result<Cooperative, Failure> {
    let bytes = read(path)?;
    let state = match canonical::canonical_deserialize::<CooperativeState>(&bytes) {
        Ok(state) => state,
        Err(_) => {
            let config: CooperativeConfig = canonical::canonical_deserialize(&bytes)
                .map_err(|e| usage(format!("{}: neither cooperative state nor config: {e}", path.display())))?;
            CooperativeState {
                config,
                issued: Vec::new(),
                revocations: Vec::new(),
                nonce_counter: 0,
            }
        }
    };
    Cooperative::from_state(state).map_err(usage)
}

fn load_notary(path: &Path) -> Result<Notary, Failure> {
    let bytes = read(path)?;
    let state = match canonical::canonical_deserialize::<NotaryState>(&bytes) {
        Ok(state) => state,
        Err(_) => {
            let config: NotaryConfig = canonical::canonical_deserialize(&bytes)
                .map_err(|e| usage(format!("{}: neither notary state nor config: {e}", path.display())))?;
            NotaryState {
                config,
                archive: Vec::new(),
                rejections: Vec::new(),
                audit: Vec::new(),
                mirror: Vec::new(),
            }
        }
    };
    Notary::from_state(state).map_err(usage)
}

/// Accepts a public key file or a full key pair file.
fn load_public_key(path: &Path) -> Result<Vec<u8>, Failure> {
    let key: PublicKey = decode(path)?;
    if crypto::digest(&key.public_key) != key.key_id {
        return Err(usage(format!("{}: key id does not match public key", path.display())));
    }
    Ok(key.public_key)
}

fn load_doc(path: &Path) -> Result<AttestationDoc, Failure> {
    AttestationDoc::from_bytes(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn keygen(seed: &str, out: &Path) -> CliResult {
    let seed = hex::decode(seed).map_err(|e| usage(format!("--seed: {e}")))?;
    let key = crypto::keygen(&seed).map_err(usage)?;
    encode(out, &key)?;
    let mut public = out.as_os_str().to_owned();
    public.push(".pub");
    encode(Path::new(&public), &key.public())?;
    println!("{}", key.key_id);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn issue(
    coop_path: &Path,
    member: &str,
    attrs: &[String],
    mode: Mode,
    now: Tick,
    ttl: u64,
    out_plain: &Path,
    out_blinded: &Path,
) -> CliResult {
    let mut coop = load_coop(coop_path)?;
    let mode = match mode {
        Mode::Absent => SubjectMode::Absent,
        Mode::Handle => SubjectMode::Handle,
    };
    let (plain, blinded) = coop.issue_blinded(member, attrs, mode, now, ttl).map_err(usage)?;
    write(out_plain, &AttestationDoc::Plain(plain.clone()).to_bytes())?;
    write(out_blinded, &AttestationDoc::Blinded(blinded.clone()).to_bytes())?;
    encode(coop_path, &coop.to_state())?;
    println!("plain {}", plain.attestation_id);
    println!("blinded {}", blinded.attestation_id);
    Ok(())
}

fn countersign(notary_path: &Path, plain: &Path, blinded: &Path, now: Tick, out: &Path) -> CliResult {
    let mut notary = load_notary(notary_path)?;
    let plain: PlainAttestation = match load_doc(plain)? {
        AttestationDoc::Plain(p) => p,
        other => return Err(usage(format!("--plain holds a {} attestation", other.kind()))),
    };
    let blinded: BlindedAttestation = match load_doc(blinded)? {
        AttestationDoc::Blinded(b) => b,
        other => return Err(usage(format!("--blinded holds a {} attestation", other.kind()))),
    };
    let result = notary.witness_trusted(&plain, &blinded, now);
    // rejections are logged in the notary state too
    encode(notary_path, &notary.to_state())?;
    let csa = result.map_err(|e| Failure::Rejected(e.to_string()))?;
    write(out, &AttestationDoc::Countersigned(csa.clone()).to_bytes())?;
    println!("countersigned {}", csa.attestation_id());
    Ok(())
}

fn verify(csa: &Path, issuer_key: &Path, notary_key: &Path, now: Tick) -> CliResult {
    let issuer = load_public_key(issuer_key)?;
    let notary = load_public_key(notary_key)?;
    let bytes = read(csa)?;
    // .att files carry a kind tag; bare envelopes are accepted as well
    let bytes = match AttestationDoc::from_bytes(&bytes) {
        Ok(AttestationDoc::Countersigned(c)) => c.canonical_bytes(),
        Ok(other) => return Err(usage(format!("--csa holds a {} attestation", other.kind()))),
        Err(_) => bytes,
    };
    let report = attestation::verify_countersigned_bytes(&bytes, &issuer, &notary, now);
    for (check, ok) in report.lines() {
        println!("{check}: {}", if ok { "pass" } else { "fail" });
    }
    if report.passed() {
        println!("result: pass");
        Ok(())
    } else {
        println!("result: fail");
        Err(Failure::Rejected("verification failed".into()))
    }
}

fn revoke(coop_path: &Path, id: &str, now: Tick) -> CliResult {
    let mut coop = load_coop(coop_path)?;
    let id = parse_id(id)?;
    coop.revoke(&id, now).map_err(|e| Failure::Rejected(e.to_string()))?;
    encode(coop_path, &coop.to_state())?;
    println!("revoked {id} at {now}");
    Ok(())
}

fn status(id: &str, now: Tick, coop: Option<&Path>) -> CliResult {
    let coop = coop.ok_or_else(|| usage("no cooperative state: pass --coop or set COOP_ATTEST_COOP"))?;
    let coop = load_coop(coop)?;
    let status = coop.revalidation_status(&parse_id(id)?, now);
    println!("{status}");
    match status {
        Status::Valid => Ok(()),
        other => Err(Failure::Rejected(format!("attestation is {other}"))),
    }
}

fn disclose(notary_path: &Path, id: &str, jurisdiction: &str, purpose: PurposeArg, now: Tick) -> CliResult {
    let mut notary = load_notary(notary_path)?;
    let purpose = match purpose {
        PurposeArg::TravelRule => Purpose::TravelRule,
        PurposeArg::DsnDispute => Purpose::DsnDispute,
    };
    let response = notary.respond_disclosure(&parse_id(id)?, jurisdiction, purpose, now);
    encode(notary_path, &notary.to_state())?;
    let bytes = canonical::canonical_serialize(&response).map_err(usage)?;
    println!("{}", String::from_utf8_lossy(&bytes));
    match response.outcome {
        DisclosureOutcome::Disclosed => Ok(()),
        DisclosureOutcome::DeniedJurisdiction => Err(Failure::Rejected("denied: incompatible jurisdiction".into())),
        DisclosureOutcome::UnknownAttestation => Err(Failure::Rejected("unknown attestation".into())),
    }
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, Failure> {
    decode(path)
}

fn simulate(config: &Path, out: &Path) -> CliResult {
    let config = load_scenario(config)?;
    let log = sim::run_scenario(&config).map_err(|e| match e {
        HarnessError::ConfigInvalid(_) => usage(e),
        HarnessError::ScriptActionFailed { .. } => Failure::Rejected(e.to_string()),
    })?;
    write(out, &log.to_bytes())?;
    println!("{} events", log.len());
    Ok(())
}

fn validate(config: &Path) -> CliResult {
    let problems = sim::validate_config(&load_scenario(config)?);
    if problems.is_empty() {
        println!("ok");
        return Ok(());
    }
    for p in &problems {
        println!("{p}");
    }
    Err(Failure::Usage(format!("{} problem(s)", problems.len())))
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Keygen { seed, out } => keygen(&seed, &out),
        Command::Issue {
            coop,
            member,
            attrs,
            mode,
            now,
            ttl,
            out_plain,
            out_blinded,
        } => issue(&coop, &member, &attrs, mode, now, ttl, &out_plain, &out_blinded),
        Command::Countersign {
            notary,
            plain,
            blinded,
            now,
            out,
        } => countersign(&notary, &plain, &blinded, now, &out),
        Command::Verify {
            csa,
            issuer_key,
            notary_key,
            now,
        } => verify(&csa, &issuer_key, &notary_key, now),
        Command::Revoke { coop, id, now } => revoke(&coop, &id, now),
        Command::Status { id, now, coop } => status(&id, now, coop.as_deref()),
        Command::Disclose {
            notary,
            id,
            jurisdiction,
            purpose,
            now,
        } => disclose(&notary, &id, &jurisdiction, purpose, now),
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Validate { config } => validate(&config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("coop-attest: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("coop-attest: {msg}");
            ExitCode::from(2)
        }
    }
}
