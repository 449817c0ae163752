//! Deterministic scenario runner. All actors live in one scheduler; messages
//! travel through a FIFO queue and every hop is written to the event log.
//! Synchronous queries (revalidation, disclosure, ledger reads) are logged
//! as a request hop followed by a response hop.

pub mod audit;
mod config;
mod log;
pub mod scenarios;

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::attestation::{BlindedAttestation, CounterSignedAttestation, PlainAttestation, TrustStore};
use crate::cooperative::{Cooperative, CooperativeConfig, RevocationEntry, Status};
use crate::crypto::{self, Digest, KeyPair, Signature};
use crate::dsn::{self, DsnEnv, FilterOutcome, FilterReason, Post, Provider, ProviderConfig, RecoveryNotice};
use crate::ledger::{LedgerRecord, RecordPointer};
use crate::notary::{
    DisclosureResponse, JurisdictionPolicy, LegalContact, Notary, NotaryConfig, Purpose, RevocationSource,
};
use crate::travel_rule::{Exchange, ExchangeConfig, ExchangePolicy, TransferRequest};
use crate::Tick;

pub use config::{
    validate_config, Action, CooperativeDecl, ExchangeDecl, NotaryDecl, Problem, ProviderDecl, ScenarioConfig,
    ScriptStep, TamperField, TamperTarget, MIN_LEGAL_IDENTITY_LEN,
};
pub use log::{Delivered, Event, EventLog};

/// Sender of injected posts that no provider vouches for.
pub const BOT_ACTOR: &str = "bot";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("invalid scenario config: {}", join(.0))]
    ConfigInvalid(Vec<Problem>),
    #[error("script step {step} ({action}) at tick {tick} failed: {reason}")]
    ScriptActionFailed {
        step: usize,
        tick: Tick,
        action: &'static str,
        reason: String,
    },
}

fn join(problems: &[Problem]) -> String {
    problems.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Run a config from start to finish and return its log.
pub fn run_scenario(config: &ScenarioConfig) -> Result<EventLog, HarnessError> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run()?;
    Ok(sim.into_log())
}

fn actor_seed(seed: &[u8], role: &str, id: &str) -> Vec<u8> {
    [seed, b"/", role.as_bytes(), b"/", id.as_bytes()].concat()
}

/// A countersigned attestation in a member's hands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Held {
    pub holder: String,
    pub cooperative: String,
    pub csa: CounterSignedAttestation,
}

#[derive(Debug, Clone)]
struct SenderState {
    holder: String,
    provider: String,
    generation: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Msg {
    WitnessRequest {
        label: String,
        plain: PlainAttestation,
        blinded: BlindedAttestation,
    },
    Countersigned {
        label: String,
        csa: CounterSignedAttestation,
    },
    WitnessRejected {
        label: String,
        reason: String,
    },
    AttestationDelivery {
        label: String,
        csa: CounterSignedAttestation,
    },
    RegisterCustomer {
        account: String,
        csa: CounterSignedAttestation,
    },
    Transfer {
        request: TransferRequest,
    },
    AttestationRequest {
        transfer_id: String,
    },
    AttestationResponse {
        transfer_id: String,
        csa: CounterSignedAttestation,
    },
    RevocationSync {
        entries: Vec<RevocationEntry>,
    },
    RevokeRequest {
        attestation_id: Digest,
    },
    Onboard {
        handle: String,
        csa: CounterSignedAttestation,
        signing_key_id: Digest,
        #[serde(with = "serde_bytes")]
        recovery_public_key: Vec<u8>,
    },
    PublishRequest {
        handle: String,
        #[serde(with = "serde_bytes")]
        body: Vec<u8>,
        signing_key_id: Digest,
    },
    Post {
        post: Post,
    },
    RecoveryRequest {
        handle: String,
        new_signing_key_id: Digest,
        signature: Signature,
        csa: CounterSignedAttestation,
    },
    RecoveryComplete {
        notice: RecoveryNotice,
    },
    RecoveryNotice {
        notice: RecoveryNotice,
    },
}

impl Msg {
    fn kind(&self) -> &'static str {
        match self {
            Msg::WitnessRequest { .. } => "witness-request",
            Msg::Countersigned { .. } => "countersigned",
            Msg::WitnessRejected { .. } => "witness-rejected",
            Msg::AttestationDelivery { .. } => "attestation-delivery",
            Msg::RegisterCustomer { .. } => "register-customer",
            Msg::Transfer { .. } => "transfer",
            Msg::AttestationRequest { .. } => "attestation-request",
            Msg::AttestationResponse { .. } => "attestation-response",
            Msg::RevocationSync { .. } => "revocation-sync",
            Msg::RevokeRequest { .. } => "revoke-request",
            Msg::Onboard { .. } => "onboard",
            Msg::PublishRequest { .. } => "publish-request",
            Msg::Post { .. } => "post",
            Msg::RecoveryRequest { .. } => "recovery-request",
            Msg::RecoveryComplete { .. } => "recovery-complete",
            Msg::RecoveryNotice { .. } => "recovery-notice",
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
enum Rpc<'a> {
    RevalidateRequest {
        attestation_id: &'a Digest,
    },
    RevalidateResponse {
        attestation_id: &'a Digest,
        status: Status,
    },
    DisclosureRequest {
        attestation_id: &'a Digest,
        jurisdiction: &'a str,
        purpose: Purpose,
    },
    DisclosureResponse {
        response: &'a DisclosureResponse,
    },
    LedgerSearchRequest {
        ledger_id: &'a str,
        post_digest: &'a Digest,
    },
    LedgerSearchResponse {
        records: &'a [LedgerRecord],
    },
    LedgerReadRequest {
        ptr: &'a RecordPointer,
    },
    LedgerReadResponse {
        #[serde(skip_serializing_if = "Option::is_none")]
        record: Option<&'a LedgerRecord>,
    },
}

impl Rpc<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Rpc::RevalidateRequest { .. } => "revalidate-request",
            Rpc::RevalidateResponse { .. } => "revalidate-response",
            Rpc::DisclosureRequest { .. } => "disclosure-request",
            Rpc::DisclosureResponse { .. } => "disclosure-response",
            Rpc::LedgerSearchRequest { .. } => "ledger-search-request",
            Rpc::LedgerSearchResponse { .. } => "ledger-search-response",
            Rpc::LedgerReadRequest { .. } => "ledger-read-request",
            Rpc::LedgerReadResponse { .. } => "ledger-read-response",
        }
    }
}

fn hop(log: &mut EventLog, tick: Tick, from: &str, to: &str, rpc: Rpc<'_>) {
    log.hop(tick, from, to, rpc.kind(), &rpc);
}

/// The notary's forwarded query to the issuing cooperative.
struct Upstream<'a> {
    tick: Tick,
    notary_id: &'a str,
    log: &'a mut EventLog,
    coop: &'a Cooperative,
}

impl RevocationSource for Upstream<'_> {
    fn revalidation_status(&mut self, id: &Digest, now: Tick) -> Status {
        let coop_id = self.coop.id();
        hop(
            self.log,
            self.tick,
            self.notary_id,
            coop_id,
            Rpc::RevalidateRequest { attestation_id: id },
        );
        let status = self.coop.revalidation_status(id, now);
        hop(
            self.log,
            self.tick,
            coop_id,
            self.notary_id,
            Rpc::RevalidateResponse {
                attestation_id: id,
                status,
            },
        );
        status
    }
}

/// Synchronous access from one actor to notaries and provider ledgers.
struct Wire<'a> {
    tick: Tick,
    caller: &'a str,
    log: &'a mut EventLog,
    notaries: &'a mut BTreeMap<String, Notary>,
    coops: &'a BTreeMap<String, Cooperative>,
    providers: &'a BTreeMap<String, Provider>,
}

impl LegalContact for Wire<'_> {
    fn revalidate(&mut self, notary_id: &str, id: &Digest, now: Tick) -> Status {
        let Some(notary) = self.notaries.get_mut(notary_id) else {
            return Status::Unknown;
        };
        hop(
            self.log,
            self.tick,
            self.caller,
            notary_id,
            Rpc::RevalidateRequest { attestation_id: id },
        );
        let issuer = notary.archive_entry(id).map(|e| e.plain.issuer_key_id);
        let coop = issuer.and_then(|k| self.coops.values().find(|c| c.key_id() == k));
        let status = match coop {
            Some(coop) => {
                let mut up = Upstream {
                    tick: self.tick,
                    notary_id,
                    log: &mut *self.log,
                    coop,
                };
                notary.respond_revalidation(id, now, Some(&mut up))
            }
            None => notary.respond_revalidation(id, now, None),
        };
        hop(
            self.log,
            self.tick,
            notary_id,
            self.caller,
            Rpc::RevalidateResponse {
                attestation_id: id,
                status,
            },
        );
        status
    }

    fn disclose(
        &mut self,
        notary_id: &str,
        id: &Digest,
        jurisdiction: &str,
        purpose: Purpose,
        now: Tick,
    ) -> DisclosureResponse {
        let Some(notary) = self.notaries.get_mut(notary_id) else {
            return notary_unreachable(id);
        };
        let req = Rpc::DisclosureRequest {
            attestation_id: id,
            jurisdiction,
            purpose,
        };
        hop(self.log, self.tick, self.caller, notary_id, req);
        let response = notary.respond_disclosure(id, jurisdiction, purpose, now);
        hop(
            self.log,
            self.tick,
            notary_id,
            self.caller,
            Rpc::DisclosureResponse { response: &response },
        );
        response
    }
}

fn notary_unreachable(id: &Digest) -> DisclosureResponse {
    DisclosureResponse {
        attestation_id: *id,
        outcome: crate::notary::DisclosureOutcome::UnknownAttestation,
        subject: None,
        plain: None,
        travel_record: None,
    }
}

impl DsnEnv for Wire<'_> {
    fn search_ledger(&mut self, ledger_id: &str, post_digest: &Digest) -> Vec<LedgerRecord> {
        let Some(p) = self.providers.get(ledger_id) else {
            return Vec::new();
        };
        hop(
            self.log,
            self.tick,
            self.caller,
            ledger_id,
            Rpc::LedgerSearchRequest { ledger_id, post_digest },
        );
        let records: Vec<LedgerRecord> = p
            .ledger()
            .find_by_post_digest(post_digest)
            .iter()
            .filter_map(|ptr| p.ledger().get(ptr).ok().cloned())
            .collect();
        hop(
            self.log,
            self.tick,
            ledger_id,
            self.caller,
            Rpc::LedgerSearchResponse { records: &records },
        );
        records
    }

    fn read_ledger(&mut self, ptr: &RecordPointer) -> Option<LedgerRecord> {
        let p = self.providers.get(&ptr.ledger_id)?;
        hop(
            self.log,
            self.tick,
            self.caller,
            &ptr.ledger_id,
            Rpc::LedgerReadRequest { ptr },
        );
        let record = p.ledger().get(ptr).ok();
        hop(
            self.log,
            self.tick,
            &ptr.ledger_id,
            self.caller,
            Rpc::LedgerReadResponse { record },
        );
        record.cloned()
    }
}

#[derive(Debug)]
struct Queued {
    id: u64,
    from: String,
    to: String,
    msg: Msg,
}

#[derive(Serialize)]
struct ErrorEvent<'a> {
    context: &'a str,
    error: String,
}

#[derive(Serialize)]
struct IssuedEvent<'a> {
    label: &'a str,
    member: &'a str,
    plain_id: Digest,
    blinded_id: Digest,
}

#[derive(Serialize)]
struct LabelledEvent<'a> {
    label: &'a str,
    attestation_id: Digest,
}

#[derive(Serialize)]
struct RevokedEvent {
    attestation_id: Digest,
    revoked_at: Tick,
}

#[derive(Serialize)]
struct RegisteredEvent<'a> {
    account: &'a str,
    attestation_id: Digest,
}

#[derive(Serialize)]
struct OnboardedEvent<'a> {
    handle: &'a str,
    attestation_ptr: &'a RecordPointer,
}

#[derive(Serialize)]
struct PublishedEvent<'a> {
    handle: &'a str,
    post_ptr: &'a RecordPointer,
    post_digest: Digest,
}

/// Payload of a `filter` event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct FilterEvent {
    pub origin: String,
    pub author: String,
    pub post_digest: Digest,
    pub outcome: FilterOutcome,
    pub reason: FilterReason,
}

#[derive(Serialize)]
struct TamperedEvent<'a> {
    target: &'a TamperTarget,
    field: TamperField,
}

/// All actors of one scenario and the scheduler that drives them.
pub struct Simulation {
    config: ScenarioConfig,
    tick: Tick,
    log: EventLog,
    coops: BTreeMap<String, Cooperative>,
    notaries: BTreeMap<String, Notary>,
    exchanges: BTreeMap<String, Exchange>,
    providers: BTreeMap<String, Provider>,
    wallets: BTreeMap<String, Held>,
    senders: BTreeMap<String, SenderState>,
    queue: VecDeque<Queued>,
    next_step: usize,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, HarnessError> {
        let problems = validate_config(&config);
        if !problems.is_empty() {
            return Err(HarnessError::ConfigInvalid(problems));
        }
        let invalid = |path: String, e: &dyn std::fmt::Display| {
            HarnessError::ConfigInvalid(vec![Problem {
                path,
                message: e.to_string(),
            }])
        };
        let seed = &config.seed;

        let mut coops = BTreeMap::new();
        for (i, decl) in config.cooperatives.iter().enumerate() {
            let coop = Cooperative::new(CooperativeConfig {
                id: decl.id.clone(),
                key_seed: actor_seed(seed, "cooperative", &decl.id),
                rng_seed: actor_seed(seed, "rng", &decl.id),
                legal_rep_id: decl.legal_rep_id.clone(),
                rules: decl.rules.clone(),
                members: decl.members.clone(),
            })
            .map_err(|e| invalid(format!("cooperatives[{i}]"), &e))?;
            coops.insert(decl.id.clone(), coop);
        }

        let mut notaries = BTreeMap::new();
        for (i, decl) in config.notaries.iter().enumerate() {
            let trusted = coops
                .values()
                .filter(|c| c.legal_rep_id() == decl.id)
                .map(|c| serde_bytes::ByteBuf::from(c.public_key().to_vec()))
                .collect();
            let notary = Notary::new(NotaryConfig {
                id: decl.id.clone(),
                key_seed: actor_seed(seed, "notary", &decl.id),
                policy: JurisdictionPolicy {
                    notary_jurisdiction: decl.jurisdiction.clone(),
                    compatible: decl.compatible.iter().cloned().collect(),
                },
                trusted_issuers: trusted,
            })
            .map_err(|e| invalid(format!("notaries[{i}]"), &e))?;
            notaries.insert(decl.id.clone(), notary);
        }

        let mut issuers = TrustStore::default();
        for c in coops.values() {
            issuers.trust_issuer(c.public_key());
        }
        let trust_with = |accepted: &dyn Fn(&str) -> bool| {
            let mut t = issuers.clone();
            for n in notaries.values().filter(|n| accepted(n.id())) {
                t.trust_notary(n.public_key());
            }
            t
        };

        let mut exchanges = BTreeMap::new();
        for decl in &config.exchanges {
            let trust = trust_with(&|n: &str| decl.trusted_notaries.as_ref().is_none_or(|l| l.iter().any(|x| x == n)));
            let exchange = Exchange::new(
                ExchangeConfig {
                    id: decl.id.clone(),
                    policy: ExchangePolicy {
                        jurisdiction: decl.jurisdiction.clone(),
                        disclosure_threshold: decl.disclosure_threshold,
                    },
                    kyc: decl.kyc.clone(),
                },
                trust,
            );
            exchanges.insert(decl.id.clone(), exchange);
        }

        let mut providers = BTreeMap::new();
        for (i, decl) in config.providers.iter().enumerate() {
            let provider = Provider::new(
                ProviderConfig {
                    id: decl.id.clone(),
                    key_seed: actor_seed(seed, "provider", &decl.id),
                    jurisdiction: decl.jurisdiction.clone(),
                    prefer_local_port: decl.prefer_local_port,
                    follows: decl.follows.clone(),
                },
                trust_with(&|_| true),
            )
            .map_err(|e| invalid(format!("providers[{i}]"), &e))?;
            providers.insert(decl.id.clone(), provider);
        }

        Ok(Simulation {
            config,
            tick: 0,
            log: EventLog::default(),
            coops,
            notaries,
            exchanges,
            providers,
            wallets: BTreeMap::new(),
            senders: BTreeMap::new(),
            queue: VecDeque::new(),
            next_step: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    pub fn tick(&self) -> Tick {
        self.tick
    }

    pub fn cooperative(&self, id: &str) -> Option<&Cooperative> {
        self.coops.get(id)
    }

    pub fn cooperatives(&self) -> impl Iterator<Item = &Cooperative> {
        self.coops.values()
    }

    pub fn notary(&self, id: &str) -> Option<&Notary> {
        self.notaries.get(id)
    }

    pub fn notaries(&self) -> impl Iterator<Item = &Notary> {
        self.notaries.values()
    }

    pub fn exchange(&self, id: &str) -> Option<&Exchange> {
        self.exchanges.get(id)
    }

    pub fn exchanges(&self) -> impl Iterator<Item = &Exchange> {
        self.exchanges.values()
    }

    pub fn provider(&self, id: &str) -> Option<&Provider> {
        self.providers.get(id)
    }

    pub fn providers(&self) -> impl Iterator<Item = &Provider> {
        self.providers.values()
    }

    pub fn wallet(&self, label: &str) -> Option<&Held> {
        self.wallets.get(label)
    }

    pub fn wallets(&self) -> impl Iterator<Item = (&str, &Held)> {
        self.wallets.iter().map(|(l, h)| (l.as_str(), h))
    }

    /// Every member's legal identity across all cooperatives.
    pub fn legal_identities(&self) -> Vec<String> {
        self.coops
            .values()
            .flat_map(|c| c.members().map(|m| m.legal_identity.clone()))
            .collect()
    }

    /// Trust store holding every declared issuer and notary key.
    pub fn full_trust(&self) -> TrustStore {
        let mut t = TrustStore::default();
        for c in self.coops.values() {
            t.trust_issuer(c.public_key());
        }
        for n in self.notaries.values() {
            t.trust_notary(n.public_key());
        }
        t
    }

    pub fn is_finished(&self) -> bool {
        self.next_step >= self.config.script.len()
    }

    pub fn run(&mut self) -> Result<(), HarnessError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Execute the next script action and deliver everything it causes.
    pub fn step(&mut self) -> Result<(), HarnessError> {
        let index = self.next_step;
        let Some(step) = self.config.script.get(index).cloned() else {
            return Ok(());
        };
        self.next_step += 1;
        self.tick = step.tick;
        let fail = |reason: String| HarnessError::ScriptActionFailed {
            step: index,
            tick: step.tick,
            action: step.action.name(),
            reason,
        };
        self.act(&step.action).map_err(fail)?;
        while let Some(q) = self.queue.pop_front() {
            self.log.deliver(self.tick, q.id, &q.from, &q.to, q.msg.kind());
            self.deliver(q).map_err(fail)?;
        }
        Ok(())
    }

    fn send(&mut self, from: &str, to: &str, msg: Msg) {
        let id = self.log.send(self.tick, from, to, &msg);
        self.queue.push_back(Queued {
            id,
            from: from.to_owned(),
            to: to.to_owned(),
            msg,
        });
    }

    fn domain_error(&mut self, actor: &str, context: &str, error: impl std::fmt::Display) {
        self.log.record(
            self.tick,
            actor,
            "error",
            &ErrorEvent {
                context,
                error: error.to_string(),
            },
        );
    }

    fn held(&self, label: &str) -> Result<&Held, String> {
        self.wallets
            .get(label)
            .ok_or_else(|| format!("no member holds attestation {label:?}"))
    }

    fn signing_key(&self, handle: &str, generation: u64) -> KeyPair {
        crypto::keygen(&actor_seed(
            &self.config.seed,
            "signing",
            &format!("{handle}/{generation}"),
        ))
        .expect("seed is non-empty")
    }

    fn recovery_key(&self, handle: &str) -> KeyPair {
        crypto::keygen(&actor_seed(&self.config.seed, "recovery", handle)).expect("seed is non-empty")
    }

    fn revoke_at_coop(&mut self, coop_id: &str, id: &Digest) -> Result<(), String> {
        let tick = self.tick;
        let coop = self
            .coops
            .get_mut(coop_id)
            .ok_or_else(|| format!("unknown cooperative {coop_id:?}"))?;
        if let Err(e) = coop.revoke(id, tick) {
            self.domain_error(coop_id, "revoke", e);
            return Ok(());
        }
        let revoked_at = coop.revocations().revoked_at(id).unwrap_or(tick);
        let entries = coop.revocations().entries();
        let rep = coop.legal_rep_id().to_owned();
        self.log.record(
            tick,
            coop_id,
            "revoked",
            &RevokedEvent {
                attestation_id: *id,
                revoked_at,
            },
        );
        self.send(coop_id, &rep, Msg::RevocationSync { entries });
        Ok(())
    }

    fn act(&mut self, action: &Action) -> Result<(), String> {
        let tick = self.tick;
        match action {
            Action::Issue {
                cooperative,
                member,
                attributes,
                mode,
                ttl,
                label,
            } => {
                let coop = self.coops.get_mut(cooperative).ok_or("unknown cooperative")?;
                match coop.issue_blinded(member, attributes, *mode, tick, *ttl) {
                    Ok((plain, blinded)) => {
                        let rep = coop.legal_rep_id().to_owned();
                        let ev = IssuedEvent {
                            label,
                            member,
                            plain_id: plain.attestation_id,
                            blinded_id: blinded.attestation_id,
                        };
                        self.log.record(tick, cooperative, "issued", &ev);
                        self.send(
                            cooperative,
                            &rep,
                            Msg::WitnessRequest {
                                label: label.clone(),
                                plain,
                                blinded,
                            },
                        );
                    }
                    Err(e) => self.domain_error(cooperative, "issue", e),
                }
            }
            Action::Register {
                exchange,
                account,
                attestation,
            } => {
                let held = self.held(attestation)?.clone();
                let msg = Msg::RegisterCustomer {
                    account: account.clone(),
                    csa: held.csa,
                };
                self.send(&held.holder, exchange, msg);
            }
            Action::Transfer {
                origin,
                transfer_id,
                originator_account,
                beneficiary_account,
                beneficiary_exchange,
                asset,
                amount,
            } => {
                let request = TransferRequest {
                    transfer_id: transfer_id.clone(),
                    originator_account: originator_account.clone(),
                    beneficiary_account: beneficiary_account.clone(),
                    beneficiary_exchange: beneficiary_exchange.clone(),
                    asset: asset.clone(),
                    amount: *amount,
                    requested_at: tick,
                };
                let exchange = self.exchanges.get_mut(origin).ok_or("unknown exchange")?;
                match exchange.originate_transfer(request) {
                    Ok(request) => self.send(origin, beneficiary_exchange, Msg::Transfer { request }),
                    Err(e) => self.domain_error(origin, "transfer", e),
                }
            }
            Action::Revoke { attestation } => {
                let held = self.held(attestation)?.clone();
                self.revoke_at_coop(&held.cooperative, &held.csa.attestation_id())?;
            }
            Action::Onboard {
                provider,
                handle,
                attestation,
            } => {
                let held = self.held(attestation)?.clone();
                if self.senders.contains_key(handle) {
                    return Err(format!("handle {handle:?} already onboarded in this scenario"));
                }
                let signing_key_id = self.signing_key(handle, 0).key_id;
                let recovery_public_key = self.recovery_key(handle).public_key;
                self.senders.insert(
                    handle.clone(),
                    SenderState {
                        holder: held.holder.clone(),
                        provider: provider.clone(),
                        generation: 0,
                    },
                );
                let msg = Msg::Onboard {
                    handle: handle.clone(),
                    csa: held.csa,
                    signing_key_id,
                    recovery_public_key,
                };
                self.send(&held.holder, provider, msg);
            }
            Action::Post {
                handle,
                body,
                stale_key,
            } => {
                let s = self
                    .senders
                    .get(handle)
                    .ok_or_else(|| format!("handle {handle:?} not onboarded"))?
                    .clone();
                let generation = if *stale_key {
                    s.generation.saturating_sub(1)
                } else {
                    s.generation
                };
                let signing_key_id = self.signing_key(handle, generation).key_id;
                let msg = Msg::PublishRequest {
                    handle: handle.clone(),
                    body: body.as_bytes().to_vec(),
                    signing_key_id,
                };
                self.send(&s.holder, &s.provider, msg);
            }
            Action::InjectBotPost {
                provider,
                origin,
                author,
                body,
                count,
            } => {
                for i in 0..*count {
                    let body = if *count > 1 {
                        format!("{body} #{i}")
                    } else {
                        body.clone()
                    };
                    let post = Post {
                        body: body.into_bytes(),
                        author_handle: author.clone(),
                        origin_provider: origin.clone(),
                        sent_at: tick,
                    };
                    self.send(BOT_ACTOR, provider, Msg::Post { post });
                }
            }
            Action::Recover {
                handle,
                attestation,
                sign_with_signing_key,
            } => {
                let s = self
                    .senders
                    .get(handle)
                    .ok_or_else(|| format!("handle {handle:?} not onboarded"))?
                    .clone();
                let held = self.held(attestation)?.clone();
                let new_key = self.signing_key(handle, s.generation + 1);
                let signer = if *sign_with_signing_key {
                    self.signing_key(handle, s.generation)
                } else {
                    self.recovery_key(handle)
                };
                let signature = dsn::sign_recovery(&signer, handle, &new_key.key_id);
                let msg = Msg::RecoveryRequest {
                    handle: handle.clone(),
                    new_signing_key_id: new_key.key_id,
                    signature,
                    csa: held.csa,
                };
                self.send(&s.holder, &s.provider, msg);
            }
            Action::Dispute {
                provider,
                origin,
                author,
                body,
            } => {
                let post = Post {
                    body: body.as_bytes().to_vec(),
                    author_handle: author.clone(),
                    origin_provider: origin.clone(),
                    sent_at: tick,
                };
                let mut p = self.providers.remove(provider).ok_or("unknown provider")?;
                let mut wire = Wire {
                    tick,
                    caller: provider,
                    log: &mut self.log,
                    notaries: &mut self.notaries,
                    coops: &self.coops,
                    providers: &self.providers,
                };
                let result = p.request_sender_disclosure(&post, tick, &mut wire);
                self.providers.insert(provider.clone(), p);
                match result {
                    Ok(response) => self.log.record(tick, provider, "disclosure", &response),
                    Err(e) => self.domain_error(provider, "dispute", e),
                }
            }
            Action::Tamper { target, field } => {
                let csa = match target {
                    TamperTarget::Wallet { attestation } => {
                        &mut self.wallets.get_mut(attestation).ok_or("no such wallet entry")?.csa
                    }
                    TamperTarget::ExchangeCustomer { exchange, account } => self
                        .exchanges
                        .get_mut(exchange)
                        .and_then(|e| e.customer_attestation_mut(account))
                        .ok_or_else(|| format!("{exchange:?} has no customer {account:?}"))?,
                };
                tamper(csa, *field);
                self.log
                    .record(tick, "harness", "tampered", &TamperedEvent { target, field: *field });
            }
        }
        Ok(())
    }

    fn deliver(&mut self, q: Queued) -> Result<(), String> {
        let tick = self.tick;
        let Queued { from, to, msg, .. } = q;
        match msg {
            Msg::WitnessRequest { label, plain, blinded } => {
                let notary = self.notaries.get_mut(&to).ok_or("unknown notary")?;
                match notary.witness_trusted(&plain, &blinded, tick) {
                    Ok(csa) => {
                        let ev = LabelledEvent {
                            label: &label,
                            attestation_id: csa.attestation_id(),
                        };
                        self.log.record(tick, &to, "witnessed", &ev);
                        self.send(&to, &from, Msg::Countersigned { label, csa });
                    }
                    Err(e) => self.send(
                        &to,
                        &from,
                        Msg::WitnessRejected {
                            label,
                            reason: e.to_string(),
                        },
                    ),
                }
            }
            Msg::Countersigned { label, csa } => {
                let coop = self.coops.get(&to).ok_or("unknown cooperative")?;
                let member = coop
                    .issuance(&csa.attestation_id())
                    .map(|e| e.member_id.clone())
                    .ok_or("countersigned attestation was not issued here")?;
                self.send(&to, &format!("{to}/{member}"), Msg::AttestationDelivery { label, csa });
            }
            Msg::WitnessRejected { label, reason } => {
                self.domain_error(&to, &format!("witness {label}"), reason);
            }
            Msg::AttestationDelivery { label, csa } => {
                self.wallets.insert(
                    label,
                    Held {
                        holder: to,
                        cooperative: from,
                        csa,
                    },
                );
            }
            Msg::RegisterCustomer { account, csa } => {
                let exchange = self.exchanges.get_mut(&to).ok_or("unknown exchange")?;
                let attestation_id = csa.attestation_id();
                match exchange.register_customer(&account, csa, tick) {
                    Ok(()) => {
                        let ev = RegisteredEvent {
                            account: &account,
                            attestation_id,
                        };
                        self.log.record(tick, &to, "customer-registered", &ev);
                    }
                    Err(e) => self.domain_error(&to, "register", e),
                }
            }
            Msg::Transfer { request } => {
                let exchange = self.exchanges.get_mut(&to).ok_or("unknown exchange")?;
                let transfer_id = request.transfer_id.clone();
                match exchange.receive_transfer(&from, request) {
                    Ok(()) => self.send(&to, &from, Msg::AttestationRequest { transfer_id }),
                    Err(e) => self.domain_error(&to, "transfer", e),
                }
            }
            Msg::AttestationRequest { transfer_id } => {
                let exchange = self.exchanges.get_mut(&to).ok_or("unknown exchange")?;
                match exchange.serve_attestation_request(&transfer_id) {
                    Ok(csa) => self.send(&to, &from, Msg::AttestationResponse { transfer_id, csa }),
                    Err(e) => self.domain_error(&to, "attestation-request", e),
                }
            }
            Msg::AttestationResponse { transfer_id, csa } => {
                let exchange = self.exchanges.get_mut(&to).ok_or("unknown exchange")?;
                if let Err(e) = exchange.receive_attestation(&transfer_id, csa) {
                    self.domain_error(&to, "attestation-response", e);
                    return Ok(());
                }
                let mut wire = Wire {
                    tick,
                    caller: &to,
                    log: &mut self.log,
                    notaries: &mut self.notaries,
                    coops: &self.coops,
                    providers: &self.providers,
                };
                match exchange.evaluate_pending(&transfer_id, tick, &mut wire) {
                    Ok(decision) => self.log.record(tick, &to, "transfer-decision", &decision),
                    Err(e) => self.domain_error(&to, "evaluate", e),
                }
            }
            Msg::RevocationSync { entries } => {
                self.notaries
                    .get_mut(&to)
                    .ok_or("unknown notary")?
                    .sync_revocations(&entries);
            }
            Msg::RevokeRequest { attestation_id } => {
                self.revoke_at_coop(&to, &attestation_id)?;
            }
            Msg::Onboard {
                handle,
                csa,
                signing_key_id,
                recovery_public_key,
            } => {
                let provider = self.providers.get_mut(&to).ok_or("unknown provider")?;
                match provider.onboard_sender(&handle, csa, signing_key_id, &recovery_public_key, tick) {
                    Ok(acct) => {
                        let ev = OnboardedEvent {
                            handle: &handle,
                            attestation_ptr: &acct.attestation_ptr,
                        };
                        self.log.record(tick, &to, "onboarded", &ev);
                    }
                    Err(e) => self.domain_error(&to, "onboard", e),
                }
            }
            Msg::PublishRequest {
                handle,
                body,
                signing_key_id,
            } => {
                let provider = self.providers.get_mut(&to).ok_or("unknown provider")?;
                match provider.publish_post_as(&handle, &signing_key_id, &body, tick) {
                    Ok((ptr, post)) => {
                        let ev = PublishedEvent {
                            handle: &handle,
                            post_ptr: &ptr,
                            post_digest: crypto::digest(&body),
                        };
                        self.log.record(tick, &to, "published", &ev);
                        for target in dsn::propagation_targets(self.providers.values(), &to, &handle) {
                            self.send(&to, &target, Msg::Post { post: post.clone() });
                        }
                    }
                    Err(e) => self.domain_error(&to, "publish", e),
                }
            }
            Msg::Post { post } => {
                let mut p = self.providers.remove(&to).ok_or("unknown provider")?;
                let mut wire = Wire {
                    tick,
                    caller: &to,
                    log: &mut self.log,
                    notaries: &mut self.notaries,
                    coops: &self.coops,
                    providers: &self.providers,
                };
                let decision = p.filter_incoming(&post, tick, &mut wire);
                self.providers.insert(to.clone(), p);
                let ev = FilterEvent {
                    origin: post.origin_provider.clone(),
                    author: post.author_handle.clone(),
                    post_digest: crypto::digest(&post.body),
                    outcome: decision.outcome,
                    reason: decision.reason,
                };
                self.log.record(tick, &to, "filter", &ev);
            }
            Msg::RecoveryRequest {
                handle,
                new_signing_key_id,
                signature,
                csa,
            } => {
                let provider = self.providers.get_mut(&to).ok_or("unknown provider")?;
                match provider.recover_account(&handle, new_signing_key_id, &signature, csa, tick) {
                    Ok((_, notice)) => {
                        self.log.record(tick, &to, "recovered", &notice);
                        let others: Vec<String> = self.providers.keys().filter(|p| **p != to).cloned().collect();
                        for other in others {
                            self.send(&to, &other, Msg::RecoveryNotice { notice: notice.clone() });
                        }
                        self.send(&to, &from, Msg::RecoveryComplete { notice });
                    }
                    Err(e) => self.domain_error(&to, "recover", e),
                }
            }
            Msg::RecoveryNotice { notice } => {
                self.providers
                    .get_mut(&to)
                    .ok_or("unknown provider")?
                    .apply_recovery_notice(&notice);
            }
            Msg::RecoveryComplete { notice } => {
                if let Some(s) = self.senders.get_mut(&notice.handle) {
                    s.generation += 1;
                }
                let coop = to.split('/').next().unwrap_or_default().to_owned();
                self.send(
                    &to,
                    &coop,
                    Msg::RevokeRequest {
                        attestation_id: notice.old_attestation_id,
                    },
                );
            }
        }
        Ok(())
    }
}

fn tamper(csa: &mut CounterSignedAttestation, field: TamperField) {
    match field {
        TamperField::AttributeValue => {
            if let Some(a) = csa.blinded.attributes.first_mut() {
                a.value.push('!');
            }
        }
        TamperField::IssuerSignature => flip(&mut csa.blinded.issuer_signature.bytes),
        TamperField::NotarySignature => flip(&mut csa.notary_signature.bytes),
        TamperField::ExpiresAt => csa.blinded.expires_at = csa.blinded.expires_at.saturating_add(1000),
    }
}

fn flip(bytes: &mut [u8]) {
    if let Some(b) = bytes.first_mut() {
        *b ^= 1;
    }
}
