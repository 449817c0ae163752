//! Decentralized social network providers: ledger-backed sender
//! onboarding, post recording, hash-based filtering of incoming posts,
//! attestation porting, disclosure requests and recovery-key rotation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{CounterSignedAttestation, SubjectMode, TrustStore};
use crate::canonical;
use crate::cooperative::Status;
use crate::crypto::{self, digest, CryptoError, Digest, DomainTag, KeyPair, Signature};
use crate::ledger::{Ledger, LedgerError, LedgerRecord, Payload, RecordPointer};
use crate::notary::{DisclosureResponse, LegalContact, Purpose};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DsnError {
    #[error("attestation rejected: {0}")]
    InvalidAttestation(String),
    #[error("attestation is bound to {found:?}, not {expected:?}")]
    HandleMismatch { expected: String, found: String },
    #[error("handle {0:?} is already taken")]
    HandleTaken(String),
    #[error("no sender {0:?} at this provider")]
    UnknownSender(String),
    #[error("account {0:?} is inactive")]
    InactiveAccount(String),
    #[error("post body is empty")]
    EmptyBody,
    #[error("post cannot be traced to an attestation")]
    Untraceable,
    #[error("recovery request is not signed by the account's recovery key")]
    BadRecoverySignature,
    #[error("{0} does not resolve to an attestation record")]
    DanglingAttestationPointer(RecordPointer),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenderAccount {
    pub handle: String,
    pub home_provider: String,
    pub signing_key_id: Digest,
    #[serde(with = "serde_bytes")]
    pub recovery_public_key: Vec<u8>,
    pub attestation_ptr: RecordPointer,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    #[serde(with = "serde_bytes")]
    pub body: Vec<u8>,
    pub author_handle: String,
    pub origin_provider: String,
    pub sent_at: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterOutcome {
    Deliver,
    Drop,
}

/// Ordered by how far a candidate got through the filter pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterReason {
    NoLedgerMatch,
    OriginMismatch,
    AttestationInvalid,
    AttestationExpired,
    AttestationRevoked,
    Attested,
}

impl FilterReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterReason::NoLedgerMatch => "no-ledger-match",
            FilterReason::OriginMismatch => "origin-mismatch",
            FilterReason::AttestationInvalid => "attestation-invalid",
            FilterReason::AttestationExpired => "attestation-expired",
            FilterReason::AttestationRevoked => "attestation-revoked",
            FilterReason::Attested => "attested",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub outcome: FilterOutcome,
    pub reason: FilterReason,
}

impl FilterDecision {
    fn from_reason(reason: FilterReason) -> Self {
        let outcome = if reason == FilterReason::Attested {
            FilterOutcome::Deliver
        } else {
            FilterOutcome::Drop
        };
        FilterDecision { outcome, reason }
    }

    pub fn delivered(&self) -> bool {
        self.outcome == FilterOutcome::Deliver
    }
}

/// Broadcast by the home provider after a successful recovery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryNotice {
    pub handle: String,
    pub home_provider: String,
    pub old_attestation_id: Digest,
    pub new_attestation_ptr: RecordPointer,
    pub recovered_at: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub id: String,
    #[serde(with = "serde_bytes")]
    pub key_seed: Vec<u8>,
    pub jurisdiction: String,
    #[serde(default)]
    pub prefer_local_port: bool,
    /// Handles followed by users hosted here.
    #[serde(default)]
    pub follows: Vec<String>,
}

/// Access a provider needs to the rest of the network: other providers'
/// ledgers and the legal contacts named in attestations.
pub trait DsnEnv: LegalContact {
    /// Post records with this digest on a foreign ledger, in index order.
    fn search_ledger(&mut self, ledger_id: &str, post_digest: &Digest) -> Vec<LedgerRecord>;
    /// One record from a foreign ledger.
    fn read_ledger(&mut self, ptr: &RecordPointer) -> Option<LedgerRecord>;
}

/// The bytes a recovery key signs to authorize `new_key_id` for `handle`.
pub fn recovery_message(handle: &str, new_key_id: &Digest) -> Vec<u8> {
    canonical::canonical_serialize(&("recover", handle, new_key_id)).expect("tuple is canonical")
}

pub fn sign_recovery(recovery_key: &KeyPair, handle: &str, new_key_id: &Digest) -> Signature {
    crypto::sign_tagged(recovery_key, DomainTag::Recover, &recovery_message(handle, new_key_id))
}

#[derive(Debug, Clone)]
pub struct Provider {
    config: ProviderConfig,
    key: KeyPair,
    trust: TrustStore,
    ledger: Ledger,
    accounts: BTreeMap<String, SenderAccount>,
    retired: Vec<SenderAccount>,
    /// origin pointer -> local copy
    ported: BTreeMap<RecordPointer, RecordPointer>,
    /// attestation id -> tick from which it no longer vouches for posts
    superseded: BTreeMap<Digest, Tick>,
    follows: BTreeSet<String>,
}

impl Provider {
    pub fn new(config: ProviderConfig, trust: TrustStore) -> Result<Self, DsnError> {
        let key = crypto::keygen(&config.key_seed)?;
        let ledger = Ledger::new(config.id.clone(), key.public());
        let follows = config.follows.iter().cloned().collect();
        Ok(Provider {
            config,
            key,
            trust,
            ledger,
            accounts: BTreeMap::new(),
            retired: Vec::new(),
            ported: BTreeMap::new(),
            superseded: BTreeMap::new(),
            follows,
        })
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn jurisdiction(&self) -> &str {
        &self.config.jurisdiction
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn trust_mut(&mut self) -> &mut TrustStore {
        &mut self.trust
    }

    pub fn follows(&self, handle: &str) -> bool {
        self.follows.contains(handle)
    }

    pub fn account(&self, handle: &str) -> Option<&SenderAccount> {
        self.accounts.get(handle)
    }

    pub fn retired_accounts(&self) -> &[SenderAccount] {
        &self.retired
    }

    pub fn ported(&self, origin: &RecordPointer) -> Option<&RecordPointer> {
        self.ported.get(origin)
    }

    fn check_attestation(&self, handle: &str, csa: &CounterSignedAttestation, now: Tick) -> Result<(), DsnError> {
        let subject = &csa.blinded.subject;
        if subject.mode != SubjectMode::Handle || subject.value != handle {
            let found = if subject.mode == SubjectMode::Handle {
                subject.value.clone()
            } else {
                String::new()
            };
            return Err(DsnError::HandleMismatch {
                expected: handle.to_owned(),
                found,
            });
        }
        let report = self
            .trust
            .verify(csa, now)
            .map_err(|e| DsnError::InvalidAttestation(e.to_string()))?;
        if !report.passed() {
            let failed: Vec<_> = report
                .lines()
                .into_iter()
                .filter(|(_, ok)| !ok)
                .map(|(n, _)| n)
                .collect();
            return Err(DsnError::InvalidAttestation(failed.join(", ")));
        }
        Ok(())
    }

    /// Record the sender's attestation on this provider's ledger and open
    /// the account.
    pub fn onboard_sender(
        &mut self,
        handle: &str,
        csa: CounterSignedAttestation,
        signing_key_id: Digest,
        recovery_public_key: &[u8],
        now: Tick,
    ) -> Result<SenderAccount, DsnError> {
        if self.accounts.contains_key(handle) {
            return Err(DsnError::HandleTaken(handle.to_owned()));
        }
        self.check_attestation(handle, &csa, now)?;
        let ptr = self.ledger.append(&self.key, Payload::Attestation { csa })?;
        let account = SenderAccount {
            handle: handle.to_owned(),
            home_provider: self.config.id.clone(),
            signing_key_id,
            recovery_public_key: recovery_public_key.to_vec(),
            attestation_ptr: ptr,
            active: true,
        };
        self.accounts.insert(handle.to_owned(), account.clone());
        Ok(account)
    }

    /// Record the post digest with a pointer to the sender's attestation.
    /// The caller forwards the returned post to follower providers.
    pub fn publish_post(&mut self, handle: &str, body: &[u8], now: Tick) -> Result<(RecordPointer, Post), DsnError> {
        let key_id = self
            .accounts
            .get(handle)
            .ok_or_else(|| DsnError::UnknownSender(handle.to_owned()))?
            .signing_key_id;
        self.publish_post_as(handle, &key_id, body, now)
    }

    /// Publish authenticated by a specific signing key; a key retired by
    /// recovery is refused.
    pub fn publish_post_as(
        &mut self,
        handle: &str,
        signing_key_id: &Digest,
        body: &[u8],
        now: Tick,
    ) -> Result<(RecordPointer, Post), DsnError> {
        let account = self
            .accounts
            .get(handle)
            .ok_or_else(|| DsnError::UnknownSender(handle.to_owned()))?;
        if !account.active || account.signing_key_id != *signing_key_id {
            return Err(DsnError::InactiveAccount(handle.to_owned()));
        }
        if body.is_empty() {
            return Err(DsnError::EmptyBody);
        }
        let payload = Payload::Post {
            post_digest: digest(body),
            attestation_ptr: account.attestation_ptr.clone(),
            posted_at: now,
        };
        let ptr = self.ledger.append(&self.key, payload)?;
        let post = Post {
            body: body.to_vec(),
            author_handle: handle.to_owned(),
            origin_provider: self.config.id.clone(),
            sent_at: now,
        };
        Ok((ptr, post))
    }

    pub fn deactivate(&mut self, handle: &str) -> Result<(), DsnError> {
        let account = self
            .accounts
            .get_mut(handle)
            .ok_or_else(|| DsnError::UnknownSender(handle.to_owned()))?;
        account.active = false;
        Ok(())
    }

    fn search(&self, ledger_id: &str, d: &Digest, env: &mut dyn DsnEnv) -> Vec<LedgerRecord> {
        if ledger_id == self.config.id {
            self.ledger
                .find_by_post_digest(d)
                .iter()
                .filter_map(|p| self.ledger.get(p).ok().cloned())
                .collect()
        } else {
            env.search_ledger(ledger_id, d)
        }
    }

    fn resolve(&self, ptr: &RecordPointer, env: &mut dyn DsnEnv) -> Option<LedgerRecord> {
        if self.config.prefer_local_port {
            if let Some(local) = self.ported.get(ptr) {
                return self.ledger.get(local).ok().cloned();
            }
        }
        if ptr.ledger_id == self.config.id {
            self.ledger.get(ptr).ok().cloned()
        } else {
            env.read_ledger(ptr)
        }
    }

    /// Run one ledger match through handle, signature and revalidation
    /// checks.
    fn judge(
        &self,
        post: &Post,
        record: &LedgerRecord,
        now: Tick,
        env: &mut dyn DsnEnv,
    ) -> (FilterReason, Option<(RecordPointer, CounterSignedAttestation)>) {
        let Payload::Post { attestation_ptr, .. } = &record.payload else {
            return (FilterReason::NoLedgerMatch, None);
        };
        let csa = match self.resolve(attestation_ptr, env).map(|r| r.payload) {
            Some(Payload::Attestation { csa }) => csa,
            _ => return (FilterReason::AttestationInvalid, None),
        };
        let subject = &csa.blinded.subject;
        if subject.mode != SubjectMode::Handle || subject.value != post.author_handle {
            return (FilterReason::OriginMismatch, None);
        }
        match self.trust.verify(&csa, now) {
            Ok(r) if r.passed() => {}
            Ok(r) if r.only_expired() => return (FilterReason::AttestationExpired, None),
            _ => return (FilterReason::AttestationInvalid, None),
        }
        let id = csa.attestation_id();
        if self.superseded.get(&id).is_some_and(|&at| post.sent_at >= at) {
            return (FilterReason::AttestationRevoked, None);
        }
        let reason = match env.revalidate(&csa.notary_id, &id, now) {
            Status::Valid => FilterReason::Attested,
            Status::Revoked => FilterReason::AttestationRevoked,
            Status::Expired => FilterReason::AttestationExpired,
            Status::Unknown => FilterReason::AttestationInvalid,
        };
        (reason, Some((attestation_ptr.clone(), csa)))
    }

    /// Decide whether an incoming post is vouched for by its origin
    /// provider's ledger. Delivers if any match passes every check.
    pub fn filter_incoming(&mut self, post: &Post, now: Tick, env: &mut dyn DsnEnv) -> FilterDecision {
        let d = digest(&post.body);
        let mut best = FilterReason::NoLedgerMatch;
        for record in self.search(&post.origin_provider, &d, env) {
            let (reason, passed) = self.judge(post, &record, now, env);
            best = best.max(reason);
            if reason == FilterReason::Attested {
                if let Some((ptr, csa)) = passed {
                    if self.config.prefer_local_port
                        && ptr.ledger_id != self.config.id
                        && !self.ported.contains_key(&ptr)
                    {
                        self.port_verified(ptr, csa);
                    }
                }
                break;
            }
        }
        FilterDecision::from_reason(best)
    }

    fn port_verified(&mut self, origin: RecordPointer, csa: CounterSignedAttestation) -> RecordPointer {
        let local = self
            .ledger
            .append(&self.key, Payload::Attestation { csa })
            .expect("own key is the registered writer");
        self.ported.insert(origin, local.clone());
        local
    }

    /// Copy an attestation record from another ledger onto this one.
    pub fn port_attestation(
        &mut self,
        origin_ledger: &str,
        ptr: &RecordPointer,
        env: &mut dyn DsnEnv,
    ) -> Result<RecordPointer, DsnError> {
        if let Some(local) = self.ported.get(ptr) {
            return Ok(local.clone());
        }
        let record = if ptr.ledger_id != origin_ledger {
            None
        } else if origin_ledger == self.config.id {
            self.ledger.get(ptr).ok().cloned()
        } else {
            env.read_ledger(ptr)
        };
        match record.map(|r| r.payload) {
            Some(Payload::Attestation { csa }) => Ok(self.port_verified(ptr.clone(), csa)),
            _ => Err(DsnError::DanglingAttestationPointer(ptr.clone())),
        }
    }

    /// Trace a post to its attestation and ask the named legal contact to
    /// disclose the sender.
    pub fn request_sender_disclosure(
        &mut self,
        post: &Post,
        now: Tick,
        env: &mut dyn DsnEnv,
    ) -> Result<DisclosureResponse, DsnError> {
        let d = digest(&post.body);
        for record in self.search(&post.origin_provider, &d, env) {
            let Payload::Post { attestation_ptr, .. } = &record.payload else {
                continue;
            };
            let Some(Payload::Attestation { csa }) = self.resolve(attestation_ptr, env).map(|r| r.payload) else {
                continue;
            };
            let subject = &csa.blinded.subject;
            if subject.mode == SubjectMode::Handle && subject.value == post.author_handle {
                let jurisdiction = self.config.jurisdiction.clone();
                return Ok(env.disclose(
                    &csa.notary_id,
                    &csa.attestation_id(),
                    &jurisdiction,
                    Purpose::DsnDispute,
                    now,
                ));
            }
        }
        Err(DsnError::Untraceable)
    }

    /// Rotate a sender's signing key under the recovery key and record the
    /// fresh attestation. Returns the new account and the notice to
    /// broadcast to every provider.
    pub fn recover_account(
        &mut self,
        handle: &str,
        new_signing_key_id: Digest,
        recovery_signature: &Signature,
        new_csa: CounterSignedAttestation,
        now: Tick,
    ) -> Result<(SenderAccount, RecoveryNotice), DsnError> {
        let old = self
            .accounts
            .get(handle)
            .ok_or_else(|| DsnError::UnknownSender(handle.to_owned()))?
            .clone();
        let msg = recovery_message(handle, &new_signing_key_id);
        if !crypto::verify_tagged(&old.recovery_public_key, DomainTag::Recover, &msg, recovery_signature) {
            return Err(DsnError::BadRecoverySignature);
        }
        self.check_attestation(handle, &new_csa, now)?;
        let old_id = match self.ledger.get(&old.attestation_ptr)?.payload.as_attestation() {
            Some(csa) => csa.attestation_id(),
            None => return Err(DsnError::DanglingAttestationPointer(old.attestation_ptr.clone())),
        };
        let ptr = self.ledger.append(&self.key, Payload::Attestation { csa: new_csa })?;
        let account = SenderAccount {
            signing_key_id: new_signing_key_id,
            attestation_ptr: ptr.clone(),
            active: true,
            ..old.clone()
        };
        self.retired.push(SenderAccount { active: false, ..old });
        self.accounts.insert(handle.to_owned(), account.clone());
        let notice = RecoveryNotice {
            handle: handle.to_owned(),
            home_provider: self.config.id.clone(),
            old_attestation_id: old_id,
            new_attestation_ptr: ptr,
            recovered_at: now,
        };
        self.apply_recovery_notice(&notice);
        Ok((account, notice))
    }

    /// Stop accepting the old attestation for posts sent from the recovery
    /// tick on.
    pub fn apply_recovery_notice(&mut self, notice: &RecoveryNotice) {
        self.superseded
            .entry(notice.old_attestation_id)
            .or_insert(notice.recovered_at);
    }
}

/// Providers hosting followers of `handle`, excluding the origin.
pub fn propagation_targets<'a>(
    providers: impl IntoIterator<Item = &'a Provider>,
    origin: &str,
    handle: &str,
) -> Vec<String> {
    providers
        .into_iter()
        .filter(|p| p.id() != origin && p.follows(handle))
        .map(|p| p.id().to_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooperative::{fields, Cooperative, CooperativeConfig, DerivationRules, MemberRecord, GOOD_STANDING};
    use crate::crypto::keygen;
    use crate::notary::{DisclosureOutcome, ForwardingContact, JurisdictionPolicy, Notary, NotaryConfig};

    struct Net<'a> {
        ledgers: BTreeMap<String, Ledger>,
        contact: ForwardingContact<'a>,
        reads: usize,
        searches: usize,
    }

    impl LegalContact for Net<'_> {
        fn revalidate(&mut self, notary_id: &str, id: &Digest, now: Tick) -> Status {
            self.contact.revalidate(notary_id, id, now)
        }
        fn disclose(&mut self, n: &str, id: &Digest, j: &str, p: Purpose, now: Tick) -> DisclosureResponse {
            self.contact.disclose(n, id, j, p, now)
        }
    }

    impl DsnEnv for Net<'_> {
        fn search_ledger(&mut self, ledger_id: &str, d: &Digest) -> Vec<LedgerRecord> {
            self.searches += 1;
            let l = &self.ledgers[ledger_id];
            l.find_by_post_digest(d)
                .iter()
                .map(|p| l.get(p).unwrap().clone())
                .collect()
        }
        fn read_ledger(&mut self, ptr: &RecordPointer) -> Option<LedgerRecord> {
            self.reads += 1;
            self.ledgers.get(&ptr.ledger_id)?.get(ptr).ok().cloned()
        }
    }

    struct World {
        coop: Cooperative,
        notary: Notary,
        trust: TrustStore,
    }

    fn world() -> World {
        let mut coop = Cooperative::new(CooperativeConfig {
            id: "coop-1".into(),
            key_seed: b"coop-1".to_vec(),
            rng_seed: b"rng".to_vec(),
            legal_rep_id: "notary-1".into(),
            rules: DerivationRules::default(),
            members: vec![],
        })
        .unwrap();
        for (id, legal, handle) in [("s", "sender-legal-01", "@sender"), ("o", "other-legal-002", "@other")] {
            coop.register_member(MemberRecord {
                member_id: id.into(),
                legal_identity: legal.into(),
                personal_data: [(fields::STANDING.to_string(), "good".to_string())].into(),
                handle: Some(handle.into()),
            })
            .unwrap();
        }
        let mut notary = Notary::new(NotaryConfig {
            id: "notary-1".into(),
            key_seed: b"notary-1".to_vec(),
            policy: JurisdictionPolicy {
                notary_jurisdiction: "US".into(),
                compatible: ["US".to_string()].into(),
            },
            trusted_issuers: vec![],
        })
        .unwrap();
        notary.trust_issuer(coop.public_key());
        let mut trust = TrustStore::default();
        trust.trust_issuer(coop.public_key());
        trust.trust_notary(notary.public_key());
        World { coop, notary, trust }
    }

    fn attest(w: &mut World, member: &str, mode: SubjectMode, now: Tick) -> CounterSignedAttestation {
        let (p, b) = w
            .coop
            .issue_blinded(member, &[GOOD_STANDING.to_string()], mode, now, 1000)
            .unwrap();
        w.notary.witness_trusted(&p, &b, now).unwrap()
    }

    fn provider(w: &World, id: &str, jurisdiction: &str, prefer_local: bool) -> Provider {
        Provider::new(
            ProviderConfig {
                id: id.into(),
                key_seed: id.as_bytes().to_vec(),
                jurisdiction: jurisdiction.into(),
                prefer_local_port: prefer_local,
                follows: vec!["@sender".into()],
            },
            w.trust.clone(),
        )
        .unwrap()
    }

    fn onboard(w: &mut World, p1: &mut Provider) -> KeyPair {
        let csa = attest(w, "s", SubjectMode::Handle, 0);
        let recovery = keygen(b"recovery").unwrap();
        p1.onboard_sender(
            "@sender",
            csa,
            keygen(b"signing").unwrap().key_id,
            &recovery.public_key,
            1,
        )
        .unwrap();
        recovery
    }

    fn net<'a>(p1: &Provider, notary: &'a mut Notary, coop: &'a Cooperative) -> Net<'a> {
        Net {
            ledgers: [(p1.id().to_string(), p1.ledger().clone())].into(),
            contact: ForwardingContact {
                notary,
                cooperative: coop,
            },
            reads: 0,
            searches: 0,
        }
    }

    #[test]
    fn onboarding_checks_handle_binding() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let other = attest(&mut w, "o", SubjectMode::Handle, 0);
        let absent = attest(&mut w, "s", SubjectMode::Absent, 0);
        assert!(matches!(
            p1.onboard_sender("@sender", other, Digest::ZERO, b"k", 1),
            Err(DsnError::HandleMismatch { found, .. }) if found == "@other"
        ));
        assert!(matches!(
            p1.onboard_sender("@sender", absent, Digest::ZERO, b"k", 1),
            Err(DsnError::HandleMismatch { .. })
        ));
        onboard(&mut w, &mut p1);
        let acct = p1.account("@sender").unwrap();
        assert!(p1
            .ledger()
            .get(&acct.attestation_ptr)
            .unwrap()
            .payload
            .as_attestation()
            .is_some());
        let again = attest(&mut w, "s", SubjectMode::Handle, 0);
        assert_eq!(
            p1.onboard_sender("@sender", again, Digest::ZERO, b"k", 1),
            Err(DsnError::HandleTaken("@sender".into()))
        );
    }

    #[test]
    fn publish_records_digest_and_filters() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let mut p3 = provider(&w, "P3", "US", false);
        onboard(&mut w, &mut p1);
        let (ptr, post) = p1.publish_post("@sender", b"hello", 2).unwrap();
        match &p1.ledger().get(&ptr).unwrap().payload {
            Payload::Post { post_digest, .. } => assert_eq!(
                post_digest.to_hex(),
                "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
            ),
            other => panic!("unexpected {other:?}"),
        }
        let mut env = net(&p1, &mut w.notary, &w.coop);
        let d = p3.filter_incoming(&post, 3, &mut env);
        assert_eq!(
            d,
            FilterDecision {
                outcome: FilterOutcome::Deliver,
                reason: FilterReason::Attested
            }
        );

        let bot = Post {
            body: b"buy now".to_vec(),
            author_handle: "@bot".into(),
            origin_provider: "P1".into(),
            sent_at: 3,
        };
        assert_eq!(
            p3.filter_incoming(&bot, 3, &mut env).reason,
            FilterReason::NoLedgerMatch
        );

        let imposter = Post {
            author_handle: "@imposter".into(),
            ..post.clone()
        };
        assert_eq!(
            p3.filter_incoming(&imposter, 3, &mut env).reason,
            FilterReason::OriginMismatch
        );
        assert!(p3.filter_incoming(&post, 4, &mut env).delivered());
    }

    #[test]
    fn inactive_and_unknown_senders() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        onboard(&mut w, &mut p1);
        assert_eq!(
            p1.publish_post("@nobody", b"x", 2),
            Err(DsnError::UnknownSender("@nobody".into()))
        );
        assert_eq!(p1.publish_post("@sender", b"", 2), Err(DsnError::EmptyBody));
        p1.deactivate("@sender").unwrap();
        assert_eq!(
            p1.publish_post("@sender", b"x", 2),
            Err(DsnError::InactiveAccount("@sender".into()))
        );
    }

    #[test]
    fn revoked_attestation_drops_posts() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let mut p2 = provider(&w, "P2", "US", false);
        onboard(&mut w, &mut p1);
        let (_, post) = p1.publish_post("@sender", b"hello", 2).unwrap();
        let id = p1
            .ledger()
            .get_index(0)
            .unwrap()
            .payload
            .as_attestation()
            .unwrap()
            .attestation_id();
        w.coop.revoke(&id, 3).unwrap();
        let mut env = net(&p1, &mut w.notary, &w.coop);
        assert_eq!(
            p2.filter_incoming(&post, 4, &mut env).reason,
            FilterReason::AttestationRevoked
        );
    }

    #[test]
    fn porting_removes_origin_reads() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let mut p2 = provider(&w, "P2", "US", true);
        onboard(&mut w, &mut p1);
        let (_, a) = p1.publish_post("@sender", b"one", 2).unwrap();
        let (_, b) = p1.publish_post("@sender", b"two", 2).unwrap();
        let mut env = net(&p1, &mut w.notary, &w.coop);
        assert!(p2.filter_incoming(&a, 3, &mut env).delivered());
        assert_eq!(env.reads, 1);
        assert!(p2.filter_incoming(&b, 3, &mut env).delivered());
        assert_eq!(env.reads, 1);
        assert_eq!(env.searches, 2);

        let origin_ptr = p1.account("@sender").unwrap().attestation_ptr.clone();
        let local = p2.ported(&origin_ptr).unwrap();
        assert_eq!(
            p2.ledger().get(local).unwrap().payload,
            p1.ledger().get(&origin_ptr).unwrap().payload
        );
    }

    #[test]
    fn explicit_port_fidelity_and_dangling() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let mut p2 = provider(&w, "P2", "US", false);
        onboard(&mut w, &mut p1);
        let (post_ptr, _) = p1.publish_post("@sender", b"one", 2).unwrap();
        let origin_ptr = p1.account("@sender").unwrap().attestation_ptr.clone();
        let mut env = net(&p1, &mut w.notary, &w.coop);
        let local = p2.port_attestation("P1", &origin_ptr, &mut env).unwrap();
        let a = p2
            .ledger()
            .get(&local)
            .unwrap()
            .payload
            .as_attestation()
            .unwrap()
            .canonical_bytes();
        let b = p1
            .ledger()
            .get(&origin_ptr)
            .unwrap()
            .payload
            .as_attestation()
            .unwrap()
            .canonical_bytes();
        assert_eq!(a, b);
        assert_eq!(
            p2.port_attestation("P1", &post_ptr, &mut env),
            Err(DsnError::DanglingAttestationPointer(post_ptr))
        );
    }

    #[test]
    fn disclosure_requests() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let mut p2 = provider(&w, "P2", "US", false);
        let mut p3 = provider(&w, "P3", "XX", false);
        onboard(&mut w, &mut p1);
        let (_, post) = p1.publish_post("@sender", b"hello", 2).unwrap();
        let mut env = net(&p1, &mut w.notary, &w.coop);
        let ok = p2.request_sender_disclosure(&post, 3, &mut env).unwrap();
        assert_eq!(ok.outcome, DisclosureOutcome::Disclosed);
        assert_eq!(ok.subject.as_deref(), Some("sender-legal-01"));
        let denied = p3.request_sender_disclosure(&post, 3, &mut env).unwrap();
        assert_eq!(denied.outcome, DisclosureOutcome::DeniedJurisdiction);
        let bot = Post {
            body: b"spam".to_vec(),
            ..post
        };
        assert_eq!(
            p2.request_sender_disclosure(&bot, 3, &mut env),
            Err(DsnError::Untraceable)
        );
    }

    #[test]
    fn recovery_rotates_key_and_supersedes_old_attestation() {
        let mut w = world();
        let mut p1 = provider(&w, "P1", "US", false);
        let mut p2 = provider(&w, "P2", "US", false);
        let recovery = onboard(&mut w, &mut p1);
        let (_, old_post) = p1.publish_post("@sender", b"hello", 2).unwrap();
        let old_key = keygen(b"signing").unwrap();
        let new_key = keygen(b"signing-2").unwrap();
        let fresh = attest(&mut w, "s", SubjectMode::Handle, 5);

        let forged = sign_recovery(&old_key, "@sender", &new_key.key_id);
        assert_eq!(
            p1.recover_account("@sender", new_key.key_id, &forged, fresh.clone(), 5),
            Err(DsnError::BadRecoverySignature)
        );
        let sig = sign_recovery(&recovery, "@sender", &new_key.key_id);
        let (acct, notice) = p1.recover_account("@sender", new_key.key_id, &sig, fresh, 5).unwrap();
        assert_eq!(acct.signing_key_id, new_key.key_id);
        assert_eq!(p1.retired_accounts().len(), 1);
        assert_eq!(
            p1.publish_post_as("@sender", &old_key.key_id, b"x", 6),
            Err(DsnError::InactiveAccount("@sender".into()))
        );
        p2.apply_recovery_notice(&notice);
        let (_, new_post) = p1.publish_post("@sender", b"fresh", 6).unwrap();

        let mut env = net(&p1, &mut w.notary, &w.coop);
        assert!(p2.filter_incoming(&new_post, 6, &mut env).delivered());
        let replay = Post {
            sent_at: 7,
            ..old_post.clone()
        };
        assert_eq!(
            p2.filter_incoming(&replay, 7, &mut env).reason,
            FilterReason::AttestationRevoked
        );
        // posts sent before recovery still check out
        assert!(p2.filter_incoming(&old_post, 7, &mut env).delivered());
    }

    #[test]
    fn targets_exclude_origin_and_non_followers() {
        let w = world();
        let p1 = provider(&w, "P1", "US", false);
        let p2 = provider(&w, "P2", "US", false);
        let mut p4 = provider(&w, "P4", "US", false);
        p4.follows.clear();
        assert_eq!(
            propagation_targets([&p1, &p2, &p4], "P1", "@sender"),
            vec!["P2".to_string()]
        );
    }
}
