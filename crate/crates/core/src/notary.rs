//! The cooperative's legal representative: witnesses plain/blinded pairs,
//! countersigns the blinded one, archives all three artifacts, and answers
//! revalidation and identity-disclosure requests.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_bytes::ByteBuf;
use thiserror::Error;

use crate::attestation::{
    self, AttestationDoc, AttestationError, BlindedAttestation, CounterSignedAttestation, MatchReport, PlainAttestation,
};
use crate::canonical::{self, CanonicalError};
use crate::cooperative::{known_status, Cooperative, RevocationEntry, RevocationRegistry, Status};
use crate::crypto::{self, digest, CryptoError, Digest, KeyPair};
use crate::travel_rule::TravelRuleRecord;
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotaryError {
    #[error("plain and blinded attestations do not match: {}", .0.failures().join(", "))]
    PairMismatch(MatchReport),
    #[error("attestation expires at {expires_at}, cannot witness at {now}")]
    ExpiredAtWitnessing { expires_at: Tick, now: Tick },
    #[error("issuer key {0} is not trusted by this notary")]
    UntrustedIssuer(Digest),
    #[error(transparent)]
    Attestation(#[from] AttestationError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JurisdictionPolicy {
    pub notary_jurisdiction: String,
    pub compatible: BTreeSet<String>,
}

impl JurisdictionPolicy {
    pub fn allows(&self, jurisdiction: &str) -> bool {
        self.compatible.contains(jurisdiction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    TravelRule,
    DsnDispute,
}

impl std::str::FromStr for Purpose {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "travel-rule" => Ok(Purpose::TravelRule),
            "dsn-dispute" => Ok(Purpose::DsnDispute),
            other => Err(format!("unknown purpose {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisclosureOutcome {
    Disclosed,
    DeniedJurisdiction,
    UnknownAttestation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosureResponse {
    pub attestation_id: Digest,
    pub outcome: DisclosureOutcome,
    /// Legal identity of the member; present iff disclosed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    /// The archived plain attestation; present iff disclosed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plain: Option<PlainAttestation>,
    /// Filled in by the requesting exchange once it has assembled one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_record: Option<TravelRuleRecord>,
}

impl DisclosureResponse {
    fn without_subject(attestation_id: Digest, outcome: DisclosureOutcome) -> Self {
        DisclosureResponse {
            attestation_id,
            outcome,
            subject: None,
            plain: None,
            travel_record: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub plain: PlainAttestation,
    pub blinded: BlindedAttestation,
    pub countersigned: CounterSignedAttestation,
    pub received_at: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionEntry {
    pub at: Tick,
    pub plain_id: Digest,
    pub blinded_id: Digest,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub at: Tick,
    pub attestation_id: Digest,
    pub requester_jurisdiction: String,
    pub purpose: Purpose,
    pub outcome: DisclosureOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotaryConfig {
    pub id: String,
    #[serde(with = "serde_bytes")]
    pub key_seed: Vec<u8>,
    pub policy: JurisdictionPolicy,
    #[serde(default)]
    pub trusted_issuers: Vec<ByteBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotaryState {
    pub config: NotaryConfig,
    #[serde(default)]
    pub archive: Vec<ArchiveEntry>,
    #[serde(default)]
    pub rejections: Vec<RejectionEntry>,
    #[serde(default)]
    pub audit: Vec<AuditRecord>,
    #[serde(default)]
    pub mirror: Vec<RevocationEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct IndexEntry<'a> {
    attestation_id: Digest,
    plain: &'a str,
    blinded: &'a str,
    countersigned: &'a str,
    received_at: Tick,
}

/// Anything that can answer revalidation with authority, normally the
/// issuing cooperative.
pub trait RevocationSource {
    fn revalidation_status(&mut self, attestation_id: &Digest, now: Tick) -> Status;
}

impl RevocationSource for Cooperative {
    fn revalidation_status(&mut self, attestation_id: &Digest, now: Tick) -> Status {
        Cooperative::revalidation_status(self, attestation_id, now)
    }
}

impl RevocationSource for &Cooperative {
    fn revalidation_status(&mut self, attestation_id: &Digest, now: Tick) -> Status {
        Cooperative::revalidation_status(self, attestation_id, now)
    }
}

/// How relying parties reach the legal contact named in an attestation.
pub trait LegalContact {
    fn revalidate(&mut self, notary_id: &str, attestation_id: &Digest, now: Tick) -> Status;

    fn disclose(
        &mut self,
        notary_id: &str,
        attestation_id: &Digest,
        requester_jurisdiction: &str,
        purpose: Purpose,
        now: Tick,
    ) -> DisclosureResponse;
}

#[derive(Debug, Clone)]
pub struct Notary {
    config: NotaryConfig,
    key: KeyPair,
    trusted_issuers: BTreeMap<Digest, Vec<u8>>,
    archive: BTreeMap<Digest, ArchiveEntry>,
    archive_order: Vec<Digest>,
    plain_to_blinded: BTreeMap<Digest, Digest>,
    rejections: Vec<RejectionEntry>,
    audit: Vec<AuditRecord>,
    mirror: RevocationRegistry,
}

impl Notary {
    pub fn new(config: NotaryConfig) -> Result<Self, NotaryError> {
        Self::from_state(NotaryState {
            config,
            archive: Vec::new(),
            rejections: Vec::new(),
            audit: Vec::new(),
            mirror: Vec::new(),
        })
    }

    pub fn from_state(state: NotaryState) -> Result<Self, NotaryError> {
        let key = crypto::keygen(&state.config.key_seed)?;
        let trusted_issuers = state
            .config
            .trusted_issuers
            .iter()
            .map(|k| (digest(k), k.to_vec()))
            .collect();
        let mut notary = Notary {
            config: state.config,
            key,
            trusted_issuers,
            archive: BTreeMap::new(),
            archive_order: Vec::new(),
            plain_to_blinded: BTreeMap::new(),
            rejections: state.rejections,
            audit: state.audit,
            mirror: RevocationRegistry::default(),
        };
        for entry in state.archive {
            notary.insert_archive(entry);
        }
        notary.mirror.merge(&state.mirror);
        Ok(notary)
    }

    pub fn to_state(&self) -> NotaryState {
        NotaryState {
            config: self.config.clone(),
            archive: self.archive_entries().cloned().collect(),
            rejections: self.rejections.clone(),
            audit: self.audit.clone(),
            mirror: self.mirror.entries(),
        }
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn public_key(&self) -> &[u8] {
        &self.key.public_key
    }

    pub fn key_id(&self) -> Digest {
        self.key.key_id
    }

    pub fn policy(&self) -> &JurisdictionPolicy {
        &self.config.policy
    }

    pub fn trust_issuer(&mut self, public_key: &[u8]) {
        if self
            .trusted_issuers
            .insert(digest(public_key), public_key.to_vec())
            .is_none()
        {
            self.config.trusted_issuers.push(ByteBuf::from(public_key.to_vec()));
        }
    }

    fn insert_archive(&mut self, entry: ArchiveEntry) {
        let id = entry.blinded.attestation_id;
        self.plain_to_blinded.insert(entry.plain.attestation_id, id);
        if self.archive.insert(id, entry).is_none() {
            self.archive_order.push(id);
        }
    }

    fn reject(
        &mut self,
        plain: &PlainAttestation,
        blinded: &BlindedAttestation,
        now: Tick,
        err: NotaryError,
    ) -> NotaryError {
        self.rejections.push(RejectionEntry {
            at: now,
            plain_id: plain.attestation_id,
            blinded_id: blinded.attestation_id,
            reason: err.to_string(),
        });
        err
    }

    /// Check the pair, countersign the blinded attestation and archive all
    /// three artifacts. Rejections are logged apart from the archive.
    pub fn witness_and_countersign(
        &mut self,
        plain: &PlainAttestation,
        blinded: &BlindedAttestation,
        issuer_public_key: &[u8],
        now: Tick,
    ) -> Result<CounterSignedAttestation, NotaryError> {
        let report = attestation::verify_pair(plain, blinded, issuer_public_key);
        if !report.passed() {
            return Err(self.reject(plain, blinded, now, NotaryError::PairMismatch(report)));
        }
        if now >= blinded.expires_at {
            let err = NotaryError::ExpiredAtWitnessing {
                expires_at: blinded.expires_at,
                now,
            };
            return Err(self.reject(plain, blinded, now, err));
        }
        let csa = attestation::countersign(blinded, issuer_public_key, &self.key, &self.config.id, now)?;
        self.insert_archive(ArchiveEntry {
            plain: plain.clone(),
            blinded: blinded.clone(),
            countersigned: csa.clone(),
            received_at: now,
        });
        Ok(csa)
    }

    /// Witness using the issuer key from this notary's trusted list.
    pub fn witness_trusted(
        &mut self,
        plain: &PlainAttestation,
        blinded: &BlindedAttestation,
        now: Tick,
    ) -> Result<CounterSignedAttestation, NotaryError> {
        let Some(key) = self.trusted_issuers.get(&plain.issuer_key_id).cloned() else {
            let err = NotaryError::UntrustedIssuer(plain.issuer_key_id);
            return Err(self.reject(plain, blinded, now, err));
        };
        self.witness_and_countersign(plain, blinded, &key, now)
    }

    pub fn sync_revocations(&mut self, entries: &[RevocationEntry]) {
        self.mirror.merge(entries);
    }

    pub fn mirror(&self) -> &RevocationRegistry {
        &self.mirror
    }

    fn lookup(&self, attestation_id: &Digest) -> Option<&ArchiveEntry> {
        self.archive.get(attestation_id).or_else(|| {
            self.plain_to_blinded
                .get(attestation_id)
                .and_then(|b| self.archive.get(b))
        })
    }

    /// Status from the mirrored registry, refreshed from `upstream` when
    /// given. Ids never witnessed are unknown.
    pub fn respond_revalidation(
        &mut self,
        attestation_id: &Digest,
        now: Tick,
        upstream: Option<&mut dyn RevocationSource>,
    ) -> Status {
        let Some(entry) = self.lookup(attestation_id) else {
            return Status::Unknown;
        };
        let blinded_id = entry.blinded.attestation_id;
        let expires_at = entry.blinded.expires_at;
        let local = known_status(self.mirror.revoked_at(&blinded_id), expires_at, now);
        if local == Status::Revoked {
            return local;
        }
        match upstream {
            Some(source) => {
                let status = source.revalidation_status(&blinded_id, now);
                if status == Status::Revoked {
                    self.mirror.revoke(blinded_id, now);
                }
                status
            }
            None => local,
        }
    }

    pub fn respond_disclosure(
        &mut self,
        attestation_id: &Digest,
        requester_jurisdiction: &str,
        purpose: Purpose,
        now: Tick,
    ) -> DisclosureResponse {
        let response = match self.lookup(attestation_id) {
            None => DisclosureResponse::without_subject(*attestation_id, DisclosureOutcome::UnknownAttestation),
            Some(_) if !self.config.policy.allows(requester_jurisdiction) => {
                DisclosureResponse::without_subject(*attestation_id, DisclosureOutcome::DeniedJurisdiction)
            }
            Some(entry) => DisclosureResponse {
                attestation_id: *attestation_id,
                outcome: DisclosureOutcome::Disclosed,
                subject: Some(entry.plain.subject.value.clone()),
                plain: Some(entry.plain.clone()),
                travel_record: None,
            },
        };
        self.audit.push(AuditRecord {
            at: now,
            attestation_id: *attestation_id,
            requester_jurisdiction: requester_jurisdiction.to_owned(),
            purpose,
            outcome: response.outcome,
        });
        response
    }

    pub fn archive_len(&self) -> usize {
        self.archive.len()
    }

    pub fn archive_entry(&self, attestation_id: &Digest) -> Option<&ArchiveEntry> {
        self.lookup(attestation_id)
    }

    /// Entries in the order they were witnessed.
    pub fn archive_entries(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.archive_order.iter().map(|id| &self.archive[id])
    }

    pub fn rejections(&self) -> &[RejectionEntry] {
        &self.rejections
    }

    pub fn audit_log(&self) -> &[AuditRecord] {
        &self.audit
    }

    pub fn export_audit_log(&self) -> Result<Vec<u8>, CanonicalError> {
        canonical::to_lines(&self.audit)
    }

    /// Write each archived triple as `.att` files plus `archive.index`.
    pub fn export_archive(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut names = Vec::new();
        for entry in self.archive_entries() {
            let id = entry.blinded.attestation_id;
            let files = [
                (format!("{id}.plain.att"), AttestationDoc::Plain(entry.plain.clone())),
                (
                    format!("{id}.blinded.att"),
                    AttestationDoc::Blinded(entry.blinded.clone()),
                ),
                (
                    format!("{id}.countersigned.att"),
                    AttestationDoc::Countersigned(entry.countersigned.clone()),
                ),
            ];
            for (name, doc) in &files {
                fs::write(dir.join(name), doc.to_bytes())?;
            }
            let [p, b, c] = files.map(|(n, _)| n);
            names.push((id, p, b, c, entry.received_at));
        }
        let index: Vec<IndexEntry> = names
            .iter()
            .map(|(id, p, b, c, at)| IndexEntry {
                attestation_id: *id,
                plain: p,
                blinded: b,
                countersigned: c,
                received_at: *at,
            })
            .collect();
        let bytes =
            canonical::canonical_serialize(&index).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        fs::write(dir.join("archive.index"), bytes)
    }
}

impl LegalContact for Notary {
    fn revalidate(&mut self, notary_id: &str, attestation_id: &Digest, now: Tick) -> Status {
        if notary_id != self.id() {
            return Status::Unknown;
        }
        self.respond_revalidation(attestation_id, now, None)
    }

    fn disclose(
        &mut self,
        notary_id: &str,
        attestation_id: &Digest,
        requester_jurisdiction: &str,
        purpose: Purpose,
        now: Tick,
    ) -> DisclosureResponse {
        if notary_id != self.id() {
            return DisclosureResponse::without_subject(*attestation_id, DisclosureOutcome::UnknownAttestation);
        }
        self.respond_disclosure(attestation_id, requester_jurisdiction, purpose, now)
    }
}

/// A notary that forwards revalidation to its cooperative.
pub struct ForwardingContact<'a> {
    pub notary: &'a mut Notary,
    pub cooperative: &'a Cooperative,
}

impl LegalContact for ForwardingContact<'_> {
    fn revalidate(&mut self, notary_id: &str, attestation_id: &Digest, now: Tick) -> Status {
        if notary_id != self.notary.id() {
            return Status::Unknown;
        }
        let mut upstream = self.cooperative;
        self.notary
            .respond_revalidation(attestation_id, now, Some(&mut upstream))
    }

    fn disclose(
        &mut self,
        notary_id: &str,
        attestation_id: &Digest,
        requester_jurisdiction: &str,
        purpose: Purpose,
        now: Tick,
    ) -> DisclosureResponse {
        self.notary
            .disclose(notary_id, attestation_id, requester_jurisdiction, purpose, now)
    }
}
