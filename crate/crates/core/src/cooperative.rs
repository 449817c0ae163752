//! The data cooperative: member records, attribute derivation, issuance of
//! plain/blinded pairs, and the revocation registry that backs revalidation.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{
    self, AttestationDoc, AttestationError, AttributeClaim, BlindedAttestation, PlainAttestation, SubjectMode,
    SubjectRef,
};
use crate::canonical::{self, CanonicalError};
use crate::crypto::{self, digest, CryptoError, Digest, KeyPair, Nonce};
use crate::Tick;

pub const AGE_OVER_18: &str = "age-over-18";
pub const RESIDENCE_COUNTRY: &str = "residence-country";
pub const INCOME_BRACKET: &str = "income-bracket";
pub const GOOD_STANDING: &str = "membership-in-good-standing";

/// Raw personal-data fields read by the derivation rules.
pub mod fields {
    pub const DATE_OF_BIRTH: &str = "date-of-birth";
    pub const RESIDENCE: &str = "residence";
    pub const INCOME: &str = "income";
    pub const STANDING: &str = "standing";
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CooperativeError {
    #[error("member {0:?} is already registered")]
    DuplicateMember(String),
    #[error("invalid member record: {0}")]
    InvalidMember(&'static str),
    #[error("unknown member {0:?}")]
    UnknownMember(String),
    #[error("unknown derivation query {0:?}")]
    UnknownQuery(String),
    #[error("member data field {field:?} is missing or unreadable")]
    InsufficientData { field: &'static str },
    #[error("member {0:?} has no handle to substitute")]
    MissingHandle(String),
    #[error("substitute mode must be absent or handle")]
    InvalidSubstituteMode,
    #[error("ttl must be positive and keep the expiry representable")]
    InvalidTtl,
    #[error("attestation {0} was not issued by this cooperative")]
    UnknownAttestation(Digest),
    #[error(transparent)]
    Attestation(#[from] AttestationError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Encoding(#[from] CanonicalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub member_id: String,
    pub legal_identity: String,
    #[serde(default)]
    pub personal_data: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle: Option<String>,
}

impl MemberRecord {
    fn validate(&self) -> Result<(), CooperativeError> {
        if self.member_id.is_empty() {
            return Err(CooperativeError::InvalidMember("member_id must not be empty"));
        }
        if self.legal_identity.is_empty() {
            return Err(CooperativeError::InvalidMember("legal_identity must not be empty"));
        }
        if let Some(h) = &self.handle {
            SubjectRef::handle(h.clone()).map_err(|_| CooperativeError::InvalidMember("handle must start with '@'"))?;
        }
        Ok(())
    }
}

/// Parse a member fixture file: a canonical list of member records.
pub fn load_members(bytes: &[u8]) -> Result<Vec<MemberRecord>, CanonicalError> {
    canonical::canonical_deserialize(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Valid,
    Revoked,
    Expired,
    Unknown,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Valid => "valid",
            Status::Revoked => "revoked",
            Status::Expired => "expired",
            Status::Unknown => "unknown",
        })
    }
}

/// Status of a known attestation: revocation (at or before `now`) wins over
/// expiry, which wins over validity.
pub fn known_status(revoked_at: Option<Tick>, expires_at: Tick, now: Tick) -> Status {
    match revoked_at {
        Some(r) if r <= now => Status::Revoked,
        _ if now >= expires_at => Status::Expired,
        _ => Status::Valid,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevocationEntry {
    pub attestation_id: Digest,
    pub revoked_at: Tick,
}

/// Append-only map from attestation id to revocation tick.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationRegistry {
    entries: BTreeMap<Digest, Tick>,
}

impl RevocationRegistry {
    /// Records the revocation; the first tick recorded for an id is kept.
    /// Returns true when the id was not revoked before.
    pub fn revoke(&mut self, id: Digest, at: Tick) -> bool {
        match self.entries.entry(id) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(at);
                true
            }
        }
    }

    pub fn revoked_at(&self, id: &Digest) -> Option<Tick> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> Vec<RevocationEntry> {
        self.entries
            .iter()
            .map(|(id, at)| RevocationEntry {
                attestation_id: *id,
                revoked_at: *at,
            })
            .collect()
    }

    pub fn merge(&mut self, entries: &[RevocationEntry]) {
        for e in entries {
            self.revoke(e.attestation_id, e.revoked_at);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncomeBracket {
    pub below: u64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationRules {
    pub enabled: Vec<String>,
    /// Ticks per year on the scenario calendar.
    pub year_length: u64,
    /// Ascending by `below`.
    pub income_brackets: Vec<IncomeBracket>,
    pub top_income_label: String,
}

impl Default for DerivationRules {
    fn default() -> Self {
        DerivationRules {
            enabled: [AGE_OVER_18, RESIDENCE_COUNTRY, INCOME_BRACKET, GOOD_STANDING]
                .map(String::from)
                .to_vec(),
            year_length: 365,
            income_brackets: vec![
                IncomeBracket {
                    below: 30_000,
                    label: "low".into(),
                },
                IncomeBracket {
                    below: 90_000,
                    label: "middle".into(),
                },
            ],
            top_income_label: "high".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooperativeConfig {
    pub id: String,
    #[serde(with = "serde_bytes")]
    pub key_seed: Vec<u8>,
    #[serde(with = "serde_bytes")]
    pub rng_seed: Vec<u8>,
    pub legal_rep_id: String,
    #[serde(default)]
    pub rules: DerivationRules,
    #[serde(default)]
    pub members: Vec<MemberRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssuanceEntry {
    pub member_id: String,
    pub plain: PlainAttestation,
    pub blinded: BlindedAttestation,
}

/// Everything needed to resume a cooperative across CLI invocations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooperativeState {
    pub config: CooperativeConfig,
    #[serde(default)]
    pub issued: Vec<IssuanceEntry>,
    #[serde(default)]
    pub revocations: Vec<RevocationEntry>,
    #[serde(default)]
    pub nonce_counter: u64,
}

#[derive(Debug, Clone)]
pub struct Cooperative {
    config: CooperativeConfig,
    key: KeyPair,
    members: BTreeMap<String, MemberRecord>,
    issued: Vec<IssuanceEntry>,
    by_id: BTreeMap<Digest, usize>,
    revocations: RevocationRegistry,
    rng_seed: [u8; 32],
    nonce_counter: u64,
}

impl Cooperative {
    pub fn new(config: CooperativeConfig) -> Result<Self, CooperativeError> {
        Self::from_state(CooperativeState {
            config,
            issued: Vec::new(),
            revocations: Vec::new(),
            nonce_counter: 0,
        })
    }

    pub fn from_state(state: CooperativeState) -> Result<Self, CooperativeError> {
        let key = crypto::keygen(&state.config.key_seed)?;
        let rng_seed = *digest(&[b"coop-rng\0".as_slice(), &state.config.rng_seed].concat()).as_bytes();
        let mut coop = Cooperative {
            config: state.config.clone(),
            key,
            members: BTreeMap::new(),
            issued: Vec::new(),
            by_id: BTreeMap::new(),
            revocations: RevocationRegistry::default(),
            rng_seed,
            nonce_counter: state.nonce_counter,
        };
        coop.config.members.clear();
        for m in state.config.members {
            coop.register_member(m)?;
        }
        for entry in state.issued {
            coop.record_issuance(entry);
        }
        coop.revocations.merge(&state.revocations);
        Ok(coop)
    }

    pub fn to_state(&self) -> CooperativeState {
        let mut config = self.config.clone();
        config.members = self.members.values().cloned().collect();
        CooperativeState {
            config,
            issued: self.issued.clone(),
            revocations: self.revocations.entries(),
            nonce_counter: self.nonce_counter,
        }
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn legal_rep_id(&self) -> &str {
        &self.config.legal_rep_id
    }

    pub fn public_key(&self) -> &[u8] {
        &self.key.public_key
    }

    pub fn key_id(&self) -> Digest {
        self.key.key_id
    }

    pub fn register_member(&mut self, record: MemberRecord) -> Result<String, CooperativeError> {
        record.validate()?;
        if self.members.contains_key(&record.member_id) {
            return Err(CooperativeError::DuplicateMember(record.member_id));
        }
        let id = record.member_id.clone();
        self.members.insert(id.clone(), record);
        Ok(id)
    }

    pub fn member(&self, member_id: &str) -> Option<&MemberRecord> {
        self.members.get(member_id)
    }

    pub fn members(&self) -> impl Iterator<Item = &MemberRecord> {
        self.members.values()
    }

    pub fn derive_attribute(
        &self,
        member_id: &str,
        query: &str,
        now: Tick,
    ) -> Result<AttributeClaim, CooperativeError> {
        let member = self
            .members
            .get(member_id)
            .ok_or_else(|| CooperativeError::UnknownMember(member_id.to_owned()))?;
        let rules = &self.config.rules;
        if !rules.enabled.iter().any(|q| q == query) {
            return Err(CooperativeError::UnknownQuery(query.to_owned()));
        }
        let field = |name: &'static str| {
            member
                .personal_data
                .get(name)
                .filter(|v| !v.is_empty())
                .ok_or(CooperativeError::InsufficientData { field: name })
        };
        let numeric = |name: &'static str| {
            field(name)?
                .parse::<u64>()
                .map_err(|_| CooperativeError::InsufficientData { field: name })
        };
        let value = match query {
            AGE_OVER_18 => {
                let born = numeric(fields::DATE_OF_BIRTH)?;
                let years = now.saturating_sub(born) / rules.year_length.max(1);
                (born <= now && years >= 18).to_string()
            }
            RESIDENCE_COUNTRY => field(fields::RESIDENCE)?.clone(),
            INCOME_BRACKET => {
                let income = numeric(fields::INCOME)?;
                rules
                    .income_brackets
                    .iter()
                    .find(|b| income < b.below)
                    .map(|b| b.label.clone())
                    .unwrap_or_else(|| rules.top_income_label.clone())
            }
            GOOD_STANDING => (field(fields::STANDING)? == "good").to_string(),
            other => return Err(CooperativeError::UnknownQuery(other.to_owned())),
        };
        Ok(AttributeClaim::new(query, value, format!("rule:{query}")))
    }

    fn next_nonce(&mut self) -> Nonce {
        let mut rng = ChaCha20Rng::from_seed(self.rng_seed);
        rng.set_word_pos(u128::from(self.nonce_counter) * 8);
        self.nonce_counter += 1;
        let mut out = [0u8; 32];
        rng.fill_bytes(&mut out);
        Digest::new(out)
    }

    pub fn issue_blinded(
        &mut self,
        member_id: &str,
        queries: &[String],
        substitute_mode: SubjectMode,
        now: Tick,
        ttl: u64,
    ) -> Result<(PlainAttestation, BlindedAttestation), CooperativeError> {
        let rep = self.config.legal_rep_id.clone();
        self.issue_blinded_via(member_id, queries, substitute_mode, now, ttl, &rep)
    }

    /// Like [`issue_blinded`](Self::issue_blinded) but naming a specific
    /// legal representative.
    pub fn issue_blinded_via(
        &mut self,
        member_id: &str,
        queries: &[String],
        substitute_mode: SubjectMode,
        now: Tick,
        ttl: u64,
        legal_rep_id: &str,
    ) -> Result<(PlainAttestation, BlindedAttestation), CooperativeError> {
        let member = self
            .members
            .get(member_id)
            .ok_or_else(|| CooperativeError::UnknownMember(member_id.to_owned()))?
            .clone();
        let substitute = match substitute_mode {
            SubjectMode::Absent => SubjectRef::absent(),
            SubjectMode::Handle => {
                let h = member
                    .handle
                    .clone()
                    .ok_or_else(|| CooperativeError::MissingHandle(member_id.to_owned()))?;
                SubjectRef::handle(h)?
            }
            SubjectMode::LegalIdentity => return Err(CooperativeError::InvalidSubstituteMode),
        };
        if ttl == 0 {
            return Err(CooperativeError::InvalidTtl);
        }
        let expires_at = now.checked_add(ttl).ok_or(CooperativeError::InvalidTtl)?;
        let attributes = queries
            .iter()
            .map(|q| self.derive_attribute(member_id, q, now))
            .collect::<Result<Vec<_>, _>>()?;

        let nonce = self.next_nonce();
        let plain = attestation::build_plain(
            SubjectRef::legal(member.legal_identity.clone()),
            attributes,
            &self.key,
            legal_rep_id,
            now,
            expires_at,
            nonce,
        )?;
        let blinded = attestation::blind(&plain, substitute, &self.key)?;
        self.record_issuance(IssuanceEntry {
            member_id: member_id.to_owned(),
            plain: plain.clone(),
            blinded: blinded.clone(),
        });
        Ok((plain, blinded))
    }

    fn record_issuance(&mut self, entry: IssuanceEntry) {
        let idx = self.issued.len();
        self.by_id.insert(entry.plain.attestation_id, idx);
        self.by_id.insert(entry.blinded.attestation_id, idx);
        self.issued.push(entry);
    }

    pub fn issuance_log(&self) -> &[IssuanceEntry] {
        &self.issued
    }

    /// The issuance entry for either the plain or the blinded id.
    pub fn issuance(&self, attestation_id: &Digest) -> Option<&IssuanceEntry> {
        self.by_id.get(attestation_id).map(|&i| &self.issued[i])
    }

    /// Revoke an issued pair. Either id of the pair may be given; both are
    /// recorded. Repeated revocation keeps the first tick.
    pub fn revoke(&mut self, attestation_id: &Digest, at: Tick) -> Result<(), CooperativeError> {
        let entry = self
            .issuance(attestation_id)
            .ok_or(CooperativeError::UnknownAttestation(*attestation_id))?;
        let (p, b) = (entry.plain.attestation_id, entry.blinded.attestation_id);
        self.revocations.revoke(p, at);
        self.revocations.revoke(b, at);
        Ok(())
    }

    pub fn revocations(&self) -> &RevocationRegistry {
        &self.revocations
    }

    pub fn revalidation_status(&self, attestation_id: &Digest, now: Tick) -> Status {
        match self.issuance(attestation_id) {
            None => Status::Unknown,
            Some(entry) => known_status(self.revocations.revoked_at(attestation_id), entry.plain.expires_at, now),
        }
    }

    /// Write every issued pair as `<n>-<blinded id>.plain.att` /
    /// `.blinded.att` under `dir`.
    pub fn export_issuance_log(&self, dir: &Path) -> io::Result<Vec<(PathBuf, PathBuf)>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for (n, entry) in self.issued.iter().enumerate() {
            let stem = format!("{n:04}-{}", entry.blinded.attestation_id);
            let plain = dir.join(format!("{stem}.plain.att"));
            let blinded = dir.join(format!("{stem}.blinded.att"));
            fs::write(&plain, AttestationDoc::Plain(entry.plain.clone()).to_bytes())?;
            fs::write(&blinded, AttestationDoc::Blinded(entry.blinded.clone()).to_bytes())?;
            out.push((plain, blinded));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attestation::verify_pair;

    pub(crate) fn alice() -> MemberRecord {
        MemberRecord {
            member_id: "alice".into(),
            legal_identity: "alice-legal-001".into(),
            personal_data: [
                (fields::DATE_OF_BIRTH, "0"),
                (fields::RESIDENCE, "NL"),
                (fields::INCOME, "45000"),
                (fields::STANDING, "good"),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
            handle: Some("@sender".into()),
        }
    }

    fn coop() -> Cooperative {
        let mut c = Cooperative::new(CooperativeConfig {
            id: "coop-1".into(),
            key_seed: b"coop-1".to_vec(),
            rng_seed: b"seed".to_vec(),
            legal_rep_id: "notary-1".into(),
            rules: DerivationRules::default(),
            members: vec![],
        })
        .unwrap();
        c.register_member(alice()).unwrap();
        c
    }

    fn q(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn register_and_lookup() {
        let mut c = coop();
        assert_eq!(c.member("alice").unwrap(), &alice());
        assert_eq!(
            c.register_member(alice()),
            Err(CooperativeError::DuplicateMember("alice".into()))
        );
        for i in 0..1000 {
            let mut m = alice();
            m.member_id = format!("m{i}");
            c.register_member(m).unwrap();
        }
        for i in 0..1000 {
            assert_eq!(c.member(&format!("m{i}")).unwrap().member_id, format!("m{i}"));
        }
    }

    #[test]
    fn age_rule_uses_tick_calendar() {
        let mut c = coop();
        let now = 10_000;
        let mut m = alice();
        m.member_id = "young".into();
        m.personal_data
            .insert(fields::DATE_OF_BIRTH.into(), (now - 7000).to_string());
        c.register_member(m).unwrap();
        // 7000 / 365 = 19 whole years
        assert_eq!(c.derive_attribute("young", AGE_OVER_18, now).unwrap().value, "true");
        // 18 * 365 = 6570 is the boundary
        let mut edge = alice();
        edge.member_id = "edge".into();
        edge.personal_data
            .insert(fields::DATE_OF_BIRTH.into(), (now - 6570).to_string());
        c.register_member(edge).unwrap();
        assert_eq!(c.derive_attribute("edge", AGE_OVER_18, now).unwrap().value, "true");
        assert_eq!(c.derive_attribute("edge", AGE_OVER_18, now - 1).unwrap().value, "false");
    }

    #[test]
    fn derivation_projection_and_errors() {
        let mut c = coop();
        let claim = c.derive_attribute("alice", RESIDENCE_COUNTRY, 0).unwrap();
        assert_eq!(
            claim,
            AttributeClaim::new(RESIDENCE_COUNTRY, "NL", "rule:residence-country")
        );
        assert_eq!(c.derive_attribute("alice", INCOME_BRACKET, 0).unwrap().value, "middle");
        assert_eq!(c.derive_attribute("alice", GOOD_STANDING, 0).unwrap().value, "true");
        assert_eq!(
            c.derive_attribute("bob", AGE_OVER_18, 0),
            Err(CooperativeError::UnknownMember("bob".into()))
        );
        assert_eq!(
            c.derive_attribute("alice", "favourite-colour", 0),
            Err(CooperativeError::UnknownQuery("favourite-colour".into()))
        );
        let mut m = alice();
        m.member_id = "nodob".into();
        m.personal_data.remove(fields::DATE_OF_BIRTH);
        c.register_member(m).unwrap();
        assert_eq!(
            c.derive_attribute("nodob", AGE_OVER_18, 0),
            Err(CooperativeError::InsufficientData {
                field: fields::DATE_OF_BIRTH
            })
        );
    }

    #[test]
    fn issuance_produces_matching_pair() {
        let mut c = coop();
        let (p, b) = c
            .issue_blinded("alice", &q(&[AGE_OVER_18]), SubjectMode::Absent, 20_000, 90)
            .unwrap();
        assert!(verify_pair(&p, &b, c.public_key()).passed());
        assert_eq!(b.subject, SubjectRef::absent());
        assert_eq!(p.subject.value, "alice-legal-001");
        assert_eq!(c.issuance_log().len(), 1);

        let (_, hb) = c
            .issue_blinded("alice", &q(&[AGE_OVER_18]), SubjectMode::Handle, 20_000, 90)
            .unwrap();
        assert_eq!(hb.subject.value, "@sender");
    }

    #[test]
    fn issuance_errors() {
        let mut c = coop();
        let mut m = alice();
        m.member_id = "nohandle".into();
        m.handle = None;
        c.register_member(m).unwrap();
        assert_eq!(
            c.issue_blinded("nohandle", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Handle, 0, 5)
                .unwrap_err(),
            CooperativeError::MissingHandle("nohandle".into())
        );
        assert_eq!(
            c.issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 0, 0)
                .unwrap_err(),
            CooperativeError::InvalidTtl
        );
        assert_eq!(
            c.issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::LegalIdentity, 0, 5)
                .unwrap_err(),
            CooperativeError::InvalidSubstituteMode
        );
    }

    #[test]
    fn repeated_issuance_has_fresh_nonces() {
        let mut c = coop();
        let mut ids = std::collections::BTreeSet::new();
        for _ in 0..100 {
            let (p, b) = c
                .issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 5, 10)
                .unwrap();
            ids.insert(p.attestation_id);
            ids.insert(b.attestation_id);
        }
        assert_eq!(ids.len(), 200);
    }

    #[test]
    fn nonce_stream_resumes_from_state() {
        let mut a = coop();
        a.issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 5, 10)
            .unwrap();
        let mut b = Cooperative::from_state(a.to_state()).unwrap();
        let (pa, _) = a
            .issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 5, 10)
            .unwrap();
        let (pb, _) = b
            .issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 5, 10)
            .unwrap();
        assert_eq!(pa, pb);
        let bytes = canonical::canonical_serialize(&b.to_state()).unwrap();
        let back: CooperativeState = canonical::canonical_deserialize(&bytes).unwrap();
        assert_eq!(back, b.to_state());
    }

    #[test]
    fn revocation_and_status() {
        let mut c = coop();
        let (p, b) = c
            .issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 10, 90)
            .unwrap();
        let id = b.attestation_id;
        assert_eq!(c.revalidation_status(&id, 50), Status::Valid);
        assert_eq!(c.revalidation_status(&id, 100), Status::Expired);
        assert_eq!(c.revalidation_status(&Digest::ZERO, 50), Status::Unknown);
        c.revoke(&id, 40).unwrap();
        assert_eq!(c.revalidation_status(&id, 50), Status::Revoked);
        assert_eq!(c.revalidation_status(&p.attestation_id, 50), Status::Revoked);
        assert_eq!(c.revalidation_status(&id, 39), Status::Valid);
        c.revoke(&id, 45).unwrap();
        assert_eq!(c.revocations().revoked_at(&id), Some(40));
        assert_eq!(
            c.revoke(&Digest::ZERO, 1),
            Err(CooperativeError::UnknownAttestation(Digest::ZERO))
        );
    }

    #[test]
    fn status_lattice_small_grid() {
        for expires in 1..6u64 {
            for now in 0..8u64 {
                for revoked in (0..8u64).map(Some).chain([None]) {
                    let got = known_status(revoked, expires, now);
                    let want = if revoked.is_some_and(|r| r <= now) {
                        Status::Revoked
                    } else if now >= expires {
                        Status::Expired
                    } else {
                        Status::Valid
                    };
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn revocation_is_monotone() {
        let mut c = coop();
        let (_, b) = c
            .issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, 0, 5)
            .unwrap();
        c.revoke(&b.attestation_id, 3).unwrap();
        let first = (0..20)
            .find(|t| c.revalidation_status(&b.attestation_id, *t) == Status::Revoked)
            .unwrap();
        assert!((first..40).all(|t| c.revalidation_status(&b.attestation_id, t) == Status::Revoked));
    }

    #[test]
    fn issuance_log_exports_and_reverifies() {
        let mut c = coop();
        for t in 0..3 {
            c.issue_blinded("alice", &q(&[RESIDENCE_COUNTRY]), SubjectMode::Absent, t, 10)
                .unwrap();
        }
        for e in c.issuance_log() {
            assert!(verify_pair(&e.plain, &e.blinded, c.public_key()).passed());
        }
        let dir = tempfile::tempdir().unwrap();
        let files = c.export_issuance_log(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        let doc = AttestationDoc::from_bytes(&fs::read(&files[0].0).unwrap()).unwrap();
        assert_eq!(doc, AttestationDoc::Plain(c.issuance_log()[0].plain.clone()));
    }

    #[test]
    fn member_fixture_file_loads() {
        let bytes = canonical::canonical_serialize(&vec![alice()]).unwrap();
        assert_eq!(load_members(&bytes).unwrap(), vec![alice()]);
    }
}
