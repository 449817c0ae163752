//! Plain, blinded and countersigned attestations.
//!
//! A cooperative signs two statements about a member: the plain attestation
//! names the member's legal identity, and the blinded attestation replaces the
//! subject with nothing (or a social handle) while committing to the plain
//! one through `plain_digest`. A notary then envelopes the unmodified blinded
//! attestation in its own countersignature, naming itself as the legal
//! contact for disclosure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{self, CanonicalError};
use crate::crypto::{self, digest, Digest, DomainTag, KeyPair, Nonce, Signature, HASH_ALG};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttestationError {
    #[error("validity window [{issued_at}, {expires_at}) is empty")]
    InvalidValidityWindow { issued_at: Tick, expires_at: Tick },
    #[error("attestation must carry at least one attribute")]
    EmptyAttributes,
    #[error("attribute name must not be empty")]
    EmptyAttributeName,
    #[error("subject mode {found} not allowed here")]
    SubjectModeMismatch { found: SubjectMode },
    #[error("subject reference is malformed: {0}")]
    MalformedSubject(&'static str),
    #[error("issuer key does not match the attestation's issuer_key_id")]
    IssuerKeyMismatch,
    #[error("blinded attestation does not verify under the issuer key")]
    InvalidBlinded,
    #[error("notary id must not be empty")]
    EmptyNotaryId,
    #[error(transparent)]
    Encoding(#[from] CanonicalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeClaim {
    pub name: String,
    pub value: String,
    pub method: String,
}

impl AttributeClaim {
    pub fn new(name: impl Into<String>, value: impl Into<String>, method: impl Into<String>) -> Self {
        AttributeClaim {
            name: name.into(),
            value: value.into(),
            method: method.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubjectMode {
    LegalIdentity,
    Absent,
    Handle,
}

impl std::fmt::Display for SubjectMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SubjectMode::LegalIdentity => "legal-identity",
            SubjectMode::Absent => "absent",
            SubjectMode::Handle => "handle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectRef {
    pub mode: SubjectMode,
    pub value: String,
}

impl SubjectRef {
    pub fn legal(identity: impl Into<String>) -> Self {
        SubjectRef {
            mode: SubjectMode::LegalIdentity,
            value: identity.into(),
        }
    }

    pub fn absent() -> Self {
        SubjectRef {
            mode: SubjectMode::Absent,
            value: String::new(),
        }
    }

    pub fn handle(handle: impl Into<String>) -> Result<Self, AttestationError> {
        let s = SubjectRef {
            mode: SubjectMode::Handle,
            value: handle.into(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), AttestationError> {
        match self.mode {
            SubjectMode::Absent if !self.value.is_empty() => Err(AttestationError::MalformedSubject(
                "absent subject must have an empty value",
            )),
            SubjectMode::Handle if !self.value.starts_with('@') || self.value.len() < 2 => {
                Err(AttestationError::MalformedSubject("handle must start with '@'"))
            }
            SubjectMode::LegalIdentity if self.value.is_empty() => {
                Err(AttestationError::MalformedSubject("legal identity must not be empty"))
            }
            _ => Ok(()),
        }
    }

    /// True when the subject does not identify the member.
    pub fn is_non_identifying(&self) -> bool {
        self.mode != SubjectMode::LegalIdentity && self.validate().is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlainAttestation {
    pub attestation_id: Digest,
    pub subject: SubjectRef,
    pub attributes: Vec<AttributeClaim>,
    pub issuer_key_id: Digest,
    pub legal_rep_id: String,
    pub issued_at: Tick,
    pub expires_at: Tick,
    pub nonce: Nonce,
    pub hash_alg: String,
    pub issuer_signature: Signature,
}

#[derive(Serialize)]
struct PlainBody<'a> {
    subject: &'a SubjectRef,
    attributes: &'a [AttributeClaim],
    issuer_key_id: &'a Digest,
    legal_rep_id: &'a str,
    issued_at: Tick,
    expires_at: Tick,
    nonce: &'a Nonce,
    hash_alg: &'a str,
}

#[derive(Serialize)]
struct Signed<'a, B: Serialize> {
    body: &'a B,
    issuer_signature: &'a Signature,
}

impl PlainAttestation {
    fn body(&self) -> PlainBody<'_> {
        PlainBody {
            subject: &self.subject,
            attributes: &self.attributes,
            issuer_key_id: &self.issuer_key_id,
            legal_rep_id: &self.legal_rep_id,
            issued_at: self.issued_at,
            expires_at: self.expires_at,
            nonce: &self.nonce,
            hash_alg: &self.hash_alg,
        }
    }

    pub fn signed_body_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(&self.body()).expect("attestation body is canonical")
    }

    fn computed_id(&self) -> Digest {
        let signed = Signed {
            body: &self.body(),
            issuer_signature: &self.issuer_signature,
        };
        digest(&canonical::canonical_serialize(&signed).expect("attestation body is canonical"))
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(self).expect("attestation is canonical")
    }

    /// Identifier consistent and issuer signature valid under `issuer_public_key`.
    pub fn verify_issuer(&self, issuer_public_key: &[u8]) -> bool {
        self.attestation_id == self.computed_id()
            && self.issuer_key_id == digest(issuer_public_key)
            && crypto::verify_tagged(
                issuer_public_key,
                DomainTag::Plain,
                &self.signed_body_bytes(),
                &self.issuer_signature,
            )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindedAttestation {
    pub attestation_id: Digest,
    pub subject: SubjectRef,
    pub attributes: Vec<AttributeClaim>,
    pub plain_digest: Digest,
    pub issuer_key_id: Digest,
    pub legal_rep_id: String,
    pub issued_at: Tick,
    pub expires_at: Tick,
    pub hash_alg: String,
    pub issuer_signature: Signature,
}

#[derive(Serialize)]
struct BlindedBody<'a> {
    subject: &'a SubjectRef,
    attributes: &'a [AttributeClaim],
    plain_digest: &'a Digest,
    issuer_key_id: &'a Digest,
    legal_rep_id: &'a str,
    issued_at: Tick,
    expires_at: Tick,
    hash_alg: &'a str,
}

impl BlindedAttestation {
    fn body(&self) -> BlindedBody<'_> {
        BlindedBody {
            subject: &self.subject,
            attributes: &self.attributes,
            plain_digest: &self.plain_digest,
            issuer_key_id: &self.issuer_key_id,
            legal_rep_id: &self.legal_rep_id,
            issued_at: self.issued_at,
            expires_at: self.expires_at,
            hash_alg: &self.hash_alg,
        }
    }

    pub fn signed_body_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(&self.body()).expect("attestation body is canonical")
    }

    fn computed_id(&self) -> Digest {
        let signed = Signed {
            body: &self.body(),
            issuer_signature: &self.issuer_signature,
        };
        digest(&canonical::canonical_serialize(&signed).expect("attestation body is canonical"))
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(self).expect("attestation is canonical")
    }

    pub fn verify_issuer(&self, issuer_public_key: &[u8]) -> bool {
        self.attestation_id == self.computed_id()
            && self.issuer_key_id == digest(issuer_public_key)
            && crypto::verify_tagged(
                issuer_public_key,
                DomainTag::Blinded,
                &self.signed_body_bytes(),
                &self.issuer_signature,
            )
    }

    /// The window is half-open: expired from `expires_at` onward.
    pub fn is_expired_at(&self, now: Tick) -> bool {
        now >= self.expires_at
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSignedAttestation {
    pub blinded: BlindedAttestation,
    pub notary_id: String,
    pub notary_key_id: Digest,
    pub countersigned_at: Tick,
    pub notary_signature: Signature,
}

#[derive(Serialize)]
struct Envelope<'a> {
    blinded: &'a BlindedAttestation,
    notary_id: &'a str,
    notary_key_id: &'a Digest,
    countersigned_at: Tick,
}

impl CounterSignedAttestation {
    pub fn envelope_bytes(&self) -> Vec<u8> {
        let env = Envelope {
            blinded: &self.blinded,
            notary_id: &self.notary_id,
            notary_key_id: &self.notary_key_id,
            countersigned_at: self.countersigned_at,
        };
        canonical::canonical_serialize(&env).expect("envelope is canonical")
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(self).expect("attestation is canonical")
    }

    pub fn attestation_id(&self) -> Digest {
        self.blinded.attestation_id
    }

    pub fn verify_notary(&self, notary_public_key: &[u8]) -> bool {
        !self.notary_id.is_empty()
            && self.notary_key_id == digest(notary_public_key)
            && crypto::verify_tagged(
                notary_public_key,
                DomainTag::Counter,
                &self.envelope_bytes(),
                &self.notary_signature,
            )
    }
}

/// Any of the three artifacts, tagged by `kind` for `.att` files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttestationDoc {
    Plain(PlainAttestation),
    Blinded(BlindedAttestation),
    Countersigned(CounterSignedAttestation),
}

impl AttestationDoc {
    pub fn to_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(self).expect("attestation is canonical")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CanonicalError> {
        canonical::canonical_deserialize(bytes)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AttestationDoc::Plain(_) => "plain",
            AttestationDoc::Blinded(_) => "blinded",
            AttestationDoc::Countersigned(_) => "countersigned",
        }
    }
}

fn check_attributes(attributes: &[AttributeClaim]) -> Result<(), AttestationError> {
    if attributes.is_empty() {
        return Err(AttestationError::EmptyAttributes);
    }
    if attributes.iter().any(|a| a.name.is_empty()) {
        return Err(AttestationError::EmptyAttributeName);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn build_plain(
    subject: SubjectRef,
    attributes: Vec<AttributeClaim>,
    issuer: &KeyPair,
    legal_rep_id: &str,
    issued_at: Tick,
    expires_at: Tick,
    nonce: Nonce,
) -> Result<PlainAttestation, AttestationError> {
    if subject.mode != SubjectMode::LegalIdentity {
        return Err(AttestationError::SubjectModeMismatch { found: subject.mode });
    }
    subject.validate()?;
    if expires_at <= issued_at {
        return Err(AttestationError::InvalidValidityWindow { issued_at, expires_at });
    }
    check_attributes(&attributes)?;

    let mut plain = PlainAttestation {
        attestation_id: Digest::ZERO,
        subject,
        attributes,
        issuer_key_id: issuer.key_id,
        legal_rep_id: legal_rep_id.to_owned(),
        issued_at,
        expires_at,
        nonce,
        hash_alg: HASH_ALG.to_owned(),
        issuer_signature: Signature {
            bytes: Vec::new(),
            signer_key_id: issuer.key_id,
            domain_tag: String::new(),
        },
    };
    plain.issuer_signature = crypto::sign_tagged(issuer, DomainTag::Plain, &plain.signed_body_bytes());
    plain.attestation_id = plain.computed_id();
    Ok(plain)
}

pub fn blind(
    plain: &PlainAttestation,
    substitute: SubjectRef,
    issuer: &KeyPair,
) -> Result<BlindedAttestation, AttestationError> {
    if issuer.key_id != plain.issuer_key_id {
        return Err(AttestationError::IssuerKeyMismatch);
    }
    if substitute.mode == SubjectMode::LegalIdentity {
        return Err(AttestationError::SubjectModeMismatch { found: substitute.mode });
    }
    substitute.validate()?;

    let mut blinded = BlindedAttestation {
        attestation_id: Digest::ZERO,
        subject: substitute,
        attributes: plain.attributes.clone(),
        plain_digest: digest(&plain.canonical_bytes()),
        issuer_key_id: issuer.key_id,
        legal_rep_id: plain.legal_rep_id.clone(),
        issued_at: plain.issued_at,
        expires_at: plain.expires_at,
        hash_alg: plain.hash_alg.clone(),
        issuer_signature: Signature {
            bytes: Vec::new(),
            signer_key_id: issuer.key_id,
            domain_tag: String::new(),
        },
    };
    blinded.issuer_signature = crypto::sign_tagged(issuer, DomainTag::Blinded, &blinded.signed_body_bytes());
    blinded.attestation_id = blinded.computed_id();
    Ok(blinded)
}

/// Per-check outcome of comparing a plain attestation with a blinded one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub plain_signature: bool,
    pub blinded_signature: bool,
    pub attributes_equal: bool,
    pub plain_digest: bool,
    pub validity_window: bool,
    pub legal_rep: bool,
    pub blinded_subject: bool,
}

impl MatchReport {
    pub fn passed(&self) -> bool {
        self.plain_signature
            && self.blinded_signature
            && self.attributes_equal
            && self.plain_digest
            && self.validity_window
            && self.legal_rep
            && self.blinded_subject
    }

    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("plain-signature", self.plain_signature),
            ("blinded-signature", self.blinded_signature),
            ("attributes-equal", self.attributes_equal),
            ("plain-digest", self.plain_digest),
            ("validity-window", self.validity_window),
            ("legal-rep", self.legal_rep),
            ("blinded-subject", self.blinded_subject),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

pub fn verify_pair(plain: &PlainAttestation, blinded: &BlindedAttestation, issuer_public_key: &[u8]) -> MatchReport {
    MatchReport {
        plain_signature: plain.verify_issuer(issuer_public_key),
        blinded_signature: blinded.verify_issuer(issuer_public_key),
        attributes_equal: plain.attributes == blinded.attributes,
        plain_digest: blinded.plain_digest == digest(&plain.canonical_bytes()) && blinded.hash_alg == plain.hash_alg,
        validity_window: plain.issued_at == blinded.issued_at
            && plain.expires_at == blinded.expires_at
            && plain.issued_at < plain.expires_at,
        legal_rep: plain.legal_rep_id == blinded.legal_rep_id,
        blinded_subject: blinded.subject.is_non_identifying(),
    }
}

pub fn countersign(
    blinded: &BlindedAttestation,
    issuer_public_key: &[u8],
    notary: &KeyPair,
    notary_id: &str,
    at: Tick,
) -> Result<CounterSignedAttestation, AttestationError> {
    if notary_id.is_empty() {
        return Err(AttestationError::EmptyNotaryId);
    }
    if !blinded.verify_issuer(issuer_public_key) {
        return Err(AttestationError::InvalidBlinded);
    }
    let mut csa = CounterSignedAttestation {
        blinded: blinded.clone(),
        notary_id: notary_id.to_owned(),
        notary_key_id: notary.key_id,
        countersigned_at: at,
        notary_signature: Signature {
            bytes: Vec::new(),
            signer_key_id: notary.key_id,
            domain_tag: String::new(),
        },
    };
    csa.notary_signature = crypto::sign_tagged(notary, DomainTag::Counter, &csa.envelope_bytes());
    Ok(csa)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub decodes: bool,
    pub issuer_signature: bool,
    pub notary_signature: bool,
    pub not_expired: bool,
    pub subject_non_identifying: bool,
}

impl VerificationReport {
    pub const UNDECODABLE: VerificationReport = VerificationReport {
        decodes: false,
        issuer_signature: false,
        notary_signature: false,
        not_expired: false,
        subject_non_identifying: false,
    };

    pub fn passed(&self) -> bool {
        self.decodes
            && self.issuer_signature
            && self.notary_signature
            && self.not_expired
            && self.subject_non_identifying
    }

    /// Only the expiry check failed.
    pub fn only_expired(&self) -> bool {
        !self.not_expired
            && self.decodes
            && self.issuer_signature
            && self.notary_signature
            && self.subject_non_identifying
    }

    pub fn lines(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("decodes", self.decodes),
            ("issuer-signature", self.issuer_signature),
            ("notary-signature", self.notary_signature),
            ("not-expired", self.not_expired),
            ("subject-non-identifying", self.subject_non_identifying),
        ]
    }
}

pub fn verify_countersigned(
    csa: &CounterSignedAttestation,
    issuer_public_key: &[u8],
    notary_public_key: &[u8],
    now: Tick,
) -> VerificationReport {
    VerificationReport {
        decodes: true,
        issuer_signature: csa.blinded.verify_issuer(issuer_public_key),
        notary_signature: csa.verify_notary(notary_public_key),
        not_expired: !csa.blinded.is_expired_at(now),
        subject_non_identifying: csa.blinded.subject.is_non_identifying(),
    }
}

/// Verify a serialized countersigned attestation. Bytes that are not the
/// canonical encoding of one fail the `decodes` check.
pub fn verify_countersigned_bytes(
    bytes: &[u8],
    issuer_public_key: &[u8],
    notary_public_key: &[u8],
    now: Tick,
) -> VerificationReport {
    match canonical::canonical_deserialize::<CounterSignedAttestation>(bytes) {
        Ok(csa) if csa.canonical_bytes() == bytes => {
            verify_countersigned(&csa, issuer_public_key, notary_public_key, now)
        }
        _ => VerificationReport::UNDECODABLE,
    }
}

/// Public keys a relying party accepts for issuers and notaries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustStore {
    issuers: BTreeMap<Digest, Vec<u8>>,
    notaries: BTreeMap<Digest, Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TrustError {
    #[error("issuer key {0} is not trusted")]
    UntrustedIssuer(Digest),
    #[error("notary key {0} is not trusted")]
    UntrustedNotary(Digest),
}

impl TrustStore {
    pub fn trust_issuer(&mut self, public_key: &[u8]) {
        self.issuers.insert(digest(public_key), public_key.to_vec());
    }

    pub fn trust_notary(&mut self, public_key: &[u8]) {
        self.notaries.insert(digest(public_key), public_key.to_vec());
    }

    pub fn issuer_key(&self, key_id: &Digest) -> Option<&[u8]> {
        self.issuers.get(key_id).map(Vec::as_slice)
    }

    pub fn notary_key(&self, key_id: &Digest) -> Option<&[u8]> {
        self.notaries.get(key_id).map(Vec::as_slice)
    }

    /// Resolve both keys named by the artifact, then verify it.
    pub fn verify(&self, csa: &CounterSignedAttestation, now: Tick) -> Result<VerificationReport, TrustError> {
        let issuer = self
            .issuer_key(&csa.blinded.issuer_key_id)
            .ok_or(TrustError::UntrustedIssuer(csa.blinded.issuer_key_id))?;
        let notary = self
            .notary_key(&csa.notary_key_id)
            .ok_or(TrustError::UntrustedNotary(csa.notary_key_id))?;
        Ok(verify_countersigned(csa, issuer, notary, now))
    }
}
