//! Exchange (VASP) actors for the Travel Rule flow: originate a transfer,
//! hand the originator's countersigned attestation over a direct channel,
//! evaluate it at the beneficiary and assemble the customer-information
//! record once identity has been disclosed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{CounterSignedAttestation, TrustError, TrustStore};
use crate::cooperative::{Status, RESIDENCE_COUNTRY};
use crate::crypto::digest;
use crate::notary::{DisclosureOutcome, DisclosureResponse, LegalContact, Purpose};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TravelRuleError {
    #[error("attestation rejected at registration: {0}")]
    InvalidAttestation(String),
    #[error("account {0:?} is already registered")]
    DuplicateAccount(String),
    #[error("account {0:?} is not registered")]
    UnknownAccount(String),
    #[error("transfer {0:?} already exists")]
    DuplicateTransfer(String),
    #[error("transfer {0:?} is not known")]
    UnknownTransfer(String),
    #[error("invalid transfer request: {0}")]
    InvalidTransfer(&'static str),
    #[error("no attestation on file for transfer {0:?}")]
    NoAttestationOnFile(String),
    #[error("identity was not disclosed")]
    NotDisclosed,
    #[error("disclosed attestation has no residence-country attribute")]
    MissingResidenceAttribute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferRequest {
    pub transfer_id: String,
    pub originator_account: String,
    pub beneficiary_account: String,
    pub beneficiary_exchange: String,
    pub asset: String,
    /// Minor units.
    pub amount: u64,
    pub requested_at: Tick,
}

impl TransferRequest {
    pub fn validate(&self) -> Result<(), TravelRuleError> {
        if self.transfer_id.is_empty() {
            return Err(TravelRuleError::InvalidTransfer("empty transfer id"));
        }
        if self.amount == 0 {
            return Err(TravelRuleError::InvalidTransfer("amount must be positive"));
        }
        if self.originator_account.is_empty() || self.beneficiary_account.is_empty() {
            return Err(TravelRuleError::InvalidTransfer("empty account"));
        }
        Ok(())
    }
}

/// The five customer-information fields exchanged between VASPs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelRuleRecord {
    pub originator_name: String,
    pub originator_account: String,
    pub originator_address_or_id: String,
    pub beneficiary_name: String,
    pub beneficiary_account: String,
}

impl TravelRuleRecord {
    pub fn is_complete(&self) -> bool {
        [
            &self.originator_name,
            &self.originator_account,
            &self.originator_address_or_id,
            &self.beneficiary_name,
            &self.beneficiary_account,
        ]
        .iter()
        .all(|f| !f.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferOutcome {
    Accepted,
    HeldPendingDisclosure,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferDecision {
    pub transfer_id: String,
    pub outcome: TransferOutcome,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_record: Option<TravelRuleRecord>,
}

impl TransferDecision {
    fn new(transfer_id: &str, outcome: TransferOutcome, reason: &str) -> Self {
        TransferDecision {
            transfer_id: transfer_id.to_owned(),
            outcome,
            reason: reason.to_owned(),
            travel_record: None,
        }
    }

    fn rejected(transfer_id: &str, reason: &str) -> Self {
        Self::new(transfer_id, TransferOutcome::Rejected, reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangePolicy {
    pub jurisdiction: String,
    /// Transfers at or above this amount require identity disclosure.
    pub disclosure_threshold: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KycRecord {
    pub account: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeConfig {
    pub id: String,
    pub policy: ExchangePolicy,
    #[serde(default)]
    pub kyc: Vec<KycRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutgoingState {
    AwaitingAttestationRequest,
    AttestationServed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutgoingTransfer {
    pub request: TransferRequest,
    pub state: OutgoingState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncomingTransfer {
    pub origin_exchange: String,
    pub request: TransferRequest,
    pub attestation: Option<CounterSignedAttestation>,
    pub decision: Option<TransferDecision>,
}

#[derive(Debug, Clone)]
pub struct Exchange {
    config: ExchangeConfig,
    trust: TrustStore,
    customers: BTreeMap<String, CounterSignedAttestation>,
    kyc: BTreeMap<String, String>,
    outgoing: BTreeMap<String, OutgoingTransfer>,
    incoming: BTreeMap<String, IncomingTransfer>,
}

impl Exchange {
    pub fn new(config: ExchangeConfig, trust: TrustStore) -> Self {
        let kyc = config.kyc.iter().map(|r| (r.account.clone(), r.name.clone())).collect();
        Exchange {
            config,
            trust,
            customers: BTreeMap::new(),
            kyc,
            outgoing: BTreeMap::new(),
            incoming: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn policy(&self) -> &ExchangePolicy {
        &self.config.policy
    }

    pub fn trust_mut(&mut self) -> &mut TrustStore {
        &mut self.trust
    }

    pub fn add_kyc(&mut self, account: impl Into<String>, name: impl Into<String>) {
        self.kyc.insert(account.into(), name.into());
    }

    /// Bind an account to the member's countersigned attestation.
    pub fn register_customer(
        &mut self,
        account: &str,
        csa: CounterSignedAttestation,
        now: Tick,
    ) -> Result<(), TravelRuleError> {
        if self.customers.contains_key(account) {
            return Err(TravelRuleError::DuplicateAccount(account.to_owned()));
        }
        let report = self
            .trust
            .verify(&csa, now)
            .map_err(|e| TravelRuleError::InvalidAttestation(e.to_string()))?;
        if !report.passed() {
            let failed: Vec<_> = report
                .lines()
                .into_iter()
                .filter(|(_, ok)| !ok)
                .map(|(n, _)| n)
                .collect();
            return Err(TravelRuleError::InvalidAttestation(failed.join(", ")));
        }
        self.customers.insert(account.to_owned(), csa);
        Ok(())
    }

    pub fn customer_attestation(&self, account: &str) -> Option<&CounterSignedAttestation> {
        self.customers.get(account)
    }

    pub fn customers(&self) -> impl Iterator<Item = (&str, &CounterSignedAttestation)> {
        self.customers.iter().map(|(a, c)| (a.as_str(), c))
    }

    /// Fault injection only.
    pub(crate) fn customer_attestation_mut(&mut self, account: &str) -> Option<&mut CounterSignedAttestation> {
        self.customers.get_mut(account)
    }

    /// Record an outgoing transfer; the caller delivers the returned request
    /// to the beneficiary exchange.
    pub fn originate_transfer(&mut self, req: TransferRequest) -> Result<TransferRequest, TravelRuleError> {
        req.validate()?;
        if !self.customers.contains_key(&req.originator_account) {
            return Err(TravelRuleError::UnknownAccount(req.originator_account));
        }
        if self.outgoing.contains_key(&req.transfer_id) {
            return Err(TravelRuleError::DuplicateTransfer(req.transfer_id));
        }
        self.outgoing.insert(
            req.transfer_id.clone(),
            OutgoingTransfer {
                request: req.clone(),
                state: OutgoingState::AwaitingAttestationRequest,
            },
        );
        Ok(req)
    }

    pub fn outgoing(&self, transfer_id: &str) -> Option<&OutgoingTransfer> {
        self.outgoing.get(transfer_id)
    }

    /// Beneficiary side: note an incoming transfer message.
    pub fn receive_transfer(&mut self, origin_exchange: &str, req: TransferRequest) -> Result<(), TravelRuleError> {
        req.validate()?;
        if self.incoming.contains_key(&req.transfer_id) {
            return Err(TravelRuleError::DuplicateTransfer(req.transfer_id));
        }
        self.incoming.insert(
            req.transfer_id.clone(),
            IncomingTransfer {
                origin_exchange: origin_exchange.to_owned(),
                request: req,
                attestation: None,
                decision: None,
            },
        );
        Ok(())
    }

    pub fn incoming(&self, transfer_id: &str) -> Option<&IncomingTransfer> {
        self.incoming.get(transfer_id)
    }

    /// Origin side of the direct channel: hand out the attestation
    /// registered for the transfer's originator. Repeatable.
    pub fn serve_attestation_request(
        &mut self,
        transfer_id: &str,
    ) -> Result<CounterSignedAttestation, TravelRuleError> {
        let t = self
            .outgoing
            .get_mut(transfer_id)
            .ok_or_else(|| TravelRuleError::UnknownTransfer(transfer_id.to_owned()))?;
        let csa = self
            .customers
            .get(&t.request.originator_account)
            .ok_or_else(|| TravelRuleError::UnknownAccount(t.request.originator_account.clone()))?;
        t.state = OutgoingState::AttestationServed;
        Ok(csa.clone())
    }

    /// Beneficiary side: fetch the originator's attestation from the origin
    /// exchange and keep it with the incoming transfer.
    pub fn request_attestation(
        &mut self,
        origin: &mut Exchange,
        transfer_id: &str,
    ) -> Result<CounterSignedAttestation, TravelRuleError> {
        let csa = origin.serve_attestation_request(transfer_id)?;
        self.receive_attestation(transfer_id, csa.clone())?;
        Ok(csa)
    }

    pub fn receive_attestation(
        &mut self,
        transfer_id: &str,
        csa: CounterSignedAttestation,
    ) -> Result<(), TravelRuleError> {
        let t = self
            .incoming
            .get_mut(transfer_id)
            .ok_or_else(|| TravelRuleError::UnknownTransfer(transfer_id.to_owned()))?;
        t.attestation = Some(csa);
        Ok(())
    }

    /// Evaluate using the attestation already received for the transfer.
    pub fn evaluate_pending(
        &mut self,
        transfer_id: &str,
        now: Tick,
        contact: &mut dyn LegalContact,
    ) -> Result<TransferDecision, TravelRuleError> {
        let csa = self
            .incoming
            .get(transfer_id)
            .ok_or_else(|| TravelRuleError::UnknownTransfer(transfer_id.to_owned()))?
            .attestation
            .clone()
            .ok_or_else(|| TravelRuleError::NoAttestationOnFile(transfer_id.to_owned()))?;
        self.evaluate_transfer(transfer_id, &csa, now, contact)
    }

    /// Verify, revalidate, then disclose if the amount requires it.
    pub fn evaluate_transfer(
        &mut self,
        transfer_id: &str,
        csa: &CounterSignedAttestation,
        now: Tick,
        contact: &mut dyn LegalContact,
    ) -> Result<TransferDecision, TravelRuleError> {
        let req = self
            .incoming
            .get(transfer_id)
            .ok_or_else(|| TravelRuleError::NoAttestationOnFile(transfer_id.to_owned()))?
            .request
            .clone();
        let decision = self.decide(&req, csa, now, contact);
        let t = self.incoming.get_mut(transfer_id).expect("checked above");
        t.attestation = Some(csa.clone());
        t.decision = Some(decision.clone());
        Ok(decision)
    }

    fn decide(
        &self,
        req: &TransferRequest,
        csa: &CounterSignedAttestation,
        now: Tick,
        contact: &mut dyn LegalContact,
    ) -> TransferDecision {
        let id = &req.transfer_id;
        match self.trust.verify(csa, now) {
            Err(TrustError::UntrustedIssuer(_)) => return TransferDecision::rejected(id, "untrusted-issuer"),
            Err(TrustError::UntrustedNotary(_)) => return TransferDecision::rejected(id, "untrusted-notary"),
            Ok(r) if r.only_expired() => return TransferDecision::rejected(id, "expired"),
            Ok(r) if !r.passed() => return TransferDecision::rejected(id, "attestation-invalid"),
            Ok(_) => {}
        }
        let attestation_id = csa.attestation_id();
        match contact.revalidate(&csa.notary_id, &attestation_id, now) {
            Status::Valid => {}
            Status::Revoked => return TransferDecision::rejected(id, "revoked"),
            Status::Expired => return TransferDecision::rejected(id, "expired"),
            Status::Unknown => return TransferDecision::rejected(id, "unknown-attestation"),
        }
        if req.amount < self.config.policy.disclosure_threshold {
            return TransferDecision::new(id, TransferOutcome::Accepted, "below-threshold");
        }
        let response = contact.disclose(
            &csa.notary_id,
            &attestation_id,
            &self.config.policy.jurisdiction,
            Purpose::TravelRule,
            now,
        );
        match response.outcome {
            DisclosureOutcome::Disclosed => {}
            DisclosureOutcome::DeniedJurisdiction => {
                return TransferDecision::new(id, TransferOutcome::HeldPendingDisclosure, "denied-jurisdiction")
            }
            DisclosureOutcome::UnknownAttestation => return TransferDecision::rejected(id, "unknown-attestation"),
        }
        // the disclosed plain attestation must be the one this blinded copy commits to
        let bound = response.plain.as_ref().is_some_and(|p| {
            digest(&p.canonical_bytes()) == csa.blinded.plain_digest
                && self
                    .trust
                    .issuer_key(&p.issuer_key_id)
                    .is_some_and(|k| p.verify_issuer(k))
                && response.subject.as_deref() == Some(p.subject.value.as_str())
        });
        if !bound {
            return TransferDecision::rejected(id, "disclosure-mismatch");
        }
        let Some(beneficiary_name) = self.kyc.get(&req.beneficiary_account) else {
            return TransferDecision::rejected(id, "unknown-beneficiary");
        };
        match assemble_travel_record(&response, req, beneficiary_name) {
            Ok(record) => TransferDecision {
                travel_record: Some(record),
                ..TransferDecision::new(id, TransferOutcome::Accepted, "disclosed")
            },
            Err(TravelRuleError::MissingResidenceAttribute) => {
                TransferDecision::rejected(id, "missing-residence-attribute")
            }
            Err(_) => TransferDecision::rejected(id, "not-disclosed"),
        }
    }
}

/// Build the customer-information record from a disclosure, the transfer
/// request and the beneficiary exchange's own KYC name.
pub fn assemble_travel_record(
    disclosure: &DisclosureResponse,
    req: &TransferRequest,
    beneficiary_name: &str,
) -> Result<TravelRuleRecord, TravelRuleError> {
    if disclosure.outcome != DisclosureOutcome::Disclosed {
        return Err(TravelRuleError::NotDisclosed);
    }
    let (Some(subject), Some(plain)) = (&disclosure.subject, &disclosure.plain) else {
        return Err(TravelRuleError::NotDisclosed);
    };
    let residence = plain
        .attributes
        .iter()
        .find(|a| a.name == RESIDENCE_COUNTRY)
        .ok_or(TravelRuleError::MissingResidenceAttribute)?;
    Ok(TravelRuleRecord {
        originator_name: subject.clone(),
        originator_account: req.originator_account.clone(),
        originator_address_or_id: residence.value.clone(),
        beneficiary_name: beneficiary_name.to_owned(),
        beneficiary_account: req.beneficiary_account.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attestation::SubjectMode;
    use crate::cooperative::{fields, Cooperative, CooperativeConfig, DerivationRules, MemberRecord, AGE_OVER_18};
    use crate::notary::{ForwardingContact, JurisdictionPolicy, Notary, NotaryConfig};

    struct World {
        coop: Cooperative,
        notary: Notary,
        e1: Exchange,
        e2: Exchange,
    }

    fn world(beneficiary_jurisdiction: &str) -> World {
        let mut coop = Cooperative::new(CooperativeConfig {
            id: "coop-1".into(),
            key_seed: b"coop-1".to_vec(),
            rng_seed: b"rng".to_vec(),
            legal_rep_id: "notary-1".into(),
            rules: DerivationRules::default(),
            members: vec![],
        })
        .unwrap();
        coop.register_member(MemberRecord {
            member_id: "alice".into(),
            legal_identity: "alice-legal-001".into(),
            personal_data: [
                (fields::RESIDENCE.to_string(), "NL".to_string()),
                (fields::DATE_OF_BIRTH.to_string(), "0".to_string()),
            ]
            .into(),
            handle: None,
        })
        .unwrap();
        let mut notary = Notary::new(NotaryConfig {
            id: "notary-1".into(),
            key_seed: b"notary-1".to_vec(),
            policy: JurisdictionPolicy {
                notary_jurisdiction: "US".into(),
                compatible: ["US".to_string(), "EU".to_string()].into(),
            },
            trusted_issuers: vec![],
        })
        .unwrap();
        notary.trust_issuer(coop.public_key());
        let mut trust = TrustStore::default();
        trust.trust_issuer(coop.public_key());
        trust.trust_notary(notary.public_key());
        let policy = |j: &str| ExchangePolicy {
            jurisdiction: j.into(),
            disclosure_threshold: 1000,
        };
        let e1 = Exchange::new(
            ExchangeConfig {
                id: "E1".into(),
                policy: policy("US"),
                kyc: vec![],
            },
            trust.clone(),
        );
        let e2 = Exchange::new(
            ExchangeConfig {
                id: "E2".into(),
                policy: policy(beneficiary_jurisdiction),
                kyc: vec![KycRecord {
                    account: "acct-bob".into(),
                    name: "bob-legal-0002".into(),
                }],
            },
            trust,
        );
        World { coop, notary, e1, e2 }
    }

    fn issue(w: &mut World, queries: &[&str], now: Tick) -> CounterSignedAttestation {
        let q: Vec<String> = queries.iter().map(|s| s.to_string()).collect();
        let (p, b) = w
            .coop
            .issue_blinded("alice", &q, SubjectMode::Absent, now, 100)
            .unwrap();
        w.notary.witness_trusted(&p, &b, now).unwrap()
    }

    fn transfer(id: &str, amount: u64) -> TransferRequest {
        TransferRequest {
            transfer_id: id.into(),
            originator_account: "acct-alice".into(),
            beneficiary_account: "acct-bob".into(),
            beneficiary_exchange: "E2".into(),
            asset: "BTC".into(),
            amount,
            requested_at: 5,
        }
    }

    fn run(w: &mut World, id: &str, amount: u64, now: Tick) -> TransferDecision {
        let req = w.e1.originate_transfer(transfer(id, amount)).unwrap();
        w.e2.receive_transfer("E1", req).unwrap();
        w.e2.request_attestation(&mut w.e1, id).unwrap();
        let mut contact = ForwardingContact {
            notary: &mut w.notary,
            cooperative: &w.coop,
        };
        w.e2.evaluate_pending(id, now, &mut contact).unwrap()
    }

    #[test]
    fn registration_rules() {
        let mut w = world("US");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY], 0);
        assert!(matches!(
            w.e1.register_customer("acct-alice", csa.clone(), 100),
            Err(TravelRuleError::InvalidAttestation(_))
        ));
        w.e1.register_customer("acct-alice", csa.clone(), 1).unwrap();
        assert_eq!(
            w.e1.register_customer("acct-alice", csa, 1),
            Err(TravelRuleError::DuplicateAccount("acct-alice".into()))
        );
    }

    #[test]
    fn originate_and_serve() {
        let mut w = world("US");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY], 0);
        assert_eq!(
            w.e1.originate_transfer(transfer("t1", 5)),
            Err(TravelRuleError::UnknownAccount("acct-alice".into()))
        );
        w.e1.register_customer("acct-alice", csa.clone(), 1).unwrap();
        w.e1.originate_transfer(transfer("t1", 5)).unwrap();
        assert_eq!(
            w.e1.originate_transfer(transfer("t1", 5)),
            Err(TravelRuleError::DuplicateTransfer("t1".into()))
        );
        assert_eq!(w.e1.serve_attestation_request("t1").unwrap(), csa);
        assert_eq!(w.e1.serve_attestation_request("t1").unwrap(), csa);
        assert_eq!(w.e1.outgoing("t1").unwrap().state, OutgoingState::AttestationServed);
        assert_eq!(
            w.e1.serve_attestation_request("nope"),
            Err(TravelRuleError::UnknownTransfer("nope".into()))
        );
    }

    #[test]
    fn below_threshold_accepts_without_disclosure() {
        let mut w = world("US");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY], 0);
        w.e1.register_customer("acct-alice", csa, 1).unwrap();
        let d = run(&mut w, "t1", 999, 5);
        assert_eq!(d.outcome, TransferOutcome::Accepted);
        assert!(d.travel_record.is_none());
        assert!(w.notary.audit_log().is_empty());
    }

    #[test]
    fn above_threshold_discloses_all_fields() {
        let mut w = world("US");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY, AGE_OVER_18], 0);
        w.e1.register_customer("acct-alice", csa, 1).unwrap();
        let d = run(&mut w, "t1", 1000, 5);
        assert_eq!(d.outcome, TransferOutcome::Accepted);
        let r = d.travel_record.unwrap();
        assert!(r.is_complete());
        assert_eq!(r.originator_name, "alice-legal-001");
        assert_eq!(r.originator_account, "acct-alice");
        assert_eq!(r.originator_address_or_id, "NL");
        assert_eq!(r.beneficiary_name, "bob-legal-0002");
        assert_eq!(r.beneficiary_account, "acct-bob");
    }

    #[test]
    fn incompatible_jurisdiction_held() {
        let mut w = world("XX");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY], 0);
        w.e1.register_customer("acct-alice", csa, 1).unwrap();
        let d = run(&mut w, "t1", 5000, 5);
        assert_eq!(d.outcome, TransferOutcome::HeldPendingDisclosure);
        assert!(d.travel_record.is_none());
    }

    #[test]
    fn revoked_after_registration_rejected() {
        let mut w = world("US");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY], 0);
        w.e1.register_customer("acct-alice", csa.clone(), 1).unwrap();
        w.coop.revoke(&csa.attestation_id(), 3).unwrap();
        let d = run(&mut w, "t1", 10, 5);
        assert_eq!((d.outcome, d.reason.as_str()), (TransferOutcome::Rejected, "revoked"));
    }

    #[test]
    fn missing_residence_rejected_and_assembler_errors() {
        let mut w = world("US");
        let csa = issue(&mut w, &[AGE_OVER_18], 0);
        w.e1.register_customer("acct-alice", csa.clone(), 1).unwrap();
        let d = run(&mut w, "t1", 5000, 5);
        assert_eq!(d.reason, "missing-residence-attribute");
        assert_eq!(d.outcome, TransferOutcome::Rejected);

        let denied = w
            .notary
            .respond_disclosure(&csa.attestation_id(), "XX", Purpose::TravelRule, 6);
        assert_eq!(
            assemble_travel_record(&denied, &transfer("t1", 1), "bob"),
            Err(TravelRuleError::NotDisclosed)
        );
    }

    #[test]
    fn tampered_attestation_never_accepted() {
        let mut w = world("US");
        let csa = issue(&mut w, &[RESIDENCE_COUNTRY], 0);
        w.e1.register_customer("acct-alice", csa.clone(), 1).unwrap();
        let req = w.e1.originate_transfer(transfer("t1", 10)).unwrap();
        w.e2.receive_transfer("E1", req).unwrap();
        let mut bad = csa;
        bad.blinded.attributes[0].value = "US".into();
        let mut contact = ForwardingContact {
            notary: &mut w.notary,
            cooperative: &w.coop,
        };
        let d = w.e2.evaluate_transfer("t1", &bad, 5, &mut contact).unwrap();
        assert_eq!(
            (d.outcome, d.reason.as_str()),
            (TransferOutcome::Rejected, "attestation-invalid")
        );
        assert!(matches!(
            w.e2.evaluate_pending("t2", 5, &mut contact),
            Err(TravelRuleError::UnknownTransfer(_))
        ));
    }
}
