//! Library-level flows across modules, without the scenario runner.

use proptest::prelude::*;
use serde_bytes::ByteBuf;

use coop_attest::attestation::{AttestationDoc, CounterSignedAttestation, SubjectMode, TrustStore};
use coop_attest::cooperative::{
    fields, Cooperative, CooperativeConfig, CooperativeState, DerivationRules, MemberRecord, Status, GOOD_STANDING,
    RESIDENCE_COUNTRY,
};
use coop_attest::crypto::{self, KeyPair};
use coop_attest::ledger::{Ledger, Payload};
use coop_attest::notary::{ForwardingContact, JurisdictionPolicy, Notary, NotaryConfig, NotaryState};
use coop_attest::travel_rule::{Exchange, ExchangeConfig, ExchangePolicy, KycRecord, TransferOutcome, TransferRequest};

fn member(id: &str, legal: &str) -> MemberRecord {
    MemberRecord {
        member_id: id.into(),
        legal_identity: legal.into(),
        personal_data: [
            (fields::RESIDENCE.to_owned(), "NL".to_owned()),
            (fields::STANDING.to_owned(), "good".to_owned()),
        ]
        .into(),
        handle: Some(format!("@{id}")),
    }
}

fn coop() -> Cooperative {
    Cooperative::new(CooperativeConfig {
        id: "coop-1".into(),
        key_seed: b"protocol coop".to_vec(),
        rng_seed: b"protocol coop rng".to_vec(),
        legal_rep_id: "notary-1".into(),
        rules: DerivationRules::default(),
        members: vec![
            member("alice", "Alice Protocol-Tester"),
            member("carol", "Carol Protocol-Tester"),
        ],
    })
    .unwrap()
}

fn notary(coop: &Cooperative) -> Notary {
    Notary::new(NotaryConfig {
        id: "notary-1".into(),
        key_seed: b"protocol notary".to_vec(),
        policy: JurisdictionPolicy {
            notary_jurisdiction: "US".into(),
            compatible: ["US".to_owned(), "EU".to_owned()].into(),
        },
        trusted_issuers: vec![ByteBuf::from(coop.public_key().to_vec())],
    })
    .unwrap()
}

fn issue(coop: &mut Cooperative, notary: &mut Notary, who: &str, now: u64, ttl: u64) -> CounterSignedAttestation {
    let (plain, blinded) = coop
        .issue_blinded(who, &[RESIDENCE_COUNTRY.into()], SubjectMode::Absent, now, ttl)
        .unwrap();
    notary.witness_trusted(&plain, &blinded, now).unwrap()
}

fn exchange(id: &str, jurisdiction: &str, coop: &Cooperative, notary: &Notary) -> Exchange {
    let mut trust = TrustStore::default();
    trust.trust_issuer(coop.public_key());
    trust.trust_notary(notary.public_key());
    Exchange::new(
        ExchangeConfig {
            id: id.into(),
            policy: ExchangePolicy {
                jurisdiction: jurisdiction.into(),
                disclosure_threshold: 1000,
            },
            kyc: vec![KycRecord {
                account: "acct-bob".into(),
                name: "Bob Beneficiary".into(),
            }],
        },
        trust,
    )
}

fn request(id: &str, account: &str, amount: u64, at: u64) -> TransferRequest {
    TransferRequest {
        transfer_id: id.into(),
        originator_account: account.into(),
        beneficiary_account: "acct-bob".into(),
        beneficiary_exchange: "E2".into(),
        asset: "ETH".into(),
        amount,
        requested_at: at,
    }
}

fn send(
    e1: &mut Exchange,
    e2: &mut Exchange,
    req: TransferRequest,
    notary: &mut Notary,
    coop: &Cooperative,
) -> coop_attest::travel_rule::TransferDecision {
    let now = req.requested_at;
    let id = req.transfer_id.clone();
    let req = e1.originate_transfer(req).unwrap();
    e2.receive_transfer(e1.id(), req).unwrap();
    e2.request_attestation(e1, &id).unwrap();
    let mut contact = ForwardingContact {
        notary,
        cooperative: coop,
    };
    e2.evaluate_pending(&id, now, &mut contact).unwrap()
}

#[test]
fn travel_rule_across_exchanges_with_revocation() {
    let mut coop = coop();
    let mut notary = notary(&coop);
    let csa = issue(&mut coop, &mut notary, "alice", 10, 100);
    let mut e1 = exchange("E1", "US", &coop, &notary);
    let mut e2 = exchange("E2", "EU", &coop, &notary);
    e1.register_customer("acct-alice", csa.clone(), 11).unwrap();

    let small = send(
        &mut e1,
        &mut e2,
        request("t-1", "acct-alice", 999, 12),
        &mut notary,
        &coop,
    );
    assert_eq!(
        (small.outcome, small.reason.as_str()),
        (TransferOutcome::Accepted, "below-threshold")
    );
    assert!(small.travel_record.is_none());

    let large = send(
        &mut e1,
        &mut e2,
        request("t-2", "acct-alice", 1000, 13),
        &mut notary,
        &coop,
    );
    assert_eq!(large.outcome, TransferOutcome::Accepted);
    let record = large.travel_record.unwrap();
    assert_eq!(record.originator_name, "Alice Protocol-Tester");
    assert_eq!(record.originator_address_or_id, "NL");
    assert_eq!(record.beneficiary_name, "Bob Beneficiary");
    assert!(record.is_complete());
    assert_eq!(notary.audit_log().len(), 1);

    coop.revoke(&csa.attestation_id(), 20).unwrap();
    let after = send(
        &mut e1,
        &mut e2,
        request("t-3", "acct-alice", 5, 21),
        &mut notary,
        &coop,
    );
    assert_eq!(
        (after.outcome, after.reason.as_str()),
        (TransferOutcome::Rejected, "revoked")
    );
    // the notary learned the revocation while forwarding
    assert_eq!(notary.mirror().revoked_at(&csa.attestation_id()), Some(21));
}

#[test]
fn incompatible_beneficiary_jurisdiction_holds() {
    let mut coop = coop();
    let mut notary = notary(&coop);
    let csa = issue(&mut coop, &mut notary, "alice", 0, 100);
    let mut e1 = exchange("E1", "US", &coop, &notary);
    let mut e2 = exchange("E2", "XX", &coop, &notary);
    e1.register_customer("acct-alice", csa, 1).unwrap();
    let d = send(
        &mut e1,
        &mut e2,
        request("t-1", "acct-alice", 50_000, 2),
        &mut notary,
        &coop,
    );
    assert_eq!(d.outcome, TransferOutcome::HeldPendingDisclosure);
    assert!(d.travel_record.is_none());
}

#[test]
fn registration_rejects_expired_or_foreign_attestations() {
    let mut coop = coop();
    let mut notary = notary(&coop);
    let csa = issue(&mut coop, &mut notary, "alice", 0, 10);
    let mut e1 = exchange("E1", "US", &coop, &notary);
    assert!(e1.register_customer("acct-alice", csa.clone(), 10).is_err());

    let mut stranger = Exchange::new(
        ExchangeConfig {
            id: "E9".into(),
            policy: ExchangePolicy {
                jurisdiction: "US".into(),
                disclosure_threshold: 1,
            },
            kyc: vec![],
        },
        TrustStore::default(),
    );
    assert!(stranger.register_customer("acct-alice", csa, 1).is_err());
}

#[test]
fn state_survives_serialization() {
    let mut coop = coop();
    let mut notary = notary(&coop);
    let csa = issue(&mut coop, &mut notary, "carol", 5, 50);
    coop.revoke(&csa.attestation_id(), 9).unwrap();

    let bytes = coop_attest::canonical::canonical_serialize(&coop.to_state()).unwrap();
    let state: CooperativeState = coop_attest::canonical::canonical_deserialize(&bytes).unwrap();
    let restored = Cooperative::from_state(state).unwrap();
    assert_eq!(restored.revalidation_status(&csa.attestation_id(), 9), Status::Revoked);
    assert_eq!(restored.public_key(), coop.public_key());

    let bytes = coop_attest::canonical::canonical_serialize(&notary.to_state()).unwrap();
    let state: NotaryState = coop_attest::canonical::canonical_deserialize(&bytes).unwrap();
    let restored = Notary::from_state(state).unwrap();
    assert_eq!(
        restored.archive_entry(&csa.attestation_id()).unwrap().countersigned,
        csa
    );

    let doc = AttestationDoc::Countersigned(csa.clone());
    assert_eq!(AttestationDoc::from_bytes(&doc.to_bytes()).unwrap(), doc);
}

fn ledger_with_posts(bodies: &[Vec<u8>]) -> (Ledger, KeyPair) {
    let mut coop = coop();
    let mut notary = notary(&coop);
    let (plain, blinded) = coop
        .issue_blinded("alice", &[GOOD_STANDING.into()], SubjectMode::Handle, 0, 1000)
        .unwrap();
    let csa = notary.witness_trusted(&plain, &blinded, 0).unwrap();
    let writer = crypto::keygen(b"protocol provider").unwrap();
    let mut ledger = Ledger::new("P1", writer.public());
    let att = ledger.append(&writer, Payload::Attestation { csa }).unwrap();
    for (i, body) in bodies.iter().enumerate() {
        let payload = Payload::Post {
            post_digest: crypto::digest(body),
            attestation_ptr: att.clone(),
            posted_at: i as u64,
        };
        ledger.append(&writer, payload).unwrap();
    }
    (ledger, writer)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dumped_ledgers_reload_and_verify(bodies in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..16), 0..8)) {
        let (ledger, writer) = ledger_with_posts(&bodies);
        prop_assert!(ledger.verify_chain());
        let reloaded = Ledger::load("P1", writer.public(), &ledger.dump()).unwrap();
        prop_assert!(reloaded.verify_chain());
        prop_assert_eq!(reloaded.records(), ledger.records());
        for body in &bodies {
            let hits = ledger.find_by_post_digest(&crypto::digest(body));
            let same = bodies.iter().filter(|b| *b == body).count();
            prop_assert_eq!(hits.len(), same);
        }
    }

    #[test]
    fn mutated_ledger_dumps_never_reload_as_valid(
        bodies in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 1..8), 1..4),
        pos in any::<prop::sample::Index>(),
        delta in 1u8..=255,
    ) {
        let (ledger, writer) = ledger_with_posts(&bodies);
        let mut bytes = ledger.dump();
        let at = pos.index(bytes.len());
        bytes[at] ^= delta;
        if let Ok(reloaded) = Ledger::load("P1", writer.public(), &bytes) {
            prop_assert!(reloaded.records() == ledger.records() || !reloaded.verify_chain());
        }
    }

    #[test]
    fn status_follows_precedence(issue_at in 0u64..50, ttl in 1u64..50, revoke_after in proptest::option::of(0u64..80), q in 0u64..150) {
        let mut coop = coop();
        let (_, blinded) = coop.issue_blinded("alice", &[RESIDENCE_COUNTRY.into()], SubjectMode::Absent, issue_at, ttl).unwrap();
        let id = blinded.attestation_id;
        let revoke_at = revoke_after.map(|r| issue_at + r);
        if let Some(r) = revoke_at {
            coop.revoke(&id, r).unwrap();
        }
        let want = match revoke_at {
            Some(r) if q >= r => Status::Revoked,
            _ if q >= issue_at + ttl => Status::Expired,
            _ => Status::Valid,
        };
        prop_assert_eq!(coop.revalidation_status(&id, q), want);
    }
}
