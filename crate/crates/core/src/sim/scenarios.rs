//! Bundled scenarios. The files under `fixtures/scenarios` are the
//! canonical encodings of these configs.

use crate::attestation::SubjectMode;
use crate::cooperative::{fields, DerivationRules, MemberRecord, GOOD_STANDING, RESIDENCE_COUNTRY};
use crate::travel_rule::KycRecord;

use super::{
    Action, CooperativeDecl, ExchangeDecl, NotaryDecl, ProviderDecl, ScenarioConfig, ScriptStep, TamperField,
    TamperTarget,
};

pub const NAMES: [&str; 11] = [
    "travel_rule_basic",
    "travel_rule_disclosure",
    "travel_rule_revoked",
    "travel_rule_hold",
    "travel_rule_faults",
    "dsn_bot_flood",
    "dsn_duplicate_digest",
    "dsn_recovery",
    "dsn_port_local",
    "dsn_fanout",
    "dsn_dispute",
];

pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "travel_rule_basic" => travel_rule_basic(),
        "travel_rule_disclosure" => travel_rule_disclosure(),
        "travel_rule_revoked" => travel_rule_revoked(),
        "travel_rule_hold" => travel_rule_hold(),
        "travel_rule_faults" => travel_rule_faults(),
        "dsn_bot_flood" => dsn_bot_flood(),
        "dsn_duplicate_digest" => dsn_duplicate_digest(),
        "dsn_recovery" => dsn_recovery(),
        "dsn_port_local" => dsn_port_local(),
        "dsn_fanout" => dsn_fanout(),
        "dsn_dispute" => dsn_dispute(),
        _ => return None,
    })
}

pub fn all() -> Vec<(&'static str, ScenarioConfig)> {
    NAMES.iter().map(|n| (*n, by_name(n).expect("listed"))).collect()
}

fn s(x: &str) -> String {
    x.to_owned()
}

fn step(tick: u64, action: Action) -> ScriptStep {
    ScriptStep { tick, action }
}

fn member(id: &str, legal: &str, residence: &str, handle: Option<&str>) -> MemberRecord {
    MemberRecord {
        member_id: s(id),
        legal_identity: s(legal),
        personal_data: [
            (s(fields::RESIDENCE), s(residence)),
            (s(fields::STANDING), s("good")),
            (s(fields::INCOME), s("52000")),
        ]
        .into(),
        handle: handle.map(s),
    }
}

fn coop(id: &str, notary: &str, members: Vec<MemberRecord>) -> CooperativeDecl {
    CooperativeDecl {
        id: s(id),
        legal_rep_id: s(notary),
        rules: DerivationRules::default(),
        members,
    }
}

fn notary(id: &str, compatible: &[&str]) -> NotaryDecl {
    NotaryDecl {
        id: s(id),
        jurisdiction: s("US"),
        compatible: compatible.iter().map(|c| s(c)).collect(),
    }
}

fn issue(coop: &str, member: &str, attrs: &[&str], mode: SubjectMode, ttl: u64, label: &str) -> Action {
    Action::Issue {
        cooperative: s(coop),
        member: s(member),
        attributes: attrs.iter().map(|a| s(a)).collect(),
        mode,
        ttl,
        label: s(label),
    }
}

fn register(account: &str, label: &str) -> Action {
    Action::Register {
        exchange: s("E1"),
        account: s(account),
        attestation: s(label),
    }
}

fn transfer(id: &str, account: &str, amount: u64) -> Action {
    Action::Transfer {
        origin: s("E1"),
        transfer_id: s(id),
        originator_account: s(account),
        beneficiary_account: s("acct-bob"),
        beneficiary_exchange: s("E2"),
        asset: s("BTC"),
        amount,
    }
}

fn exchange(id: &str, jurisdiction: &str) -> ExchangeDecl {
    ExchangeDecl {
        id: s(id),
        jurisdiction: s(jurisdiction),
        disclosure_threshold: 1000,
        kyc: vec![KycRecord {
            account: s("acct-bob"),
            name: s("bob-legal-0002"),
        }],
        trusted_notaries: None,
    }
}

/// One cooperative, one notary, an originating and a beneficiary exchange,
/// and alice registered at E1.
fn travel_rule(beneficiary_jurisdiction: &str, seed: &str) -> ScenarioConfig {
    ScenarioConfig {
        seed: seed.as_bytes().to_vec(),
        tick_limit: 100,
        cooperatives: vec![coop(
            "coop-1",
            "notary-1",
            vec![member("alice", "alice-legal-001", "NL", None)],
        )],
        notaries: vec![notary("notary-1", &["EU", "US"])],
        exchanges: vec![exchange("E1", "US"), exchange("E2", beneficiary_jurisdiction)],
        providers: vec![],
        script: vec![
            step(
                0,
                issue(
                    "coop-1",
                    "alice",
                    &[RESIDENCE_COUNTRY, GOOD_STANDING],
                    SubjectMode::Absent,
                    50,
                    "alice-att",
                ),
            ),
            step(1, register("acct-alice", "alice-att")),
        ],
    }
}

pub fn travel_rule_basic() -> ScenarioConfig {
    let mut c = travel_rule("US", "travel-rule-basic");
    c.script.push(step(2, transfer("t-1", "acct-alice", 500)));
    c
}

pub fn travel_rule_disclosure() -> ScenarioConfig {
    let mut c = travel_rule("US", "travel-rule-disclosure");
    c.script.push(step(2, transfer("t-1", "acct-alice", 5000)));
    c
}

pub fn travel_rule_revoked() -> ScenarioConfig {
    let mut c = travel_rule("US", "travel-rule-revoked");
    c.script.push(step(
        2,
        Action::Revoke {
            attestation: s("alice-att"),
        },
    ));
    c.script.push(step(3, transfer("t-1", "acct-alice", 500)));
    c
}

pub fn travel_rule_hold() -> ScenarioConfig {
    let mut c = travel_rule("XX", "travel-rule-hold");
    c.script.push(step(2, transfer("t-1", "acct-alice", 5000)));
    c
}

/// One control transfer plus one per injected fault.
pub fn travel_rule_faults() -> ScenarioConfig {
    let people = [
        ("carol", "carol-legal-003"),
        ("dave", "dave-legal-0004"),
        ("erin", "erin-legal-0005"),
        ("grace", "grace-legal-006"),
        ("henry", "henry-legal-007"),
        ("ivan", "ivan-legal-0008"),
    ];
    let mut c = travel_rule("US", "travel-rule-faults");
    for (id, legal) in people {
        c.cooperatives[0].members.push(member(id, legal, "DE", None));
    }
    c.cooperatives.push(coop(
        "coop-2",
        "notary-2",
        vec![member("frank", "frank-legal-009", "FR", None)],
    ));
    c.notaries.push(notary("notary-2", &["US"]));
    c.exchanges[1].trusted_notaries = Some(vec![s("notary-1")]);

    let attrs = [RESIDENCE_COUNTRY];
    let mut issue_steps = Vec::new();
    let mut register_steps = Vec::new();
    for id in ["carol", "dave", "erin", "grace", "henry", "ivan", "frank"] {
        let coop_id = if id == "frank" { "coop-2" } else { "coop-1" };
        let ttl = if id == "dave" { 10 } else { 50 };
        let label = format!("{id}-att");
        issue_steps.push(step(0, issue(coop_id, id, &attrs, SubjectMode::Absent, ttl, &label)));
        register_steps.push(step(1, register(&format!("acct-{id}"), &label)));
    }
    c.script.splice(1..1, issue_steps);
    c.script.extend(register_steps);

    let at_exchange = |account: &str, field| Action::Tamper {
        target: TamperTarget::ExchangeCustomer {
            exchange: s("E1"),
            account: s(account),
        },
        field,
    };
    c.script
        .push(step(2, at_exchange("acct-carol", TamperField::AttributeValue)));
    c.script
        .push(step(2, at_exchange("acct-grace", TamperField::IssuerSignature)));
    c.script
        .push(step(2, at_exchange("acct-henry", TamperField::NotarySignature)));
    c.script.push(step(2, at_exchange("acct-ivan", TamperField::ExpiresAt)));
    c.script.push(step(
        2,
        Action::Revoke {
            attestation: s("erin-att"),
        },
    ));
    c.script.push(step(20, transfer("t-alice", "acct-alice", 5000)));
    for id in ["carol", "dave", "erin", "grace", "henry", "ivan", "frank"] {
        c.script
            .push(step(20, transfer(&format!("t-{id}"), &format!("acct-{id}"), 5000)));
    }
    c
}

fn sender_handle(i: usize) -> String {
    format!("@sender{i}")
}

/// `n` members with handles, every one followed on every provider listed
/// in `follow_on`.
fn dsn(seed: &str, n: usize, providers: &[&str], follow_on: &[&str]) -> ScenarioConfig {
    let members = (0..n)
        .map(|i| {
            member(
                &format!("s{i}"),
                &format!("sender-legal-{i:03}"),
                "NL",
                Some(&sender_handle(i)),
            )
        })
        .collect();
    let handles: Vec<String> = (0..n).map(sender_handle).collect();
    ScenarioConfig {
        seed: seed.as_bytes().to_vec(),
        tick_limit: 100,
        cooperatives: vec![coop("coop-1", "notary-1", members)],
        notaries: vec![notary("notary-1", &["US"])],
        exchanges: vec![],
        providers: providers
            .iter()
            .map(|p| ProviderDecl {
                id: s(p),
                jurisdiction: s("US"),
                prefer_local_port: false,
                follows: if follow_on.contains(p) { handles.clone() } else { vec![] },
            })
            .collect(),
        script: vec![],
    }
}

fn onboard_all(c: &mut ScenarioConfig, homes: &[&str]) {
    let n = c.cooperatives[0].members.len();
    for i in 0..n {
        let label = format!("s{i}-att");
        c.script.push(step(
            0,
            issue(
                "coop-1",
                &format!("s{i}"),
                &[GOOD_STANDING],
                SubjectMode::Handle,
                90,
                &label,
            ),
        ));
    }
    for i in 0..n {
        let home = homes[i % homes.len()];
        c.script.push(step(
            1,
            Action::Onboard {
                provider: s(home),
                handle: sender_handle(i),
                attestation: format!("s{i}-att"),
            },
        ));
    }
}

fn post(handle: &str, body: &str) -> Action {
    Action::Post {
        handle: s(handle),
        body: s(body),
        stale_key: false,
    }
}

fn bot(provider: &str, origin: &str, author: &str, body: &str, count: u64) -> Action {
    Action::InjectBotPost {
        provider: s(provider),
        origin: s(origin),
        author: s(author),
        body: s(body),
        count,
    }
}

/// Three providers, ten attested senders spread across them, 100 bot
/// posts injected at all three.
pub fn dsn_bot_flood() -> ScenarioConfig {
    let providers = ["P1", "P2", "P3"];
    let mut c = dsn("dsn-bot-flood", 10, &providers, &providers);
    onboard_all(&mut c, &providers);
    for i in 0..10 {
        c.script
            .push(step(2, post(&sender_handle(i), &format!("hello from sender {i}"))));
    }
    c.script.push(step(3, bot("P1", "P2", "@bot", "cheap followers", 34)));
    c.script.push(step(3, bot("P2", "P3", "@sender1", "click here", 33)));
    c.script.push(step(3, bot("P3", "P1", "@ghost", "free tokens", 33)));
    c
}

/// Identical bodies from two attested senders and an imposter.
pub fn dsn_duplicate_digest() -> ScenarioConfig {
    let mut c = dsn("dsn-duplicate-digest", 2, &["P1", "P2"], &["P2"]);
    onboard_all(&mut c, &["P1"]);
    c.script.push(step(2, post("@sender0", "gm")));
    c.script.push(step(3, post("@sender0", "gm")));
    c.script.push(step(3, bot("P2", "P1", "@imposter", "gm", 1)));
    c.script.push(step(4, post("@sender1", "gm")));
    c
}

/// Key rotation through the recovery key; the stale attestation stops
/// vouching for posts.
pub fn dsn_recovery() -> ScenarioConfig {
    let mut c = dsn("dsn-recovery", 1, &["P1", "P2", "P3"], &["P2", "P3"]);
    onboard_all(&mut c, &["P1"]);
    c.script.push(step(2, post("@sender0", "before recovery")));
    c.script.push(step(
        5,
        issue("coop-1", "s0", &[GOOD_STANDING], SubjectMode::Handle, 90, "s0-att-2"),
    ));
    c.script.push(step(
        6,
        Action::Recover {
            handle: s("@sender0"),
            attestation: s("s0-att-2"),
            sign_with_signing_key: true,
        },
    ));
    c.script.push(step(
        6,
        Action::Recover {
            handle: s("@sender0"),
            attestation: s("s0-att-2"),
            sign_with_signing_key: false,
        },
    ));
    c.script.push(step(7, post("@sender0", "after recovery")));
    c.script.push(step(
        7,
        Action::Post {
            handle: s("@sender0"),
            body: s("stolen key"),
            stale_key: true,
        },
    ));
    c.script
        .push(step(8, bot("P2", "P1", "@sender0", "before recovery", 1)));
    c
}

/// P2 ports the sender's attestation on first successful check and stops
/// reading P1's ledger for it.
pub fn dsn_port_local() -> ScenarioConfig {
    let mut c = dsn("dsn-port-local", 1, &["P1", "P2"], &["P2"]);
    c.providers[1].prefer_local_port = true;
    onboard_all(&mut c, &["P1"]);
    for (t, body) in [(2, "first"), (3, "second"), (4, "third")] {
        c.script.push(step(t, post("@sender0", body)));
    }
    c
}

/// Four providers; only those hosting followers receive the post.
pub fn dsn_fanout() -> ScenarioConfig {
    let mut c = dsn("dsn-fanout", 1, &["P1", "P2", "P3", "P4"], &["P1", "P2", "P3"]);
    onboard_all(&mut c, &["P1"]);
    c.script.push(step(2, post("@sender0", "to my followers")));
    c
}

/// Disclosure requests from a compatible and an incompatible provider,
/// and for an untraceable post.
pub fn dsn_dispute() -> ScenarioConfig {
    let mut c = dsn("dsn-dispute", 1, &["P1", "P2", "P3"], &["P2", "P3"]);
    c.providers[2].jurisdiction = s("XX");
    onboard_all(&mut c, &["P1"]);
    c.script.push(step(2, post("@sender0", "contested claim")));
    let dispute = |provider: &str, author: &str, body: &str| Action::Dispute {
        provider: s(provider),
        origin: s("P1"),
        author: s(author),
        body: s(body),
    };
    c.script.push(step(3, dispute("P2", "@sender0", "contested claim")));
    c.script.push(step(3, dispute("P3", "@sender0", "contested claim")));
    c.script.push(step(3, dispute("P2", "@bot", "never recorded")));
    c
}
