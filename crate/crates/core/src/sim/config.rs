use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attestation::SubjectMode;
use crate::cooperative::{DerivationRules, MemberRecord};
use crate::travel_rule::KycRecord;
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(with = "serde_bytes")]
    pub seed: Vec<u8>,
    pub tick_limit: Tick,
    #[serde(default)]
    pub cooperatives: Vec<CooperativeDecl>,
    #[serde(default)]
    pub notaries: Vec<NotaryDecl>,
    #[serde(default)]
    pub exchanges: Vec<ExchangeDecl>,
    #[serde(default)]
    pub providers: Vec<ProviderDecl>,
    #[serde(default)]
    pub script: Vec<ScriptStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooperativeDecl {
    pub id: String,
    pub legal_rep_id: String,
    #[serde(default)]
    pub rules: DerivationRules,
    #[serde(default)]
    pub members: Vec<MemberRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotaryDecl {
    pub id: String,
    pub jurisdiction: String,
    #[serde(default)]
    pub compatible: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeDecl {
    pub id: String,
    pub jurisdiction: String,
    pub disclosure_threshold: u64,
    #[serde(default)]
    pub kyc: Vec<KycRecord>,
    /// Notaries whose countersignatures this exchange accepts; all declared
    /// notaries when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trusted_notaries: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderDecl {
    pub id: String,
    pub jurisdiction: String,
    #[serde(default)]
    pub prefer_local_port: bool,
    #[serde(default)]
    pub follows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub tick: Tick,
    pub action: Action,
}

fn one() -> u64 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_one(n: &u64) -> bool {
    *n == 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    /// Issue a pair, have it witnessed, deliver the result to the member
    /// under `label`.
    Issue {
        cooperative: String,
        member: String,
        attributes: Vec<String>,
        mode: SubjectMode,
        ttl: u64,
        label: String,
    },
    Register {
        exchange: String,
        account: String,
        attestation: String,
    },
    Transfer {
        origin: String,
        transfer_id: String,
        originator_account: String,
        beneficiary_account: String,
        beneficiary_exchange: String,
        asset: String,
        amount: u64,
    },
    Revoke {
        attestation: String,
    },
    Onboard {
        provider: String,
        handle: String,
        attestation: String,
    },
    Post {
        handle: String,
        body: String,
        #[serde(default, skip_serializing_if = "is_false")]
        stale_key: bool,
    },
    InjectBotPost {
        provider: String,
        origin: String,
        author: String,
        body: String,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        count: u64,
    },
    Recover {
        handle: String,
        attestation: String,
        #[serde(default, skip_serializing_if = "is_false")]
        sign_with_signing_key: bool,
    },
    Dispute {
        provider: String,
        origin: String,
        author: String,
        body: String,
    },
    Tamper {
        target: TamperTarget,
        field: TamperField,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Issue { .. } => "issue",
            Action::Register { .. } => "register",
            Action::Transfer { .. } => "transfer",
            Action::Revoke { .. } => "revoke",
            Action::Onboard { .. } => "onboard",
            Action::Post { .. } => "post",
            Action::InjectBotPost { .. } => "inject-bot-post",
            Action::Recover { .. } => "recover",
            Action::Dispute { .. } => "dispute",
            Action::Tamper { .. } => "tamper",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TamperTarget {
    /// The copy a member holds.
    Wallet { attestation: String },
    /// The copy an exchange keeps for a registered account.
    ExchangeCustomer { exchange: String, account: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TamperField {
    AttributeValue,
    IssuerSignature,
    NotarySignature,
    ExpiresAt,
}

/// One reason a config cannot run, located by a field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Legal identities shorter than this would make log scans meaningless.
pub const MIN_LEGAL_IDENTITY_LEN: usize = 8;

struct Checker<'a> {
    problems: Vec<Problem>,
    config: &'a ScenarioConfig,
}

impl Checker<'_> {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.problems.push(Problem {
            path: path.into(),
            message: message.into(),
        });
    }

    fn require(&mut self, ok: bool, path: &str, field: &str, what: &str, value: &str) {
        if !ok {
            self.push(format!("{path}.{field}"), format!("undeclared {what} {value:?}"));
        }
    }

    fn cooperative(&self, id: &str) -> Option<&CooperativeDecl> {
        self.config.cooperatives.iter().find(|c| c.id == id)
    }

    fn has_notary(&self, id: &str) -> bool {
        self.config.notaries.iter().any(|n| n.id == id)
    }

    fn has_exchange(&self, id: &str) -> bool {
        self.config.exchanges.iter().any(|e| e.id == id)
    }

    fn has_provider(&self, id: &str) -> bool {
        self.config.providers.iter().any(|p| p.id == id)
    }
}

/// Everything that would stop [`run_scenario`](super::run_scenario) from
/// starting. Empty when the config is runnable.
pub fn validate_config(config: &ScenarioConfig) -> Vec<Problem> {
    let mut c = Checker {
        problems: Vec::new(),
        config,
    };
    if config.seed.is_empty() {
        c.push("seed", "must not be empty");
    }

    let mut ids = BTreeSet::new();
    let groups: [(&str, Vec<&String>); 4] = [
        ("cooperatives", config.cooperatives.iter().map(|x| &x.id).collect()),
        ("notaries", config.notaries.iter().map(|x| &x.id).collect()),
        ("exchanges", config.exchanges.iter().map(|x| &x.id).collect()),
        ("providers", config.providers.iter().map(|x| &x.id).collect()),
    ];
    for (group, group_ids) in groups {
        for (i, id) in group_ids.into_iter().enumerate() {
            if id.is_empty() || id.contains('/') || id == super::BOT_ACTOR {
                c.push(format!("{group}[{i}].id"), format!("invalid actor id {id:?}"));
            } else if !ids.insert(id.clone()) {
                c.push(format!("{group}[{i}].id"), format!("duplicate actor id {id:?}"));
            }
        }
    }

    for (i, coop) in config.cooperatives.iter().enumerate() {
        let path = format!("cooperatives[{i}]");
        if !c.has_notary(&coop.legal_rep_id) {
            c.push(
                format!("{path}.legal_rep_id"),
                format!("undeclared notary {:?}", coop.legal_rep_id),
            );
        }
        let mut members = BTreeSet::new();
        for (j, m) in coop.members.iter().enumerate() {
            let mpath = format!("{path}.members[{j}]");
            if !members.insert(&m.member_id) {
                c.push(
                    format!("{mpath}.member_id"),
                    format!("duplicate member {:?}", m.member_id),
                );
            }
            if m.legal_identity.len() < MIN_LEGAL_IDENTITY_LEN {
                c.push(
                    format!("{mpath}.legal_identity"),
                    format!("must be at least {MIN_LEGAL_IDENTITY_LEN} bytes"),
                );
            }
        }
    }
    for (i, e) in config.exchanges.iter().enumerate() {
        for (j, n) in e.trusted_notaries.iter().flatten().enumerate() {
            let ok = c.has_notary(n);
            c.require(
                ok,
                &format!("exchanges[{i}]"),
                &format!("trusted_notaries[{j}]"),
                "notary",
                n,
            );
        }
    }

    let mut labels: BTreeMap<&str, (&str, &str)> = BTreeMap::new();
    let mut last_tick = 0;
    for (i, step) in config.script.iter().enumerate() {
        let path = format!("script[{i}]");
        if step.tick < last_tick {
            c.push(
                format!("{path}.tick"),
                format!("tick {} is before previous tick {last_tick}", step.tick),
            );
        }
        last_tick = last_tick.max(step.tick);
        if step.tick > config.tick_limit {
            c.push(
                format!("{path}.tick"),
                format!("tick {} exceeds tick_limit {}", step.tick, config.tick_limit),
            );
        }
        let apath = format!("{path}.action.{}", step.action.name());
        let label_ok = |labels: &BTreeMap<&str, (&str, &str)>, l: &str| labels.contains_key(l);
        match &step.action {
            Action::Issue {
                cooperative,
                member,
                ttl,
                label,
                attributes,
                ..
            } => {
                match c.cooperative(cooperative) {
                    None => c.push(
                        format!("{apath}.cooperative"),
                        format!("undeclared cooperative {cooperative:?}"),
                    ),
                    Some(decl) => {
                        if !decl.members.iter().any(|m| &m.member_id == member) {
                            c.push(
                                format!("{apath}.member"),
                                format!("undeclared member {member:?} of {cooperative:?}"),
                            );
                        }
                    }
                }
                if *ttl == 0 {
                    c.push(format!("{apath}.ttl"), "must be positive");
                }
                if attributes.is_empty() {
                    c.push(format!("{apath}.attributes"), "must not be empty");
                }
                if labels.insert(label, (cooperative, member)).is_some() {
                    c.push(format!("{apath}.label"), format!("label {label:?} already used"));
                }
            }
            Action::Register {
                exchange,
                attestation,
                account,
            } => {
                let ok = c.has_exchange(exchange);
                c.require(ok, &apath, "exchange", "exchange", exchange);
                c.require(
                    label_ok(&labels, attestation),
                    &apath,
                    "attestation",
                    "attestation label",
                    attestation,
                );
                if account.is_empty() {
                    c.push(format!("{apath}.account"), "must not be empty");
                }
            }
            Action::Transfer {
                origin,
                beneficiary_exchange,
                amount,
                ..
            } => {
                let ok = c.has_exchange(origin);
                c.require(ok, &apath, "origin", "exchange", origin);
                let ok = c.has_exchange(beneficiary_exchange);
                c.require(ok, &apath, "beneficiary_exchange", "exchange", beneficiary_exchange);
                if origin == beneficiary_exchange {
                    c.push(format!("{apath}.beneficiary_exchange"), "must differ from origin");
                }
                if *amount == 0 {
                    c.push(format!("{apath}.amount"), "must be positive");
                }
            }
            Action::Revoke { attestation } => {
                c.require(
                    label_ok(&labels, attestation),
                    &apath,
                    "attestation",
                    "attestation label",
                    attestation,
                );
            }
            Action::Onboard {
                provider,
                handle,
                attestation,
            } => {
                let ok = c.has_provider(provider);
                c.require(ok, &apath, "provider", "provider", provider);
                c.require(
                    label_ok(&labels, attestation),
                    &apath,
                    "attestation",
                    "attestation label",
                    attestation,
                );
                if !handle.starts_with('@') || handle.len() < 2 {
                    c.push(format!("{apath}.handle"), "must start with '@'");
                }
            }
            Action::Post { body, .. } => {
                if body.is_empty() {
                    c.push(format!("{apath}.body"), "must not be empty");
                }
            }
            Action::InjectBotPost {
                provider,
                origin,
                body,
                count,
                ..
            } => {
                let ok = c.has_provider(provider);
                c.require(ok, &apath, "provider", "provider", provider);
                let ok = c.has_provider(origin);
                c.require(ok, &apath, "origin", "provider", origin);
                if body.is_empty() || *count == 0 {
                    c.push(apath.clone(), "body and count must be non-empty");
                }
            }
            Action::Recover { attestation, .. } => {
                c.require(
                    label_ok(&labels, attestation),
                    &apath,
                    "attestation",
                    "attestation label",
                    attestation,
                );
            }
            Action::Dispute { provider, origin, .. } => {
                let ok = c.has_provider(provider);
                c.require(ok, &apath, "provider", "provider", provider);
                let ok = c.has_provider(origin);
                c.require(ok, &apath, "origin", "provider", origin);
            }
            Action::Tamper { target, .. } => match target {
                TamperTarget::Wallet { attestation } => {
                    c.require(
                        label_ok(&labels, attestation),
                        &apath,
                        "target.attestation",
                        "attestation label",
                        attestation,
                    );
                }
                TamperTarget::ExchangeCustomer { exchange, .. } => {
                    let ok = c.has_exchange(exchange);
                    c.require(ok, &apath, "target.exchange", "exchange", exchange);
                }
            },
        }
    }
    c.problems
}
