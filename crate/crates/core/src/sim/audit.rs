//! Global checks over a finished run: message completeness, identity
//! leakage, archive completeness, bot exclusion and ledger integrity.

use std::collections::{BTreeMap, BTreeSet};

use crate::attestation::SubjectMode;
use crate::crypto::Digest;
use crate::ledger::Payload;
use crate::travel_rule::TransferDecision;
use crate::Tick;

use super::{Delivered, Event, EventLog, FilterEvent, Simulation};

/// Every message id has exactly one send and one deliver, sent first.
pub fn message_completeness(log: &EventLog) -> Result<(), String> {
    let mut seen: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for e in log.events() {
        let id = |e: &Event| {
            e.payload
                .get("id")
                .cloned()
                .and_then(|v| crate::canonical::from_value::<u64>(v).ok())
        };
        match e.kind.as_str() {
            "send" => {
                let id = id(e).ok_or_else(|| format!("send event {} has no id", e.seq))?;
                seen.entry(id).or_default().0 += 1;
            }
            "deliver" => {
                let d: Delivered = e.payload_as().map_err(|err| format!("event {}: {err}", e.seq))?;
                let entry = seen.entry(d.id).or_default();
                if entry.0 == 0 {
                    return Err(format!("message {} delivered before it was sent", d.id));
                }
                entry.1 += 1;
            }
            _ => {}
        }
    }
    match seen.iter().find(|(_, &(s, d))| s != 1 || d != 1) {
        Some((id, (s, d))) => Err(format!("message {id}: {s} send(s), {d} deliver(s)")),
        None => Ok(()),
    }
}

fn endpoints(e: &Event) -> Vec<String> {
    let text = |k| e.payload.get(k).and_then(|v| v.as_text()).map(str::to_owned);
    match e.kind.as_str() {
        "send" | "deliver" => [text("from"), text("to")].into_iter().flatten().collect(),
        _ => vec![e.actor.clone()],
    }
}

/// A granted disclosure, or a decision built from one. These carry the
/// subject's identity by design.
pub fn is_granted_disclosure(e: &Event) -> bool {
    let disclosed = |v: Option<&crate::canonical::Value>| {
        v.and_then(|v| v.get("outcome")).and_then(|o| o.as_text()) == Some("disclosed")
    };
    match e.kind.as_str() {
        "send" => disclosed(
            e.payload
                .get("message")
                .and_then(|m| m.get("disclosure-response"))
                .and_then(|r| r.get("response")),
        ),
        "disclosure" | "transfer-decision" => {
            disclosed(Some(&e.payload)) || e.payload.get("reason").and_then(|r| r.as_text()) == Some("disclosed")
        }
        _ => false,
    }
}

/// Sequence numbers of events that contain any of `identities`, are not
/// wholly between `privileged` actors and are not granted disclosures.
pub fn identity_leaks(log: &EventLog, identities: &[String], privileged: &BTreeSet<String>) -> Vec<u64> {
    log.events()
        .iter()
        .filter(|e| !endpoints(e).iter().all(|a| privileged.contains(a)))
        .filter(|e| !is_granted_disclosure(e))
        .filter(|e| {
            let bytes = e.canonical_bytes();
            identities.iter().any(|id| contains(&bytes, id.as_bytes()))
        })
        .map(|e| e.seq)
        .collect()
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Cooperatives and notaries: the only actors allowed to see identities
/// without a disclosure.
pub fn privileged_actors(sim: &Simulation) -> BTreeSet<String> {
    sim.cooperatives()
        .map(|c| c.id().to_owned())
        .chain(sim.notaries().map(|n| n.id().to_owned()))
        .collect()
}

/// Countersigned attestations held anywhere outside a notary that the
/// named notary has no archive entry for.
pub fn archive_gaps(sim: &Simulation) -> Vec<Digest> {
    let mut circulating = Vec::new();
    circulating.extend(sim.wallets().map(|(_, h)| h.csa.clone()));
    for e in sim.exchanges() {
        circulating.extend(e.customers().map(|(_, c)| c.clone()));
    }
    for p in sim.providers() {
        circulating.extend(
            p.ledger()
                .records()
                .iter()
                .filter_map(|r| r.payload.as_attestation().cloned()),
        );
    }
    let gaps: BTreeSet<Digest> = circulating
        .iter()
        .filter(|c| {
            sim.notary(&c.notary_id)
                .and_then(|n| n.archive_entry(&c.attestation_id()))
                .is_none()
        })
        .map(|c| c.attestation_id())
        .collect();
    gaps.into_iter().collect()
}

/// `(provider, tick, decision)` for every filter decision.
pub fn filter_events(log: &EventLog) -> Vec<(String, Tick, FilterEvent)> {
    log.of_kind("filter")
        .map(|e| (e.actor.clone(), e.tick, e.payload_as().expect("filter payload")))
        .collect()
}

pub fn transfer_decisions(log: &EventLog) -> Vec<TransferDecision> {
    log.of_kind("transfer-decision")
        .map(|e| e.payload_as().expect("decision payload"))
        .collect()
}

/// Every delivered post is vouched for on its origin ledger by a valid
/// attestation bound to its author.
pub fn bot_exclusion(sim: &Simulation) -> Result<(), String> {
    let trust = sim.full_trust();
    for e in sim.log().of_kind("filter") {
        let f: FilterEvent = e.payload_as().map_err(|err| err.to_string())?;
        if f.outcome != crate::dsn::FilterOutcome::Deliver {
            continue;
        }
        let origin = sim
            .provider(&f.origin)
            .ok_or_else(|| format!("unknown origin {}", f.origin))?;
        let vouched = origin.ledger().find_by_post_digest(&f.post_digest).iter().any(|ptr| {
            let Ok(record) = origin.ledger().get(ptr) else {
                return false;
            };
            let Payload::Post { attestation_ptr, .. } = &record.payload else {
                return false;
            };
            let csa = sim
                .provider(&attestation_ptr.ledger_id)
                .and_then(|p| p.ledger().get(attestation_ptr).ok())
                .and_then(|r| r.payload.as_attestation());
            csa.is_some_and(|c| {
                c.blinded.subject.mode == SubjectMode::Handle
                    && c.blinded.subject.value == f.author
                    && trust.verify(c, e.tick).is_ok_and(|r| r.passed())
            })
        });
        if !vouched {
            return Err(format!(
                "event {} delivered a post its origin ledger does not vouch for",
                e.seq
            ));
        }
    }
    Ok(())
}

/// Every provider ledger still verifies.
pub fn chains_valid(sim: &Simulation) -> Result<(), String> {
    for p in sim.providers() {
        if let Some(fault) = p.ledger().first_fault() {
            return Err(format!(
                "ledger {} broken at record {}: {:?}",
                p.id(),
                fault.index,
                fault.kind
            ));
        }
    }
    Ok(())
}

/// Number of `ledger-read-request` hops from `reader` to `ledger_id`.
pub fn ledger_reads(log: &EventLog, reader: &str, ledger_id: &str) -> usize {
    log.of_kind("deliver")
        .filter_map(|e| e.payload_as::<Delivered>().ok())
        .filter(|d| d.kind == "ledger-read-request" && d.from == reader && d.to == ledger_id)
        .count()
}

/// Deliveries of a given message kind.
pub fn deliveries<'a>(log: &'a EventLog, kind: &'a str) -> impl Iterator<Item = Delivered> + 'a {
    log.of_kind("deliver")
        .filter_map(|e| e.payload_as::<Delivered>().ok())
        .filter(move |d| d.kind == kind)
}

/// Run every audit that must hold for any scenario.
pub fn standard(sim: &Simulation) -> Result<(), String> {
    message_completeness(sim.log())?;
    chains_valid(sim)?;
    bot_exclusion(sim)?;
    let gaps = archive_gaps(sim);
    if !gaps.is_empty() {
        return Err(format!("attestations missing from notary archives: {gaps:?}"));
    }
    Ok(())
}
