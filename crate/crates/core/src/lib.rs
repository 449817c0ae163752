//! Blinded identity attestations issued by a data cooperative, countersigned
//! by a legal notary, and consumed by a Travel Rule exchange flow and a
//! decentralized social network over simulated append-only ledgers.

pub mod attestation;
pub mod canonical;
pub mod cooperative;
pub mod crypto;
pub mod dsn;
pub mod ledger;
pub mod notary;
pub mod sim;
pub mod travel_rule;

/// Logical time. Scenarios advance it explicitly; wall time is never read.
pub type Tick = u64;
