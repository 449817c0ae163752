//! Per-provider append-only ledgers: writer-signed, hash-chained records of
//! countersigned attestations and post digests.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::CounterSignedAttestation;
use crate::canonical::{self, CanonicalError};
use crate::crypto::{self, digest, Digest, DomainTag, KeyPair, PublicKey, Signature};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordPointer {
    pub ledger_id: String,
    pub index: u64,
}

impl RecordPointer {
    pub fn new(ledger_id: impl Into<String>, index: u64) -> Self {
        RecordPointer {
            ledger_id: ledger_id.into(),
            index,
        }
    }
}

impl fmt::Display for RecordPointer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.ledger_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Payload {
    Attestation {
        csa: CounterSignedAttestation,
    },
    Post {
        post_digest: Digest,
        attestation_ptr: RecordPointer,
        posted_at: Tick,
    },
}

impl Payload {
    pub fn as_attestation(&self) -> Option<&CounterSignedAttestation> {
        match self {
            Payload::Attestation { csa } => Some(csa),
            Payload::Post { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub index: u64,
    pub prev_digest: Digest,
    pub payload: Payload,
    pub writer_key_id: Digest,
    pub writer_signature: Signature,
}

#[derive(Serialize)]
struct SignedPart<'a> {
    index: u64,
    prev_digest: &'a Digest,
    payload: &'a Payload,
}

impl LedgerRecord {
    fn signed_bytes(index: u64, prev_digest: &Digest, payload: &Payload) -> Vec<u8> {
        canonical::canonical_serialize(&SignedPart {
            index,
            prev_digest,
            payload,
        })
        .expect("record is canonical")
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical::canonical_serialize(self).expect("record is canonical")
    }

    pub fn digest(&self) -> Digest {
        digest(&self.canonical_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("key {key_id} is not the registered writer of ledger {ledger_id}")]
    UnregisteredWriter { ledger_id: String, key_id: Digest },
    #[error("{0} does not resolve to an attestation record")]
    DanglingAttestationPointer(RecordPointer),
    #[error("index {index} out of bounds for ledger {ledger_id} of length {len}")]
    OutOfBounds { ledger_id: String, index: u64, len: u64 },
    #[error("ledger encoding: {0}")]
    Encoding(#[from] CanonicalError),
}

/// Where and why chain verification first failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainFault {
    pub index: u64,
    pub kind: ChainFaultKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFaultKind {
    IndexMismatch,
    PrevDigestMismatch,
    WrongWriter,
    BadSignature,
}

/// Dereferences pointers into any ledger, local or foreign.
pub trait LedgerResolver {
    fn resolve(&self, ptr: &RecordPointer) -> Option<&LedgerRecord>;
}

impl LedgerResolver for Ledger {
    fn resolve(&self, ptr: &RecordPointer) -> Option<&LedgerRecord> {
        if ptr.ledger_id == self.id {
            self.get(ptr).ok()
        } else {
            None
        }
    }
}

impl LedgerResolver for BTreeMap<String, Ledger> {
    fn resolve(&self, ptr: &RecordPointer) -> Option<&LedgerRecord> {
        self.get(&ptr.ledger_id).and_then(|l| l.get(ptr).ok())
    }
}

#[derive(Debug, Clone)]
pub struct Ledger {
    id: String,
    writer: PublicKey,
    records: Vec<LedgerRecord>,
    post_index: BTreeMap<Digest, Vec<u64>>,
}

impl Ledger {
    pub fn new(id: impl Into<String>, writer: PublicKey) -> Self {
        Ledger {
            id: id.into(),
            writer,
            records: Vec::new(),
            post_index: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn writer(&self) -> &PublicKey {
        &self.writer
    }

    pub fn len(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    /// Append, resolving post pointers against this ledger only.
    pub fn append(&mut self, writer: &KeyPair, payload: Payload) -> Result<RecordPointer, LedgerError> {
        let check = match &payload {
            Payload::Post { attestation_ptr, .. } => Some(self.points_at_attestation(attestation_ptr, None)),
            Payload::Attestation { .. } => None,
        };
        self.append_checked(writer, payload, check)
    }

    /// Append, resolving post pointers on other ledgers through `resolver`.
    pub fn append_with(
        &mut self,
        writer: &KeyPair,
        payload: Payload,
        resolver: &dyn LedgerResolver,
    ) -> Result<RecordPointer, LedgerError> {
        let check = match &payload {
            Payload::Post { attestation_ptr, .. } => Some(self.points_at_attestation(attestation_ptr, Some(resolver))),
            Payload::Attestation { .. } => None,
        };
        self.append_checked(writer, payload, check)
    }

    fn points_at_attestation(&self, ptr: &RecordPointer, resolver: Option<&dyn LedgerResolver>) -> bool {
        let record = if ptr.ledger_id == self.id {
            self.get(ptr).ok()
        } else {
            resolver.and_then(|r| r.resolve(ptr))
        };
        record.is_some_and(|r| r.payload.as_attestation().is_some())
    }

    fn append_checked(
        &mut self,
        writer: &KeyPair,
        payload: Payload,
        pointer_ok: Option<bool>,
    ) -> Result<RecordPointer, LedgerError> {
        if writer.key_id != self.writer.key_id || writer.public_key != self.writer.public_key {
            return Err(LedgerError::UnregisteredWriter {
                ledger_id: self.id.clone(),
                key_id: writer.key_id,
            });
        }
        if pointer_ok == Some(false) {
            let Payload::Post { attestation_ptr, .. } = payload else {
                unreachable!()
            };
            return Err(LedgerError::DanglingAttestationPointer(attestation_ptr));
        }
        let index = self.len();
        let prev_digest = self.records.last().map_or(Digest::ZERO, LedgerRecord::digest);
        let sig = crypto::sign_tagged(
            writer,
            DomainTag::Ledger,
            &LedgerRecord::signed_bytes(index, &prev_digest, &payload),
        );
        self.push(LedgerRecord {
            index,
            prev_digest,
            payload,
            writer_key_id: writer.key_id,
            writer_signature: sig,
        });
        Ok(RecordPointer::new(self.id.clone(), index))
    }

    fn push(&mut self, record: LedgerRecord) {
        if let Payload::Post { post_digest, .. } = &record.payload {
            self.post_index.entry(*post_digest).or_default().push(record.index);
        }
        self.records.push(record);
    }

    /// Any caller may read any ledger.
    pub fn get(&self, ptr: &RecordPointer) -> Result<&LedgerRecord, LedgerError> {
        let out_of_bounds = || LedgerError::OutOfBounds {
            ledger_id: ptr.ledger_id.clone(),
            index: ptr.index,
            len: self.len(),
        };
        if ptr.ledger_id != self.id {
            return Err(out_of_bounds());
        }
        usize::try_from(ptr.index)
            .ok()
            .and_then(|i| self.records.get(i))
            .ok_or_else(out_of_bounds)
    }

    pub fn get_index(&self, index: u64) -> Result<&LedgerRecord, LedgerError> {
        self.get(&RecordPointer::new(self.id.clone(), index))
    }

    /// Pointers to every post record with this digest, in index order.
    pub fn find_by_post_digest(&self, d: &Digest) -> Vec<RecordPointer> {
        self.post_index
            .get(d)
            .map(|ixs| ixs.iter().map(|&i| RecordPointer::new(self.id.clone(), i)).collect())
            .unwrap_or_default()
    }

    pub fn verify_chain(&self) -> bool {
        self.first_fault().is_none()
    }

    pub fn first_fault(&self) -> Option<ChainFault> {
        let mut prev = Digest::ZERO;
        for (i, r) in self.records.iter().enumerate() {
            let index = i as u64;
            let fault = |kind| Some(ChainFault { index, kind });
            if r.index != index {
                return fault(ChainFaultKind::IndexMismatch);
            }
            if r.prev_digest != prev {
                return fault(ChainFaultKind::PrevDigestMismatch);
            }
            if r.writer_key_id != self.writer.key_id {
                return fault(ChainFaultKind::WrongWriter);
            }
            let msg = LedgerRecord::signed_bytes(r.index, &r.prev_digest, &r.payload);
            if !crypto::verify_tagged(&self.writer.public_key, DomainTag::Ledger, &msg, &r.writer_signature) {
                return fault(ChainFaultKind::BadSignature);
            }
            prev = r.digest();
        }
        None
    }

    /// One canonical record per line, in index order.
    pub fn dump(&self) -> Vec<u8> {
        canonical::to_lines(&self.records).expect("records are canonical")
    }

    /// Rebuild from a dump without checking the chain; call
    /// [`verify_chain`](Self::verify_chain) afterwards.
    pub fn load(id: impl Into<String>, writer: PublicKey, bytes: &[u8]) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new(id, writer);
        for record in canonical::from_lines::<LedgerRecord>(bytes)? {
            ledger.push(record);
        }
        Ok(ledger)
    }

    /// Flip the low bit of one byte of a record's post digest or notary
    /// signature, bypassing the append-only surface. Fault injection only.
    #[cfg(test)]
    pub(crate) fn tamper(&mut self, index: u64) -> bool {
        let Some(record) = usize::try_from(index).ok().and_then(|i| self.records.get_mut(i)) else {
            return false;
        };
        match &mut record.payload {
            Payload::Post { post_digest, .. } => {
                let mut bytes = *post_digest.as_bytes();
                bytes[0] ^= 1;
                *post_digest = Digest::new(bytes);
            }
            Payload::Attestation { csa } => csa.notary_signature.bytes[0] ^= 1,
        }
        true
    }
}
