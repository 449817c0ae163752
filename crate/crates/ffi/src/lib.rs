//! C ABI over `coop-attest`.
//!
//! Every function returns a [`ca_status`]; on failure a message is available
//! from [`ca_last_error`] on the same thread. Handles are opaque and owned
//! by the caller, who releases them with the matching `_free` function.
//! Byte buffers are `(pointer, length)` pairs; digests and key ids are 32
//! bytes, Ed25519 public keys 32 bytes and signatures 64 bytes.

#![allow(non_camel_case_types)]
// Pointer arguments are checked for null; beyond that the caller owns validity.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::slice;

use coop_attest::attestation::{self, AttestationDoc, CounterSignedAttestation, VerificationReport};
use coop_attest::canonical;
use coop_attest::crypto::{self, KeyPair, Signature};
use coop_attest::sim::{self, HarnessError, ScenarioConfig};

pub const CA_DIGEST_LEN: usize = 32;
pub const CA_PUBLIC_KEY_LEN: usize = 32;
pub const CA_SIGNATURE_LEN: usize = 64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ca_status {
    CA_OK = 0,
    /// A required pointer was null or a length was wrong.
    CA_INVALID_ARGUMENT = 1,
    /// Input bytes are not a canonical encoding of the expected type.
    CA_DECODE_ERROR = 2,
    CA_CRYPTO_ERROR = 3,
    /// A signature or attestation did not verify.
    CA_VERIFICATION_FAILED = 4,
    /// Scenario config failed validation.
    CA_CONFIG_INVALID = 5,
    /// A scenario script action failed at run time.
    CA_SCENARIO_FAILED = 6,
    /// Caller buffer too small; the needed size was written back.
    CA_BUFFER_TOO_SMALL = 7,
    CA_PANIC = 255,
}

use ca_status::*;

/// Per-check outcome of verifying a countersigned attestation; 1 = pass.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ca_report {
    pub decodes: u8,
    pub issuer_signature: u8,
    pub notary_signature: u8,
    pub not_expired: u8,
    pub subject_non_identifying: u8,
    pub passed: u8,
}

impl From<VerificationReport> for ca_report {
    fn from(r: VerificationReport) -> Self {
        ca_report {
            decodes: r.decodes.into(),
            issuer_signature: r.issuer_signature.into(),
            notary_signature: r.notary_signature.into(),
            not_expired: r.not_expired.into(),
            subject_non_identifying: r.subject_non_identifying.into(),
            passed: r.passed().into(),
        }
    }
}

/// Opaque key pair.
pub struct ca_keypair(KeyPair);

/// Opaque countersigned attestation.
pub struct ca_attestation(CounterSignedAttestation);

/// Opaque scenario event log with its canonical line encoding.
pub struct ca_event_log {
    events: usize,
    bytes: Vec<u8>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: ca_status, msg: impl std::fmt::Display) -> ca_status {
    set_error(msg.to_string());
    status
}

/// Run `f`, mapping panics to `CA_PANIC` and clearing the last error on
/// entry.
fn guard(f: impl FnOnce() -> ca_status) -> ca_status {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_else(|| "panic".to_owned());
            fail(CA_PANIC, msg)
        }
    }
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Option<&'a [u8]> {
    if len == 0 {
        return Some(&[]);
    }
    if data.is_null() {
        return None;
    }
    Some(slice::from_raw_parts(data, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Option<&'a mut T> {
    p.as_mut()
}

macro_rules! arg {
    ($e:expr, $name:literal) => {
        match $e {
            Some(v) => v,
            None => return fail(CA_INVALID_ARGUMENT, concat!("null argument: ", $name)),
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ca_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn ca_digest(data: *const u8, len: usize, out_digest: *mut u8) -> ca_status {
    guard(|| {
        let data = arg!(bytes(data, len), "data");
        if out_digest.is_null() {
            return fail(CA_INVALID_ARGUMENT, "null argument: out_digest");
        }
        let d = crypto::digest(data);
        ptr::copy_nonoverlapping(d.as_bytes().as_ptr(), out_digest, CA_DIGEST_LEN);
        CA_OK
    })
}

/// Derive a key pair from a non-empty seed.
#[no_mangle]
pub unsafe extern "C" fn ca_keypair_from_seed(
    seed: *const u8,
    seed_len: usize,
    out_keypair: *mut *mut ca_keypair,
) -> ca_status {
    guard(|| {
        let seed = arg!(bytes(seed, seed_len), "seed");
        let out_keypair = arg!(out(out_keypair), "out_keypair");
        match crypto::keygen(seed) {
            Ok(k) => {
                *out_keypair = Box::into_raw(Box::new(ca_keypair(k)));
                CA_OK
            }
            Err(e) => fail(CA_CRYPTO_ERROR, e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ca_keypair_free(keypair: *mut ca_keypair) {
    if !keypair.is_null() {
        drop(Box::from_raw(keypair));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ca_keypair_public_key(keypair: *const ca_keypair, out_public_key: *mut u8) -> ca_status {
    guard(|| {
        let k = arg!(keypair.as_ref(), "keypair");
        if out_public_key.is_null() || k.0.public_key.len() != CA_PUBLIC_KEY_LEN {
            return fail(CA_INVALID_ARGUMENT, "null argument: out_public_key");
        }
        ptr::copy_nonoverlapping(k.0.public_key.as_ptr(), out_public_key, CA_PUBLIC_KEY_LEN);
        CA_OK
    })
}

#[no_mangle]
pub unsafe extern "C" fn ca_keypair_key_id(keypair: *const ca_keypair, out_key_id: *mut u8) -> ca_status {
    guard(|| {
        let k = arg!(keypair.as_ref(), "keypair");
        if out_key_id.is_null() {
            return fail(CA_INVALID_ARGUMENT, "null argument: out_key_id");
        }
        ptr::copy_nonoverlapping(k.0.key_id.as_bytes().as_ptr(), out_key_id, CA_DIGEST_LEN);
        CA_OK
    })
}

unsafe fn tag<'a>(domain_tag: *const c_char) -> Result<&'a str, ca_status> {
    if domain_tag.is_null() {
        return Err(fail(CA_INVALID_ARGUMENT, "null argument: domain_tag"));
    }
    CStr::from_ptr(domain_tag)
        .to_str()
        .map_err(|_| fail(CA_INVALID_ARGUMENT, "domain tag is not UTF-8"))
}

/// Sign `message` under a registered domain tag; writes 64 bytes.
#[no_mangle]
pub unsafe extern "C" fn ca_sign(
    keypair: *const ca_keypair,
    domain_tag: *const c_char,
    message: *const u8,
    message_len: usize,
    out_signature: *mut u8,
) -> ca_status {
    guard(|| {
        let k = arg!(keypair.as_ref(), "keypair");
        let message = arg!(bytes(message, message_len), "message");
        let tag = match tag(domain_tag) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if out_signature.is_null() {
            return fail(CA_INVALID_ARGUMENT, "null argument: out_signature");
        }
        match crypto::sign(&k.0, tag, message) {
            Ok(sig) => {
                ptr::copy_nonoverlapping(sig.bytes.as_ptr(), out_signature, CA_SIGNATURE_LEN);
                CA_OK
            }
            Err(e) => fail(CA_CRYPTO_ERROR, e),
        }
    })
}

/// `CA_OK` if the signature verifies, `CA_VERIFICATION_FAILED` if not.
#[no_mangle]
pub unsafe extern "C" fn ca_verify(
    public_key: *const u8,
    public_key_len: usize,
    domain_tag: *const c_char,
    message: *const u8,
    message_len: usize,
    signature: *const u8,
) -> ca_status {
    guard(|| {
        let public_key = arg!(bytes(public_key, public_key_len), "public_key");
        let message = arg!(bytes(message, message_len), "message");
        let signature = arg!(bytes(signature, CA_SIGNATURE_LEN), "signature");
        let tag = match tag(domain_tag) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let sig = Signature {
            bytes: signature.to_vec(),
            signer_key_id: crypto::digest(public_key),
            domain_tag: tag.to_owned(),
        };
        match crypto::verify(public_key, tag, message, &sig) {
            Ok(true) => CA_OK,
            Ok(false) => fail(CA_VERIFICATION_FAILED, "signature does not verify"),
            Err(e) => fail(CA_CRYPTO_ERROR, e),
        }
    })
}

/// Decode a countersigned attestation from its canonical bytes or from a
/// `.att` document.
#[no_mangle]
pub unsafe extern "C" fn ca_attestation_decode(
    data: *const u8,
    len: usize,
    out_attestation: *mut *mut ca_attestation,
) -> ca_status {
    guard(|| {
        let data = arg!(bytes(data, len), "data");
        let out_attestation = arg!(out(out_attestation), "out_attestation");
        let csa = match canonical::canonical_deserialize::<CounterSignedAttestation>(data) {
            Ok(c) => c,
            Err(bare) => match AttestationDoc::from_bytes(data) {
                Ok(AttestationDoc::Countersigned(c)) => c,
                Ok(other) => {
                    return fail(
                        CA_DECODE_ERROR,
                        format!("document holds a {} attestation", other.kind()),
                    )
                }
                Err(_) => return fail(CA_DECODE_ERROR, bare),
            },
        };
        *out_attestation = Box::into_raw(Box::new(ca_attestation(csa)));
        CA_OK
    })
}

#[no_mangle]
pub unsafe extern "C" fn ca_attestation_free(attestation: *mut ca_attestation) {
    if !attestation.is_null() {
        drop(Box::from_raw(attestation));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ca_attestation_id(attestation: *const ca_attestation, out_id: *mut u8) -> ca_status {
    guard(|| {
        let a = arg!(attestation.as_ref(), "attestation");
        if out_id.is_null() {
            return fail(CA_INVALID_ARGUMENT, "null argument: out_id");
        }
        ptr::copy_nonoverlapping(a.0.attestation_id().as_bytes().as_ptr(), out_id, CA_DIGEST_LEN);
        CA_OK
    })
}

#[no_mangle]
pub unsafe extern "C" fn ca_attestation_expires_at(
    attestation: *const ca_attestation,
    out_tick: *mut u64,
) -> ca_status {
    guard(|| {
        let a = arg!(attestation.as_ref(), "attestation");
        *arg!(out(out_tick), "out_tick") = a.0.blinded.expires_at;
        CA_OK
    })
}

/// Verify against explicit issuer and notary keys at tick `now`. The
/// report is always written; the status is `CA_VERIFICATION_FAILED` if any
/// check failed.
#[no_mangle]
pub unsafe extern "C" fn ca_attestation_verify(
    attestation: *const ca_attestation,
    issuer_public_key: *const u8,
    issuer_public_key_len: usize,
    notary_public_key: *const u8,
    notary_public_key_len: usize,
    now: u64,
    out_report: *mut ca_report,
) -> ca_status {
    guard(|| {
        let a = arg!(attestation.as_ref(), "attestation");
        let issuer = arg!(bytes(issuer_public_key, issuer_public_key_len), "issuer_public_key");
        let notary = arg!(bytes(notary_public_key, notary_public_key_len), "notary_public_key");
        let out_report = arg!(out(out_report), "out_report");
        let report = attestation::verify_countersigned(&a.0, issuer, notary, now);
        *out_report = report.into();
        if report.passed() {
            CA_OK
        } else {
            fail(CA_VERIFICATION_FAILED, "attestation failed verification")
        }
    })
}

/// Like [`ca_attestation_verify`] but straight from canonical bytes;
/// non-canonical input reports `decodes = 0`.
#[no_mangle]
pub unsafe extern "C" fn ca_verify_countersigned_bytes(
    data: *const u8,
    len: usize,
    issuer_public_key: *const u8,
    issuer_public_key_len: usize,
    notary_public_key: *const u8,
    notary_public_key_len: usize,
    now: u64,
    out_report: *mut ca_report,
) -> ca_status {
    guard(|| {
        let data = arg!(bytes(data, len), "data");
        let issuer = arg!(bytes(issuer_public_key, issuer_public_key_len), "issuer_public_key");
        let notary = arg!(bytes(notary_public_key, notary_public_key_len), "notary_public_key");
        let out_report = arg!(out(out_report), "out_report");
        let report = attestation::verify_countersigned_bytes(data, issuer, notary, now);
        *out_report = report.into();
        if report.passed() {
            CA_OK
        } else {
            fail(CA_VERIFICATION_FAILED, "attestation failed verification")
        }
    })
}

unsafe fn scenario(data: *const u8, len: usize) -> Result<ScenarioConfig, ca_status> {
    let data = bytes(data, len).ok_or_else(|| fail(CA_INVALID_ARGUMENT, "null argument: config"))?;
    canonical::canonical_deserialize(data).map_err(|e| fail(CA_DECODE_ERROR, e))
}

/// Number of validation problems in a canonical scenario config; the
/// first one is available from [`ca_last_error`].
#[no_mangle]
pub unsafe extern "C" fn ca_validate_config(config: *const u8, len: usize, out_problems: *mut usize) -> ca_status {
    guard(|| {
        let config = match scenario(config, len) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let out_problems = arg!(out(out_problems), "out_problems");
        let problems = sim::validate_config(&config);
        *out_problems = problems.len();
        match problems.first() {
            None => CA_OK,
            Some(p) => fail(CA_CONFIG_INVALID, p),
        }
    })
}

/// Run a canonical scenario config to completion.
#[no_mangle]
pub unsafe extern "C" fn ca_run_scenario(config: *const u8, len: usize, out_log: *mut *mut ca_event_log) -> ca_status {
    guard(|| {
        let config = match scenario(config, len) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let out_log = arg!(out(out_log), "out_log");
        match sim::run_scenario(&config) {
            Ok(log) => {
                let handle = ca_event_log {
                    events: log.len(),
                    bytes: log.to_bytes(),
                };
                *out_log = Box::into_raw(Box::new(handle));
                CA_OK
            }
            Err(e @ HarnessError::ConfigInvalid(_)) => fail(CA_CONFIG_INVALID, e),
            Err(e @ HarnessError::ScriptActionFailed { .. }) => fail(CA_SCENARIO_FAILED, e),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ca_event_log_free(log: *mut ca_event_log) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ca_event_log_len(log: *const ca_event_log, out_events: *mut usize) -> ca_status {
    guard(|| {
        let log = arg!(log.as_ref(), "log");
        *arg!(out(out_events), "out_events") = log.events;
        CA_OK
    })
}

/// Borrow the log's line-delimited canonical bytes; valid until the log
/// is freed.
#[no_mangle]
pub unsafe extern "C" fn ca_event_log_bytes(
    log: *const ca_event_log,
    out_data: *mut *const u8,
    out_len: *mut usize,
) -> ca_status {
    guard(|| {
        let log = arg!(log.as_ref(), "log");
        let out_data = arg!(out(out_data), "out_data");
        let out_len = arg!(out(out_len), "out_len");
        *out_data = log.bytes.as_ptr();
        *out_len = log.bytes.len();
        CA_OK
    })
}

/// Copy the log bytes into a caller buffer. With a null or short buffer,
/// writes the needed size and returns `CA_BUFFER_TOO_SMALL`.
#[no_mangle]
pub unsafe extern "C" fn ca_event_log_copy(
    log: *const ca_event_log,
    buf: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> ca_status {
    guard(|| {
        let log = arg!(log.as_ref(), "log");
        let out_len = arg!(out(out_len), "out_len");
        *out_len = log.bytes.len();
        if buf.is_null() || cap < log.bytes.len() {
            return fail(CA_BUFFER_TOO_SMALL, format!("need {} bytes", log.bytes.len()));
        }
        ptr::copy_nonoverlapping(log.bytes.as_ptr(), buf, log.bytes.len());
        CA_OK
    })
}
