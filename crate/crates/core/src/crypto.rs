//! Digests, deterministic key generation and domain-separated signatures.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer, Verifier};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Name of the hash function recorded in every attestation.
pub const HASH_ALG: &str = "sha-256";

pub const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("key seed must not be empty")]
    EmptySeed,
    #[error("unknown domain tag {0:?}")]
    UnknownDomainTag(String),
    #[error("expected {expected} bytes, got {got}")]
    InvalidLength { expected: usize, got: usize },
    #[error("invalid hex: {0}")]
    InvalidHex(String),
}

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; DIGEST_LEN]);

    pub const fn new(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; DIGEST_LEN] = bytes.try_into().map_err(|_| CryptoError::InvalidLength {
            expected: DIGEST_LEN,
            got: bytes.len(),
        })?;
        Ok(Digest(arr))
    }

    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = hex::decode(s).map_err(|e| CryptoError::InvalidHex(e.to_string()))?;
        Self::from_slice(&bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Digest {
    type Err = CryptoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Digest::from_hex(s)
    }
}

impl AsRef<[u8]> for Digest {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_bytes(&self.0)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let bytes = serde_bytes::ByteBuf::deserialize(deserializer)?;
        Digest::from_slice(&bytes).map_err(serde::de::Error::custom)
    }
}

/// A random 32-byte value. Shares the wire form of [`Digest`].
pub type Nonce = Digest;

pub fn digest(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Protocol contexts a signature may be bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainTag {
    Plain,
    Blinded,
    Counter,
    Ledger,
    Recover,
}

impl DomainTag {
    pub const ALL: [DomainTag; 5] = [
        DomainTag::Plain,
        DomainTag::Blinded,
        DomainTag::Counter,
        DomainTag::Ledger,
        DomainTag::Recover,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            DomainTag::Plain => "coop-attest/plain/v1",
            DomainTag::Blinded => "coop-attest/blinded/v1",
            DomainTag::Counter => "coop-attest/counter/v1",
            DomainTag::Ledger => "coop-attest/ledger/v1",
            DomainTag::Recover => "coop-attest/recover/v1",
        }
    }
}

impl FromStr for DomainTag {
    type Err = CryptoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CryptoError::UnknownDomainTag(s.to_owned()))
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    #[serde(with = "serde_bytes")]
    pub public_key: Vec<u8>,
    #[serde(with = "serde_bytes")]
    pub secret_key: Vec<u8>,
    pub key_id: Digest,
}

impl KeyPair {
    /// Construct a key pair, deriving `key_id` from the public key.
    pub fn from_parts(public_key: Vec<u8>, secret_key: Vec<u8>) -> Self {
        let key_id = digest(&public_key);
        KeyPair {
            public_key,
            secret_key,
            key_id,
        }
    }

    pub fn public(&self) -> PublicKey {
        PublicKey {
            public_key: self.public_key.clone(),
            key_id: self.key_id,
        }
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("key_id", &self.key_id)
            .field("public_key", &hex::encode(&self.public_key))
            .finish_non_exhaustive()
    }
}

/// The shareable half of a [`KeyPair`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicKey {
    #[serde(with = "serde_bytes")]
    pub public_key: Vec<u8>,
    pub key_id: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(with = "serde_bytes")]
    pub bytes: Vec<u8>,
    pub signer_key_id: Digest,
    pub domain_tag: String,
}

/// A signature algorithm behind the domain-separated sign/verify contract.
pub trait SignatureScheme {
    fn name(&self) -> &'static str;
    /// Derive a key pair from seed bytes; the seed is never empty here.
    fn derive_keypair(&self, seed: &[u8]) -> KeyPair;
    fn sign_raw(&self, secret_key: &[u8], message: &[u8]) -> Vec<u8>;
    fn verify_raw(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool;
}

/// Ed25519 with secret keys derived as SHA-256 of the seed.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ed25519;

impl SignatureScheme for Ed25519 {
    fn name(&self) -> &'static str {
        "ed25519"
    }

    fn derive_keypair(&self, seed: &[u8]) -> KeyPair {
        let mut hasher = Sha256::new();
        hasher.update(b"coop-attest/keygen/v1\0");
        hasher.update(seed);
        let secret: [u8; 32] = hasher.finalize().into();
        let signing = ed25519_dalek::SigningKey::from_bytes(&secret);
        KeyPair::from_parts(signing.verifying_key().to_bytes().to_vec(), secret.to_vec())
    }

    fn sign_raw(&self, secret_key: &[u8], message: &[u8]) -> Vec<u8> {
        let Ok(secret) = <[u8; 32]>::try_from(secret_key) else {
            return Vec::new();
        };
        ed25519_dalek::SigningKey::from_bytes(&secret)
            .sign(message)
            .to_bytes()
            .to_vec()
    }

    fn verify_raw(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        let Ok(pk) = <[u8; 32]>::try_from(public_key) else {
            return false;
        };
        let Ok(vk) = ed25519_dalek::VerifyingKey::from_bytes(&pk) else {
            return false;
        };
        let Ok(sig) = ed25519_dalek::Signature::from_slice(signature) else {
            return false;
        };
        vk.verify(message, &sig).is_ok()
    }
}

/// Keyless scheme: anyone holding the public key can produce a valid
/// signature. Only useful for exercising rejection paths.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullScheme;

impl SignatureScheme for NullScheme {
    fn name(&self) -> &'static str {
        "null"
    }

    fn derive_keypair(&self, seed: &[u8]) -> KeyPair {
        let public = digest(&[b"null-scheme\0".as_slice(), seed].concat());
        KeyPair::from_parts(public.as_bytes().to_vec(), public.as_bytes().to_vec())
    }

    fn sign_raw(&self, secret_key: &[u8], message: &[u8]) -> Vec<u8> {
        digest(&[secret_key, message].concat()).as_bytes().to_vec()
    }

    fn verify_raw(&self, public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
        digest(&[public_key, message].concat()).as_bytes().as_slice() == signature
    }
}

fn framed(tag: DomainTag, message: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(tag.as_str().len() + 1 + message.len());
    out.extend_from_slice(tag.as_str().as_bytes());
    out.push(0);
    out.extend_from_slice(message);
    out
}

pub fn keygen(seed: &[u8]) -> Result<KeyPair, CryptoError> {
    keygen_with(&Ed25519, seed)
}

pub fn keygen_with(scheme: &dyn SignatureScheme, seed: &[u8]) -> Result<KeyPair, CryptoError> {
    if seed.is_empty() {
        return Err(CryptoError::EmptySeed);
    }
    Ok(scheme.derive_keypair(seed))
}

pub fn sign(key: &KeyPair, domain_tag: &str, message: &[u8]) -> Result<Signature, CryptoError> {
    sign_with(&Ed25519, key, domain_tag, message)
}

pub fn sign_with(
    scheme: &dyn SignatureScheme,
    key: &KeyPair,
    domain_tag: &str,
    message: &[u8],
) -> Result<Signature, CryptoError> {
    let tag: DomainTag = domain_tag.parse()?;
    Ok(Signature {
        bytes: scheme.sign_raw(&key.secret_key, &framed(tag, message)),
        signer_key_id: key.key_id,
        domain_tag: tag.as_str().to_owned(),
    })
}

/// True iff `sig` was made over `message` under `domain_tag` by the holder of
/// `public_key`.
pub fn verify(public_key: &[u8], domain_tag: &str, message: &[u8], sig: &Signature) -> Result<bool, CryptoError> {
    verify_with(&Ed25519, public_key, domain_tag, message, sig)
}

pub fn verify_with(
    scheme: &dyn SignatureScheme,
    public_key: &[u8],
    domain_tag: &str,
    message: &[u8],
    sig: &Signature,
) -> Result<bool, CryptoError> {
    let tag: DomainTag = domain_tag.parse()?;
    if sig.domain_tag != tag.as_str() || sig.signer_key_id != digest(public_key) {
        return Ok(false);
    }
    Ok(scheme.verify_raw(public_key, &framed(tag, message), &sig.bytes))
}

/// Signing and verifying with a registered tag cannot fail.
pub(crate) fn sign_tagged(key: &KeyPair, tag: DomainTag, message: &[u8]) -> Signature {
    sign(key, tag.as_str(), message).expect("registered tag")
}

pub(crate) fn verify_tagged(public_key: &[u8], tag: DomainTag, message: &[u8], sig: &Signature) -> bool {
    verify(public_key, tag.as_str(), message, sig).unwrap_or(false)
}
