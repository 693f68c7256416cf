//! Keyed-digest signatures over canonical drawing payloads.
//!
//! `keyed-digest-v1` is HMAC-SHA-256 under a 32-byte shared secret. The key
//! ring holds every known key; the current signing key is the one with the
//! greatest `(created_at, key_id)`. Older keys stay in the ring so that
//! signatures made before a rotation keep verifying.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use hmac::{Hmac, Mac};
use sha2::Sha256;

pub const ALGORITHM: &str = "keyed-digest-v1";
pub const DIGEST_LEN: usize = 32;
pub const SECRET_LEN: usize = 32;

type HmacSha256 = Hmac<Sha256>;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Timestamp(pub i64);

#[derive(Clone, PartialEq, Eq)]
pub struct KeyRecord {
    pub key_id: String,
    pub secret: [u8; SECRET_LEN],
    pub created_at: Timestamp,
}

impl KeyRecord {
    pub fn new(key_id: impl Into<String>, secret: [u8; SECRET_LEN], created_at: Timestamp) -> Self {
        Self {
            key_id: key_id.into(),
            secret,
            created_at,
        }
    }
}

impl fmt::Debug for KeyRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyRecord")
            .field("key_id", &self.key_id)
            .field("secret", &"<redacted>")
            .field("created_at", &self.created_at)
            .finish()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyRing {
    records: BTreeMap<String, KeyRecord>,
}

impl KeyRing {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a key.
    pub fn insert(&mut self, record: KeyRecord) {
        self.records.insert(record.key_id.clone(), record);
    }

    pub fn get(&self, key_id: &str) -> Option<&KeyRecord> {
        self.records.get(key_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn key_ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// The signing key: greatest `(created_at, key_id)`.
    pub fn current(&self) -> Option<&KeyRecord> {
        self.records
            .values()
            .max_by(|a, b| (a.created_at, &a.key_id).cmp(&(b.created_at, &b.key_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignatureBlock {
    pub key_id: String,
    pub algorithm: String,
    pub digest: Vec<u8>,
    pub signed_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", content = "key_id", rename_all = "snake_case"))]
pub enum SignatureStatus {
    Unsigned,
    Valid(String),
    Invalid,
    UnknownKey(String),
}

impl SignatureStatus {
    pub fn is_valid(&self) -> bool {
        matches!(self, SignatureStatus::Valid(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            SignatureStatus::Unsigned => "unsigned",
            SignatureStatus::Valid(_) => "valid",
            SignatureStatus::Invalid => "invalid",
            SignatureStatus::UnknownKey(_) => "unknown_key",
        }
    }
}

impl fmt::Display for SignatureStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignatureStatus::Valid(k) | SignatureStatus::UnknownKey(k) => write!(f, "{} ({k})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("key ring is empty")]
pub struct EmptyKeyRing;

fn mac(secret: &[u8; SECRET_LEN], payload: &[u8]) -> HmacSha256 {
    let mut mac = HmacSha256::new_from_slice(secret).expect("HMAC accepts any key length");
    mac.update(payload);
    mac
}

/// Signs `payload` with the ring's current key.
pub fn sign(payload: &[u8], ring: &KeyRing, signed_at: Timestamp) -> Result<SignatureBlock, EmptyKeyRing> {
    let key = ring.current().ok_or(EmptyKeyRing)?;
    Ok(sign_with(payload, key, signed_at))
}

pub fn sign_with(payload: &[u8], key: &KeyRecord, signed_at: Timestamp) -> SignatureBlock {
    SignatureBlock {
        key_id: key.key_id.clone(),
        algorithm: ALGORITHM.into(),
        digest: mac(&key.secret, payload).finalize().into_bytes().to_vec(),
        signed_at,
    }
}

/// Checks `block` against `payload`. The digest comparison is constant-time.
pub fn verify(payload: &[u8], block: &SignatureBlock, ring: &KeyRing) -> SignatureStatus {
    let Some(key) = ring.get(&block.key_id) else {
        return SignatureStatus::UnknownKey(block.key_id.clone());
    };
    if block.algorithm != ALGORITHM || block.digest.len() != DIGEST_LEN {
        return SignatureStatus::Invalid;
    }
    match mac(&key.secret, payload).verify_slice(&block.digest) {
        Ok(()) => SignatureStatus::Valid(block.key_id.clone()),
        Err(_) => SignatureStatus::Invalid,
    }
}
