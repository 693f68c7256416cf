//! Key-ring directory: one `key-<id>.key` file per key, first line the
//! 32-byte secret as 64 hex digits, second line the ISO-8601 creation time.
//! The directory stands in for the shared LAN folder; rescanning it picks
//! up new keys and advances the current signing key.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use rand::RngCore;
use tcgx_core::signature::{KeyRecord, KeyRing, SECRET_LEN};
use tcgx_core::Timestamp;

use crate::error::{Error, Result};

pub const KEY_PREFIX: &str = "key-";
pub const KEY_SUFFIX: &str = ".key";

/// A key file that was skipped during a scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyWarning {
    pub file: PathBuf,
    pub reason: String,
}

impl std::fmt::Display for KeyWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.file.display(), self.reason)
    }
}

#[derive(Debug, Clone)]
pub struct KeyRingDir {
    pub dir: PathBuf,
    pub ring: KeyRing,
    pub warnings: Vec<KeyWarning>,
}

impl KeyRingDir {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let mut me = Self {
            dir: dir.into(),
            ring: KeyRing::new(),
            warnings: Vec::new(),
        };
        me.refresh()?;
        Ok(me)
    }

    /// Rescans the directory and swaps in the new ring. On error the
    /// previous ring is kept.
    pub fn refresh(&mut self) -> Result<()> {
        let (ring, warnings) = scan(&self.dir)?;
        self.ring = ring;
        self.warnings = warnings;
        Ok(())
    }
}

/// Key id encoded in a key file name, if the name follows the pattern.
pub fn key_id_of(file_name: &str) -> Option<&str> {
    let id = file_name.strip_prefix(KEY_PREFIX)?.strip_suffix(KEY_SUFFIX)?;
    valid_key_id(id).then_some(id)
}

pub fn valid_key_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
}

pub fn scan(dir: &Path) -> Result<(KeyRing, Vec<KeyWarning>)> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = key_id_of(&name) {
            files.push((id.to_string(), entry.path()));
        }
    }
    files.sort();

    let mut ring = KeyRing::new();
    let mut warnings = Vec::new();
    for (id, path) in files {
        match fs::read_to_string(&path) {
            Ok(text) => match parse_key_file(&id, &text) {
                Ok(record) => ring.insert(record),
                Err(reason) => warnings.push(KeyWarning { file: path, reason }),
            },
            Err(e) => warnings.push(KeyWarning {
                file: path,
                reason: e.to_string(),
            }),
        }
    }
    Ok((ring, warnings))
}

pub fn parse_key_file(key_id: &str, text: &str) -> std::result::Result<KeyRecord, String> {
    let mut lines = text.lines();
    let secret_line = lines.next().ok_or("empty key file")?.trim();
    let created_line = lines.next().ok_or("missing created_at line")?.trim();
    let bytes = hex::decode(secret_line).map_err(|e| format!("secret is not hex: {e}"))?;
    let secret: [u8; SECRET_LEN] = bytes
        .try_into()
        .map_err(|b: Vec<u8>| format!("secret must be {SECRET_LEN} bytes, found {}", b.len()))?;
    let created_at = parse_timestamp(created_line).ok_or_else(|| format!("bad created_at {created_line:?}"))?;
    Ok(KeyRecord::new(key_id, secret, created_at))
}

/// Accepts RFC 3339 timestamps, naive date-times (taken as UTC) and dates.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(t.timestamp()));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(Timestamp(t.and_utc().timestamp()));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| Timestamp(t.and_utc().timestamp()))
}

pub fn format_timestamp(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t.0, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.0.to_string())
}

pub fn key_file_contents(record: &KeyRecord) -> String {
    format!("{}\n{}\n", hex::encode(record.secret), format_timestamp(record.created_at))
}

pub fn key_path(dir: &Path, key_id: &str) -> PathBuf {
    dir.join(format!("{KEY_PREFIX}{key_id}{KEY_SUFFIX}"))
}

/// Writes a new key with a fresh random secret. Refuses to overwrite.
pub fn write_key(dir: &Path, key_id: &str, secret: [u8; SECRET_LEN], created_at: Timestamp) -> Result<KeyRecord> {
    if !valid_key_id(key_id) {
        return Err(Error::Usage(format!(
            "invalid key id {key_id:?}: use letters, digits, '-', '_' or '.'"
        )));
    }
    let path = key_path(dir, key_id);
    if path.exists() {
        return Err(Error::Exists {
            what: "key",
            id: key_id.into(),
        });
    }
    let record = KeyRecord::new(key_id, secret, created_at);
    crate::io::atomic_write(&path, key_file_contents(&record).as_bytes())?;
    Ok(record)
}

pub fn generate_key(dir: &Path, key_id: Option<&str>, created_at: Timestamp) -> Result<KeyRecord> {
    let mut secret = [0u8; SECRET_LEN];
    rand::rngs::OsRng.fill_bytes(&mut secret);
    let default_id;
    let id = match key_id {
        Some(id) => id,
        None => {
            default_id = DateTime::<Utc>::from_timestamp(created_at.0, 0)
                .map(|d| d.format("%Y%m%dT%H%M%SZ").to_string())
                .unwrap_or_else(|| created_at.0.to_string());
            &default_id
        }
    };
    write_key(dir, id, secret, created_at)
}
