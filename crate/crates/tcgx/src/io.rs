//! Drawing files on disk: atomic save, load with signature check, and
//! in-place signing.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use tcgx_core::codec::{canonical_bytes, decode_drawing_file, drawing_from_bytes, encode_drawing_file};
use tcgx_core::signature::{self, SignatureBlock, SignatureStatus};
use tcgx_core::{Drawing, KeyRing};

use crate::error::{Error, Result};
use crate::now;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers see either the old or the new file, never a torn one.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Like [`atomic_write`] but fails with `AlreadyExists` instead of
/// replacing an existing file.
pub fn atomic_create(path: &Path, bytes: &[u8]) -> std::result::Result<(), std::io::Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist_noclobber(path).map_err(|e| e.error)?;
    Ok(())
}

/// Saves a drawing; with a key ring the file is signed under its current key.
pub fn save_drawing(drawing: &Drawing, path: &Path, ring: Option<&KeyRing>) -> Result<Option<SignatureBlock>> {
    let payload = canonical_bytes(drawing);
    let block = match ring {
        Some(ring) => Some(signature::sign(&payload, ring, now())?),
        None => None,
    };
    atomic_write(path, &encode_drawing_file(&payload, block.as_ref()))?;
    Ok(block)
}

#[derive(Debug, Clone)]
pub struct LoadedDrawing {
    pub drawing: Drawing,
    pub signature: Option<SignatureBlock>,
    pub status: SignatureStatus,
}

/// Parses drawing-file bytes; `path` only labels errors.
pub fn decode(bytes: &[u8], ring: &KeyRing, path: &Path) -> Result<LoadedDrawing> {
    let file = decode_drawing_file(bytes).map_err(|e| Error::format(path, e))?;
    let drawing = drawing_from_bytes(file.payload).map_err(|e| Error::format(path, e))?;
    let status = match &file.signature {
        None => SignatureStatus::Unsigned,
        Some(block) => signature::verify(file.payload, block, ring),
    };
    Ok(LoadedDrawing {
        drawing,
        signature: file.signature,
        status,
    })
}

/// Loads a drawing and checks its signature against `ring` (an empty ring
/// reports signed files as `unknown_key`).
pub fn load_drawing(path: &Path, ring: &KeyRing) -> Result<LoadedDrawing> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, ring, path)
}

/// Re-signs an existing drawing file in place under the ring's current key.
/// The payload bytes are kept as they are.
pub fn sign_file(path: &Path, ring: &KeyRing) -> Result<SignatureBlock> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file = decode_drawing_file(&bytes).map_err(|e| Error::format(path, e))?;
    drawing_from_bytes(file.payload).map_err(|e| Error::format(path, e))?;
    let block = signature::sign(file.payload, ring, now())?;
    atomic_write(path, &encode_drawing_file(file.payload, Some(&block)))?;
    Ok(block)
}

#[derive(Debug, Clone)]
pub struct CheckedSignature {
    pub signature: Option<SignatureBlock>,
    pub status: SignatureStatus,
}

/// Signature status of a drawing file. Only the container is parsed, so a
/// tampered payload reports `invalid` rather than a format error.
pub fn verify_file(path: &Path, ring: &KeyRing) -> Result<CheckedSignature> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let file = decode_drawing_file(&bytes).map_err(|e| Error::format(path, e))?;
    let status = match &file.signature {
        None => SignatureStatus::Unsigned,
        Some(block) => signature::verify(file.payload, block, ring),
    };
    Ok(CheckedSignature {
        signature: file.signature,
        status,
    })
}
