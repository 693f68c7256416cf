//! Prototype libraries: a flat directory of `<id>.tcpx` files, each holding
//! one parameter set and no geometry.

use std::fs;
use std::path::{Path, PathBuf};

use tcgx_core::codec::{decode_prototype_file, encode_prototype_file, PrototypeRecord};
use tcgx_core::params::GeneratorKind;
use tcgx_core::{regenerate, validate_params, EntityKind, ModuleParams, Point2, Timestamp};

use crate::error::{Error, Result};

pub const PROTOTYPE_EXT: &str = "tcpx";

/// File-stem id for a prototype name: lowercase alphanumerics with runs of
/// anything else collapsed to a single `-`. "typical bay" → "typical-bay".
pub fn sanitize_id(name: &str) -> String {
    let mut out = String::new();
    let mut pending_dash = false;
    for c in name.chars() {
        if c.is_alphanumeric() || c == '_' {
            if pending_dash && !out.is_empty() {
                out.push('-');
            }
            pending_dash = false;
            out.extend(c.to_lowercase());
        } else {
            pending_dash = true;
        }
    }
    out
}

pub fn prototype_path(root: &Path, id: &str) -> PathBuf {
    root.join(format!("{id}.{PROTOTYPE_EXT}"))
}

/// Catalog entry without the parameter block.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PrototypeSummary {
    pub id: String,
    pub name: String,
    pub kind: GeneratorKind,
    pub created_at: Timestamp,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl From<&PrototypeRecord> for PrototypeSummary {
    fn from(r: &PrototypeRecord) -> Self {
        Self {
            id: r.id.clone(),
            name: r.name.clone(),
            kind: r.kind(),
            created_at: r.created_at,
            note: r.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PrototypeCatalog {
    pub root: PathBuf,
    pub records: Vec<PrototypeSummary>,
    /// Files that could not be read as prototypes, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<(PathBuf, String)>,
}

pub fn save_prototype(
    root: &Path,
    name: &str,
    params: &ModuleParams,
    note: Option<&str>,
    created_at: Timestamp,
) -> Result<PrototypeRecord> {
    let violations = validate_params(params);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let id = sanitize_id(name);
    if id.is_empty() {
        return Err(Error::Usage(format!("prototype name {name:?} has no letters or digits")));
    }
    let record = PrototypeRecord {
        id: id.clone(),
        name: name.trim().to_string(),
        params: params.clone(),
        created_at,
        note: note.map(str::to_string),
    };
    let path = prototype_path(root, &id);
    crate::io::atomic_create(&path, &encode_prototype_file(&record)).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::Exists { what: "prototype", id }
        } else {
            Error::io(&path, e)
        }
    })?;
    Ok(record)
}

/// Scans the library; records sorted by name (then id).
pub fn list_prototypes(root: &Path, kind: Option<GeneratorKind>) -> Result<PrototypeCatalog> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(PROTOTYPE_EXT) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        match read_record(&path, stem) {
            Ok(r) => {
                if kind.is_none_or(|k| r.kind() == k) {
                    records.push(PrototypeSummary::from(&r));
                }
            }
            Err(e) => skipped.push((path.clone(), e.to_string())),
        }
    }
    records.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.id.cmp(&b.id)));
    skipped.sort();
    Ok(PrototypeCatalog {
        root: root.to_path_buf(),
        records,
        skipped,
    })
}

fn read_record(path: &Path, id: &str) -> Result<PrototypeRecord> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut record = decode_prototype_file(&bytes).map_err(|e| Error::InvalidPrototype {
        id: id.into(),
        reason: e.to_string(),
    })?;
    // the file stem is the id
    record.id = id.to_string();
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPrototype {
    pub record: PrototypeRecord,
    /// Geometry regenerated at origin (0, 0), scale 1.
    pub preview: Vec<EntityKind>,
}

pub fn load_prototype(root: &Path, id: &str) -> Result<LoadedPrototype> {
    let not_found = || Error::NotFound {
        what: "prototype",
        id: id.into(),
    };
    // only ids that sanitize to themselves name library files
    if id.is_empty() || sanitize_id(id) != id {
        return Err(not_found());
    }
    let path = prototype_path(root, id);
    if !path.is_file() {
        return Err(not_found());
    }
    let record = read_record(&path, id)?;
    let preview = regenerate(&record.params, Point2::ORIGIN, 1.0).map_err(|v| Error::InvalidPrototype {
        id: id.into(),
        reason: v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    })?;
    Ok(LoadedPrototype { record, preview })
}
