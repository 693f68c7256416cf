//! Profile configuration file (TOML). See `profiles.toml` for the grammar.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use tcgx_core::profile::{Profile, ProfileSet, FULL_PROFILE};

use crate::error::{Error, Result};

/// The shipped default configuration, identical to [`ProfileSet::builtin`].
pub const DEFAULT_CONFIG: &str = include_str!("../profiles.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    marks: Vec<String>,
    #[serde(default)]
    default_profile: Option<String>,
    #[serde(default)]
    profile: Vec<RawProfile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    name: String,
    #[serde(default)]
    marks: Vec<String>,
    commands: Vec<String>,
}

/// Loaded profiles plus the profile used when none is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    pub set: ProfileSet,
    pub default_profile: String,
}

impl ProfileConfig {
    pub fn builtin() -> Self {
        Self {
            set: ProfileSet::builtin(),
            default_profile: FULL_PROFILE.into(),
        }
    }

    /// Resolves an explicit profile name, falling back to the default.
    pub fn select(&self, name: Option<&str>) -> Result<&Profile> {
        let name = name.unwrap_or(&self.default_profile);
        self.set.get(name).ok_or_else(|| Error::UnknownProfile(name.into()))
    }
}

pub fn parse_profiles(text: &str, path: &Path) -> Result<ProfileConfig> {
    let config_err = |reason: String| Error::Config {
        path: path.to_path_buf(),
        reason,
    };
    let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.message().to_string()))?;
    let mut profiles = Vec::with_capacity(raw.profile.len());
    for p in raw.profile {
        profiles.push(Profile::from_patterns(&p.name, &p.commands, p.marks)?);
    }
    let set = ProfileSet::new(raw.marks, profiles)?;
    let default_profile = raw.default_profile.unwrap_or_else(|| FULL_PROFILE.into());
    if set.get(&default_profile).is_none() {
        return Err(config_err(format!("default_profile {default_profile:?} is not defined")));
    }
    Ok(ProfileConfig { set, default_profile })
}

/// Reads a profile config; a missing file (or no path) yields the built-in
/// defaults.
pub fn load_profiles(path: Option<&Path>) -> Result<ProfileConfig> {
    let Some(path) = path else {
        return Ok(ProfileConfig::builtin());
    };
    match fs::read_to_string(path) {
        Ok(text) => parse_profiles(&text, path),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(ProfileConfig::builtin()),
        Err(e) => Err(Error::io(path, e)),
    }
}
