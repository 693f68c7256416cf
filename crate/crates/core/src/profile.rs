//! Work profiles: named subsets of the command vocabulary, one per
//! discipline bureau, hiding commands a drawing mark does not need.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::drawing::DRAWING_MARKS;

/// Name of the profile that always allows every command.
pub const FULL_PROFILE: &str = "полный";

macro_rules! commands {
    ($($variant:ident => $name:literal, mutating: $mutating:literal;)*) => {
        /// The fixed command vocabulary shared by the CLI and the service.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum CommandId {
            $($variant,)*
        }

        impl CommandId {
            pub const ALL: &'static [CommandId] = &[$(CommandId::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(CommandId::$variant => $name,)*
                }
            }

            /// Whether the command writes a drawing, library or key file.
            pub fn is_mutating(self) -> bool {
                match self {
                    $(CommandId::$variant => $mutating,)*
                }
            }
        }
    };
}

commands! {
    New => "new", mutating: true;
    AddGrid => "add-grid", mutating: true;
    AddRoute => "add-route", mutating: true;
    InsertAxes => "insert-axes", mutating: true;
    Regen => "regen", mutating: true;
    Move => "move", mutating: true;
    Stretch => "stretch", mutating: true;
    Delete => "delete", mutating: true;
    Info => "info", mutating: false;
    Spec => "spec", mutating: false;
    CheckDups => "check-dups", mutating: false;
    ProtoSave => "proto-save", mutating: true;
    ProtoList => "proto-list", mutating: false;
    ProtoLoad => "proto-load", mutating: true;
    Render => "render", mutating: false;
    Sign => "sign", mutating: true;
    Verify => "verify", mutating: false;
    Keygen => "keygen", mutating: true;
    Serve => "serve", mutating: false;
}

impl CommandId {
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for CommandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("unknown command id {0:?}")]
    UnknownCommand(String),
    #[error("profile {0:?} defined twice")]
    DuplicateProfile(String),
    #[error("profile name must not be empty")]
    EmptyName,
    #[error("profile {profile:?} serves unknown mark {mark:?}")]
    UnknownMark { profile: String, mark: String },
}

/// Expands a command pattern: an exact id, `prefix-*`, or `*`.
pub fn expand_pattern(pattern: &str) -> Result<Vec<CommandId>, ProfileError> {
    let pattern = pattern.trim();
    if pattern == "*" {
        return Ok(CommandId::ALL.to_vec());
    }
    if let Some(prefix) = pattern.strip_suffix('*') {
        let matched: Vec<CommandId> = CommandId::ALL
            .iter()
            .copied()
            .filter(|c| c.as_str().starts_with(prefix))
            .collect();
        if matched.is_empty() {
            return Err(ProfileError::UnknownCommand(pattern.into()));
        }
        return Ok(matched);
    }
    CommandId::parse(pattern)
        .map(|c| alloc::vec![c])
        .ok_or_else(|| ProfileError::UnknownCommand(pattern.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub name: String,
    pub allowed: BTreeSet<CommandId>,
    pub marks: BTreeSet<String>,
}

impl Profile {
    /// Builds a profile from command patterns (see [`expand_pattern`]).
    pub fn from_patterns<P, M>(name: &str, patterns: P, marks: M) -> Result<Self, ProfileError>
    where
        P: IntoIterator,
        P::Item: AsRef<str>,
        M: IntoIterator,
        M::Item: Into<String>,
    {
        if name.trim().is_empty() {
            return Err(ProfileError::EmptyName);
        }
        let mut allowed = BTreeSet::new();
        for p in patterns {
            allowed.extend(expand_pattern(p.as_ref())?);
        }
        Ok(Self {
            name: name.into(),
            allowed,
            marks: marks.into_iter().map(Into::into).collect(),
        })
    }

    pub fn full<M>(marks: M) -> Self
    where
        M: IntoIterator,
        M::Item: Into<String>,
    {
        Self {
            name: FULL_PROFILE.into(),
            allowed: CommandId::ALL.iter().copied().collect(),
            marks: marks.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.name == FULL_PROFILE
    }

    /// Allowed commands, sorted by id string.
    pub fn available_commands(&self) -> Vec<CommandId> {
        let mut out: Vec<CommandId> = self.allowed.iter().copied().collect();
        out.sort_by_key(|c| c.as_str());
        out
    }

    /// Closed-world check: unknown command strings are never allowed.
    pub fn is_allowed(&self, command: &str) -> bool {
        CommandId::parse(command).is_some_and(|c| self.allows(c))
    }

    pub fn allows(&self, command: CommandId) -> bool {
        self.allowed.contains(&command)
    }
}

/// Loaded profiles plus the configured drawing-mark list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSet {
    pub marks: Vec<String>,
    profiles: Vec<Profile>,
}

impl ProfileSet {
    /// Validates mark references and adds the full profile when absent.
    /// A profile named [`FULL_PROFILE`] is always widened to all commands.
    pub fn new(marks: Vec<String>, profiles: Vec<Profile>) -> Result<Self, ProfileError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(profiles.len() + 1);
        for mut p in profiles {
            if !seen.insert(p.name.clone()) {
                return Err(ProfileError::DuplicateProfile(p.name));
            }
            if let Some(mark) = p.marks.iter().find(|m| !marks.contains(m)) {
                return Err(ProfileError::UnknownMark {
                    profile: p.name.clone(),
                    mark: mark.clone(),
                });
            }
            if p.is_full() {
                p.allowed = CommandId::ALL.iter().copied().collect();
            }
            out.push(p);
        }
        if !seen.contains(FULL_PROFILE) {
            out.push(Profile::full(marks.iter().cloned()));
        }
        Ok(Self { marks, profiles: out })
    }

    /// The shipped defaults.
    pub fn builtin() -> Self {
        let marks: Vec<String> = DRAWING_MARKS.iter().map(|m| String::from(*m)).collect();
        let common = ["new", "info", "regen", "move", "stretch", "delete", "render", "proto-*", "sign", "verify"];
        let tx = Profile::from_patterns(
            "ТХ",
            common.iter().chain(&["add-route", "insert-axes", "spec", "check-dups"]),
            ["ТХ", "ТК", "ГСН", "ГТ", "ГП"],
        )
        .expect("builtin profile");
        let ar = Profile::from_patterns("АР", common.iter().chain(&["add-grid"]), ["АР", "КЖ", "КМ", "КД"])
            .expect("builtin profile");
        let full = Profile::full(marks.iter().cloned());
        Self::new(marks, alloc::vec![tx, ar, full]).expect("builtin profiles are consistent")
    }

    pub fn get(&self, name: &str) -> Option<&Profile> {
        self.profiles.iter().find(|p| p.name == name)
    }

    pub fn full(&self) -> &Profile {
        self.get(FULL_PROFILE).expect("full profile always present")
    }

    pub fn iter(&self) -> impl Iterator<Item = &Profile> {
        self.profiles.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|p| p.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles() {
        let set = ProfileSet::builtin();
        let names: Vec<&str> = set.names().collect();
        assert_eq!(names, ["ТХ", "АР", "полный"]);
        let ar = set.get("АР").unwrap();
        assert!(ar.is_allowed("add-grid"));
        assert!(!ar.is_allowed("add-route"));
        assert!(set.get("ТХ").unwrap().is_allowed("add-route"));
        assert!(!set.get("ТХ").unwrap().is_allowed("add-grid"));
    }

    #[test]
    fn full_profile_allows_everything() {
        let set = ProfileSet::builtin();
        let full = set.full();
        let mut all: Vec<CommandId> = CommandId::ALL.to_vec();
        all.sort_by_key(|c| c.as_str());
        assert_eq!(full.available_commands(), all);
        for c in CommandId::ALL {
            assert!(full.is_allowed(c.as_str()));
        }
        assert!(!full.is_allowed("format-disk"));
    }

    #[test]
    fn available_commands_sorted_and_stable() {
        let set = ProfileSet::builtin();
        let tx = set.get("ТХ").unwrap();
        let a = tx.available_commands();
        let names: Vec<&str> = a.iter().map(|c| c.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(a, tx.available_commands());
        assert!(names.contains(&"proto-list") && names.contains(&"proto-save") && names.contains(&"proto-load"));
    }

    #[test]
    fn marks_cover_the_mark_list() {
        let set = ProfileSet::builtin();
        let covered: BTreeSet<&String> = set.iter().flat_map(|p| p.marks.iter()).collect();
        for m in DRAWING_MARKS {
            assert!(covered.contains(&String::from(m)), "{m}");
        }
    }

    #[test]
    fn unknown_command_rejected() {
        assert_eq!(
            Profile::from_patterns("ТХ", ["add-route", "teleport"], ["ТХ"]),
            Err(ProfileError::UnknownCommand("teleport".into()))
        );
        assert!(expand_pattern("zzz-*").is_err());
        assert_eq!(expand_pattern("proto-*").unwrap().len(), 3);
    }

    #[test]
    fn full_profile_is_widened_and_added() {
        let marks = alloc::vec![String::from("ТХ")];
        let narrow_full = Profile::from_patterns(FULL_PROFILE, ["spec"], ["ТХ"]).unwrap();
        let set = ProfileSet::new(marks.clone(), alloc::vec![narrow_full]).unwrap();
        assert_eq!(set.full().allowed.len(), CommandId::ALL.len());

        let only_tx = Profile::from_patterns("ТХ", ["spec"], ["ТХ"]).unwrap();
        let set = ProfileSet::new(marks.clone(), alloc::vec![only_tx]).unwrap();
        assert!(set.get(FULL_PROFILE).is_some());

        let bad_mark = Profile::from_patterns("ТХ", ["spec"], ["ZZ"]).unwrap();
        assert!(matches!(ProfileSet::new(marks, alloc::vec![bad_mark]), Err(ProfileError::UnknownMark { .. })));
    }
}
