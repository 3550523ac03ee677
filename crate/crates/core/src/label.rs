//! Readers-writers flow labels.
//!
//! A label is a triple `(owner, readers, writers)` over a finite set of
//! principals. Readers describe who may learn the information and writers
//! record who has influenced it so far. Information may flow from `l1` to
//! `l2` when `l2` has no more readers and no fewer writers than `l1`.
//!
//! The owner takes no part in the order or the lattice operations; it is only
//! consulted when a label is downgraded.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Rendering of the anonymous owner produced by join and meet.
pub const ANONYMOUS: &str = "-";

/// Wildcard accepted in raw input for "every principal".
pub const WILDCARD: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("principal name must not be empty")]
    EmptyName,
    #[error("`{0}` is not a valid principal name")]
    InvalidName(String),
    #[error("principal universe must not be empty")]
    EmptyUniverse,
    #[error("principal `{0}` is listed twice")]
    DuplicatePrincipal(String),
    #[error("principal `{0}` is not part of the universe")]
    UnknownPrincipal(String),
    #[error("malformed label `{0}`")]
    Malformed(String),
}

/// A named source of authority.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Principal(Arc<str>);

impl Principal {
    pub fn new(name: &str) -> Result<Self, LatticeError> {
        if name.is_empty() {
            return Err(LatticeError::EmptyName);
        }
        let reserved = name == WILDCARD || name == ANONYMOUS;
        let bad_char = name
            .chars()
            .any(|c| c.is_whitespace() || "{}(),'\"".contains(c));
        if reserved || bad_char {
            return Err(LatticeError::InvalidName(name.to_string()));
        }
        Ok(Principal(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Principal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Principal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Principal::new(&name).map_err(D::Error::custom)
    }
}

pub type PrincipalSet = BTreeSet<Principal>;

/// The finite set of principals every label of one analysis ranges over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalUniverse {
    members: PrincipalSet,
}

impl PrincipalUniverse {
    pub fn new<I, S>(names: I) -> Result<Self, LatticeError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut members = PrincipalSet::new();
        for name in names {
            let p = Principal::new(name.as_ref())?;
            if !members.insert(p) {
                return Err(LatticeError::DuplicatePrincipal(name.as_ref().to_string()));
            }
        }
        if members.is_empty() {
            return Err(LatticeError::EmptyUniverse);
        }
        Ok(PrincipalUniverse { members })
    }

    pub fn members(&self) -> &PrincipalSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &Principal) -> bool {
        self.members.contains(p)
    }

    /// Looks a principal up by name.
    pub fn principal(&self, name: &str) -> Result<Principal, LatticeError> {
        self.members
            .iter()
            .find(|p| p.as_str() == name)
            .cloned()
            .ok_or_else(|| LatticeError::UnknownPrincipal(name.to_string()))
    }

    /// `(-, P, {})`: everyone may read, nobody has written.
    pub fn bottom(&self) -> Label {
        Label {
            owner: None,
            readers: self.members.clone(),
            writers: PrincipalSet::new(),
        }
    }

    /// `(-, {}, P)`: nobody may read, everyone has written.
    pub fn top(&self) -> Label {
        Label {
            owner: None,
            readers: PrincipalSet::new(),
            writers: self.members.clone(),
        }
    }

    /// Builds a label from principal names, expanding `*` to the universe.
    pub fn label<R, W>(&self, owner: Option<&str>, readers: R, writers: W) -> Result<Label, LatticeError>
    where
        R: IntoIterator,
        R::Item: AsRef<str>,
        W: IntoIterator,
        W::Item: AsRef<str>,
    {
        let owner = match owner {
            None => None,
            Some(ANONYMOUS) => None,
            Some(name) => Some(self.principal(name)?),
        };
        Ok(Label {
            owner,
            readers: self.resolve_set(readers)?,
            writers: self.resolve_set(writers)?,
        })
    }

    pub fn resolve_set<I>(&self, names: I) -> Result<PrincipalSet, LatticeError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut set = PrincipalSet::new();
        for name in names {
            if name.as_ref() == WILDCARD {
                set.extend(self.members.iter().cloned());
            } else {
                set.insert(self.principal(name.as_ref())?);
            }
        }
        Ok(set)
    }

    /// Checks that every principal mentioned by `label` belongs here.
    pub fn check(&self, label: &Label) -> Result<(), LatticeError> {
        label
            .owner
            .iter()
            .chain(&label.readers)
            .chain(&label.writers)
            .find(|p| !self.contains(p))
            .map_or(Ok(()), |p| Err(LatticeError::UnknownPrincipal(p.to_string())))
    }

    /// Replaces the owner after checking `p` belongs to the universe.
    pub fn with_owner(&self, label: &Label, p: &Principal) -> Result<Label, LatticeError> {
        if !self.contains(p) {
            return Err(LatticeError::UnknownPrincipal(p.to_string()));
        }
        Ok(label.with_owner(p))
    }

    /// Parses the canonical text form, accepting `*` for the whole universe.
    pub fn parse_label(&self, text: &str) -> Result<Label, LatticeError> {
        let (owner, readers, writers) = split_label_text(text)?;
        self.label(Some(owner), readers, writers)
    }

    /// Display form that abbreviates a full set as `{*}`.
    pub fn display<'a>(&'a self, label: &'a Label) -> UniverseDisplay<'a> {
        UniverseDisplay { universe: self, label }
    }
}

/// Renders a label with `*` in place of the full principal set.
pub struct UniverseDisplay<'a> {
    universe: &'a PrincipalUniverse,
    label: &'a Label,
}

impl fmt::Display for UniverseDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &PrincipalSet| {
            if *s == self.universe.members {
                format!("{{{WILDCARD}}}")
            } else {
                render_set(s)
            }
        };
        write!(
            f,
            "({},{},{})",
            owner_str(&self.label.owner),
            set(&self.label.readers),
            set(&self.label.writers)
        )
    }
}

/// An RWFM label. Immutable; every operation returns a fresh value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Label {
    owner: Option<Principal>,
    readers: PrincipalSet,
    writers: PrincipalSet,
}

impl Label {
    pub fn new(owner: Option<Principal>, readers: PrincipalSet, writers: PrincipalSet) -> Self {
        Label { owner, readers, writers }
    }

    pub fn owner(&self) -> Option<&Principal> {
        self.owner.as_ref()
    }

    pub fn readers(&self) -> &PrincipalSet {
        &self.readers
    }

    pub fn writers(&self) -> &PrincipalSet {
        &self.writers
    }

    /// Can-flow-to: readers shrink and writers grow. The owner is ignored.
    pub fn leq(&self, other: &Label) -> bool {
        self.readers.is_superset(&other.readers) && self.writers.is_subset(&other.writers)
    }

    pub fn join(&self, other: &Label) -> Label {
        Label {
            owner: None,
            readers: self.readers.intersection(&other.readers).cloned().collect(),
            writers: self.writers.union(&other.writers).cloned().collect(),
        }
    }

    pub fn meet(&self, other: &Label) -> Label {
        Label {
            owner: None,
            readers: self.readers.union(&other.readers).cloned().collect(),
            writers: self.writers.intersection(&other.writers).cloned().collect(),
        }
    }

    pub fn with_owner(&self, p: &Principal) -> Label {
        Label {
            owner: Some(p.clone()),
            readers: self.readers.clone(),
            writers: self.writers.clone(),
        }
    }

    /// Equality on the readers/writers pair only.
    pub fn same_policy(&self, other: &Label) -> bool {
        self.readers == other.readers && self.writers == other.writers
    }

    pub fn can_read(&self, p: &Principal) -> bool {
        self.readers.contains(p)
    }
}

fn owner_str(owner: &Option<Principal>) -> &str {
    owner.as_ref().map_or(ANONYMOUS, Principal::as_str)
}

fn render_set(set: &PrincipalSet) -> String {
    let names: Vec<&str> = set.iter().map(Principal::as_str).collect();
    format!("{{{}}}", names.join(","))
}

/// Canonical form `(owner,{r1,r2},{w1})`, sets sorted, anonymous owner `-`.
impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})",
            owner_str(&self.owner),
            render_set(&self.readers),
            render_set(&self.writers)
        )
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn split_label_text(text: &str) -> Result<(&str, Vec<&str>, Vec<&str>), LatticeError> {
    let malformed = || LatticeError::Malformed(text.to_string());
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(malformed)?;
    let (owner, rest) = inner.split_once(',').ok_or_else(malformed)?;
    let rest = rest.trim().strip_prefix('{').ok_or_else(malformed)?;
    let (readers, rest) = rest.split_once('}').ok_or_else(malformed)?;
    let rest = rest
        .trim()
        .strip_prefix(',')
        .map(str::trim)
        .and_then(|r| r.strip_prefix('{'))
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(malformed)?;
    Ok((owner.trim(), split_names(readers), split_names(rest)))
}

fn split_names(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|n| !n.is_empty()).collect()
}

/// Parses the canonical form without a universe; `*` is rejected here.
impl FromStr for Label {
    type Err = LatticeError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (owner, readers, writers) = split_label_text(text)?;
        let set = |names: Vec<&str>| names.into_iter().map(Principal::new).collect::<Result<PrincipalSet, _>>();
        let owner = match owner {
            ANONYMOUS => None,
            name => Some(Principal::new(name)?),
        };
        Ok(Label::new(owner, set(readers)?, set(writers)?))
    }
}

/// Wire form shared by policy files and reports.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelRepr {
    owner: String,
    readers: Vec<Principal>,
    writers: Vec<Principal>,
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LabelRepr {
            owner: owner_str(&self.owner).to_string(),
            readers: self.readers.iter().cloned().collect(),
            writers: self.writers.iter().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = LabelRepr::deserialize(d)?;
        let owner = match repr.owner.as_str() {
            ANONYMOUS => None,
            name => Some(Principal::new(name).map_err(D::Error::custom)?),
        };
        Ok(Label::new(
            owner,
            repr.readers.into_iter().collect(),
            repr.writers.into_iter().collect(),
        ))
    }
}
