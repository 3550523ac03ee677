//! Policy files: principals, executor, clearance and immutable global labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::label::{Label, LatticeError, Principal, PrincipalUniverse, ANONYMOUS};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed policy: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Invalid {
        context: String,
        #[source]
        source: LatticeError,
    },
    #[error("global `{0}` is declared more than once")]
    DuplicateGlobal(String),
    #[error("function `{0}` has more than one policy")]
    DuplicateFunction(String),
}

fn invalid(context: impl Into<String>) -> impl FnOnce(LatticeError) -> PolicyError {
    let context = context.into();
    move |source| PolicyError::Invalid { context, source }
}

/// Executor and clearance for the scope of one function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionPolicy {
    pub executor: Principal,
    pub clearance: Label,
}

/// A loaded and validated policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramSpec {
    universe: PrincipalUniverse,
    executor: Principal,
    clearance: Label,
    globals: BTreeMap<String, Label>,
    functions: BTreeMap<String, FunctionPolicy>,
}

impl ProgramSpec {
    pub fn new(universe: PrincipalUniverse, executor: &str, clearance: Label) -> Result<Self, PolicyError> {
        let executor = universe.principal(executor).map_err(invalid("executor"))?;
        universe.check(&clearance).map_err(invalid("clearance"))?;
        Ok(ProgramSpec {
            universe,
            executor,
            clearance,
            globals: BTreeMap::new(),
            functions: BTreeMap::new(),
        })
    }

    pub fn with_global(mut self, name: &str, label: Label) -> Result<Self, PolicyError> {
        self.universe
            .check(&label)
            .map_err(invalid(format!("global `{name}`")))?;
        if self.globals.insert(name.to_string(), label).is_some() {
            return Err(PolicyError::DuplicateGlobal(name.to_string()));
        }
        Ok(self)
    }

    pub fn with_function(mut self, name: &str, executor: &str, clearance: Label) -> Result<Self, PolicyError> {
        let context = format!("function `{name}`");
        let executor = self.universe.principal(executor).map_err(invalid(context.clone()))?;
        self.universe.check(&clearance).map_err(invalid(context))?;
        let policy = FunctionPolicy { executor, clearance };
        if self.functions.insert(name.to_string(), policy).is_some() {
            return Err(PolicyError::DuplicateFunction(name.to_string()));
        }
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let doc: PolicyDoc = serde_json::from_str(text)?;
        let universe = PrincipalUniverse::new(&doc.principals).map_err(invalid("principals"))?;
        let clearance = doc.clearance.resolve(&universe, "clearance")?;
        let mut spec = ProgramSpec::new(universe, &doc.executor, clearance)?;
        for (name, raw) in doc.globals.0 {
            let label = raw.resolve(&spec.universe, &format!("global `{name}`"))?;
            spec = spec.with_global(&name, label)?;
        }
        for (name, raw) in doc.functions.0 {
            let clearance = raw.clearance.resolve(&spec.universe, &format!("function `{name}`"))?;
            spec = spec.with_function(&name, &raw.executor, clearance)?;
        }
        Ok(spec)
    }

    /// Serializes with every `*` already expanded.
    pub fn to_json(&self) -> String {
        let doc = PolicyDoc {
            principals: self.universe.members().iter().map(|p| p.to_string()).collect(),
            executor: self.executor.to_string(),
            clearance: RawLabel::from(&self.clearance),
            globals: Entries(self.globals.iter().map(|(k, v)| (k.clone(), RawLabel::from(v))).collect()),
            functions: Entries(
                self.functions
                    .iter()
                    .map(|(k, f)| {
                        (
                            k.clone(),
                            RawFunctionPolicy {
                                executor: f.executor.to_string(),
                                clearance: RawLabel::from(&f.clearance),
                            },
                        )
                    })
                    .collect(),
            ),
        };
        serde_json::to_string_pretty(&doc).expect("policy documents always serialize")
    }

    /// Reads a label given either as a JSON object or in `(o,{r},{w})` form.
    pub fn parse_label(&self, text: &str) -> Result<Label, PolicyError> {
        let trimmed = text.trim();
        if trimmed.starts_with('{') {
            let raw: RawLabel = serde_json::from_str(trimmed)?;
            raw.resolve(&self.universe, "label")
        } else {
            self.universe.parse_label(trimmed).map_err(invalid("label"))
        }
    }

    pub fn universe(&self) -> &PrincipalUniverse {
        &self.universe
    }

    pub fn executor(&self) -> &Principal {
        &self.executor
    }

    pub fn clearance(&self) -> &Label {
        &self.clearance
    }

    pub fn globals(&self) -> &BTreeMap<String, Label> {
        &self.globals
    }

    pub fn global(&self, name: &str) -> Option<&Label> {
        self.globals.get(name)
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.globals.contains_key(name)
    }

    pub fn global_names(&self) -> BTreeSet<String> {
        self.globals.keys().cloned().collect()
    }

    pub fn functions(&self) -> &BTreeMap<String, FunctionPolicy> {
        &self.functions
    }

    pub fn function(&self, name: &str) -> Option<&FunctionPolicy> {
        self.functions.get(name)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    principals: Vec<String>,
    executor: String,
    clearance: RawLabel,
    #[serde(default)]
    globals: Entries<RawLabel>,
    #[serde(default)]
    functions: Entries<RawFunctionPolicy>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    owner: String,
    readers: Vec<String>,
    writers: Vec<String>,
}

impl RawLabel {
    fn resolve(&self, universe: &PrincipalUniverse, context: &str) -> Result<Label, PolicyError> {
        universe
            .label(Some(&self.owner), &self.readers, &self.writers)
            .map_err(invalid(context))
    }
}

impl From<&Label> for RawLabel {
    fn from(label: &Label) -> Self {
        RawLabel {
            owner: label.owner().map_or(ANONYMOUS.to_string(), |p| p.to_string()),
            readers: label.readers().iter().map(|p| p.to_string()).collect(),
            writers: label.writers().iter().map(|p| p.to_string()).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctionPolicy {
    executor: String,
    clearance: RawLabel,
}

/// A JSON object read in document order with duplicate keys preserved,
/// so that duplicates can be reported instead of silently overwritten.
struct Entries<T>(Vec<(String, T)>);

impl<T> Default for Entries<T> {
    fn default() -> Self {
        Entries(Vec::new())
    }
}

impl<T: Serialize> Serialize for Entries<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.0.iter().map(|(k, v)| (k, v)))
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Entries<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor<T>(PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for EntriesVisitor<T> {
            type Value = Entries<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry::<String, T>()? {
                    out.push(entry);
                }
                Ok(Entries(out))
            }
        }

        deserializer.deserialize_map(EntriesVisitor(PhantomData))
    }
}
