use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::diagnostic::Diagnostic;
use crate::label::{Label, Principal};
use crate::syntax::Loc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Secure,
    Misuse,
}

/// Labels observed at one function exit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub function: String,
    pub loc: Loc,
    pub executor: Principal,
    /// Callee locals just before the `return`.
    pub locals: BTreeMap<String, Label>,
    pub pc: Label,
    /// Label handed back to the caller, after any downgrade.
    pub returned: Option<Label>,
}

/// Number of body passes a loop needed to reach its fixed point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub function: Option<String>,
    pub loc: Loc,
    pub passes: u32,
}

/// Labels after one statement (or one loop/selection head).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub function: Option<String>,
    pub loc: Loc,
    pub construct: String,
    pub pc: Label,
    pub changed: BTreeMap<String, Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub verdict: Verdict,
    pub executor: Principal,
    pub diagnostics: Vec<Diagnostic>,
    /// Scope the labels below belong to: the top level, or the function in
    /// which a misuse stopped the analysis.
    pub scope: Option<String>,
    pub labels: BTreeMap<String, Label>,
    pub globals: BTreeSet<String>,
    pub pc: Label,
    pub calls: Vec<CallRecord>,
    pub loops: Vec<LoopRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

impl AnalysisReport {
    pub fn is_secure(&self) -> bool {
        self.verdict == Verdict::Secure
    }

    pub fn label(&self, name: &str) -> Option<&Label> {
        self.labels.get(name)
    }

    pub fn locals(&self) -> impl Iterator<Item = (&String, &Label)> {
        self.labels.iter().filter(|(k, _)| !self.globals.contains(*k))
    }

    pub fn first_diagnostic(&self) -> Option<&Diagnostic> {
        self.diagnostics.first()
    }

    pub fn max_loop_passes(&self) -> u32 {
        self.loops.iter().map(|l| l.passes).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}
