use std::fmt;

use serde::{Deserialize, Serialize};

use crate::label::Label;
use crate::syntax::Loc;

/// The premise whose failure produced a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Rule {
    /// The executing subject is not a known principal.
    InitExecutor,
    /// A global named by the policy never occurs in the program.
    InitGlobalUnused,
    /// The executor may not read a global source.
    InitReader,
    /// A global source is above the executor's clearance.
    InitClearance,
    /// Assignment to a global would lower its label.
    AssignGlobal,
    /// A selection guard flows into a global target of a branch.
    IfGlobal,
    /// A loop guard flows into a global target of the body.
    WhileGlobal,
    /// The caller's context flows into a global written by the callee.
    CallContext,
    /// Returning a global from a context above its label.
    ReturnGlobal,
    /// The caller may not read the returned value.
    ReturnReader,
    /// Downgrade names a principal outside the universe.
    DowngradePrincipal,
    /// Downgrade by a subject that does not own the label.
    DowngradeOwner,
    /// Downgrade to a principal that never influenced the value.
    DowngradeWriters,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::InitExecutor => "INIT-EXECUTOR",
            Rule::InitGlobalUnused => "INIT-GLOBAL-UNUSED",
            Rule::InitReader => "INIT-READER",
            Rule::InitClearance => "INIT-CLEARANCE",
            Rule::AssignGlobal => "ASSIGN-GLOBAL",
            Rule::IfGlobal => "IF-GLOBAL",
            Rule::WhileGlobal => "WHILE-GLOBAL",
            Rule::CallContext => "CALL-CONTEXT",
            Rule::ReturnGlobal => "RETURN-GLOBAL",
            Rule::ReturnReader => "RETURN-READER",
            Rule::DowngradePrincipal => "DOWNGRADE-PRINCIPAL",
            Rule::DowngradeOwner => "DOWNGRADE-OWNER",
            Rule::DowngradeWriters => "DOWNGRADE-WRITERS",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One MISUSE finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub rule: Rule,
    /// `None` for whole-program checks made before analysis starts.
    pub loc: Option<Loc>,
    pub construct: String,
    /// The violated premise, e.g. `(S,{B,S},{B}) ⋢ (A,{A,S},{A})`.
    pub constraint: String,
    pub message: String,
    /// Function whose scope was being analyzed; `None` at top level.
    pub function: Option<String>,
    pub variable: Option<String>,
    pub source: Option<Label>,
    pub target: Option<Label>,
    pub pc: Option<Label>,
    pub clearance: Option<Label>,
    /// Pass number of the innermost enclosing loop.
    pub loop_pass: Option<u32>,
}

impl Diagnostic {
    pub(crate) fn new(rule: Rule, construct: &str, constraint: String, message: String) -> Self {
        Diagnostic {
            rule,
            loc: None,
            construct: construct.to_string(),
            constraint,
            message,
            function: None,
            variable: None,
            source: None,
            target: None,
            pc: None,
            clearance: None,
            loop_pass: None,
        }
    }

    pub(crate) fn flow(rule: Rule, construct: &str, source: &Label, target: &Label, variable: &str) -> Self {
        let constraint = format!("{source} ⋢ {target}");
        let message = format!("information flowing into `{variable}` exceeds its label");
        let mut d = Diagnostic::new(rule, construct, constraint, message);
        d.source = Some(source.clone());
        d.target = Some(target.clone());
        d.variable = Some(variable.to_string());
        d
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.loc {
            Some(loc) => write!(f, "{loc}: ")?,
            None => f.write_str("program: ")?,
        }
        write!(f, "MISUSE [{}] in {}", self.rule, self.construct)?;
        if let Some(func) = &self.function {
            write!(f, " (function `{func}`)")?;
        }
        write!(f, ": {}; {}", self.message, self.constraint)?;
        if let Some(pass) = self.loop_pass {
            write!(f, " (loop pass {pass})")?;
        }
        Ok(())
    }
}
