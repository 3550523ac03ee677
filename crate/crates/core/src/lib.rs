//! Information-flow analysis for PyX programs using Readers-Writers
//! Flow Model labels.

pub mod analysis;
pub mod interp;
pub mod label;
pub mod oracle;
pub mod policy;
pub mod syntax;

pub use analysis::{analyze, analyze_with, AnalysisOptions, AnalysisReport, AnalyzeError, Diagnostic, Rule, Verdict};
pub use interp::{run, run_with, Outcome, RunOptions, Store, Value};
pub use label::{Label, LatticeError, Principal, PrincipalSet, PrincipalUniverse};
pub use oracle::{check_ni, NiOptions, NiVerdict, Observation};
pub use policy::{PolicyError, ProgramSpec};
pub use syntax::{parse, Program, SyntaxError};
