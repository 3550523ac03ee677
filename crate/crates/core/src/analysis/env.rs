//! Label environments and the initial-environment check.

use std::collections::BTreeMap;

use thiserror::Error;

use super::diagnostic::{Diagnostic, Rule};
use crate::label::{Label, Principal};
use crate::policy::ProgramSpec;
use crate::syntax::{Expr, ExprKind, FuncDef, Loc, NameSet, Program, Stmt, StmtKind};

/// Problems with the input that are not information-flow violations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzeError {
    #[error("{loc}: variable `{name}` has no label")]
    Unbound { name: String, loc: Loc },
    #[error("{loc}: `{function}` does not return a value")]
    NoReturnValue { function: String, loc: Loc },
    #[error("policy gives a clearance for `{0}`, which the program does not define")]
    UnknownFunction(String),
    #[error(
        "{loc}: function `{function}` refers to top-level local `{name}`; \
         pass it as an argument or declare it global"
    )]
    CapturedLocal { function: String, name: String, loc: Loc },
    #[error("{loc}: loop labels did not stabilise within {passes} passes")]
    FixpointNotReached { loc: Loc, passes: u32 },
}

impl AnalyzeError {
    /// True for failures of the analyzer itself rather than of the input.
    pub fn is_internal(&self) -> bool {
        matches!(self, AnalyzeError::FixpointNotReached { .. })
    }
}

/// λ and pc for one scope, plus the subject executing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisEnv {
    pub(crate) labels: BTreeMap<String, Label>,
    pub(crate) pc: Label,
    pub(crate) globals: NameSet,
    pub(crate) locals: NameSet,
    pub(crate) executor: Principal,
    pub(crate) clearance: Label,
}

impl AnalysisEnv {
    /// A scope whose locals all start at the executor's bottom label.
    pub(crate) fn new(spec: &ProgramSpec, executor: &Principal, clearance: &Label, globals: NameSet, locals: NameSet) -> Self {
        let start = spec.universe().bottom().with_owner(executor);
        let mut labels = BTreeMap::new();
        for g in &globals {
            labels.insert(g.clone(), spec.global(g).expect("scope globals come from the policy").clone());
        }
        for l in &locals {
            labels.insert(l.clone(), start.clone());
        }
        AnalysisEnv {
            labels,
            pc: start,
            globals,
            locals,
            executor: executor.clone(),
            clearance: clearance.clone(),
        }
    }

    pub fn label(&self, name: &str) -> Option<&Label> {
        self.labels.get(name)
    }

    pub fn labels(&self) -> &BTreeMap<String, Label> {
        &self.labels
    }

    pub fn pc(&self) -> &Label {
        &self.pc
    }

    pub fn globals(&self) -> &NameSet {
        &self.globals
    }

    pub fn locals(&self) -> &NameSet {
        &self.locals
    }

    pub fn executor(&self) -> &Principal {
        &self.executor
    }

    pub fn clearance(&self) -> &Label {
        &self.clearance
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.globals.contains(name)
    }

    pub(crate) fn stamp(&self, label: &Label) -> Label {
        label.with_owner(&self.executor)
    }
}

/// Why the initial environment could not be built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitFailure {
    Misuse(Diagnostic),
    Error(AnalyzeError),
}

/// Builds the top-level environment after checking that the executor may
/// read every global the top level reads and that those globals lie below
/// its clearance.
pub fn check_initial_environment(spec: &ProgramSpec, prog: &Program) -> Result<AnalysisEnv, InitFailure> {
    let scoping = Scoping::new(spec, prog);
    if !spec.universe().contains(spec.executor()) {
        let d = Diagnostic::new(
            Rule::InitExecutor,
            "program",
            format!("{} ∉ P", spec.executor()),
            format!("executor `{}` is not a known principal", spec.executor()),
        );
        return Err(InitFailure::Misuse(d));
    }
    let all_vars = prog.vars_of(&prog.body);
    for g in spec.globals().keys() {
        if !all_vars.contains(g) {
            let mut d = Diagnostic::new(
                Rule::InitGlobalUnused,
                "program",
                format!("{g} ∉ Var(program)"),
                format!("global `{g}` does not occur in the program"),
            );
            d.variable = Some(g.clone());
            return Err(InitFailure::Misuse(d));
        }
    }
    for name in spec.functions().keys() {
        if prog.function(name).is_none() {
            return Err(InitFailure::Error(AnalyzeError::UnknownFunction(name.clone())));
        }
    }
    let top_locals: NameSet = scoping
        .direct_names(&prog.body)
        .into_iter()
        .filter(|n| !spec.is_global(n))
        .collect();
    for def in prog.functions() {
        let own = scoping.function_locals(def);
        if let Some(name) = own.iter().find(|n| !def.is_param(n) && top_locals.contains(*n)) {
            return Err(InitFailure::Error(AnalyzeError::CapturedLocal {
                function: def.name.clone(),
                name: name.clone(),
                loc: def.loc,
            }));
        }
    }
    let globals = spec.global_names();
    let sources = scoping.global_sources(&prog.body, &globals);
    scoping
        .check_sources(&sources, spec.executor(), spec.clearance())
        .map_err(InitFailure::Misuse)?;
    Ok(AnalysisEnv::new(spec, spec.executor(), spec.clearance(), globals, top_locals))
}

/// Scope-aware variable sets.
///
/// Inside a function, parameters shadow globals of the same name and every
/// other non-global name is local to the call, so the plain `Var`/`SV`/`TV`
/// sets over-approximate what a scope can touch.
pub(crate) struct Scoping<'a> {
    spec: &'a ProgramSpec,
    prog: &'a Program,
}

impl<'a> Scoping<'a> {
    pub(crate) fn new(spec: &'a ProgramSpec, prog: &'a Program) -> Self {
        Scoping { spec, prog }
    }

    fn callee(&self, name: &str) -> &'a FuncDef {
        self.prog.function(name).expect("parser only admits calls to defined functions")
    }

    /// Globals visible inside `def`: the policy globals minus its parameters.
    pub(crate) fn function_globals(&self, def: &FuncDef) -> NameSet {
        self.spec
            .globals()
            .keys()
            .filter(|g| !def.is_param(g))
            .cloned()
            .collect()
    }

    /// Locals of one activation of `def`, parameters included.
    pub(crate) fn function_locals(&self, def: &FuncDef) -> NameSet {
        let globals = self.function_globals(def);
        let mut out: NameSet = def.params.iter().cloned().collect();
        out.extend(self.direct_names(&def.body).into_iter().filter(|n| !globals.contains(n)));
        out
    }

    /// Names written or read by `stmts` themselves, not by callee bodies or
    /// nested definitions.
    pub(crate) fn direct_names(&self, stmts: &[Stmt]) -> NameSet {
        let mut out = NameSet::new();
        for s in stmts {
            match &s.kind {
                StmtKind::Pass | StmtKind::Def(_) => {}
                StmtKind::Assign { target, value } => {
                    out.insert(target.clone());
                    expr_names(value, &mut out);
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    expr_names(cond, &mut out);
                    out.extend(self.direct_names(then_branch));
                    out.extend(self.direct_names(else_branch));
                }
                StmtKind::While { cond, body } => {
                    expr_names(cond, &mut out);
                    out.extend(self.direct_names(body));
                }
                StmtKind::Call(call) => out.extend(call.args.iter().cloned()),
                StmtKind::Return(v) | StmtKind::ReturnDowngrade { var: v, .. } => {
                    out.insert(v.clone());
                }
            }
        }
        out
    }

    /// Targets of `stmts` split into (locals of this scope, true globals).
    /// Globals written by callees are included.
    pub(crate) fn writes(&self, stmts: &[Stmt], exprs: &[&Expr], scope_globals: &NameSet) -> (NameSet, NameSet) {
        let mut locals = NameSet::new();
        let mut globals = NameSet::new();
        for e in exprs {
            for call in e.calls() {
                globals.extend(self.callee_global_writes(self.callee(&call.func)));
            }
        }
        self.writes_into(stmts, scope_globals, &mut locals, &mut globals);
        (locals, globals)
    }

    fn writes_into(&self, stmts: &[Stmt], scope_globals: &NameSet, locals: &mut NameSet, globals: &mut NameSet) {
        for s in stmts {
            match &s.kind {
                StmtKind::Pass | StmtKind::Def(_) | StmtKind::Return(_) | StmtKind::ReturnDowngrade { .. } => {}
                StmtKind::Assign { target, value } => {
                    if scope_globals.contains(target) {
                        globals.insert(target.clone());
                    } else {
                        locals.insert(target.clone());
                    }
                    for call in value.calls() {
                        globals.extend(self.callee_global_writes(self.callee(&call.func)));
                    }
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    for call in cond.calls() {
                        globals.extend(self.callee_global_writes(self.callee(&call.func)));
                    }
                    self.writes_into(then_branch, scope_globals, locals, globals);
                    self.writes_into(else_branch, scope_globals, locals, globals);
                }
                StmtKind::While { cond, body } => {
                    for call in cond.calls() {
                        globals.extend(self.callee_global_writes(self.callee(&call.func)));
                    }
                    self.writes_into(body, scope_globals, locals, globals);
                }
                StmtKind::Call(call) => globals.extend(self.callee_global_writes(self.callee(&call.func))),
            }
        }
    }

    /// Policy globals that a call of `def` may write.
    pub(crate) fn callee_global_writes(&self, def: &FuncDef) -> NameSet {
        let mut locals = NameSet::new();
        let mut globals = NameSet::new();
        self.writes_into(&def.body, &self.function_globals(def), &mut locals, &mut globals);
        globals
    }

    /// Globals read by `stmts` under the current scope's policy, following
    /// calls into functions that inherit that policy.
    pub(crate) fn global_sources(&self, stmts: &[Stmt], scope_globals: &NameSet) -> NameSet {
        let mut out = NameSet::new();
        self.sources_into(stmts, scope_globals, &mut out);
        out
    }

    fn sources_into(&self, stmts: &[Stmt], scope_globals: &NameSet, out: &mut NameSet) {
        let add = |name: &String, out: &mut NameSet| {
            if scope_globals.contains(name) {
                out.insert(name.clone());
            }
        };
        for s in stmts {
            match &s.kind {
                StmtKind::Pass | StmtKind::Def(_) => {}
                StmtKind::Assign { value, .. } => self.expr_sources(value, scope_globals, out),
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.expr_sources(cond, scope_globals, out);
                    self.sources_into(then_branch, scope_globals, out);
                    self.sources_into(else_branch, scope_globals, out);
                }
                StmtKind::While { cond, body } => {
                    self.expr_sources(cond, scope_globals, out);
                    self.sources_into(body, scope_globals, out);
                }
                StmtKind::Call(call) => {
                    for a in &call.args {
                        add(a, out);
                    }
                    self.inherited_sources(&call.func, out);
                }
                StmtKind::Return(v) | StmtKind::ReturnDowngrade { var: v, .. } => add(v, out),
            }
        }
    }

    fn expr_sources(&self, e: &Expr, scope_globals: &NameSet, out: &mut NameSet) {
        let mut names = NameSet::new();
        expr_names(e, &mut names);
        out.extend(names.into_iter().filter(|n| scope_globals.contains(n)));
        for call in e.calls() {
            self.inherited_sources(&call.func, out);
        }
    }

    fn inherited_sources(&self, func: &str, out: &mut NameSet) {
        if self.spec.function(func).is_none() {
            let def = self.callee(func);
            self.sources_into(&def.body, &self.function_globals(def), out);
        }
    }

    /// Reader and clearance premises for the global sources of a scope.
    pub(crate) fn check_sources(&self, sources: &NameSet, executor: &Principal, clearance: &Label) -> Result<(), Diagnostic> {
        for x in sources {
            let lx = self.spec.global(x).expect("sources are filtered to globals");
            if !lx.can_read(executor) {
                let mut d = Diagnostic::new(
                    Rule::InitReader,
                    "program",
                    format!("{executor} ∉ R({lx})"),
                    format!("executor `{executor}` may not read global `{x}`"),
                );
                d.variable = Some(x.clone());
                d.source = Some(lx.clone());
                return Err(d);
            }
            if !lx.leq(clearance) {
                let mut d = Diagnostic::flow(Rule::InitClearance, "program", lx, clearance, x);
                d.message = format!("global `{x}` is above the clearance of `{executor}`");
                d.clearance = Some(clearance.clone());
                return Err(d);
            }
        }
        Ok(())
    }
}

/// Variable names syntactically inside `e`, call arguments included.
pub(crate) fn expr_names(e: &Expr, out: &mut NameSet) {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
        ExprKind::Var(v) => {
            out.insert(v.clone());
        }
        ExprKind::Binary(_, l, r) => {
            expr_names(l, out);
            expr_names(r, out);
        }
        ExprKind::Unary(_, x) => expr_names(x, out),
        ExprKind::Call(call) => out.extend(call.args.iter().cloned()),
    }
}
