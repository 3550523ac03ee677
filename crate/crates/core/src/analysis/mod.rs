//! Static labelling of PyX programs.
//!
//! Globals keep the immutable labels given by the policy. Locals start at
//! the executor's bottom label and only ever climb. A single pc label per
//! scope absorbs every label read and never goes back down, which is what
//! lets the analysis see flows out of loops and selections after they end.

mod diagnostic;
mod env;
mod report;

use std::collections::BTreeMap;

pub use diagnostic::{Diagnostic, Rule};
pub use env::{check_initial_environment, AnalysisEnv, AnalyzeError, InitFailure};
pub use report::{AnalysisReport, CallRecord, LoopRecord, TraceEntry, Verdict};

use crate::label::{Label, Principal, PrincipalUniverse};
use crate::policy::ProgramSpec;
use crate::syntax::{Block, Call, Expr, ExprKind, FuncDef, Loc, NameSet, Program, Stmt, StmtKind};
use env::Scoping;

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    /// Record the labels after every statement.
    pub trace: bool,
}

/// Analyzes `prog` under `spec`.
pub fn analyze(spec: &ProgramSpec, prog: &Program) -> Result<AnalysisReport, AnalyzeError> {
    analyze_with(spec, prog, &AnalysisOptions::default())
}

pub fn analyze_with(spec: &ProgramSpec, prog: &Program, options: &AnalysisOptions) -> Result<AnalysisReport, AnalyzeError> {
    let mut env = match check_initial_environment(spec, prog) {
        Ok(env) => env,
        Err(InitFailure::Error(e)) => return Err(e),
        Err(InitFailure::Misuse(d)) => {
            let pc = spec.universe().bottom().with_owner(spec.executor());
            return Ok(AnalysisReport {
                verdict: Verdict::Misuse,
                executor: spec.executor().clone(),
                diagnostics: vec![d],
                scope: None,
                labels: spec.globals().clone(),
                globals: spec.global_names(),
                pc,
                calls: Vec::new(),
                loops: Vec::new(),
                trace: Vec::new(),
            });
        }
    };
    let mut analyzer = Analyzer {
        spec,
        scoping: Scoping::new(spec, prog),
        prog,
        trace_enabled: options.trace,
        calls: Vec::new(),
        loops: BTreeMap::new(),
        trace: Vec::new(),
        loop_passes: Vec::new(),
    };
    let outcome = analyzer.block(&mut env, None, &prog.body);
    let loops = analyzer
        .loops
        .iter()
        .map(|((function, loc), passes)| LoopRecord {
            function: function.clone(),
            loc: *loc,
            passes: *passes,
        })
        .collect();
    let mut report = AnalysisReport {
        verdict: Verdict::Secure,
        executor: spec.executor().clone(),
        diagnostics: Vec::new(),
        scope: None,
        labels: env.labels,
        globals: env.globals,
        pc: env.pc,
        calls: analyzer.calls,
        loops,
        trace: analyzer.trace,
    };
    match outcome {
        Ok(()) => Ok(report),
        Err(Stop::Error(e)) => Err(e),
        Err(Stop::Misuse(m)) => {
            report.verdict = Verdict::Misuse;
            report.diagnostics.push(m.diagnostic);
            report.scope = m.scope;
            report.labels = m.labels;
            report.globals = m.globals;
            report.pc = m.pc;
            Ok(report)
        }
    }
}

/// Applies the downgrade premises for a subject `executor` adding `readers`
/// to `label`, returning the relabelled value.
///
/// Each named reader must be a known principal and `executor` must own the
/// label. A reader not already in the label must either have influenced the
/// value or `executor` must be its sole writer.
pub fn check_downgrade(
    universe: &PrincipalUniverse,
    label: &Label,
    executor: &Principal,
    readers: &[String],
) -> Result<Label, Diagnostic> {
    let mut added = label.readers().clone();
    for name in readers {
        let Ok(reader) = universe.principal(name) else {
            return Err(Diagnostic::new(
                Rule::DowngradePrincipal,
                "downgrade",
                format!("{name} ∉ P"),
                format!("cannot downgrade to unknown principal `{name}`"),
            ));
        };
        if label.owner() != Some(executor) {
            let owner = label.owner().map_or("-".to_string(), |o| o.to_string());
            let mut d = Diagnostic::new(
                Rule::DowngradeOwner,
                "downgrade",
                format!("A({label}) = {owner} ≠ {executor}"),
                format!("`{executor}` does not own the value being downgraded"),
            );
            d.source = Some(label.clone());
            return Err(d);
        }
        let sole_writer = label.writers().len() == 1 && label.writers().contains(executor);
        let already = label.readers().contains(&reader);
        if !already && !sole_writer && !label.writers().contains(&reader) {
            let mut d = Diagnostic::new(
                Rule::DowngradeWriters,
                "downgrade",
                format!("{reader} ∉ W({label}) and W({label}) ≠ {{{executor}}}"),
                format!("`{reader}` never influenced the value, so it cannot be made a reader"),
            );
            d.source = Some(label.clone());
            return Err(d);
        }
        added.insert(reader);
    }
    Ok(Label::new(Some(executor.clone()), added, label.writers().clone()))
}

struct MisuseAt {
    diagnostic: Diagnostic,
    scope: Option<String>,
    labels: BTreeMap<String, Label>,
    globals: NameSet,
    pc: Label,
}

enum Stop {
    Misuse(Box<MisuseAt>),
    Error(AnalyzeError),
}

impl From<AnalyzeError> for Stop {
    fn from(e: AnalyzeError) -> Self {
        Stop::Error(e)
    }
}

type Step<T = ()> = Result<T, Stop>;

struct Analyzer<'a> {
    spec: &'a ProgramSpec,
    prog: &'a Program,
    scoping: Scoping<'a>,
    trace_enabled: bool,
    calls: Vec<CallRecord>,
    loops: BTreeMap<(Option<String>, Loc), u32>,
    trace: Vec<TraceEntry>,
    /// Current pass of each enclosing loop, innermost last.
    loop_passes: Vec<u32>,
}

impl<'a> Analyzer<'a> {
    fn misuse(&self, env: &AnalysisEnv, scope: Option<&FuncDef>, loc: Loc, mut d: Diagnostic) -> Stop {
        d.loc = Some(loc);
        d.function = scope.map(|f| f.name.clone());
        d.loop_pass = self.loop_passes.last().copied();
        if d.pc.is_none() {
            d.pc = Some(env.pc.clone());
        }
        Stop::Misuse(Box::new(MisuseAt {
            diagnostic: d,
            scope: scope.map(|f| f.name.clone()),
            labels: env.labels.clone(),
            globals: env.globals.clone(),
            pc: env.pc.clone(),
        }))
    }

    fn record(&mut self, env: &AnalysisEnv, scope: Option<&FuncDef>, stmt: &Stmt, before: &BTreeMap<String, Label>) {
        let changed = env
            .labels
            .iter()
            .filter(|(k, v)| before.get(*k) != Some(*v))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        self.trace.push(TraceEntry {
            function: scope.map(|f| f.name.clone()),
            loc: stmt.loc,
            construct: stmt.construct().to_string(),
            pc: env.pc.clone(),
            changed,
        });
    }

    fn block(&mut self, env: &mut AnalysisEnv, scope: Option<&'a FuncDef>, stmts: &'a [Stmt]) -> Step {
        for stmt in stmts {
            self.stmt(env, scope, stmt)?;
        }
        Ok(())
    }

    fn stmt(&mut self, env: &mut AnalysisEnv, scope: Option<&'a FuncDef>, stmt: &'a Stmt) -> Step {
        let before = self.trace_enabled.then(|| env.labels.clone());
        match &stmt.kind {
            StmtKind::Pass | StmtKind::Def(_) => {}
            StmtKind::Assign { target, value } => self.assign(env, scope, target, value, stmt.loc)?,
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => self.selection(env, scope, stmt, cond, then_branch, else_branch)?,
            StmtKind::While { cond, body } => self.iteration(env, scope, stmt, cond, body)?,
            StmtKind::Call(call) => {
                self.call(env, scope, call, stmt.loc)?;
            }
            // The parser only admits returns as the last statement of a
            // function body, and `call` handles those separately.
            StmtKind::Return(_) | StmtKind::ReturnDowngrade { .. } => {}
        }
        if let Some(before) = before {
            if !matches!(stmt.kind, StmtKind::Def(_)) {
                self.record(env, scope, stmt, &before);
            }
        }
        Ok(())
    }

    fn label_expr(&mut self, env: &mut AnalysisEnv, scope: Option<&'a FuncDef>, e: &'a Expr) -> Step<Label> {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) => Ok(self.spec.universe().bottom()),
            ExprKind::Var(name) => env.labels.get(name).cloned().ok_or_else(|| {
                Stop::Error(AnalyzeError::Unbound {
                    name: name.clone(),
                    loc: e.loc,
                })
            }),
            ExprKind::Binary(_, l, r) => {
                let a = self.label_expr(env, scope, l)?;
                let b = self.label_expr(env, scope, r)?;
                Ok(a.join(&b))
            }
            ExprKind::Unary(_, x) => self.label_expr(env, scope, x),
            ExprKind::Call(call) => match self.call(env, scope, call, e.loc)? {
                Some(l) => Ok(l),
                None => Err(Stop::Error(AnalyzeError::NoReturnValue {
                    function: call.func.clone(),
                    loc: e.loc,
                })),
            },
        }
    }

    fn assign(&mut self, env: &mut AnalysisEnv, scope: Option<&'a FuncDef>, target: &str, value: &'a Expr, loc: Loc) -> Step {
        let l = self.label_expr(env, scope, value)?;
        let l1 = l.join(&env.pc);
        env.pc = env.stamp(&l1);
        if env.is_global(target) {
            let lx = &env.labels[target];
            if !l1.leq(lx) {
                let d = Diagnostic::flow(Rule::AssignGlobal, "assignment", &l1, lx, target);
                return Err(self.misuse(env, scope, loc, d));
            }
        } else {
            let raised = match env.labels.get(target) {
                Some(old) => l1.join(old),
                None => l1,
            };
            env.labels.insert(target.to_string(), env.stamp(&raised));
        }
        Ok(())
    }

    fn selection(
        &mut self,
        env: &mut AnalysisEnv,
        scope: Option<&'a FuncDef>,
        stmt: &'a Stmt,
        cond: &'a Expr,
        then_branch: &'a Block,
        else_branch: &'a Block,
    ) -> Step {
        let before = self.trace_enabled.then(|| env.labels.clone());
        let l = self.label_expr(env, scope, cond)?;
        let both: Vec<Stmt> = then_branch.iter().chain(else_branch).cloned().collect();
        let (local_targets, global_targets) = self.scoping.writes(&both, &[], &env.globals);
        let guard = l.join(&env.pc).join(&env.clearance);
        for x in &global_targets {
            let lx = self.spec.global(x).expect("global targets come from the policy");
            if !guard.leq(lx) {
                env.pc = env.stamp(&l.join(&env.pc));
                let mut d = Diagnostic::flow(Rule::IfGlobal, "selection", &guard, lx, x);
                d.message = format!("the branch condition flows into global `{x}`");
                d.clearance = Some(env.clearance.clone());
                return Err(self.misuse(env, scope, stmt.loc, d));
            }
        }
        env.pc = env.stamp(&env.pc.join(&l));
        for x in &local_targets {
            if let Some(old) = env.labels.get(x) {
                let raised = env.stamp(&old.join(&l));
                env.labels.insert(x.clone(), raised);
            }
        }
        if let Some(before) = before {
            self.record(env, scope, stmt, &before);
        }
        let mut then_env = env.clone();
        self.block(&mut then_env, scope, then_branch)?;
        let mut else_env = env.clone();
        self.block(&mut else_env, scope, else_branch)?;
        for x in &env.locals {
            if let (Some(a), Some(b)) = (then_env.labels.get(x), else_env.labels.get(x)) {
                let joined = env.stamp(&a.join(b));
                env.labels.insert(x.clone(), joined);
            }
        }
        env.pc = env.stamp(&then_env.pc.join(&else_env.pc));
        Ok(())
    }

    fn iteration(&mut self, env: &mut AnalysisEnv, scope: Option<&'a FuncDef>, stmt: &'a Stmt, cond: &'a Expr, body: &'a Block) -> Step {
        let cap = (env.locals.len() as u32 + 2).max(3);
        let (_, global_targets) = self.scoping.writes(body, &[cond], &env.globals);
        let mut pass = 0;
        loop {
            pass += 1;
            if pass > cap {
                return Err(Stop::Error(AnalyzeError::FixpointNotReached {
                    loc: stmt.loc,
                    passes: cap,
                }));
            }
            self.loop_passes.push(pass);
            let outcome = self.loop_pass(env, scope, stmt, cond, body, &global_targets, pass);
            self.loop_passes.pop();
            if outcome? {
                break;
            }
        }
        let key = (scope.map(|f| f.name.clone()), stmt.loc);
        let slot = self.loops.entry(key).or_insert(0);
        *slot = (*slot).max(pass);
        Ok(())
    }

    /// One guard evaluation plus body pass; true once the body left every
    /// label unchanged.
    #[allow(clippy::too_many_arguments)]
    fn loop_pass(
        &mut self,
        env: &mut AnalysisEnv,
        scope: Option<&'a FuncDef>,
        stmt: &'a Stmt,
        cond: &'a Expr,
        body: &'a Block,
        global_targets: &NameSet,
        pass: u32,
    ) -> Step<bool> {
        let before = self.trace_enabled.then(|| env.labels.clone());
        let l = self.label_expr(env, scope, cond)?;
        let l1 = l.join(&env.pc);
        // Later passes run the body under a pc at least this high, so the
        // body's own premises already cover these targets.
        if pass == 1 {
            for x in global_targets {
                let lx = self.spec.global(x).expect("global targets come from the policy");
                if !l1.leq(lx) {
                    env.pc = env.stamp(&l1);
                    let mut d = Diagnostic::flow(Rule::WhileGlobal, "iteration", &l1, lx, x);
                    d.message = format!("the loop condition flows into global `{x}`");
                    return Err(self.misuse(env, scope, stmt.loc, d));
                }
            }
        }
        env.pc = env.stamp(&l1);
        if let Some(before) = before {
            self.record(env, scope, stmt, &before);
        }
        let labels = env.labels.clone();
        let pc = env.pc.clone();
        self.block(env, scope, body)?;
        Ok(env.labels == labels && env.pc == pc)
    }

    /// Analyzes one call; returns the label handed back by its `return`.
    fn call(&mut self, env: &mut AnalysisEnv, scope: Option<&'a FuncDef>, call: &'a Call, loc: Loc) -> Step<Option<Label>> {
        let def: &'a FuncDef = self
            .prog
            .function(&call.func)
            .expect("parser only admits calls to defined functions");
        let mut args = Vec::with_capacity(call.args.len());
        for a in &call.args {
            let la = env.labels.get(a).cloned().ok_or_else(|| {
                Stop::Error(AnalyzeError::Unbound {
                    name: a.clone(),
                    loc,
                })
            })?;
            env.pc = env.stamp(&env.pc.join(&la));
            args.push(la);
        }

        // The callee starts from a fresh pc, so the caller's context must
        // already be allowed to reach every global the callee writes.
        for g in self.scoping.callee_global_writes(def) {
            let lg = self.spec.global(&g).expect("global writes come from the policy");
            if !env.pc.leq(lg) {
                let mut d = Diagnostic::flow(Rule::CallContext, "function call", &env.pc, lg, &g);
                d.message = format!("the calling context flows into global `{g}` written by `{}`", def.name);
                return Err(self.misuse(env, scope, loc, d));
            }
        }

        let (executor, clearance) = match self.spec.function(&def.name) {
            Some(policy) => (policy.executor.clone(), policy.clearance.clone()),
            None => (env.executor.clone(), env.clearance.clone()),
        };
        let globals = self.scoping.function_globals(def);
        let locals = self.scoping.function_locals(def);
        let mut callee = AnalysisEnv::new(self.spec, &executor, &clearance, globals, locals);
        if self.spec.function(&def.name).is_some() {
            let sources = self.scoping.global_sources(&def.body, &callee.globals);
            if let Err(mut d) = self.scoping.check_sources(&sources, &executor, &clearance) {
                d.construct = "function entry".to_string();
                return Err(self.misuse(&callee, Some(def), def.loc, d));
            }
        }
        for (param, la) in def.params.iter().zip(&args) {
            let stamped = callee.stamp(la);
            callee.labels.insert(param.clone(), stamped);
        }

        self.block(&mut callee, Some(def), def.statements())?;

        let returned = match def.exit() {
            None => None,
            Some(exit) => Some(self.exit(&mut callee, def, exit, &env.executor)?),
        };
        self.calls.push(CallRecord {
            function: def.name.clone(),
            loc,
            executor: executor.clone(),
            locals: callee
                .labels
                .iter()
                .filter(|(k, _)| callee.locals.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            pc: callee.pc.clone(),
            returned: returned.clone(),
        });
        let raise = returned.clone().unwrap_or_else(|| callee.pc.clone());
        env.pc = env.stamp(&env.pc.join(&raise));
        Ok(returned)
    }

    fn exit(&mut self, callee: &mut AnalysisEnv, def: &'a FuncDef, exit: &'a Stmt, caller: &Principal) -> Step<Label> {
        let (var, readers) = match &exit.kind {
            StmtKind::Return(var) => (var, None),
            StmtKind::ReturnDowngrade { var, readers } => (var, Some(readers)),
            _ => unreachable!("exit() only yields return statements"),
        };
        let lx = callee.labels.get(var).cloned().ok_or_else(|| {
            Stop::Error(AnalyzeError::Unbound {
                name: var.clone(),
                loc: exit.loc,
            })
        })?;
        let mut l = if callee.is_global(var) {
            if !callee.pc.leq(&lx) {
                let mut d = Diagnostic::flow(Rule::ReturnGlobal, exit.construct(), &callee.pc, &lx, var);
                d.message = format!("the function context flows into returned global `{var}`");
                return Err(self.misuse(callee, Some(def), exit.loc, d));
            }
            lx
        } else {
            callee.stamp(&lx.join(&callee.pc))
        };
        if let Some(readers) = readers {
            callee.pc = callee.stamp(&callee.pc.join(&l));
            l = check_downgrade(self.spec.universe(), &l, &callee.executor, readers)
                .map_err(|d| self.misuse(callee, Some(def), exit.loc, d))?;
        }
        if !l.can_read(caller) {
            let mut d = Diagnostic::new(
                Rule::ReturnReader,
                exit.construct(),
                format!("{caller} ∉ R({l})"),
                format!("caller `{caller}` may not read the value returned by `{}`; downgrade required", def.name),
            );
            d.source = Some(l.clone());
            d.variable = Some(var.clone());
            return Err(self.misuse(callee, Some(def), exit.loc, d));
        }
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn abs_spec(globals: &[(&str, &str)]) -> ProgramSpec {
        let universe = PrincipalUniverse::new(["A", "B", "S"]).unwrap();
        let cl = universe.parse_label("(S,{S},{A,B})").unwrap();
        let mut spec = ProgramSpec::new(universe.clone(), "S", cl).unwrap();
        for (name, label) in globals {
            spec = spec.with_global(name, universe.parse_label(label).unwrap()).unwrap();
        }
        spec
    }

    fn run(src: &str, spec: &ProgramSpec) -> AnalysisReport {
        analyze(spec, &parse(src).unwrap()).unwrap()
    }

    #[test]
    fn literal_join_is_not_optimised_away() {
        let spec = abs_spec(&[("y", "(B,{B,S},{B})")]);
        let r = run("x = 0 * y\n", &spec);
        assert!(r.is_secure());
        // pc and x both pick up y even though the product is always zero.
        assert_eq!(r.label("x").unwrap().to_string(), "(S,{B,S},{B})");
        assert_eq!(r.pc.to_string(), "(S,{B,S},{B})");
    }

    #[test]
    fn sequence_threads_labels() {
        let spec = abs_spec(&[("y", "(B,{B,S},{B})")]);
        let r = run("x = y\nz = x\n", &spec);
        assert_eq!(r.label("z").unwrap(), r.label("x").unwrap());
    }

    #[test]
    fn pass_only_program_keeps_bottom() {
        let spec = abs_spec(&[]);
        let r = run("pass\npass\n", &spec);
        assert!(r.is_secure());
        assert_eq!(r.pc.to_string(), "(S,{A,B,S},{})");
    }

    #[test]
    fn downgrade_premises() {
        let u = PrincipalUniverse::new(["A", "B", "S"]).unwrap();
        let b = u.principal("B").unwrap();
        let l = u.parse_label("(B,{B},{A,B})").unwrap();
        let ok = check_downgrade(&u, &l, &b, &["A".to_string()]).unwrap();
        assert_eq!(ok.to_string(), "(B,{A,B},{A,B})");
        let unknown = check_downgrade(&u, &l, &b, &["Z".to_string()]).unwrap_err();
        assert_eq!(unknown.rule, Rule::DowngradePrincipal);
        let anon = u.parse_label("(-,{B},{A,B})").unwrap();
        assert_eq!(check_downgrade(&u, &anon, &b, &["A".to_string()]).unwrap_err().rule, Rule::DowngradeOwner);
        let other = u.parse_label("(A,{B},{A,B})").unwrap();
        assert_eq!(check_downgrade(&u, &other, &b, &["A".to_string()]).unwrap_err().rule, Rule::DowngradeOwner);
        // S never wrote the value and B is not its only writer.
        assert_eq!(check_downgrade(&u, &l, &b, &["S".to_string()]).unwrap_err().rule, Rule::DowngradeWriters);
        // Sole writer may add anyone.
        let sole = u.parse_label("(B,{B},{B})").unwrap();
        assert_eq!(check_downgrade(&u, &sole, &b, &["S".to_string()]).unwrap().to_string(), "(B,{B,S},{B})");
    }

    #[test]
    fn call_context_guards_callee_global_writes() {
        let spec = abs_spec(&[("h", "(S,{S},{A,B})"), ("low", "(S,{A,B,S},{})")]);
        // A branch around the call is caught by the selection rule already.
        let guarded = run("def f():\n    low = 1\nif h == 0:\n    f()\n", &spec);
        assert_eq!(guarded.first_diagnostic().unwrap().rule, Rule::IfGlobal);
        // After a plain read of h only the pc remembers it.
        let r = run("def f():\n    low = 1\nx = h\nf()\n", &spec);
        assert_eq!(r.first_diagnostic().unwrap().rule, Rule::CallContext);
    }

    #[test]
    fn captured_top_level_local_is_an_input_error() {
        let spec = abs_spec(&[]);
        let prog = parse("t = 1\ndef f(a):\n    t = a\n    return t\nx = f(t)\n").unwrap();
        assert!(matches!(analyze(&spec, &prog), Err(AnalyzeError::CapturedLocal { .. })));
    }
}
