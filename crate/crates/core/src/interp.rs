//! Concrete small-step interpreter for PyX.
//!
//! Integers are `i64`. Overflow is a runtime error rather than wrapping.
//! `/` and `%` round toward negative infinity, as in Python.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{BinOp, Call, Expr, ExprKind, FuncDef, Loc, Program, Stmt, StmtKind, UnOp};

pub const DEFAULT_BUDGET: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Str(_) => "str",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeErrorKind {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("`{op}` is not defined for {left} and {right}")]
    TypeMismatch {
        op: &'static str,
        left: &'static str,
        right: &'static str,
    },
    #[error("`{op}` expects {expected}, found {found}")]
    BadOperand {
        op: &'static str,
        expected: &'static str,
        found: &'static str,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow in `{0}`")]
    Overflow(&'static str),
    #[error("call to unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{0}` expects {1} argument(s)")]
    Arity(String, usize),
    #[error("function `{0}` returned no value")]
    NoReturnValue(String),
    #[error("calls cannot be evaluated outside a running program")]
    CallInExpression,
}

type Env = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Closure {
    def: Arc<FuncDef>,
    env: Env,
}

/// Environment, storage and function closures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Store {
    env: Env,
    heap: Vec<Value>,
    closures: BTreeMap<String, Closure>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn from_values<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        let mut store = Store::new();
        for (name, value) in values {
            store.set(&name.into(), value);
        }
        store
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.env.get(name).map(|&l| &self.heap[l])
    }

    /// Writes through an existing binding or allocates a fresh location.
    pub fn set(&mut self, name: &str, value: Value) {
        let mut env = std::mem::take(&mut self.env);
        self.write(&mut env, name, value);
        self.env = env;
    }

    pub fn contains(&self, name: &str) -> bool {
        self.env.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.env.keys()
    }

    pub fn bindings(&self) -> BTreeMap<String, Value> {
        self.env.iter().map(|(k, &l)| (k.clone(), self.heap[l].clone())).collect()
    }

    pub fn has_closure(&self, name: &str) -> bool {
        self.closures.contains_key(name)
    }

    fn alloc(&mut self, value: Value) -> usize {
        self.heap.push(value);
        self.heap.len() - 1
    }

    fn write(&mut self, env: &mut Env, name: &str, value: Value) {
        match env.get(name) {
            Some(&l) => self.heap[l] = value,
            None => {
                let l = self.alloc(value);
                env.insert(name.to_string(), l);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Terminated(Store),
    /// The step limit was hit. The store is the top-level view at that point.
    StepBudgetExhausted(Store),
    RuntimeError {
        error: RuntimeErrorKind,
        loc: Loc,
        store: Store,
    },
}

impl Outcome {
    pub fn store(&self) -> &Store {
        match self {
            Outcome::Terminated(s) | Outcome::StepBudgetExhausted(s) => s,
            Outcome::RuntimeError { store, .. } => store,
        }
    }

    pub fn is_terminated(&self) -> bool {
        matches!(self, Outcome::Terminated(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub budget: u64,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            budget: DEFAULT_BUDGET,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: u64,
    pub loc: Loc,
    pub function: Option<String>,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub outcome: Outcome,
    pub steps: u64,
    pub trace: Vec<TraceStep>,
}

/// Evaluates a call-free expression against `store`.
pub fn eval_expr(store: &Store, e: &Expr) -> Result<Value, RuntimeErrorKind> {
    eval(e, &store.env, &store.heap, &mut [].iter())
}

pub fn run(prog: &Program, initial: Store, budget: u64) -> Outcome {
    run_with(prog, initial, &RunOptions { budget, trace: false }).outcome
}

pub fn run_with(prog: &Program, initial: Store, options: &RunOptions) -> Execution {
    let mut m = Machine::new(prog, initial, options.trace);
    let result = m.drive(options.budget);
    let steps = m.steps;
    let trace = std::mem::take(&mut m.trace);
    let store = m.into_store();
    let outcome = match result {
        Ok(true) => Outcome::Terminated(store),
        Ok(false) => Outcome::StepBudgetExhausted(store),
        Err((error, loc)) => Outcome::RuntimeError { error, loc, store },
    };
    Execution { outcome, steps, trace }
}

enum Then<'p> {
    Assign(&'p str),
    Branch(&'p [Stmt], &'p [Stmt]),
    Loop(&'p Stmt),
    Discard,
}

enum Work<'p> {
    Exec(&'p Stmt),
    /// Runs pending calls left to right, then evaluates `expr`.
    Eval {
        expr: Option<&'p Expr>,
        calls: Vec<&'p Call>,
        results: Vec<Option<Value>>,
        then: Then<'p>,
        loc: Loc,
    },
}

struct Frame<'p> {
    env: Env,
    work: Vec<Work<'p>>,
    function: Option<Arc<FuncDef>>,
}

struct Machine<'p> {
    store: Store,
    frames: Vec<Frame<'p>>,
    steps: u64,
    tracing: bool,
    trace: Vec<TraceStep>,
    prog: &'p Program,
}

type Fault = (RuntimeErrorKind, Loc);

impl<'p> Machine<'p> {
    fn new(prog: &'p Program, mut store: Store, tracing: bool) -> Self {
        let env = std::mem::take(&mut store.env);
        let work = prog.body.iter().rev().map(Work::Exec).collect();
        Machine {
            store,
            frames: vec![Frame {
                env,
                work,
                function: None,
            }],
            steps: 0,
            tracing,
            trace: Vec::new(),
            prog,
        }
    }

    fn into_store(mut self) -> Store {
        self.store.env = self.frames.swap_remove(0).env;
        self.store
    }

    /// `Ok(true)` on normal termination, `Ok(false)` when out of budget.
    fn drive(&mut self, budget: u64) -> Result<bool, Fault> {
        loop {
            let depth = self.frames.len();
            let frame = &mut self.frames[depth - 1];
            let Some(work) = frame.work.pop() else {
                if depth == 1 {
                    return Ok(true);
                }
                self.finish_call(None)?;
                continue;
            };
            if self.steps >= budget {
                self.frames[depth - 1].work.push(work);
                return Ok(false);
            }
            self.steps += 1;
            self.step(work)?;
        }
    }

    fn top(&mut self) -> &mut Frame<'p> {
        self.frames.last_mut().expect("at least one frame")
    }

    fn note(&mut self, loc: Loc, action: impl FnOnce() -> String) {
        if self.tracing {
            let function = self.frames.last().and_then(|f| f.function.as_ref()).map(|f| f.name.clone());
            self.trace.push(TraceStep {
                step: self.steps,
                loc,
                function,
                action: action(),
            });
        }
    }

    fn step(&mut self, work: Work<'p>) -> Result<(), Fault> {
        match work {
            Work::Exec(stmt) => self.exec(stmt),
            Work::Eval {
                expr,
                calls,
                results,
                then,
                loc,
            } => {
                if results.len() < calls.len() {
                    let call = calls[results.len()];
                    let pending = Work::Eval {
                        expr,
                        calls,
                        results,
                        then,
                        loc,
                    };
                    return self.enter_call(call, pending, loc);
                }
                let value = match expr {
                    Some(e) => {
                        let frame = self.frames.last().expect("at least one frame");
                        let mut it = results.iter();
                        Some(eval(e, &frame.env, &self.store.heap, &mut it).map_err(|err| (err, e.loc))?)
                    }
                    None => None,
                };
                self.resume(then, value, loc)
            }
        }
    }

    fn exec(&mut self, stmt: &'p Stmt) -> Result<(), Fault> {
        let loc = stmt.loc;
        match &stmt.kind {
            StmtKind::Pass => {
                self.note(loc, || "pass".to_string());
                Ok(())
            }
            StmtKind::Assign { target, value } => {
                self.push_eval(Some(value), value.calls(), Then::Assign(target), loc)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.push_eval(Some(cond), cond.calls(), Then::Branch(then_branch, else_branch), loc)
            }
            StmtKind::While { cond, .. } => {
                self.push_eval(Some(cond), cond.calls(), Then::Loop(stmt), loc)
            }
            StmtKind::Def(def) => {
                let env = self.top().env.clone();
                self.store.closures.insert(def.name.clone(), Closure { def: def.clone(), env });
                self.note(loc, || format!("def {}", def.name));
                Ok(())
            }
            StmtKind::Call(call) => {
                self.push_eval(None, vec![call], Then::Discard, loc)
            }
            StmtKind::Return(var) | StmtKind::ReturnDowngrade { var, .. } => {
                let frame = self.frames.last().expect("at least one frame");
                let value = frame
                    .env
                    .get(var)
                    .map(|&l| self.store.heap[l].clone())
                    .ok_or_else(|| (RuntimeErrorKind::Unbound(var.clone()), loc))?;
                self.note(loc, || format!("return {value}"));
                self.top().work.clear();
                self.finish_call(Some(value))
            }
        }
    }

    /// Call-free expressions are evaluated in the same step.
    fn push_eval(&mut self, expr: Option<&'p Expr>, calls: Vec<&'p Call>, then: Then<'p>, loc: Loc) -> Result<(), Fault> {
        let work = Work::Eval {
            expr,
            results: Vec::with_capacity(calls.len()),
            calls,
            then,
            loc,
        };
        if matches!(&work, Work::Eval { calls, .. } if calls.is_empty()) {
            return self.step(work);
        }
        self.top().work.push(work);
        Ok(())
    }

    fn resume(&mut self, then: Then<'p>, value: Option<Value>, loc: Loc) -> Result<(), Fault> {
        match then {
            Then::Discard => Ok(()),
            Then::Assign(target) => {
                let value = value.expect("assignments carry an expression");
                self.note(loc, || format!("{target} = {value}"));
                let mut env = std::mem::take(&mut self.top().env);
                self.store.write(&mut env, target, value);
                self.top().env = env;
                Ok(())
            }
            Then::Branch(then_branch, else_branch) => {
                let taken = truth(value, "if").map_err(|e| (e, loc))?;
                self.note(loc, || format!("if -> {taken}"));
                let block = if taken { then_branch } else { else_branch };
                self.top().work.extend(block.iter().rev().map(Work::Exec));
                Ok(())
            }
            Then::Loop(stmt) => {
                let taken = truth(value, "while").map_err(|e| (e, loc))?;
                self.note(loc, || format!("while -> {taken}"));
                if taken {
                    let StmtKind::While { body, .. } = &stmt.kind else {
                        unreachable!("loop continuation always holds a while statement")
                    };
                    let work = &mut self.top().work;
                    work.push(Work::Exec(stmt));
                    work.extend(body.iter().rev().map(Work::Exec));
                }
                Ok(())
            }
        }
    }

    fn enter_call(&mut self, call: &'p Call, pending: Work<'p>, loc: Loc) -> Result<(), Fault> {
        let closure = self
            .store
            .closures
            .get(&call.func)
            .cloned()
            .ok_or_else(|| (RuntimeErrorKind::UnknownFunction(call.func.clone()), loc))?;
        let def = closure.def;
        if def.params.len() != call.args.len() {
            return Err((RuntimeErrorKind::Arity(def.name.clone(), def.params.len()), loc));
        }
        let caller = self.frames.last().expect("at least one frame");
        let mut args = Vec::with_capacity(call.args.len());
        for arg in &call.args {
            let &l = caller
                .env
                .get(arg)
                .ok_or_else(|| (RuntimeErrorKind::Unbound(arg.clone()), loc))?;
            args.push(self.store.heap[l].clone());
        }
        self.note(loc, || format!("call {}", call.func));
        self.top().work.push(pending);
        // Each parameter gets a fresh location, so callee writes stay local.
        let mut env = closure.env;
        for (param, value) in def.params.iter().zip(args) {
            let l = self.store.alloc(value);
            env.insert(param.clone(), l);
        }
        let body: &'p [Stmt] = self.body_of(&def);
        self.frames.push(Frame {
            env,
            work: body.iter().rev().map(Work::Exec).collect(),
            function: Some(def),
        });
        Ok(())
    }

    fn body_of(&self, def: &Arc<FuncDef>) -> &'p [Stmt] {
        // Closures only come from `Def` statements of the running program.
        let prog: &'p Program = self.prog;
        &prog.function(&def.name).expect("closure of a program function").body
    }

    fn finish_call(&mut self, value: Option<Value>) -> Result<(), Fault> {
        let frame = self.frames.pop().expect("callee frame");
        let name = frame.function.as_ref().map(|f| f.name.clone()).unwrap_or_default();
        let caller = self.top();
        match caller.work.last_mut() {
            Some(Work::Eval { results, expr, loc, .. }) => {
                if value.is_none() && expr.is_some() {
                    return Err((RuntimeErrorKind::NoReturnValue(name), *loc));
                }
                results.push(value);
                Ok(())
            }
            _ => unreachable!("a call always returns to a pending evaluation"),
        }
    }
}

fn truth(value: Option<Value>, op: &'static str) -> Result<bool, RuntimeErrorKind> {
    match value {
        Some(Value::Bool(b)) => Ok(b),
        Some(other) => Err(RuntimeErrorKind::BadOperand {
            op,
            expected: "bool",
            found: other.kind(),
        }),
        None => Err(RuntimeErrorKind::NoReturnValue(op.to_string())),
    }
}

fn eval<'a, I>(e: &Expr, env: &Env, heap: &[Value], results: &mut I) -> Result<Value, RuntimeErrorKind>
where
    I: Iterator<Item = &'a Option<Value>>,
{
    match &e.kind {
        ExprKind::Int(n) => Ok(Value::Int(*n)),
        ExprKind::Bool(b) => Ok(Value::Bool(*b)),
        ExprKind::Str(s) => Ok(Value::Str(s.clone())),
        ExprKind::Var(name) => env
            .get(name)
            .map(|&l| heap[l].clone())
            .ok_or_else(|| RuntimeErrorKind::Unbound(name.clone())),
        ExprKind::Unary(op, x) => {
            let v = eval(x, env, heap, results)?;
            unary(*op, v)
        }
        ExprKind::Binary(op, l, r) => {
            let a = eval(l, env, heap, results)?;
            let b = eval(r, env, heap, results)?;
            binary(*op, a, b)
        }
        ExprKind::Call(call) => match results.next() {
            Some(Some(v)) => Ok(v.clone()),
            Some(None) => Err(RuntimeErrorKind::NoReturnValue(call.func.clone())),
            None => Err(RuntimeErrorKind::CallInExpression),
        },
    }
}

fn unary(op: UnOp, v: Value) -> Result<Value, RuntimeErrorKind> {
    match (op, v) {
        (UnOp::Neg, Value::Int(n)) => n.checked_neg().map(Value::Int).ok_or(RuntimeErrorKind::Overflow("-")),
        (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (op, v) => Err(RuntimeErrorKind::BadOperand {
            op: op.symbol(),
            expected: if op == UnOp::Neg { "int" } else { "bool" },
            found: v.kind(),
        }),
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, RuntimeErrorKind> {
    let mismatch = |a: &Value, b: &Value| RuntimeErrorKind::TypeMismatch {
        op: op.symbol(),
        left: a.kind(),
        right: b.kind(),
    };
    match op {
        BinOp::Eq | BinOp::Ne => {
            if a.kind() != b.kind() {
                return Err(mismatch(&a, &b));
            }
            Ok(Value::Bool((a == b) == (op == BinOp::Eq)))
        }
        BinOp::And | BinOp::Or => match (&a, &b) {
            (Value::Bool(x), Value::Bool(y)) => Ok(Value::Bool(if op == BinOp::And { *x && *y } else { *x || *y })),
            _ => Err(mismatch(&a, &b)),
        },
        _ => {
            let (Value::Int(x), Value::Int(y)) = (&a, &b) else {
                return Err(mismatch(&a, &b));
            };
            let (x, y) = (*x, *y);
            let overflow = RuntimeErrorKind::Overflow(op.symbol());
            match op {
                BinOp::Add => x.checked_add(y).map(Value::Int).ok_or(overflow),
                BinOp::Sub => x.checked_sub(y).map(Value::Int).ok_or(overflow),
                BinOp::Mul => x.checked_mul(y).map(Value::Int).ok_or(overflow),
                BinOp::Div => floor_div(x, y).map(Value::Int),
                BinOp::Mod => floor_mod(x, y).map(Value::Int),
                BinOp::Lt => Ok(Value::Bool(x < y)),
                BinOp::Le => Ok(Value::Bool(x <= y)),
                BinOp::Gt => Ok(Value::Bool(x > y)),
                BinOp::Ge => Ok(Value::Bool(x >= y)),
                BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    }
}

fn floor_div(x: i64, y: i64) -> Result<i64, RuntimeErrorKind> {
    if y == 0 {
        return Err(RuntimeErrorKind::DivisionByZero);
    }
    let q = x.checked_div(y).ok_or(RuntimeErrorKind::Overflow("/"))?;
    Ok(if x % y != 0 && ((x < 0) != (y < 0)) { q - 1 } else { q })
}

fn floor_mod(x: i64, y: i64) -> Result<i64, RuntimeErrorKind> {
    if y == 0 {
        return Err(RuntimeErrorKind::DivisionByZero);
    }
    let r = x.checked_rem(y).ok_or(RuntimeErrorKind::Overflow("%"))?;
    Ok(if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn go(src: &str, init: &[(&str, Value)], budget: u64) -> Outcome {
        let prog = parse(src).unwrap();
        run(&prog, Store::from_values(init.iter().cloned()), budget)
    }

    fn value(outcome: &Outcome, name: &str) -> Value {
        outcome.store().get(name).cloned().unwrap_or_else(|| panic!("{name} unbound"))
    }

    #[test]
    fn expressions() {
        let store = Store::from_values([("x", Value::Int(0))]);
        let e = |s: &str| {
            let prog = parse(&format!("r = {s}\n")).unwrap();
            let StmtKind::Assign { value, .. } = &prog.body[0].kind else { unreachable!() };
            eval_expr(&store, value)
        };
        assert_eq!(e("1 + 2"), Ok(Value::Int(3)));
        assert_eq!(e("x == 0"), Ok(Value::Bool(true)));
        assert_eq!(e("'oldpwd' == 'oldpwd'"), Ok(Value::Bool(true)));
        assert_eq!(e("-7 / 2"), Ok(Value::Int(-4)));
        assert_eq!(e("-7 % 2"), Ok(Value::Int(1)));
        assert_eq!(e("7 % -2"), Ok(Value::Int(-1)));
        assert_eq!(e("1 / x"), Err(RuntimeErrorKind::DivisionByZero));
        assert!(matches!(e("1 == True"), Err(RuntimeErrorKind::TypeMismatch { .. })));
        assert!(matches!(e("1 and True"), Err(RuntimeErrorKind::TypeMismatch { .. })));
        assert!(matches!(e("not 1"), Err(RuntimeErrorKind::BadOperand { .. })));
        assert_eq!(e("y"), Err(RuntimeErrorKind::Unbound("y".into())));
        assert_eq!(e("9223372036854775807 + 1"), Err(RuntimeErrorKind::Overflow("+")));
    }

    #[test]
    fn assignment_allocates_fresh_locations() {
        let out = go("x = 1\ny = x\nx = 2\n", &[], 100);
        assert!(out.is_terminated());
        assert_eq!(value(&out, "x"), Value::Int(2));
        assert_eq!(value(&out, "y"), Value::Int(1));
    }

    #[test]
    fn termination_depends_on_the_guard() {
        let src = "y = 0\nwhile x == 0:\n    pass\ny = 1\n";
        let out = go(src, &[("x", Value::Int(1)), ("y", Value::Int(5))], DEFAULT_BUDGET);
        assert!(out.is_terminated());
        assert_eq!(value(&out, "y"), Value::Int(1));

        let out = go(src, &[("x", Value::Int(0)), ("y", Value::Int(5))], DEFAULT_BUDGET);
        assert!(matches!(out, Outcome::StepBudgetExhausted(_)));
        assert_eq!(value(&out, "y"), Value::Int(0));
    }

    #[test]
    fn false_guard_skips_the_body() {
        let out = go("while False:\n    x = 1\n", &[], 10);
        assert!(out.is_terminated());
        assert!(!out.store().contains("x"));
    }

    #[test]
    fn parameters_are_passed_by_value() {
        let src = "def f(a):\n    a = a + 1\n    return a\nv = 1\nw = f(v)\n";
        let out = go(src, &[], 100);
        assert_eq!(value(&out, "v"), Value::Int(1));
        assert_eq!(value(&out, "w"), Value::Int(2));
        assert!(!out.store().contains("a"));
    }

    #[test]
    fn globals_written_in_callees_are_visible() {
        let src = "def f():\n    g = 7\n    r = 0\n    return r\nf()\n";
        let out = go(src, &[("g", Value::Int(0))], 100);
        assert_eq!(value(&out, "g"), Value::Int(7));
        assert!(!out.store().contains("r"));
    }

    #[test]
    fn calls_in_expressions_run_left_to_right() {
        let src = "def a():\n    n = n * 10 + 1\n    r = n\n    return r\ndef b():\n    n = n * 10 + 2\n    r = n\n    return r\nx = a() + b()\n";
        let out = go(src, &[("n", Value::Int(0))], 100);
        assert_eq!(value(&out, "n"), Value::Int(12));
        assert_eq!(value(&out, "x"), Value::Int(13));
    }

    #[test]
    fn missing_return_value_is_an_error() {
        let src = "def f():\n    pass\nx = f()\n";
        let out = go(src, &[], 100);
        assert!(matches!(
            out,
            Outcome::RuntimeError {
                error: RuntimeErrorKind::NoReturnValue(_),
                ..
            }
        ));
        assert!(go("def f():\n    pass\nf()\n", &[], 100).is_terminated());
    }

    #[test]
    fn password_update_changes_the_database() {
        let src = "def Password_Update(new_pwd, guess_pwd):\n\tresult = False\n\tif pwd_db == guess_pwd:\n\t\tpwd_db = new_pwd\n\t\tresult = True\n\treturn downgrade(result, {'A'})\n\nguess_pwd = 'oldpwd'\nnew_pwd = 'mypwd'\nsuccess = Password_Update(new_pwd, guess_pwd)\n";
        let init = [
            ("pwd_db", Value::from("oldpwd")),
            ("guess_pwd", Value::from("")),
            ("new_pwd", Value::from("")),
            ("success", Value::Bool(false)),
        ];
        let out = go(src, &init, DEFAULT_BUDGET);
        assert!(out.is_terminated());
        assert_eq!(value(&out, "pwd_db"), Value::from("mypwd"));
        assert_eq!(value(&out, "success"), Value::Bool(true));
    }

    #[test]
    fn budget_counts_steps() {
        let prog = parse("x = 1\nx = 2\nx = 3\n").unwrap();
        let run = run_with(&prog, Store::new(), &RunOptions { budget: 3, trace: true });
        assert!(run.outcome.is_terminated());
        assert_eq!(run.steps, 3);
        assert_eq!(run.trace.len(), 3);
        assert_eq!(run.trace[2].action, "x = 3");
        let out = run_with(&prog, Store::new(), &RunOptions { budget: 2, trace: false }).outcome;
        assert!(matches!(out, Outcome::StepBudgetExhausted(_)));
        assert_eq!(value(&out, "x"), Value::Int(2));
    }
}
