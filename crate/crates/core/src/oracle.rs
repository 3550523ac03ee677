//! Brute-force non-interference checking over pairs of concrete runs.
//!
//! Observations use the analyzer's final labels. By default the observer
//! sees whether a run terminated only when the final pc flows to the
//! observer; [`NiOptions::strict_termination`] makes termination always
//! visible.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{analyze, AnalyzeError, Verdict};
use crate::interp::{run, Outcome, Store, Value, DEFAULT_BUDGET};
use crate::label::Label;
use crate::policy::ProgramSpec;
use crate::syntax::{BinOp, Expr, ExprKind, Program, Stmt, StmtKind, UnOp};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("the analyzer rejected the program: {0}")]
    NotAccepted(String),
    #[error(transparent)]
    Analysis(#[from] AnalyzeError),
    #[error("stores bind different variables: `{0}` is missing from one of them")]
    DomainMismatch(String),
    #[error("empty input domain for `{0}`")]
    EmptyDomain(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Terminated,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observed {
    Value(Value),
    Unbound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub observer: Label,
    /// `None` when the observer may not see whether the run finished.
    pub termination: Option<Termination>,
    pub values: BTreeMap<String, Observed>,
}

impl Observation {
    /// A visible abnormal end hides the store entirely.
    pub fn is_divergence(&self) -> bool {
        matches!(self.termination, Some(Termination::Diverged | Termination::Failed))
    }

    /// Name of the first point where two observations differ.
    fn difference(&self, other: &Observation) -> Option<String> {
        if self.termination != other.termination {
            return Some("<termination>".to_string());
        }
        let names: BTreeSet<&String> = self.values.keys().chain(other.values.keys()).collect();
        names
            .into_iter()
            .find(|n| self.values.get(*n) != other.values.get(*n))
            .cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub store1: BTreeMap<String, Value>,
    pub store2: BTreeMap<String, Value>,
    pub variable: String,
    pub first: Observation,
    pub second: Observation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum NiVerdict {
    NoCounterexample {
        trials: usize,
        pairs_checked: usize,
        exhaustive: bool,
    },
    Counterexample(Box<Counterexample>),
}

impl NiVerdict {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, NiVerdict::Counterexample(_))
    }
}

#[derive(Debug, Clone)]
pub struct NiOptions {
    pub budget: u64,
    /// Above this many low-equivalent pairs, pairs are sampled instead.
    pub pairs: usize,
    pub seed: u64,
    pub strict_termination: bool,
    /// Run even when the analyzer reports a misuse.
    pub force: bool,
    /// Per-global input values, replacing the inferred defaults.
    pub domains: BTreeMap<String, Vec<Value>>,
}

impl Default for NiOptions {
    fn default() -> Self {
        NiOptions {
            budget: DEFAULT_BUDGET,
            pairs: 256,
            seed: 0,
            strict_termination: false,
            force: false,
            domains: BTreeMap::new(),
        }
    }
}

fn visible(labels: &BTreeMap<String, Label>, delta: &Label, name: &str) -> bool {
    labels.get(name).is_some_and(|l| l.leq(delta))
}

pub fn low_equivalent(
    store1: &Store,
    store2: &Store,
    labels: &BTreeMap<String, Label>,
    delta: &Label,
) -> Result<bool, OracleError> {
    for name in store1.names().chain(store2.names()) {
        if !store1.contains(name) || !store2.contains(name) {
            return Err(OracleError::DomainMismatch(name.clone()));
        }
    }
    Ok(store1
        .names()
        .filter(|n| visible(labels, delta, n))
        .all(|n| store1.get(n) == store2.get(n)))
}

/// Observation with termination always visible.
pub fn observe(outcome: &Outcome, labels: &BTreeMap<String, Label>, delta: &Label) -> Observation {
    project(outcome, labels, delta, true)
}

/// Observation where termination is visible only if `pc` flows to `delta`.
pub fn observe_under(outcome: &Outcome, labels: &BTreeMap<String, Label>, pc: &Label, delta: &Label) -> Observation {
    project(outcome, labels, delta, pc.leq(delta))
}

fn project(outcome: &Outcome, labels: &BTreeMap<String, Label>, delta: &Label, show_end: bool) -> Observation {
    let termination = match outcome {
        Outcome::Terminated(_) => Termination::Terminated,
        Outcome::StepBudgetExhausted(_) => Termination::Diverged,
        Outcome::RuntimeError { .. } => Termination::Failed,
    };
    let abnormal = termination != Termination::Terminated;
    let values = if show_end && abnormal {
        BTreeMap::new()
    } else {
        let store = outcome.store();
        labels
            .iter()
            .filter(|(_, l)| l.leq(delta))
            .map(|(n, _)| {
                let seen = store.get(n).map_or(Observed::Unbound, |v| Observed::Value(v.clone()));
                (n.clone(), seen)
            })
            .collect()
    };
    Observation {
        observer: delta.clone(),
        termination: show_end.then_some(termination),
        values,
    }
}

pub fn check_ni(prog: &Program, spec: &ProgramSpec, delta: &Label, options: &NiOptions) -> Result<NiVerdict, OracleError> {
    let report = analyze(spec, prog)?;
    if report.verdict == Verdict::Misuse && !options.force {
        let why = report.first_diagnostic().map(|d| d.to_string()).unwrap_or_default();
        return Err(OracleError::NotAccepted(why));
    }
    let labels = if report.scope.is_none() {
        report.labels.clone()
    } else {
        spec.globals().clone()
    };
    let pc = report.pc.clone();

    let mut domains = infer_domains(prog, spec);
    for (name, values) in &options.domains {
        domains.insert(name.clone(), values.clone());
    }
    if let Some((name, _)) = domains.iter().find(|(_, v)| v.is_empty()) {
        return Err(OracleError::EmptyDomain(name.clone()));
    }

    let see = |outcome: &Outcome| {
        if options.strict_termination {
            observe(outcome, &labels, delta)
        } else {
            observe_under(outcome, &labels, &pc, delta)
        }
    };
    let exec = |inputs: &BTreeMap<String, Value>| run(prog, Store::from_values(inputs.clone()), options.budget);
    let found = |s1: &BTreeMap<String, Value>, s2: &BTreeMap<String, Value>, o1: Observation, o2: Observation| {
        let variable = o1.difference(&o2)?;
        Some(NiVerdict::Counterexample(Box::new(Counterexample {
            store1: s1.clone(),
            store2: s2.clone(),
            variable,
            first: o1,
            second: o2,
        })))
    };

    let low: Vec<&String> = domains.keys().filter(|n| visible(&labels, delta, n)).collect();
    let total: Option<usize> = domains.values().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));

    if let Some(stores) = total.filter(|&t| t <= 4096).map(|_| enumerate(&domains)) {
        let mut classes: BTreeMap<Vec<&Value>, Vec<&BTreeMap<String, Value>>> = BTreeMap::new();
        for store in &stores {
            let key = low.iter().map(|n| &store[*n]).collect();
            classes.entry(key).or_default().push(store);
        }
        let pair_count: usize = classes.values().map(|c| c.len() * (c.len() - 1) / 2).sum();
        if pair_count <= options.pairs {
            let mut trials = 0;
            for class in classes.values().filter(|c| c.len() > 1) {
                let observations: Vec<Observation> = class.iter().map(|s| see(&exec(s))).collect();
                trials += class.len();
                for i in 0..class.len() {
                    for j in i + 1..class.len() {
                        if let Some(v) = found(class[i], class[j], observations[i].clone(), observations[j].clone()) {
                            return Ok(v);
                        }
                    }
                }
            }
            return Ok(NiVerdict::NoCounterexample {
                trials,
                pairs_checked: pair_count,
                exhaustive: true,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let pick = |rng: &mut ChaCha8Rng, d: &[Value]| d.choose(rng).expect("domains are non-empty").clone();
    for _ in 0..options.pairs {
        let s1: BTreeMap<String, Value> = domains.iter().map(|(n, d)| (n.clone(), pick(&mut rng, d))).collect();
        let mut s2 = s1.clone();
        for (n, d) in &domains {
            if !visible(&labels, delta, n) && rng.gen_bool(0.5) {
                s2.insert(n.clone(), pick(&mut rng, d));
            }
        }
        if let Some(v) = found(&s1, &s2, see(&exec(&s1)), see(&exec(&s2))) {
            return Ok(v);
        }
    }
    Ok(NiVerdict::NoCounterexample {
        trials: 2 * options.pairs,
        pairs_checked: options.pairs,
        exhaustive: false,
    })
}

fn enumerate(domains: &BTreeMap<String, Vec<Value>>) -> Vec<BTreeMap<String, Value>> {
    let mut out = vec![BTreeMap::new()];
    for (name, values) in domains {
        out = out
            .into_iter()
            .flat_map(|partial| {
                values.iter().map(move |v| {
                    let mut next = partial.clone();
                    next.insert(name.clone(), v.clone());
                    next
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Bool,
    Str,
}

/// Small input domains for every policy global, by inferred value kind:
/// `{0, 1}` for integers, both booleans, and the program's string literals.
pub fn infer_domains(prog: &Program, spec: &ProgramSpec) -> BTreeMap<String, Vec<Value>> {
    let mut inf = Inference {
        prog,
        spec,
        kinds: BTreeMap::new(),
        literals: BTreeSet::new(),
        changed: true,
    };
    while inf.changed {
        inf.changed = false;
        inf.block(None, &prog.body);
        for def in prog.functions() {
            inf.block(Some(&def.name), &def.body);
        }
    }
    let mut strings: Vec<Value> = inf.literals.iter().map(|s| Value::Str(s.clone())).collect();
    for pad in ["", "a"] {
        if strings.len() < 2 && !inf.literals.contains(pad) {
            strings.push(Value::from(pad));
        }
    }
    spec.global_names()
        .into_iter()
        .map(|name| {
            let values = match inf.kinds.get(&(None, name.clone())) {
                Some(Kind::Bool) => vec![Value::Bool(false), Value::Bool(true)],
                Some(Kind::Str) => strings.clone(),
                Some(Kind::Int) | None => vec![Value::Int(0), Value::Int(1)],
            };
            (name, values)
        })
        .collect()
}

type Slot = (Option<String>, String);

struct Inference<'a> {
    prog: &'a Program,
    spec: &'a ProgramSpec,
    kinds: BTreeMap<Slot, Kind>,
    literals: BTreeSet<String>,
    changed: bool,
}

impl Inference<'_> {
    fn slot(&self, scope: Option<&str>, name: &str) -> Slot {
        if self.spec.is_global(name) {
            (None, name.to_string())
        } else {
            (scope.map(str::to_string), name.to_string())
        }
    }

    fn get(&self, scope: Option<&str>, name: &str) -> Option<Kind> {
        self.kinds.get(&self.slot(scope, name)).copied()
    }

    fn set(&mut self, scope: Option<&str>, name: &str, kind: Option<Kind>) {
        let Some(kind) = kind else { return };
        let slot = self.slot(scope, name);
        if let std::collections::btree_map::Entry::Vacant(e) = self.kinds.entry(slot) {
            e.insert(kind);
            self.changed = true;
        }
    }

    fn block(&mut self, scope: Option<&str>, stmts: &[Stmt]) {
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { target, value } => {
                    let k = self.expr(scope, value);
                    self.set(scope, target, k);
                    if let ExprKind::Var(v) = &value.kind {
                        let k = self.get(scope, target);
                        self.set(scope, v, k);
                    }
                }
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                } => {
                    self.expect(scope, cond, Kind::Bool);
                    self.block(scope, then_branch);
                    self.block(scope, else_branch);
                }
                StmtKind::While { cond, body } => {
                    self.expect(scope, cond, Kind::Bool);
                    self.block(scope, body);
                }
                StmtKind::Call(call) => {
                    self.call(scope, &call.func, &call.args);
                }
                StmtKind::Pass | StmtKind::Def(_) | StmtKind::Return(_) | StmtKind::ReturnDowngrade { .. } => {}
            }
        }
    }

    fn expect(&mut self, scope: Option<&str>, e: &Expr, kind: Kind) {
        if let ExprKind::Var(v) = &e.kind {
            self.set(scope, v, Some(kind));
        } else {
            self.expr(scope, e);
        }
    }

    fn call(&mut self, scope: Option<&str>, func: &str, args: &[String]) -> Option<Kind> {
        let def = self.prog.function(func)?.clone();
        for (param, arg) in def.params.iter().zip(args) {
            let k = self.get(scope, arg);
            self.set(Some(func), param, k);
            let k = self.get(Some(func), param);
            self.set(scope, arg, k);
        }
        match &def.exit()?.kind {
            StmtKind::Return(v) | StmtKind::ReturnDowngrade { var: v, .. } => self.get(Some(func), v),
            _ => None,
        }
    }

    fn expr(&mut self, scope: Option<&str>, e: &Expr) -> Option<Kind> {
        match &e.kind {
            ExprKind::Int(_) => Some(Kind::Int),
            ExprKind::Bool(_) => Some(Kind::Bool),
            ExprKind::Str(s) => {
                self.literals.insert(s.clone());
                Some(Kind::Str)
            }
            ExprKind::Var(v) => self.get(scope, v),
            ExprKind::Call(call) => self.call(scope, &call.func, &call.args),
            ExprKind::Unary(op, x) => {
                let kind = if *op == UnOp::Not { Kind::Bool } else { Kind::Int };
                self.expect(scope, x, kind);
                Some(kind)
            }
            ExprKind::Binary(op, l, r) => match op {
                BinOp::Eq | BinOp::Ne => {
                    let (kl, kr) = (self.expr(scope, l), self.expr(scope, r));
                    for (side, k) in [(l, kr), (r, kl)] {
                        if let ExprKind::Var(v) = &side.kind {
                            self.set(scope, v, k);
                        }
                    }
                    Some(Kind::Bool)
                }
                BinOp::And | BinOp::Or => {
                    self.expect(scope, l, Kind::Bool);
                    self.expect(scope, r, Kind::Bool);
                    Some(Kind::Bool)
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    self.expect(scope, l, Kind::Int);
                    self.expect(scope, r, Kind::Int);
                    Some(Kind::Bool)
                }
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                    self.expect(scope, l, Kind::Int);
                    self.expect(scope, r, Kind::Int);
                    Some(Kind::Int)
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::PrincipalUniverse;
    use crate::syntax::parse;

    fn universe() -> PrincipalUniverse {
        PrincipalUniverse::new(["A", "B", "S"]).unwrap()
    }

    fn lab(text: &str) -> Label {
        universe().parse_label(text).unwrap()
    }

    fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, Label> {
        pairs.iter().map(|(n, l)| (n.to_string(), lab(l))).collect()
    }

    #[test]
    fn low_equivalence_ignores_high_variables() {
        let lambda = labels(&[("h", "(A,{A},{A})"), ("l", "(S,{A,B,S},{})")]);
        let delta = lab("(B,{B},{A,B,S})");
        let s = |h: i64, l: i64| Store::from_values([("h", Value::Int(h)), ("l", Value::Int(l))]);
        assert!(low_equivalent(&s(0, 1), &s(1, 1), &lambda, &delta).unwrap());
        assert!(low_equivalent(&s(0, 1), &s(0, 1), &lambda, &delta).unwrap());
        assert!(!low_equivalent(&s(0, 1), &s(0, 0), &lambda, &delta).unwrap());
        let short = Store::from_values([("h", Value::Int(0))]);
        assert!(matches!(
            low_equivalent(&s(0, 0), &short, &lambda, &delta),
            Err(OracleError::DomainMismatch(_))
        ));
    }

    #[test]
    fn observation_projects_by_label() {
        let lambda = labels(&[("x", "(A,{A},{A})"), ("y", "(S,{A,B,S},{})")]);
        let delta = lab("(B,{B},{A,B,S})");
        let done = Outcome::Terminated(Store::from_values([("x", Value::Int(0)), ("y", Value::Int(1))]));
        let obs = observe(&done, &lambda, &delta);
        assert_eq!(obs.termination, Some(Termination::Terminated));
        assert_eq!(obs.values.len(), 1);
        assert_eq!(obs.values["y"], Observed::Value(Value::Int(1)));

        let all = observe(&done, &lambda, &universe().top());
        assert_eq!(all.values.len(), 2);

        let stuck = Outcome::StepBudgetExhausted(Store::new());
        let obs = observe(&stuck, &lambda, &delta);
        assert!(obs.is_divergence());
        assert!(obs.values.is_empty());
    }

    #[test]
    fn hidden_termination_keeps_the_low_store() {
        let lambda = labels(&[("y", "(S,{A,B,S},{})")]);
        let pc = lab("(S,{A,S},{A})");
        let delta = lab("(B,{B,S},{B})");
        let stuck = Outcome::StepBudgetExhausted(Store::from_values([("y", Value::Int(0))]));
        let obs = observe_under(&stuck, &lambda, &pc, &delta);
        assert_eq!(obs.termination, None);
        assert_eq!(obs.values["y"], Observed::Value(Value::Int(0)));
    }

    #[test]
    fn domains_follow_value_kinds() {
        let u = universe();
        let bottom = u.bottom();
        let spec = ProgramSpec::new(u, "S", bottom.clone())
            .unwrap()
            .with_global("n", bottom.clone())
            .unwrap()
            .with_global("b", bottom.clone())
            .unwrap()
            .with_global("s", bottom.clone())
            .unwrap()
            .with_global("c", bottom)
            .unwrap();
        let prog = parse("if b:\n    n = n + 1\nelse:\n    pass\nt = s == 'k'\nc = t\n").unwrap();
        let d = infer_domains(&prog, &spec);
        assert_eq!(d["n"], vec![Value::Int(0), Value::Int(1)]);
        assert_eq!(d["b"], vec![Value::Bool(false), Value::Bool(true)]);
        assert_eq!(d["s"], vec![Value::from("k"), Value::from("")]);
        assert_eq!(d["c"], vec![Value::Bool(false), Value::Bool(true)]);
    }
}
