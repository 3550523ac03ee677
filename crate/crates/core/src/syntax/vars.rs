//! Variable, source and target sets of statements.
//!
//! A call contributes the sets of the callee body, so these are defined on
//! [`Program`], which owns the function table.

use std::collections::BTreeSet;

use super::ast::*;

pub type NameSet = BTreeSet<String>;

impl Program {
    /// Every variable name occurring in `stmts`, including callee bodies.
    pub fn vars_of(&self, stmts: &[Stmt]) -> NameSet {
        let mut out = NameSet::new();
        for s in stmts {
            self.stmt_vars(s, &mut out);
        }
        out
    }

    /// Variables read by `stmts`.
    pub fn sources_of(&self, stmts: &[Stmt]) -> NameSet {
        let mut out = NameSet::new();
        for s in stmts {
            self.stmt_sources(s, &mut out);
        }
        out
    }

    /// Variables written by `stmts`.
    pub fn targets_of(&self, stmts: &[Stmt]) -> NameSet {
        let mut out = NameSet::new();
        for s in stmts {
            self.stmt_targets(s, &mut out);
        }
        out
    }

    pub fn expr_vars(&self, e: &Expr) -> NameSet {
        let mut out = NameSet::new();
        self.expr_vars_into(e, &mut out);
        out
    }

    pub fn expr_sources(&self, e: &Expr) -> NameSet {
        let mut out = NameSet::new();
        self.expr_sources_into(e, &mut out);
        out
    }

    pub fn expr_targets(&self, e: &Expr) -> NameSet {
        let mut out = NameSet::new();
        for call in e.calls() {
            out.extend(self.call_targets(call));
        }
        out
    }

    fn callee(&self, call: &Call) -> &FuncDef {
        self.function(&call.func)
            .expect("parser only admits calls to defined functions")
    }

    fn call_targets(&self, call: &Call) -> NameSet {
        self.targets_of(&self.callee(call).body)
    }

    fn expr_vars_into(&self, e: &Expr, out: &mut NameSet) {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
            ExprKind::Var(v) => {
                out.insert(v.clone());
            }
            ExprKind::Binary(_, l, r) => {
                self.expr_vars_into(l, out);
                self.expr_vars_into(r, out);
            }
            ExprKind::Unary(_, x) => self.expr_vars_into(x, out),
            ExprKind::Call(call) => {
                out.extend(call.args.iter().cloned());
                let def = self.callee(call);
                out.extend(def.params.iter().cloned());
                out.extend(self.vars_of(&def.body));
            }
        }
    }

    fn expr_sources_into(&self, e: &Expr, out: &mut NameSet) {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
            ExprKind::Var(v) => {
                out.insert(v.clone());
            }
            ExprKind::Binary(_, l, r) => {
                self.expr_sources_into(l, out);
                self.expr_sources_into(r, out);
            }
            ExprKind::Unary(_, x) => self.expr_sources_into(x, out),
            ExprKind::Call(call) => {
                out.extend(call.args.iter().cloned());
                out.extend(self.sources_of(&self.callee(call).body));
            }
        }
    }

    fn stmt_vars(&self, s: &Stmt, out: &mut NameSet) {
        match &s.kind {
            StmtKind::Pass => {}
            StmtKind::Assign { target, value } => {
                out.insert(target.clone());
                self.expr_vars_into(value, out);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr_vars_into(cond, out);
                out.extend(self.vars_of(then_branch));
                out.extend(self.vars_of(else_branch));
            }
            StmtKind::While { cond, body } => {
                self.expr_vars_into(cond, out);
                out.extend(self.vars_of(body));
            }
            StmtKind::Def(def) => {
                out.extend(def.params.iter().cloned());
                out.extend(self.vars_of(&def.body));
            }
            StmtKind::Call(call) => {
                out.extend(call.args.iter().cloned());
                let def = self.callee(call);
                out.extend(def.params.iter().cloned());
                out.extend(self.vars_of(&def.body));
            }
            StmtKind::Return(var) | StmtKind::ReturnDowngrade { var, .. } => {
                out.insert(var.clone());
            }
        }
    }

    fn stmt_sources(&self, s: &Stmt, out: &mut NameSet) {
        match &s.kind {
            StmtKind::Pass | StmtKind::Def(_) => {}
            StmtKind::Assign { value, .. } => self.expr_sources_into(value, out),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr_sources_into(cond, out);
                out.extend(self.sources_of(then_branch));
                out.extend(self.sources_of(else_branch));
            }
            StmtKind::While { cond, body } => {
                self.expr_sources_into(cond, out);
                out.extend(self.sources_of(body));
            }
            StmtKind::Call(call) => {
                out.extend(call.args.iter().cloned());
                out.extend(self.sources_of(&self.callee(call).body));
            }
            StmtKind::Return(var) | StmtKind::ReturnDowngrade { var, .. } => {
                out.insert(var.clone());
            }
        }
    }

    fn stmt_targets(&self, s: &Stmt, out: &mut NameSet) {
        match &s.kind {
            StmtKind::Pass | StmtKind::Def(_) | StmtKind::Return(_) | StmtKind::ReturnDowngrade { .. } => {}
            StmtKind::Assign { target, value } => {
                out.insert(target.clone());
                out.extend(self.expr_targets(value));
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                out.extend(self.expr_targets(cond));
                out.extend(self.targets_of(then_branch));
                out.extend(self.targets_of(else_branch));
            }
            StmtKind::While { cond, body } => {
                out.extend(self.expr_targets(cond));
                out.extend(self.targets_of(body));
            }
            StmtKind::Call(call) => out.extend(self.call_targets(call)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn set(names: &[&str]) -> NameSet {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn straight_line_sets() {
        let p = parse("x = y + z\nif a > 0:\n    b = c\nelse:\n    pass\nwhile d: e = e - 1\n").unwrap();
        assert_eq!(p.vars_of(&p.body), set(&["a", "b", "c", "d", "e", "x", "y", "z"]));
        assert_eq!(p.sources_of(&p.body), set(&["a", "c", "d", "e", "y", "z"]));
        assert_eq!(p.targets_of(&p.body), set(&["b", "e", "x"]));
    }

    #[test]
    fn calls_pull_in_callee_sets() {
        let p = parse("def f(a):\n    g = a + k\n    return g\nr = f(q)\nf(s)\n").unwrap();
        let call_assign = &p.body[1..2];
        assert_eq!(p.sources_of(call_assign), set(&["a", "g", "k", "q"]));
        assert_eq!(p.targets_of(call_assign), set(&["g", "r"]));
        assert_eq!(p.vars_of(call_assign), set(&["a", "g", "k", "q", "r"]));
        let call_stmt = &p.body[2..3];
        assert_eq!(p.targets_of(call_stmt), set(&["g"]));
        // The definition itself neither reads nor writes.
        assert!(p.sources_of(&p.body[..1]).is_empty());
        assert_eq!(p.vars_of(&p.body[..1]), set(&["a", "g", "k"]));
    }
}
