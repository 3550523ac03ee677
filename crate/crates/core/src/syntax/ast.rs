use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "not",
        }
    }
}

/// A function call. Arguments are variable names only.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Call {
    pub func: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Str(String),
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Call(Call),
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Expr { kind, loc }
    }

    /// Calls in left-to-right evaluation order.
    pub fn calls(&self) -> Vec<&Call> {
        let mut out = Vec::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut Vec<&'a Call>) {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) | ExprKind::Var(_) => {}
            ExprKind::Binary(_, lhs, rhs) => {
                lhs.collect_calls(out);
                rhs.collect_calls(out);
            }
            ExprKind::Unary(_, operand) => operand.collect_calls(out),
            ExprKind::Call(call) => out.push(call),
        }
    }
}

/// A straight-line sequence of statements.
pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StmtKind {
    Pass,
    Assign { target: String, value: Expr },
    If { cond: Expr, then_branch: Block, else_branch: Block },
    While { cond: Expr, body: Block },
    Def(Arc<FuncDef>),
    Call(Call),
    Return(String),
    ReturnDowngrade { var: String, readers: Vec<String> },
}

impl Stmt {
    pub fn new(kind: StmtKind, loc: Loc) -> Self {
        Stmt { kind, loc }
    }

    pub fn construct(&self) -> &'static str {
        match self.kind {
            StmtKind::Pass => "pass",
            StmtKind::Assign { .. } => "assignment",
            StmtKind::If { .. } => "selection",
            StmtKind::While { .. } => "iteration",
            StmtKind::Def(_) => "function definition",
            StmtKind::Call(_) => "function call",
            StmtKind::Return(_) => "return",
            StmtKind::ReturnDowngrade { .. } => "downgrade",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
    pub loc: Loc,
}

impl FuncDef {
    /// The trailing `return` of the body, if any.
    pub fn exit(&self) -> Option<&Stmt> {
        self.body
            .last()
            .filter(|s| matches!(s.kind, StmtKind::Return(_) | StmtKind::ReturnDowngrade { .. }))
    }

    /// Body statements without the trailing `return`.
    pub fn statements(&self) -> &[Stmt] {
        match self.exit() {
            Some(_) => &self.body[..self.body.len() - 1],
            None => &self.body,
        }
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name)
    }
}

/// A parsed PyX program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub body: Block,
    functions: BTreeMap<String, Arc<FuncDef>>,
}

impl Program {
    pub(crate) fn new(body: Block, functions: BTreeMap<String, Arc<FuncDef>>) -> Self {
        Program { body, functions }
    }

    pub fn function(&self, name: &str) -> Option<&Arc<FuncDef>> {
        self.functions.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &Arc<FuncDef>> {
        self.functions.values()
    }

    /// Same program with every location zeroed, for structural comparison.
    pub fn without_locations(&self) -> Program {
        fn expr(e: &Expr) -> Expr {
            let kind = match &e.kind {
                ExprKind::Binary(op, l, r) => ExprKind::Binary(*op, Box::new(expr(l)), Box::new(expr(r))),
                ExprKind::Unary(op, x) => ExprKind::Unary(*op, Box::new(expr(x))),
                other => other.clone(),
            };
            Expr::new(kind, Loc::default())
        }
        fn block(b: &[Stmt]) -> Block {
            b.iter().map(stmt).collect()
        }
        fn def(f: &FuncDef) -> Arc<FuncDef> {
            Arc::new(FuncDef {
                name: f.name.clone(),
                params: f.params.clone(),
                body: block(&f.body),
                loc: Loc::default(),
            })
        }
        fn stmt(s: &Stmt) -> Stmt {
            let kind = match &s.kind {
                StmtKind::Assign { target, value } => StmtKind::Assign {
                    target: target.clone(),
                    value: expr(value),
                },
                StmtKind::If { cond, then_branch, else_branch } => StmtKind::If {
                    cond: expr(cond),
                    then_branch: block(then_branch),
                    else_branch: block(else_branch),
                },
                StmtKind::While { cond, body } => StmtKind::While {
                    cond: expr(cond),
                    body: block(body),
                },
                StmtKind::Def(f) => StmtKind::Def(def(f)),
                other => other.clone(),
            };
            Stmt::new(kind, Loc::default())
        }
        let body = block(&self.body);
        let functions = body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::Def(f) => Some((f.name.clone(), f.clone())),
                _ => None,
            })
            .collect();
        Program::new(body, functions)
    }
}
