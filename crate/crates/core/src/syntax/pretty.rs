//! Source printer. Output re-parses to the same tree, modulo locations.

use std::fmt::{self, Write};

use super::ast::*;

/// Renders a program as PyX source with four-space indentation.
pub fn to_source(program: &Program) -> String {
    let mut out = String::new();
    for stmt in &program.body {
        write_stmt(&mut out, stmt, 0);
    }
    out
}

fn write_block(out: &mut String, block: &[Stmt], depth: usize) {
    for stmt in block {
        write_stmt(out, stmt, depth);
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match &stmt.kind {
        StmtKind::Pass => {
            let _ = writeln!(out, "{pad}pass");
        }
        StmtKind::Assign { target, value } => {
            let _ = writeln!(out, "{pad}{target} = {value}");
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            let _ = writeln!(out, "{pad}if {cond}:");
            write_block(out, then_branch, depth + 1);
            let _ = writeln!(out, "{pad}else:");
            write_block(out, else_branch, depth + 1);
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "{pad}while {cond}:");
            write_block(out, body, depth + 1);
        }
        StmtKind::Def(def) => {
            let _ = writeln!(out, "{pad}def {}({}):", def.name, def.params.join(", "));
            write_block(out, &def.body, depth + 1);
        }
        StmtKind::Call(call) => {
            let _ = writeln!(out, "{pad}{call}");
        }
        StmtKind::Return(var) => {
            let _ = writeln!(out, "{pad}return {var}");
        }
        StmtKind::ReturnDowngrade { var, readers } => {
            let readers: Vec<String> = readers.iter().map(|r| quote(r)).collect();
            let _ = writeln!(out, "{pad}return downgrade({var}, {{{}}})", readers.join(", "));
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.func, self.args.join(", "))
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.kind {
        ExprKind::Binary(..) | ExprKind::Unary(..) => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Int(n) => write!(f, "{n}"),
            ExprKind::Bool(true) => f.write_str("True"),
            ExprKind::Bool(false) => f.write_str("False"),
            ExprKind::Str(s) => f.write_str(&quote(s)),
            ExprKind::Var(v) => f.write_str(v),
            ExprKind::Call(call) => write!(f, "{call}"),
            ExprKind::Unary(UnOp::Neg, x) => {
                f.write_str("-")?;
                write_operand(f, x)
            }
            ExprKind::Unary(UnOp::Not, x) => {
                f.write_str("not ")?;
                write_operand(f, x)
            }
            ExprKind::Binary(op, l, r) => {
                write_operand(f, l)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r)
            }
        }
    }
}
