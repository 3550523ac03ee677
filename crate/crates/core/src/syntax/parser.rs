//! Recursive-descent parser over the token stream.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::SyntaxError;

/// Parses a complete PyX program.
pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        functions: BTreeMap::new(),
        current_fn: None,
    };
    let mut body = Vec::new();
    while !parser.at_end() {
        body.push(parser.statement(Scope::TopLevel)?);
    }
    let program = Program::new(body, parser.functions);
    check_name_clashes(&program)?;
    Ok(program)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    TopLevel,
    FunctionBody,
    Nested,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    functions: BTreeMap<String, Arc<FuncDef>>,
    current_fn: Option<String>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn loc(&self) -> Loc {
        match self.tokens.get(self.pos) {
            Some(t) => t.loc,
            None => self
                .tokens
                .last()
                .map(|t| Loc::new(t.loc.line + 1, 1))
                .unwrap_or(Loc::new(1, 1)),
        }
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError::Parse {
            loc: self.loc(),
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        match self.peek() {
            Some(TokenKind::Downgrade) => Err(SyntaxError::DowngradeOutsideReturn { loc: self.loc() }),
            Some(found) => self.error(format!("expected {expected}, found {found}")),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.peek() == Some(&kind) {
            Ok(self.advance().expect("peeked token exists"))
        } else {
            self.unexpected(&kind.to_string())
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.unexpected("a name"),
        }
    }

    fn statement(&mut self, scope: Scope) -> PResult<Stmt> {
        let loc = self.loc();
        match self.peek() {
            Some(TokenKind::Def) => {
                if scope != Scope::TopLevel {
                    return Err(SyntaxError::NestedDef { loc });
                }
                self.def_stmt()
            }
            Some(TokenKind::If) => {
                self.advance();
                let cond = self.expr()?;
                let then_branch = self.block()?;
                let else_branch = if self.peek() == Some(&TokenKind::Else) {
                    self.advance();
                    self.block()?
                } else {
                    vec![Stmt::new(StmtKind::Pass, loc)]
                };
                Ok(Stmt::new(
                    StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    },
                    loc,
                ))
            }
            Some(TokenKind::While) => {
                self.advance();
                let cond = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::new(StmtKind::While { cond, body }, loc))
            }
            _ => {
                let stmt = self.simple_statement(scope)?;
                self.expect(TokenKind::Newline)?;
                Ok(stmt)
            }
        }
    }

    /// Body of an `if`/`else`/`while`.
    fn block(&mut self) -> PResult<Block> {
        self.block_in(Scope::Nested)
    }

    /// `: NEWLINE INDENT stmt+ DEDENT` or `: simple_stmt NEWLINE`.
    fn block_in(&mut self, scope: Scope) -> PResult<Block> {
        self.expect(TokenKind::Colon)?;
        if self.peek() != Some(&TokenKind::Newline) {
            let stmt = self.simple_statement(scope)?;
            self.expect(TokenKind::Newline)?;
            return Ok(vec![stmt]);
        }
        self.advance();
        if self.peek() != Some(&TokenKind::Indent) {
            return self.unexpected("an indented block");
        }
        self.advance();
        let mut body = Vec::new();
        while !self.at_end() && self.peek() != Some(&TokenKind::Dedent) {
            body.push(self.statement(scope)?);
        }
        if !self.at_end() {
            self.advance();
        }
        Ok(body)
    }

    fn def_stmt(&mut self) -> PResult<Stmt> {
        let loc = self.loc();
        self.expect(TokenKind::Def)?;
        let name_loc = self.loc();
        let name = self.name()?;
        if self.functions.contains_key(&name) {
            return Err(SyntaxError::DuplicateFunction { name, loc: name_loc });
        }
        self.expect(TokenKind::LParen)?;
        let mut params: Vec<String> = Vec::new();
        if self.peek() != Some(&TokenKind::RParen) {
            loop {
                let ploc = self.loc();
                let p = self.name()?;
                if params.contains(&p) {
                    return Err(SyntaxError::Parse {
                        loc: ploc,
                        message: format!("duplicate parameter `{p}`"),
                    });
                }
                params.push(p);
                if self.peek() == Some(&TokenKind::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        self.current_fn = Some(name.clone());
        let body = self.block_in(Scope::FunctionBody)?;
        self.current_fn = None;
        // Only the final statement may be a return.
        for stmt in body.iter().rev().skip(1) {
            if matches!(stmt.kind, StmtKind::Return(_) | StmtKind::ReturnDowngrade { .. }) {
                return Err(SyntaxError::ReturnNotAtExit { loc: stmt.loc });
            }
        }
        let def = Arc::new(FuncDef {
            name: name.clone(),
            params,
            body,
            loc,
        });
        self.functions.insert(name, def.clone());
        Ok(Stmt::new(StmtKind::Def(def), loc))
    }

    fn simple_statement(&mut self, scope: Scope) -> PResult<Stmt> {
        let loc = self.loc();
        match self.peek() {
            Some(TokenKind::Pass) => {
                self.advance();
                Ok(Stmt::new(StmtKind::Pass, loc))
            }
            Some(TokenKind::Return) => {
                if self.current_fn.is_none() {
                    return Err(SyntaxError::ReturnOutsideFunction { loc });
                }
                if scope != Scope::FunctionBody {
                    return Err(SyntaxError::ReturnNotAtExit { loc });
                }
                self.advance();
                if self.peek() == Some(&TokenKind::Downgrade) {
                    self.advance();
                    self.expect(TokenKind::LParen)?;
                    let var = self.name()?;
                    self.expect(TokenKind::Comma)?;
                    self.expect(TokenKind::LBrace)?;
                    let mut readers = Vec::new();
                    loop {
                        match self.peek() {
                            Some(TokenKind::Str(s)) | Some(TokenKind::Name(s)) => {
                                readers.push(s.clone());
                                self.advance();
                            }
                            _ => return self.unexpected("a principal"),
                        }
                        if self.peek() == Some(&TokenKind::Comma) {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                    self.expect(TokenKind::RBrace)?;
                    self.expect(TokenKind::RParen)?;
                    Ok(Stmt::new(StmtKind::ReturnDowngrade { var, readers }, loc))
                } else {
                    let var = self.name()?;
                    Ok(Stmt::new(StmtKind::Return(var), loc))
                }
            }
            Some(TokenKind::Name(_)) => match self.peek_at(1) {
                Some(TokenKind::Assign) => {
                    let target = self.name()?;
                    self.advance();
                    let value = self.expr()?;
                    Ok(Stmt::new(StmtKind::Assign { target, value }, loc))
                }
                Some(TokenKind::LParen) => {
                    let name = self.name()?;
                    let call = self.call(name, loc)?;
                    Ok(Stmt::new(StmtKind::Call(call), loc))
                }
                _ => {
                    self.advance();
                    self.unexpected("`=` or `(`")
                }
            },
            _ => self.unexpected("a statement"),
        }
    }

    fn call(&mut self, func: String, loc: Loc) -> PResult<Call> {
        self.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if self.peek() != Some(&TokenKind::RParen) {
            loop {
                match self.peek() {
                    Some(TokenKind::Name(n)) => {
                        args.push(n.clone());
                        self.advance();
                    }
                    _ => return self.unexpected("a variable name as call argument"),
                }
                if self.peek() == Some(&TokenKind::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen)?;
        if self.current_fn.as_deref() == Some(func.as_str()) {
            return Err(SyntaxError::RecursiveFunction { name: func, loc });
        }
        let Some(def) = self.functions.get(&func) else {
            return Err(SyntaxError::UndefinedFunction { name: func, loc });
        };
        if def.params.len() != args.len() {
            return Err(SyntaxError::ArityMismatch {
                name: func,
                expected: def.params.len(),
                found: args.len(),
                loc,
            });
        }
        Ok(Call { func, args })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&TokenKind::Or) {
            let loc = self.loc();
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)), loc);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.peek() == Some(&TokenKind::And) {
            let loc = self.loc();
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Expr::new(ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)), loc);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.peek() == Some(&TokenKind::Not) {
            let loc = self.loc();
            self.advance();
            let operand = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(operand)), loc));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let Some(op) = self.peek().and_then(comparison_op) else {
            return Ok(lhs);
        };
        let loc = self.loc();
        self.advance();
        let rhs = self.additive()?;
        if self.peek().and_then(comparison_op).is_some() {
            return self.error("chained comparisons are not supported");
        }
        Ok(Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let loc = self.loc();
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                Some(TokenKind::Percent) => BinOp::Mod,
                _ => return Ok(lhs),
            };
            let loc = self.loc();
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == Some(&TokenKind::Minus) {
            let loc = self.loc();
            self.advance();
            let operand = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(operand)), loc));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let loc = self.loc();
        let kind = match self.peek() {
            Some(TokenKind::Int(n)) => ExprKind::Int(*n),
            Some(TokenKind::Str(s)) => ExprKind::Str(s.clone()),
            Some(TokenKind::True) => ExprKind::Bool(true),
            Some(TokenKind::False) => ExprKind::Bool(false),
            Some(TokenKind::Name(n)) => {
                let n = n.clone();
                self.advance();
                if self.peek() == Some(&TokenKind::LParen) {
                    let call = self.call(n, loc)?;
                    return Ok(Expr::new(ExprKind::Call(call), loc));
                }
                return Ok(Expr::new(ExprKind::Var(n), loc));
            }
            Some(TokenKind::LParen) => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(inner);
            }
            _ => return self.unexpected("an expression"),
        };
        self.advance();
        Ok(Expr::new(kind, loc))
    }
}

fn comparison_op(kind: &TokenKind) -> Option<BinOp> {
    Some(match kind {
        TokenKind::EqEq => BinOp::Eq,
        TokenKind::NotEq => BinOp::Ne,
        TokenKind::Lt => BinOp::Lt,
        TokenKind::Le => BinOp::Le,
        TokenKind::Gt => BinOp::Gt,
        TokenKind::Ge => BinOp::Ge,
        _ => return None,
    })
}

fn check_name_clashes(program: &Program) -> PResult<()> {
    let names: BTreeSet<String> = program.vars_of(&program.body);
    for def in program.functions() {
        if names.contains(&def.name) {
            return Err(SyntaxError::NameClash {
                name: def.name.clone(),
                loc: def.loc,
            });
        }
    }
    Ok(())
}
