//! PyX surface syntax: tokenizer, parser, printer and variable-set helpers.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod vars;

use thiserror::Error;

pub use ast::{BinOp, Block, Call, Expr, ExprKind, FuncDef, Loc, Program, Stmt, StmtKind, UnOp};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use pretty::to_source;
pub use vars::NameSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{loc}: {message}")]
    Lex { loc: Loc, message: String },
    #[error("{loc}: syntax error: {message}")]
    Parse { loc: Loc, message: String },
    #[error("{loc}: `return` outside of a function")]
    ReturnOutsideFunction { loc: Loc },
    #[error("{loc}: `return` must be the last statement of a function body")]
    ReturnNotAtExit { loc: Loc },
    #[error("{loc}: `downgrade` is only allowed as `return downgrade(x, {{...}})`")]
    DowngradeOutsideReturn { loc: Loc },
    #[error("{loc}: function `{name}` is recursive")]
    RecursiveFunction { name: String, loc: Loc },
    #[error("{loc}: function `{name}` is defined more than once")]
    DuplicateFunction { name: String, loc: Loc },
    #[error("{loc}: call to undefined function `{name}`")]
    UndefinedFunction { name: String, loc: Loc },
    #[error("{loc}: `{name}` takes {expected} argument(s) but {found} were given")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        loc: Loc,
    },
    #[error("{loc}: functions may only be defined at the top level")]
    NestedDef { loc: Loc },
    #[error("{loc}: `{name}` is used both as a function and as a variable")]
    NameClash { name: String, loc: Loc },
}

impl SyntaxError {
    pub fn loc(&self) -> Loc {
        match self {
            SyntaxError::Lex { loc, .. }
            | SyntaxError::Parse { loc, .. }
            | SyntaxError::ReturnOutsideFunction { loc }
            | SyntaxError::ReturnNotAtExit { loc }
            | SyntaxError::DowngradeOutsideReturn { loc }
            | SyntaxError::RecursiveFunction { loc, .. }
            | SyntaxError::DuplicateFunction { loc, .. }
            | SyntaxError::UndefinedFunction { loc, .. }
            | SyntaxError::ArityMismatch { loc, .. }
            | SyntaxError::NestedDef { loc }
            | SyntaxError::NameClash { loc, .. } => *loc,
        }
    }
}
