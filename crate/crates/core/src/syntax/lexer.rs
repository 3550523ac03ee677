//! Indentation-aware tokenizer.
//!
//! Leading whitespace of each logical line is compared against a stack of
//! open indentation prefixes, producing `Indent`/`Dedent` tokens the way
//! Python does. Inside parentheses or braces newlines are insignificant.

use std::fmt;

use super::ast::Loc;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Name(String),
    Int(i64),
    Str(String),
    Pass,
    If,
    Else,
    While,
    Def,
    Return,
    Downgrade,
    True,
    False,
    And,
    Or,
    Not,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Assign,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Newline,
    Indent,
    Dedent,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenKind::Name(n) => return write!(f, "name `{n}`"),
            TokenKind::Int(n) => return write!(f, "integer {n}"),
            TokenKind::Str(s) => return write!(f, "string {s:?}"),
            TokenKind::Pass => "`pass`",
            TokenKind::If => "`if`",
            TokenKind::Else => "`else`",
            TokenKind::While => "`while`",
            TokenKind::Def => "`def`",
            TokenKind::Return => "`return`",
            TokenKind::Downgrade => "`downgrade`",
            TokenKind::True => "`True`",
            TokenKind::False => "`False`",
            TokenKind::And => "`and`",
            TokenKind::Or => "`or`",
            TokenKind::Not => "`not`",
            TokenKind::Plus => "`+`",
            TokenKind::Minus => "`-`",
            TokenKind::Star => "`*`",
            TokenKind::Slash => "`/`",
            TokenKind::Percent => "`%`",
            TokenKind::EqEq => "`==`",
            TokenKind::NotEq => "`!=`",
            TokenKind::Lt => "`<`",
            TokenKind::Le => "`<=`",
            TokenKind::Gt => "`>`",
            TokenKind::Ge => "`>=`",
            TokenKind::Assign => "`=`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::Comma => "`,`",
            TokenKind::Colon => "`:`",
            TokenKind::Newline => "end of line",
            TokenKind::Indent => "indent",
            TokenKind::Dedent => "dedent",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Loc,
}

fn keyword(word: &str) -> Option<TokenKind> {
    Some(match word {
        "pass" => TokenKind::Pass,
        "if" => TokenKind::If,
        "else" => TokenKind::Else,
        "while" => TokenKind::While,
        "def" => TokenKind::Def,
        "return" => TokenKind::Return,
        "downgrade" => TokenKind::Downgrade,
        "True" => TokenKind::True,
        "False" => TokenKind::False,
        "and" => TokenKind::And,
        "or" => TokenKind::Or,
        "not" => TokenKind::Not,
        _ => return None,
    })
}

fn lex_error(line: usize, col: usize, message: impl Into<String>) -> SyntaxError {
    SyntaxError::Lex {
        loc: Loc::new(line as u32, col as u32),
        message: message.into(),
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut tokens = Vec::new();
    // Each entry is the exact whitespace prefix that opened the level.
    let mut levels: Vec<String> = vec![String::new()];
    let mut depth = 0usize;
    let mut last_line = 0usize;

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;

        if depth == 0 {
            let prefix: String = chars.iter().take_while(|c| **c == ' ' || **c == '\t').collect();
            let rest = &chars[prefix.chars().count()..];
            if rest.is_empty() || rest[0] == '#' {
                continue;
            }
            if prefix.contains(' ') && prefix.contains('\t') {
                return Err(lex_error(line_no, 1, "tabs and spaces mixed in indentation"));
            }
            let current = levels.last().expect("indentation stack is never empty");
            if prefix != *current {
                if prefix.len() > current.len() && prefix.starts_with(current.as_str()) {
                    levels.push(prefix.clone());
                    tokens.push(Token {
                        kind: TokenKind::Indent,
                        loc: Loc::new(line_no as u32, 1),
                    });
                } else if let Some(pos) = levels.iter().position(|l| *l == prefix) {
                    for _ in pos + 1..levels.len() {
                        tokens.push(Token {
                            kind: TokenKind::Dedent,
                            loc: Loc::new(line_no as u32, 1),
                        });
                    }
                    levels.truncate(pos + 1);
                } else {
                    return Err(lex_error(
                        line_no,
                        1,
                        "inconsistent indentation: dedent does not match any open block",
                    ));
                }
            }
            i = prefix.chars().count();
        }

        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let loc = Loc::new(line_no as u32, col as u32);
            let mut push = |kind: TokenKind, width: usize| {
                tokens.push(Token { kind, loc });
                width
            };
            if c == ' ' || c == '\t' || c == '\r' {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let end = (i..chars.len())
                    .find(|&j| !(chars[j].is_ascii_alphanumeric() || chars[j] == '_'))
                    .unwrap_or(chars.len());
                let word: String = chars[i..end].iter().collect();
                let kind = keyword(&word).unwrap_or(TokenKind::Name(word));
                i += push(kind, end - i);
                continue;
            }
            if c.is_ascii_digit() {
                let end = (i..chars.len()).find(|&j| !chars[j].is_ascii_digit()).unwrap_or(chars.len());
                if end < chars.len() && (chars[end].is_ascii_alphabetic() || chars[end] == '_') {
                    return Err(lex_error(line_no, col, "malformed number"));
                }
                let digits: String = chars[i..end].iter().collect();
                let value = digits
                    .parse::<i64>()
                    .map_err(|_| lex_error(line_no, col, format!("integer literal {digits} is out of range")))?;
                i += push(TokenKind::Int(value), end - i);
                continue;
            }
            if c == '\'' || c == '"' {
                let mut text = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => return Err(lex_error(line_no, col, "unterminated string literal")),
                        Some(&q) if q == c => break,
                        Some('\\') => {
                            let escaped = match chars.get(j + 1) {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some(&e @ ('\\' | '\'' | '"')) => e,
                                _ => return Err(lex_error(line_no, j + 1, "unknown escape sequence")),
                            };
                            text.push(escaped);
                            j += 2;
                        }
                        Some(&other) => {
                            text.push(other);
                            j += 1;
                        }
                    }
                }
                i += push(TokenKind::Str(text), j + 1 - i);
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (kind, width) = match (c, next) {
                ('=', Some('=')) => (TokenKind::EqEq, 2),
                ('!', Some('=')) => (TokenKind::NotEq, 2),
                ('<', Some('=')) => (TokenKind::Le, 2),
                ('>', Some('=')) => (TokenKind::Ge, 2),
                ('=', _) => (TokenKind::Assign, 1),
                ('<', _) => (TokenKind::Lt, 1),
                ('>', _) => (TokenKind::Gt, 1),
                ('+', _) => (TokenKind::Plus, 1),
                ('-', _) => (TokenKind::Minus, 1),
                ('*', _) => (TokenKind::Star, 1),
                ('/', _) => (TokenKind::Slash, 1),
                ('%', _) => (TokenKind::Percent, 1),
                (',', _) => (TokenKind::Comma, 1),
                (':', _) => (TokenKind::Colon, 1),
                ('(', _) => {
                    depth += 1;
                    (TokenKind::LParen, 1)
                }
                ('{', _) => {
                    depth += 1;
                    (TokenKind::LBrace, 1)
                }
                (')', _) | ('}', _) => {
                    if depth == 0 {
                        return Err(lex_error(line_no, col, format!("unmatched `{c}`")));
                    }
                    depth -= 1;
                    (if c == ')' { TokenKind::RParen } else { TokenKind::RBrace }, 1)
                }
                _ => return Err(lex_error(line_no, col, format!("unexpected character `{c}`"))),
            };
            i += push(kind, width);
        }

        let open_line = tokens.last().is_some_and(|t| t.kind != TokenKind::Newline);
        if depth == 0 && open_line {
            tokens.push(Token {
                kind: TokenKind::Newline,
                loc: Loc::new(line_no as u32, chars.len() as u32 + 1),
            });
        }
    }

    if depth != 0 {
        return Err(lex_error(last_line.max(1), 1, "unclosed bracket at end of input"));
    }
    let end = Loc::new(last_line as u32 + 1, 1);
    for _ in 1..levels.len() {
        tokens.push(Token { kind: TokenKind::Dedent, loc: end });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn flat_statement() {
        assert_eq!(kinds("x = 1\n"), vec![Name("x".into()), Assign, Int(1), Newline]);
    }

    #[test]
    fn loop_block_opens_and_closes() {
        assert_eq!(
            kinds("while x==0:\n    pass\n"),
            vec![While, Name("x".into()), EqEq, Int(0), Colon, Newline, Indent, Pass, Newline, Dedent]
        );
    }

    #[test]
    fn dedent_to_unopened_level_is_rejected() {
        let err = tokenize("if b:\n  x=1\n y=2\n").unwrap_err();
        assert!(matches!(err, SyntaxError::Lex { loc, .. } if loc.line == 3));
    }

    #[test]
    fn mixed_tabs_and_spaces_are_rejected() {
        let err = tokenize("if b:\n \tx=1\n").unwrap_err();
        assert!(matches!(err, SyntaxError::Lex { loc, .. } if loc.line == 2));
        // Consistent tabs are fine.
        assert!(tokenize("if b:\n\tx=1\n").is_ok());
        // Tabs on one line, spaces on the next is inconsistent.
        assert!(tokenize("if b:\n\tx=1\n    y=2\n").is_err());
    }

    #[test]
    fn comments_blank_lines_and_brackets() {
        assert_eq!(
            kinds("# header\n\nx = (1 +\n     2)  # trailing\n\n"),
            vec![Name("x".into()), Assign, LParen, Int(1), Plus, Int(2), RParen, Newline]
        );
        assert_eq!(kinds("x = 'a#b'"), vec![Name("x".into()), Assign, Str("a#b".into()), Newline]);
    }

    #[test]
    fn keywords_and_operators() {
        assert_eq!(
            kinds("return downgrade(r, {'A'})\n"),
            vec![Return, Downgrade, LParen, Name("r".into()), Comma, LBrace, Str("A".into()), RBrace, RParen, Newline]
        );
        assert_eq!(
            kinds("a <= b != c >= d"),
            vec![
                Name("a".into()),
                Le,
                Name("b".into()),
                NotEq,
                Name("c".into()),
                Ge,
                Name("d".into()),
                Newline
            ]
        );
    }

    #[test]
    fn nested_blocks_close_at_eof() {
        let ks = kinds("while a:\n    if b:\n        pass");
        assert_eq!(ks.iter().filter(|k| **k == Dedent).count(), 2);
        assert_eq!(ks.iter().filter(|k| **k == Indent).count(), 2);
    }

    #[test]
    fn bad_input() {
        assert!(tokenize("x = 1)\n").is_err());
        assert!(tokenize("x = (1\n").is_err());
        assert!(tokenize("x = 'abc\n").is_err());
        assert!(tokenize("x = 1 ! 2\n").is_err());
        assert!(tokenize("x = 99999999999999999999\n").is_err());
        assert!(tokenize("x = 12ab\n").is_err());
    }
}
