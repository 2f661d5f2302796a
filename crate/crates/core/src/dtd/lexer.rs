//! Tokenizer shared by the definition language and the model language.
//! Comments run from `--` to end of line.

use crate::diag::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    Question,
    Bang,
    Pipe,
    Assign, // :=
    Eq,     // =
    EqEq,   // ==
    Ne,     // !=
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Arrow, // ->
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Float(x) => format!("float `{x}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Question => "?",
            Tok::Bang => "!",
            Tok::Pipe => "|",
            Tok::Assign => ":=",
            Tok::Eq => "=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Arrow => "->",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Scanner<'a> {
    src: &'a [u8],
    at: usize,
    line: u32,
    col: u32,
}

impl<'a> Scanner<'a> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.at).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.at + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.at += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut s = Scanner {
        src: src.as_bytes(),
        at: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // skip whitespace and comments
        loop {
            match s.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    s.bump();
                }
                Some(b'-') if s.peek2() == Some(b'-') => {
                    while let Some(c) = s.peek() {
                        if c == b'\n' {
                            break;
                        }
                        s.bump();
                    }
                }
                _ => break,
            }
        }
        let pos = s.pos();
        let c = match s.bump() {
            None => break,
            Some(c) => c,
        };
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'{' => Tok::LBrace,
            b'}' => Tok::RBrace,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'.' => Tok::Dot,
            b'?' => Tok::Question,
            b'+' => Tok::Plus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'%' => Tok::Percent,
            b':' => {
                if s.peek() == Some(b'=') {
                    s.bump();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            b'=' => {
                if s.peek() == Some(b'=') {
                    s.bump();
                    Tok::EqEq
                } else {
                    Tok::Eq
                }
            }
            b'!' => {
                if s.peek() == Some(b'=') {
                    s.bump();
                    Tok::Ne
                } else {
                    Tok::Bang
                }
            }
            b'<' => {
                if s.peek() == Some(b'=') {
                    s.bump();
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            b'>' => {
                if s.peek() == Some(b'=') {
                    s.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            b'&' => {
                if s.peek() == Some(b'&') {
                    s.bump();
                    Tok::AndAnd
                } else {
                    return Err(Diagnostic::error(pos, "expected `&&`"));
                }
            }
            b'|' => {
                if s.peek() == Some(b'|') {
                    s.bump();
                    Tok::OrOr
                } else {
                    Tok::Pipe
                }
            }
            b'-' => {
                if s.peek() == Some(b'>') {
                    s.bump();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            b'"' => {
                let mut text = String::new();
                loop {
                    match s.bump() {
                        None | Some(b'\n') => {
                            return Err(Diagnostic::error(pos, "unterminated string literal"));
                        }
                        Some(b'"') => break,
                        Some(c) => text.push(c as char),
                    }
                }
                Tok::Str(text)
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                text.push(c as char);
                while let Some(d) = s.peek() {
                    if d.is_ascii_digit() {
                        text.push(d as char);
                        s.bump();
                    } else {
                        break;
                    }
                }
                if s.peek() == Some(b'.') && s.peek2().is_some_and(|d| d.is_ascii_digit()) {
                    text.push('.');
                    s.bump();
                    while let Some(d) = s.peek() {
                        if d.is_ascii_digit() {
                            text.push(d as char);
                            s.bump();
                        } else {
                            break;
                        }
                    }
                    let x: f64 = text
                        .parse()
                        .map_err(|_| Diagnostic::error(pos, "invalid float literal"))?;
                    Tok::Float(x)
                } else {
                    let n: i64 = text.parse().map_err(|_| {
                        Diagnostic::error(pos, format!("integer literal `{text}` out of range"))
                    })?;
                    Tok::Int(n)
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut text = String::new();
                text.push(c as char);
                while let Some(d) = s.peek() {
                    if d.is_ascii_alphanumeric() || d == b'_' {
                        text.push(d as char);
                        s.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(text)
            }
            other => {
                return Err(Diagnostic::error(
                    pos,
                    format!("unexpected character `{}`", other as char),
                ));
            }
        };
        out.push(Token { tok, pos });
    }
    Ok(out)
}
