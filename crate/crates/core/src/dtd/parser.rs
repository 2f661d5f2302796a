//! Recursive-descent parser for `data` and `fun` definitions, plus the
//! expression/pattern/type grammar reused by the model parser.

use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::dtd::lexer::{lex, Tok, Token};
use crate::dtd::BinOp;
use crate::dtd::{Constructor, Equation, Expr, FuncDef, Pattern, TypeDef, TypeRef, UnOp, Value};

pub(crate) struct Cursor {
    toks: Vec<Token>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub(crate) fn new(src: &str) -> Result<Cursor, Diagnostic> {
        let toks = lex(src)?;
        let end = toks.last().map(|t| t.pos).unwrap_or(Pos::new(1, 1));
        Ok(Cursor { toks, at: 0, end })
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    pub(crate) fn pos(&self) -> Pos {
        self.toks.get(self.at).map(|t| t.pos).unwrap_or(self.end)
    }

    pub(crate) fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.tok.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub(crate) fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), Diagnostic> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    pub(crate) fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), Diagnostic> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Ident(_)) => {
                if let Some(Tok::Ident(s)) = self.bump() {
                    Ok((s, pos))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Consumes an identifier only if it equals `kw`.
    pub(crate) fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub(crate) fn unexpected(&self, what: &str) -> Diagnostic {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".to_string(),
        };
        Diagnostic::error(self.pos(), format!("expected {what}, found {found}"))
    }
}

pub(crate) fn parse_type_ref(c: &mut Cursor) -> Result<TypeRef, Diagnostic> {
    let (name, _) = c.expect_ident("a type name")?;
    Ok(match name.as_str() {
        "Int" => TypeRef::Int,
        "Float" => TypeRef::Float,
        "Bool" => TypeRef::Bool,
        _ => TypeRef::Named(name),
    })
}

/// Parses one `data` definition, with `data` already consumed.
pub(crate) fn parse_data_cont(c: &mut Cursor, pos: Pos) -> Result<TypeDef, Diagnostic> {
    let (name, _) = c.expect_ident("a type name")?;
    c.expect(&Tok::Eq, "`=`")?;
    let mut ctors = Vec::new();
    loop {
        let (cname, cpos) = c.expect_ident("a constructor name")?;
        let mut arg_types = Vec::new();
        if c.eat(&Tok::LParen) {
            loop {
                arg_types.push(parse_type_ref(c)?);
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
            c.expect(&Tok::RParen, "`)`")?;
        }
        ctors.push(Constructor {
            name: cname,
            arg_types,
            pos: cpos,
        });
        if !c.eat(&Tok::Pipe) {
            break;
        }
    }
    c.expect(&Tok::Semi, "`;`")?;
    Ok(TypeDef { name, ctors, pos })
}

/// Parses one `fun` definition, with `fun` already consumed. All equations
/// must repeat the function name and share the same arity.
pub(crate) fn parse_fun_cont(c: &mut Cursor, pos: Pos) -> Result<FuncDef, Diagnostic> {
    let mut name: Option<String> = None;
    let mut equations = Vec::new();
    loop {
        let (ename, epos) = c.expect_ident("a function name")?;
        match &name {
            None => name = Some(ename),
            Some(n) if *n == ename => {}
            Some(n) => {
                return Err(Diagnostic::error(
                    epos,
                    format!("equation names `{ename}`, expected `{n}`"),
                ));
            }
        }
        c.expect(&Tok::LParen, "`(`")?;
        let mut patterns = Vec::new();
        if !c.eat(&Tok::RParen) {
            loop {
                patterns.push(parse_pattern(c)?);
                if !c.eat(&Tok::Comma) {
                    break;
                }
            }
            c.expect(&Tok::RParen, "`)`")?;
        }
        if let Some(first) = equations.first() {
            let first: &Equation = first;
            if first.patterns.len() != patterns.len() {
                return Err(Diagnostic::error(
                    epos,
                    format!(
                        "equation has {} patterns, previous equations have {}",
                        patterns.len(),
                        first.patterns.len()
                    ),
                ));
            }
        }
        c.expect(&Tok::Eq, "`=`")?;
        let body = parse_expr(c)?;
        equations.push(Equation { patterns, body });
        if !c.eat(&Tok::Pipe) {
            break;
        }
    }
    c.expect(&Tok::Semi, "`;`")?;
    Ok(FuncDef {
        name: name.expect("at least one equation"),
        param_types: Vec::new(),
        return_type: TypeRef::Bool,
        equations,
        pos,
    })
}

pub(crate) fn parse_pattern(c: &mut Cursor) -> Result<Pattern, Diagnostic> {
    match c.peek() {
        Some(Tok::Ident(s)) if s == "_" => {
            c.bump();
            Ok(Pattern::Wildcard)
        }
        Some(Tok::Ident(s)) if s == "true" => {
            c.bump();
            Ok(Pattern::Literal(Value::Bool(true)))
        }
        Some(Tok::Ident(s)) if s == "false" => {
            c.bump();
            Ok(Pattern::Literal(Value::Bool(false)))
        }
        Some(Tok::Ident(_)) => {
            let (name, _) = c.expect_ident("a pattern")?;
            if c.eat(&Tok::LParen) {
                let mut subs = Vec::new();
                if !c.eat(&Tok::RParen) {
                    loop {
                        subs.push(parse_pattern(c)?);
                        if !c.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    c.expect(&Tok::RParen, "`)`")?;
                }
                Ok(Pattern::Ctor(name, subs))
            } else {
                // Variable or nullary constructor; resolved against the
                // definition set after parsing.
                Ok(Pattern::Var(name))
            }
        }
        Some(Tok::Int(_)) | Some(Tok::Float(_)) => Ok(Pattern::Literal(parse_number(c, false)?)),
        Some(Tok::Minus) => {
            c.bump();
            Ok(Pattern::Literal(parse_number(c, true)?))
        }
        _ => Err(c.unexpected("a pattern")),
    }
}

fn parse_number(c: &mut Cursor, negate: bool) -> Result<Value, Diagnostic> {
    match c.bump() {
        Some(Tok::Int(n)) => Ok(Value::Int(if negate { -n } else { n })),
        Some(Tok::Float(x)) => Ok(Value::Float(if negate { -x } else { x })),
        _ => Err(c.unexpected("a numeric literal")),
    }
}

pub(crate) fn parse_expr(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    parse_or(c)
}

fn parse_or(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    let mut lhs = parse_and(c)?;
    while c.eat(&Tok::OrOr) {
        let rhs = parse_and(c)?;
        lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_and(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    let mut lhs = parse_cmp(c)?;
    while c.eat(&Tok::AndAnd) {
        let rhs = parse_cmp(c)?;
        lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_cmp(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    let lhs = parse_add(c)?;
    let op = match c.peek() {
        Some(Tok::EqEq) => Some(BinOp::Eq),
        Some(Tok::Ne) => Some(BinOp::Ne),
        Some(Tok::Lt) => Some(BinOp::Lt),
        Some(Tok::Le) => Some(BinOp::Le),
        Some(Tok::Gt) => Some(BinOp::Gt),
        Some(Tok::Ge) => Some(BinOp::Ge),
        _ => None,
    };
    if let Some(op) = op {
        c.bump();
        let rhs = parse_add(c)?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    } else {
        Ok(lhs)
    }
}

fn parse_add(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    let mut lhs = parse_mul(c)?;
    loop {
        let op = match c.peek() {
            Some(Tok::Plus) => BinOp::Add,
            Some(Tok::Minus) => BinOp::Sub,
            _ => break,
        };
        c.bump();
        let rhs = parse_mul(c)?;
        lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_mul(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    let mut lhs = parse_unary(c)?;
    loop {
        let op = match c.peek() {
            Some(Tok::Star) => BinOp::Mul,
            Some(Tok::Slash) => BinOp::Div,
            Some(Tok::Percent) => BinOp::Rem,
            _ => break,
        };
        c.bump();
        let rhs = parse_unary(c)?;
        lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_unary(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    if c.eat(&Tok::Minus) {
        let e = parse_unary(c)?;
        Ok(Expr::Unary(UnOp::Neg, Box::new(e)))
    } else if c.eat(&Tok::Bang) {
        let e = parse_unary(c)?;
        Ok(Expr::Unary(UnOp::Not, Box::new(e)))
    } else {
        parse_atom(c)
    }
}

fn parse_atom(c: &mut Cursor) -> Result<Expr, Diagnostic> {
    match c.peek() {
        Some(Tok::Int(_)) | Some(Tok::Float(_)) => Ok(Expr::Literal(parse_number(c, false)?)),
        Some(Tok::LParen) => {
            c.bump();
            let e = parse_expr(c)?;
            c.expect(&Tok::RParen, "`)`")?;
            Ok(e)
        }
        Some(Tok::Ident(s)) if s == "true" => {
            c.bump();
            Ok(Expr::Literal(Value::Bool(true)))
        }
        Some(Tok::Ident(s)) if s == "false" => {
            c.bump();
            Ok(Expr::Literal(Value::Bool(false)))
        }
        Some(Tok::Ident(s)) if s == "if" => {
            c.bump();
            let cond = parse_expr(c)?;
            c.expect_kw("then")?;
            let then = parse_expr(c)?;
            c.expect_kw("else")?;
            let els = parse_expr(c)?;
            Ok(Expr::If(Box::new(cond), Box::new(then), Box::new(els)))
        }
        Some(Tok::Ident(_)) => {
            let (name, _) = c.expect_ident("an expression")?;
            if c.eat(&Tok::LParen) {
                let mut args = Vec::new();
                if !c.eat(&Tok::RParen) {
                    loop {
                        args.push(parse_expr(c)?);
                        if !c.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    c.expect(&Tok::RParen, "`)`")?;
                }
                // Constructor applications are disambiguated from function
                // calls during resolution.
                Ok(Expr::Call(name, args))
            } else {
                Ok(Expr::Var(name))
            }
        }
        _ => Err(c.unexpected("an expression")),
    }
}

/// Parses a definition text into unresolved type and function definitions,
/// in declaration order. Name resolution and type checking happen in
/// [`crate::dtd::check`].
pub fn parse_dtd_raw(text: &str) -> Result<(Vec<TypeDef>, Vec<FuncDef>), Diagnostics> {
    let mut c = Cursor::new(text).map_err(Diagnostics::from)?;
    let mut types = Vec::new();
    let mut funs = Vec::new();
    while !c.at_end() {
        let pos = c.pos();
        if c.eat_kw("data") {
            types.push(parse_data_cont(&mut c, pos).map_err(Diagnostics::from)?);
        } else if c.eat_kw("fun") {
            funs.push(parse_fun_cont(&mut c, pos).map_err(Diagnostics::from)?);
        } else {
            return Err(c.unexpected("`data` or `fun`").into());
        }
    }
    Ok((types, funs))
}

/// Parses a single comma-separated list of value literals, as used for
/// search input domains. `_` denotes an absent message.
pub fn parse_literal_list(text: &str) -> Result<Vec<Option<Value>>, Diagnostic> {
    let mut c = Cursor::new(text)?;
    let mut out = Vec::new();
    loop {
        if c.eat_kw("_") {
            out.push(None);
        } else {
            out.push(Some(parse_literal(&mut c)?));
        }
        if !c.eat(&Tok::Comma) {
            break;
        }
    }
    if !c.at_end() {
        return Err(c.unexpected("end of list"));
    }
    Ok(out)
}

/// Parses one value literal: a number, boolean, or constructor application
/// of literals.
pub(crate) fn parse_literal(c_or_text: &mut Cursor) -> Result<Value, Diagnostic> {
    let c = c_or_text;
    match c.peek() {
        Some(Tok::Int(_)) | Some(Tok::Float(_)) => parse_number(c, false),
        Some(Tok::Minus) => {
            c.bump();
            parse_number(c, true)
        }
        Some(Tok::Ident(s)) if s == "true" => {
            c.bump();
            Ok(Value::Bool(true))
        }
        Some(Tok::Ident(s)) if s == "false" => {
            c.bump();
            Ok(Value::Bool(false))
        }
        Some(Tok::Ident(_)) => {
            let (name, _) = c.expect_ident("a literal")?;
            let mut args = Vec::new();
            if c.eat(&Tok::LParen) && !c.eat(&Tok::RParen) {
                loop {
                    args.push(parse_literal(c)?);
                    if !c.eat(&Tok::Comma) {
                        break;
                    }
                }
                c.expect(&Tok::RParen, "`)`")?;
            }
            Ok(Value::Ctor(name, args))
        }
        _ => Err(c.unexpected("a literal")),
    }
}

/// Parses a literal from a standalone string, requiring all input consumed.
pub fn parse_literal_str(text: &str) -> Result<Value, Diagnostic> {
    let mut c = Cursor::new(text)?;
    let v = parse_literal(&mut c)?;
    if !c.at_end() {
        return Err(c.unexpected("end of literal"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_sensor_type() {
        let (types, funs) =
            parse_dtd_raw("data SensorVal = Defect | Busy | Ready(Float);").unwrap();
        assert!(funs.is_empty());
        assert_eq!(types.len(), 1);
        let t = &types[0];
        assert_eq!(t.name, "SensorVal");
        let arities: Vec<usize> = t.ctors.iter().map(|c| c.arg_types.len()).collect();
        assert_eq!(arities, vec![0, 0, 1]);
    }

    #[test]
    fn parses_a_three_equation_function() {
        let (_, funs) = parse_dtd_raw(
            "fun nextValue(last,Defect) = last | nextValue(last,Busy) = last \
             | nextValue(last,Ready(x)) = x;",
        )
        .unwrap();
        assert_eq!(funs.len(), 1);
        assert_eq!(funs[0].equations.len(), 3);
    }

    #[test]
    fn rejects_mismatched_equation_names() {
        let err = parse_dtd_raw("fun f(x) = x | g(x) = x;").unwrap_err();
        assert!(err.items[0].message.contains("expected `f`"));
    }

    #[test]
    fn rejects_mismatched_equation_arity() {
        let err = parse_dtd_raw("fun f(x) = x | f(x, y) = x;").unwrap_err();
        assert!(err.items[0].message.contains("2 patterns"));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_dtd_raw("data T = ;").unwrap_err();
        assert_eq!(err.items[0].pos.line, 1);
        assert_eq!(err.items[0].pos.col, 10);
    }

    #[test]
    fn expression_precedence() {
        let (_, funs) = parse_dtd_raw("fun f(a, b, c) = a + b * c == a && true;").unwrap();
        // ((a + (b * c)) == a) && true
        match &funs[0].equations[0].body {
            Expr::Binary(BinOp::And, lhs, _) => match lhs.as_ref() {
                Expr::Binary(BinOp::Eq, l2, _) => match l2.as_ref() {
                    Expr::Binary(BinOp::Add, _, mul) => {
                        assert!(matches!(mul.as_ref(), Expr::Binary(BinOp::Mul, _, _)));
                    }
                    other => panic!("unexpected {other:?}"),
                },
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn literal_lists_support_absence_and_ctors() {
        let vs = parse_literal_list("1.5, _, Ready(2.0), true, -3").unwrap();
        assert_eq!(vs.len(), 5);
        assert_eq!(vs[0], Some(Value::Float(1.5)));
        assert_eq!(vs[1], None);
        assert_eq!(
            vs[2],
            Some(Value::Ctor("Ready".into(), vec![Value::Float(2.0)]))
        );
        assert_eq!(vs[4], Some(Value::Int(-3)));
    }
}
