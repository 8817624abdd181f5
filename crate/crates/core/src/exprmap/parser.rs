//! Recursive-descent parser for coordinate expressions.
//!
//! Precedence from loosest to tightest: `+ -`, `* /`, unary minus, `^`.
//! Binary operators associate to the left. Exponents are integer literals,
//! optionally signed and optionally parenthesized (`x1^2`, `x1^-1`,
//! `x1^(-1)`). A minus sign directly in front of a number literal that is
//! not raised to a power folds into a negative constant.

use std::f64::consts::PI;

use super::expr::{BinOp, Expr, Func};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
                out.push((Tok::Num(v), start));
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => return Err(syntax(start, format!("unexpected character `{c}`"))),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() != Tok::Minus {
            return self.power();
        }
        self.bump();
        if let Tok::Num(v) = *self.peek() {
            if *self.peek_at(1) != Tok::Caret {
                self.bump();
                return Ok(Expr::Const(-v));
            }
        }
        Ok(Expr::Neg(Box::new(self.unary()?)))
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            let n = self.exponent()?;
            base = Expr::Pow(Box::new(base), n);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = *self.peek() == Tok::LParen;
        if paren {
            self.bump();
        }
        let neg = *self.peek() == Tok::Minus;
        if neg {
            self.bump();
        }
        let at = self.offset();
        let n = match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            _ => return Err(syntax(at, "exponent must be an integer literal")),
        };
        if paren {
            self.expect(Tok::RParen, "`)` after exponent")?;
        }
        Ok(if neg { -n } else { n })
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, at)
                } else {
                    identifier(name, at)
                }
            }
            Tok::End => Err(syntax(at, "unexpected end of input")),
            t => Err(syntax(at, format!("unexpected token {t:?}"))),
        }
    }

    fn call(&mut self, name: String, at: usize) -> Result<Expr> {
        self.bump();
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "`)` closing the argument list")?;
        if name == "norm" {
            return Ok(Expr::Norm(args));
        }
        let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier {
            name: name.clone(),
            position: at,
        })?;
        if args.len() != 1 {
            return Err(syntax(at, format!("`{name}` takes exactly one argument")));
        }
        Ok(Expr::Call(func, Box::new(args.pop().expect("one argument"))))
    }
}

fn identifier(name: String, at: usize) -> Result<Expr> {
    if name == "pi" {
        return Ok(Expr::Const(PI));
    }
    if let Some(idx) = name.strip_prefix('x') {
        if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
            return match idx.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(Expr::Var(i)),
                _ => Err(Error::UnknownIdentifier { name, position: at }),
            };
        }
    }
    let reserved = Func::from_name(&name).is_some() || name == "norm";
    if !reserved && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_') {
        return Ok(Expr::Param(name));
    }
    Err(Error::UnknownIdentifier { name, position: at })
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Expr {
        Expr::Var(i)
    }

    fn p(s: &str) -> Expr {
        Expr::Param(s.into())
    }

    fn call(f: Func, e: Expr) -> Expr {
        Expr::Call(f, Box::new(e))
    }

    #[test]
    fn parses_slanted_component() {
        let e = parse_expr("x1*sin(a) - x3*cos(a)").unwrap();
        let want = Expr::binary(
            BinOp::Sub,
            Expr::binary(BinOp::Mul, v(1), call(Func::Sin, p("a"))),
            Expr::binary(BinOp::Mul, v(3), call(Func::Cos, p("a"))),
        );
        assert_eq!(e, want);
        assert_eq!(e.params(), vec!["a".to_string()]);
    }

    #[test]
    fn parses_single_variable_and_quotient() {
        assert_eq!(parse_expr("x2").unwrap(), v(2));
        let e = parse_expr("(x1 - x3)/sqrt(2)").unwrap();
        let want = Expr::binary(
            BinOp::Div,
            Expr::binary(BinOp::Sub, v(1), v(3)),
            call(Func::Sqrt, Expr::Const(2.0)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn precedence_and_associativity() {
        // power binds tighter than unary minus
        assert_eq!(
            parse_expr("-x1^2").unwrap(),
            Expr::Neg(Box::new(Expr::Pow(Box::new(v(1)), 2)))
        );
        assert_eq!(
            parse_expr("x1 - x2 - x3").unwrap(),
            Expr::binary(BinOp::Sub, Expr::binary(BinOp::Sub, v(1), v(2)), v(3))
        );
        assert_eq!(
            parse_expr("x1 + x2 * x3").unwrap(),
            Expr::binary(BinOp::Add, v(1), Expr::binary(BinOp::Mul, v(2), v(3)))
        );
        assert_eq!(parse_expr("x1^-2").unwrap(), Expr::Pow(Box::new(v(1)), -2));
        assert_eq!(parse_expr("x1^(-2)").unwrap(), Expr::Pow(Box::new(v(1)), -2));
        assert_eq!(parse_expr("-2").unwrap(), Expr::Const(-2.0));
        assert_eq!(parse_expr("2012").unwrap(), Expr::Const(2012.0));
        assert_eq!(parse_expr("pi").unwrap(), Expr::Const(std::f64::consts::PI));
    }

    #[test]
    fn norm_takes_many_arguments() {
        let e = parse_expr("norm(x1, x2, x3, x4)").unwrap();
        assert_eq!(e, Expr::Norm(vec![v(1), v(2), v(3), v(4)]));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_expr("x1 + * x2") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("(x1"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr(""), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1^1.5"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1 x2"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("x1 # 2"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn unknown_identifiers() {
        for bad in ["X1", "x0", "tan(x1)", "a1", "sin"] {
            match parse_expr(bad) {
                Err(Error::UnknownIdentifier { .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }
}
