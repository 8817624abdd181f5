use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::numkernel::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree for one coordinate function.
///
/// Variables are 1-based (`x1` is `Var(1)`). `Norm` is the Euclidean norm
/// of its arguments, `sqrt(a² + b² + …)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
    Norm(Vec<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Largest variable index used (0 when there are none).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Param(_) => 0,
            Expr::Var(i) => *i,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Norm(args) => args.iter().map(Expr::max_var).max().unwrap_or(0),
        }
    }

    /// No variables and no parameters.
    pub fn is_constant(&self) -> bool {
        self.max_var() == 0 && self.params().is_empty()
    }

    /// Syntactically affine in the variables (sufficient, not necessary:
    /// `x1*x1 - x1^2` is reported as non-affine).
    pub fn is_affine(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Param(_) => false,
            Expr::Neg(e) => e.is_affine(),
            Expr::Binary(BinOp::Add | BinOp::Sub, a, b) => a.is_affine() && b.is_affine(),
            Expr::Binary(BinOp::Mul, a, b) => {
                (a.is_constant() && b.is_affine()) || (b.is_constant() && a.is_affine())
            }
            Expr::Binary(BinOp::Div, a, b) => b.is_constant() && a.is_affine(),
            Expr::Pow(e, n) => e.is_constant() || (*n == 1 && e.is_affine()),
            Expr::Call(_, e) => e.is_constant(),
            Expr::Norm(args) => args.iter().all(Expr::is_constant),
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Expr::Norm(args) => args.iter().for_each(|a| a.collect_params(out)),
        }
    }

    /// Replaces every parameter by its bound value.
    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Expr> {
        Ok(match self {
            Expr::Param(p) => Expr::Const(
                *params
                    .get(p)
                    .ok_or_else(|| Error::UnboundParameter(p.clone()))?,
            ),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.bind(params)?)),
            Expr::Pow(e, n) => Expr::Pow(Box::new(e.bind(params)?), *n),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.bind(params)?)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.bind(params)?, b.bind(params)?),
            Expr::Norm(args) => Expr::Norm(
                args.iter()
                    .map(|a| a.bind(params))
                    .collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    /// Substitutes `Var(i)` by `replacements[i - 1]`.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        match self {
            Expr::Var(i) => replacements[*i - 1].clone(),
            Expr::Const(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(replacements))),
            Expr::Pow(e, n) => Expr::Pow(Box::new(e.substitute(replacements)), *n),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.substitute(replacements))),
            Expr::Binary(op, a, b) => {
                Expr::binary(*op, a.substitute(replacements), b.substitute(replacements))
            }
            Expr::Norm(args) => Expr::Norm(args.iter().map(|a| a.substitute(replacements)).collect()),
        }
    }

    /// The linear form `Σ coeffs[j] · x_{j+1}` (zero coefficients skipped).
    pub fn linear_form(coeffs: &[f64]) -> Expr {
        let mut acc: Option<Expr> = None;
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let term = if c == 1.0 {
                Expr::Var(j + 1)
            } else {
                Expr::binary(BinOp::Mul, Expr::Const(c), Expr::Var(j + 1))
            };
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::binary(BinOp::Add, a, term),
            });
        }
        acc.unwrap_or(Expr::Const(0.0))
    }

    /// Evaluates with `x[i-1]` standing for `x_i`. Parameters must be bound.
    ///
    /// Division by zero and square roots of negative numbers are reported
    /// as singular points rather than propagated as NaN.
    pub fn eval<S: Scalar>(&self, x: &[S]) -> std::result::Result<S, String> {
        Ok(match self {
            Expr::Const(c) => x
                .first()
                .map(|s| s.lift(*c))
                .ok_or_else(|| "expression evaluated with no inputs".to_string())?,
            Expr::Var(i) => x
                .get(*i - 1)
                .cloned()
                .ok_or_else(|| format!("variable x{i} outside the domain"))?,
            Expr::Param(p) => return Err(format!("parameter `{p}` is unbound")),
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval(x)?;
                let b = b.eval(x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err("division by zero".into());
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(e, n) => {
                let b = e.eval(x)?;
                if *n < 0 && b.value() == 0.0 {
                    return Err("negative power of zero".into());
                }
                b.powi(*n)
            }
            Expr::Call(f, e) => {
                let a = e.eval(x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt => {
                        if a.value() < 0.0 {
                            return Err("square root of a negative number".into());
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
            Expr::Norm(args) => {
                let mut acc: Option<S> = None;
                for a in args {
                    let v = a.eval(x)?;
                    let sq = v.clone() * v;
                    acc = Some(match acc {
                        None => sq,
                        Some(s) => s + sq,
                    });
                }
                acc.ok_or_else(|| "norm of no arguments".to_string())?.sqrt()
            }
        })
    }

    fn is_atom(&self) -> bool {
        match self {
            Expr::Const(c) => *c >= 0.0 && !c.is_sign_negative(),
            Expr::Var(_) | Expr::Param(_) | Expr::Call(..) | Expr::Norm(_) => true,
            _ => false,
        }
    }
}

/// Prints a fully parenthesized form that re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, n) => {
                if e.is_atom() {
                    write!(f, "{e}^{n}")
                } else {
                    write!(f, "({e})^{n}")
                }
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Norm(args) => {
                write!(f, "norm(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}
