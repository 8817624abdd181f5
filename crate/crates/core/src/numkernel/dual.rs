//! Forward-mode differentiation scalars.
//!
//! [`Dual`] carries a value and its gradient with respect to all inputs;
//! [`Jet2`] additionally carries the Hessian. Both are propagated through
//! expression trees by the generic evaluator in `exprmap`, so a single
//! evaluation yields exact derivatives (no truncation error).
//!
//! Jet Hessians are built only from symmetric updates (`h`, `g gᵀ`,
//! `a bᵀ + b aᵀ`), so the result is symmetric bit-for-bit.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed to evaluate an expression tree.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with zero derivatives, shaped like `self`.
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    /// True when the value and every carried derivative are finite.
    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// First-order dual number with a dense gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: Vec<f64>,
}

impl Dual {
    pub fn constant(v: f64, n: usize) -> Self {
        Dual { v, g: vec![0.0; n] }
    }

    /// The `i`-th of `n` independent variables, evaluated at `v`.
    pub fn variable(v: f64, i: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[i] = 1.0;
        Dual { v, g }
    }

    fn chain(&self, f: f64, df: f64) -> Self {
        Dual {
            v: f,
            g: self.g.iter().map(|x| df * x).collect(),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            g: self
                .g
                .iter()
                .zip(&o.g)
                .map(|(a, b)| a * o.v + self.v * b)
                .collect(),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual {
            v: self.v * inv,
            g: self
                .g
                .iter()
                .zip(&o.g)
                .map(|(a, b)| (a * o.v - self.v * b) * inv * inv)
                .collect(),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            v: -self.v,
            g: self.g.iter().map(|x| -x).collect(),
        }
    }
}

impl Scalar for Dual {
    fn lift(&self, c: f64) -> Self {
        Dual::constant(c, self.g.len())
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn abs(&self) -> Self {
        self.chain(self.v.abs(), self.v.signum())
    }
    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return self.lift(1.0);
        }
        self.chain(self.v.powi(n), n as f64 * self.v.powi(n - 1))
    }
    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.g.iter().all(|x| x.is_finite())
    }
}

/// Second-order jet: value, gradient and row-major Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl Jet2 {
    pub fn constant(v: f64, n: usize) -> Self {
        Jet2 {
            v,
            g: vec![0.0; n],
            h: vec![0.0; n * n],
        }
    }

    pub fn variable(v: f64, i: usize, n: usize) -> Self {
        let mut j = Jet2::constant(v, n);
        j.g[i] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn hess(&self, a: usize, b: usize) -> f64 {
        self.h[a * self.dim() + b]
    }

    /// Applies a scalar function with derivatives `df`, `d2f` at the value.
    fn chain(&self, f: f64, df: f64, d2f: f64) -> Self {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                h[a * n + b] = df * self.h[a * n + b] + d2f * (self.g[a] * self.g[b]);
            }
        }
        Jet2 {
            v: f,
            g: self.g.iter().map(|x| df * x).collect(),
            h,
        }
    }

    fn recip(&self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a + b).collect(),
            h: self.h.iter().zip(&o.h).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v - o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a - b).collect(),
            h: self.h.iter().zip(&o.h).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let k = a * n + b;
                h[k] = (self.h[k] * o.v + self.v * o.h[k])
                    + (self.g[a] * o.g[b] + o.g[a] * self.g[b]);
            }
        }
        Jet2 {
            v: self.v * o.v,
            g: self
                .g
                .iter()
                .zip(&o.g)
                .map(|(a, b)| a * o.v + self.v * b)
                .collect(),
            h,
        }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        Jet2 {
            v: -self.v,
            g: self.g.iter().map(|x| -x).collect(),
            h: self.h.iter().map(|x| -x).collect(),
        }
    }
}

impl Scalar for Jet2 {
    fn lift(&self, c: f64) -> Self {
        Jet2::constant(c, self.dim())
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn abs(&self) -> Self {
        self.chain(self.v.abs(), self.v.signum(), 0.0)
    }
    fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return self.lift(1.0);
        }
        let nf = n as f64;
        self.chain(
            self.v.powi(n),
            nf * self.v.powi(n - 1),
            nf * (nf - 1.0) * self.v.powi(n - 2),
        )
    }
    fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.g.iter().all(|x| x.is_finite())
            && self.h.iter().all(|x| x.is_finite())
    }
}
