//! Chart formulas as composition trees over a fixed primitive set.
//!
//! The primitive set (constants, the parameters `u` and `v`, sums, products,
//! integer powers, `sin`, `cos`, `exp`) is closed under jet arithmetic, so any
//! formula can be expanded to arbitrary order about any point.
//!
//! Trees serialize to JSON with an `op` tag:
//!
//! ```json
//! {"op": "scale", "factor": 0.5, "arg": {"op": "cos", "arg": {"op": "u"}}}
//! ```

use serde::{Deserialize, Serialize};

use crate::jets::Jet2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    Const { value: f64 },
    U,
    V,
    Add { args: Vec<Expr> },
    Sub { lhs: Box<Expr>, rhs: Box<Expr> },
    Mul { args: Vec<Expr> },
    Neg { arg: Box<Expr> },
    Scale { factor: f64, arg: Box<Expr> },
    Pow { arg: Box<Expr>, exponent: u32 },
    Sin { arg: Box<Expr> },
    Cos { arg: Box<Expr> },
    Exp { arg: Box<Expr> },
}

impl Expr {
    pub fn c(value: f64) -> Expr {
        Expr::Const { value }
    }

    pub fn u() -> Expr {
        Expr::U
    }

    pub fn v() -> Expr {
        Expr::V
    }

    /// `a u + b v + c`, dropping zero terms.
    pub fn linear(a: f64, b: f64, c: f64) -> Expr {
        let mut terms = Vec::new();
        if a != 0.0 {
            terms.push(if a == 1.0 { Expr::U } else { Expr::U.scale(a) });
        }
        if b != 0.0 {
            terms.push(if b == 1.0 { Expr::V } else { Expr::V.scale(b) });
        }
        if c != 0.0 || terms.is_empty() {
            terms.push(Expr::c(c));
        }
        if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add { args: terms }
        }
    }

    pub fn scale(self, factor: f64) -> Expr {
        match self {
            Expr::Const { value } => Expr::c(value * factor),
            Expr::Scale { factor: f, arg } => Expr::Scale { factor: f * factor, arg },
            other if factor == 1.0 => other,
            other => Expr::Scale { factor, arg: Box::new(other) },
        }
    }

    pub fn add(self, other: Expr) -> Expr {
        match (self, other) {
            (Expr::Const { value: a }, Expr::Const { value: b }) => Expr::c(a + b),
            (Expr::Const { value }, e) | (e, Expr::Const { value }) if value == 0.0 => e,
            (Expr::Add { mut args }, e) => {
                args.push(e);
                Expr::Add { args }
            }
            (a, b) => Expr::Add { args: vec![a, b] },
        }
    }

    pub fn sub(self, other: Expr) -> Expr {
        match other {
            Expr::Const { value } if value == 0.0 => self,
            other => Expr::Sub { lhs: Box::new(self), rhs: Box::new(other) },
        }
    }

    pub fn mul(self, other: Expr) -> Expr {
        match (self, other) {
            (Expr::Const { value: a }, Expr::Const { value: b }) => Expr::c(a * b),
            (Expr::Const { value }, e) | (e, Expr::Const { value }) => e.scale(value),
            (Expr::Mul { mut args }, e) => {
                args.push(e);
                Expr::Mul { args }
            }
            (a, b) => Expr::Mul { args: vec![a, b] },
        }
    }

    pub fn neg(self) -> Expr {
        self.scale(-1.0)
    }

    pub fn pow(self, exponent: u32) -> Expr {
        match exponent {
            0 => Expr::c(1.0),
            1 => self,
            n => Expr::Pow { arg: Box::new(self), exponent: n },
        }
    }

    pub fn sin(self) -> Expr {
        Expr::Sin { arg: Box::new(self) }
    }

    pub fn cos(self) -> Expr {
        Expr::Cos { arg: Box::new(self) }
    }

    pub fn exp(self) -> Expr {
        Expr::Exp { arg: Box::new(self) }
    }

    /// Expands the formula to total degree `order` about `(u0, v0)`.
    pub fn jet(&self, u0: f64, v0: f64, order: usize) -> Jet2 {
        match self {
            Expr::Const { value } => Jet2::constant(*value, order),
            Expr::U => Jet2::var_u(u0, order),
            Expr::V => Jet2::var_v(v0, order),
            Expr::Add { args } => {
                let mut acc = Jet2::zero(order);
                for a in args {
                    acc += &a.jet(u0, v0, order);
                }
                acc
            }
            Expr::Sub { lhs, rhs } => lhs.jet(u0, v0, order) - rhs.jet(u0, v0, order),
            Expr::Mul { args } => {
                let mut acc = Jet2::constant(1.0, order);
                for a in args {
                    acc = &acc * &a.jet(u0, v0, order);
                }
                acc
            }
            Expr::Neg { arg } => -arg.jet(u0, v0, order),
            Expr::Scale { factor, arg } => arg.jet(u0, v0, order).scale(*factor),
            Expr::Pow { arg, exponent } => arg.jet(u0, v0, order).powi(*exponent),
            Expr::Sin { arg } => arg.jet(u0, v0, order).sin(),
            Expr::Cos { arg } => arg.jet(u0, v0, order).cos(),
            Expr::Exp { arg } => arg.jet(u0, v0, order).exp(),
        }
    }

    /// Plain value at `(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        match self {
            Expr::Const { value } => *value,
            Expr::U => u,
            Expr::V => v,
            Expr::Add { args } => args.iter().map(|a| a.eval(u, v)).sum(),
            Expr::Sub { lhs, rhs } => lhs.eval(u, v) - rhs.eval(u, v),
            Expr::Mul { args } => args.iter().map(|a| a.eval(u, v)).product(),
            Expr::Neg { arg } => -arg.eval(u, v),
            Expr::Scale { factor, arg } => factor * arg.eval(u, v),
            Expr::Pow { arg, exponent } => arg.eval(u, v).powi(*exponent as i32),
            Expr::Sin { arg } => arg.eval(u, v).sin(),
            Expr::Cos { arg } => arg.eval(u, v).cos(),
            Expr::Exp { arg } => arg.eval(u, v).exp(),
        }
    }
}

/// A complex-valued formula `re + i im`, used to write holomorphic and
/// exponential charts compactly. Every operation lowers to real [`Expr`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct CExpr {
    pub re: Expr,
    pub im: Expr,
}

impl CExpr {
    pub fn new(re: Expr, im: Expr) -> Self {
        CExpr { re, im }
    }

    /// `z = u + i v`.
    pub fn z() -> Self {
        CExpr::new(Expr::U, Expr::V)
    }

    pub fn real(x: f64) -> Self {
        CExpr::new(Expr::c(x), Expr::c(0.0))
    }

    /// `e^{i (a u + b v)}`.
    pub fn unit_phase(a: f64, b: f64) -> Self {
        let phase = Expr::linear(a, b, 0.0);
        CExpr::new(phase.clone().cos(), phase.sin())
    }

    pub fn add(self, o: CExpr) -> CExpr {
        CExpr::new(self.re.add(o.re), self.im.add(o.im))
    }

    pub fn sub(self, o: CExpr) -> CExpr {
        CExpr::new(self.re.sub(o.re), self.im.sub(o.im))
    }

    pub fn mul(self, o: CExpr) -> CExpr {
        let re = self.re.clone().mul(o.re.clone()).sub(self.im.clone().mul(o.im.clone()));
        let im = self.re.mul(o.im).add(self.im.mul(o.re));
        CExpr::new(re, im)
    }

    /// Multiplication by the complex constant `a + i b`.
    pub fn scale(self, a: f64, b: f64) -> CExpr {
        let re = self.re.clone().scale(a).sub(self.im.clone().scale(b));
        let im = self.re.scale(b).add(self.im.scale(a));
        CExpr::new(re, im)
    }

    pub fn powi(self, n: u32) -> CExpr {
        let mut acc = CExpr::real(1.0);
        for _ in 0..n {
            acc = acc.mul(self.clone());
        }
        acc
    }

    pub fn exp(self) -> CExpr {
        let m = self.re.exp();
        CExpr::new(m.clone().mul(self.im.clone().cos()), m.mul(self.im.sin()))
    }

    /// `sin(x + iy) = sin x cosh y + i cos x sinh y`.
    pub fn sin(self) -> CExpr {
        let (ch, sh) = cosh_sinh(&self.im);
        CExpr::new(
            self.re.clone().sin().mul(ch),
            self.re.cos().mul(sh),
        )
    }

    /// `cos(x + iy) = cos x cosh y - i sin x sinh y`.
    pub fn cos(self) -> CExpr {
        let (ch, sh) = cosh_sinh(&self.im);
        CExpr::new(
            self.re.clone().cos().mul(ch),
            self.re.sin().mul(sh).neg(),
        )
    }
}

fn cosh_sinh(y: &Expr) -> (Expr, Expr) {
    let ep = y.clone().exp();
    let em = y.clone().neg().exp();
    (
        ep.clone().add(em.clone()).scale(0.5),
        ep.sub(em).scale(0.5),
    )
}
