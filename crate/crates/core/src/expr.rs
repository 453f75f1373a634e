//! Arithmetic expressions for warps, metric coefficients, boundary graphs and
//! trial functions, with exact first and second derivatives.
//!
//! Grammar:
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;          (* right associative *)
//! primary = number | constant | variable
//!         | function "(" expr ")" | "(" expr ")" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! constant = "pi" | "e" ;
//! variable = "t" | "x" | "rho" ;
//! function = "sin" | "cos" | "tan" | "sinh" | "cosh" | "tanh"
//!          | "exp" | "ln" | "sqrt" ;
//! ```
//!
//! `rho` stands for the distance to the boundary and cannot be combined with
//! `t` or `x` in one expression. Whitespace is ignored. `-2^2` is `-(2^2)`.

use std::fmt;

use crate::error::{Error, Result};

/// Free variable of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    // (g, g', g'') at u.
    fn jet(self, u: f64) -> (f64, f64, f64) {
        match self {
            Func::Sin => (u.sin(), u.cos(), -u.sin()),
            Func::Cos => (u.cos(), -u.sin(), -u.cos()),
            Func::Tan => {
                let t = u.tan();
                let d = 1.0 + t * t;
                (t, d, 2.0 * t * d)
            }
            Func::Sinh => (u.sinh(), u.cosh(), u.sinh()),
            Func::Cosh => (u.cosh(), u.sinh(), u.cosh()),
            Func::Tanh => {
                let t = u.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Func::Exp => {
                let e = u.exp();
                (e, e, e)
            }
            Func::Ln => (u.ln(), 1.0 / u, -1.0 / (u * u)),
            Func::Sqrt => {
                let s = u.sqrt();
                (s, 0.5 / s, -0.25 / (s * u))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Value with first and second derivative along one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub const fn variable(v: f64) -> Self {
        Self { v, d1: 1.0, d2: 0.0 }
    }

    fn chain(self, (g, g1, g2): (f64, f64, f64)) -> Self {
        Self {
            v: g,
            d1: g1 * self.d1,
            d2: g2 * self.d1 * self.d1 + g1 * self.d2,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }

    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        let q1 = (self.d1 - q * o.d1) / o.v;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v;
        Self { v: q, d1: q1, d2: q2 }
    }

    fn pow(self, o: Self) -> Self {
        if o.d1 == 0.0 && o.d2 == 0.0 {
            let c = o.v;
            if c == 0.0 {
                return Jet::constant(1.0);
            }
            if c.fract() == 0.0 && c.abs() < 1e6 {
                let k = c as i32;
                let g1 = if k == 1 { 1.0 } else { c * self.v.powi(k - 1) };
                let g2 = match k {
                    1 => 0.0,
                    2 => 2.0,
                    _ => c * (c - 1.0) * self.v.powi(k - 2),
                };
                return self.chain((self.v.powi(k), g1, g2));
            }
            let g = self.v.powf(c);
            return self.chain((g, c * self.v.powf(c - 1.0), c * (c - 1.0) * self.v.powf(c - 2.0)));
        }
        let log = self.chain(Func::Ln.jet(self.v));
        o.mul(log).chain(Func::Exp.jet(o.v * self.v.ln()))
    }
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
    uses: [bool; 3],
}

fn var_index(v: Var) -> usize {
    match v {
        Var::T => 0,
        Var::X => 1,
        Var::Rho => 2,
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser {
            src: source.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        let mut uses = [false; 3];
        collect_vars(&root, &mut uses);
        if uses[2] && (uses[0] || uses[1]) {
            return Err(Error::Expression {
                pos: 0,
                msg: "`rho` cannot be mixed with `t` or `x`".into(),
            });
        }
        Ok(Self {
            source: source.to_string(),
            root,
            uses,
        })
    }

    /// Parses and evaluates an expression that must not contain variables.
    pub fn constant(source: &str) -> Result<f64> {
        let e = Self::parse(source)?;
        if e.uses.iter().any(|u| *u) {
            return Err(Error::Expression {
                pos: 0,
                msg: format!("`{source}` must be a constant"),
            });
        }
        Ok(e.eval(0.0, 0.0))
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn uses(&self, v: Var) -> bool {
        self.uses[var_index(v)]
    }

    pub fn is_radial(&self) -> bool {
        self.uses(Var::Rho)
    }

    /// Value at `(t, x)`; a `rho` expression reads its argument from `t`.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        eval_node(&self.root, t, x)
    }

    /// Jet along `wrt` at `(t, x)`, the other variable held fixed.
    /// `Var::Rho` and `Var::T` both differentiate in the first slot.
    pub fn jet(&self, t: f64, x: f64, wrt: Var) -> Jet {
        let (jt, jx) = match wrt {
            Var::T | Var::Rho => (Jet::variable(t), Jet::constant(x)),
            Var::X => (Jet::constant(t), Jet::variable(x)),
        };
        jet_node(&self.root, jt, jx)
    }

    /// `(value, d/dt)` and `d/dx` at `(t, x)`.
    pub fn gradient(&self, t: f64, x: f64) -> (f64, f64, f64) {
        let jt = self.jet(t, x, Var::T);
        let dx = if self.uses(Var::X) { self.jet(t, x, Var::X).d1 } else { 0.0 };
        (jt.v, jt.d1, dx)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn collect_vars(n: &Node, uses: &mut [bool; 3]) {
    match n {
        Node::Const(_) => {}
        Node::Var(v) => uses[var_index(*v)] = true,
        Node::Neg(a) | Node::Call(_, a) => collect_vars(a, uses),
        Node::Bin(_, a, b) => {
            collect_vars(a, uses);
            collect_vars(b, uses);
        }
    }
}

fn eval_node(n: &Node, t: f64, x: f64) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(Var::T) | Node::Var(Var::Rho) => t,
        Node::Var(Var::X) => x,
        Node::Neg(a) => -eval_node(a, t, x),
        Node::Call(f, a) => f.jet(eval_node(a, t, x)).0,
        Node::Bin(op, a, b) => {
            let (a, b) = (eval_node(a, t, x), eval_node(b, t, x));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow if b.fract() == 0.0 && b.abs() < 1e6 => a.powi(b as i32),
                BinOp::Pow => a.powf(b),
            }
        }
    }
}

fn jet_node(n: &Node, jt: Jet, jx: Jet) -> Jet {
    match n {
        Node::Const(c) => Jet::constant(*c),
        Node::Var(Var::T) | Node::Var(Var::Rho) => jt,
        Node::Var(Var::X) => jx,
        Node::Neg(a) => {
            let a = jet_node(a, jt, jx);
            Jet {
                v: -a.v,
                d1: -a.d1,
                d2: -a.d2,
            }
        }
        Node::Call(f, a) => {
            let a = jet_node(a, jt, jx);
            a.chain(f.jet(a.v))
        }
        Node::Bin(op, a, b) => {
            let (a, b) = (jet_node(a, jt, jx), jet_node(b, jt, jx));
            match op {
                BinOp::Add => a.add(b),
                BinOp::Sub => a.sub(b),
                BinOp::Mul => a.mul(b),
                BinOp::Div => a.div(b),
                BinOp::Pow => a.pow(b),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Expression {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Node::Const).map_err(|_| Error::Expression {
            pos: start,
            msg: format!("invalid number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "t" => return Ok(Node::Var(Var::T)),
            "x" => return Ok(Node::Var(Var::X)),
            "rho" => return Ok(Node::Var(Var::Rho)),
            "pi" => return Ok(Node::Const(std::f64::consts::PI)),
            "e" => return Ok(Node::Const(std::f64::consts::E)),
            _ => {}
        }
        let func = Func::from_name(name).ok_or_else(|| Error::Expression {
            pos: start,
            msg: format!("unknown identifier `{name}`"),
        })?;
        if self.peek() != Some(b'(') {
            return Err(self.error(&format!("expected `(` after `{name}`")));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.error("expected `)`"));
        }
        self.pos += 1;
        Ok(Node::Call(func, Box::new(arg)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ev(s: &str, t: f64) -> f64 {
        Expr::parse(s).unwrap().eval(t, 0.0)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("(1 - t) / 2", 0.5), 0.25);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("1e-3 * 2", 0.0), 2e-3);
    }

    #[test]
    fn constants_and_functions() {
        assert_relative_eq!(Expr::constant("2*pi").unwrap(), 2.0 * std::f64::consts::PI);
        assert_relative_eq!(ev("exp(1) - e", 0.0), 0.0);
        assert_relative_eq!(ev("sqrt(t) * ln(t)", 4.0), 2.0 * 4f64.ln());
        assert!(Expr::constant("t").is_err());
    }

    #[test]
    fn errors_carry_position() {
        match Expr::parse("1 + foo(t)") {
            Err(Error::Expression { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(1 + t").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("rho * t").is_err());
    }

    #[test]
    fn variables_recorded() {
        let e = Expr::parse("(1+t)^2 + 0*x").unwrap();
        assert!(e.uses(Var::T) && e.uses(Var::X) && !e.is_radial());
        assert!(Expr::parse("rho*exp(rho/2)").unwrap().is_radial());
    }

    #[test]
    fn negative_base_integer_power() {
        let j = Expr::parse("(t - 2)^3").unwrap().jet(0.0, 0.0, Var::T);
        assert_eq!((j.v, j.d1, j.d2), (-8.0, 12.0, -12.0));
    }

    #[test]
    fn jets_of_known_functions() {
        let j = Expr::parse("exp(-t)*(1 + 0.1*exp(-t))").unwrap().jet(0.3, 0.0, Var::T);
        let e = (-0.3f64).exp();
        assert_relative_eq!(j.v, e + 0.1 * e * e, max_relative = 1e-15);
        assert_relative_eq!(j.d1, -e - 0.2 * e * e, max_relative = 1e-15);
        assert_relative_eq!(j.d2, e + 0.4 * e * e, max_relative = 1e-15);
        let g = Expr::parse("0.2*sin(x)").unwrap().jet(0.0, 1.1, Var::X);
        assert_relative_eq!(g.d2, -0.2 * 1.1f64.sin(), max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn jet_matches_finite_differences(t in 0.2f64..2.0, x in -3.0f64..3.0) {
            let e = Expr::parse("t^2.5 * cosh(x*t) / (2 + sin(t)) + tanh(t)^t + tan(0.3*t)").unwrap();
            let h = 1e-4;
            let j = e.jet(t, x, Var::T);
            let fd1 = (e.eval(t + h, x) - e.eval(t - h, x)) / (2.0 * h);
            let fd2 = (e.eval(t + h, x) - 2.0 * e.eval(t, x) + e.eval(t - h, x)) / (h * h);
            prop_assert!((j.d1 - fd1).abs() <= 1e-6 * (1.0 + j.d1.abs()));
            prop_assert!((j.d2 - fd2).abs() <= 1e-4 * (1.0 + j.d2.abs()));
            let jx = e.jet(t, x, Var::X);
            let fdx = (e.eval(t, x + h) - e.eval(t, x - h)) / (2.0 * h);
            prop_assert!((jx.d1 - fdx).abs() <= 1e-6 * (1.0 + jx.d1.abs()));
        }
    }
}
