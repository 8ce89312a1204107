//! Closed-form scalar fields on the chart, e.g. conformal factors `phi(x, y)`.
//!
//! Expressions are parsed once into a tree and evaluated with second-order
//! jets, so gradients and Laplacians are exact rather than stencil based.
//!
//! Grammar (usual precedence, `^` right associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x' | 'y' | 'r2' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func   := exp | ln | log | sqrt | sin | cos | tan | tanh | cosh | sinh
//! ```

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character {0:?} at byte {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unknown identifier {0:?}")]
    UnknownIdent(String),
    #[error("trailing input at byte {0}")]
    Trailing(usize),
}

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        Jet { v, ..Jet::default() }
    }

    fn var_x(x: f64) -> Jet {
        Jet { v: x, dx: 1.0, ..Jet::default() }
    }

    fn var_y(y: f64) -> Jet {
        Jet { v: y, dy: 1.0, ..Jet::default() }
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }

    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }

    fn scale(self, s: f64) -> Jet {
        Jet {
            v: self.v * s,
            dx: self.dx * s,
            dy: self.dy * s,
            dxx: self.dxx * s,
            dxy: self.dxy * s,
            dyy: self.dyy * s,
        }
    }

    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }

    /// Chain rule for `h(self)` given `h`, `h'`, `h''` at `self.v`.
    fn compose(self, h: f64, h1: f64, h2: f64) -> Jet {
        Jet {
            v: h,
            dx: h1 * self.dx,
            dy: h1 * self.dy,
            dxx: h2 * self.dx * self.dx + h1 * self.dxx,
            dxy: h2 * self.dx * self.dy + h1 * self.dxy,
            dyy: h2 * self.dy * self.dy + h1 * self.dyy,
        }
    }

    fn recip(self) -> Jet {
        let z = self.v;
        self.compose(1.0 / z, -1.0 / (z * z), 2.0 / (z * z * z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sinh,
    Cosh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn apply(self, a: Jet) -> Jet {
        let z = a.v;
        match self {
            Func::Exp => {
                let e = z.exp();
                a.compose(e, e, e)
            }
            Func::Ln => a.compose(z.ln(), 1.0 / z, -1.0 / (z * z)),
            Func::Sqrt => {
                let s = z.sqrt();
                a.compose(s, 0.5 / s, -0.25 / (s * z))
            }
            Func::Sin => a.compose(z.sin(), z.cos(), -z.sin()),
            Func::Cos => a.compose(z.cos(), -z.sin(), -z.cos()),
            Func::Tan => {
                let t = z.tan();
                let s2 = 1.0 + t * t;
                a.compose(t, s2, 2.0 * t * s2)
            }
            Func::Tanh => {
                let t = z.tanh();
                let s2 = 1.0 - t * t;
                a.compose(t, s2, -2.0 * t * s2)
            }
            Func::Sinh => a.compose(z.sinh(), z.cosh(), z.sinh()),
            Func::Cosh => a.compose(z.cosh(), z.sinh(), z.cosh()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(ExprError::Trailing(p.pos));
        }
        Ok(e)
    }

    fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::X | Expr::Y => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).v
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        match self {
            Expr::Num(v) => Jet::constant(*v),
            Expr::X => Jet::var_x(x),
            Expr::Y => Jet::var_y(y),
            Expr::Neg(a) => a.jet(x, y).scale(-1.0),
            Expr::Add(a, b) => a.jet(x, y).add(b.jet(x, y)),
            Expr::Sub(a, b) => a.jet(x, y).add(b.jet(x, y).scale(-1.0)),
            Expr::Mul(a, b) => a.jet(x, y).mul(b.jet(x, y)),
            Expr::Div(a, b) => a.jet(x, y).mul(b.jet(x, y).recip()),
            Expr::Pow(a, b) => {
                let base = a.jet(x, y);
                if b.is_constant() {
                    let c = b.eval(x, y);
                    let z = base.v;
                    if c == 0.0 {
                        return Jet::constant(1.0);
                    }
                    let h = z.powf(c);
                    let h1 = c * z.powf(c - 1.0);
                    let h2 = c * (c - 1.0) * z.powf(c - 2.0);
                    // integer exponents of zero base: avoid 0 * inf
                    let fix = |v: f64| if v.is_finite() { v } else { 0.0 };
                    base.compose(h, fix(h1), fix(h2))
                } else {
                    let e = b.jet(x, y);
                    Func::Exp.apply(e.mul(Func::Ln.apply(base)))
                }
            }
            Expr::Call(f, a) => f.apply(a.jet(x, y)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                b'-' => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                b'/' => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.peek() == Some(b'+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let c = self.peek().ok_or(ExprError::UnexpectedEnd)?;
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let func = match ident {
                "x" => return Ok(Expr::X),
                "y" => return Ok(Expr::Y),
                "r2" => {
                    let sq = |e: Expr| Expr::Mul(Box::new(e.clone()), Box::new(e));
                    return Ok(Expr::Add(Box::new(sq(Expr::X)), Box::new(sq(Expr::Y))));
                }
                "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                "e" => return Ok(Expr::Num(std::f64::consts::E)),
                "exp" => Func::Exp,
                "ln" | "log" => Func::Ln,
                "sqrt" => Func::Sqrt,
                "sin" => Func::Sin,
                "cos" => Func::Cos,
                "tan" => Func::Tan,
                "tanh" => Func::Tanh,
                "sinh" => Func::Sinh,
                "cosh" => Func::Cosh,
                other => return Err(ExprError::UnknownIdent(other.to_string())),
            };
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        Err(ExprError::UnexpectedChar(c as char, self.pos))
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src;
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < bytes.len() && (bytes[self.pos] == b'+' || bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&bytes[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ExprError::UnexpectedChar(bytes[start] as char, start))
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(ExprError::UnexpectedChar(got as char, self.pos)),
            None => Err(ExprError::UnexpectedEnd),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(src: &str, x: f64, y: f64) {
        let e = Expr::parse(src).unwrap();
        let j = e.jet(x, y);
        let h = 1e-4;
        let f = |a: f64, b: f64| e.eval(a, b);
        let dx = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
        let dy = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
        let dxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let dyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let dxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        assert!((j.dx - dx).abs() < 1e-6, "{src} dx {} vs {}", j.dx, dx);
        assert!((j.dy - dy).abs() < 1e-6, "{src} dy");
        assert!((j.dxx - dxx).abs() < 1e-4, "{src} dxx {} vs {}", j.dxx, dxx);
        assert!((j.dyy - dyy).abs() < 1e-4, "{src} dyy");
        assert!((j.dxy - dxy).abs() < 1e-4, "{src} dxy");
    }

    #[test]
    fn precedence_and_values() {
        let e = Expr::parse("1 + 2*3^2 - -4/2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 1.0 + 18.0 + 2.0);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0), 512.0);
        let e = Expr::parse("-(x^2 + y^2)/2").unwrap();
        assert!((e.eval(0.3, 0.4) + 0.125).abs() < 1e-15);
        let e = Expr::parse("1.5e-1 * r2").unwrap();
        assert!((e.eval(1.0, 1.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn jets_match_finite_differences() {
        fd_check("0.3*exp(-4*((x-0.3)^2 + y^2))", 0.2, -0.1);
        fd_check("ln(2*0.8) - ln(1 + 0.64*(x^2+y^2))", 0.5, 0.3);
        fd_check("sin(x*y) + cos(2*x) / (2 + y)", 0.4, 0.7);
        fd_check("sqrt(1 + x^2) * tanh(y) + x^y", 0.6, 0.9);
    }

    #[test]
    fn laplacian_of_quadratic_is_exact() {
        let e = Expr::parse("-(x^2 + y^2)/2").unwrap();
        assert_eq!(e.jet(0.0, 0.0).laplacian(), -2.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Expr::parse("foo(x)"), Err(ExprError::UnknownIdent(_))));
        assert!(matches!(Expr::parse("(x + 1"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("x + 1)"), Err(ExprError::Trailing(_))));
        assert!(Expr::parse("").is_err());
    }
}
