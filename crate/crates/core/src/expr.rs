//! Arithmetic expressions in `x` and `y` for analytic density fields.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'y' | '(' expr ')'
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so
//! `-x^2 == -(x^2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{FieldKind, GridSpec, ScalarField2D};
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser {
            src: text,
            bytes: text.as_bytes(),
            pos: 0,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.bytes.len() {
            return Err(p.error("unexpected input"));
        }
        Ok(Expr {
            source: text.to_string(),
            root,
        })
    }

    pub fn eval(&self, p: Point2) -> f64 {
        eval(&self.root, p)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Sample at every node of `spec`.
    pub fn rasterize(&self, spec: GridSpec, kind: FieldKind) -> Result<ScalarField2D> {
        ScalarField2D::from_fn(spec, kind, |p| self.eval(p))
            .map_err(|e| e.context(format!("expression `{}`", self.source)))
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(node: &Node, p: Point2) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::X => p.x,
        Node::Y => p.y,
        Node::Neg(a) => -eval(a, p),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, p), eval(b, p));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                // Squares are exact products on every platform; powf is not.
                Op::Pow if b == 2.0 => a * a,
                Op::Pow => a.powf(b),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Parameter(format!(
            "density expression `{}`: {what} at column {}",
            self.src,
            self.pos + 1
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let op = if c == b'+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let op = if c == b'*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
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
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'x') => {
                self.pos += 1;
                Ok(Node::X)
            }
            Some(b'y') => {
                self.pos += 1;
                Ok(Node::Y)
            }
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
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error("malformed number")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(text: &str, x: f64, y: f64) -> f64 {
        Expr::parse(text).unwrap().eval(Point2::new(x, y))
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(at("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(at("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(at("10 - 4 - 3", 0.0, 0.0), 3.0);
        assert_eq!(at("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(at("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(at("(-x)^2", 3.0, 0.0), 9.0);
        assert_eq!(at("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(at("--y", 0.0, 4.0), 4.0);
    }

    #[test]
    fn density_polynomials() {
        assert_eq!(at("3e-5*x^2 + 0.01", 20.0, 7.0), 3e-5 * 400.0 + 0.01);
        assert_eq!(at("0.5E-4 * x ^ 2 + 0.025", -10.0, 0.0), 0.5e-4 * 100.0 + 0.025);
        assert_eq!(at(".5*y", 0.0, 3.0), 1.5);
        assert_eq!(at("x*y - 2", 2.0, 5.0), 8.0);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "1 +", "(x", "x y", "2 ** 3", "z", "1e", "3 $ 4", ")"] {
            let err = Expr::parse(bad).unwrap_err();
            assert!(err.to_string().contains("density expression"), "{bad}: {err}");
        }
    }

    #[test]
    fn rasterized_field_matches_pointwise() {
        let spec = GridSpec::from_extent(-10.0, 10.0, 0.0, 5.0, 0.5).unwrap();
        let e = Expr::parse("3e-5*x^2+0.01").unwrap();
        let f = e.rasterize(spec, FieldKind::Density).unwrap();
        assert_eq!(f.at(0, 3), 3e-5 * 100.0 + 0.01);
        let negative = Expr::parse("x").unwrap();
        assert!(negative.rasterize(spec, FieldKind::Density).is_err());
    }
}
