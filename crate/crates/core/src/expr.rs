//! Single-variable expressions for constraint functions and objectives.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' integer)?
//! unary  := '-' unary | atom
//! atom   := number | 'x' | '(' expr ')' | '(' expr cmp expr ')'
//!         | ident '(' expr (',' expr)* ')'
//! cmp    := '<' | '<=' | '>' | '>='
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`. Comparisons
//! evaluate to exactly `0.0` or `1.0`; `<=` and `>=` are inclusive.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Exp,
    Log,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 2,
            _ => n == 1,
        }
    }
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
}

impl fmt::Display for Expr {
    /// Fully parenthesized; re-parsing the output gives back the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X => write!(f, "x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Pow(base, n) => write!(f, "({base}^{n})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Cmp(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expr> {
        parse_expr(s)
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected '{}'", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(match self.peek() {
                Some(found) => self.error(format!("expected '{}', found '{}'", c as char, found as char)),
                None => self.error(format!("expected '{}', found end of input", c as char)),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if self.eat(b'^') {
            let n = self.integer_exponent()?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.error("exponent must be an integer literal"));
        }
        if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
            self.pos = start;
            return Err(self.error("non-integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<i32>().map_err(|_| Error::Parse {
            offset: start,
            message: format!("exponent {text} out of range"),
        })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek()? {
            b'<' => CmpOp::Lt,
            b'>' => CmpOp::Gt,
            _ => return None,
        };
        self.pos += 1;
        if self.src.get(self.pos) == Some(&b'=') {
            self.pos += 1;
            return Some(match op {
                CmpOp::Lt => CmpOp::Le,
                _ => CmpOp::Ge,
            });
        }
        Some(op)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let lhs = self.expr()?;
                if let Some(op) = self.cmp_op() {
                    let rhs = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)));
                }
                self.expect(b')')?;
                Ok(lhs)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.src.get(p.pos).is_some_and(u8::is_ascii_digit) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.error("malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let v: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("malformed number '{text}'"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                offset: start,
                message: format!("number '{text}' is not finite"),
            });
        }
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .src
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if name == "x" {
            return Ok(Expr::X);
        }
        let Some(func) = Func::from_name(name) else {
            return Err(Error::Parse {
                offset: start,
                message: format!("unknown identifier '{name}'"),
            });
        };
        self.expect(b'(')?;
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        if !func.arity_ok(args.len()) {
            return Err(Error::Parse {
                offset: start,
                message: format!("wrong number of arguments ({}) for {name}", args.len()),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

fn fault(x: f64, reason: impl Into<String>) -> Error {
    Error::EvaluationFault {
        x,
        reason: reason.into(),
    }
}

impl Expr {
    /// Evaluates at `x`; domain violations and non-finite results are faults.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.eval_raw(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fault(x, "non-finite result"))
        }
    }

    fn eval_raw(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(e) => -e.eval_raw(x)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_raw(x)?, b.eval_raw(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fault(x, "division by zero"));
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, n) => {
                let b = base.eval_raw(x)?;
                if b == 0.0 && *n < 0 {
                    return Err(fault(x, "division by zero"));
                }
                b.powi(*n)
            }
            Expr::Call(func, args) => {
                let vals = args.iter().map(|a| a.eval_raw(x)).collect::<Result<Vec<_>>>()?;
                match func {
                    Func::Abs => vals[0].abs(),
                    Func::Exp => vals[0].exp(),
                    Func::Log => {
                        if !(vals[0] > 0.0) {
                            return Err(fault(x, format!("log of nonpositive value {}", vals[0])));
                        }
                        vals[0].ln()
                    }
                    Func::Sqrt => {
                        if !(vals[0] >= 0.0) {
                            return Err(fault(x, format!("sqrt of negative value {}", vals[0])));
                        }
                        vals[0].sqrt()
                    }
                    Func::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
                    Func::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            }
            Expr::Cmp(op, a, b) => {
                if op.holds(a.eval_raw(x)?, b.eval_raw(x)?) {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }

    /// `Some((a, b))` when the expression is `a*x + b` after constant folding.
    fn affine(&self) -> Option<(f64, f64)> {
        match self {
            Expr::Num(v) => Some((0.0, *v)),
            Expr::X => Some((1.0, 0.0)),
            Expr::Neg(e) => e.affine().map(|(a, b)| (-a, -b)),
            Expr::Bin(op, l, r) => {
                let (la, lb) = l.affine()?;
                let (ra, rb) = r.affine()?;
                match op {
                    BinOp::Add => Some((la + ra, lb + rb)),
                    BinOp::Sub => Some((la - ra, lb - rb)),
                    BinOp::Mul if la == 0.0 => Some((lb * ra, lb * rb)),
                    BinOp::Mul if ra == 0.0 => Some((la * rb, lb * rb)),
                    BinOp::Div if ra == 0.0 && rb != 0.0 => Some((la / rb, lb / rb)),
                    _ => None,
                }
            }
            Expr::Pow(base, n) => {
                let (a, b) = base.affine()?;
                match (a == 0.0, *n) {
                    (_, 0) => Some((0.0, 1.0)),
                    (_, 1) => Some((a, b)),
                    (true, n) if b != 0.0 || n > 0 => Some((0.0, b.powi(n))),
                    _ => None,
                }
            }
            Expr::Call(..) | Expr::Cmp(..) => {
                if self.mentions_x() {
                    None
                } else {
                    self.eval(0.0).ok().map(|v| (0.0, v))
                }
            }
        }
    }

    pub fn mentions_x(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::X => true,
            Expr::Neg(e) | Expr::Pow(e, _) => e.mentions_x(),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) => a.mentions_x() || b.mentions_x(),
            Expr::Call(_, args) => args.iter().any(Expr::mentions_x),
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::X => {}
            Expr::Neg(e) | Expr::Pow(e, _) => e.visit(f),
            Expr::Bin(_, a, b) | Expr::Cmp(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }
}

pub fn eval_expr(e: &Expr, x: f64) -> Result<f64> {
    e.eval(x)
}

/// Jump locations of the comparison nodes in an expression.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Breakpoints {
    /// Sorted, deduplicated.
    pub points: Vec<f64>,
    /// Set when some comparison has a non-affine side, so its jumps are unknown.
    pub warning: bool,
}

pub fn collect_breakpoints(e: &Expr) -> Breakpoints {
    let mut out = Breakpoints::default();
    e.visit(&mut |node| {
        if let Expr::Cmp(_, l, r) = node {
            match (l.affine(), r.affine()) {
                (Some((la, lb)), Some((ra, rb))) => {
                    let a = la - ra;
                    let b = lb - rb;
                    if a != 0.0 {
                        let p = -b / a;
                        if p.is_finite() {
                            out.points.push(p);
                        }
                    }
                }
                _ => out.warning = true,
            }
        }
    });
    out.points.sort_by(f64::total_cmp);
    out.points.dedup();
    out
}
