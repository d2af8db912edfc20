//! Scalar expressions in the plane coordinates `x`, `y`.
//!
//! User-defined wind fields are given as a pair of expression strings, one
//! per component. This module provides the parser, an evaluator that is
//! generic over [`Scalar`] (so the same tree yields values, gradients, and
//! Hessians), and symbolic differentiation used to build exact field
//! Jacobians.
//!
//! Grammar, lowest to highest precedence:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          -- right-associative
//! atom   := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | tan | exp | log | sqrt | abs
//! ```
//!
//! `log` is the natural logarithm. Numeric literals use decimal or e-notation
//! (`2`, `0.5`, `1e-3`). `^` with an integer literal exponent is evaluated by
//! repeated squaring and therefore accepts negative bases; any other exponent
//! requires a positive base.

use std::f64::consts::PI;
use std::fmt;

use crate::dual::{Dual1, Dual2, Scalar};
use crate::geometry::{Mat2, Vec2};

/// Byte range of a node or token in the source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

/// One of the two plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression tree node. Equality compares structure only, not spans, so a
/// parsed-back rendering compares equal to the original.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Coord(Var),
    Pi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

/// Parse failure: what went wrong and where (byte offset into the source).
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    /// The token at `offset` does not fit the grammar. `expected` lists the
    /// token classes that would have been accepted.
    Syntax {
        expected: Vec<&'static str>,
        found: String,
    },
    /// An identifier that is not a coordinate, `pi`, or a known function.
    UnknownIdentifier { name: String },
    /// A numeric literal that does not parse as a finite `f64`.
    InvalidNumber { text: String },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax { expected, found } => {
                write!(
                    f,
                    "syntax error at byte {}: expected {}, found {}",
                    self.offset,
                    expected.join(" or "),
                    found
                )
            }
            ParseErrorKind::UnknownIdentifier { name } => {
                write!(f, "unknown identifier `{}` at byte {}", name, self.offset)
            }
            ParseErrorKind::InvalidNumber { text } => {
                write!(f, "invalid number `{}` at byte {}", text, self.offset)
            }
        }
    }
}

impl std::error::Error for ParseError {}

/// Evaluation failure: a sub-expression hit a domain restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalError {
    pub span: Span,
    pub kind: EvalErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalErrorKind {
    DivisionByZero,
    /// `log` of a non-positive argument.
    LogDomain {
        arg: f64,
    },
    /// `sqrt` of a negative argument, or of zero while differentiating.
    SqrtDomain {
        arg: f64,
    },
    /// `^` with non-integer-literal exponent and non-positive base.
    PowDomain {
        base: f64,
    },
    /// `abs` at zero while differentiating.
    AbsZero,
    /// `abs` inside an expression being symbolically differentiated.
    AbsNotSmooth,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = format_args!("bytes {}..{}", self.span.start, self.span.end);
        match self.kind {
            EvalErrorKind::DivisionByZero => write!(f, "division by zero at {at}"),
            EvalErrorKind::LogDomain { arg } => {
                write!(f, "log of non-positive value {arg} at {at}")
            }
            EvalErrorKind::SqrtDomain { arg } => {
                write!(f, "sqrt domain error for argument {arg} at {at}")
            }
            EvalErrorKind::PowDomain { base } => write!(
                f,
                "power with non-positive base {base} and non-integer exponent at {at}"
            ),
            EvalErrorKind::AbsZero => {
                write!(f, "abs is not differentiable at zero ({at})")
            }
            EvalErrorKind::AbsNotSmooth => {
                write!(f, "abs cannot be symbolically differentiated ({at})")
            }
        }
    }
}

impl std::error::Error for EvalError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

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
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct SpannedTok {
    tok: Tok,
    span: Span,
}

fn lex(src: &str) -> Result<Vec<SpannedTok>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => toks.push(SpannedTok {
                tok: Tok::Plus,
                span: Span::new(start, start + 1),
            }),
            b'-' => toks.push(SpannedTok {
                tok: Tok::Minus,
                span: Span::new(start, start + 1),
            }),
            b'*' => toks.push(SpannedTok {
                tok: Tok::Star,
                span: Span::new(start, start + 1),
            }),
            b'/' => toks.push(SpannedTok {
                tok: Tok::Slash,
                span: Span::new(start, start + 1),
            }),
            b'^' => toks.push(SpannedTok {
                tok: Tok::Caret,
                span: Span::new(start, start + 1),
            }),
            b'(' => toks.push(SpannedTok {
                tok: Tok::LParen,
                span: Span::new(start, start + 1),
            }),
            b')' => toks.push(SpannedTok {
                tok: Tok::RParen,
                span: Span::new(start, start + 1),
            }),
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::InvalidNumber { text: text.into() },
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::InvalidNumber { text: text.into() },
                    });
                }
                toks.push(SpannedTok {
                    tok: Tok::Num(value),
                    span: Span::new(start, i),
                });
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push(SpannedTok {
                    tok: Tok::Ident(src[start..i].into()),
                    span: Span::new(start, i),
                });
                continue;
            }
            other => {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::Syntax {
                        expected: vec!["a token"],
                        found: format!("`{}`", char::from(other)),
                    },
                });
            }
        }
        i += 1;
    }
    toks.push(SpannedTok {
        tok: Tok::End,
        span: Span::new(src.len(), src.len()),
    });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<SpannedTok>,
    pos: usize,
}

const ATOM_EXPECTED: &[&str] = &["a number", "`x`", "`y`", "`pi`", "a function name", "`(`"];

impl Parser {
    fn peek(&self) -> &SpannedTok {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> &SpannedTok {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        let t = self.peek();
        ParseError {
            offset: t.span.start,
            kind: ParseErrorKind::Syntax {
                expected: expected.to_vec(),
                found: t.tok.describe(),
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => ExprKind::Add as fn(_, _) -> _,
                Tok::Minus => ExprKind::Sub as fn(_, _) -> _,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let span = Span::new(lhs.span.start, rhs.span.end);
            lhs = Expr::new(op(Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => ExprKind::Mul as fn(_, _) -> _,
                Tok::Slash => ExprKind::Div as fn(_, _) -> _,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            let span = Span::new(lhs.span.start, rhs.span.end);
            lhs = Expr::new(op(Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            let start = self.peek().span.start;
            self.bump();
            let inner = self.unary()?;
            let span = Span::new(start, inner.span.end);
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            // Right-associative; the exponent may carry its own sign.
            let exponent = self.unary()?;
            let span = Span::new(base.span.start, exponent.span.end);
            return Ok(Expr::new(
                ExprKind::Pow(Box::new(base), Box::new(exponent)),
                span,
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let span = self.peek().span;
        match self.peek().tok.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Num(v), span))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::new(ExprKind::Coord(Var::X), span)),
                    "y" => Ok(Expr::new(ExprKind::Coord(Var::Y), span)),
                    "pi" => Ok(Expr::new(ExprKind::Pi, span)),
                    other => {
                        let Some(func) = Func::from_name(other) else {
                            return Err(ParseError {
                                offset: span.start,
                                kind: ParseErrorKind::UnknownIdentifier { name },
                            });
                        };
                        if self.peek().tok != Tok::LParen {
                            return Err(self.error(&["`(`"]));
                        }
                        self.bump();
                        let arg = self.expr()?;
                        if self.peek().tok != Tok::RParen {
                            return Err(self.error(&["`)`"]));
                        }
                        let end = self.bump().span.end;
                        Ok(Expr::new(
                            ExprKind::Call(func, Box::new(arg)),
                            Span::new(span.start, end),
                        ))
                    }
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if self.peek().tok != Tok::RParen {
                    return Err(self.error(&["`)`"]));
                }
                let end = self.bump().span.end;
                Ok(Expr::new(inner.kind, Span::new(span.start, end)))
            }
            _ => Err(self.error(ATOM_EXPECTED)),
        }
    }
}

/// Parse an expression over `x`, `y`.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut parser = Parser { toks, pos: 0 };
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::End {
        return Err(parser.error(&["an operator", "end of input"]));
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// If the expression is an integer literal (possibly negated), its value.
/// Such exponents take the `powi` path, which admits negative bases.
fn const_int_exponent(e: &Expr) -> Option<i32> {
    match &e.kind {
        ExprKind::Num(v) if v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX) => Some(*v as i32),
        ExprKind::Neg(inner) => const_int_exponent(inner).map(|n| n.wrapping_neg()),
        _ => None,
    }
}

impl Expr {
    /// Evaluate at `(x, y)` over any [`Scalar`], propagating whatever
    /// derivative payload the scalar type carries.
    pub fn eval<S: Scalar>(&self, x: S, y: S) -> Result<S, EvalError> {
        let fail = |kind| {
            Err(EvalError {
                span: self.span,
                kind,
            })
        };
        match &self.kind {
            ExprKind::Num(v) => Ok(S::from_f64(*v)),
            ExprKind::Coord(Var::X) => Ok(x),
            ExprKind::Coord(Var::Y) => Ok(y),
            ExprKind::Pi => Ok(S::from_f64(PI)),
            ExprKind::Neg(e) => Ok(-e.eval(x, y)?),
            ExprKind::Add(a, b) => Ok(a.eval(x, y)? + b.eval(x, y)?),
            ExprKind::Sub(a, b) => Ok(a.eval(x, y)? - b.eval(x, y)?),
            ExprKind::Mul(a, b) => Ok(a.eval(x, y)? * b.eval(x, y)?),
            ExprKind::Div(a, b) => {
                let num = a.eval(x, y)?;
                let den = b.eval(x, y)?;
                if den.value() == 0.0 {
                    return fail(EvalErrorKind::DivisionByZero);
                }
                Ok(num / den)
            }
            ExprKind::Pow(base, exponent) => {
                let b = base.eval(x, y)?;
                if let Some(n) = const_int_exponent(exponent) {
                    if n < 0 && b.value() == 0.0 {
                        return fail(EvalErrorKind::DivisionByZero);
                    }
                    return Ok(b.powi(n));
                }
                let e = exponent.eval(x, y)?;
                if b.value() <= 0.0 {
                    return fail(EvalErrorKind::PowDomain { base: b.value() });
                }
                Ok((e * b.ln()).exp())
            }
            ExprKind::Call(func, arg) => {
                let a = arg.eval(x, y)?;
                match func {
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Tan => Ok(a.tan()),
                    Func::Exp => Ok(a.exp()),
                    Func::Log => {
                        if a.value() <= 0.0 {
                            return fail(EvalErrorKind::LogDomain { arg: a.value() });
                        }
                        Ok(a.ln())
                    }
                    Func::Sqrt => {
                        let v = a.value();
                        if v < 0.0 || (v == 0.0 && S::DIFFERENTIATING) {
                            return fail(EvalErrorKind::SqrtDomain { arg: v });
                        }
                        Ok(a.sqrt())
                    }
                    Func::Abs => {
                        if a.value() == 0.0 && S::DIFFERENTIATING {
                            return fail(EvalErrorKind::AbsZero);
                        }
                        Ok(a.abs())
                    }
                }
            }
        }
    }

    /// Plain evaluation at a point.
    pub fn eval_at(&self, p: Vec2) -> Result<f64, EvalError> {
        self.eval(p.x, p.y)
    }
}

/// How many derivative orders [`eval_dual`] should propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    Gradient,
    Hessian,
}

/// Value and derivatives of an expression at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExprJet {
    pub value: f64,
    pub gradient: Vec2,
    /// Present when [`DerivOrder::Hessian`] was requested; bitwise symmetric.
    pub hessian: Option<Mat2>,
}

/// Evaluate an expression together with its exact derivatives at `p`.
pub fn eval_dual(expr: &Expr, p: Vec2, order: DerivOrder) -> Result<ExprJet, EvalError> {
    match order {
        DerivOrder::Gradient => {
            let out = expr.eval(Dual1::<2>::variable(p.x, 0), Dual1::<2>::variable(p.y, 1))?;
            Ok(ExprJet {
                value: out.val,
                gradient: Vec2::new(out.grad[0], out.grad[1]),
                hessian: None,
            })
        }
        DerivOrder::Hessian => {
            let out = expr.eval(Dual2::<2>::variable(p.x, 0), Dual2::<2>::variable(p.y, 1))?;
            Ok(ExprJet {
                value: out.val,
                gradient: Vec2::new(out.grad[0], out.grad[1]),
                hessian: Some(Mat2 { m: out.hess }),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Symbolic differentiation
// ---------------------------------------------------------------------------

/// True when evaluation of this subtree can never hit a domain error, which
/// is what makes dropping it (e.g. `0 * e -> 0`) behavior-preserving.
fn is_total(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Num(_) | ExprKind::Coord(_) | ExprKind::Pi => true,
        ExprKind::Neg(a) => is_total(a),
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) => {
            is_total(a) && is_total(b)
        }
        ExprKind::Div(..) | ExprKind::Pow(..) => false,
        ExprKind::Call(func, a) => {
            matches!(func, Func::Sin | Func::Cos | Func::Exp | Func::Abs) && is_total(a)
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Num(v) if v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Num(v) if v == 1.0)
}

/// Smart constructors: fold out the additive and multiplicative identities
/// that the product/chain rules generate in bulk, but only where that cannot
/// change domain-error behavior.
mod build {
    use super::*;

    pub fn num(v: f64, span: Span) -> Expr {
        Expr::new(ExprKind::Num(v), span)
    }

    pub fn neg(a: Expr, span: Span) -> Expr {
        if is_zero(&a) {
            return a;
        }
        Expr::new(ExprKind::Neg(Box::new(a)), span)
    }

    pub fn add(a: Expr, b: Expr, span: Span) -> Expr {
        if is_zero(&a) {
            return b;
        }
        if is_zero(&b) {
            return a;
        }
        Expr::new(ExprKind::Add(Box::new(a), Box::new(b)), span)
    }

    pub fn sub(a: Expr, b: Expr, span: Span) -> Expr {
        if is_zero(&b) {
            return a;
        }
        if is_zero(&a) {
            return neg(b, span);
        }
        Expr::new(ExprKind::Sub(Box::new(a), Box::new(b)), span)
    }

    pub fn mul(a: Expr, b: Expr, span: Span) -> Expr {
        if (is_zero(&a) && is_total(&b)) || (is_zero(&b) && is_total(&a)) {
            return num(0.0, span);
        }
        if is_one(&a) {
            return b;
        }
        if is_one(&b) {
            return a;
        }
        Expr::new(ExprKind::Mul(Box::new(a), Box::new(b)), span)
    }

    pub fn div(a: Expr, b: Expr, span: Span) -> Expr {
        Expr::new(ExprKind::Div(Box::new(a), Box::new(b)), span)
    }

    pub fn pow(a: Expr, b: Expr, span: Span) -> Expr {
        if is_one(&b) {
            return a;
        }
        Expr::new(ExprKind::Pow(Box::new(a), Box::new(b)), span)
    }

    pub fn call(f: Func, a: Expr, span: Span) -> Expr {
        Expr::new(ExprKind::Call(f, Box::new(a)), span)
    }
}

/// Symbolic partial derivative with respect to `var`.
///
/// Fails only on `abs`, which has no smooth derivative; the error carries the
/// span of the offending call.
pub fn differentiate(expr: &Expr, var: Var) -> Result<Expr, EvalError> {
    use build::*;
    let sp = expr.span;
    let out = match &expr.kind {
        ExprKind::Num(_) | ExprKind::Pi => num(0.0, sp),
        ExprKind::Coord(v) => num(if *v == var { 1.0 } else { 0.0 }, sp),
        ExprKind::Neg(a) => neg(differentiate(a, var)?, sp),
        ExprKind::Add(a, b) => add(differentiate(a, var)?, differentiate(b, var)?, sp),
        ExprKind::Sub(a, b) => sub(differentiate(a, var)?, differentiate(b, var)?, sp),
        ExprKind::Mul(a, b) => {
            let da = differentiate(a, var)?;
            let db = differentiate(b, var)?;
            add(mul(da, (**b).clone(), sp), mul((**a).clone(), db, sp), sp)
        }
        ExprKind::Div(a, b) => {
            // (a' b - a b') / b^2
            let da = differentiate(a, var)?;
            let db = differentiate(b, var)?;
            let numer = sub(mul(da, (**b).clone(), sp), mul((**a).clone(), db, sp), sp);
            let denom = mul((**b).clone(), (**b).clone(), sp);
            div(numer, denom, sp)
        }
        ExprKind::Pow(base, exponent) => {
            let da = differentiate(base, var)?;
            if let Some(n) = const_int_exponent(exponent) {
                // n a^(n-1) a'
                let reduced = pow((**base).clone(), num(f64::from(n) - 1.0, sp), sp);
                mul(num(f64::from(n), sp), mul(reduced, da, sp), sp)
            } else {
                // a^b (b' log a + b a' / a)
                let db = differentiate(exponent, var)?;
                let log_term = mul(db, call(Func::Log, (**base).clone(), sp), sp);
                let ratio_term = mul((**exponent).clone(), div(da, (**base).clone(), sp), sp);
                mul((*expr).clone(), add(log_term, ratio_term, sp), sp)
            }
        }
        ExprKind::Call(func, a) => {
            let da = differentiate(a, var)?;
            let inner = (**a).clone();
            let outer = match func {
                Func::Sin => call(Func::Cos, inner, sp),
                Func::Cos => neg(call(Func::Sin, inner, sp), sp),
                Func::Tan => {
                    // 1 / cos(a)^2
                    let c = call(Func::Cos, inner, sp);
                    div(num(1.0, sp), mul(c.clone(), c, sp), sp)
                }
                Func::Exp => call(Func::Exp, inner, sp),
                Func::Log => div(num(1.0, sp), inner, sp),
                Func::Sqrt => div(
                    num(1.0, sp),
                    mul(num(2.0, sp), call(Func::Sqrt, inner, sp), sp),
                    sp,
                ),
                Func::Abs => {
                    return Err(EvalError {
                        span: expr.span,
                        kind: EvalErrorKind::AbsNotSmooth,
                    })
                }
            };
            mul(outer, da, sp)
        }
    };
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

impl Expr {
    /// Render to a string that parses back to a structurally equal tree.
    /// Compound nodes are fully parenthesized, so no precedence reasoning is
    /// needed to trust the round trip.
    pub fn render(&self) -> String {
        match &self.kind {
            ExprKind::Num(v) => format!("{v}"),
            ExprKind::Coord(Var::X) => "x".into(),
            ExprKind::Coord(Var::Y) => "y".into(),
            ExprKind::Pi => "pi".into(),
            ExprKind::Neg(a) => format!("(-{})", a.render()),
            ExprKind::Add(a, b) => format!("({} + {})", a.render(), b.render()),
            ExprKind::Sub(a, b) => format!("({} - {})", a.render(), b.render()),
            ExprKind::Mul(a, b) => format!("({} * {})", a.render(), b.render()),
            ExprKind::Div(a, b) => format!("({} / {})", a.render(), b.render()),
            ExprKind::Pow(a, b) => format!("({} ^ {})", a.render(), b.render()),
            ExprKind::Call(f, a) => format!("{}({})", f.name(), a.render()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
