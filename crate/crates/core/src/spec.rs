//! Text format for Lévy measures in polar form, and the closed-form density
//! expressions embedded in it.
//!
//! ```text
//! {
//!   d: 1,
//!   dirs: [[1]],
//!   radial: [
//!     {atoms: [[1, 1]],
//!      density: {expr: "(pi/4)*x^(-1/2)*exp(-sqrt(x))", support: (0, inf),
//!                left_exp: -0.5, decay: exp(1, 0.5)}}
//!   ]
//! }
//! ```

use std::collections::BTreeSet;
use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::{Arc, LazyLock};

use pest::error::{ErrorVariant, InputLocation};
use pest::iterators::{Pair, Pairs};
use pest::pratt_parser::{Assoc, Op, PrattParser};
use pest::Parser;
use pest_derive::Parser;
use serde::{Deserialize, Serialize};

use crate::error::{LevyError, Result};
use crate::quadrature::Decay;
use crate::radial::{Atom, PolarLevyMeasure, RadialDensity, RadialMeasure};
use crate::special::k0;

#[derive(Parser)]
#[grammar = "spec.pest"]
struct SpecParser;

static PRATT: LazyLock<PrattParser<Rule>> = LazyLock::new(|| {
    PrattParser::new()
        .op(Op::infix(Rule::add, Assoc::Left) | Op::infix(Rule::sub, Assoc::Left))
        .op(Op::infix(Rule::mul, Assoc::Left) | Op::infix(Rule::div, Assoc::Left))
        .op(Op::prefix(Rule::neg))
        .op(Op::infix(Rule::pow, Assoc::Right))
});

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Cos,
    Arccos,
    K0,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Exp, Func::Log, Func::Sqrt, Func::Cos, Func::Arccos, Func::K0];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cos => "cos",
            Func::Arccos => "arccos",
            Func::K0 => "K0",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Cos => x.cos(),
            Func::Arccos => x.acos(),
            Func::K0 if x > 0.0 => k0(x),
            Func::K0 if x == 0.0 => f64::INFINITY,
            Func::K0 => f64::NAN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

/// Closed-form expression in the single variable `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

pub type Compiled = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        parse_expression(src, src, 0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Const(Constant::Pi) => PI,
            Expr::Const(Constant::E) => E,
            Expr::Neg(a) => -a.eval(x),
            Expr::Binary(op, a, b) => binary(*op, a.eval(x), b.eval(x)),
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Closure tree with constant subexpressions folded.
    pub fn compile(&self) -> Compiled {
        if !self.depends_on_x() {
            let v = self.eval(f64::NAN);
            return Arc::new(move |_| v);
        }
        match self {
            Expr::Var => Arc::new(|x| x),
            Expr::Neg(a) => {
                let a = a.compile();
                Arc::new(move |x| -a(x))
            }
            Expr::Binary(op, a, b) => {
                let (op, a, b) = (*op, a.compile(), b.compile());
                Arc::new(move |x| binary(op, a(x), b(x)))
            }
            Expr::Call(f, a) => {
                let (f, a) = (*f, a.compile());
                Arc::new(move |x| f.apply(a(x)))
            }
            Expr::Num(_) | Expr::Const(_) => unreachable!("constants are folded"),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Var => true,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_x(),
            Expr::Binary(_, a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Num(v) if *v < 0.0 || v.is_sign_negative() => NEG_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let parens = self.precedence() < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => write_number(f, *v)?,
            Expr::Var => f.write_str("x")?,
            Expr::Const(Constant::Pi) => f.write_str("pi")?,
            Expr::Const(Constant::E) => f.write_str("e")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write(f, NEG_PRECEDENCE)?;
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (lmin, rmin) = if *op == BinOp::Pow { (p + 1, p) } else { (p, p + 1) };
                a.write(f, lmin)?;
                if *op == BinOp::Pow {
                    f.write_str("^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                b.write(f, rmin)?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, 0)?;
                f.write_str(")")?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn binary(op: BinOp, a: f64, b: f64) -> f64 {
    match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
        BinOp::Pow => a.powf(b),
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_nan() {
        f.write_str("nan")
    } else if v.is_sign_negative() {
        f.write_str("-")?;
        write_number(f, -v)
    } else if v.is_infinite() {
        f.write_str("inf")
    } else if v.fract() == 0.0 && v < 1e15 {
        write!(f, "{v}")
    } else {
        // Shortest representation that reads back to the same float.
        write!(f, "{v:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = LevyError;

    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

/// One density segment of a radial spec. Missing exponents and decay are
/// estimated from the expression when the measure is built.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySpec {
    pub expr: Expr,
    pub support: (f64, f64),
    pub left_exp: Option<f64>,
    pub right_exp: Option<f64>,
    pub decay: Option<Decay>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadialSpec {
    pub atoms: Vec<(f64, f64)>,
    pub densities: Vec<DensitySpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpec {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub radial: Vec<RadialSpec>,
}

/// Parse and validate a measure specification.
pub fn parse_measure_spec(text: &str) -> Result<MeasureSpec> {
    let spec = MeasureSpec::parse_unchecked(text)?;
    spec.to_measure()?;
    Ok(spec)
}

impl MeasureSpec {
    /// Syntax only: no check that the spec describes a valid measure.
    pub fn parse_unchecked(text: &str) -> Result<MeasureSpec> {
        pest::set_error_detail(true);
        let mut pairs = SpecParser::parse(Rule::document, text).map_err(|e| pest_error(text, e))?;
        let doc = pairs.next().expect("document");
        let root = doc.into_inner().next().expect("object");
        let value = Node::build(root)?;
        Reader { text }.measure(&value)
    }

    pub fn to_measure(&self) -> Result<PolarLevyMeasure> {
        let radial = self.radial.iter().map(RadialSpec::to_measure).collect::<Result<Vec<_>>>()?;
        PolarLevyMeasure::new(self.dim, self.directions.clone(), self.weights.clone(), radial)
    }

    /// Spec with one direction in dimension one.
    pub fn on_line(radial: RadialSpec) -> MeasureSpec {
        MeasureSpec {
            dim: 1,
            directions: vec![vec![1.0]],
            weights: None,
            radial: vec![radial],
        }
    }
}

impl RadialSpec {
    pub fn to_measure(&self) -> Result<RadialMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|&(location, mass)| Atom { location, mass })
            .collect();
        let parts = self.densities.iter().map(DensitySpec::to_density).collect::<Result<Vec<_>>>()?;
        RadialMeasure::new(atoms, parts)
    }
}

impl DensitySpec {
    pub fn new(expr: Expr, support: (f64, f64)) -> Self {
        Self {
            expr,
            support,
            left_exp: None,
            right_exp: None,
            decay: None,
        }
    }

    pub fn to_density(&self) -> Result<RadialDensity> {
        let (a, b) = self.support;
        if !(a >= 0.0 && a < b) {
            return Err(LevyError::Validation(format!("support ({a}, {b}) is not an interval in [0, inf]")));
        }
        let f = self.expr.compile();
        for x in probe_grid(a, b) {
            let v = f(x);
            if v.is_nan() || v < 0.0 {
                return Err(LevyError::Validation(format!(
                    "density `{}` is {v} at x = {x}; densities must be nonnegative",
                    self.expr
                )));
            }
        }
        let decay = match (self.decay, b.is_finite()) {
            (Some(d), _) => d,
            (None, true) => Decay::Compact,
            (None, false) => infer_decay(&*f, a),
        };
        let left = self.left_exp.unwrap_or_else(|| endpoint_exponent(&*f, a, (b - a).min(1.0), 1.0));
        let right = match self.right_exp {
            Some(e) => e,
            None if b.is_finite() => endpoint_exponent(&*f, b, (b - a).min(1.0), -1.0),
            None => 0.0,
        };
        let g = f.clone();
        Ok(
            RadialDensity::new(a, b, decay, move |x| g(x))?
                .with_left_exponent(left)
                .with_right_exponent(right)
                .with_label(self.expr.to_string()),
        )
    }
}

fn probe_grid(a: f64, b: f64) -> Vec<f64> {
    let width = if b.is_finite() { b - a } else { 1.0 + a };
    let mut pts: Vec<f64> = (1..64).map(|i| a + width * f64::from(i) / 64.0).collect();
    if b.is_infinite() {
        pts.extend((1..=12).map(|k| a + width * 2f64.powi(k)));
    }
    pts
}

/// Power-law exponent of `f` at `end`, approached from the side `dir`.
fn endpoint_exponent(f: &dyn Fn(f64) -> f64, end: f64, scale: f64, dir: f64) -> f64 {
    let (d1, d2) = (1e-6 * scale, 1e-8 * scale);
    let (f1, f2) = (f(end + dir * d1), f(end + dir * d2));
    if !(f1 > 0.0 && f2 > 0.0 && f1.is_finite() && f2.is_finite()) {
        return 0.0;
    }
    let e = (f1 / f2).ln() / (d1 / d2).ln();
    (e * 20.0).round() / 20.0
}

/// Tail behaviour of `f` read off a geometric probe: algebraic when the local
/// log-log slope is stable, otherwise `exp(-rate x^power)` with a rate
/// shaded down so panels are never sized too small.
fn infer_decay(f: &dyn Fn(f64) -> f64, a: f64) -> Decay {
    let base = a.max(1.0);
    let usable = |x: f64| {
        let v = f(x);
        v > 1e-280 && v.is_finite()
    };
    let mut x = base;
    for _ in 0..5 {
        if !usable(16.0 * x * 4.0) {
            break;
        }
        x *= 4.0;
    }
    let xs = [x, 4.0 * x, 16.0 * x];
    if !xs.iter().all(|&x| usable(x)) {
        return Decay::Exponential { rate: 1.0, power: 2.0 };
    }
    let l: Vec<f64> = xs.iter().map(|&x| -f(x).ln()).collect();
    let ln4 = 4f64.ln();
    let (b1, b2) = (-(l[1] - l[0]) / ln4, -(l[2] - l[1]) / ln4);
    if (b2 - b1).abs() <= 0.05 * b2.abs().max(1.0) {
        return Decay::Polynomial((b2 * 20.0).round() / 20.0);
    }
    let (d1, d2) = (l[1] - l[0], l[2] - l[1]);
    if !(d1 > 0.0 && d2 > d1 * 0.5) {
        return Decay::Polynomial(b2.min(-1.0));
    }
    let power = ((d2 / d1).ln() / ln4 * 4.0).round().clamp(1.0, 16.0) / 4.0;
    let rate = 0.9 * d2 / (xs[2].powf(power) - xs[1].powf(power));
    if rate > 0.0 && rate.is_finite() {
        Decay::Exponential { rate, power }
    } else {
        Decay::Polynomial(b2.min(-1.0))
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{{")?;
        writeln!(f, "  d: {},", self.dim)?;
        write!(f, "  dirs: [")?;
        for (i, xi) in self.directions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_list(f, xi)?;
        }
        writeln!(f, "],")?;
        if let Some(w) = &self.weights {
            f.write_str("  weights: ")?;
            write_list(f, w)?;
            writeln!(f, ",")?;
        }
        writeln!(f, "  radial: [")?;
        for (i, r) in self.radial.iter().enumerate() {
            write!(f, "    {r}")?;
            writeln!(f, "{}", if i + 1 < self.radial.len() { "," } else { "" })?;
        }
        writeln!(f, "  ]")?;
        write!(f, "}}")
    }
}

impl fmt::Display for RadialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut sep = "";
        if !self.atoms.is_empty() {
            f.write_str("atoms: [")?;
            for (i, &(s, w)) in self.atoms.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_list(f, &[s, w])?;
            }
            f.write_str("]")?;
            sep = ", ";
        }
        if !self.densities.is_empty() {
            write!(f, "{sep}density: [")?;
            for (i, d) in self.densities.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{d}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{expr: \"{}\", support: (", self.expr)?;
        write_number(f, self.support.0)?;
        f.write_str(", ")?;
        write_number(f, self.support.1)?;
        f.write_str(")")?;
        if let Some(e) = self.left_exp {
            f.write_str(", left_exp: ")?;
            write_number(f, e)?;
        }
        if let Some(e) = self.right_exp {
            f.write_str(", right_exp: ")?;
            write_number(f, e)?;
        }
        if let Some(d) = self.decay {
            f.write_str(", decay: ")?;
            write_decay(f, d)?;
        }
        f.write_str("}")
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[f64]) -> fmt::Result {
    f.write_str("[")?;
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_number(f, x)?;
    }
    f.write_str("]")
}

fn write_decay(f: &mut fmt::Formatter<'_>, d: Decay) -> fmt::Result {
    match d {
        Decay::Compact => f.write_str("compact"),
        Decay::Polynomial(b) => {
            f.write_str("poly(")?;
            write_number(f, b)?;
            f.write_str(")")
        }
        Decay::Exponential { rate, power } => {
            f.write_str("exp(")?;
            write_number(f, rate)?;
            f.write_str(", ")?;
            write_number(f, power)?;
            f.write_str(")")
        }
    }
}

// ---------------------------------------------------------------------------
// Diagnostics

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, before[start..].chars().count() + 1)
}

fn error_at(text: &str, offset: usize, message: impl Into<String>) -> LevyError {
    let (line, column) = line_col(text, offset);
    LevyError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn rule_name(r: &Rule) -> String {
    match r {
        Rule::EOI => "end of input",
        Rule::object | Rule::document => "`{`",
        Rule::pair | Rule::key => "a key",
        Rule::value => "a value",
        Rule::array => "`[`",
        Rule::tuple => "`(`",
        Rule::call => "a call",
        Rule::string => "a string",
        Rule::number | Rule::unsigned => "a number",
        Rule::word => "a name",
        Rule::expr | Rule::expression | Rule::apply => "an operand",
        Rule::add | Rule::sub | Rule::mul | Rule::div | Rule::pow => "an operator",
        Rule::neg => "`-`",
        _ => "a token",
    }
    .to_string()
}

fn pest_error(text: &str, e: pest::error::Error<Rule>) -> LevyError {
    let offset = match e.location {
        InputLocation::Pos(p) => p,
        InputLocation::Span((p, _)) => p,
    };
    // Literal tokens are only tracked in the detailed attempts; they reach
    // further than the rule-level failure when a separator is missing.
    if let Some(attempts) = e.parse_attempts().filter(|a| a.max_position > offset) {
        let tokens: BTreeSet<String> = attempts
            .expected_tokens()
            .iter()
            .map(|t| t.to_string())
            .filter(|t| !t.trim().is_empty() && t != "#")
            .map(|t| format!("`{t}`"))
            .collect();
        if !tokens.is_empty() {
            let tokens: Vec<String> = tokens.into_iter().collect();
            return error_at(text, attempts.max_position, format!("expected one of {}", tokens.join(", ")));
        }
    }
    let message = match &e.variant {
        ErrorVariant::ParsingError { positives, .. } => {
            let names: BTreeSet<String> = positives.iter().map(rule_name).collect();
            let names: Vec<String> = names.into_iter().collect();
            match names.len() {
                0 => "unexpected input".to_string(),
                1 => format!("expected {}", names[0]),
                _ => format!("expected one of {}", names.join(", ")),
            }
        }
        ErrorVariant::CustomError { message } => message.clone(),
    };
    error_at(text, offset, message)
}

/// Parse an expression whose source sits at byte `base` of `text`.
fn parse_expression(src: &str, text: &str, base: usize) -> Result<Expr> {
    pest::set_error_detail(true);
    let pairs = SpecParser::parse(Rule::expression, src).map_err(|e| {
        let offset = match e.location {
            InputLocation::Pos(p) | InputLocation::Span((p, _)) => p,
        };
        // A binary operator with nothing after it is reported at the operator.
        let trimmed = src[..offset.min(src.len())].trim_end();
        if let Some(op) = trimmed.chars().last().filter(|c| "+-*/^".contains(*c)) {
            let rest = src[offset.min(src.len())..].trim_start();
            if rest.is_empty() || rest.starts_with(')') {
                return error_at(text, base + trimmed.len() - 1, format!("operator `{op}` is missing its right operand"));
            }
        }
        let mut err = pest_error(src, e);
        if let LevyError::Parse { line, column, .. } = &mut err {
            let (l, c) = line_col(text, base + offset);
            (*line, *column) = (l, c);
        }
        err
    })?;
    let expr = pairs.into_iter().next().expect("expression").into_inner().next().expect("expr");
    build_expr(expr.into_inner(), text, base)
}

fn build_expr(pairs: Pairs<'_, Rule>, text: &str, base: usize) -> Result<Expr> {
    PRATT
        .map_primary(|p| build_primary(p, text, base))
        .map_prefix(|_, rhs| Ok(Expr::Neg(Box::new(rhs?))))
        .map_infix(|lhs, op, rhs| {
            let op = match op.as_rule() {
                Rule::add => BinOp::Add,
                Rule::sub => BinOp::Sub,
                Rule::mul => BinOp::Mul,
                Rule::div => BinOp::Div,
                Rule::pow => BinOp::Pow,
                r => unreachable!("infix {r:?}"),
            };
            Ok(Expr::Binary(op, Box::new(lhs?), Box::new(rhs?)))
        })
        .parse(pairs)
}

fn build_primary(p: Pair<'_, Rule>, text: &str, base: usize) -> Result<Expr> {
    let at = base + p.as_span().start();
    match p.as_rule() {
        Rule::unsigned => p
            .as_str()
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|e| error_at(text, at, format!("bad number: {e}"))),
        Rule::word => match p.as_str() {
            "x" => Ok(Expr::Var),
            "pi" => Ok(Expr::Const(Constant::Pi)),
            "e" => Ok(Expr::Const(Constant::E)),
            w if Func::from_name(w).is_some() => Err(error_at(text, at, format!("function `{w}` needs an argument"))),
            w => Err(error_at(
                text,
                at,
                format!("unknown identifier `{w}`; only x, pi and e are allowed"),
            )),
        },
        Rule::apply => {
            let mut inner = p.into_inner();
            let name = inner.next().expect("name");
            let func = Func::from_name(name.as_str()).ok_or_else(|| {
                error_at(
                    text,
                    at,
                    format!(
                        "unknown function `{}`; expected one of exp, log, sqrt, cos, arccos, K0",
                        name.as_str()
                    ),
                )
            })?;
            let arg = build_expr(inner.next().expect("argument").into_inner(), text, base)?;
            Ok(Expr::Call(func, Box::new(arg)))
        }
        Rule::expr => build_expr(p.into_inner(), text, base),
        r => unreachable!("primary {r:?}"),
    }
}

// ---------------------------------------------------------------------------
// Generic value tree and its interpretation.

#[derive(Debug)]
enum Value {
    Object(Vec<(String, usize, Node)>),
    Array(Vec<Node>),
    Tuple(Vec<Node>),
    Call(String, Vec<Node>),
    Str(String),
    Num(f64),
    Word(String),
}

#[derive(Debug)]
struct Node {
    at: usize,
    value: Value,
}

impl Node {
    fn build(p: Pair<'_, Rule>) -> Result<Node> {
        let at = p.as_span().start();
        let value = match p.as_rule() {
            Rule::value => return Node::build(p.into_inner().next().expect("value")),
            Rule::object => {
                let mut fields = Vec::new();
                for pair in p.into_inner() {
                    let mut it = pair.into_inner();
                    let key = it.next().expect("key");
                    let key_at = key.as_span().start();
                    let k = key.into_inner().next().expect("key body");
                    let name = match k.as_rule() {
                        Rule::string => unescape(k.into_inner().next().map_or("", |c| c.as_str())),
                        _ => k.as_str().to_string(),
                    };
                    fields.push((name, key_at, Node::build(it.next().expect("value"))?));
                }
                Value::Object(fields)
            }
            Rule::array => Value::Array(p.into_inner().map(Node::build).collect::<Result<_>>()?),
            Rule::tuple => Value::Tuple(p.into_inner().map(Node::build).collect::<Result<_>>()?),
            Rule::call => {
                let mut it = p.into_inner();
                let name = it.next().expect("name").as_str().to_string();
                Value::Call(name, it.map(Node::build).collect::<Result<_>>()?)
            }
            Rule::string => Value::Str(unescape(p.into_inner().next().map_or("", |c| c.as_str()))),
            Rule::number => {
                let s = p.as_str();
                let v = match s.trim_start_matches(['+', '-']).to_ascii_lowercase().as_str() {
                    "inf" if s.starts_with('-') => f64::NEG_INFINITY,
                    "inf" => f64::INFINITY,
                    _ => s.parse::<f64>().unwrap_or(f64::NAN),
                };
                Value::Num(v)
            }
            Rule::word => Value::Word(p.as_str().to_string()),
            r => unreachable!("value {r:?}"),
        };
        Ok(Node { at, value })
    }

    fn kind(&self) -> &'static str {
        match self.value {
            Value::Object(_) => "an object",
            Value::Array(_) => "a list",
            Value::Tuple(_) => "a tuple",
            Value::Call(..) => "a call",
            Value::Str(_) => "a string",
            Value::Num(_) => "a number",
            Value::Word(_) => "a name",
        }
    }
}

fn unescape(s: &str) -> String {
    s.replace("\\\"", "\"").replace("\\\\", "\\")
}

struct Reader<'t> {
    text: &'t str,
}

type Fields<'n> = &'n [(String, usize, Node)];

impl Reader<'_> {
    fn err(&self, at: usize, msg: impl Into<String>) -> LevyError {
        error_at(self.text, at, msg)
    }

    fn object<'n>(&self, n: &'n Node, allowed: &[&str]) -> Result<Fields<'n>> {
        let Value::Object(fields) = &n.value else {
            return Err(self.err(n.at, format!("expected an object, found {}", n.kind())));
        };
        let mut seen = BTreeSet::new();
        for (k, at, _) in fields {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(*at, format!("unknown key `{k}`; expected one of {}", allowed.join(", "))));
            }
            if !seen.insert(canonical_key(k)) {
                return Err(self.err(*at, format!("duplicate key `{k}`")));
            }
        }
        Ok(fields)
    }

    fn field<'n>(&self, fields: Fields<'n>, names: &[&str]) -> Option<&'n Node> {
        fields.iter().find(|(k, ..)| names.contains(&k.as_str())).map(|(.., v)| v)
    }

    fn required<'n>(&self, at: usize, fields: Fields<'n>, names: &[&str]) -> Result<&'n Node> {
        self.field(fields, names)
            .ok_or_else(|| self.err(at, format!("missing key `{}`", names[0])))
    }

    fn number(&self, n: &Node) -> Result<f64> {
        match n.value {
            Value::Num(v) if !v.is_nan() => Ok(v),
            _ => Err(self.err(n.at, format!("expected a number, found {}", n.kind()))),
        }
    }

    fn finite(&self, n: &Node) -> Result<f64> {
        let v = self.number(n)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(n.at, "expected a finite number"))
        }
    }

    fn list<'n>(&self, n: &'n Node) -> Result<&'n [Node]> {
        match &n.value {
            Value::Array(xs) => Ok(xs),
            _ => Err(self.err(n.at, format!("expected a list, found {}", n.kind()))),
        }
    }

    fn numbers(&self, n: &Node) -> Result<Vec<f64>> {
        self.list(n)?.iter().map(|x| self.finite(x)).collect()
    }

    fn measure(&self, n: &Node) -> Result<MeasureSpec> {
        let fields = self.object(n, &["d", "dim", "dirs", "directions", "weights", "radial"])?;
        let d = self.required(n.at, fields, &["d", "dim"])?;
        let dv = self.finite(d)?;
        if !(dv >= 1.0 && dv.fract() == 0.0 && dv <= 1e6) {
            return Err(self.err(d.at, "dimension must be a positive integer"));
        }
        let dirs = self.required(n.at, fields, &["dirs", "directions"])?;
        let directions = self.list(dirs)?.iter().map(|x| self.numbers(x)).collect::<Result<Vec<_>>>()?;
        let weights = self.field(fields, &["weights"]).map(|w| self.numbers(w)).transpose()?;
        let radial = self.required(n.at, fields, &["radial"])?;
        let radial = self.list(radial)?.iter().map(|r| self.radial(r)).collect::<Result<Vec<_>>>()?;
        Ok(MeasureSpec {
            dim: dv as usize,
            directions,
            weights,
            radial,
        })
    }

    fn radial(&self, n: &Node) -> Result<RadialSpec> {
        let fields = self.object(n, &["atoms", "density"])?;
        let mut spec = RadialSpec::default();
        if let Some(atoms) = self.field(fields, &["atoms"]) {
            for a in self.list(atoms)? {
                let sw = match &a.value {
                    Value::Array(xs) | Value::Tuple(xs) => xs,
                    _ => return Err(self.err(a.at, format!("expected an atom [s, w], found {}", a.kind()))),
                };
                if sw.len() != 2 {
                    return Err(self.err(a.at, "an atom is a pair [location, mass]"));
                }
                spec.atoms.push((self.finite(&sw[0])?, self.finite(&sw[1])?));
            }
        }
        if let Some(d) = self.field(fields, &["density"]) {
            match &d.value {
                Value::Array(items) => {
                    for item in items {
                        spec.densities.push(self.density(item)?);
                    }
                }
                _ => spec.densities.push(self.density(d)?),
            }
        }
        Ok(spec)
    }

    fn density(&self, n: &Node) -> Result<DensitySpec> {
        let fields = self.object(n, &["expr", "support", "left_exp", "right_exp", "decay"])?;
        let e = self.required(n.at, fields, &["expr"])?;
        let Value::Str(src) = &e.value else {
            return Err(self.err(e.at, format!("expected the expression as a string, found {}", e.kind())));
        };
        // Offsets inside the string are exact because expressions contain no escapes.
        let expr = parse_expression(src, self.text, e.at + 1)?;
        let s = self.required(n.at, fields, &["support"])?;
        let support = match &s.value {
            Value::Tuple(xs) | Value::Array(xs) if xs.len() == 2 => (self.number(&xs[0])?, self.number(&xs[1])?),
            _ => return Err(self.err(s.at, "support is an interval (a, b)")),
        };
        let left_exp = self.field(fields, &["left_exp"]).map(|v| self.finite(v)).transpose()?;
        let right_exp = self.field(fields, &["right_exp"]).map(|v| self.finite(v)).transpose()?;
        let decay = self.field(fields, &["decay"]).map(|v| self.decay(v)).transpose()?;
        Ok(DensitySpec {
            expr,
            support,
            left_exp,
            right_exp,
            decay,
        })
    }

    fn decay(&self, n: &Node) -> Result<Decay> {
        let usage = "decay is one of compact, poly(b), exp(rate) or exp(rate, power)";
        match &n.value {
            Value::Word(w) if w == "compact" => Ok(Decay::Compact),
            Value::Call(name, args) => match (name.as_str(), args.as_slice()) {
                ("poly", [b]) => Ok(Decay::Polynomial(self.finite(b)?)),
                ("exp", [r]) => Ok(Decay::exponential(self.finite(r)?)),
                ("exp", [r, p]) => Ok(Decay::Exponential {
                    rate: self.finite(r)?,
                    power: self.finite(p)?,
                }),
                _ => Err(self.err(n.at, usage)),
            },
            _ => Err(self.err(n.at, usage)),
        }
    }
}

fn canonical_key(k: &str) -> &str {
    match k {
        "dim" => "d",
        "directions" => "dirs",
        other => other,
    }
}
