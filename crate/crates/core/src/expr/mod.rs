//! Scalar expressions over chart coordinates.
//!
//! Expressions are parsed from strings such as `"sin(theta)^2"` against a
//! declared coordinate list and evaluated either as plain values or as jets
//! carrying exact derivatives (see [`Expression::eval_jet`]). The grammar is
//! documented in `docs/expression-grammar.md`.

mod jet;
mod parse;

pub use jet::{JetValue, Order};
pub use parse::parse;

use std::fmt;
use thiserror::Error;

/// Error produced while parsing an expression string.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    /// Malformed input, with the byte offset of the offending token.
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    /// An identifier that is neither a function name nor a declared
    /// coordinate.
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },
}

/// Error produced while evaluating an expression at a point.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    /// A sub-expression is singular or undefined at the evaluation point.
    #[error("domain error: {message}")]
    Domain { message: String },
}

impl EvalError {
    fn domain(message: impl Into<String>) -> Self {
        EvalError::Domain { message: message.into() }
    }
}

/// Built-in single-argument functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Function {
    pub const NAMES: [(&'static str, Function); 8] = [
        ("sin", Function::Sin),
        ("cos", Function::Cos),
        ("tan", Function::Tan),
        ("exp", Function::Exp),
        ("log", Function::Log),
        ("sqrt", Function::Sqrt),
        ("sinh", Function::Sinh),
        ("cosh", Function::Cosh),
    ];

    pub fn from_name(name: &str) -> Option<Function> {
        Self::NAMES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| *f)
    }

    pub fn name(&self) -> &'static str {
        Self::NAMES
            .iter()
            .find(|(_, f)| f == self)
            .map(|(n, _)| *n)
            .expect("every function has a name")
    }

    /// True when `name` is reserved and may not be used as a coordinate.
    pub fn is_reserved(name: &str) -> bool {
        Self::from_name(name).is_some()
    }
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    Constant(f64),
    /// Coordinate reference; `index` is the position in the chart's
    /// coordinate list and `name` is kept for printing.
    Coord { index: usize, name: String },
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Neg(Box<Expression>),
    /// Power with a real constant exponent. Non-integer exponents require a
    /// positive base; integer exponents accept any base.
    Pow(Box<Expression>, f64),
    Call(Function, Box<Expression>),
}

impl Expression {
    /// Parse `source` against the given coordinate names.
    pub fn parse(source: &str, coordinates: &[impl AsRef<str>]) -> Result<Expression, ParseError> {
        let names: Vec<&str> = coordinates.iter().map(|c| c.as_ref()).collect();
        parse::parse(source, &names)
    }

    /// Plain value at `point`, without derivative tracking.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_value(point)?;
        if !v.is_finite() {
            return Err(EvalError::domain("non-finite result"));
        }
        Ok(v)
    }

    fn eval_value(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expression::Constant(c) => *c,
            Expression::Coord { index, .. } => point[*index],
            Expression::Add(a, b) => a.eval_value(point)? + b.eval_value(point)?,
            Expression::Sub(a, b) => a.eval_value(point)? - b.eval_value(point)?,
            Expression::Mul(a, b) => a.eval_value(point)? * b.eval_value(point)?,
            Expression::Div(a, b) => {
                let den = b.eval_value(point)?;
                if den == 0.0 {
                    return Err(EvalError::domain("division by zero"));
                }
                a.eval_value(point)? / den
            }
            Expression::Neg(a) => -a.eval_value(point)?,
            Expression::Pow(base, exponent) => {
                let b = base.eval_value(point)?;
                jet::check_pow_domain(b, *exponent)?;
                if jet::is_integer_exponent(*exponent) {
                    b.powi(*exponent as i32)
                } else {
                    b.powf(*exponent)
                }
            }
            Expression::Call(f, a) => {
                let u = a.eval_value(point)?;
                jet::apply_function_value(*f, u)?
            }
        };
        Ok(v)
    }

    /// Evaluates the constant value of a closed (coordinate-free) expression.
    pub fn constant_value(&self) -> Option<f64> {
        let v = match self {
            Expression::Constant(c) => *c,
            Expression::Coord { .. } => return None,
            Expression::Add(a, b) => a.constant_value()? + b.constant_value()?,
            Expression::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            Expression::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            Expression::Div(a, b) => {
                let den = b.constant_value()?;
                if den == 0.0 {
                    return None;
                }
                a.constant_value()? / den
            }
            Expression::Neg(a) => -a.constant_value()?,
            Expression::Pow(base, exponent) => {
                let b = base.constant_value()?;
                if jet::is_integer_exponent(*exponent) {
                    b.powi(*exponent as i32)
                } else {
                    b.powf(*exponent)
                }
            }
            Expression::Call(f, a) => jet::apply_function_value(*f, a.constant_value()?).ok()?,
        };
        v.is_finite().then_some(v)
    }
}

/// Prints with full parenthesization, so the output parses back to an
/// identical tree (constants use the shortest round-trip form).
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Constant(c) => {
                if *c < 0.0 || c.is_sign_negative() {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expression::Coord { name, .. } => write!(f, "{name}"),
            Expression::Add(a, b) => write!(f, "({a} + {b})"),
            Expression::Sub(a, b) => write!(f, "({a} - {b})"),
            Expression::Mul(a, b) => write!(f, "({a} * {b})"),
            Expression::Div(a, b) => write!(f, "({a} / {b})"),
            Expression::Neg(a) => write!(f, "(-{a})"),
            Expression::Pow(base, exponent) => {
                if *exponent < 0.0 {
                    write!(f, "({base}^({exponent}))")
                } else {
                    write!(f, "({base}^{exponent})")
                }
            }
            Expression::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
