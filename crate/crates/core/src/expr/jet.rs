//! Forward-mode jets: exact derivatives up to third order.
//!
//! Evaluation pushes truncated Taylor data through the expression tree, so
//! the reported gradient, Hessian, and third-derivative entries carry only
//! rounding error — no truncation. Each unordered index set is computed once
//! and mirrored, which makes the symmetry of mixed partials exact in floating
//! point, not merely up to rounding.

use super::{EvalError, Expression, Function};
use crate::tensor::{Matrix, Tensor3};

/// Highest derivative order to track during evaluation.
///
/// `First` and `Second` share a code path (second derivatives are cheap at
/// chart dimensions); `Third` additionally fills [`JetValue::third`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
    Third,
}

/// Value of an expression at a point together with its exact derivatives.
#[derive(Clone, Debug)]
pub struct JetValue {
    pub value: f64,
    /// `gradient[i]` is the partial derivative along coordinate `i`.
    pub gradient: Vec<f64>,
    /// `hessian[[i, j]]` is the second partial; exactly symmetric.
    pub hessian: Matrix,
    /// `third[[i, j, k]]` when `Order::Third` was requested; exactly
    /// symmetric in all index pairs.
    pub third: Option<Tensor3>,
}

pub(crate) fn is_integer_exponent(c: f64) -> bool {
    c.fract() == 0.0 && c.abs() <= i32::MAX as f64
}

pub(crate) fn check_pow_domain(base: f64, exponent: f64) -> Result<(), EvalError> {
    if is_integer_exponent(exponent) {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::domain("zero raised to a negative power"));
        }
    } else if base <= 0.0 {
        return Err(EvalError::domain(
            "non-integer power of a non-positive base",
        ));
    }
    Ok(())
}

/// Value-only application of a built-in function, with domain checks shared
/// by the plain and jet evaluation paths.
pub(crate) fn apply_function_value(f: Function, u: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Function::Sin => u.sin(),
        Function::Cos => u.cos(),
        Function::Tan => {
            if u.cos() == 0.0 {
                return Err(EvalError::domain("tan at a pole"));
            }
            u.tan()
        }
        Function::Exp => u.exp(),
        Function::Log => {
            if u <= 0.0 {
                return Err(EvalError::domain("log of a non-positive value"));
            }
            u.ln()
        }
        Function::Sqrt => {
            if u <= 0.0 {
                return Err(EvalError::domain("sqrt of a non-positive value"));
            }
            u.sqrt()
        }
        Function::Sinh => u.sinh(),
        Function::Cosh => u.cosh(),
    })
}

/// Value and first three derivatives of a built-in function at `u`.
fn function_derivatives(f: Function, u: f64) -> Result<[f64; 4], EvalError> {
    let v = apply_function_value(f, u)?;
    Ok(match f {
        Function::Sin => [v, u.cos(), -v, -u.cos()],
        Function::Cos => [v, -u.sin(), -v, u.sin()],
        Function::Tan => {
            let s = 1.0 + v * v;
            [v, s, 2.0 * v * s, 2.0 * s * (1.0 + 3.0 * v * v)]
        }
        Function::Exp => [v, v, v, v],
        Function::Log => [v, 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)],
        Function::Sqrt => [
            v,
            0.5 / v,
            -0.25 / (u * v),
            0.375 / (u * u * v),
        ],
        Function::Sinh => [v, u.cosh(), v, u.cosh()],
        Function::Cosh => [v, u.sinh(), v, u.sinh()],
    })
}

/// Forward-mode jet: value, gradient, full Hessian, optional third order.
#[derive(Clone, Debug)]
struct Jet {
    n: usize,
    v: f64,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Option<Vec<f64>>,
}

#[inline]
fn i2(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

#[inline]
fn i3(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

impl Jet {
    fn constant(n: usize, v: f64, third: bool) -> Jet {
        Jet {
            n,
            v,
            d1: vec![0.0; n],
            d2: vec![0.0; n * n],
            d3: third.then(|| vec![0.0; n * n * n]),
        }
    }

    fn coordinate(n: usize, index: usize, value: f64, third: bool) -> Jet {
        let mut jet = Jet::constant(n, value, third);
        jet.d1[index] = 1.0;
        jet
    }

    fn tracks_third(&self) -> bool {
        self.d3.is_some()
    }

    fn map2(a: &Jet, b: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let n = a.n;
        Jet {
            n,
            v: f(a.v, b.v),
            d1: a.d1.iter().zip(&b.d1).map(|(x, y)| f(*x, *y)).collect(),
            d2: a.d2.iter().zip(&b.d2).map(|(x, y)| f(*x, *y)).collect(),
            d3: match (&a.d3, &b.d3) {
                (Some(x), Some(y)) => {
                    Some(x.iter().zip(y).map(|(p, q)| f(*p, *q)).collect())
                }
                _ => None,
            },
        }
    }

    fn add(a: &Jet, b: &Jet) -> Jet {
        Jet::map2(a, b, |x, y| x + y)
    }

    fn sub(a: &Jet, b: &Jet) -> Jet {
        Jet::map2(a, b, |x, y| x - y)
    }

    fn neg(a: &Jet) -> Jet {
        Jet {
            n: a.n,
            v: -a.v,
            d1: a.d1.iter().map(|x| -x).collect(),
            d2: a.d2.iter().map(|x| -x).collect(),
            d3: a.d3.as_ref().map(|d| d.iter().map(|x| -x).collect()),
        }
    }

    /// Writes `value` to every permutation of `(i, j, k)`.
    fn set3(d3: &mut [f64], n: usize, i: usize, j: usize, k: usize, value: f64) {
        for (a, b, c) in [
            (i, j, k),
            (i, k, j),
            (j, i, k),
            (j, k, i),
            (k, i, j),
            (k, j, i),
        ] {
            d3[i3(n, a, b, c)] = value;
        }
    }

    fn mul(a: &Jet, b: &Jet) -> Jet {
        let n = a.n;
        let mut out = Jet::constant(n, a.v * b.v, a.tracks_third());
        for i in 0..n {
            out.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
        }
        for i in 0..n {
            for j in i..n {
                let val = a.d2[i2(n, i, j)] * b.v
                    + a.d1[i] * b.d1[j]
                    + a.d1[j] * b.d1[i]
                    + a.v * b.d2[i2(n, i, j)];
                out.d2[i2(n, i, j)] = val;
                out.d2[i2(n, j, i)] = val;
            }
        }
        if let (Some(out3), Some(a3), Some(b3)) = (&mut out.d3, &a.d3, &b.d3) {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let val = a3[i3(n, i, j, k)] * b.v
                            + a.d2[i2(n, i, j)] * b.d1[k]
                            + a.d2[i2(n, i, k)] * b.d1[j]
                            + a.d2[i2(n, j, k)] * b.d1[i]
                            + a.d1[i] * b.d2[i2(n, j, k)]
                            + a.d1[j] * b.d2[i2(n, i, k)]
                            + a.d1[k] * b.d2[i2(n, i, j)]
                            + a.v * b3[i3(n, i, j, k)];
                        Jet::set3(out3, n, i, j, k, val);
                    }
                }
            }
        }
        out
    }

    /// Chain rule through a scalar function given `f(u)` and its first three
    /// derivatives at `u = self.v`.
    fn compose(u: &Jet, f: [f64; 4]) -> Jet {
        let n = u.n;
        let [f0, f1, f2, f3] = f;
        let mut out = Jet::constant(n, f0, u.tracks_third());
        for i in 0..n {
            out.d1[i] = f1 * u.d1[i];
        }
        for i in 0..n {
            for j in i..n {
                let val = f2 * u.d1[i] * u.d1[j] + f1 * u.d2[i2(n, i, j)];
                out.d2[i2(n, i, j)] = val;
                out.d2[i2(n, j, i)] = val;
            }
        }
        if let (Some(out3), Some(u3)) = (&mut out.d3, &u.d3) {
            for i in 0..n {
                for j in i..n {
                    for k in j..n {
                        let val = f3 * u.d1[i] * u.d1[j] * u.d1[k]
                            + f2 * (u.d2[i2(n, i, j)] * u.d1[k]
                                + u.d2[i2(n, i, k)] * u.d1[j]
                                + u.d2[i2(n, j, k)] * u.d1[i])
                            + f1 * u3[i3(n, i, j, k)];
                        Jet::set3(out3, n, i, j, k, val);
                    }
                }
            }
        }
        out
    }

    fn recip(u: &Jet) -> Result<Jet, EvalError> {
        if u.v == 0.0 {
            return Err(EvalError::domain("division by zero"));
        }
        let inv = 1.0 / u.v;
        let inv2 = inv * inv;
        Ok(Jet::compose(
            u,
            [inv, -inv2, 2.0 * inv2 * inv, -6.0 * inv2 * inv2],
        ))
    }

    fn pow_integer(u: &Jet, k: i32) -> Result<Jet, EvalError> {
        if u.v == 0.0 && k < 0 {
            return Err(EvalError::domain("zero raised to a negative power"));
        }
        let kf = k as f64;
        // A zero falling coefficient means the term vanishes identically;
        // skip the power so 0^negative never surfaces as inf * 0.
        let term = |coefficient: f64, exponent: i32| -> f64 {
            if coefficient == 0.0 {
                0.0
            } else {
                coefficient * u.v.powi(exponent)
            }
        };
        Ok(Jet::compose(
            u,
            [
                u.v.powi(k),
                term(kf, k - 1),
                term(kf * (kf - 1.0), k - 2),
                term(kf * (kf - 1.0) * (kf - 2.0), k - 3),
            ],
        ))
    }

    fn pow_real(u: &Jet, c: f64) -> Result<Jet, EvalError> {
        check_pow_domain(u.v, c)?;
        Ok(Jet::compose(
            u,
            [
                u.v.powf(c),
                c * u.v.powf(c - 1.0),
                c * (c - 1.0) * u.v.powf(c - 2.0),
                c * (c - 1.0) * (c - 2.0) * u.v.powf(c - 3.0),
            ],
        ))
    }

    fn is_finite(&self) -> bool {
        self.v.is_finite()
            && self.d1.iter().all(|x| x.is_finite())
            && self.d2.iter().all(|x| x.is_finite())
            && self
                .d3
                .as_ref()
                .map_or(true, |d| d.iter().all(|x| x.is_finite()))
    }
}

fn eval_jet_rec(e: &Expression, point: &[f64], third: bool) -> Result<Jet, EvalError> {
    let n = point.len();
    Ok(match e {
        Expression::Constant(c) => Jet::constant(n, *c, third),
        Expression::Coord { index, .. } => Jet::coordinate(n, *index, point[*index], third),
        Expression::Add(a, b) => Jet::add(
            &eval_jet_rec(a, point, third)?,
            &eval_jet_rec(b, point, third)?,
        ),
        Expression::Sub(a, b) => Jet::sub(
            &eval_jet_rec(a, point, third)?,
            &eval_jet_rec(b, point, third)?,
        ),
        Expression::Mul(a, b) => Jet::mul(
            &eval_jet_rec(a, point, third)?,
            &eval_jet_rec(b, point, third)?,
        ),
        Expression::Div(a, b) => {
            let num = eval_jet_rec(a, point, third)?;
            let den = eval_jet_rec(b, point, third)?;
            Jet::mul(&num, &Jet::recip(&den)?)
        }
        Expression::Neg(a) => Jet::neg(&eval_jet_rec(a, point, third)?),
        Expression::Pow(base, exponent) => {
            let u = eval_jet_rec(base, point, third)?;
            if is_integer_exponent(*exponent) {
                Jet::pow_integer(&u, *exponent as i32)?
            } else {
                Jet::pow_real(&u, *exponent)?
            }
        }
        Expression::Call(f, a) => {
            let u = eval_jet_rec(a, point, third)?;
            Jet::compose(&u, function_derivatives(*f, u.v)?)
        }
    })
}

impl Expression {
    /// Evaluates the expression with exact derivatives at `point`.
    ///
    /// The gradient and Hessian are always filled; `third` is filled only for
    /// [`Order::Third`]. Mixed partials are mirrored from a single
    /// computation, so `hessian` (and `third`) are symmetric exactly.
    pub fn eval_jet(&self, point: &[f64], order: Order) -> Result<JetValue, EvalError> {
        let track_third = matches!(order, Order::Third);
        let jet = eval_jet_rec(self, point, track_third)?;
        if !jet.is_finite() {
            return Err(EvalError::domain("non-finite result"));
        }
        let n = jet.n;
        let mut hessian = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                hessian[[i, j]] = jet.d2[i2(n, i, j)];
            }
        }
        let third = jet.d3.map(|d3| {
            let mut t = Tensor3::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        t[[i, j, k]] = d3[i3(n, i, j, k)];
                    }
                }
            }
            t
        });
        Ok(JetValue { value: jet.v, gradient: jet.d1, hessian, third })
    }
}
