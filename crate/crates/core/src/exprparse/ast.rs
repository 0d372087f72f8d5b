use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::compile::{binary, call, power};
use super::EvalError;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Expression tree node. Literals are always non-negative; negation is an
/// explicit [`Expression::Neg`] node so that printing and parsing agree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Num(f64),
    Pi,
    T,
    Param(String),
    Neg(Box<Expression>),
    Bin(BinOp, Box<Expression>, Box<Expression>),
    /// Integer power; the exponent is a literal by construction.
    Pow(Box<Expression>, i32),
    Call(Func, Box<Expression>),
}

const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expression {
    /// Literal constructor that keeps the non-negative literal convention.
    pub fn num(v: f64) -> Expression {
        if v < 0.0 {
            Expression::Neg(Box::new(Expression::Num(-v)))
        } else {
            Expression::Num(v)
        }
    }

    pub fn param(name: impl Into<String>) -> Expression {
        Expression::Param(name.into())
    }

    pub fn call(f: Func, arg: Expression) -> Expression {
        Expression::Call(f, Box::new(arg))
    }

    pub fn powi(self, n: i32) -> Expression {
        Expression::Pow(Box::new(self), n)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Num(_) | Expression::Pi | Expression::T | Expression::Param(_) => PREC_ATOM,
            Expression::Call(..) => PREC_ATOM,
            Expression::Neg(_) => PREC_NEG,
            Expression::Pow(..) => PREC_POW,
            Expression::Bin(op, ..) => op.precedence(),
        }
    }

    /// Evaluate at `t` with the given parameter bindings.
    pub fn eval(&self, t: f64, params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        let v = match self {
            Expression::Num(v) => *v,
            Expression::Pi => std::f64::consts::PI,
            Expression::T => t,
            Expression::Param(name) => match params.get(name) {
                Some(v) => *v,
                None => {
                    return Err(EvalError::Unbound {
                        name: name.clone(),
                        bound: params.keys().cloned().collect(),
                    })
                }
            },
            Expression::Neg(e) => -e.eval(t, params)?,
            Expression::Bin(op, l, r) => {
                let a = l.eval(t, params)?;
                let b = r.eval(t, params)?;
                binary(*op, a, b, t)?
            }
            Expression::Pow(base, n) => power(base.eval(t, params)?, *n, t)?,
            Expression::Call(f, arg) => call(*f, arg.eval(t, params)?, t)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain {
                what: "non-finite value",
                t,
            })
        }
    }

    /// Names of all free parameters.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expression::Param(name) => {
                out.insert(name.clone());
            }
            Expression::Neg(e) | Expression::Pow(e, _) | Expression::Call(_, e) => {
                e.collect_params(out)
            }
            Expression::Bin(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expression::Num(_) | Expression::Pi | Expression::T => {}
        }
    }

    /// Replace every parameter by its bound value. Fails on the first
    /// parameter that has no binding.
    pub fn bind(&self, params: &BTreeMap<String, f64>) -> Result<Expression, EvalError> {
        Ok(match self {
            Expression::Param(name) => match params.get(name) {
                Some(v) => Expression::num(*v),
                None => {
                    return Err(EvalError::Unbound {
                        name: name.clone(),
                        bound: params.keys().cloned().collect(),
                    })
                }
            },
            Expression::Neg(e) => Expression::Neg(Box::new(e.bind(params)?)),
            Expression::Pow(e, n) => Expression::Pow(Box::new(e.bind(params)?), *n),
            Expression::Call(f, e) => Expression::Call(*f, Box::new(e.bind(params)?)),
            Expression::Bin(op, l, r) => {
                Expression::Bin(*op, Box::new(l.bind(params)?), Box::new(r.bind(params)?))
            }
            other => other.clone(),
        })
    }

    /// Substitute `t -> replacement` everywhere.
    pub fn substitute_t(&self, replacement: &Expression) -> Expression {
        match self {
            Expression::T => replacement.clone(),
            Expression::Neg(e) => Expression::Neg(Box::new(e.substitute_t(replacement))),
            Expression::Pow(e, n) => Expression::Pow(Box::new(e.substitute_t(replacement)), *n),
            Expression::Call(f, e) => Expression::Call(*f, Box::new(e.substitute_t(replacement))),
            Expression::Bin(op, l, r) => Expression::Bin(
                *op,
                Box::new(l.substitute_t(replacement)),
                Box::new(r.substitute_t(replacement)),
            ),
            other => other.clone(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expression::Neg(e) | Expression::Pow(e, _) | Expression::Call(_, e) => 1 + e.size(),
            Expression::Bin(_, l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` on f64 is the shortest representation that round-trips.
            Expression::Num(v) => write!(f, "{v:?}"),
            Expression::Pi => f.write_str("pi"),
            Expression::T => f.write_str("t"),
            Expression::Param(name) => f.write_str(name),
            Expression::Neg(e) => {
                f.write_str("-")?;
                e.fmt_child(f, PREC_NEG)
            }
            Expression::Bin(op, l, r) => {
                let p = op.precedence();
                l.fmt_child(f, p)?;
                write!(f, "{}", op.symbol())?;
                r.fmt_child(f, p + 1)
            }
            Expression::Pow(base, n) => {
                base.fmt_child(f, PREC_ATOM)?;
                write!(f, "^{n}")
            }
            Expression::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

// Operator sugar for building trees programmatically.
macro_rules! bin_impl {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::Bin($op, Box::new(self), Box::new(rhs))
            }
        }
    };
}

bin_impl!(Add, add, BinOp::Add);
bin_impl!(Sub, sub, BinOp::Sub);
bin_impl!(Mul, mul, BinOp::Mul);
bin_impl!(Div, div, BinOp::Div);

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::Neg(Box::new(self))
    }
}
