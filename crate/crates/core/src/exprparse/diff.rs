//! Symbolic d/dt on expression trees, with zero/one pruning so that derived
//! trees stay evaluable at a reasonable cost.

use super::ast::{BinOp, Expression, Func};

fn is_zero(e: &Expression) -> bool {
    matches!(e, Expression::Num(v) if *v == 0.0)
}

/// Value of a literal or a negated literal.
fn literal(e: &Expression) -> Option<f64> {
    match e {
        Expression::Num(v) => Some(*v),
        Expression::Neg(inner) => match **inner {
            Expression::Num(v) => Some(-v),
            _ => None,
        },
        _ => None,
    }
}

fn is_one(e: &Expression) -> bool {
    matches!(e, Expression::Num(v) if *v == 1.0)
}

pub(crate) fn add(a: Expression, b: Expression) -> Expression {
    if let (Some(x), Some(y)) = (literal(&a), literal(&b)) {
        return Expression::num(x + y);
    }
    match (is_zero(&a), is_zero(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => a + b,
    }
}

pub(crate) fn sub(a: Expression, b: Expression) -> Expression {
    if let (Some(x), Some(y)) = (literal(&a), literal(&b)) {
        return Expression::num(x - y);
    }
    match (is_zero(&a), is_zero(&b)) {
        (_, true) => a,
        (true, _) => neg(b),
        _ => a - b,
    }
}

pub(crate) fn neg(a: Expression) -> Expression {
    match a {
        Expression::Num(0.0) => a,
        Expression::Neg(inner) => *inner,
        other => -other,
    }
}

pub(crate) fn mul(a: Expression, b: Expression) -> Expression {
    if is_zero(&a) || is_zero(&b) {
        return Expression::Num(0.0);
    }
    if let (Some(x), Some(y)) = (literal(&a), literal(&b)) {
        return Expression::num(x * y);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    a * b
}

pub(crate) fn div(a: Expression, b: Expression) -> Expression {
    if is_zero(&a) {
        return Expression::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    a / b
}

/// Derivative of `e` with respect to `t`. Parameters are treated as constants.
pub fn derivative(e: &Expression) -> Expression {
    match e {
        Expression::Num(_) | Expression::Pi | Expression::Param(_) => Expression::Num(0.0),
        Expression::T => Expression::Num(1.0),
        Expression::Neg(u) => neg(derivative(u)),
        Expression::Bin(op, u, v) => {
            let du = derivative(u);
            let dv = derivative(v);
            match op {
                BinOp::Add => add(du, dv),
                BinOp::Sub => sub(du, dv),
                BinOp::Mul => add(mul(du, (**v).clone()), mul((**u).clone(), dv)),
                BinOp::Div => {
                    if is_zero(&dv) {
                        div(du, (**v).clone())
                    } else {
                        div(
                            sub(mul(du, (**v).clone()), mul((**u).clone(), dv)),
                            (**v).clone().powi(2),
                        )
                    }
                }
            }
        }
        Expression::Pow(u, n) => {
            let du = derivative(u);
            match *n {
                0 => Expression::Num(0.0),
                1 => du,
                n => {
                    let coeff = Expression::num(n as f64);
                    let inner = if n - 1 == 1 {
                        (**u).clone()
                    } else {
                        (**u).clone().powi(n - 1)
                    };
                    mul(mul(coeff, inner), du)
                }
            }
        }
        Expression::Call(f, u) => {
            let du = derivative(u);
            if is_zero(&du) {
                return Expression::Num(0.0);
            }
            let u = (**u).clone();
            let outer = match f {
                Func::Sin => Expression::call(Func::Cos, u),
                Func::Cos => neg(Expression::call(Func::Sin, u)),
                Func::Tan => div(Expression::Num(1.0), Expression::call(Func::Cos, u).powi(2)),
                Func::Exp => Expression::call(Func::Exp, u),
                Func::Sqrt => div(
                    Expression::Num(1.0),
                    Expression::Num(2.0) * Expression::call(Func::Sqrt, u),
                ),
                // Undefined at u = 0; evaluation reports a domain error there.
                Func::Abs => div(u.clone(), Expression::call(Func::Abs, u)),
            };
            mul(outer, du)
        }
    }
}
