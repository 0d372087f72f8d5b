//! Closed-form periodic functions as text.
//!
//! The grammar covers numbers, `pi`, the variable `t`, named parameters,
//! `+ - * /`, integer powers `^`, unary minus and the functions
//! `sin cos tan exp sqrt abs`. There is no implicit multiplication.
//! Precedence from tightest: `^` (right associative), unary `-`, `* /`, `+ -`.

mod ast;
mod compile;
mod diff;
mod parser;

use std::collections::BTreeMap;

pub use ast::{BinOp, Expression, Func};
pub use compile::Program;
pub use diff::derivative;
pub(crate) use diff::{add as e_add, div as e_div, mul as e_mul, sub as e_sub};
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unknown identifier '{name}' (bound names: {})", bound.join(", "))]
    Unbound { name: String, bound: Vec<String> },
    #[error("evaluation domain error at t = {t}: {what}")]
    Domain { what: &'static str, t: f64 },
}

/// Parameter bindings by name.
pub type Params = BTreeMap<String, f64>;

/// Evaluate `e` at `t` with the given parameter bindings.
pub fn eval_expr(e: &Expression, t: f64, params: &Params) -> Result<f64, EvalError> {
    e.eval(t, params)
}
