//! Flat evaluation of expression trees.
//!
//! Identical subtrees are shared and parameter-free constant subtrees are
//! folded, so large generated expressions (derivatives, reductions) with
//! many repeated pieces evaluate in a fraction of the tree-walk time.

use std::collections::HashMap;

use super::ast::{BinOp, Expression, Func};
use super::{EvalError, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Instr {
    Const(u64),
    T,
    /// Index into the program's parameter-name table.
    Param(u32),
    Neg(u32),
    Bin(BinOp, u32, u32),
    Pow(u32, i32),
    Call(Func, u32),
}

/// A compiled expression. Evaluates to the same values and the same first
/// error as [`Expression::eval`].
#[derive(Debug, Clone)]
pub struct Program {
    code: Vec<Instr>,
    names: Vec<String>,
}

const STACK_SLOTS: usize = 128;

impl Program {
    pub fn compile(e: &Expression) -> Program {
        let mut b = Builder::default();
        let root = b.emit(e);
        Program {
            code: live_code(&b.code, root),
            names: b.names,
        }
    }

    /// Number of instructions after sharing and folding.
    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn eval(&self, t: f64, params: &Params) -> Result<f64, EvalError> {
        let n = self.code.len();
        if n <= STACK_SLOTS {
            let mut regs = [0.0; STACK_SLOTS];
            self.run(t, params, &mut regs[..n])
        } else {
            let mut regs = vec![0.0; n];
            self.run(t, params, &mut regs)
        }
    }

    fn run(&self, t: f64, params: &Params, regs: &mut [f64]) -> Result<f64, EvalError> {
        for (i, ins) in self.code.iter().enumerate() {
            let v = match *ins {
                Instr::Const(bits) => f64::from_bits(bits),
                Instr::T => t,
                Instr::Param(k) => {
                    let name = &self.names[k as usize];
                    match params.get(name) {
                        Some(v) => *v,
                        None => {
                            return Err(EvalError::Unbound {
                                name: name.clone(),
                                bound: params.keys().cloned().collect(),
                            })
                        }
                    }
                }
                Instr::Neg(a) => -regs[a as usize],
                Instr::Bin(op, a, b) => binary(op, regs[a as usize], regs[b as usize], t)?,
                Instr::Pow(a, n) => power(regs[a as usize], n, t)?,
                Instr::Call(f, a) => call(f, regs[a as usize], t)?,
            };
            if !v.is_finite() {
                return Err(EvalError::Domain {
                    what: "non-finite value",
                    t,
                });
            }
            regs[i] = v;
        }
        Ok(regs[regs.len() - 1])
    }
}

pub(super) fn binary(op: BinOp, a: f64, b: f64, t: f64) -> Result<f64, EvalError> {
    Ok(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::Domain {
                    what: "division by zero",
                    t,
                });
            }
            a / b
        }
    })
}

pub(super) fn power(b: f64, n: i32, t: f64) -> Result<f64, EvalError> {
    if n < 0 && b == 0.0 {
        return Err(EvalError::Domain {
            what: "negative power of zero",
            t,
        });
    }
    Ok(b.powi(n))
}

pub(super) fn call(f: Func, x: f64, t: f64) -> Result<f64, EvalError> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => {
            let c = x.cos();
            if c.abs() < 1e-15 {
                return Err(EvalError::Domain {
                    what: "tan pole",
                    t,
                });
            }
            x.sin() / c
        }
        Func::Exp => x.exp(),
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalError::Domain {
                    what: "sqrt of negative",
                    t,
                });
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
    })
}

fn operands(ins: Instr) -> [Option<u32>; 2] {
    match ins {
        Instr::Const(_) | Instr::T | Instr::Param(_) => [None, None],
        Instr::Neg(a) | Instr::Pow(a, _) | Instr::Call(_, a) => [Some(a), None],
        Instr::Bin(_, a, b) => [Some(a), Some(b)],
    }
}

/// Instructions reachable from `root`, renumbered, with `root` last.
fn live_code(code: &[Instr], root: u32) -> Vec<Instr> {
    let mut live = vec![false; code.len()];
    live[root as usize] = true;
    for i in (0..=root as usize).rev() {
        if live[i] {
            for a in operands(code[i]).into_iter().flatten() {
                live[a as usize] = true;
            }
        }
    }
    let mut index = vec![0u32; code.len()];
    let mut out = Vec::new();
    for i in 0..=root as usize {
        if !live[i] {
            continue;
        }
        index[i] = out.len() as u32;
        let m = |a: u32| index[a as usize];
        out.push(match code[i] {
            Instr::Neg(a) => Instr::Neg(m(a)),
            Instr::Bin(op, a, b) => Instr::Bin(op, m(a), m(b)),
            Instr::Pow(a, n) => Instr::Pow(m(a), n),
            Instr::Call(f, a) => Instr::Call(f, m(a)),
            other => other,
        });
    }
    out
}

#[derive(Default)]
struct Builder {
    code: Vec<Instr>,
    names: Vec<String>,
    seen: HashMap<Instr, u32>,
    /// Per instruction: folded value when it does not depend on `t` or a
    /// parameter.
    folded: Vec<Option<f64>>,
}

impl Builder {
    fn push(&mut self, ins: Instr) -> u32 {
        if let Some(&k) = self.seen.get(&ins) {
            return k;
        }
        let k = self.code.len() as u32;
        let folded = self.fold(ins);
        // a folded value replaces the instruction by a shared constant
        let ins = match folded {
            Some(v) if !matches!(ins, Instr::Const(_)) => {
                let c = Instr::Const(v.to_bits());
                if let Some(&j) = self.seen.get(&c) {
                    self.seen.insert(ins, j);
                    return j;
                }
                self.seen.insert(ins, k);
                c
            }
            _ => ins,
        };
        self.seen.insert(ins, k);
        self.code.push(ins);
        self.folded.push(folded);
        k
    }

    fn fold(&self, ins: Instr) -> Option<f64> {
        let c = |a: u32| self.folded[a as usize];
        // errors are left to run time so that they surface at the same t
        let v = match ins {
            Instr::Const(bits) => Some(f64::from_bits(bits)),
            Instr::T | Instr::Param(_) => None,
            Instr::Neg(a) => c(a).map(|x| -x),
            Instr::Bin(op, a, b) => binary(op, c(a)?, c(b)?, 0.0).ok(),
            Instr::Pow(a, n) => power(c(a)?, n, 0.0).ok(),
            Instr::Call(f, a) => call(f, c(a)?, 0.0).ok(),
        }?;
        v.is_finite().then_some(v)
    }

    fn emit(&mut self, e: &Expression) -> u32 {
        let ins = match e {
            Expression::Num(v) => Instr::Const(v.to_bits()),
            Expression::Pi => Instr::Const(std::f64::consts::PI.to_bits()),
            Expression::T => Instr::T,
            Expression::Param(name) => {
                let k = match self.names.iter().position(|n| n == name) {
                    Some(k) => k,
                    None => {
                        self.names.push(name.clone());
                        self.names.len() - 1
                    }
                };
                Instr::Param(k as u32)
            }
            Expression::Neg(a) => Instr::Neg(self.emit(a)),
            Expression::Bin(op, l, r) => {
                let a = self.emit(l);
                let b = self.emit(r);
                Instr::Bin(*op, a, b)
            }
            Expression::Pow(a, n) => Instr::Pow(self.emit(a), *n),
            Expression::Call(f, a) => Instr::Call(*f, self.emit(a)),
        };
        self.push(ins)
    }
}
