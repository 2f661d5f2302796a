//! Expression evaluation and equation-based function application.
//!
//! Evaluation assumes well-typed input (the checkers guarantee it for model
//! execution); the error cases below are the ones that remain under that
//! precondition, plus unbound-variable, which signals a checker bug.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dtd::check::check_value_type;
use crate::dtd::{BinOp, Defs, DerivedKind, Expr, Pattern, UnOp, Value};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` takes {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    IntegerOverflow,
    #[error("float operation produced a non-finite value")]
    NonFiniteFloat,
    #[error("selector `{selector}` applied to `{value}`")]
    SelectorMismatch { selector: String, value: String },
    #[error("no equation of `{function}` matches the arguments")]
    MatchFailure { function: String },
    #[error("type error: {0}")]
    TypeMismatch(String),
}

pub type Env = BTreeMap<String, Value>;

/// Matches a pattern against a value, extending `binds` with the pattern's
/// variable bindings. Literal floats match by IEEE equality.
pub fn match_pattern(pat: &Pattern, v: &Value, binds: &mut Env) -> bool {
    match pat {
        Pattern::Wildcard => true,
        Pattern::Var(name) => {
            binds.insert(name.clone(), v.clone());
            true
        }
        Pattern::Literal(lit) => lit.semantic_eq(v),
        Pattern::Ctor(name, subs) => match v {
            Value::Ctor(vname, args) if vname == name && args.len() == subs.len() => subs
                .iter()
                .zip(args)
                .all(|(p, a)| match_pattern(p, a, binds)),
            _ => false,
        },
    }
}

fn finite(x: f64) -> Result<Value, EvalError> {
    if x.is_finite() {
        Ok(Value::Float(x))
    } else {
        Err(EvalError::NonFiniteFloat)
    }
}

fn arith(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                BinOp::Add => x.checked_add(*y),
                BinOp::Sub => x.checked_sub(*y),
                BinOp::Mul => x.checked_mul(*y),
                BinOp::Div => {
                    if *y == 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x.checked_div(*y)
                }
                BinOp::Rem => {
                    if *y == 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x.checked_rem(*y)
                }
                _ => unreachable!("non-arithmetic operator"),
            };
            r.map(Value::Int).ok_or(EvalError::IntegerOverflow)
        }
        (Value::Float(x), Value::Float(y)) => match op {
            BinOp::Add => finite(x + y),
            BinOp::Sub => finite(x - y),
            BinOp::Mul => finite(x * y),
            BinOp::Div => {
                if *y == 0.0 {
                    Err(EvalError::DivisionByZero)
                } else {
                    finite(x / y)
                }
            }
            BinOp::Rem => Err(EvalError::TypeMismatch("`%` on Float".into())),
            _ => unreachable!("non-arithmetic operator"),
        },
        _ => Err(EvalError::TypeMismatch(format!(
            "`{}` applied to `{a}` and `{b}`",
            op.symbol()
        ))),
    }
}

fn compare(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    let ord = match (a, b) {
        (Value::Int(x), Value::Int(y)) => x.partial_cmp(y),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
        _ => None,
    };
    let ord = ord.ok_or_else(|| {
        EvalError::TypeMismatch(format!("`{}` applied to `{a}` and `{b}`", op.symbol()))
    })?;
    let r = match op {
        BinOp::Lt => ord.is_lt(),
        BinOp::Le => ord.is_le(),
        BinOp::Gt => ord.is_gt(),
        BinOp::Ge => ord.is_ge(),
        _ => unreachable!("non-ordering operator"),
    };
    Ok(Value::Bool(r))
}

fn as_bool(v: &Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(EvalError::TypeMismatch(format!("`{other}` used as Bool"))),
    }
}

/// Evaluates an expression under a variable environment. Deterministic:
/// equal environments and expressions produce identical values.
pub fn eval_expr(env: &Env, e: &Expr, defs: &Defs) -> Result<Value, EvalError> {
    match e {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Var(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVar(name.clone())),
        Expr::Ctor(name, args) => {
            let vals: Result<Vec<Value>, EvalError> =
                args.iter().map(|a| eval_expr(env, a, defs)).collect();
            Ok(Value::Ctor(name.clone(), vals?))
        }
        Expr::Call(name, args) => {
            let vals: Result<Vec<Value>, EvalError> =
                args.iter().map(|a| eval_expr(env, a, defs)).collect();
            apply_fun(name, &vals?, defs)
        }
        Expr::Unary(UnOp::Neg, a) => match eval_expr(env, a, defs)? {
            Value::Int(x) => x
                .checked_neg()
                .map(Value::Int)
                .ok_or(EvalError::IntegerOverflow),
            Value::Float(x) => Ok(Value::Float(-x)),
            other => Err(EvalError::TypeMismatch(format!("cannot negate `{other}`"))),
        },
        Expr::Unary(UnOp::Not, a) => {
            let v = eval_expr(env, a, defs)?;
            Ok(Value::Bool(!as_bool(&v)?))
        }
        Expr::Binary(op, a, b) => match op {
            BinOp::And => {
                if as_bool(&eval_expr(env, a, defs)?)? {
                    let rb = eval_expr(env, b, defs)?;
                    Ok(Value::Bool(as_bool(&rb)?))
                } else {
                    Ok(Value::Bool(false))
                }
            }
            BinOp::Or => {
                if as_bool(&eval_expr(env, a, defs)?)? {
                    Ok(Value::Bool(true))
                } else {
                    let rb = eval_expr(env, b, defs)?;
                    Ok(Value::Bool(as_bool(&rb)?))
                }
            }
            BinOp::Eq | BinOp::Ne => {
                let va = eval_expr(env, a, defs)?;
                let vb = eval_expr(env, b, defs)?;
                let eq = va.semantic_eq(&vb);
                Ok(Value::Bool(if *op == BinOp::Eq { eq } else { !eq }))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let va = eval_expr(env, a, defs)?;
                let vb = eval_expr(env, b, defs)?;
                compare(*op, &va, &vb)
            }
            _ => {
                let va = eval_expr(env, a, defs)?;
                let vb = eval_expr(env, b, defs)?;
                arith(*op, &va, &vb)
            }
        },
        Expr::If(c, t, f) => {
            if as_bool(&eval_expr(env, c, defs)?)? {
                eval_expr(env, t, defs)
            } else {
                eval_expr(env, f, defs)
            }
        }
    }
}

/// Applies a named function to argument values. User functions try their
/// equations top to bottom and evaluate the first whose patterns all match;
/// derived functions construct, discriminate, or select.
pub fn apply_fun(name: &str, args: &[Value], defs: &Defs) -> Result<Value, EvalError> {
    if let Some(f) = defs.lookup_fun(name) {
        if args.len() != f.param_types.len() {
            return Err(EvalError::Arity {
                name: name.into(),
                expected: f.param_types.len(),
                got: args.len(),
            });
        }
        for (a, ty) in args.iter().zip(&f.param_types) {
            check_value_type(a, ty, defs).map_err(EvalError::TypeMismatch)?;
        }
        for eq in &f.equations {
            let mut binds = Env::new();
            if eq
                .patterns
                .iter()
                .zip(args)
                .all(|(p, a)| match_pattern(p, a, &mut binds))
            {
                return eval_expr(&binds, &eq.body, defs);
            }
        }
        return Err(EvalError::MatchFailure {
            function: name.into(),
        });
    }
    if let Some(d) = defs.lookup_derived(name) {
        if args.len() != d.param_types.len() {
            return Err(EvalError::Arity {
                name: name.into(),
                expected: d.param_types.len(),
                got: args.len(),
            });
        }
        for (a, ty) in args.iter().zip(&d.param_types) {
            check_value_type(a, ty, defs).map_err(EvalError::TypeMismatch)?;
        }
        return match d.kind {
            DerivedKind::Construct => Ok(Value::Ctor(d.ctor_name.clone(), args.to_vec())),
            DerivedKind::Discriminate => match &args[0] {
                Value::Ctor(c, _) => Ok(Value::Bool(*c == d.ctor_name)),
                other => Err(EvalError::TypeMismatch(format!(
                    "discriminator on `{other}`"
                ))),
            },
            DerivedKind::Select(idx) => match &args[0] {
                Value::Ctor(c, fields) if *c == d.ctor_name => Ok(fields[idx].clone()),
                other => Err(EvalError::SelectorMismatch {
                    selector: name.into(),
                    value: other.to_string(),
                }),
            },
        };
    }
    Err(EvalError::UnknownFunction(name.into()))
}
