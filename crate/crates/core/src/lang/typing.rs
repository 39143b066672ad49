use thiserror::Error;

use super::{Expr, MiniType, Op, TypeEnv};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type error in `{expr}`: {message}")]
pub struct TypeError {
    pub expr: String,
    pub message: String,
}

fn fail(e: &Expr, message: impl Into<String>) -> TypeError {
    TypeError {
        expr: e.to_string(),
        message: message.into(),
    }
}

fn expect(e: &Expr, got: &MiniType, want: &MiniType) -> Result<(), TypeError> {
    if got == want {
        Ok(())
    } else {
        Err(fail(e, format!("expected {want}, found {got}")))
    }
}

fn elem_of(e: &Expr, t: MiniType) -> Result<MiniType, TypeError> {
    match t {
        MiniType::List(inner) => Ok(*inner),
        other => Err(fail(e, format!("expected a list, found {other}"))),
    }
}

/// Computes the static type of `e`. Type variables are treated as rigid,
/// so generic rule templates check against their declared signatures.
/// A hole has the base type of its nonterminal.
pub fn type_of(e: &Expr, env: &TypeEnv) -> Result<MiniType, TypeError> {
    match e {
        Expr::Int(_) => Ok(MiniType::Int),
        Expr::Bool(_) => Ok(MiniType::Bool),
        Expr::Var(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| fail(e, format!("unbound variable `{name}`"))),
        Expr::Nil(t) => Ok(MiniType::list(t.clone())),
        Expr::Hole(nt) => Ok(nt.ty.clone()),
        Expr::App(op, args) => {
            if args.len() != op.arity() {
                return Err(fail(e, format!("`{}` takes {} operands", op.symbol(), op.arity())));
            }
            let tys = args
                .iter()
                .map(|a| type_of(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            match op {
                Op::Plus | Op::Minus | Op::Times => {
                    expect(&args[0], &tys[0], &MiniType::Int)?;
                    expect(&args[1], &tys[1], &MiniType::Int)?;
                    Ok(MiniType::Int)
                }
                Op::Leq => {
                    expect(&args[0], &tys[0], &MiniType::Int)?;
                    expect(&args[1], &tys[1], &MiniType::Int)?;
                    Ok(MiniType::Bool)
                }
                Op::Eq => {
                    if tys[0] != tys[1] {
                        return Err(fail(e, format!("cannot compare {} with {}", tys[0], tys[1])));
                    }
                    Ok(MiniType::Bool)
                }
                Op::And => {
                    expect(&args[0], &tys[0], &MiniType::Bool)?;
                    expect(&args[1], &tys[1], &MiniType::Bool)?;
                    Ok(MiniType::Bool)
                }
                Op::Not => {
                    expect(&args[0], &tys[0], &MiniType::Bool)?;
                    Ok(MiniType::Bool)
                }
                Op::Ite => {
                    expect(&args[0], &tys[0], &MiniType::Bool)?;
                    if tys[1] != tys[2] {
                        return Err(fail(
                            e,
                            format!("branches have different types {} and {}", tys[1], tys[2]),
                        ));
                    }
                    Ok(tys[1].clone())
                }
                Op::Cons => {
                    let elem = elem_of(&args[1], tys[1].clone())?;
                    expect(&args[0], &tys[0], &elem)?;
                    Ok(tys[1].clone())
                }
                Op::Head => elem_of(&args[0], tys[0].clone()),
                Op::Tail => {
                    elem_of(&args[0], tys[0].clone())?;
                    Ok(tys[0].clone())
                }
                Op::IsEmpty => {
                    elem_of(&args[0], tys[0].clone())?;
                    Ok(MiniType::Bool)
                }
                Op::Size => {
                    elem_of(&args[0], tys[0].clone())?;
                    Ok(MiniType::Int)
                }
            }
        }
    }
}
