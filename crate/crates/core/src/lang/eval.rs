//! Total evaluation of complete expressions and three-valued partial
//! evaluation of expressions with holes.
//!
//! Two operators are deliberately non-strict so that partial evaluation is
//! sound for every completion of the holes:
//!
//! * `and` is false as soon as either operand is false, even if the other
//!   operand is an error;
//! * `if` with an erroneous condition yields the common value of its
//!   branches when they agree, and the error otherwise.
//!
//! Every other operator is strict and propagates `Value::Err`.

use super::{Env, Expr, Op, Partial, Value};

const HEAD_OF_EMPTY: &str = "head of empty list";
const TAIL_OF_EMPTY: &str = "tail of empty list";

/// Applies a strict operator to evaluated operands.
fn apply_strict(op: Op, args: &[Value]) -> Value {
    if let Some(err) = args.iter().find(|v| matches!(v, Value::Err(_))) {
        return err.clone();
    }
    match (op, args) {
        (Op::Plus, [Value::Int(a), Value::Int(b)]) => Value::Int(a.wrapping_add(*b)),
        (Op::Minus, [Value::Int(a), Value::Int(b)]) => Value::Int(a.wrapping_sub(*b)),
        (Op::Times, [Value::Int(a), Value::Int(b)]) => Value::Int(a.wrapping_mul(*b)),
        (Op::Leq, [Value::Int(a), Value::Int(b)]) => Value::Bool(a <= b),
        (Op::Eq, [a, b]) => Value::Bool(a == b),
        (Op::Not, [Value::Bool(b)]) => Value::Bool(!b),
        (Op::Cons, [h, Value::List(t)]) => {
            let mut items = Vec::with_capacity(t.len() + 1);
            items.push(h.clone());
            items.extend(t.iter().cloned());
            Value::List(items)
        }
        (Op::Head, [Value::List(items)]) => items.first().cloned().unwrap_or(Value::Err(HEAD_OF_EMPTY)),
        (Op::Tail, [Value::List(items)]) => {
            if items.is_empty() {
                Value::Err(TAIL_OF_EMPTY)
            } else {
                Value::List(items[1..].to_vec())
            }
        }
        (Op::IsEmpty, [Value::List(items)]) => Value::Bool(items.is_empty()),
        (Op::Size, [Value::List(items)]) => Value::Int(items.len() as i64),
        _ => panic!("ill-typed application of {} to {args:?}", op.symbol()),
    }
}

fn and_values(l: &Value, r: &Value) -> Value {
    match (l, r) {
        (Value::Bool(false), _) | (_, Value::Bool(false)) => Value::Bool(false),
        (Value::Err(_), _) => l.clone(),
        (_, Value::Err(_)) => r.clone(),
        (Value::Bool(true), Value::Bool(true)) => Value::Bool(true),
        _ => panic!("ill-typed conjunction of {l:?} and {r:?}"),
    }
}

fn lookup<'a>(env: &'a Env, name: &str) -> &'a Value {
    env.get(name)
        .unwrap_or_else(|| panic!("unbound variable `{name}` during evaluation"))
}

/// Evaluates a complete expression.
///
/// # Panics
///
/// On holes, unbound variables or ill-typed operands; callers type-check
/// first.
pub fn eval(e: &Expr, env: &Env) -> Value {
    match e {
        Expr::Int(v) => Value::Int(*v),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var(name) => lookup(env, name).clone(),
        Expr::Nil(_) => Value::List(Vec::new()),
        Expr::Hole(nt) => panic!("cannot evaluate hole of {nt}"),
        Expr::App(Op::And, args) => and_values(&eval(&args[0], env), &eval(&args[1], env)),
        Expr::App(Op::Ite, args) => match eval(&args[0], env) {
            Value::Bool(true) => eval(&args[1], env),
            Value::Bool(false) => eval(&args[2], env),
            err @ Value::Err(_) => {
                let t = eval(&args[1], env);
                if t == eval(&args[2], env) {
                    t
                } else {
                    err
                }
            }
            other => panic!("ill-typed condition {other:?}"),
        },
        // Operators take at most three arguments, which stay on the stack.
        Expr::App(op, args) => {
            let mut vals = [Value::Int(0), Value::Int(0), Value::Int(0)];
            for (slot, a) in vals.iter_mut().zip(args) {
                *slot = eval(a, env);
            }
            apply_strict(*op, &vals[..args.len()])
        }
    }
}

/// Evaluates like [`eval`], reporting the path of every subexpression that
/// is actually evaluated (untaken `if` branches are skipped).
pub fn eval_traced(e: &Expr, env: &Env, visit: &mut dyn FnMut(&[usize])) -> Value {
    let mut path = Vec::new();
    eval_at(e, env, &mut path, visit)
}

fn eval_at(e: &Expr, env: &Env, path: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) -> Value {
    visit(path);
    let child = |i: usize, path: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])| {
        path.push(i);
        let v = eval_at(&e.children()[i], env, path, visit);
        path.pop();
        v
    };
    match e {
        Expr::Int(v) => Value::Int(*v),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var(name) => lookup(env, name).clone(),
        Expr::Nil(_) => Value::List(Vec::new()),
        Expr::Hole(nt) => panic!("cannot evaluate hole of {nt}"),
        Expr::App(Op::And, _) => {
            let l = child(0, path, visit);
            let r = child(1, path, visit);
            and_values(&l, &r)
        }
        Expr::App(Op::Ite, _) => match child(0, path, visit) {
            Value::Bool(true) => child(1, path, visit),
            Value::Bool(false) => child(2, path, visit),
            err @ Value::Err(_) => {
                let t = child(1, path, visit);
                let f = child(2, path, visit);
                if t == f {
                    t
                } else {
                    err
                }
            }
            other => panic!("ill-typed condition {other:?}"),
        },
        Expr::App(op, args) => {
            let vals: Vec<Value> = (0..args.len()).map(|i| child(i, path, visit)).collect();
            apply_strict(*op, &vals)
        }
    }
}

/// Partially evaluates an expression that may contain holes.
pub fn partial_eval(e: &Expr, env: &Env) -> Partial {
    pe(e, env, None)
}

/// Like [`partial_eval`] with one extra binding that shadows `env`; used
/// to bind the output variable to a partially evaluated candidate.
pub fn partial_eval_with(e: &Expr, env: &Env, extra: (&str, &Partial)) -> Partial {
    pe(e, env, Some(extra))
}

fn pe(e: &Expr, env: &Env, extra: Option<(&str, &Partial)>) -> Partial {
    match e {
        Expr::Int(v) => Partial::Known(Value::Int(*v)),
        Expr::Bool(b) => Partial::Known(Value::Bool(*b)),
        Expr::Var(name) => match extra {
            Some((x, p)) if x == name => p.clone(),
            _ => Partial::Known(lookup(env, name).clone()),
        },
        Expr::Nil(_) => Partial::Known(Value::List(Vec::new())),
        Expr::Hole(_) => Partial::Unknown,
        Expr::App(Op::And, args) => {
            let l = pe(&args[0], env, extra);
            if l == Partial::Known(Value::Bool(false)) {
                return l;
            }
            let r = pe(&args[1], env, extra);
            match (l, r) {
                (_, f @ Partial::Known(Value::Bool(false))) => f,
                (Partial::Known(l), Partial::Known(r)) => Partial::Known(and_values(&l, &r)),
                _ => Partial::Unknown,
            }
        }
        Expr::App(Op::Ite, args) => match pe(&args[0], env, extra) {
            Partial::Known(Value::Bool(true)) => pe(&args[1], env, extra),
            Partial::Known(Value::Bool(false)) => pe(&args[2], env, extra),
            cond => {
                let t = pe(&args[1], env, extra);
                let f = pe(&args[2], env, extra);
                match (t, f, cond) {
                    (Partial::Known(t), Partial::Known(f), _) if t == f => Partial::Known(t),
                    (Partial::Known(_), Partial::Known(_), Partial::Known(err)) => Partial::Known(err),
                    _ => Partial::Unknown,
                }
            }
        },
        Expr::App(op, args) => {
            // An error operand decides the result even next to holes.
            let mut vals = [Value::Int(0), Value::Int(0), Value::Int(0)];
            let mut unknown = false;
            for (slot, a) in vals.iter_mut().zip(args) {
                match pe(a, env, extra) {
                    Partial::Known(v @ Value::Err(_)) => return Partial::Known(v),
                    Partial::Known(v) => *slot = v,
                    Partial::Unknown => unknown = true,
                }
            }
            if unknown {
                Partial::Unknown
            } else {
                Partial::Known(apply_strict(*op, &vals[..args.len()]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Nonterminal;
    use crate::lang::MiniType;

    fn env(pairs: &[(&str, Value)]) -> Env {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn int_hole() -> Expr {
        Expr::Hole(Nonterminal::plain(MiniType::Int))
    }

    fn bool_hole() -> Expr {
        Expr::Hole(Nonterminal::plain(MiniType::Bool))
    }

    #[test]
    fn arithmetic_and_lists() {
        let e = Expr::binary(Op::Plus, Expr::var("x"), Expr::Int(1));
        assert_eq!(eval(&e, &env(&[("x", Value::Int(4))])), Value::Int(5));

        let nil = Expr::Nil(MiniType::Int);
        assert_eq!(
            eval(&Expr::app(Op::Head, vec![nil.clone()]), &Env::new()),
            Value::Err("head of empty list")
        );
        let one = Expr::app(Op::Cons, vec![Expr::Int(7), nil]);
        assert_eq!(eval(&Expr::app(Op::Size, vec![one]), &Env::new()), Value::Int(1));
    }

    #[test]
    fn errors_propagate_through_strict_operators() {
        let err = Expr::app(Op::Tail, vec![Expr::Nil(MiniType::Int)]);
        let e = Expr::app(Op::Size, vec![err.clone()]);
        assert_eq!(eval(&e, &Env::new()), Value::Err("tail of empty list"));
        let e = Expr::binary(Op::Eq, err, Expr::Nil(MiniType::Int));
        assert!(matches!(eval(&e, &Env::new()), Value::Err(_)));
    }

    #[test]
    fn false_dominates_errors_in_conjunction() {
        let err = Expr::binary(
            Op::Leq,
            Expr::app(Op::Head, vec![Expr::Nil(MiniType::Int)]),
            Expr::Int(0),
        );
        let e = Expr::and(err.clone(), Expr::Bool(false));
        assert_eq!(eval(&e, &Env::new()), Value::Bool(false));
        let e = Expr::and(Expr::Bool(true), err);
        assert!(matches!(eval(&e, &Env::new()), Value::Err(_)));
    }

    #[test]
    fn wrapping_overflow() {
        let e = Expr::binary(Op::Plus, Expr::Int(i64::MAX), Expr::Int(1));
        assert_eq!(eval(&e, &Env::new()), Value::Int(i64::MIN));
    }

    #[test]
    fn partial_short_circuit() {
        let e = Expr::and(Expr::Bool(false), bool_hole());
        assert_eq!(partial_eval(&e, &Env::new()), Partial::Known(Value::Bool(false)));
        let e = Expr::and(bool_hole(), Expr::Bool(false));
        assert_eq!(partial_eval(&e, &Env::new()), Partial::Known(Value::Bool(false)));
        let e = Expr::and(Expr::Bool(true), bool_hole());
        assert_eq!(partial_eval(&e, &Env::new()), Partial::Unknown);
    }

    #[test]
    fn partial_taken_branch() {
        let e = Expr::ite(
            Expr::binary(Op::Leq, Expr::var("a"), Expr::Int(3)),
            Expr::var("a"),
            int_hole(),
        );
        let env = env(&[("a", Value::Int(2))]);
        assert_eq!(partial_eval(&e, &env), Partial::Known(Value::Int(2)));
        let env5 = [("a".to_string(), Value::Int(5))].into_iter().collect();
        assert_eq!(partial_eval(&e, &env5), Partial::Unknown);
    }

    #[test]
    fn partial_same_branches() {
        let e = Expr::ite(bool_hole(), Expr::Int(5), Expr::Int(5));
        assert_eq!(partial_eval(&e, &Env::new()), Partial::Known(Value::Int(5)));
        let e = Expr::ite(bool_hole(), Expr::Int(5), Expr::Int(6));
        assert_eq!(partial_eval(&e, &Env::new()), Partial::Unknown);
    }

    #[test]
    fn partial_strict_unknown() {
        let e = Expr::binary(Op::Plus, Expr::Int(1), int_hole());
        assert_eq!(partial_eval(&e, &Env::new()), Partial::Unknown);
        let e = Expr::not(bool_hole());
        assert_eq!(partial_eval(&e, &Env::new()).truth(), crate::lang::TriBool::Unknown);
    }

    #[test]
    fn extra_binding_shadows() {
        let e = Expr::binary(Op::Eq, Expr::var("x"), Expr::Int(6));
        let env = env(&[("x", Value::Int(6))]);
        let bound = Partial::Known(Value::Int(5));
        assert_eq!(
            partial_eval_with(&e, &env, ("x", &bound)),
            Partial::Known(Value::Bool(false))
        );
        assert_eq!(partial_eval_with(&e, &env, ("x", &Partial::Unknown)), Partial::Unknown);
    }

    #[test]
    fn traced_evaluation_skips_untaken_branch() {
        let e = Expr::ite(
            Expr::binary(Op::Leq, Expr::Int(0), Expr::var("a")),
            Expr::var("a"),
            Expr::var("a"),
        );
        let mut seen = Vec::new();
        eval_traced(&e, &env(&[("a", Value::Int(-3))]), &mut |p| seen.push(p.to_vec()));
        assert!(seen.contains(&vec![2]));
        assert!(!seen.contains(&vec![1]));
        assert!(seen.contains(&vec![0, 1]));
    }
}
