//! Surface syntax: `(+ e1 e2)`, `(if c t e)`, `(nil Int)`, `(? Int NZ)`, ...

use std::fmt;
use std::str::FromStr;

use super::{eval, type_of, Expr, MiniType, Op, TypeEnv, Value};
use crate::grammar::Nonterminal;
use crate::sexpr::{self, Sexp, SexpError};

pub type SyntaxError = SexpError;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Nil(t) => write!(f, "(nil {t})"),
            Expr::Hole(nt) => match &nt.label {
                None => write!(f, "(? {})", nt.ty),
                Some(l) => write!(f, "(? {} {l})", nt.ty),
            },
            Expr::App(op, args) => {
                write!(f, "({}", op.symbol())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || "_.'!".contains(c))
        && !matches!(s, "true" | "false" | "nil")
}

pub fn type_from_sexp(s: &Sexp) -> Result<MiniType, SyntaxError> {
    match s {
        Sexp::Atom(a, _) => match a.as_str() {
            "Int" => Ok(MiniType::Int),
            "Bool" => Ok(MiniType::Bool),
            v if v.starts_with('\'') && v.len() > 1 => Ok(MiniType::Var(v[1..].to_string())),
            other => Err(s.error(format!("unknown type `{other}`"))),
        },
        Sexp::List(items, _) if items.len() == 2 && items[0].is_atom("List") => {
            Ok(MiniType::list(type_from_sexp(&items[1])?))
        }
        _ => Err(s.error(format!("malformed type `{s}`"))),
    }
}

pub fn expr_from_sexp(s: &Sexp) -> Result<Expr, SyntaxError> {
    match s {
        Sexp::Atom(a, _) => {
            if let Ok(v) = a.parse::<i64>() {
                Ok(Expr::Int(v))
            } else if a == "true" {
                Ok(Expr::Bool(true))
            } else if a == "false" {
                Ok(Expr::Bool(false))
            } else if is_identifier(a) {
                Ok(Expr::Var(a.clone()))
            } else {
                Err(s.error(format!("invalid identifier `{a}`")))
            }
        }
        Sexp::List(items, _) => {
            let head = items
                .first()
                .and_then(Sexp::as_atom)
                .ok_or_else(|| s.error("expected an operator"))?;
            let args = &items[1..];
            match head {
                "nil" => match args {
                    [t] => Ok(Expr::Nil(type_from_sexp(t)?)),
                    _ => Err(s.error("`nil` takes exactly one type")),
                },
                "?" => match args {
                    [t] => Ok(Expr::Hole(Nonterminal::plain(type_from_sexp(t)?))),
                    [t, Sexp::Atom(label, _)] => Ok(Expr::Hole(Nonterminal::labeled(
                        type_from_sexp(t)?,
                        label.clone(),
                    ))),
                    _ => Err(s.error("malformed hole, expected `(? T)` or `(? T label)`")),
                },
                sym => {
                    let op = Op::from_symbol(sym)
                        .ok_or_else(|| s.error(format!("unknown operator `{sym}`")))?;
                    if args.len() != op.arity() {
                        return Err(s.error(format!(
                            "`{sym}` takes {} operands, found {}",
                            op.arity(),
                            args.len()
                        )));
                    }
                    let args = args.iter().map(expr_from_sexp).collect::<Result<_, _>>()?;
                    Ok(Expr::App(op, args))
                }
            }
        }
        _ => Err(s.error(format!("unexpected `{s}` in expression"))),
    }
}

/// Reads a value of type `ty`: a literal, a bracketed list `[1 2 3]`, or
/// any closed expression, which is evaluated.
pub fn value_from_sexp(s: &Sexp, ty: &MiniType) -> Result<Value, SyntaxError> {
    if let (Sexp::Bracket(items, _), MiniType::List(elem)) = (s, ty) {
        return Ok(Value::List(
            items
                .iter()
                .map(|i| value_from_sexp(i, elem))
                .collect::<Result<_, _>>()?,
        ));
    }
    let e = expr_from_sexp(s)?;
    if !e.is_complete() || !e.free_vars().is_empty() {
        return Err(s.error(format!("`{s}` is not a closed value")));
    }
    let actual = type_of(&e, &TypeEnv::new()).map_err(|err| s.error(err.to_string()))?;
    if &actual != ty {
        return Err(s.error(format!("expected a value of type {ty}, found {actual}")));
    }
    Ok(eval(&e, &Default::default()))
}

impl FromStr for Expr {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        expr_from_sexp(&sexpr::parse_one(s)?)
    }
}

impl FromStr for MiniType {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        type_from_sexp(&sexpr::parse_one(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_print() {
        let text = "(if (<= 0 a) a (- 0 a))";
        let e: Expr = text.parse().unwrap();
        assert_eq!(e.to_string(), text);
        let holes: Expr = "(+ (? Int) (? (List Int) NZ))".parse().unwrap();
        assert_eq!(holes.hole_count(), 2);
        assert_eq!(holes.to_string(), "(+ (? Int) (? (List Int) NZ))");
        assert_eq!("(List 'A)".parse::<MiniType>().unwrap().to_string(), "(List 'A)");
        assert_eq!("-3".parse::<Expr>().unwrap(), Expr::Int(-3));
    }

    #[test]
    fn parse_errors() {
        assert!("(+ 1)".parse::<Expr>().is_err());
        assert!("(frob 1 2)".parse::<Expr>().is_err());
        assert!("(nil)".parse::<Expr>().is_err());
        assert!("Float".parse::<MiniType>().is_err());
        assert!("9x".parse::<Expr>().is_err());
    }

    #[test]
    fn values() {
        let lt = MiniType::list(MiniType::Int);
        let s = sexpr::parse_one("[1 -2 3]").unwrap();
        assert_eq!(
            value_from_sexp(&s, &lt).unwrap(),
            Value::List(vec![Value::Int(1), Value::Int(-2), Value::Int(3)])
        );
        let s = sexpr::parse_one("(cons 4 (nil Int))").unwrap();
        assert_eq!(value_from_sexp(&s, &lt).unwrap(), Value::List(vec![Value::Int(4)]));
        let s = sexpr::parse_one("true").unwrap();
        assert!(value_from_sexp(&s, &MiniType::Int).is_err());
    }

    fn arb_int_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-20i64..20).prop_map(Expr::Int),
            Just(Expr::var("x")),
            Just(Expr::Hole(Nonterminal::plain(MiniType::Int))),
            Just(Expr::Hole(Nonterminal::labeled(MiniType::Int, "NZ".into()))),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(Op::Plus, a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::binary(Op::Times, a, b)),
                (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| Expr::ite(
                    Expr::binary(Op::Leq, a, b),
                    c.clone(),
                    c
                )),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_int_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(printed.parse::<Expr>().unwrap(), e);
        }
    }
}
