//! The target language: types, expressions with typed holes, runtime values,
//! and total plus three-valued partial evaluation.

mod eval;
mod syntax;
mod typing;

use std::collections::BTreeMap;
use std::fmt;

pub use eval::{eval, eval_traced, partial_eval, partial_eval_with};
pub use syntax::{expr_from_sexp, type_from_sexp, value_from_sexp, SyntaxError};
pub use typing::{type_of, TypeError};

use crate::grammar::Nonterminal;

/// Runtime bindings for evaluation.
pub type Env = BTreeMap<String, Value>;

/// Static bindings for type checking.
pub type TypeEnv = BTreeMap<String, MiniType>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MiniType {
    Int,
    Bool,
    List(Box<MiniType>),
    /// Only valid inside generic production rules.
    Var(String),
}

impl MiniType {
    pub fn list(elem: MiniType) -> MiniType {
        MiniType::List(Box::new(elem))
    }

    /// Number of type constructors, e.g. `(List (List Int))` has size 3.
    pub fn size(&self) -> usize {
        match self {
            MiniType::List(t) => 1 + t.size(),
            _ => 1,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            MiniType::Var(_) => false,
            MiniType::List(t) => t.is_ground(),
            _ => true,
        }
    }

    pub fn type_vars(&self, out: &mut Vec<String>) {
        match self {
            MiniType::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            MiniType::List(t) => t.type_vars(out),
            _ => {}
        }
    }

    pub fn substitute(&self, subst: &BTreeMap<String, MiniType>) -> MiniType {
        match self {
            MiniType::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            MiniType::List(t) => MiniType::list(t.substitute(subst)),
            _ => self.clone(),
        }
    }

    /// One-sided matching: extends `subst` so that `self[subst] == target`.
    /// Type variables only occur in `self`.
    pub fn match_against(&self, target: &MiniType, subst: &mut BTreeMap<String, MiniType>) -> bool {
        match (self, target) {
            (MiniType::Var(v), _) => match subst.get(v) {
                Some(bound) => bound == target,
                None => {
                    subst.insert(v.clone(), target.clone());
                    true
                }
            },
            (MiniType::List(a), MiniType::List(b)) => a.match_against(b, subst),
            (a, b) => a == b,
        }
    }

    /// Compact name used when deriving identifiers, e.g. `ListInt`.
    pub fn ident(&self) -> String {
        match self {
            MiniType::Int => "Int".into(),
            MiniType::Bool => "Bool".into(),
            MiniType::List(t) => format!("List{}", t.ident()),
            MiniType::Var(v) => v.clone(),
        }
    }
}

impl fmt::Display for MiniType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiniType::Int => f.write_str("Int"),
            MiniType::Bool => f.write_str("Bool"),
            MiniType::List(t) => write!(f, "(List {t})"),
            MiniType::Var(v) => write!(f, "'{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Plus,
    Minus,
    Times,
    Leq,
    Eq,
    And,
    Not,
    Ite,
    Cons,
    Head,
    Tail,
    IsEmpty,
    Size,
}

impl Op {
    pub const ALL: [Op; 13] = [
        Op::Plus,
        Op::Minus,
        Op::Times,
        Op::Leq,
        Op::Eq,
        Op::And,
        Op::Not,
        Op::Ite,
        Op::Cons,
        Op::Head,
        Op::Tail,
        Op::IsEmpty,
        Op::Size,
    ];

    pub fn arity(self) -> usize {
        match self {
            Op::Not | Op::Head | Op::Tail | Op::IsEmpty | Op::Size => 1,
            Op::Ite => 3,
            _ => 2,
        }
    }

    /// Surface syntax symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Plus => "+",
            Op::Minus => "-",
            Op::Times => "*",
            Op::Leq => "<=",
            Op::Eq => "=",
            Op::And => "and",
            Op::Not => "not",
            Op::Ite => "if",
            Op::Cons => "cons",
            Op::Head => "head",
            Op::Tail => "tail",
            Op::IsEmpty => "isEmpty",
            Op::Size => "size",
        }
    }

    /// AST tag used in corpus statistics and generated names.
    pub fn tag(self) -> &'static str {
        match self {
            Op::Plus => "Plus",
            Op::Minus => "Minus",
            Op::Times => "Times",
            Op::Leq => "Leq",
            Op::Eq => "Eq",
            Op::And => "And",
            Op::Not => "Not",
            Op::Ite => "Ite",
            Op::Cons => "Cons",
            Op::Head => "Head",
            Op::Tail => "Tail",
            Op::IsEmpty => "IsEmpty",
            Op::Size => "Size",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

/// Expressions of the target language. `Hole` is a typed placeholder `?N`
/// awaiting expansion by the nonterminal it carries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Nil(MiniType),
    Hole(Nonterminal),
    App(Op, Vec<Expr>),
}

impl Expr {
    pub fn app(op: Op, args: Vec<Expr>) -> Expr {
        assert_eq!(op.arity(), args.len(), "wrong arity for {}", op.symbol());
        Expr::App(op, args)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: Op, l: Expr, r: Expr) -> Expr {
        Expr::app(op, vec![l, r])
    }

    pub fn not(e: Expr) -> Expr {
        Expr::app(Op::Not, vec![e])
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::app(Op::Ite, vec![c, t, e])
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::binary(Op::And, l, r)
    }

    /// `l ⟹ r`, encoded as `(not (and l (not r)))`.
    pub fn implies(l: Expr, r: Expr) -> Expr {
        Expr::not(Expr::and(l, Expr::not(r)))
    }

    pub fn children(&self) -> &[Expr] {
        match self {
            Expr::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_complete(&self) -> bool {
        match self {
            Expr::Hole(_) => false,
            Expr::App(_, args) => args.iter().all(Expr::is_complete),
            _ => true,
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Expr::depth).max().unwrap_or(0)
    }

    pub fn hole_count(&self) -> usize {
        match self {
            Expr::Hole(_) => 1,
            Expr::App(_, args) => args.iter().map(Expr::hole_count).sum(),
            _ => 0,
        }
    }

    /// Holes in left-to-right (pre-order) order.
    pub fn holes(&self) -> Vec<&Nonterminal> {
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Nonterminal>) {
            match e {
                Expr::Hole(nt) => out.push(nt),
                Expr::App(_, args) => args.iter().for_each(|a| go(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn leftmost_hole(&self) -> Option<&Nonterminal> {
        match self {
            Expr::Hole(nt) => Some(nt),
            Expr::App(_, args) => args.iter().find_map(Expr::leftmost_hole),
            _ => None,
        }
    }

    /// Replaces the leftmost hole with `with`. Returns `None` for complete
    /// expressions.
    pub fn fill_leftmost(&self, with: &Expr) -> Option<Expr> {
        fn go(e: &Expr, with: &Expr) -> Result<Expr, ()> {
            match e {
                Expr::Hole(_) => Ok(with.clone()),
                Expr::App(op, args) => {
                    let mut out = Vec::with_capacity(args.len());
                    let mut done = false;
                    for a in args {
                        if !done {
                            if let Ok(filled) = go(a, with) {
                                out.push(filled);
                                done = true;
                                continue;
                            }
                        }
                        out.push(a.clone());
                    }
                    if done {
                        Ok(Expr::App(*op, out))
                    } else {
                        Err(())
                    }
                }
                _ => Err(()),
            }
        }
        go(self, with).ok()
    }

    /// Replaces every hole, left to right, with the next expression from `fills`.
    pub fn fill_holes(&self, fills: &mut impl Iterator<Item = Expr>) -> Expr {
        match self {
            Expr::Hole(_) => fills.next().expect("not enough hole fillers"),
            Expr::App(op, args) => Expr::App(*op, args.iter().map(|a| a.fill_holes(fills)).collect()),
            _ => self.clone(),
        }
    }

    /// Substitutes free occurrences of variable `name`.
    pub fn subst_var(&self, name: &str, with: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == name => with.clone(),
            Expr::App(op, args) => Expr::App(*op, args.iter().map(|a| a.subst_var(name, with)).collect()),
            _ => self.clone(),
        }
    }

    pub fn free_vars(&self) -> Vec<String> {
        fn go(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone())
                    }
                }
                Expr::App(_, args) => args.iter().for_each(|a| go(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Number of occurrences of each free variable.
    pub fn free_vars_counted(&self) -> BTreeMap<String, usize> {
        fn go(e: &Expr, out: &mut BTreeMap<String, usize>) {
            match e {
                Expr::Var(v) => *out.entry(v.clone()).or_default() += 1,
                Expr::App(_, args) => args.iter().for_each(|a| go(a, out)),
                _ => {}
            }
        }
        let mut out = BTreeMap::new();
        go(self, &mut out);
        out
    }

    /// Integer literals occurring in the expression, in first-occurrence order.
    pub fn int_literals(&self) -> Vec<i64> {
        fn go(e: &Expr, out: &mut Vec<i64>) {
            match e {
                Expr::Int(v) => {
                    if !out.contains(v) {
                        out.push(*v)
                    }
                }
                Expr::App(_, args) => args.iter().for_each(|a| go(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn at_path(&self, path: &[usize]) -> Option<&Expr> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i)?.at_path(rest),
        }
    }

    /// Returns a copy with the subexpression at `path` replaced.
    pub fn replace_at(&self, path: &[usize], with: Expr) -> Option<Expr> {
        match path.split_first() {
            None => Some(with),
            Some((&i, rest)) => match self {
                Expr::App(op, args) if i < args.len() => {
                    let mut args = args.clone();
                    args[i] = args[i].replace_at(rest, with)?;
                    Some(Expr::App(*op, args))
                }
                _ => None,
            },
        }
    }

    /// All subexpressions with their paths, in pre-order.
    pub fn subterms(&self) -> Vec<(Vec<usize>, &Expr)> {
        fn go<'a>(e: &'a Expr, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Expr)>) {
            out.push((path.clone(), e));
            for (i, c) in e.children().iter().enumerate() {
                path.push(i);
                go(c, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

/// Runtime values. `Err` is the propagating result of `head`/`tail` on an
/// empty list, the language's only runtime error.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    List(Vec<Value>),
    Err(&'static str),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Sum of absolute integer components plus list lengths; orders the
    /// bounded verification scan.
    pub fn magnitude(&self) -> u64 {
        match self {
            Value::Int(v) => v.unsigned_abs(),
            Value::Bool(b) => *b as u64,
            Value::List(items) => items.len() as u64 + items.iter().map(Value::magnitude).sum::<u64>(),
            Value::Err(_) => 0,
        }
    }

    /// A closed expression denoting this value (`elem` types empty lists).
    pub fn to_expr(&self, ty: &MiniType) -> Expr {
        match self {
            Value::Int(v) => Expr::Int(*v),
            Value::Bool(b) => Expr::Bool(*b),
            Value::List(items) => {
                let elem = match ty {
                    MiniType::List(t) => (**t).clone(),
                    _ => MiniType::Int,
                };
                items.iter().rev().fold(Expr::Nil(elem.clone()), |tail, v| {
                    Expr::app(Op::Cons, vec![v.to_expr(&elem), tail])
                })
            }
            Value::Err(_) => Expr::app(Op::Head, vec![Expr::Nil(MiniType::Int)]),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Err(reason) => write!(f, "<error: {reason}>"),
        }
    }
}

/// Result of partial evaluation: a definite value, or unknown because it
/// depends on how holes are completed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Partial {
    Known(Value),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriBool {
    True,
    False,
    Unknown,
}

impl Partial {
    pub fn truth(&self) -> TriBool {
        match self {
            Partial::Known(Value::Bool(true)) => TriBool::True,
            Partial::Known(Value::Bool(false)) => TriBool::False,
            _ => TriBool::Unknown,
        }
    }

    pub fn known(&self) -> Option<&Value> {
        match self {
            Partial::Known(v) => Some(v),
            Partial::Unknown => None,
        }
    }
}

/// Renders a valuation as `a=1 b=[2 3]`.
pub fn show_env(env: &Env) -> String {
    env.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}
