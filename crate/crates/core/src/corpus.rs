//! Grammar extraction from a corpus of mini-language functions.
//!
//! The depth-1 extractor counts expression kinds per type. The depth-2
//! extractor additionally conditions each kind on its parent operator and
//! argument position, encoded as labeled nonterminals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::grammarfile::{AnnType, GrammarFile, ProdBody, Production};
use crate::lang::{expr_from_sexp, type_from_sexp, type_of, Expr, MiniType, Op, TypeEnv};
use crate::sexpr::{self, Sexp, SexpError};

/// Name the `ensures` clause uses for the function result.
pub const RESULT: &str = "result";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("function `{function}`: {message}")]
    IllTyped { function: String, message: String },
    #[error("local bias multiplier must be positive, got {0}")]
    Multiplier(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<(String, MiniType)>,
    pub ret: MiniType,
    pub requires: Option<Expr>,
    /// Postcondition over the parameters and [`RESULT`].
    pub ensures: Option<Expr>,
    pub body: Expr,
}

impl Function {
    pub fn type_env(&self) -> TypeEnv {
        self.params.iter().cloned().collect()
    }

    fn check(&self) -> Result<(), CorpusError> {
        let err = |message: String| CorpusError::IllTyped {
            function: self.name.clone(),
            message,
        };
        let mut env = self.type_env();
        let body = type_of(&self.body, &env).map_err(|e| err(e.to_string()))?;
        if body != self.ret {
            return Err(err(format!("body has type {body}, declared {}", self.ret)));
        }
        if !self.body.is_complete() {
            return Err(err("body contains a hole".into()));
        }
        if let Some(r) = &self.requires {
            match type_of(r, &env) {
                Ok(MiniType::Bool) => {}
                Ok(t) => return Err(err(format!("precondition has type {t}"))),
                Err(e) => return Err(err(format!("precondition: {e}"))),
            }
        }
        env.insert(RESULT.to_string(), self.ret.clone());
        if let Some(r) = &self.ensures {
            match type_of(r, &env) {
                Ok(MiniType::Bool) => {}
                Ok(t) => return Err(err(format!("postcondition has type {t}"))),
                Err(e) => return Err(err(format!("postcondition: {e}"))),
            }
        }
        Ok(())
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(def {} (", self.name)?;
        for (i, (p, t)) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "({p} {t})")?;
        }
        write!(f, ") -> {}", self.ret)?;
        if let Some(r) = &self.requires {
            write!(f, "\n  (requires {r})")?;
        }
        if let Some(e) = &self.ensures {
            write!(f, "\n  (ensures {e})")?;
        }
        write!(f, "\n  {})", self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusProgram {
    pub functions: Vec<Function>,
}

impl CorpusProgram {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }
}

impl fmt::Display for CorpusProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for func in &self.functions {
            writeln!(f, "{func}")?;
        }
        Ok(())
    }
}

fn parse_function(s: &Sexp) -> Result<Function, CorpusError> {
    let items = match s.as_list() {
        Some(items) if s.head() == Some("def") => items,
        _ => return Err(s.error("expected `(def name ((p T) ...) -> T body)`").into()),
    };
    let (name, params, ret, rest) = match items {
        [_, Sexp::Atom(name, _), params, arrow, ret, rest @ ..] if arrow.is_atom("->") => (name, params, ret, rest),
        _ => return Err(s.error("expected `(def name ((p T) ...) -> T body)`").into()),
    };
    let params = params
        .as_list()
        .ok_or_else(|| params.error("expected a parameter list"))?
        .iter()
        .map(|p| match p.as_list() {
            Some([Sexp::Atom(n, _), t]) => Ok((n.clone(), type_from_sexp(t)?)),
            _ => Err(p.error("expected `(name Type)`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut f = Function {
        name: name.clone(),
        params,
        ret: type_from_sexp(ret)?,
        requires: None,
        ensures: None,
        body: Expr::Bool(true),
    };
    let Some((body, clauses)) = rest.split_last() else {
        return Err(s.error("function has no body").into());
    };
    for c in clauses {
        match (c.head(), c.as_list()) {
            (Some("requires"), Some([_, e])) if f.requires.is_none() => f.requires = Some(expr_from_sexp(e)?),
            (Some("ensures"), Some([_, e])) if f.ensures.is_none() => f.ensures = Some(expr_from_sexp(e)?),
            _ => return Err(c.error("expected one `(requires e)` and one `(ensures e)` at most").into()),
        }
    }
    f.body = expr_from_sexp(body)?;
    f.check()?;
    Ok(f)
}

/// Parses a sequence of `(def name ((p T) ...) -> T [(requires e)]
/// [(ensures e)] body)` entries and type-checks them.
pub fn parse_corpus(text: &str) -> Result<CorpusProgram, CorpusError> {
    let mut out = CorpusProgram::default();
    for s in sexpr::parse_all(text)? {
        let f = parse_function(&s)?;
        if out.function(&f.name).is_some() {
            return Err(s.error(format!("function `{}` is defined twice", f.name)).into());
        }
        out.functions.push(f);
    }
    Ok(out)
}

/// What is needed to rebuild an expression node from its children.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Variable(MiniType),
    Int(i64),
    Bool(bool),
    Nil(MiniType),
    /// Operator with its result type and, where the result does not
    /// determine it, the type of its first argument.
    Op(Op, MiniType, Option<MiniType>),
}

impl Kind {
    pub fn ty(&self) -> MiniType {
        match self {
            Kind::Variable(t) | Kind::Op(_, t, _) => t.clone(),
            Kind::Int(_) => MiniType::Int,
            Kind::Bool(_) => MiniType::Bool,
            Kind::Nil(t) => MiniType::list(t.clone()),
        }
    }

    /// Production name, e.g. `pIntTimes` or `pIntLiteral2`.
    pub fn name(&self) -> String {
        let ty = self.ty().ident();
        match self {
            Kind::Variable(_) => format!("p{ty}Variable"),
            Kind::Int(n) if *n < 0 => format!("p{ty}LiteralNeg{}", n.unsigned_abs()),
            Kind::Int(n) => format!("p{ty}Literal{n}"),
            Kind::Bool(true) => format!("p{ty}True"),
            Kind::Bool(false) => format!("p{ty}False"),
            Kind::Nil(_) => format!("p{ty}Nil"),
            Kind::Op(op, _, arg) => {
                let arg = arg.as_ref().map(|a| a.ident()).unwrap_or_default();
                format!("p{ty}{}{arg}", op.tag())
            }
        }
    }

    /// Tags for the axiom system.
    pub fn tags(&self) -> Vec<String> {
        let tags: &[&str] = match self {
            Kind::Variable(_) => &["top"],
            Kind::Int(0) => &["const", "0"],
            Kind::Int(_) | Kind::Bool(_) => &["const"],
            Kind::Nil(_) => &[],
            Kind::Op(op, _, _) => match op {
                Op::Plus => &["commut", "plus"],
                Op::Minus => &["minus"],
                Op::Times => &["commut", "times"],
                Op::And | Op::Eq => &["commut"],
                _ => &[],
            },
        };
        tags.iter().map(|t| t.to_string()).collect()
    }

    /// Body with parameters `v0, v1, ...` in argument order.
    fn body(&self) -> ProdBody {
        match self {
            Kind::Variable(t) => ProdBody::Variable(t.clone()),
            Kind::Int(n) => ProdBody::Expr(Expr::Int(*n)),
            Kind::Bool(b) => ProdBody::Expr(Expr::Bool(*b)),
            Kind::Nil(t) => ProdBody::Expr(Expr::Nil(t.clone())),
            Kind::Op(op, _, _) => ProdBody::Expr(Expr::App(
                *op,
                (0..op.arity()).map(|i| Expr::Var(format!("v{i}"))).collect(),
            )),
        }
    }
}

/// Parent operator and argument position of an occurrence; `None` at the
/// top of a function body.
pub type Context = Option<(Op, usize)>;

/// Label of the nonterminal for values of `ty` in `ctx`.
pub fn context_label(ty: &MiniType, ctx: Context) -> String {
    match ctx {
        None => format!("{}_TOPLEVEL", ty.ident()),
        Some((op, pos)) => format!("{}_{pos}_{}", ty.ident(), op.tag()),
    }
}

/// Every node of every body with its kind, context and child types.
fn occurrences(corpus: &CorpusProgram) -> Vec<(Kind, Context, Vec<MiniType>)> {
    let mut out = Vec::new();
    for f in &corpus.functions {
        let env = f.type_env();
        walk(&f.body, None, &env, &mut out);
    }
    out
}

fn walk(e: &Expr, ctx: Context, env: &TypeEnv, out: &mut Vec<(Kind, Context, Vec<MiniType>)>) {
    let ty = |e: &Expr| type_of(e, env).expect("corpus bodies are type-checked");
    let (kind, children) = match e {
        Expr::Int(n) => (Kind::Int(*n), Vec::new()),
        Expr::Bool(b) => (Kind::Bool(*b), Vec::new()),
        Expr::Var(_) => (Kind::Variable(ty(e)), Vec::new()),
        Expr::Nil(t) => (Kind::Nil(t.clone()), Vec::new()),
        Expr::Hole(_) => unreachable!("corpus bodies are complete"),
        Expr::App(op, args) => {
            let arg_types: Vec<MiniType> = args.iter().map(ty).collect();
            let extra = matches!(op, Op::Eq | Op::Size | Op::IsEmpty).then(|| arg_types[0].clone());
            (Kind::Op(*op, ty(e), extra), arg_types)
        }
    };
    out.push((kind, ctx, children));
    if let Expr::App(op, args) = e {
        for (i, a) in args.iter().enumerate() {
            walk(a, Some((*op, i)), env, out);
        }
    }
}

fn production(kind: &Kind, weight: usize, params: Vec<AnnType>, ret: AnnType, tags: Vec<String>) -> Production {
    Production {
        name: kind.name(),
        weight: weight as f64,
        tags,
        type_params: Vec::new(),
        params: params.into_iter().enumerate().map(|(i, t)| (format!("v{i}"), t)).collect(),
        ret,
        body: kind.body(),
    }
}

/// Depth-1 grammar: one production per expression kind, weighted by its
/// number of occurrences and tagged for the axiom system.
pub fn extract_depth1(corpus: &CorpusProgram) -> GrammarFile {
    let mut counts: BTreeMap<Kind, (usize, Vec<MiniType>)> = BTreeMap::new();
    for (kind, _, children) in occurrences(corpus) {
        counts.entry(kind).or_insert((0, children)).0 += 1;
    }
    let mut productions: Vec<Production> = counts
        .iter()
        .map(|(kind, (n, children))| {
            let params = children.iter().cloned().map(AnnType::Plain).collect();
            production(kind, *n, params, AnnType::Plain(kind.ty()), kind.tags())
        })
        .collect();
    productions.sort_by(|a, b| a.name.cmp(&b.name));
    GrammarFile {
        labels: Vec::new(),
        productions,
    }
}

/// Depth-2 grammar: one production per kind and parent context. Each type
/// occurring at the top of a body gets a start rule `T ::= T_TOPLEVEL`.
/// Productions carry no tags.
pub fn extract_depth2(corpus: &CorpusProgram) -> GrammarFile {
    let mut counts: BTreeMap<(Kind, Context), (usize, Vec<MiniType>)> = BTreeMap::new();
    let mut tops: BTreeMap<MiniType, usize> = BTreeMap::new();
    for (kind, ctx, children) in occurrences(corpus) {
        if ctx.is_none() {
            *tops.entry(kind.ty()).or_default() += 1;
        }
        counts.entry((kind, ctx)).or_insert((0, children)).0 += 1;
    }
    let mut labels: BTreeSet<(String, MiniType)> = BTreeSet::new();
    let mut productions = Vec::new();
    for ((kind, ctx), (n, children)) in &counts {
        let Kind::Op(op, ..) = kind else {
            let ret = context_label(&kind.ty(), *ctx);
            labels.insert((ret.clone(), kind.ty()));
            productions.push(production(kind, *n, Vec::new(), AnnType::Label(ret), Vec::new()));
            continue;
        };
        let params = children
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let l = context_label(t, Some((*op, i)));
                labels.insert((l.clone(), t.clone()));
                AnnType::Label(l)
            })
            .collect();
        let ret = context_label(&kind.ty(), *ctx);
        labels.insert((ret.clone(), kind.ty()));
        productions.push(production(kind, *n, params, AnnType::Label(ret), Vec::new()));
    }
    // A kind seen in several contexts gets the context in its name.
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for p in &productions {
        *seen.entry(p.name.clone()).or_default() += 1;
    }
    for p in &mut productions {
        if seen[&p.name] > 1 {
            p.name = format!("{}_{}", p.name, p.ret);
        }
    }
    for (ty, n) in tops {
        let top = context_label(&ty, None);
        productions.push(Production {
            name: format!("p{}Start", ty.ident()),
            weight: n as f64,
            tags: Vec::new(),
            type_params: Vec::new(),
            params: vec![("v0".into(), AnnType::Label(top))],
            ret: AnnType::Plain(ty),
            body: ProdBody::Expr(Expr::var("v0")),
        });
    }
    productions.sort_by(|a, b| a.name.cmp(&b.name));
    GrammarFile {
        labels: labels.into_iter().collect(),
        productions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Depth {
    #[default]
    One,
    Two,
}

pub fn extract(corpus: &CorpusProgram, depth: Depth) -> GrammarFile {
    match depth {
        Depth::One => extract_depth1(corpus),
        Depth::Two => extract_depth2(corpus),
    }
}

/// Default weight multiplier of the local-bias grammar.
pub const LOCAL_BIAS: f64 = 5.0;

/// Grammar extracted from the program under repair alone, with weights
/// multiplied by `multiplier`, to be merged with a corpus grammar.
pub fn extract_local_bias(program: &CorpusProgram, depth: Depth, multiplier: f64) -> Result<GrammarFile, CorpusError> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(CorpusError::Multiplier(multiplier));
    }
    Ok(extract(program, depth).scaled(multiplier))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(bodies: &[&str]) -> CorpusProgram {
        let text: String = bodies
            .iter()
            .enumerate()
            .map(|(i, b)| format!("(def f{i} ((x Int) (y Int)) -> Int {b})\n"))
            .collect();
        parse_corpus(&text).unwrap()
    }

    fn weights(gf: &GrammarFile) -> Vec<(String, f64)> {
        gf.productions.iter().map(|p| (p.name.clone(), p.weight)).collect()
    }

    #[test]
    fn depth1_times_two() {
        let gf = extract_depth1(&corpus(&["(* x 2)"]));
        assert_eq!(
            gf.to_string(),
            "production 1 [const] pIntLiteral2 () -> Int 2\n\
             production 1 [commut,times] pIntTimes (v0 Int) (v1 Int) -> Int (* v0 v1)\n\
             production 1 [top] pIntVariable () -> Int (variable Int)\n"
        );
    }

    #[test]
    fn depth1_counts() {
        let gf = extract_depth1(&corpus(&["(+ x x)", "(+ y 1)"]));
        assert_eq!(
            weights(&gf),
            [("pIntLiteral1".into(), 1.0), ("pIntPlus".into(), 2.0), ("pIntVariable".into(), 3.0)]
        );
        assert!(extract_depth1(&CorpusProgram::default()).productions.is_empty());
    }

    #[test]
    fn depth2_times_two() {
        let gf = extract_depth2(&corpus(&["(* x 2)"]));
        assert_eq!(
            gf.to_string(),
            "label Int_0_Times Int\n\
             label Int_1_Times Int\n\
             label Int_TOPLEVEL Int\n\
             production 1 [] pIntLiteral2 () -> Int_1_Times 2\n\
             production 1 [] pIntStart (v0 Int_TOPLEVEL) -> Int v0\n\
             production 1 [] pIntTimes (v0 Int_0_Times) (v1 Int_1_Times) -> Int_TOPLEVEL (* v0 v1)\n\
             production 1 [] pIntVariable () -> Int_0_Times (variable Int)\n"
        );
        assert!(extract_depth2(&CorpusProgram::default()).productions.is_empty());
    }

    #[test]
    fn depth2_contexts() {
        let gf = extract_depth2(&corpus(&["(+ 1 (+ 1 x))"]));
        assert_eq!(
            weights(&gf),
            [
                ("pIntLiteral1".into(), 2.0),
                ("pIntPlus_Int_1_Plus".into(), 1.0),
                ("pIntPlus_Int_TOPLEVEL".into(), 1.0),
                ("pIntStart".into(), 1.0),
                ("pIntVariable".into(), 1.0),
            ]
        );
    }

    #[test]
    fn polymorphic_kinds_record_argument_types() {
        let c = parse_corpus(
            "(def f ((l (List Int)) (b Bool)) -> Bool (and (= (size l) 0) (= b (isEmpty (nil Bool)))))",
        )
        .unwrap();
        let names: Vec<String> = extract_depth1(&c).productions.into_iter().map(|p| p.name).collect();
        assert_eq!(
            names,
            [
                "pBoolAnd",
                "pBoolEqBool",
                "pBoolEqInt",
                "pBoolIsEmptyListBool",
                "pBoolVariable",
                "pIntLiteral0",
                "pIntSizeListInt",
                "pListBoolNil",
                "pListIntVariable"
            ]
        );
    }

    #[test]
    fn local_bias_scales() {
        let c = corpus(&["(+ x 1)"]);
        let gf = extract_local_bias(&c, Depth::One, LOCAL_BIAS).unwrap();
        assert!(gf.productions.iter().all(|p| p.weight == 5.0));
        assert!(extract_local_bias(&c, Depth::One, 0.0).is_err());
    }

    #[test]
    fn parses_contracts() {
        let c = parse_corpus(
            "# absolute value\n(def abs ((a Int)) -> Int (ensures (<= 0 result)) (if (<= 0 a) a (- 0 a)))",
        )
        .unwrap();
        let f = c.function("abs").unwrap();
        assert!(f.requires.is_none());
        assert_eq!(f.ensures.as_ref().unwrap().to_string(), "(<= 0 result)");
        assert_eq!(parse_corpus(&c.to_string()).unwrap(), c);
        assert!(parse_corpus("(def f ((a Int)) -> Bool (+ a 1))").is_err());
        assert!(parse_corpus("(def f ((a Int)) -> Int (ensures (+ result 1)) a)").is_err());
        assert!(parse_corpus("(def f ((a Int)) -> Int a) (def f ((a Int)) -> Int a)").is_err());
    }
}
