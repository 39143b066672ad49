//! Textual grammar files.
//!
//! One declaration per line, `#` starts a comment:
//!
//! ```text
//! label NZ Int
//! production 10 [plus,commut] plus (a NZ) (b NZ) -> NZ (+ a b)
//! production 20 [top] vInt () -> NZ (variable Int)
//! production 5 [] single ['A] (a 'A) -> (List 'A) (cons a (nil 'A))
//! ```
//!
//! A production's parameters become the child slots of its template; every
//! parameter must occur exactly once in the body. Other identifiers in the
//! body are ordinary variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::grammar::{
    apply_axioms, discover_types, instantiate_constant_rules, instantiate_generics,
    instantiate_variable_rules, normalize_declared, GrammarError, Nonterminal, Pcfg, Rule, RuleBody,
};
use crate::lang::{expr_from_sexp, type_from_sexp, type_of, Expr, MiniType, TypeEnv};
use crate::sexpr::{self, Sexp, SexpError};

/// The grammar used when a problem names none.
pub const DEFAULT_GRAMMAR: &str = include_str!("../../../grammars/default.grammar");

#[derive(Debug, Error)]
pub enum GrammarFileError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("production `{production}` uses parameter `{param}` {count} times (expected once)")]
    ParamUse {
        production: String,
        param: String,
        count: usize,
    },
    #[error("label `{0}` is declared with two different base types")]
    LabelConflict(String),
    #[error("production `{production}` is ill-typed: {message}")]
    IllTyped { production: String, message: String },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// A parameter or return type: a declared label or a plain type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnnType {
    Plain(MiniType),
    Label(String),
}

impl fmt::Display for AnnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnType::Plain(t) => write!(f, "{t}"),
            AnnType::Label(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProdBody {
    Expr(Expr),
    Variable(MiniType),
    Constant(MiniType),
}

impl fmt::Display for ProdBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProdBody::Expr(e) => write!(f, "{e}"),
            ProdBody::Variable(t) => write!(f, "(variable {t})"),
            ProdBody::Constant(t) => write!(f, "(constant {t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    pub name: String,
    pub weight: f64,
    pub tags: Vec<String>,
    pub type_params: Vec<String>,
    pub params: Vec<(String, AnnType)>,
    pub ret: AnnType,
    pub body: ProdBody,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GrammarFile {
    pub labels: Vec<(String, MiniType)>,
    pub productions: Vec<Production>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "production {} [{}] {}", self.weight, self.tags.join(","), self.name)?;
        if !self.type_params.is_empty() {
            let ps: Vec<String> = self.type_params.iter().map(|p| format!("'{p}")).collect();
            write!(f, " [{}]", ps.join(" "))?;
        }
        if self.params.is_empty() {
            f.write_str(" ()")?;
        }
        for (p, t) in &self.params {
            write!(f, " ({p} {t})")?;
        }
        write!(f, " -> {} {}", self.ret, self.body)
    }
}

impl fmt::Display for GrammarFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, ty) in &self.labels {
            writeln!(f, "label {name} {ty}")?;
        }
        for p in &self.productions {
            writeln!(f, "{p}")?;
        }
        Ok(())
    }
}

fn ann_type(s: &Sexp, labels: &BTreeSet<String>) -> Result<AnnType, SexpError> {
    if let Some(a) = s.as_atom() {
        if labels.contains(a) {
            return Ok(AnnType::Label(a.to_string()));
        }
    }
    type_from_sexp(s).map(AnnType::Plain).map_err(|e| {
        if s.as_atom().is_some() {
            s.error(format!("undeclared label `{s}`"))
        } else {
            e
        }
    })
}

fn parse_body(s: &Sexp) -> Result<ProdBody, SexpError> {
    if let Some(items) = s.as_list() {
        match (s.head(), items) {
            (Some("variable"), [_, t]) => return Ok(ProdBody::Variable(type_from_sexp(t)?)),
            (Some("constant"), [_, t]) => return Ok(ProdBody::Constant(type_from_sexp(t)?)),
            _ => {}
        }
    }
    Ok(ProdBody::Expr(expr_from_sexp(s)?))
}

fn parse_production(items: &[Sexp], line: usize, labels: &BTreeSet<String>) -> Result<Production, SexpError> {
    let err = |m: &str| SexpError::new(line, m);
    let mut it = items.iter().skip(1).peekable();
    let weight_s = it.next().ok_or_else(|| err("missing weight"))?;
    let weight: f64 = weight_s
        .as_atom()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| weight_s.error("weight must be a number"))?;
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(weight_s.error("weight must be positive"));
    }
    let tags = match it.next() {
        Some(Sexp::Bracket(ts, _)) => ts
            .iter()
            .map(|t| t.as_atom().map(str::to_string).ok_or_else(|| t.error("tags must be names")))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(err("expected a tag list like `[]` or `[plus,commut]`")),
    };
    let name = it
        .next()
        .and_then(Sexp::as_atom)
        .ok_or_else(|| err("missing production name"))?
        .to_string();
    let mut type_params = Vec::new();
    if let Some(Sexp::Bracket(ps, _)) = it.peek() {
        for p in ps {
            match p.as_atom() {
                Some(a) if a.starts_with('\'') && a.len() > 1 => type_params.push(a[1..].to_string()),
                _ => return Err(p.error("type parameters look like `'A`")),
            }
        }
        it.next();
    }
    let mut params = Vec::new();
    loop {
        match it.next() {
            Some(s) if s.is_atom("->") => break,
            Some(Sexp::List(p, _)) if p.is_empty() => {}
            Some(s @ Sexp::List(p, _)) => match p.as_slice() {
                [Sexp::Atom(name, _), t] => params.push((name.clone(), ann_type(t, labels)?)),
                _ => return Err(s.error("parameters look like `(name Type)`")),
            },
            Some(s) => return Err(s.error(format!("unexpected `{s}` before `->`"))),
            None => return Err(err("missing `->`")),
        }
    }
    let ret = ann_type(it.next().ok_or_else(|| err("missing return type"))?, labels)?;
    let body = parse_body(it.next().ok_or_else(|| err("missing body"))?)?;
    if let Some(extra) = it.next() {
        return Err(extra.error(format!("unexpected `{extra}` after the body")));
    }
    Ok(Production {
        name,
        weight,
        tags,
        type_params,
        params,
        ret,
        body,
    })
}

/// Parses a grammar file. Labels may be used before their declaration.
pub fn parse_grammar_file(text: &str) -> Result<GrammarFile, GrammarFileError> {
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let items = sexpr::parse_all_at(line, i + 1)?;
        if !items.is_empty() {
            lines.push((i + 1, items));
        }
    }
    let mut gf = GrammarFile::default();
    for (line, items) in &lines {
        if items[0].is_atom("label") {
            match items.as_slice() {
                [_, Sexp::Atom(name, _), ty] => gf.labels.push((name.clone(), type_from_sexp(ty)?)),
                _ => return Err(SexpError::new(*line, "expected `label Name Type`").into()),
            }
        }
    }
    let label_names: BTreeSet<String> = gf.labels.iter().map(|(n, _)| n.clone()).collect();
    let mut names = BTreeSet::new();
    for (line, items) in &lines {
        match items[0].as_atom() {
            Some("label") => {}
            Some("production") => {
                let p = parse_production(items, *line, &label_names)?;
                if !names.insert(p.name.clone()) {
                    return Err(SexpError::new(*line, format!("duplicate production `{}`", p.name)).into());
                }
                gf.productions.push(p);
            }
            _ => return Err(SexpError::new(*line, "expected `label` or `production`").into()),
        }
    }
    Ok(gf)
}

impl GrammarFile {
    fn nonterminal(&self, t: &AnnType) -> Nonterminal {
        match t {
            AnnType::Plain(ty) => Nonterminal::plain(ty.clone()),
            AnnType::Label(l) => {
                let ty = self
                    .labels
                    .iter()
                    .find(|(n, _)| n == l)
                    .map(|(_, t)| t.clone())
                    .expect("labels are checked at parse time");
                Nonterminal::labeled(ty, l.clone())
            }
        }
    }

    /// The rule a production stands for.
    fn rule(&self, p: &Production) -> Result<Rule, GrammarFileError> {
        let lhs = self.nonterminal(&p.ret);
        let body = match &p.body {
            ProdBody::Variable(t) => RuleBody::Variable(t.clone()),
            ProdBody::Constant(t) => RuleBody::Constant(t.clone()),
            ProdBody::Expr(e) => {
                let mut template = e.clone();
                let free = e.free_vars_counted();
                for (param, ty) in &p.params {
                    let count = free.get(param).copied().unwrap_or(0);
                    if count != 1 {
                        return Err(GrammarFileError::ParamUse {
                            production: p.name.clone(),
                            param: param.clone(),
                            count,
                        });
                    }
                    template = template.subst_var(param, &self.nonterminal(ty).hole());
                }
                if template.free_vars().is_empty() {
                    let ty = type_of(&template, &TypeEnv::new()).map_err(|e| GrammarFileError::IllTyped {
                        production: p.name.clone(),
                        message: e.to_string(),
                    })?;
                    if ty != lhs.ty {
                        return Err(GrammarFileError::IllTyped {
                            production: p.name.clone(),
                            message: format!("body has type {ty}, declared {}", lhs.ty),
                        });
                    }
                }
                RuleBody::Template(template)
            }
        };
        Ok(Rule {
            id: p.name.clone(),
            lhs,
            body,
            weight: p.weight,
            tags: p.tags.iter().cloned().collect(),
            type_params: p.type_params.clone(),
        })
    }

    /// Weighted rules, one per production.
    pub fn desugar(&self) -> Result<Vec<Rule>, GrammarFileError> {
        self.productions.iter().map(|p| self.rule(p)).collect()
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(mut self, factor: f64) -> GrammarFile {
        for p in &mut self.productions {
            p.weight *= factor;
        }
        self
    }
}

/// Concatenates grammar files. Productions of the same kind (same return
/// type, type parameters and template) have their weights summed and their
/// tags merged; distinct productions with clashing names are renamed.
pub fn merge_grammar_files(files: &[GrammarFile]) -> Result<GrammarFile, GrammarFileError> {
    let mut out = GrammarFile::default();
    for gf in files {
        for (name, ty) in &gf.labels {
            match out.labels.iter().find(|(n, _)| n == name) {
                Some((_, t)) if t != ty => return Err(GrammarFileError::LabelConflict(name.clone())),
                Some(_) => {}
                None => out.labels.push((name.clone(), ty.clone())),
            }
        }
    }
    let mut kinds: BTreeMap<String, usize> = BTreeMap::new();
    for gf in files {
        for p in &gf.productions {
            let rule = gf.rule(p)?;
            let key = format!("{}|{:?}|{:?}|{:?}", p.ret, p.type_params, rule.body, rule.lhs);
            if let Some(&i) = kinds.get(&key) {
                let q: &mut Production = &mut out.productions[i];
                q.weight += p.weight;
                for t in &p.tags {
                    if !q.tags.contains(t) {
                        q.tags.push(t.clone());
                    }
                }
                continue;
            }
            let mut p = p.clone();
            let base = p.name.clone();
            let mut k = 2;
            while out.productions.iter().any(|q| q.name == p.name) {
                p.name = format!("{base}_{k}");
                k += 1;
            }
            kinds.insert(key, out.productions.len());
            out.productions.push(p);
        }
    }
    Ok(out)
}

/// Settings for turning a grammar file into a search-ready grammar.
#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Variables available to `variable` productions, in order.
    pub scope: Vec<(String, MiniType)>,
    /// Literals available to `constant` productions.
    pub constants: Vec<i64>,
    /// Extra seed types for generic instantiation (e.g. the output type).
    pub seed_types: BTreeSet<MiniType>,
    pub axioms: bool,
    pub max_iters: usize,
    pub max_type_size: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            scope: Vec::new(),
            constants: Vec::new(),
            seed_types: BTreeSet::new(),
            axioms: true,
            max_iters: 2,
            max_type_size: 3,
        }
    }
}

/// Desugars, instantiates generics over the reasonable types, splits
/// variable and constant placeholders, normalizes, and optionally applies
/// the tag axioms.
pub fn compile(gf: &GrammarFile, opts: &CompileOptions) -> Result<Pcfg, GrammarFileError> {
    let rules = gf.desugar()?;
    let declared: BTreeSet<MiniType> = rules
        .iter()
        .filter(|r| r.lhs.is_plain() && r.lhs.ty.is_ground())
        .map(|r| r.lhs.ty.clone())
        .collect();
    let mut seeds = opts.seed_types.clone();
    seeds.extend(rules.iter().filter(|r| !r.is_generic()).map(|r| r.lhs.ty.clone()));
    seeds.extend(opts.scope.iter().map(|(_, t)| t.clone()));
    let types = discover_types(&rules, &seeds, opts.max_iters, opts.max_type_size);
    let rules = instantiate_generics(&rules, &types);
    let rules = instantiate_variable_rules(rules, &opts.scope);
    let rules = instantiate_constant_rules(rules, &opts.constants);

    let env: TypeEnv = opts.scope.iter().cloned().collect();
    for r in &rules {
        let Some(t) = r.template() else { continue };
        match type_of(t, &env) {
            Ok(ty) if ty == r.lhs.ty => {}
            Ok(ty) => {
                return Err(GrammarFileError::IllTyped {
                    production: r.id.clone(),
                    message: format!("body has type {ty}, declared {}", r.lhs.ty),
                })
            }
            Err(e) => {
                return Err(GrammarFileError::IllTyped {
                    production: r.id.clone(),
                    message: e.to_string(),
                })
            }
        }
    }
    let g = normalize_declared(rules, &declared)?;
    Ok(if opts.axioms { apply_axioms(&g)? } else { g })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIMPLE: &str = "\
# integers
production 10 [plus] plus (a Int) (b Int) -> Int (+ a b)
production 5 [minus] minus (a Int) (b Int) -> Int (- a b)
production 5 [const] o () -> Int 1
production 10 [const,0] z () -> Int 0
production 20 [top] vInt () -> Int (variable Int)
";

    const LABELED: &str = "\
label NZ Int
label BI Int
production 10 [] plus (a NZ) (b NZ) -> NZ (+ a b)
production 5 [] minus (a BI) (b NZ) -> NZ (- a b)
production 5 [] o () -> NZ 1
production 10 [] z () -> BI 0
production 20 [] vInt () -> NZ (variable Int)
production 40 [] nz2Bi (nz NZ) -> BI nz
production 1 [] start (b BI) -> Int b
";

    #[test]
    fn parses_productions() {
        let gf = parse_grammar_file(SIMPLE).unwrap();
        let weights: Vec<f64> = gf.productions.iter().map(|p| p.weight).collect();
        assert_eq!(weights, [10.0, 5.0, 5.0, 10.0, 20.0]);
        assert_eq!(gf.productions[3].tags, ["const", "0"]);
        assert_eq!(gf.productions[4].body, ProdBody::Variable(MiniType::Int));

        let gf = parse_grammar_file(LABELED).unwrap();
        assert_eq!(gf.labels.len(), 2);
        assert_eq!(gf.productions.len(), 7);
        assert_eq!(gf.productions[6].name, "start");
        assert!(parse_grammar_file("").unwrap().productions.is_empty());
    }

    #[test]
    fn generic_production() {
        let gf = parse_grammar_file("production 5 [] single ['A] (a 'A) -> (List 'A) (cons a (nil 'A))").unwrap();
        let p = &gf.productions[0];
        assert_eq!(p.type_params, ["A"]);
        let rule = gf.desugar().unwrap().remove(0);
        assert_eq!(rule.children(), [Nonterminal::plain(MiniType::Var("A".into()))]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_grammar_file("label NZ Int\nproduction 1 [] p (a Foo) -> NZ a").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        assert!(err.to_string().contains("undeclared label"));
        let err = parse_grammar_file("production 0 [] p () -> Int 1").unwrap_err();
        assert!(err.to_string().contains("positive"));
        let err = parse_grammar_file("production 1 [] p () -> Int 1\nproduction 1 [] p () -> Int 2").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn parameters_are_linear() {
        let gf = parse_grammar_file("production 1 [] dbl (a Int) -> Int (+ a a)").unwrap();
        assert!(matches!(gf.desugar(), Err(GrammarFileError::ParamUse { count: 2, .. })));
        let gf = parse_grammar_file("production 1 [] k (a Int) -> Int 1").unwrap();
        assert!(matches!(gf.desugar(), Err(GrammarFileError::ParamUse { count: 0, .. })));
    }

    #[test]
    fn round_trip() {
        for text in [SIMPLE, LABELED] {
            let gf = parse_grammar_file(text).unwrap();
            assert_eq!(parse_grammar_file(&gf.to_string()).unwrap(), gf);
        }
    }

    #[test]
    fn simple_file_probabilities() {
        let gf = parse_grammar_file(SIMPLE).unwrap();
        let opts = CompileOptions {
            scope: vec![("x".into(), MiniType::Int), ("y".into(), MiniType::Int)],
            axioms: false,
            ..Default::default()
        };
        let g = compile(&gf, &opts).unwrap();
        let probs: Vec<f64> = g.iter().map(|r| r.prob).collect();
        let want = [0.2, 0.1, 0.1, 0.2, 0.2, 0.2];
        assert_eq!(probs.len(), want.len());
        for (p, w) in probs.iter().zip(want) {
            assert!((p - w).abs() < 1e-12);
        }
    }

    #[test]
    fn labeled_file_desugars_to_attribute_grammar() {
        let gf = parse_grammar_file(LABELED).unwrap();
        let opts = CompileOptions {
            scope: vec![("x".into(), MiniType::Int)],
            axioms: false,
            ..Default::default()
        };
        let g = compile(&gf, &opts).unwrap();
        let p = |id: &str| g.prob(id).unwrap();
        assert_eq!(p("start"), 1.0);
        assert!((p("nz2Bi") - 0.8).abs() < 1e-12);
        assert!((p("z") - 0.2).abs() < 1e-12);
        assert!((p("plus") - 0.25).abs() < 1e-12);
        assert!((p("minus") - 0.125).abs() < 1e-12);
        assert!((p("vInt.x") - 0.5).abs() < 1e-12);
        assert!((p("o") - 0.125).abs() < 1e-12);
    }

    #[test]
    fn empty_scope_loses_start() {
        let gf = parse_grammar_file("production 3 [] vb () -> Bool (variable Bool)").unwrap();
        let g = compile(&gf, &CompileOptions::default()).unwrap();
        assert_eq!(
            g.start_for(&MiniType::Bool),
            Err(GrammarError::EmptyGrammar(MiniType::Bool))
        );
    }

    #[test]
    fn merging_sums_weights() {
        let a = parse_grammar_file("production 3 [plus] p (a Int) (b Int) -> Int (+ a b)").unwrap();
        let b = parse_grammar_file("production 3 [commut] q (x Int) (y Int) -> Int (+ x y)").unwrap();
        let m = merge_grammar_files(&[a.clone(), b]).unwrap();
        assert_eq!(m.productions.len(), 1);
        assert_eq!(m.productions[0].weight, 6.0);
        assert_eq!(m.productions[0].tags, ["plus", "commut"]);
        assert_eq!(merge_grammar_files(&[a.clone(), GrammarFile::default()]).unwrap(), a);

        let c = parse_grammar_file("label L Int\nproduction 1 [] p () -> L 1").unwrap();
        let d = parse_grammar_file("label L Bool\nproduction 1 [] p () -> L true").unwrap();
        assert!(matches!(merge_grammar_files(&[c, d]), Err(GrammarFileError::LabelConflict(_))));
    }

    #[test]
    fn merging_renames_clashes() {
        let a = parse_grammar_file("production 1 [] p () -> Int 1").unwrap();
        let b = parse_grammar_file("production 1 [] p () -> Int 2").unwrap();
        let m = merge_grammar_files(&[a, b]).unwrap();
        let names: Vec<&str> = m.productions.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["p", "p_2"]);
    }

    #[test]
    fn default_grammar_compiles() {
        let gf = parse_grammar_file(DEFAULT_GRAMMAR).unwrap();
        let opts = CompileOptions {
            scope: vec![("a".into(), MiniType::Int), ("l".into(), MiniType::list(MiniType::Int))],
            constants: vec![0, 3],
            ..Default::default()
        };
        let g = compile(&gf, &opts).unwrap();
        for ty in [MiniType::Int, MiniType::Bool, MiniType::list(MiniType::Int)] {
            assert!(g.start_for(&ty).is_ok(), "{ty}");
        }
        assert!(g.is_ground());
    }
}
