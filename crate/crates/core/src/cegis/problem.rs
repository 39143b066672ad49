use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::grammar::Pcfg;
use crate::grammarfile::{compile, CompileOptions, GrammarFile, GrammarFileError};
use crate::lang::{
    eval, expr_from_sexp, type_from_sexp, type_of, value_from_sexp, Env, Expr, MiniType, Op, TypeEnv, Value,
};
use crate::sexpr::{self, Sexp, SexpError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("{0}")]
    Invalid(String),
}

/// Find `x` such that `pc ⟹ spec` holds for all inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisProblem {
    pub name: String,
    pub inputs: Vec<(String, MiniType)>,
    pub output: (String, MiniType),
    pub pc: Expr,
    pub spec: Expr,
    /// Input valuations with the expected output.
    pub examples: Vec<(Env, Value)>,
    /// Grammar file named by the problem, relative to the problem file.
    pub grammar: Option<String>,
}

impl SynthesisProblem {
    pub fn new(inputs: &[(&str, MiniType)], output: (&str, MiniType), pc: Expr, spec: Expr) -> Self {
        SynthesisProblem {
            name: String::new(),
            inputs: inputs.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
            output: (output.0.to_string(), output.1),
            pc,
            spec,
            examples: Vec::new(),
            grammar: None,
        }
    }

    pub fn input_types(&self) -> TypeEnv {
        self.inputs.iter().cloned().collect()
    }

    /// The specification with every example added as a conjunct
    /// `inputs = example ⟹ x = expected`.
    pub fn full_spec(&self) -> Expr {
        let out_ty = &self.output.1;
        self.examples.iter().fold(self.spec.clone(), |acc, (point, expected)| {
            let guard = self
                .inputs
                .iter()
                .map(|(n, t)| Expr::binary(Op::Eq, Expr::var(n), point[n].to_expr(t)))
                .reduce(Expr::and)
                .unwrap_or(Expr::Bool(true));
            let want = Expr::binary(Op::Eq, Expr::var(&self.output.0), expected.to_expr(out_ty));
            Expr::and(acc, Expr::implies(guard, want))
        })
    }

    /// Whether `t` satisfies `pc ⟹ spec` on `point`.
    pub fn holds_at(&self, t: &Expr, point: &Env) -> bool {
        self.holds_with(&self.predicate(), t, point)
    }

    /// `pc ⟹ spec` with library calls expanded; build once and pass to
    /// `holds_with` when checking many candidates.
    pub fn predicate(&self) -> Expr {
        Expr::implies(self.pc.clone(), self.full_spec())
    }

    pub fn holds_with(&self, predicate: &Expr, t: &Expr, point: &Env) -> bool {
        let mut env = point.clone();
        env.insert(self.output.0.clone(), eval(t, point));
        eval(predicate, &env) == Value::Bool(true)
    }

    /// Integer literals of the problem, offered to `constant` productions.
    pub fn constants(&self) -> Vec<i64> {
        let mut out = self.pc.int_literals();
        out.extend(self.full_spec().int_literals());
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Compiles a grammar for this problem's scope and constants.
    pub fn compile_grammar(&self, gf: &GrammarFile, axioms: bool) -> Result<Pcfg, GrammarFileError> {
        let opts = CompileOptions {
            scope: self.inputs.clone(),
            constants: self.constants(),
            seed_types: BTreeSet::from([self.output.1.clone()]),
            axioms,
            ..Default::default()
        };
        compile(gf, &opts)
    }

    /// Checks types, example arity and that examples satisfy `pc`.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let mut types = self.input_types();
        let check = |e: &Expr, env: &TypeEnv, what: &str| match type_of(e, env) {
            Ok(MiniType::Bool) => Ok(()),
            Ok(t) => Err(ProblemError::Invalid(format!("{what} has type {t}, expected Bool"))),
            Err(err) => Err(ProblemError::Invalid(format!("{what}: {err}"))),
        };
        check(&self.pc, &types, "path condition")?;
        types.insert(self.output.0.clone(), self.output.1.clone());
        check(&self.spec, &types, "specification")?;
        for (point, _) in &self.examples {
            if point.len() != self.inputs.len() || self.inputs.iter().any(|(n, _)| !point.contains_key(n)) {
                return Err(ProblemError::Invalid("every example must bind each input once".into()));
            }
            if eval(&self.pc, point) != Value::Bool(true) {
                return Err(ProblemError::Invalid(format!(
                    "example {} violates the path condition",
                    crate::lang::show_env(point)
                )));
            }
        }
        Ok(())
    }
}

fn typed_binding(s: &Sexp) -> Result<(String, MiniType), SexpError> {
    match s.as_list() {
        Some([Sexp::Atom(n, _), t]) => Ok((n.clone(), type_from_sexp(t)?)),
        _ => Err(s.error("expected `(name Type)`")),
    }
}

/// Parses `(problem (inputs (a Int) ...) (output x Int) (pc e) (spec e)
/// (examples ((a 2) => 2) ...) (grammar "file"))`. Every clause except
/// `inputs` and `output` is optional.
pub fn parse_problem(text: &str) -> Result<SynthesisProblem, ProblemError> {
    let top = sexpr::parse_one(text)?;
    let items = match top.as_list() {
        Some(items) if top.head() == Some("problem") => items,
        _ => return Err(top.error("expected `(problem ...)`").into()),
    };
    let mut p = SynthesisProblem::new(&[], ("x", MiniType::Int), Expr::Bool(true), Expr::Bool(true));
    let mut have_inputs = false;
    let mut have_output = false;
    let mut examples = Vec::new();
    for clause in &items[1..] {
        let args = clause.as_list().map(|l| &l[1..]).unwrap_or(&[]);
        match clause.head() {
            Some("name") => match args {
                [Sexp::Str(s, _)] | [Sexp::Atom(s, _)] => p.name = s.clone(),
                _ => return Err(clause.error("expected `(name \"...\")`").into()),
            },
            Some("inputs") => {
                p.inputs = args.iter().map(typed_binding).collect::<Result<_, _>>()?;
                have_inputs = true;
            }
            Some("output") => match args {
                [Sexp::Atom(n, _), t] => {
                    p.output = (n.clone(), type_from_sexp(t)?);
                    have_output = true;
                }
                _ => return Err(clause.error("expected `(output x Type)`").into()),
            },
            Some("pc") => match args {
                [e] => p.pc = expr_from_sexp(e)?,
                _ => return Err(clause.error("expected `(pc expr)`").into()),
            },
            Some("spec") => match args {
                [e] => p.spec = expr_from_sexp(e)?,
                _ => return Err(clause.error("expected `(spec expr)`").into()),
            },
            Some("examples") => examples.extend(args.iter().cloned()),
            Some("grammar") => match args {
                [Sexp::Str(s, _)] => p.grammar = Some(s.clone()),
                _ => return Err(clause.error("expected `(grammar \"path\")`").into()),
            },
            _ => return Err(clause.error(format!("unknown clause `{clause}`")).into()),
        }
    }
    if !have_inputs || !have_output {
        return Err(top.error("a problem needs `inputs` and `output`").into());
    }
    for ex in &examples {
        p.examples.push(parse_example(ex, &p.inputs, &p.output.1)?);
    }
    p.validate()?;
    Ok(p)
}

/// `((a 2) (b 3) => 5)`
fn parse_example(s: &Sexp, inputs: &[(String, MiniType)], out: &MiniType) -> Result<(Env, Value), SexpError> {
    let items = s.as_list().ok_or_else(|| s.error("expected `((a 1) ... => value)`"))?;
    let arrow = items
        .iter()
        .position(|i| i.is_atom("=>"))
        .ok_or_else(|| s.error("example is missing `=>`"))?;
    let mut env = Env::new();
    for b in &items[..arrow] {
        match b.as_list() {
            Some([Sexp::Atom(n, _), v]) => {
                let ty = inputs
                    .iter()
                    .find(|(i, _)| i == n)
                    .map(|(_, t)| t)
                    .ok_or_else(|| b.error(format!("`{n}` is not an input")))?;
                env.insert(n.clone(), value_from_sexp(v, ty)?);
            }
            _ => return Err(b.error("expected `(input value)`")),
        }
    }
    match &items[arrow + 1..] {
        [v] => Ok((env, value_from_sexp(v, out)?)),
        _ => Err(s.error("expected one value after `=>`")),
    }
}

impl fmt::Display for SynthesisProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(problem")?;
        if !self.name.is_empty() {
            write!(f, " (name \"{}\")", self.name)?;
        }
        write!(f, " (inputs")?;
        for (n, t) in &self.inputs {
            write!(f, " ({n} {t})")?;
        }
        write!(f, ") (output {} {}) (pc {}) (spec {})", self.output.0, self.output.1, self.pc, self.spec)?;
        if !self.examples.is_empty() {
            write!(f, " (examples")?;
            for (point, v) in &self.examples {
                write!(f, " (")?;
                for (n, val) in point {
                    write!(f, "({n} {}) ", val.to_expr(&self.inputs.iter().find(|(i, _)| i == n).unwrap().1))?;
                }
                write!(f, "=> {})", v.to_expr(&self.output.1))?;
            }
            write!(f, ")")?;
        }
        if let Some(g) = &self.grammar {
            write!(f, " (grammar \"{g}\")")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAX: &str = r#"
(problem (name "max")
  (inputs (a Int) (b Int))
  (output x Int)
  (spec (and (and (<= a x) (<= b x)) (not (and (not (= x a)) (not (= x b))))))
  (examples ((a 1) (b 2) => 2) ((a 4) (b 3) => 4)))
"#;

    #[test]
    fn parses_problem_file() {
        let p = parse_problem(MAX).unwrap();
        assert_eq!(p.name, "max");
        assert_eq!(p.inputs.len(), 2);
        assert_eq!(p.examples.len(), 2);
        assert_eq!(p.examples[1].1, Value::Int(4));
        let good: Expr = "(if (<= a b) b a)".parse().unwrap();
        let point: Env = [("a".into(), Value::Int(3)), ("b".into(), Value::Int(-1))].into_iter().collect();
        assert!(p.holds_at(&good, &point));
        assert!(!p.holds_at(&"a".parse().unwrap(), &[("a".into(), Value::Int(1)), ("b".into(), Value::Int(2))].into_iter().collect()));
        // Printing and re-reading gives the same problem.
        assert_eq!(parse_problem(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn examples_join_the_spec() {
        let mut p = SynthesisProblem::new(&[("a", MiniType::Int)], ("x", MiniType::Int), Expr::Bool(true), Expr::Bool(true));
        p.examples.push(([("a".to_string(), Value::Int(2))].into_iter().collect(), Value::Int(7)));
        let at2: Env = p.examples[0].0.clone();
        assert!(p.holds_at(&Expr::Int(7), &at2));
        assert!(!p.holds_at(&Expr::Int(6), &at2));
        assert_eq!(p.constants(), [2, 7]);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(parse_problem("(problem (inputs (a Int)) (output x Int) (spec (+ a 1)))").is_err());
        assert!(parse_problem("(problem (inputs (a Int)) (output x Int) (pc (<= 0 a)) (examples ((a -1) => 1)))").is_err());
        assert!(parse_problem("(problem (output x Int))").is_err());
        assert!(parse_problem("(problem (inputs (a Int)) (output x Int) (frob))").is_err());
    }
}
