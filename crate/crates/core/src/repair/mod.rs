//! Repair of a single faulty subexpression: generate tests from the
//! contract, rank candidate locations by the failing tests' traces, and
//! synthesize a replacement with a grammar biased toward the broken code.

mod bench;

use std::collections::BTreeSet;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use bench::{benchmark_suite, run_benchmark, BenchCase, BenchRow};

use crate::cegis::{cegis_with, Bounds, CegisConfig, CegisOutcome, SearchConfig, SynthesisProblem, Verifier};
use crate::corpus::{extract_local_bias, CorpusError, CorpusProgram, Depth, Function, RESULT};
use crate::grammarfile::{merge_grammar_files, AnnType, GrammarFile, GrammarFileError, ProdBody, Production};
use crate::lang::{eval_traced, type_of, Env, Expr, MiniType, Op, Value};
use crate::sexpr::{self, Sexp, SexpError};

#[derive(Debug, Error)]
pub enum RepairError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Grammar(#[from] GrammarFileError),
    #[error("no function `{0}` in the program")]
    NoFunction(String),
    #[error("function `{0}` has no postcondition")]
    NoContract(String),
    #[error("vacuous contract: no input within bounds satisfies the precondition")]
    Vacuous,
    #[error("{0}")]
    Config(String),
}

/// Path of child indices from the body root.
pub type Location = Vec<usize>;

/// A function to repair together with extra test inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairTask {
    pub program: CorpusProgram,
    pub function: String,
    pub tests: Vec<Env>,
}

/// Contents of a task file: `(repair (program "path") (function name)
/// (tests ((a -3)) ...))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFile {
    pub program: String,
    pub function: String,
    pub tests: Vec<Vec<(String, Sexp)>>,
}

pub fn parse_task_file(text: &str) -> Result<TaskFile, SexpError> {
    let top = sexpr::parse_one(text)?;
    let items = match top.as_list() {
        Some(items) if top.head() == Some("repair") => items,
        _ => return Err(top.error("expected `(repair ...)`")),
    };
    let mut program = None;
    let mut function = None;
    let mut tests = Vec::new();
    for clause in &items[1..] {
        let args = clause.as_list().map(|l| &l[1..]).unwrap_or(&[]);
        match (clause.head(), args) {
            (Some("program"), [Sexp::Str(p, _)]) => program = Some(p.clone()),
            (Some("function"), [Sexp::Atom(f, _)]) => function = Some(f.clone()),
            (Some("tests"), tests_in) => {
                for t in tests_in {
                    let bindings = t.as_list().ok_or_else(|| t.error("expected `((a 1) ...)`"))?;
                    let mut test = Vec::new();
                    for b in bindings {
                        match b.as_list() {
                            Some([Sexp::Atom(n, _), v]) => test.push((n.clone(), v.clone())),
                            _ => return Err(b.error("expected `(input value)`")),
                        }
                    }
                    tests.push(test);
                }
            }
            _ => return Err(clause.error(format!("unexpected clause `{clause}`"))),
        }
    }
    match (program, function) {
        (Some(program), Some(function)) => Ok(TaskFile {
            program,
            function,
            tests,
        }),
        _ => Err(top.error("a repair task needs `program` and `function`")),
    }
}

impl RepairTask {
    pub fn new(program: CorpusProgram, function: &str, tests: Vec<Env>) -> Result<Self, RepairError> {
        let f = program
            .function(function)
            .ok_or_else(|| RepairError::NoFunction(function.to_string()))?;
        if f.ensures.is_none() {
            return Err(RepairError::NoContract(function.to_string()));
        }
        for t in &tests {
            if t.len() != f.params.len() || f.params.iter().any(|(n, _)| !t.contains_key(n)) {
                return Err(RepairError::Config("every test must bind each parameter once".into()));
            }
        }
        Ok(RepairTask {
            program,
            function: function.to_string(),
            tests,
        })
    }

    /// Builds a task from a parsed task file and the program it names.
    pub fn from_file(file: &TaskFile, program: CorpusProgram) -> Result<Self, RepairError> {
        let f = program
            .function(&file.function)
            .ok_or_else(|| RepairError::NoFunction(file.function.clone()))?;
        let mut tests = Vec::new();
        for t in &file.tests {
            let mut env = Env::new();
            for (n, v) in t {
                let ty = f
                    .params
                    .iter()
                    .find(|(p, _)| p == n)
                    .map(|(_, t)| t)
                    .ok_or_else(|| RepairError::Config(format!("`{n}` is not a parameter")))?;
                env.insert(n.clone(), crate::lang::value_from_sexp(v, ty)?);
            }
            tests.push(env);
        }
        RepairTask::new(program.clone(), &file.function, tests)
    }

    pub fn target(&self) -> &Function {
        self.program.function(&self.function).expect("checked at construction")
    }

    /// The function's contract as a synthesis problem whose output is the
    /// result.
    pub fn contract(&self) -> SynthesisProblem {
        let f = self.target();
        let inputs: Vec<(&str, MiniType)> = f.params.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
        SynthesisProblem::new(
            &inputs,
            (RESULT, f.ret.clone()),
            f.requires.clone().unwrap_or(Expr::Bool(true)),
            f.ensures.clone().expect("checked at construction"),
        )
    }
}

/// Test inputs split by whether the body meets the contract on them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tests {
    pub passing: Vec<Env>,
    pub failing: Vec<Env>,
}

/// User tests satisfying the precondition followed by every bounded input
/// satisfying it, classified against the postcondition.
pub fn generate_tests(task: &RepairTask, bounds: Bounds) -> Result<Tests, RepairError> {
    let contract = task.contract();
    let verifier = Verifier::new(&contract, bounds);
    classify(task, &task.target().body, verifier.points())
}

/// `count` random inputs for the function's parameters, with integers in
/// `[-int_bound, int_bound]` and lists of up to `max_list_len` elements.
/// Inputs violating the precondition are kept; classification drops them.
pub fn random_inputs(task: &RepairTask, count: usize, seed: u64, int_bound: i64, max_list_len: usize) -> Vec<Env> {
    fn sample(rng: &mut ChaCha8Rng, ty: &MiniType, b: i64, l: usize) -> Value {
        match ty {
            MiniType::Bool => Value::Bool(rng.gen()),
            MiniType::List(t) => {
                let n = rng.gen_range(0..=l);
                Value::List((0..n).map(|_| sample(rng, t, b, l)).collect())
            }
            _ => Value::Int(rng.gen_range(-b..=b)),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = &task.target().params;
    (0..count)
        .map(|_| {
            params
                .iter()
                .map(|(n, t)| (n.clone(), sample(&mut rng, t, int_bound, max_list_len)))
                .collect()
        })
        .collect()
}

fn classify(task: &RepairTask, body: &Expr, points: &[Env]) -> Result<Tests, RepairError> {
    let contract = task.contract();
    let user = task
        .tests
        .iter()
        .filter(|t| crate::lang::eval(&contract.pc, t) == Value::Bool(true));
    let mut out = Tests::default();
    let mut seen = BTreeSet::new();
    for p in user.chain(points) {
        if !seen.insert(p.clone()) {
            continue;
        }
        if contract.holds_at(body, p) {
            out.passing.push(p.clone());
        } else {
            out.failing.push(p.clone());
        }
    }
    if out.passing.is_empty() && out.failing.is_empty() {
        return Err(RepairError::Vacuous);
    }
    Ok(out)
}

/// Candidate locations: subexpressions evaluated on every failing test
/// first, then the rest; smaller subtrees first within each group, ties
/// broken leftmost.
pub fn localize(body: &Expr, failing: &[Env]) -> Vec<Location> {
    let mut common: Option<BTreeSet<Location>> = None;
    for t in failing {
        let mut seen = BTreeSet::new();
        eval_traced(body, t, &mut |p| {
            seen.insert(p.to_vec());
        });
        common = Some(match common {
            None => seen,
            Some(c) => c.intersection(&seen).cloned().collect(),
        });
    }
    let common = common.unwrap_or_default();
    let mut locs: Vec<(bool, usize, Location)> = body
        .subterms()
        .into_iter()
        .map(|(p, e)| (!common.contains(&p), e.size(), p))
        .collect();
    locs.sort();
    locs.into_iter().map(|(_, _, p)| p).collect()
}

/// Conjunction of the guards of the `if` branches enclosing `loc`.
pub fn path_condition(body: &Expr, loc: &[usize]) -> Expr {
    let mut conds = Vec::new();
    let mut e = body;
    for &i in loc {
        if let Expr::App(Op::Ite, args) = e {
            match i {
                1 => conds.push(args[0].clone()),
                2 => conds.push(Expr::not(args[0].clone())),
                _ => {}
            }
        }
        e = &e.children()[i];
    }
    conds.into_iter().reduce(Expr::and).unwrap_or(Expr::Bool(true))
}

/// Default weight of the similar-term production for the broken
/// expression itself.
pub const SIMILAR_WEIGHT: f64 = 20.0;

/// Productions deriving every subtree of `broken` verbatim, with weight
/// `sigma · 2^-depth`.
pub fn similar_terms(broken: &Expr, types: &crate::lang::TypeEnv, sigma: f64) -> Result<GrammarFile, RepairError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(RepairError::Config(format!("similar-term weight must be positive, got {sigma}")));
    }
    let mut productions = Vec::new();
    for (i, (path, s)) in broken.subterms().into_iter().enumerate() {
        let ty = type_of(s, types).map_err(|e| RepairError::Config(e.to_string()))?;
        productions.push(Production {
            name: format!("similar{i}"),
            weight: sigma * 0.5f64.powi(path.len() as i32),
            tags: Vec::new(),
            type_params: Vec::new(),
            params: Vec::new(),
            ret: AnnType::Plain(ty),
            body: ProdBody::Expr(s.clone()),
        });
    }
    Ok(GrammarFile {
        labels: Vec::new(),
        productions,
    })
}

/// Base grammar merged with the local-bias grammar of the program and the
/// similar-term productions for `broken`.
pub fn similar_term_grammar(
    broken: &Expr,
    task: &RepairTask,
    base: &GrammarFile,
    config: &RepairConfig,
) -> Result<GrammarFile, RepairError> {
    let local = extract_local_bias(&task.program, config.depth, config.local_bias)?;
    let similar = similar_terms(broken, &task.target().type_env(), config.sigma)?;
    Ok(merge_grammar_files(&[base.clone(), local, similar])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrammarChoice {
    /// Similar-term grammar, then the plain grammar on failure.
    SimilarThenPlain,
    SimilarOnly,
    PlainOnly,
}

#[derive(Debug, Clone)]
pub struct RepairConfig {
    pub search: SearchConfig,
    pub bounds: Bounds,
    pub sigma: f64,
    pub local_bias: f64,
    pub depth: Depth,
    pub axioms: bool,
    pub grammars: GrammarChoice,
    /// Largest number of locations tried.
    pub max_locations: usize,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            search: SearchConfig {
                max_dequeues: 20_000,
                time_limit: Duration::from_secs(2),
                ..SearchConfig::default()
            },
            bounds: Bounds {
                int_bound: 4,
                max_list_len: 3,
                ..Bounds::default()
            },
            sigma: SIMILAR_WEIGHT,
            local_bias: crate::corpus::LOCAL_BIAS,
            depth: Depth::One,
            axioms: true,
            grammars: GrammarChoice::SimilarThenPlain,
            max_locations: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub location: Location,
    pub similar: bool,
    pub solved: bool,
    pub iterations: usize,
    pub dequeued: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepairOutcome {
    /// The function already meets its contract on all tests.
    Correct,
    Repaired {
        function: Function,
        location: Location,
        replacement: Expr,
        attempts: Vec<Attempt>,
    },
    Failed {
        attempts: Vec<Attempt>,
    },
}

impl RepairOutcome {
    pub fn attempts(&self) -> &[Attempt] {
        match self {
            RepairOutcome::Correct => &[],
            RepairOutcome::Repaired { attempts, .. } | RepairOutcome::Failed { attempts } => attempts,
        }
    }
}

fn fresh_name(f: &Function) -> String {
    let mut name = "hole".to_string();
    while f.params.iter().any(|(p, _)| *p == name) || name == RESULT {
        name.push('_');
    }
    name
}

/// The synthesis problem for replacing the subexpression at `loc`.
pub fn location_problem(task: &RepairTask, loc: &[usize]) -> SynthesisProblem {
    let f = task.target();
    let out = fresh_name(f);
    let ty = type_of(f.body.at_path(loc).expect("valid location"), &f.type_env()).expect("well-typed body");
    let body = f.body.replace_at(loc, Expr::var(&out)).expect("valid location");
    let spec = f.ensures.clone().expect("checked at construction").subst_var(RESULT, &body);
    let pc = Expr::and(f.requires.clone().unwrap_or(Expr::Bool(true)), path_condition(&f.body, loc));
    let inputs: Vec<(&str, MiniType)> = f.params.iter().map(|(n, t)| (n.as_str(), t.clone())).collect();
    let mut p = SynthesisProblem::new(&inputs, (&out, ty), pc, spec);
    p.name = format!("{}@{:?}", f.name, loc);
    p
}

/// Tries locations in order, synthesizing a replacement for each until the
/// patched function passes all tests.
pub fn repair(task: &RepairTask, base: &GrammarFile, config: &RepairConfig) -> Result<RepairOutcome, RepairError> {
    let tests = generate_tests(task, config.bounds)?;
    if tests.failing.is_empty() {
        return Ok(RepairOutcome::Correct);
    }
    let all: Vec<Env> = tests.passing.iter().chain(&tests.failing).cloned().collect();
    let f = task.target().clone();
    let cegis_config = CegisConfig {
        search: config.search.clone(),
        bounds: config.bounds,
        ..CegisConfig::default()
    };
    let mut attempts = Vec::new();
    for loc in localize(&f.body, &tests.failing).into_iter().take(config.max_locations) {
        let problem = location_problem(task, &loc);
        let verifier = Verifier::new(&problem, config.bounds);
        // Seed with a failing test the location can influence.
        let seeds: Vec<Env> = tests
            .failing
            .iter()
            .filter(|t| crate::lang::eval(&problem.pc, t) == Value::Bool(true))
            .take(1)
            .cloned()
            .collect();
        let broken = f.body.at_path(&loc).expect("valid location");
        let grammars: &[bool] = match config.grammars {
            GrammarChoice::SimilarThenPlain => &[true, false],
            GrammarChoice::SimilarOnly => &[true],
            GrammarChoice::PlainOnly => &[false],
        };
        for &similar in grammars {
            let gf = if similar {
                similar_term_grammar(broken, task, base, config)?
            } else {
                base.clone()
            };
            let axioms = config.axioms && config.depth == Depth::One;
            let g = match problem.compile_grammar(&gf, axioms) {
                Ok(g) => g,
                Err(e) => {
                    attempts.push(Attempt {
                        location: loc.clone(),
                        similar,
                        solved: false,
                        iterations: 0,
                        dequeued: 0,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            let outcome = cegis_with(&problem, &g, &cegis_config, &verifier, seeds.clone())
                .map_err(|e| RepairError::Grammar(e.into()))?;
            let report = outcome.report();
            let mut attempt = Attempt {
                location: loc.clone(),
                similar,
                solved: false,
                iterations: report.iterations,
                dequeued: report.stats.dequeued,
                message: String::new(),
            };
            match outcome {
                CegisOutcome::Solved { expr, .. } => {
                    let body = f.body.replace_at(&loc, expr.clone()).expect("valid location");
                    let patched = classify(task, &body, &all)?;
                    if patched.failing.is_empty() {
                        attempt.solved = true;
                        attempt.message = format!("found {expr}");
                        attempts.push(attempt);
                        let mut function = f.clone();
                        function.body = body;
                        return Ok(RepairOutcome::Repaired {
                            function,
                            location: loc,
                            replacement: expr,
                            attempts,
                        });
                    }
                    attempt.message = format!("candidate {expr} fails {} tests", patched.failing.len());
                    attempts.push(attempt);
                    // A verified candidate cannot do better with another grammar.
                    break;
                }
                CegisOutcome::Failed { reason, .. } => {
                    attempt.message = reason;
                    attempts.push(attempt);
                }
            }
        }
    }
    Ok(RepairOutcome::Failed { attempts })
}
