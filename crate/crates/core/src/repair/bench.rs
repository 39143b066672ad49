use super::{generate_tests, repair, GrammarChoice, RepairConfig, RepairError, RepairOutcome, RepairTask};
use crate::corpus::{parse_corpus, CorpusProgram};
use crate::grammarfile::GrammarFile;

/// A library function with one seeded mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub name: &'static str,
    pub correct: &'static str,
    pub mutant: &'static str,
}

/// Each definition is `(def NAME PARAMS -> RET (ensures ...) BODY)`, where
/// the mutant differs from the correct body in one operator, literal or
/// variable.
const CASES: &[(&str, &str, &str, &str)] = &[
    (
        "append2",
        "((a Int) (b Int) (l (List Int))) -> (List Int) (ensures (= result (cons a (cons b l))))",
        "(cons a (cons b l))",
        "(cons b (cons a l))",
    ),
    (
        "insert2",
        "((x Int) (l (List Int))) -> (List Int) (requires (not (isEmpty l))) (ensures (= result (cons (head l) (cons x (tail l)))))",
        "(cons (head l) (cons x (tail l)))",
        "(cons x (cons (head l) (tail l)))",
    ),
    (
        "pad",
        "((d Int) (l (List Int))) -> (List Int) (ensures (if (isEmpty l) (= result (cons d (nil Int))) (= result l)))",
        "(if (isEmpty l) (cons d l) l)",
        "(if (isEmpty l) l (cons d l))",
    ),
    (
        "swapFirst",
        "((l (List Int))) -> (List Int) (requires (<= 2 (size l))) (ensures (and (= (tail (tail result)) (tail (tail l))) (and (= (head result) (head (tail l))) (= (head (tail result)) (head l)))))",
        "(cons (head (tail l)) (cons (head l) (tail (tail l))))",
        "(cons (head l) (cons (head (tail l)) (tail (tail l))))",
    ),
    (
        "count2",
        "((x Int) (l (List Int))) -> Int (requires (= (size l) 2)) (ensures (= result (+ (if (= (head l) x) 1 0) (if (= (head (tail l)) x) 1 0))))",
        "(+ (if (= (head l) x) 1 0) (if (= (head (tail l)) x) 1 0))",
        "(- (if (= (head l) x) 1 0) (if (= (head (tail l)) x) 1 0))",
    ),
    (
        "sizeMinusHead",
        "((l (List Int))) -> Int (requires (not (isEmpty l))) (ensures (= (+ result (head l)) (size l)))",
        "(- (size l) (head l))",
        "(- (head l) (size l))",
    ),
    (
        "maxDiff",
        "((a Int) (b Int)) -> Int (ensures (and (<= 0 result) (not (and (not (= result (- a b))) (not (= result (- b a)))))))",
        "(if (<= a b) (- b a) (- a b))",
        "(if (<= a b) (- a b) (- a b))",
    ),
    (
        "abs",
        "((a Int)) -> Int (ensures (and (<= 0 result) (not (and (not (= result a)) (not (= result (- 0 a)))))))",
        "(if (<= 0 a) a (- 0 a))",
        "(if (<= 0 a) a (- a 0))",
    ),
    (
        "diff",
        "((a Int) (b Int)) -> Int (requires (<= b a)) (ensures (and (<= 0 result) (= (+ b result) a)))",
        "(- a b)",
        "(- b a)",
    ),
    (
        "pred",
        "((a Int)) -> Int (ensures (= (+ result 1) a))",
        "(- a 1)",
        "(- 1 a)",
    ),
];

fn program(name: &str, signature: &str, body: &str) -> CorpusProgram {
    parse_corpus(&format!("(def {name} {signature} {body})")).expect("benchmark functions are well-formed")
}

/// The seeded-mutant suite.
pub fn benchmark_suite() -> Vec<(BenchCase, RepairTask)> {
    CASES
        .iter()
        .map(|&(name, signature, correct, mutant)| {
            let case = BenchCase { name, correct, mutant };
            let task = RepairTask::new(program(name, signature, mutant), name, Vec::new())
                .expect("benchmark functions have contracts");
            (case, task)
        })
        .collect()
}

/// Result of one benchmark case.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: &'static str,
    pub repaired: bool,
    /// The repaired function meets its contract on every bounded input.
    pub verified: bool,
    pub replacement: Option<String>,
    /// Total dequeues with the similar-term grammar alone.
    pub dequeued_similar: u64,
    pub solved_similar: bool,
    /// Total dequeues with the plain grammar alone.
    pub dequeued_plain: u64,
    pub solved_plain: bool,
}

fn total_dequeues(outcome: &RepairOutcome) -> u64 {
    outcome.attempts().iter().map(|a| a.dequeued).sum()
}

/// Repairs every case with the full pipeline, then separately with each
/// grammar alone to compare search effort.
pub fn run_benchmark(base: &GrammarFile, config: &RepairConfig) -> Result<Vec<BenchRow>, RepairError> {
    let mut rows = Vec::new();
    for (case, task) in benchmark_suite() {
        let outcome = repair(&task, base, config)?;
        let (repaired, verified, replacement) = match &outcome {
            RepairOutcome::Repaired {
                function, replacement, ..
            } => {
                let fixed = RepairTask::new(
                    CorpusProgram {
                        functions: vec![function.clone()],
                    },
                    case.name,
                    Vec::new(),
                )?;
                let ok = generate_tests(&fixed, config.bounds)?.failing.is_empty();
                (true, ok, Some(replacement.to_string()))
            }
            _ => (false, false, None),
        };
        let only = |grammars| RepairConfig {
            grammars,
            ..config.clone()
        };
        let similar = repair(&task, base, &only(GrammarChoice::SimilarOnly))?;
        let plain = repair(&task, base, &only(GrammarChoice::PlainOnly))?;
        rows.push(BenchRow {
            name: case.name,
            repaired,
            verified,
            replacement,
            dequeued_similar: total_dequeues(&similar),
            solved_similar: matches!(similar, RepairOutcome::Repaired { .. }),
            dequeued_plain: total_dequeues(&plain),
            solved_plain: matches!(plain, RepairOutcome::Repaired { .. }),
        });
    }
    Ok(rows)
}
