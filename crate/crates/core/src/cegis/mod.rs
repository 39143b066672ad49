//! Counterexample-guided inductive synthesis: alternate a search for a
//! candidate correct on a finite point set with bounded verification,
//! adding each counterexample to the set.

mod problem;
mod verify;

use std::time::{Duration, Instant};

pub use problem::{parse_problem, ProblemError, SynthesisProblem};
pub use verify::{Bounds, VerifyResult, Verifier};

use crate::enumerate::{Budget, Enumerator, Next, PriorityMode, SharedTrace, SpecHooks, Stats};
use crate::grammar::{GrammarError, Pcfg};
use crate::lang::{Env, Expr};

/// Search-phase settings.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub mode: PriorityMode,
    pub prune: bool,
    pub indist: bool,
    pub dedup: bool,
    pub max_dequeues: u64,
    pub time_limit: Duration,
    pub trace: Option<SharedTrace>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: PriorityMode::AStarScore(1.0),
            prune: true,
            indist: true,
            dedup: true,
            max_dequeues: 200_000,
            time_limit: Duration::from_secs(10),
            trace: None,
        }
    }
}

impl SearchConfig {
    /// Plain A* without pruning, rewriting or scoring.
    pub fn unoptimized() -> Self {
        SearchConfig {
            mode: PriorityMode::AStar,
            prune: false,
            indist: false,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub found: Option<Expr>,
    /// Complete candidate satisfying the most points.
    pub best: Option<(Expr, usize)>,
    /// True if the grammar ran out rather than the budget.
    pub exhausted: bool,
    pub stats: Stats,
}

/// Returns the first enumerated expression satisfying `pc ⟹ spec` on every
/// point of `points`.
pub fn search(
    problem: &SynthesisProblem,
    g: &Pcfg,
    points: &[Env],
    config: &SearchConfig,
) -> Result<SearchOutcome, GrammarError> {
    let start = g.start_for(&problem.output.1)?;
    let hooks = SpecHooks::new(
        &problem.pc,
        &problem.full_spec(),
        &problem.output.0,
        problem.input_types(),
        points.to_vec(),
    )
    .pruning(config.prune)
    .scoring(matches!(config.mode, PriorityMode::AStarScore(c) if c != 0.0))
    .indistinguishability(config.indist);
    let mut e = Enumerator::with_hooks(g, start, config.mode, hooks)?
        .with_dedup(config.dedup)
        .with_budget(Budget {
            max_dequeues: config.max_dequeues,
            deadline: Some(Instant::now() + config.time_limit),
        });
    if let Some(t) = &config.trace {
        e = e.with_trace(Box::new(t.clone()));
    }
    let predicate = problem.predicate();
    let mut best: Option<(Expr, usize)> = None;
    loop {
        match e.next_production() {
            Next::Emit(p) => {
                let ok = points.iter().filter(|pt| problem.holds_with(&predicate, &p.expr, pt)).count();
                if ok == points.len() {
                    return Ok(SearchOutcome {
                        found: Some(p.expr.clone()),
                        best: Some((p.expr, ok)),
                        exhausted: false,
                        stats: e.stats(),
                    });
                }
                if best.as_ref().is_none_or(|(_, b)| ok > *b) {
                    best = Some((p.expr, ok));
                }
            }
            end => {
                return Ok(SearchOutcome {
                    found: None,
                    best,
                    exhausted: end == Next::Exhausted,
                    stats: e.stats(),
                })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CegisConfig {
    pub search: SearchConfig,
    pub bounds: Bounds,
    pub max_iterations: usize,
}

impl Default for CegisConfig {
    fn default() -> Self {
        CegisConfig {
            search: SearchConfig::default(),
            bounds: Bounds::default(),
            max_iterations: 1000,
        }
    }
}

/// Statistics of a whole CEGIS run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub iterations: usize,
    /// Size of the point set at the start of each iteration.
    pub point_counts: Vec<usize>,
    pub stats: Stats,
    pub wall_time: Duration,
    pub best: Option<Expr>,
    pub points: Vec<Env>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CegisOutcome {
    Solved { expr: Expr, report: Report },
    Failed { reason: String, report: Report },
}

impl CegisOutcome {
    pub fn report(&self) -> &Report {
        match self {
            CegisOutcome::Solved { report, .. } | CegisOutcome::Failed { report, .. } => report,
        }
    }

    pub fn solution(&self) -> Option<&Expr> {
        match self {
            CegisOutcome::Solved { expr, .. } => Some(expr),
            CegisOutcome::Failed { .. } => None,
        }
    }
}

/// Runs CEGIS from the problem's example inputs.
pub fn cegis(problem: &SynthesisProblem, g: &Pcfg, config: &CegisConfig) -> Result<CegisOutcome, GrammarError> {
    let verifier = Verifier::new(problem, config.bounds);
    cegis_with(problem, g, config, &verifier, Vec::new())
}

/// [`cegis`] with a prepared verifier and extra initial points.
pub fn cegis_with(
    problem: &SynthesisProblem,
    g: &Pcfg,
    config: &CegisConfig,
    verifier: &Verifier,
    seed_points: Vec<Env>,
) -> Result<CegisOutcome, GrammarError> {
    let started = Instant::now();
    let mut points: Vec<Env> = Vec::new();
    for p in problem.examples.iter().map(|(e, _)| e.clone()).chain(seed_points) {
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let mut report = Report::default();
    let fail = |reason: String, mut report: Report, points: Vec<Env>| {
        report.wall_time = started.elapsed();
        report.points = points;
        Ok(CegisOutcome::Failed { reason, report })
    };
    loop {
        if report.iterations == config.max_iterations {
            return fail("iteration limit reached".into(), report, points);
        }
        report.iterations += 1;
        report.point_counts.push(points.len());
        let outcome = search(problem, g, &points, &config.search)?;
        report.stats += outcome.stats;
        if let Some((b, _)) = &outcome.best {
            report.best = Some(b.clone());
        }
        let Some(t) = outcome.found else {
            let reason = if outcome.exhausted {
                "grammar exhausted without a candidate"
            } else {
                "search budget exhausted"
            };
            return fail(reason.into(), report, points);
        };
        log::debug!("iteration {}: candidate {t} on {} points", report.iterations, points.len());
        match verifier.verify(problem, &t) {
            VerifyResult::Valid => {
                report.wall_time = started.elapsed();
                report.points = points;
                return Ok(CegisOutcome::Solved { expr: t, report });
            }
            VerifyResult::Counterexample(p) => {
                debug_assert!(!points.contains(&p));
                points.push(p);
            }
            VerifyResult::Unknown(reason) => {
                report.best = Some(t);
                return fail(reason, report, points);
            }
        }
    }
}
