use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use probenum::cegis::{cegis, parse_problem, Bounds, CegisConfig, CegisOutcome, SearchConfig, SynthesisProblem};
use probenum::corpus::{extract, parse_corpus, CorpusProgram, Depth};
use probenum::enumerate::{Budget, Enumerator, Next, PriorityMode, SharedTrace, Stats};
use probenum::grammarfile::{
    compile, merge_grammar_files, parse_grammar_file, CompileOptions, GrammarFile, DEFAULT_GRAMMAR,
};
use probenum::lang::{show_env, MiniType};
use probenum::repair::{
    generate_tests, parse_task_file, random_inputs, repair, Attempt, GrammarChoice, RepairConfig, RepairOutcome,
    RepairTask,
};

#[derive(Parser)]
#[command(name = "probenum", version, about = "Probabilistic enumeration, synthesis and repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the enumeration trace (tab-separated, one event per line).
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    JsonLines,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an expression meeting a problem's specification.
    Synth {
        problem: PathBuf,
        /// Grammar files, merged. Defaults to the problem's grammar or the built-in one.
        #[arg(long, num_args = 1..)]
        grammar: Vec<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Repair the function named by a task file.
    Repair {
        task: PathBuf,
        /// Base grammar files, merged. Defaults to the built-in grammar.
        #[arg(long, num_args = 1..)]
        grammar: Vec<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Depth of the grammar extracted from the program under repair.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        depth: u8,
        #[arg(long, value_enum, default_value_t = Grammars::SimilarThenPlain)]
        grammars: Grammars,
        /// Extra random test inputs on top of the bounded ones.
        #[arg(long, default_value_t = 0)]
        random_tests: usize,
        /// Seed of the random test inputs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract a grammar file from a corpus of function definitions.
    Extract {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        depth: u8,
        /// A `.mini` file or a directory of them.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the most probable productions of a type.
    Enumerate {
        #[arg(long, num_args = 1.., required = true)]
        grammar: Vec<PathBuf>,
        #[arg(long = "type", value_parser = parse_type)]
        ty: MiniType,
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Variables in scope, as `name:Type`.
        #[arg(long = "var", value_parser = parse_var)]
        vars: Vec<(String, MiniType)>,
        /// Literals offered to `constant` productions.
        #[arg(long = "const", allow_hyphen_values = true)]
        constants: Vec<i64>,
        #[arg(long, value_enum, default_value_t = Mode::Astar)]
        mode: Mode,
        #[arg(long)]
        no_axioms: bool,
    },
    /// Run every problem and repair task of a directory under four
    /// configurations and print a results table.
    Bench {
        suite: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        bounds: BoundArgs,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Dijkstra,
    Astar,
    AstarScore,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Grammars {
    SimilarThenPlain,
    Similar,
    Plain,
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Mode::AstarScore)]
    mode: Mode,
    /// Score coefficient of `astar-score`.
    #[arg(short, long = "score-coefficient", default_value_t = 1.0, value_parser = non_negative)]
    c: f64,
    #[arg(long)]
    no_prune: bool,
    #[arg(long)]
    no_indist: bool,
    #[arg(long)]
    no_dedup: bool,
    #[arg(long)]
    no_axioms: bool,
    /// Largest number of dequeued nodes per search.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_nodes: Option<u64>,
    /// Time limit per search.
    #[arg(long, value_parser = positive)]
    seconds: Option<f64>,
}

impl SearchArgs {
    fn apply(&self, base: SearchConfig) -> SearchConfig {
        SearchConfig {
            mode: priority_mode(self.mode, self.c),
            prune: !self.no_prune,
            indist: !self.no_indist,
            dedup: !self.no_dedup,
            max_dequeues: self.max_nodes.unwrap_or(base.max_dequeues),
            time_limit: self.seconds.map(Duration::from_secs_f64).unwrap_or(base.time_limit),
            trace: base.trace,
        }
    }
}

#[derive(Args, Clone)]
struct BoundArgs {
    /// Verification integer bound B: integers range over [-B, B].
    #[arg(long = "bound", value_parser = clap::value_parser!(i64).range(0..))]
    int_bound: Option<i64>,
    /// Verification list length bound L.
    #[arg(long = "max-len")]
    max_list_len: Option<usize>,
}

impl BoundArgs {
    fn apply(&self, base: Bounds) -> Bounds {
        Bounds {
            int_bound: self.int_bound.unwrap_or(base.int_bound),
            max_list_len: self.max_list_len.unwrap_or(base.max_list_len),
            ..base
        }
    }
}

fn priority_mode(mode: Mode, c: f64) -> PriorityMode {
    match mode {
        Mode::Dijkstra => PriorityMode::Dijkstra,
        Mode::Astar => PriorityMode::AStar,
        Mode::AstarScore => PriorityMode::AStarScore(c),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err("expected a finite number ≥ 0".into()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err("expected a finite number > 0".into()),
    }
}

fn parse_type(s: &str) -> Result<MiniType, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_var(s: &str) -> Result<(String, MiniType), String> {
    let (name, ty) = s.split_once(':').ok_or("expected `name:Type`")?;
    Ok((name.trim().to_string(), parse_type(ty.trim())?))
}

/// Prints human text or one JSON record per call.
struct Out {
    format: Format,
}

impl Out {
    fn emit(&self, human: impl FnOnce() -> String, record: impl FnOnce() -> Json) {
        match self.format {
            Format::Human => println!("{}", human()),
            Format::JsonLines => println!("{}", record()),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_grammars(paths: &[PathBuf]) -> Result<GrammarFile> {
    if paths.is_empty() {
        return Ok(parse_grammar_file(DEFAULT_GRAMMAR)?);
    }
    let files = paths
        .iter()
        .map(|p| parse_grammar_file(&read(p)?).with_context(|| format!("in {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_grammar_files(&files)?)
}

/// The corpus files under `path`: the file itself, or every `.mini` file
/// of the directory in name order.
fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .with_context(|| format!("cannot read {}", path.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "mini"));
    files.sort();
    Ok(files)
}

fn load_corpus(files: &[PathBuf]) -> Result<CorpusProgram> {
    let mut all = CorpusProgram::default();
    for f in files {
        let p = parse_corpus(&read(f)?).with_context(|| format!("in {}", f.display()))?;
        all.functions.extend(p.functions);
    }
    Ok(all)
}

fn depth(d: u8) -> Depth {
    if d == 2 {
        Depth::Two
    } else {
        Depth::One
    }
}

fn stats_json(s: &Stats) -> Json {
    json!({
        "dequeued": s.dequeued,
        "emitted": s.emitted,
        "pushed": s.pushed,
        "pruned": s.pruned,
        "dedup_dropped": s.dedup_dropped,
        "rewrites": s.rewrites,
    })
}

fn open_trace(path: &Option<PathBuf>) -> Result<Option<SharedTrace>> {
    path.as_ref()
        .map(|p| {
            let f = fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(SharedTrace::new(std::io::BufWriter::new(f)))
        })
        .transpose()
}

fn load_problem(path: &Path) -> Result<SynthesisProblem> {
    let mut p = parse_problem(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    if p.name.is_empty() {
        p.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(p)
}

fn load_task(path: &Path) -> Result<RepairTask> {
    let file = parse_task_file(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let program_path = path.parent().unwrap_or(Path::new(".")).join(&file.program);
    let program = load_corpus(&[program_path])?;
    Ok(RepairTask::from_file(&file, program)?)
}

fn run_synth(
    out: &Out,
    problem_path: &Path,
    grammar: &[PathBuf],
    config: &CegisConfig,
    axioms: bool,
) -> Result<bool> {
    let problem = load_problem(problem_path)?;
    let grammar_paths: Vec<PathBuf> = match (&problem.grammar, grammar.is_empty()) {
        (Some(g), true) => vec![problem_path.parent().unwrap_or(Path::new(".")).join(g)],
        _ => grammar.to_vec(),
    };
    let g = problem.compile_grammar(&load_grammars(&grammar_paths)?, axioms)?;
    log::info!("{} rules", g.len());
    let outcome = cegis(&problem, &g, config)?;
    let report = outcome.report();
    let solution = outcome.solution().map(|e| e.to_string());
    out.emit(
        || {
            let mut s = match &outcome {
                CegisOutcome::Solved { expr, .. } => format!("{}: {} = {expr}\n", problem.name, problem.output.0),
                CegisOutcome::Failed { reason, .. } => format!("{}: no solution ({reason})\n", problem.name),
            };
            let st = report.stats;
            s += &format!(
                "iterations {}  points {:?}  dequeued {}  emitted {}  pruned {}  dedup-dropped {}  time {:.3}s",
                report.iterations,
                report.point_counts,
                st.dequeued,
                st.emitted,
                st.pruned,
                st.dedup_dropped,
                report.wall_time.as_secs_f64()
            );
            s
        },
        || {
            json!({
                "result": "synth",
                "problem": problem.name,
                "solved": solution.is_some(),
                "solution": solution,
                "iterations": report.iterations,
                "points": report.point_counts,
                "stats": stats_json(&report.stats),
                "seconds": report.wall_time.as_secs_f64(),
            })
        },
    );
    Ok(solution.is_some())
}

fn attempt_json(a: &Attempt) -> Json {
    json!({
        "event": "attempt",
        "location": a.location,
        "similar": a.similar,
        "solved": a.solved,
        "iterations": a.iterations,
        "dequeued": a.dequeued,
        "message": a.message,
    })
}

fn run_repair(out: &Out, task: &RepairTask, base: &GrammarFile, config: &RepairConfig) -> Result<bool> {
    let started = Instant::now();
    let outcome = repair(task, base, config)?;
    let seconds = started.elapsed().as_secs_f64();
    for a in outcome.attempts() {
        out.emit(
            || {
                format!(
                    "  location {:?} with {} grammar: {} ({} iterations, {} dequeued)",
                    a.location,
                    if a.similar { "similar-term" } else { "plain" },
                    a.message,
                    a.iterations,
                    a.dequeued
                )
            },
            || attempt_json(a),
        );
    }
    let dequeued: u64 = outcome.attempts().iter().map(|a| a.dequeued).sum();
    match &outcome {
        RepairOutcome::Correct => {
            out.emit(
                || format!("{}: already meets its contract on all tests", task.function),
                || json!({"result": "repair", "function": task.function, "status": "correct"}),
            );
            Ok(true)
        }
        RepairOutcome::Repaired {
            function,
            location,
            replacement,
            ..
        } => {
            let fixed = RepairTask::new(
                CorpusProgram {
                    functions: vec![function.clone()],
                },
                &task.function,
                task.tests.clone(),
            )?;
            let verified = generate_tests(&fixed, config.bounds)?.failing.is_empty();
            out.emit(
                || {
                    format!(
                        "{}: replaced {:?} by {replacement} ({})\n{function}\ndequeued {dequeued}  time {seconds:.3}s",
                        task.function,
                        location,
                        if verified { "verified" } else { "NOT verified" }
                    )
                },
                || {
                    json!({
                        "result": "repair",
                        "function": task.function,
                        "status": "repaired",
                        "location": location,
                        "replacement": replacement.to_string(),
                        "program": function.to_string(),
                        "verified": verified,
                        "dequeued": dequeued,
                        "seconds": seconds,
                    })
                },
            );
            Ok(verified)
        }
        RepairOutcome::Failed { .. } => {
            out.emit(
                || format!("{}: no repair found (dequeued {dequeued}, time {seconds:.3}s)", task.function),
                || {
                    json!({"result": "repair", "function": task.function, "status": "failed",
                           "dequeued": dequeued, "seconds": seconds})
                },
            );
            Ok(false)
        }
    }
}

fn run_extract(out: &Out, d: u8, corpus: &Path, dest: &Path) -> Result<bool> {
    let files = corpus_files(corpus)?;
    if files.is_empty() {
        bail!("no .mini files in {}", corpus.display());
    }
    let program = load_corpus(&files)?;
    let gf = extract(&program, depth(d));
    fs::write(dest, gf.to_string()).with_context(|| format!("cannot write {}", dest.display()))?;
    out.emit(
        || {
            format!(
                "{} productions from {} functions written to {}",
                gf.productions.len(),
                program.functions.len(),
                dest.display()
            )
        },
        || {
            json!({"result": "extract", "depth": d, "functions": program.functions.len(),
                   "productions": gf.productions.len(), "out": dest.display().to_string()})
        },
    );
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn run_enumerate(
    out: &Out,
    trace: Option<SharedTrace>,
    grammar: &[PathBuf],
    ty: &MiniType,
    top: usize,
    vars: &[(String, MiniType)],
    constants: &[i64],
    mode: Mode,
    axioms: bool,
) -> Result<bool> {
    let gf = load_grammars(grammar)?;
    let opts = CompileOptions {
        scope: vars.to_vec(),
        constants: constants.to_vec(),
        seed_types: [ty.clone()].into(),
        axioms,
        ..CompileOptions::default()
    };
    let g = compile(&gf, &opts)?;
    let mut e = Enumerator::new(&g, g.start_for(ty)?, priority_mode(mode, 0.0))?.with_budget(Budget {
        max_dequeues: u64::MAX,
        deadline: None,
    });
    if let Some(t) = trace {
        e = e.with_trace(Box::new(t));
    }
    let mut rank = 0;
    while rank < top {
        let Next::Emit(p) = e.next_production() else { break };
        rank += 1;
        out.emit(
            || format!("{rank:>4}  {:.12}  {}", p.probability(), p.expr),
            || {
                json!({"result": "production", "rank": rank, "probability": p.probability(),
                       "cost": p.cost, "expr": p.expr.to_string()})
            },
        );
    }
    Ok(rank > 0)
}

/// One bench configuration.
struct BenchConfig {
    name: &'static str,
    grammar: Option<Depth>,
    optimized: bool,
    axioms: bool,
}

const BENCH_CONFIGS: [BenchConfig; 4] = [
    BenchConfig {
        name: "builtin-plain",
        grammar: None,
        optimized: false,
        axioms: true,
    },
    BenchConfig {
        name: "builtin",
        grammar: None,
        optimized: true,
        axioms: true,
    },
    BenchConfig {
        name: "depth-1",
        grammar: Some(Depth::One),
        optimized: true,
        axioms: true,
    },
    BenchConfig {
        name: "depth-2",
        grammar: Some(Depth::Two),
        optimized: true,
        axioms: false,
    },
];

#[derive(Default, Clone, Copy)]
struct Row {
    solved: bool,
    iterations: usize,
    stats: Stats,
    seconds: f64,
}

fn bench_problem(problem: &SynthesisProblem, gf: &GrammarFile, bc: &BenchConfig, config: &CegisConfig) -> Result<Row> {
    let g = problem.compile_grammar(gf, bc.axioms)?;
    let outcome = cegis(problem, &g, config)?;
    let r = outcome.report();
    Ok(Row {
        solved: outcome.solution().is_some(),
        iterations: r.iterations,
        stats: r.stats,
        seconds: r.wall_time.as_secs_f64(),
    })
}

fn bench_task(task: &RepairTask, gf: &GrammarFile, bc: &BenchConfig, config: &RepairConfig) -> Result<Row> {
    let config = RepairConfig {
        depth: bc.grammar.unwrap_or(Depth::One),
        axioms: bc.axioms,
        ..config.clone()
    };
    let started = Instant::now();
    let outcome = repair(task, gf, &config)?;
    let stats = Stats {
        dequeued: outcome.attempts().iter().map(|a| a.dequeued).sum(),
        ..Stats::default()
    };
    Ok(Row {
        solved: !matches!(outcome, RepairOutcome::Failed { .. }),
        iterations: outcome.attempts().iter().map(|a| a.iterations).sum(),
        stats,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn run_bench(out: &Out, suite: &Path, search: &SearchArgs, bounds: &BoundArgs, trace: Option<SharedTrace>) -> Result<bool> {
    let mut entries: Vec<PathBuf> = fs::read_dir(suite)
        .with_context(|| format!("cannot read {}", suite.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.sort();
    let has_ext = |p: &PathBuf, ext: &str| p.extension().is_some_and(|e| e == ext);
    let problems: Vec<&PathBuf> = entries.iter().filter(|p| has_ext(p, "problem")).collect();
    let tasks: Vec<&PathBuf> = entries.iter().filter(|p| has_ext(p, "task")).collect();
    let corpus_paths: Vec<PathBuf> = entries.iter().filter(|p| has_ext(p, "mini")).cloned().collect();
    if problems.is_empty() && tasks.is_empty() {
        bail!("no .problem or .task files in {}", suite.display());
    }
    let corpus = load_corpus(&corpus_paths)?;
    let builtin = parse_grammar_file(DEFAULT_GRAMMAR)?;

    let cegis_config = |optimized: bool| CegisConfig {
        search: search.apply(SearchConfig {
            trace: trace.clone(),
            ..SearchConfig::default()
        }),
        bounds: bounds.apply(Bounds::default()),
        ..CegisConfig::default()
    }
    .with_optimizations(optimized);
    let repair_defaults = RepairConfig::default();
    let repair_config = |optimized: bool| RepairConfig {
        search: search
            .apply(SearchConfig {
                trace: trace.clone(),
                ..repair_defaults.search.clone()
            })
            .with_optimizations(optimized),
        bounds: bounds.apply(repair_defaults.bounds),
        ..repair_defaults.clone()
    };

    if out.format == Format::Human {
        println!(
            "{:<16} {:<14} {:>6} {:>5} {:>10} {:>9} {:>9} {:>9} {:>9}",
            "problem", "config", "solved", "iter", "dequeued", "emitted", "pruned", "dropped", "seconds"
        );
    }
    let mut all_solved = true;
    for bc in &BENCH_CONFIGS {
        let grammar = match bc.grammar {
            None => builtin.clone(),
            Some(_) if corpus.functions.is_empty() => {
                out.emit(
                    || format!("{:<16} {:<14} skipped: no .mini corpus", "*", bc.name),
                    || json!({"event": "skip", "config": bc.name, "reason": "no corpus"}),
                );
                continue;
            }
            Some(d) => extract(&corpus, d),
        };
        let mut total = Row::default();
        let mut count = 0;
        let mut solved = 0;
        let runs = problems
            .iter()
            .map(|p| (p, true))
            .chain(tasks.iter().map(|t| (t, false)));
        for (path, is_problem) in runs {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let row = if is_problem {
                bench_problem(&load_problem(path)?, &grammar, bc, &cegis_config(bc.optimized))?
            } else {
                bench_task(&load_task(path)?, &grammar, bc, &repair_config(bc.optimized))?
            };
            count += 1;
            solved += row.solved as usize;
            all_solved &= row.solved;
            total.iterations += row.iterations;
            total.stats += row.stats;
            total.seconds += row.seconds;
            out.emit(
                || format_row(&name, bc.name, &row),
                || bench_json("bench", &name, bc.name, &row),
            );
        }
        out.emit(
            || format_row(&format!("total {solved}/{count}"), bc.name, &Row { solved: solved == count, ..total }),
            || {
                let mut j = bench_json("bench-total", "*", bc.name, &total);
                j["solved"] = json!(solved);
                j["runs"] = json!(count);
                j
            },
        );
    }
    Ok(all_solved)
}

fn format_row(name: &str, config: &str, r: &Row) -> String {
    format!(
        "{:<16} {:<14} {:>6} {:>5} {:>10} {:>9} {:>9} {:>9} {:>9.3}",
        name,
        config,
        if r.solved { "yes" } else { "no" },
        r.iterations,
        r.stats.dequeued,
        r.stats.emitted,
        r.stats.pruned,
        r.stats.dedup_dropped,
        r.seconds
    )
}

fn bench_json(kind: &str, name: &str, config: &str, r: &Row) -> Json {
    json!({
        "result": kind,
        "problem": name,
        "config": config,
        "solved": r.solved,
        "iterations": r.iterations,
        "stats": stats_json(&r.stats),
        "seconds": r.seconds,
    })
}

trait Optimizations {
    fn with_optimizations(self, on: bool) -> Self;
}

impl Optimizations for SearchConfig {
    /// Leaves the settings alone when on; otherwise plain A*.
    fn with_optimizations(self, on: bool) -> Self {
        if on {
            self
        } else {
            SearchConfig {
                mode: PriorityMode::AStar,
                prune: false,
                indist: false,
                ..self
            }
        }
    }
}

impl Optimizations for CegisConfig {
    fn with_optimizations(self, on: bool) -> Self {
        CegisConfig {
            search: self.search.with_optimizations(on),
            ..self
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let out = Out { format: cli.format };
    let trace = open_trace(&cli.trace)?;
    let ok = match cli.command {
        Command::Synth {
            problem,
            grammar,
            search,
            bounds,
        } => {
            let config = CegisConfig {
                search: search.apply(SearchConfig {
                    trace: trace.clone(),
                    ..SearchConfig::default()
                }),
                bounds: bounds.apply(Bounds::default()),
                ..CegisConfig::default()
            };
            run_synth(&out, &problem, &grammar, &config, !search.no_axioms)?
        }
        Command::Repair {
            task,
            grammar,
            search,
            bounds,
            depth: d,
            grammars,
            random_tests,
            seed,
        } => {
            let defaults = RepairConfig::default();
            let config = RepairConfig {
                search: search.apply(SearchConfig {
                    trace: trace.clone(),
                    ..defaults.search.clone()
                }),
                bounds: bounds.apply(defaults.bounds),
                depth: depth(d),
                axioms: !search.no_axioms,
                grammars: match grammars {
                    Grammars::SimilarThenPlain => GrammarChoice::SimilarThenPlain,
                    Grammars::Similar => GrammarChoice::SimilarOnly,
                    Grammars::Plain => GrammarChoice::PlainOnly,
                },
                ..defaults
            };
            let mut task = load_task(&task)?;
            let extra = random_inputs(&task, random_tests, seed, 2 * config.bounds.int_bound, config.bounds.max_list_len);
            for t in &extra {
                log::debug!("random test {}", show_env(t));
            }
            task.tests.extend(extra);
            run_repair(&out, &task, &load_grammars(&grammar)?, &config)?
        }
        Command::Extract { depth: d, corpus, out: dest } => run_extract(&out, d, &corpus, &dest)?,
        Command::Enumerate {
            grammar,
            ty,
            top,
            vars,
            constants,
            mode,
            no_axioms,
        } => run_enumerate(&out, trace.clone(), &grammar, &ty, top, &vars, &constants, mode, !no_axioms)?,
        Command::Bench { suite, search, bounds } => run_bench(&out, &suite, &search, &bounds, trace.clone())?,
    };
    if let Some(mut t) = trace {
        use std::io::Write;
        t.flush()?;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
