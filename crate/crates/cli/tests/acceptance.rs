//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines are always printed.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use probenum::cegis::{cegis, search, Bounds, CegisConfig, SearchConfig, SynthesisProblem, VerifyResult, Verifier};
use probenum::corpus::{extract, parse_corpus, Depth};
use probenum::enumerate::{Budget, Enumerator, Next, PriorityMode};
use probenum::grammar::{horizons, normalize, Nonterminal, Pcfg, Rule};
use probenum::grammarfile::{compile, parse_grammar_file, AnnType, CompileOptions, ProdBody, DEFAULT_GRAMMAR};
use probenum::lang::{eval, Env, Expr, MiniType, Op, Value};
use probenum::repair::{run_benchmark, RepairConfig};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn grammar_file(name: &str, vars: &[(&str, MiniType)]) -> Pcfg {
    let text = std::fs::read_to_string(root().join("grammars").join(name)).unwrap();
    let opts = CompileOptions {
        scope: vars.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
        axioms: false,
        ..CompileOptions::default()
    };
    compile(&parse_grammar_file(&text).unwrap(), &opts).unwrap()
}

fn int_bool() -> Pcfg {
    grammar_file("int_bool.grammar", &[("x", MiniType::Int)])
}

fn nonzero() -> Pcfg {
    grammar_file("nonzero.grammar", &[("x", MiniType::Int)])
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_probenum"))
        .args(["--format", "json-lines", "enumerate", "--type", "Int", "--var", "x:Int", "--top", "50"])
        .arg("--grammar")
        .arg(root().join("grammars/int_bool.grammar"))
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if !out.status.success() {
        return Err(format!("exit {:?}", out.status.code()));
    }
    let hit = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|r| r["expr"] == "(+ x 1)");
    let Some(hit) = hit else {
        return Err("(+ x 1) not among the top 50".into());
    };
    let p = hit["probability"].as_f64().unwrap();
    check(
        (p - 0.0135).abs() <= 1e-9 && elapsed < Duration::from_secs(1),
        format!("P(x + 1) = {p} at rank {}, {:.3}s", hit["rank"], elapsed.as_secs_f64()),
    )
}

/// A random grammar over labeled integer nonterminals. Every template
/// starts with a literal unique to its rule, so distinct derivations print
/// differently. The first rule of each nonterminal is a leaf.
struct RandomGrammar {
    nts: Vec<Nonterminal>,
    /// Per nonterminal: (literal, children, weight).
    rules: Vec<Vec<(i64, Vec<usize>, f64)>>,
}

impl RandomGrammar {
    fn new(rng: &mut ChaCha8Rng, recursive: bool) -> Self {
        let n = rng.gen_range(1..=4);
        let nts: Vec<Nonterminal> = (0..n)
            .map(|i| Nonterminal::labeled(MiniType::Int, format!("N{i}")))
            .collect();
        let mut lit = 0;
        let mut rules = Vec::new();
        for i in 0..n {
            let mut rs = Vec::new();
            for k in 0..rng.gen_range(1..=5) {
                let reachable = if recursive { n } else { i };
                let arity = if k == 0 || reachable == 0 { 0 } else { rng.gen_range(0..=2) };
                let children = (0..arity).map(|_| rng.gen_range(0..reachable)).collect();
                lit += 1;
                rs.push((lit, children, rng.gen_range(1..=9) as f64));
            }
            rules.push(rs);
        }
        RandomGrammar { nts, rules }
    }

    fn build(lit: i64, children: Vec<Expr>) -> Expr {
        let mut it = children.into_iter();
        match (it.next(), it.next()) {
            (None, _) => Expr::Int(lit),
            (Some(c), None) => Expr::binary(Op::Plus, Expr::Int(lit), c),
            (Some(a), Some(b)) => Expr::binary(Op::Plus, Expr::Int(lit), Expr::binary(Op::Minus, a, b)),
        }
    }

    fn pcfg(&self) -> Pcfg {
        let mut out = Vec::new();
        for (i, rs) in self.rules.iter().enumerate() {
            for (lit, children, w) in rs {
                let holes = children.iter().map(|&c| self.nts[c].hole()).collect();
                out.push(Rule::new(format!("r{lit}"), self.nts[i].clone(), Self::build(*lit, holes), *w));
            }
        }
        normalize(out).unwrap()
    }

    /// Largest expected number of children of one expansion. Below 1 the
    /// derivations are finite with probability 1 and the frontier of a
    /// cost bound stays small.
    fn mean_children(&self) -> f64 {
        self.rules
            .iter()
            .map(|rs| {
                let total: f64 = rs.iter().map(|r| r.2).sum();
                rs.iter().map(|r| r.2 * r.1.len() as f64).sum::<f64>() / total
            })
            .fold(0.0, f64::max)
    }

    fn start(&self) -> &Nonterminal {
        self.nts.last().unwrap()
    }

    /// Every production of nonterminal `i` with its probability, for
    /// grammars without recursion.
    fn all(&self, i: usize) -> Vec<(Expr, f64)> {
        let total: f64 = self.rules[i].iter().map(|r| r.2).sum();
        let mut out = Vec::new();
        for (lit, children, w) in &self.rules[i] {
            let mut partial: Vec<(Vec<Expr>, f64)> = vec![(Vec::new(), w / total)];
            for &c in children {
                let options = self.all(c);
                partial = partial
                    .into_iter()
                    .flat_map(|(es, p)| {
                        options.iter().map(move |(o, q)| {
                            let mut es = es.clone();
                            es.push(o.clone());
                            (es, p * q)
                        })
                    })
                    .collect();
            }
            out.extend(partial.into_iter().map(|(es, p)| (Self::build(*lit, es), p)));
        }
        out
    }
}

/// Emissions as (expression, cost, dequeues so far).
fn run(g: &Pcfg, start: &Nonterminal, mode: PriorityMode, limit: usize) -> Vec<(String, f64, u64)> {
    let e = Enumerator::new(g, start, mode).unwrap().with_budget(Budget {
        max_dequeues: 20_000_000,
        deadline: None,
    });
    e.take(limit).map(|p| (p.expr.to_string(), p.cost, p.dequeued)).collect()
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total = 0;
    for k in 0..10 {
        let rg = RandomGrammar::new(&mut rng, false);
        let g = rg.pcfg();
        let got = run(&g, rg.start(), PriorityMode::Dijkstra, usize::MAX);
        let mut want: BTreeMap<String, f64> = BTreeMap::new();
        for (e, p) in rg.all(rg.nts.len() - 1) {
            if want.insert(e.to_string(), p).is_some() {
                return Err(format!("grammar {k}: oracle has a duplicate"));
            }
        }
        let mut seen = BTreeMap::new();
        for (e, c, _) in &got {
            if seen.insert(e.clone(), (-c).exp()).is_some() {
                return Err(format!("grammar {k}: {e} emitted twice"));
            }
        }
        if seen.len() != want.len() || seen.iter().any(|(e, p)| want.get(e).is_none_or(|q| (p - q).abs() > 1e-9)) {
            return Err(format!("grammar {k}: {} emitted, {} expected", seen.len(), want.len()));
        }
        if got.windows(2).any(|w| w[1].1 < w[0].1 - 1e-12) {
            return Err(format!("grammar {k}: probability increases"));
        }
        total += got.len();
    }
    let elapsed = started.elapsed();
    check(
        elapsed < Duration::from_secs(10),
        format!("10 grammars, {total} productions match the oracle, {:.3}s", elapsed.as_secs_f64()),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut grammars: Vec<RandomGrammar> = (0..10).map(|_| RandomGrammar::new(&mut rng, false)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    while grammars.len() < 20 {
        let rg = RandomGrammar::new(&mut rng, true);
        if rg.mean_children() <= 0.8 {
            grammars.push(rg);
        }
    }
    let (mut saved, mut compared, mut strict_exceptions) = (0u64, 0usize, 0usize);
    for (k, rg) in grammars.iter().enumerate() {
        let g = rg.pcfg();
        let dij = run(&g, rg.start(), PriorityMode::Dijkstra, 500);
        let ast = run(&g, rg.start(), PriorityMode::AStar, 500);
        if ast.windows(2).any(|w| w[1].1 < w[0].1 - 1e-12) {
            return Err(format!("grammar {k}: A* cost decreases"));
        }
        if dij.len() != ast.len() || dij.iter().zip(&ast).any(|(d, a)| (d.1 - a.1).abs() > 1e-9) {
            return Err(format!("grammar {k}: A* and Dijkstra cost sequences differ"));
        }
        // Equal-cost productions may leave either enumerator in any order,
        // so A* is held to the dequeues Dijkstra needs to finish the whole
        // cost class, for classes that end inside the prefix.
        let class_end = |c: f64| -> Option<u64> {
            let last = dij.last()?;
            (last.1 > c + 1e-9).then(|| dij.iter().filter(|d| (d.1 - c).abs() <= 1e-9).map(|d| d.2).max())?
        };
        let at: HashMap<&str, u64> = dij.iter().map(|(e, _, n)| (e.as_str(), *n)).collect();
        for (e, c, n) in &ast {
            let Some(&d) = at.get(e.as_str()) else { continue };
            if *n > d {
                strict_exceptions += 1;
            }
            if let Some(end) = class_end(*c) {
                compared += 1;
                if *n > end {
                    return Err(format!("grammar {k}: A* needs {n} dequeues for {e}, Dijkstra {end} for its cost class"));
                }
            }
        }
        saved += dij.last().map_or(0, |d| d.2).saturating_sub(ast.last().map_or(0, |a| a.2));
    }
    check(
        true,
        format!(
            "20 grammars, {compared} emissions checked, A* saves {saved} dequeues in total, \
             {strict_exceptions} emissions reordered within a cost tie"
        ),
    )
}

fn criterion_4() -> Outcome {
    let g = int_bool();
    let start = g.start_for(&MiniType::Int).unwrap().clone();
    let mut e = Enumerator::new(&g, &start, PriorityMode::AStar).unwrap().with_dedup(false);
    let mut emitted = 0.0;
    let mut worst: f64 = 0.0;
    for step in 1..=1000 {
        e.set_budget(Budget {
            max_dequeues: step,
            deadline: None,
        });
        match e.next_production() {
            Next::Emit(p) => emitted += p.probability(),
            Next::BudgetExhausted => {}
            Next::Exhausted => return Err(format!("grammar exhausted at step {step}")),
        }
        let queued: f64 = e.queued_costs().iter().map(|c| (-c).exp()).sum();
        worst = worst.max((queued + emitted - 1.0).abs());
    }
    check(worst <= 1e-6, format!("largest deviation from 1 over 1000 steps: {worst:.3e}"))
}

/// Smallest cost of a derivation of depth at most `depth`.
fn min_cost(g: &Pcfg, nt: &Nonterminal, depth: usize) -> f64 {
    if depth == 0 {
        return f64::INFINITY;
    }
    g.rules_of(nt)
        .iter()
        .map(|r| r.cost + r.children.iter().map(|c| min_cost(g, c, depth - 1)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn criterion_5() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, g) in [("int/bool", int_bool()), ("nonzero", nonzero())] {
        let h = horizons(&g).unwrap();
        for nt in g.nonterminals() {
            let brute = min_cost(&g, nt, 4);
            ok &= (h[nt] - brute).abs() <= 1e-9;
            details.push(format!("{name} {nt} {:.5}", h[nt]));
        }
    }
    let g = int_bool();
    let h = horizons(&g).unwrap();
    let int = h[&Nonterminal::plain(MiniType::Int)];
    let boolean = h[&Nonterminal::plain(MiniType::Bool)];
    ok &= (int - -(0.3f64).ln()).abs() <= 1e-9 && (boolean - (-(0.8f64).ln() - 2.0 * (0.3f64).ln())).abs() <= 1e-9;
    check(ok, details.join(", "))
}

fn problem(inputs: &[(&str, MiniType)], pc: &str, spec: &str) -> SynthesisProblem {
    SynthesisProblem::new(inputs, ("x", MiniType::Int), pc.parse().unwrap(), spec.parse().unwrap())
}

fn conditional() -> SynthesisProblem {
    problem(&[("a", MiniType::Int)], "true", "(if (= a 5) (= x 6) (if (= a 7) (= x 9) (= x a)))")
}

fn max2() -> SynthesisProblem {
    let ab = [("a", MiniType::Int), ("b", MiniType::Int)];
    problem(&ab, "true", "(and (and (<= a x) (<= b x)) (not (and (not (= x a)) (not (= x b)))))")
}

fn abs() -> SynthesisProblem {
    problem(&[("a", MiniType::Int)], "true", "(and (<= 0 x) (not (and (not (= x a)) (not (= x (- 0 a))))))")
}

fn pairs() -> SynthesisProblem {
    let l = [("l", MiniType::list(MiniType::Int))];
    problem(&l, "(<= 2 (size l))", "(= x (+ (head l) (head (tail l))))")
}

fn compiled(p: &SynthesisProblem) -> Pcfg {
    p.compile_grammar(&parse_grammar_file(DEFAULT_GRAMMAR).unwrap(), true).unwrap()
}

fn criterion_6() -> Outcome {
    let ab = [("a", MiniType::Int), ("b", MiniType::Int)];
    let min2 = problem(&ab, "true", "(and (and (<= x a) (<= x b)) (not (and (not (= x a)) (not (= x b)))))");
    let sum = problem(&ab, "true", "(= x (+ a b))");
    let at = |a: i64| -> Env { [("a".to_string(), Value::Int(a))].into_iter().collect() };
    let mut cases = vec![("conditional", conditional(), vec![at(2), at(5), at(7)])];
    for (name, p) in [("max", max2()), ("abs", abs()), ("pairs", pairs()), ("min", min2), ("sum", sum)] {
        let g = compiled(&p);
        let out = cegis(&p, &g, &CegisConfig::default()).unwrap();
        let points = out.report().points.clone();
        cases.push((name, p, points));
    }
    let base = SearchConfig {
        mode: PriorityMode::AStar,
        prune: false,
        indist: false,
        dedup: false,
        max_dequeues: 5_000_000,
        time_limit: Duration::from_secs(120),
        trace: None,
    };
    let variants = [
        ("prune", SearchConfig { prune: true, ..base.clone() }),
        ("indist", SearchConfig { indist: true, dedup: true, ..base.clone() }),
        ("dedup", SearchConfig { dedup: true, ..base.clone() }),
        ("score", SearchConfig { mode: PriorityMode::AStarScore(1.0), ..base.clone() }),
        ("all", SearchConfig { prune: true, indist: true, dedup: true, mode: PriorityMode::AStarScore(1.0), ..base.clone() }),
    ];
    let mut fewer = 0;
    let mut details = Vec::new();
    for (name, p, points) in &cases {
        let g = compiled(p);
        let reference = search(p, &g, points, &base).unwrap();
        let Some(want) = reference.found else {
            return Err(format!("{name}: unoptimized search found nothing"));
        };
        let mut all_dequeued = 0;
        for (vname, cfg) in &variants {
            let out = search(p, &g, points, cfg).unwrap();
            let Some(got) = out.found else {
                return Err(format!("{name}/{vname}: nothing found"));
            };
            if points.iter().any(|pt| eval(&got, pt) != eval(&want, pt)) {
                return Err(format!("{name}/{vname}: {got} differs from {want} on A"));
            }
            if *vname == "all" {
                all_dequeued = out.stats.dequeued;
            }
        }
        if all_dequeued < reference.stats.dequeued {
            fewer += 1;
        }
        details.push(format!("{name} |A|={} {}→{}", points.len(), reference.stats.dequeued, all_dequeued));
    }
    check(fewer >= 4, format!("fewer dequeues on {fewer}/6: {}", details.join(", ")))
}

fn criterion_7() -> Outcome {
    let bounds = Bounds {
        int_bound: 8,
        max_list_len: 4,
        ..Bounds::default()
    };
    let mut details = Vec::new();
    let mut ok = true;
    for (name, p) in [("conditional", conditional()), ("max", max2()), ("abs", abs()), ("pairs", pairs())] {
        let g = compiled(&p);
        let started = Instant::now();
        let out = cegis(&p, &g, &CegisConfig::default()).unwrap();
        let elapsed = started.elapsed();
        match out.solution() {
            Some(t) => {
                let valid = Verifier::new(&p, bounds).verify(&p, t) == VerifyResult::Valid;
                ok &= valid && elapsed < Duration::from_secs(30);
                details.push(format!("{name} = {t} ({:.2}s)", elapsed.as_secs_f64()));
            }
            None => {
                ok = false;
                details.push(format!("{name} unsolved"));
            }
        }
    }
    check(ok, details.join(", "))
}

/// Production as (return type, parameter types, body, weight, tags).
type Shape = (String, Vec<String>, String, f64, Vec<String>);

fn shapes(gf: &probenum::grammarfile::GrammarFile) -> Vec<Shape> {
    let mut out: Vec<Shape> = gf
        .productions
        .iter()
        .map(|p| {
            let mut tags = p.tags.clone();
            tags.sort();
            let body = match &p.body {
                ProdBody::Expr(e) => e.to_string(),
                b => b.to_string(),
            };
            let params = p.params.iter().map(|(_, t)| t.to_string()).collect();
            (p.ret.to_string(), params, body, p.weight, tags)
        })
        .collect();
    out.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    out
}

fn criterion_8() -> Outcome {
    let corpus = parse_corpus("(def f ((x Int)) -> Int (* x 2))").unwrap();
    let s = |v: &str| v.to_string();
    let tags = |t: &[&str]| t.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let mut d1: Vec<Shape> = vec![
        (s("Int"), vec![], s("2"), 1.0, tags(&["const"])),
        (s("Int"), vec![s("Int"), s("Int")], s("(* v0 v1)"), 1.0, tags(&["commut", "times"])),
        (s("Int"), vec![], s("(variable Int)"), 1.0, tags(&["top"])),
    ];
    d1.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    let got1 = shapes(&extract(&corpus, Depth::One));

    let mut d2: Vec<Shape> = vec![
        (s("Int_TOPLEVEL"), vec![s("Int_0_Times"), s("Int_1_Times")], s("(* v0 v1)"), 1.0, vec![]),
        (s("Int_0_Times"), vec![], s("(variable Int)"), 1.0, vec![]),
        (s("Int_1_Times"), vec![], s("2"), 1.0, vec![]),
        (s("Int"), vec![s("Int_TOPLEVEL")], s("v0"), 1.0, vec![]),
    ];
    d2.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    let gf2 = extract(&corpus, Depth::Two);
    let got2 = shapes(&gf2);
    let mut labels: Vec<&str> = gf2.labels.iter().map(|(l, _)| l.as_str()).collect();
    labels.sort();
    let labels_ok = labels == ["Int_0_Times", "Int_1_Times", "Int_TOPLEVEL"]
        && gf2.labels.iter().all(|(_, t)| *t == MiniType::Int)
        && gf2.productions.iter().all(|p| matches!(&p.ret, AnnType::Label(_)) || p.ret == AnnType::Plain(MiniType::Int));

    let g = nonzero();
    let prob = |id: &str| g.prob(id).unwrap_or(f64::NAN);
    let table = [
        ("start", 1.0),
        ("nz2Bi", 0.8),
        ("z", 0.2),
        ("plus", 0.25),
        ("minus", 0.125),
        ("o", 0.125),
    ];
    let x_rule = g
        .iter()
        .find(|r| r.rule.template() == Some(&Expr::var("x")))
        .map(|r| r.prob)
        .unwrap_or(f64::NAN);
    let table_ok = table.iter().all(|(id, p)| (prob(id) - p).abs() <= 1e-12) && (x_rule - 0.5).abs() <= 1e-12;
    check(
        got1 == d1 && got2 == d2 && labels_ok && table_ok,
        format!(
            "depth-1 {}, depth-2 {}, attribute grammar table {}",
            if got1 == d1 { "matches" } else { "differs" },
            if got2 == d2 && labels_ok { "matches" } else { "differs" },
            if table_ok { "matches" } else { "differs" }
        ),
    )
}

fn criterion_9() -> Outcome {
    let base = parse_grammar_file(DEFAULT_GRAMMAR).unwrap();
    let rows = run_benchmark(&base, &RepairConfig::default()).map_err(|e| e.to_string())?;
    let repaired = rows.iter().filter(|r| r.repaired && r.verified).count();
    let reduced = rows
        .iter()
        .filter(|r| r.repaired && r.solved_similar && (!r.solved_plain || r.dequeued_similar < r.dequeued_plain))
        .count();
    let details: Vec<String> = rows
        .iter()
        .map(|r| {
            let plain = if r.solved_plain { r.dequeued_plain.to_string() } else { "unsolved".into() };
            format!("{} {}/{plain}", r.name, r.dequeued_similar)
        })
        .collect();
    check(
        repaired >= 8 && reduced >= 8,
        format!(
            "{repaired}/{} repaired and verified, similar-term grammar cheaper on {reduced}: {}",
            rows.len(),
            details.join(", ")
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("PCFG probability of x + 1", criterion_1),
        ("Dijkstra enumeration against brute force", criterion_2),
        ("A* against Dijkstra", criterion_3),
        ("probability mass invariant", criterion_4),
        ("horizon fixpoint against brute force", criterion_5),
        ("optimizations preserve the first solution", criterion_6),
        ("CEGIS end to end", criterion_7),
        ("extractor and desugaring fidelity", criterion_8),
        ("repair suite", criterion_9),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let outcome = f();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n} PASS {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL {name} ({secs:.1}s): {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
