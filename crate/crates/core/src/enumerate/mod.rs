//! Top-down enumeration of grammar productions in order of decreasing
//! probability.
//!
//! The search tree has partial productions as nodes; a node's children
//! replace its leftmost hole with each rule of that hole's nonterminal.
//! Nodes are kept in a priority queue ordered by cost (Dijkstra) or cost
//! plus horizon (A*), optionally discounted by a score. Queue entries keep
//! only the canonical printed form of the expression, which doubles as
//! the deduplication key, and are parsed back when dequeued.

mod oracle;

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::rc::Rc;
use std::time::Instant;

pub use oracle::SpecHooks;

use crate::grammar::{horizons, GrammarError, Nonterminal, Pcfg};
use crate::lang::Expr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorityMode {
    Dijkstra,
    AStar,
    /// A* with a bonus of `c * ln(1 + score)`.
    AStarScore(f64),
}

impl PriorityMode {
    pub fn priority(self, cost: f64, horizon: f64, score: u32) -> f64 {
        match self {
            PriorityMode::Dijkstra => cost,
            PriorityMode::AStar => cost + horizon,
            PriorityMode::AStarScore(c) => cost + horizon - c * (1.0 + score as f64).ln(),
        }
    }
}

/// A trace destination that several enumerators can write to in turn.
#[derive(Clone)]
pub struct SharedTrace(Rc<RefCell<dyn Write>>);

impl SharedTrace {
    pub fn new(out: impl Write + 'static) -> Self {
        SharedTrace(Rc::new(RefCell::new(out)))
    }
}

impl std::fmt::Debug for SharedTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SharedTrace")
    }
}

impl Write for SharedTrace {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.0.borrow_mut().flush()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub max_dequeues: u64,
    pub deadline: Option<Instant>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_dequeues: 500_000,
            deadline: None,
        }
    }
}

/// Verdict of the hooks on a freshly expanded node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Assessment {
    pub discard: bool,
    pub score: u32,
}

/// Callbacks that customize the search.
pub trait Hooks {
    /// Called on every child before it is queued.
    fn assess(&mut self, _e: &Expr) -> Assessment {
        Assessment::default()
    }

    /// Called on every dequeued node; may replace it by an equivalent one.
    fn rewrite(&mut self, _e: &Expr) -> Option<Expr> {
        None
    }

    /// Called on every child before it is queued; must be cheap.
    fn rewrite_child(&mut self, _e: &Expr) -> Option<Expr> {
        None
    }

    /// False if `assess` and `rewrite_child` never look at their argument,
    /// which lets the enumerator skip building children.
    fn inspects_children(&self) -> bool {
        true
    }
}

pub struct NoHooks;

impl Hooks for NoHooks {
    fn inspects_children(&self) -> bool {
        false
    }
}

impl<H: Hooks + ?Sized> Hooks for &mut H {
    fn assess(&mut self, e: &Expr) -> Assessment {
        (**self).assess(e)
    }
    fn rewrite(&mut self, e: &Expr) -> Option<Expr> {
        (**self).rewrite(e)
    }
    fn rewrite_child(&mut self, e: &Expr) -> Option<Expr> {
        (**self).rewrite_child(e)
    }
    fn inspects_children(&self) -> bool {
        (**self).inspects_children()
    }
}

/// A complete production leaving the enumerator.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub expr: Expr,
    pub cost: f64,
    pub score: u32,
    /// Nodes dequeued so far, including this one.
    pub dequeued: u64,
}

impl Emitted {
    pub fn probability(&self) -> f64 {
        (-self.cost).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Next {
    Emit(Emitted),
    Exhausted,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub dequeued: u64,
    pub emitted: u64,
    pub pushed: u64,
    pub pruned: u64,
    pub dedup_dropped: u64,
    pub rewrites: u64,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, o: Stats) {
        self.dequeued += o.dequeued;
        self.emitted += o.emitted;
        self.pushed += o.pushed;
        self.pruned += o.pruned;
        self.dedup_dropped += o.dedup_dropped;
        self.rewrites += o.rewrites;
    }
}

struct Entry {
    priority: f64,
    key: Box<str>,
    cost: f64,
    horizon: f64,
    score: u32,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.key.cmp(&self.key))
    }
}

struct Expansion {
    text: String,
    template: Expr,
    cost: f64,
    child_horizon: f64,
    holes: usize,
}

/// Lazily enumerates the complete productions of a start symbol.
pub struct Enumerator<'g, H: Hooks = NoHooks> {
    horizon: HashMap<Nonterminal, f64>,
    expansions: HashMap<Nonterminal, (String, Vec<Expansion>)>,
    mode: PriorityMode,
    hooks: H,
    dedup: bool,
    budget: Budget,
    queue: BinaryHeap<Entry>,
    seen: HashSet<u128>,
    stats: Stats,
    trace: Option<Box<dyn Write + 'g>>,
}

fn key_hash(key: &str) -> u128 {
    let mut a = DefaultHasher::new();
    (0u8, key).hash(&mut a);
    let mut b = DefaultHasher::new();
    (1u8, key).hash(&mut b);
    ((a.finish() as u128) << 64) | b.finish() as u128
}

impl<'g> Enumerator<'g, NoHooks> {
    pub fn new(g: &'g Pcfg, start: &Nonterminal, mode: PriorityMode) -> Result<Self, GrammarError> {
        Enumerator::with_hooks(g, start, mode, NoHooks)
    }
}

impl<'g, H: Hooks> Enumerator<'g, H> {
    pub fn with_hooks(g: &'g Pcfg, start: &Nonterminal, mode: PriorityMode, hooks: H) -> Result<Self, GrammarError> {
        let horizon = horizons(g)?;
        let mut expansions = HashMap::new();
        for nt in g.nonterminals() {
            let rules = g
                .rules_of(nt)
                .iter()
                .map(|r| {
                    let template = r.rule.template().cloned().ok_or_else(|| GrammarError::NotGround(r.rule.id.clone()))?;
                    Ok(Expansion {
                        text: template.to_string(),
                        cost: r.cost,
                        child_horizon: r.children.iter().map(|c| horizon[c]).sum(),
                        holes: r.children.len(),
                        template,
                    })
                })
                .collect::<Result<Vec<_>, GrammarError>>()?;
            expansions.insert(nt.clone(), (nt.hole().to_string(), rules));
        }
        let mut e = Enumerator {
            expansions,
            mode,
            hooks,
            dedup: true,
            budget: Budget::default(),
            queue: BinaryHeap::new(),
            seen: HashSet::new(),
            stats: Stats::default(),
            trace: None,
            horizon,
        };
        let h = e.horizon.get(start).copied().unwrap_or(0.0);
        let key = start.hole().to_string();
        e.seen.insert(key_hash(&key));
        e.push(key.into_boxed_str(), 0.0, h, 0);
        Ok(e)
    }

    /// Enables or disables dropping of nodes whose key was queued before.
    pub fn with_dedup(mut self, on: bool) -> Self {
        self.dedup = on;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    /// Replaces the budget; dequeues made so far still count against it.
    pub fn set_budget(&mut self, budget: Budget) {
        self.budget = budget;
    }

    pub fn with_trace(mut self, out: Box<dyn Write + 'g>) -> Self {
        self.trace = Some(out);
        self
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn hooks(&self) -> &H {
        &self.hooks
    }

    /// Costs of all nodes currently queued.
    pub fn queued_costs(&self) -> Vec<f64> {
        self.queue.iter().map(|e| e.cost).collect()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    fn log(&mut self, event: &str, priority: f64, cost: f64, horizon: f64, score: u32, key: &str) {
        if let Some(out) = &mut self.trace {
            let _ = writeln!(out, "{event}\t{priority}\t{cost}\t{horizon}\t{score}\t{key}");
        }
    }

    fn push(&mut self, key: Box<str>, cost: f64, horizon: f64, score: u32) {
        self.stats.pushed += 1;
        self.queue.push(Entry {
            priority: self.mode.priority(cost, horizon, score),
            key,
            cost,
            horizon,
            score,
        });
    }

    /// Registers `key` as seen; false if it was seen before and dedup is on.
    fn fresh(&mut self, key: &str) -> bool {
        let new = self.seen.insert(key_hash(key));
        new || !self.dedup
    }

    pub fn next_production(&mut self) -> Next {
        loop {
            if self.stats.dequeued >= self.budget.max_dequeues
                || self.budget.deadline.is_some_and(|d| Instant::now() >= d)
            {
                return Next::BudgetExhausted;
            }
            let Some(entry) = self.queue.pop() else {
                return Next::Exhausted;
            };
            self.stats.dequeued += 1;
            let Entry {
                priority,
                mut key,
                cost,
                horizon,
                score,
            } = entry;
            self.log("DEQ", priority, cost, horizon, score, &key);
            let mut expr: Expr = key.parse().expect("queue keys are printed expressions");

            if let Some(rewritten) = self.hooks.rewrite(&expr) {
                if rewritten != expr {
                    self.stats.rewrites += 1;
                    let new_key = rewritten.to_string().into_boxed_str();
                    self.log("REWRITE", priority, cost, horizon, score, &new_key);
                    if !self.fresh(&new_key) {
                        self.stats.dedup_dropped += 1;
                        self.log("DROP-DUP", priority, cost, horizon, score, &new_key);
                        continue;
                    }
                    expr = rewritten;
                    key = new_key;
                }
            }

            let Some(nt) = expr.leftmost_hole().cloned() else {
                self.stats.emitted += 1;
                self.log("EMIT", priority, cost, horizon, score, &key);
                return Next::Emit(Emitted {
                    expr,
                    cost,
                    score,
                    dequeued: self.stats.dequeued,
                });
            };
            self.expand(&expr, &key, &nt, cost, horizon);
        }
    }

    fn expand(&mut self, expr: &Expr, key: &str, nt: &Nonterminal, cost: f64, horizon: f64) {
        let (hole_text, rules) = self.expansions.remove(nt).expect("hole of a grammar nonterminal");
        let at = key.find("(? ").expect("incomplete key has a hole");
        debug_assert!(key[at..].starts_with(hole_text.as_str()));
        let remaining = expr.hole_count() - 1;
        let inspects = self.hooks.inspects_children();
        for r in &rules {
            let child_cost = cost + r.cost;
            let holes = remaining + r.holes;
            let child_horizon = if holes == 0 {
                0.0
            } else {
                (horizon - self.horizon[nt] + r.child_horizon).max(0.0)
            };
            let tail = &key[at + hole_text.len()..];
            let mut child_key = String::with_capacity(at + r.text.len() + tail.len());
            child_key.push_str(&key[..at]);
            child_key.push_str(&r.text);
            child_key.push_str(tail);
            let mut child = None;
            if inspects {
                let mut built = expr.fill_leftmost(&r.template).expect("leftmost hole exists");
                if let Some(rewritten) = self.hooks.rewrite_child(&built) {
                    if rewritten != built {
                        self.stats.rewrites += 1;
                        built = rewritten;
                        child_key = built.to_string();
                        self.log("REWRITE", f64::NAN, child_cost, child_horizon, 0, &child_key);
                    }
                }
                child = Some(built);
            }
            if !self.fresh(&child_key) {
                self.stats.dedup_dropped += 1;
                self.log("DROP-DUP", f64::NAN, child_cost, child_horizon, 0, &child_key);
                continue;
            }
            let verdict = child.map(|c| self.hooks.assess(&c)).unwrap_or_default();
            if verdict.discard {
                self.stats.pruned += 1;
                let p = self.mode.priority(child_cost, child_horizon, verdict.score);
                self.log("PRUNE", p, child_cost, child_horizon, verdict.score, &child_key);
                continue;
            }
            self.push(child_key.into_boxed_str(), child_cost, child_horizon, verdict.score);
        }
        self.expansions.insert(nt.clone(), (hole_text, rules));
    }
}

impl<H: Hooks> Iterator for Enumerator<'_, H> {
    type Item = Emitted;

    /// Stops at exhaustion or when the budget runs out.
    fn next(&mut self) -> Option<Emitted> {
        match self.next_production() {
            Next::Emit(e) => Some(e),
            _ => None,
        }
    }
}
