//! Probabilistic attribute grammars.
//!
//! Grammars are built in two stages. Weighted [`Rule`]s (absolute
//! frequencies, possibly generic or containing `variable`/`constant`
//! placeholders) are rewritten by the passes in this module, then
//! [`normalize`] turns them into a [`Pcfg`] with per-nonterminal
//! probabilities stored as negative-log costs.

mod axioms;
mod generics;
mod horizon;
mod variables;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

pub use axioms::apply_axioms;
pub use generics::{discover_types, instantiate_generics};
pub use horizon::horizons;
pub use variables::{instantiate_constant_rules, instantiate_variable_rules, instantiate_variables};

use crate::lang::{Expr, MiniType};

/// A grammar symbol: a base type plus an optional attribute label.
/// Two nonterminals are the same symbol iff both parts are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nonterminal {
    pub ty: MiniType,
    pub label: Option<String>,
}

impl Nonterminal {
    pub fn plain(ty: MiniType) -> Self {
        Nonterminal { ty, label: None }
    }

    pub fn labeled(ty: MiniType, label: String) -> Self {
        Nonterminal {
            ty,
            label: Some(label),
        }
    }

    pub fn is_plain(&self) -> bool {
        self.label.is_none()
    }

    pub fn hole(&self) -> Expr {
        Expr::Hole(self.clone())
    }
}

impl fmt::Display for Nonterminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            None => write!(f, "{}", self.ty),
            Some(l) => write!(f, "{}{{{l}}}", self.ty),
        }
    }
}

/// What a rule produces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleBody {
    /// An expression whose holes are the rule's child slots.
    Template(Expr),
    /// Any in-scope variable of the type; split per variable before search.
    Variable(MiniType),
    /// Any integer constant mentioned by the problem; split like variables.
    Constant(MiniType),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub lhs: Nonterminal,
    pub body: RuleBody,
    /// Absolute frequency.
    pub weight: f64,
    pub tags: BTreeSet<String>,
    /// Type variables of a generic rule; empty for ground rules.
    pub type_params: Vec<String>,
}

impl Rule {
    pub fn new(id: impl Into<String>, lhs: Nonterminal, template: Expr, weight: f64) -> Self {
        Rule {
            id: id.into(),
            lhs,
            body: RuleBody::Template(template),
            weight,
            tags: BTreeSet::new(),
            type_params: Vec::new(),
        }
    }

    pub fn with_tags(mut self, tags: &[&str]) -> Self {
        self.tags = tags.iter().map(|t| t.to_string()).collect();
        self
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn is_generic(&self) -> bool {
        !self.type_params.is_empty()
    }

    pub fn template(&self) -> Option<&Expr> {
        match &self.body {
            RuleBody::Template(e) => Some(e),
            _ => None,
        }
    }

    /// Child nonterminals, left to right.
    pub fn children(&self) -> Vec<Nonterminal> {
        match &self.body {
            RuleBody::Template(e) => e.holes().into_iter().cloned().collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("rule `{0}` has a non-positive weight")]
    NonPositiveWeight(String),
    #[error("rule `{0}` is generic and must be instantiated first")]
    UninstantiatedGeneric(String),
    #[error("duplicate rule id `{0}`")]
    DuplicateRule(String),
    #[error("no rules left for start symbol of type {0}")]
    EmptyGrammar(MiniType),
    #[error("grammar has no start symbol for type {0}")]
    NoStart(MiniType),
    #[error("nonterminal {0} lies on a cycle of probability-one rules")]
    ZeroCostCycle(Nonterminal),
    #[error("horizon of {0} did not converge to a finite value")]
    NonConvergence(Nonterminal),
    #[error("rule `{0}` still contains a placeholder")]
    NotGround(String),
    #[error("rule `{id}` is ill-typed: {message}")]
    IllTyped { id: String, message: String },
}

/// A rule together with its normalized probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PRule {
    pub rule: Rule,
    pub prob: f64,
    /// `-ln(prob)`.
    pub cost: f64,
    pub children: Vec<Nonterminal>,
}

/// A normalized probabilistic grammar. Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct Pcfg {
    rules: IndexMap<Nonterminal, Vec<PRule>>,
    start: BTreeMap<MiniType, Nonterminal>,
    lost_starts: BTreeSet<MiniType>,
    warnings: Vec<String>,
}

impl Pcfg {
    pub fn nonterminals(&self) -> impl Iterator<Item = &Nonterminal> {
        self.rules.keys()
    }

    pub fn rules_of(&self, nt: &Nonterminal) -> &[PRule] {
        self.rules.get(nt).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &PRule> {
        self.rules.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.rules.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, id: &str) -> Option<&PRule> {
        self.iter().find(|r| r.rule.id == id)
    }

    pub fn prob(&self, id: &str) -> Option<f64> {
        self.rule(id).map(|r| r.prob)
    }

    /// Rules that are the only rule of their nonterminal (probability 1).
    pub fn sole_rules(&self) -> Vec<&str> {
        self.rules
            .values()
            .filter(|rs| rs.len() == 1)
            .map(|rs| rs[0].rule.id.as_str())
            .collect()
    }

    /// The start symbol for expressions of type `ty`.
    pub fn start_for(&self, ty: &MiniType) -> Result<&Nonterminal, GrammarError> {
        if let Some(nt) = self.start.get(ty) {
            Ok(nt)
        } else if self.lost_starts.contains(ty) {
            Err(GrammarError::EmptyGrammar(ty.clone()))
        } else {
            Err(GrammarError::NoStart(ty.clone()))
        }
    }

    pub fn start_types(&self) -> impl Iterator<Item = &MiniType> {
        self.start.keys()
    }

    /// Diagnostics produced while normalizing (e.g. pruned rules).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The weighted rules, with probabilities as weights.
    pub fn to_rules(&self) -> Vec<Rule> {
        self.iter()
            .map(|r| Rule {
                weight: r.prob,
                ..r.rule.clone()
            })
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.iter()
            .all(|r| matches!(r.rule.body, RuleBody::Template(_)) && !r.rule.is_generic())
    }
}

impl fmt::Display for Pcfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (nt, rules) in &self.rules {
            for (i, r) in rules.iter().enumerate() {
                let sep = if i == 0 { format!("{nt} ::=") } else { "  |".to_string() };
                let body = match &r.rule.body {
                    RuleBody::Template(e) => e.to_string(),
                    RuleBody::Variable(t) => format!("(variable {t})"),
                    RuleBody::Constant(t) => format!("(constant {t})"),
                };
                writeln!(f, "{sep} {body}    [{}] p={:.6}", r.rule.id, r.prob)?;
            }
        }
        Ok(())
    }
}

/// Turns weighted rules into a normalized grammar: `prob(R) = weight(R) /
/// Σ weight(rules with the same lhs)`.
///
/// Unproductive nonterminals and the rules that mention them are removed
/// with a warning. Nonterminals with a single rule get probability one;
/// a cycle made only of such rules is rejected. A start symbol (the plain
/// nonterminal of a type) that loses every rule is reported when it is
/// requested through [`Pcfg::start_for`].
pub fn normalize(rules: Vec<Rule>) -> Result<Pcfg, GrammarError> {
    normalize_declared(rules, &BTreeSet::new())
}

/// [`normalize`], additionally treating `declared` as start types even if
/// no rule for them survived placeholder instantiation.
pub fn normalize_declared(rules: Vec<Rule>, declared: &BTreeSet<MiniType>) -> Result<Pcfg, GrammarError> {
    let mut seen = BTreeSet::new();
    for r in &rules {
        if !(r.weight > 0.0 && r.weight.is_finite()) {
            return Err(GrammarError::NonPositiveWeight(r.id.clone()));
        }
        if r.is_generic() {
            return Err(GrammarError::UninstantiatedGeneric(r.id.clone()));
        }
        if !seen.insert(r.id.clone()) {
            return Err(GrammarError::DuplicateRule(r.id.clone()));
        }
    }

    let mut plain_types: BTreeSet<MiniType> = rules
        .iter()
        .filter(|r| r.lhs.is_plain())
        .map(|r| r.lhs.ty.clone())
        .collect();
    plain_types.extend(declared.iter().cloned());

    let mut grouped: IndexMap<Nonterminal, Vec<Rule>> = IndexMap::new();
    for r in rules {
        grouped.entry(r.lhs.clone()).or_default().push(r);
    }

    let mut warnings = Vec::new();
    let productive = productive_set(&grouped);
    let mut kept: IndexMap<Nonterminal, Vec<Rule>> = IndexMap::new();
    for (nt, rs) in grouped {
        for r in rs {
            let ok = productive.contains(&nt) && r.children().iter().all(|c| productive.contains(c));
            if ok {
                kept.entry(nt.clone()).or_default().push(r);
            } else {
                let msg = format!("removed unproductive rule `{}` of {nt}", r.id);
                log::debug!("{msg}");
                warnings.push(msg);
            }
        }
    }

    check_sole_rule_cycles(&kept)?;

    let mut out: IndexMap<Nonterminal, Vec<PRule>> = IndexMap::new();
    for (nt, rs) in kept {
        let total: f64 = rs.iter().map(|r| r.weight).sum();
        let prules = rs
            .into_iter()
            .map(|rule| {
                let prob = if total == rule.weight { 1.0 } else { rule.weight / total };
                PRule {
                    children: rule.children(),
                    cost: if prob == 1.0 { 0.0 } else { -prob.ln() },
                    prob,
                    rule,
                }
            })
            .collect();
        out.insert(nt, prules);
    }

    let mut start = BTreeMap::new();
    let mut lost_starts = BTreeSet::new();
    for ty in plain_types {
        let nt = Nonterminal::plain(ty.clone());
        if out.contains_key(&nt) {
            start.insert(ty, nt);
        } else {
            let msg = format!("start symbol {nt} lost all of its rules");
            log::debug!("{msg}");
            warnings.push(msg);
            lost_starts.insert(ty);
        }
    }

    Ok(Pcfg {
        rules: out,
        start,
        lost_starts,
        warnings,
    })
}

fn productive_set(grouped: &IndexMap<Nonterminal, Vec<Rule>>) -> BTreeSet<Nonterminal> {
    let mut productive = BTreeSet::new();
    loop {
        let mut changed = false;
        for (nt, rs) in grouped {
            if productive.contains(nt) {
                continue;
            }
            if rs.iter().any(|r| r.children().iter().all(|c| productive.contains(c))) {
                productive.insert(nt.clone());
                changed = true;
            }
        }
        if !changed {
            return productive;
        }
    }
}

fn check_sole_rule_cycles(grammar: &IndexMap<Nonterminal, Vec<Rule>>) -> Result<(), GrammarError> {
    // Edges between nonterminals that have exactly one rule.
    let sole: HashMap<&Nonterminal, Vec<Nonterminal>> = grammar
        .iter()
        .filter(|(_, rs)| rs.len() == 1)
        .map(|(nt, rs)| (nt, rs[0].children()))
        .collect();
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        nt: &'a Nonterminal,
        sole: &'a HashMap<&'a Nonterminal, Vec<Nonterminal>>,
        marks: &mut HashMap<&'a Nonterminal, Mark>,
    ) -> Result<(), GrammarError> {
        match marks.get(nt) {
            Some(Mark::Active) => return Err(GrammarError::ZeroCostCycle(nt.clone())),
            Some(Mark::Done) => return Ok(()),
            None => {}
        }
        let Some((key, children)) = sole.get_key_value(nt) else {
            return Ok(());
        };
        marks.insert(key, Mark::Active);
        for c in children {
            visit(c, sole, marks)?;
        }
        marks.insert(key, Mark::Done);
        Ok(())
    }
    let mut marks = HashMap::new();
    for nt in sole.keys() {
        visit(nt, &sole, &mut marks)?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::{Nonterminal, Pcfg};
    use crate::lang::Expr;

    /// Every complete derivation of `nt` with at most `depth` nested rule
    /// applications, paired with its cost.
    pub fn productions(g: &Pcfg, nt: &Nonterminal, depth: usize) -> Vec<(Expr, f64)> {
        if depth == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for r in g.rules_of(nt) {
            let template = r.rule.template().expect("ground grammar");
            let mut partial = vec![(template.clone(), r.cost)];
            for child in &r.children {
                let options = productions(g, child, depth - 1);
                partial = partial
                    .into_iter()
                    .flat_map(|(e, c)| {
                        options
                            .iter()
                            .map(move |(o, oc)| (e.fill_leftmost(o).unwrap(), c + oc))
                            .collect::<Vec<_>>()
                    })
                    .collect();
            }
            out.extend(partial);
        }
        out
    }
}
