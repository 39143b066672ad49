//! Symmetry breaking driven by rule tags.
//!
//! A binary rule `N ::= op(A, B)` is split into rules `N ::= op(A', B')`
//! where `A'` and `B'` are copies of `A` and `B` restricted to the top-level
//! rules that may appear together:
//!
//! * `0`: a rule tagged `0` is excluded from both operands of `plus` and
//!   `times` rules and from the right operand of `minus` rules;
//! * `commut`: when both operands share a nonterminal, the left operand's
//!   top rule id must not be ordered after the right operand's;
//! * `const`: two `const` operands of an arithmetic rule are excluded.
//!
//! Left rules with identical admissible right sets share one split rule,
//! so the rewritten grammar stays unambiguous.

use indexmap::IndexMap;

use super::{normalize, GrammarError, Nonterminal, PRule, Pcfg, Rule};
use crate::lang::Expr;

type Restrictions = IndexMap<(Nonterminal, Vec<String>), Nonterminal>;

pub fn apply_axioms(g: &Pcfg) -> Result<Pcfg, GrammarError> {
    let mut restricted = Restrictions::new();
    // (origin id, rewritten rule) per nonterminal.
    let mut transformed: IndexMap<Nonterminal, Vec<(String, Rule)>> = IndexMap::new();
    for nt in g.nonterminals() {
        let entry = transformed.entry(nt.clone()).or_default();
        for pr in g.rules_of(nt) {
            let origin = pr.rule.id.clone();
            match split(g, pr, &mut restricted) {
                Some(rules) => entry.extend(rules.into_iter().map(|r| (origin.clone(), r))),
                None => entry.push((
                    origin,
                    Rule {
                        weight: pr.prob,
                        ..pr.rule.clone()
                    },
                )),
            }
        }
    }

    if restricted.is_empty() && transformed.values().flatten().all(|(o, r)| *o == r.id) {
        return Ok(g.clone());
    }
    let mut out: Vec<Rule> = transformed.values().flatten().map(|(_, r)| r.clone()).collect();
    for ((base, allowed), name) in &restricted {
        let label = name.label.as_deref().unwrap_or_default();
        for (origin, r) in &transformed[base] {
            if allowed.contains(origin) {
                out.push(Rule {
                    id: format!("{}@{label}", r.id),
                    lhs: name.clone(),
                    ..r.clone()
                });
            }
        }
    }
    normalize(out)
}

fn restrict(g: &Pcfg, nt: &Nonterminal, allowed: Vec<String>, table: &mut Restrictions) -> Nonterminal {
    if allowed.len() == g.rules_of(nt).len() {
        return nt.clone();
    }
    let next = table.len();
    table
        .entry((nt.clone(), allowed))
        .or_insert_with(|| {
            let base = nt.label.as_deref().unwrap_or_default();
            Nonterminal::labeled(nt.ty.clone(), format!("{base}~{next}"))
        })
        .clone()
}

fn split(g: &Pcfg, pr: &PRule, table: &mut Restrictions) -> Option<Vec<Rule>> {
    let rule = &pr.rule;
    let Some(Expr::App(op, args)) = rule.template() else {
        return None;
    };
    let (a, b) = match args.as_slice() {
        [Expr::Hole(a), Expr::Hole(b)] => (a, b),
        _ => return None,
    };
    let arith = ["plus", "minus", "times"].iter().any(|t| rule.has_tag(t));
    let zero_left = rule.has_tag("plus") || rule.has_tag("times");
    let zero_right = arith;
    let commut = rule.has_tag("commut") && a == b;

    let left: Vec<&PRule> = g
        .rules_of(a)
        .iter()
        .filter(|r| !(zero_left && r.rule.has_tag("0")))
        .collect();
    let right: Vec<&PRule> = g
        .rules_of(b)
        .iter()
        .filter(|r| !(zero_right && r.rule.has_tag("0")))
        .collect();

    let mut groups: IndexMap<Vec<String>, Vec<String>> = IndexMap::new();
    for l in &left {
        let allowed: Vec<String> = right
            .iter()
            .filter(|r| !(commut && l.rule.id > r.rule.id))
            .filter(|r| !(arith && l.rule.has_tag("const") && r.rule.has_tag("const")))
            .map(|r| r.rule.id.clone())
            .collect();
        groups.entry(allowed).or_default().push(l.rule.id.clone());
    }

    let unchanged = left.len() == g.rules_of(a).len()
        && groups.len() == 1
        && groups.keys().all(|rs| rs.len() == g.rules_of(b).len());
    if unchanged {
        return None;
    }

    let mass = |nt: &Nonterminal, ids: &[String]| -> f64 {
        g.rules_of(nt)
            .iter()
            .filter(|r| ids.contains(&r.rule.id))
            .map(|r| r.prob)
            .sum()
    };
    let mut out = Vec::new();
    for (i, (rights, lefts)) in groups.into_iter().enumerate() {
        if rights.is_empty() {
            continue;
        }
        let weight = pr.prob * mass(a, &lefts) * mass(b, &rights);
        let la = restrict(g, a, lefts, table);
        let rb = restrict(g, b, rights, table);
        out.push(Rule {
            id: format!("{}~{i}", rule.id),
            body: super::RuleBody::Template(Expr::binary(*op, la.hole(), rb.hole())),
            weight,
            ..rule.clone()
        });
    }
    Some(out)
}
