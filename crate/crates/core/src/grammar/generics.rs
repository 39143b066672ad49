use std::collections::{BTreeMap, BTreeSet};

use super::{Nonterminal, Rule, RuleBody};
use crate::lang::{Expr, MiniType};

type Subst = BTreeMap<String, MiniType>;

fn substitute_expr(e: &Expr, s: &Subst) -> Expr {
    match e {
        Expr::Nil(t) => Expr::Nil(t.substitute(s)),
        Expr::Hole(nt) => Expr::Hole(Nonterminal {
            ty: nt.ty.substitute(s),
            label: nt.label.clone(),
        }),
        Expr::App(op, args) => Expr::App(*op, args.iter().map(|a| substitute_expr(a, s)).collect()),
        other => other.clone(),
    }
}

fn substitute_rule(r: &Rule, s: &Subst) -> Rule {
    let body = match &r.body {
        RuleBody::Template(e) => RuleBody::Template(substitute_expr(e, s)),
        RuleBody::Variable(t) => RuleBody::Variable(t.substitute(s)),
        RuleBody::Constant(t) => RuleBody::Constant(t.substitute(s)),
    };
    let args: Vec<String> = r.type_params.iter().map(|p| s[p].ident()).collect();
    Rule {
        id: format!("{}[{}]", r.id, args.join(",")),
        lhs: Nonterminal {
            ty: r.lhs.ty.substitute(s),
            label: r.lhs.label.clone(),
        },
        body,
        type_params: Vec::new(),
        ..r.clone()
    }
}

/// Extends a partial substitution to every assignment of the remaining
/// type parameters drawn from `types`.
fn completions(params: &[String], partial: Subst, types: &BTreeSet<MiniType>) -> Vec<Subst> {
    let mut out = vec![partial];
    for p in params {
        out = out
            .into_iter()
            .flat_map(|s| {
                if s.contains_key(p) {
                    vec![s]
                } else {
                    types
                        .iter()
                        .map(|t| {
                            let mut s = s.clone();
                            s.insert(p.clone(), t.clone());
                            s
                        })
                        .collect()
                }
            })
            .collect();
    }
    out
}

fn slots_in(r: &Rule, s: &Subst, types: &BTreeSet<MiniType>) -> bool {
    r.children().iter().all(|c| types.contains(&c.ty.substitute(s)))
}

/// Iteratively grows the set of reasonable types: each round instantiates
/// every generic rule over the current set and adds the resulting return
/// types whose size is at most `max_type_size`.
pub fn discover_types(
    rules: &[Rule],
    seeds: &BTreeSet<MiniType>,
    max_iters: usize,
    max_type_size: usize,
) -> BTreeSet<MiniType> {
    let mut types = seeds.clone();
    for _ in 0..max_iters {
        let mut found = BTreeSet::new();
        for r in rules.iter().filter(|r| r.is_generic()) {
            for s in completions(&r.type_params, Subst::new(), &types) {
                if !slots_in(r, &s, &types) {
                    continue;
                }
                let ret = r.lhs.ty.substitute(&s);
                if ret.size() <= max_type_size && !types.contains(&ret) {
                    found.insert(ret);
                }
            }
        }
        if found.is_empty() {
            break;
        }
        types.extend(found);
    }
    types
}

/// Replaces generic rules by their ground instances over `types`: for each
/// type in the set, every generic rule whose return type matches it is
/// instantiated, with unconstrained parameters ranging over the set. An
/// instance needing a slot type outside the set is skipped.
pub fn instantiate_generics(rules: &[Rule], types: &BTreeSet<MiniType>) -> Vec<Rule> {
    let mut out: Vec<Rule> = rules.iter().filter(|r| !r.is_generic()).cloned().collect();
    for r in rules.iter().filter(|r| r.is_generic()) {
        for target in types {
            let mut s = Subst::new();
            if !r.lhs.ty.match_against(target, &mut s) {
                continue;
            }
            for s in completions(&r.type_params, s, types) {
                if slots_in(r, &s, types) {
                    out.push(substitute_rule(r, &s));
                }
            }
        }
    }
    out
}
