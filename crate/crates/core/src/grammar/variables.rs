use super::{normalize, GrammarError, Pcfg, Rule, RuleBody};
use crate::lang::{Expr, MiniType};

/// Replaces every `variable` placeholder of type `T` by one rule per scope
/// variable of type `T`, splitting its weight equally. Placeholders with no
/// matching variable are dropped.
pub fn instantiate_variable_rules(rules: Vec<Rule>, scope: &[(String, MiniType)]) -> Vec<Rule> {
    let mut out = Vec::with_capacity(rules.len());
    for r in rules {
        let RuleBody::Variable(ty) = &r.body else {
            out.push(r);
            continue;
        };
        let vars: Vec<&String> = scope.iter().filter(|(_, t)| t == ty).map(|(v, _)| v).collect();
        let k = vars.len() as f64;
        for v in vars {
            out.push(Rule {
                id: format!("{}.{v}", r.id),
                body: RuleBody::Template(Expr::Var(v.clone())),
                weight: r.weight / k,
                ..r.clone()
            });
        }
    }
    out
}

/// Replaces every `constant Int` placeholder by one literal rule per
/// distinct integer in `constants`, splitting its weight equally.
pub fn instantiate_constant_rules(rules: Vec<Rule>, constants: &[i64]) -> Vec<Rule> {
    let mut consts = constants.to_vec();
    consts.sort_unstable();
    consts.dedup();
    let mut out = Vec::with_capacity(rules.len());
    for r in rules {
        let RuleBody::Constant(ty) = &r.body else {
            out.push(r);
            continue;
        };
        if *ty != MiniType::Int {
            continue;
        }
        let k = consts.len() as f64;
        for &c in &consts {
            let mut rule = Rule {
                id: format!("{}.{c}", r.id),
                body: RuleBody::Template(Expr::Int(c)),
                weight: r.weight / k,
                ..r.clone()
            };
            rule.tags.insert("const".into());
            if c == 0 {
                rule.tags.insert("0".into());
            }
            out.push(rule);
        }
    }
    out
}

/// [`instantiate_variable_rules`] on a normalized grammar, renormalizing
/// afterwards.
pub fn instantiate_variables(g: &Pcfg, scope: &[(String, MiniType)]) -> Result<Pcfg, GrammarError> {
    normalize(instantiate_variable_rules(g.to_rules(), scope))
}
