use std::collections::HashMap;

use super::{Assessment, Hooks};
use crate::lang::{
    eval, partial_eval, partial_eval_with, type_of, Env, Expr, MiniType, Partial, TriBool, TypeEnv, Value,
};

/// Hooks that judge partial productions against a specification on a
/// finite set of input points.
///
/// * pruning discards a node if `pc ⟹ spec` is definitely false on some
///   point once the output is bound to the node's partial value;
/// * scoring counts the points on which it is definitely true;
/// * indistinguishability replaces complete subexpressions by the first
///   seen expression with the same values on all points.
pub struct SpecHooks {
    predicate: Expr,
    output: String,
    points: Vec<Env>,
    types: TypeEnv,
    prune: bool,
    score: bool,
    indist: bool,
    signatures: HashMap<(MiniType, Vec<Value>), Expr>,
    representatives: HashMap<Expr, Expr>,
}

impl SpecHooks {
    /// All optimizations start disabled.
    pub fn new(pc: &Expr, spec: &Expr, output: &str, types: TypeEnv, points: Vec<Env>) -> Self {
        SpecHooks {
            predicate: Expr::implies(pc.clone(), spec.clone()),
            output: output.to_string(),
            points,
            types,
            prune: false,
            score: false,
            indist: false,
            signatures: HashMap::new(),
            representatives: HashMap::new(),
        }
    }

    pub fn pruning(mut self, on: bool) -> Self {
        self.prune = on;
        self
    }

    pub fn scoring(mut self, on: bool) -> Self {
        self.score = on;
        self
    }

    /// Has no effect without points: every signature would be empty.
    pub fn indistinguishability(mut self, on: bool) -> Self {
        self.indist = on && !self.points.is_empty();
        self
    }

    pub fn points(&self) -> &[Env] {
        &self.points
    }

    /// Truth of the predicate on `point` with the output bound to `e`. A
    /// candidate that definitely fails with an error is false.
    pub fn check_point(&self, e: &Expr, point: &Env) -> TriBool {
        let value = partial_eval(e, point);
        if matches!(value, Partial::Known(Value::Err(_))) {
            return TriBool::False;
        }
        match partial_eval_with(&self.predicate, point, (&self.output, &value)) {
            Partial::Known(Value::Err(_)) => TriBool::False,
            p => p.truth(),
        }
    }

    /// Number of points on which a complete expression satisfies the
    /// predicate.
    pub fn satisfied(&self, e: &Expr) -> usize {
        self.points
            .iter()
            .filter(|p| self.check_point(e, p) == TriBool::True)
            .count()
    }

    fn representative(&mut self, e: &Expr, evaluate: bool) -> Expr {
        if let Some(r) = self.representatives.get(e) {
            return r.clone();
        }
        if !evaluate {
            return e.clone();
        }
        let Ok(ty) = type_of(e, &self.types) else {
            return e.clone();
        };
        let sig: Vec<Value> = self.points.iter().map(|p| eval(e, p)).collect();
        let r = self.signatures.entry((ty, sig)).or_insert_with(|| e.clone()).clone();
        self.representatives.insert(e.clone(), r.clone());
        r
    }

    /// Rewrites maximal complete subexpressions. Leaves are registered but
    /// never replaced.
    fn canonical(&mut self, e: &Expr, evaluate: bool) -> Expr {
        if e.is_complete() {
            let r = self.representative(e, evaluate);
            return if e.children().is_empty() { e.clone() } else { r };
        }
        match e {
            Expr::App(op, args) => Expr::App(*op, args.iter().map(|a| self.canonical(a, evaluate)).collect()),
            other => other.clone(),
        }
    }
}

impl Hooks for SpecHooks {
    fn assess(&mut self, e: &Expr) -> Assessment {
        let mut out = Assessment::default();
        if !self.prune && !self.score {
            return out;
        }
        for p in &self.points {
            match self.check_point(e, p) {
                TriBool::False if self.prune => {
                    out.discard = true;
                    return out;
                }
                TriBool::True => out.score += 1,
                _ => {}
            }
        }
        if !self.score {
            out.score = 0;
        }
        out
    }

    fn rewrite(&mut self, e: &Expr) -> Option<Expr> {
        self.indist.then(|| self.canonical(e, true))
    }

    fn rewrite_child(&mut self, e: &Expr) -> Option<Expr> {
        self.indist.then(|| self.canonical(e, false))
    }

    fn inspects_children(&self) -> bool {
        self.prune || self.score || self.indist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Nonterminal;

    fn point(a: i64) -> Env {
        [("a".to_string(), Value::Int(a))].into_iter().collect()
    }

    fn conditional_spec() -> Expr {
        "(if (= a 5) (= x 6) (if (= a 7) (= x 9) (= x a)))".parse().unwrap()
    }

    fn types() -> TypeEnv {
        [("a".to_string(), MiniType::Int)].into_iter().collect()
    }

    fn hooks(points: &[i64]) -> SpecHooks {
        SpecHooks::new(
            &Expr::Bool(true),
            &conditional_spec(),
            "x",
            types(),
            points.iter().map(|&a| point(a)).collect(),
        )
    }

    #[test]
    fn prunes_a_wrong_branch() {
        let mut h = hooks(&[2, 5, 7]).pruning(true);
        // Bound variable renamed to the input: if (a <= 5) a else ?.
        let pp: Expr = "(if (<= a 5) a (? Int))".parse().unwrap();
        assert!(h.assess(&pp).discard);
        let root = Nonterminal::plain(MiniType::Int).hole();
        assert!(!h.assess(&root).discard);
        let wrong: Expr = "(+ a 1)".parse().unwrap();
        assert!(h.assess(&wrong).discard);
    }

    #[test]
    fn scores_definite_points() {
        let mut h = hooks(&[2, 5, 7]).scoring(true);
        let pp: Expr = "(if (= a 5) 6 (? Int))".parse().unwrap();
        assert_eq!(h.assess(&pp).score, 1);
        assert_eq!(h.satisfied(&"(if (= a 5) 6 (if (= a 7) 9 a))".parse().unwrap()), 3);
    }

    #[test]
    fn indistinguishable_subterms_are_replaced() {
        let mut h = hooks(&[2, 5, 7]).indistinguishability(true);
        assert_eq!(h.rewrite(&"0".parse().unwrap()), Some(Expr::Int(0)));
        let pp: Expr = "(+ (- a a) (? Int))".parse().unwrap();
        let out = h.rewrite(&pp).unwrap();
        assert_eq!(out, "(+ 0 (? Int))".parse().unwrap());
        // The table now answers without evaluation.
        let child: Expr = "(* (- a a) (? Int))".parse().unwrap();
        assert_eq!(h.rewrite_child(&child).unwrap(), "(* 0 (? Int))".parse().unwrap());
    }

    #[test]
    fn no_points_disables_rewrites() {
        let mut h = hooks(&[]).indistinguishability(true);
        assert_eq!(h.rewrite(&"(- a a)".parse().unwrap()), None);
    }
}
