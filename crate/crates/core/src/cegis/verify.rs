use std::collections::HashMap;

use super::SynthesisProblem;
use crate::lang::{eval, Env, Expr, MiniType, Value};

/// Bounds of the verification domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Integers range over `[-int_bound, int_bound]`.
    pub int_bound: i64,
    pub max_list_len: usize,
    /// Largest number of points scanned; beyond it results are unknown.
    pub max_points: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            int_bound: 8,
            max_list_len: 4,
            max_points: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyResult {
    Valid,
    Counterexample(Env),
    Unknown(String),
}

/// All values of `ty` within bounds, grouped by magnitude.
struct Values {
    bounds: Bounds,
    cache: HashMap<(MiniType, u64), Vec<Value>>,
}

impl Values {
    fn max_magnitude(&self, ty: &MiniType) -> u64 {
        match ty {
            MiniType::Int => self.bounds.int_bound as u64,
            MiniType::Bool => 1,
            MiniType::List(t) => self.bounds.max_list_len as u64 * (1 + self.max_magnitude(t)),
            MiniType::Var(_) => 0,
        }
    }

    /// Values of exactly magnitude `m`, in ascending order.
    fn of(&mut self, ty: &MiniType, m: u64) -> Vec<Value> {
        if let Some(v) = self.cache.get(&(ty.clone(), m)) {
            return v.clone();
        }
        let out = match ty {
            MiniType::Int if m == 0 => vec![Value::Int(0)],
            MiniType::Int if m as i64 <= self.bounds.int_bound => vec![Value::Int(-(m as i64)), Value::Int(m as i64)],
            MiniType::Bool if m == 0 => vec![Value::Bool(false)],
            MiniType::Bool if m == 1 => vec![Value::Bool(true)],
            MiniType::List(elem) => {
                let mut out = Vec::new();
                for len in 0..=self.bounds.max_list_len.min(m as usize) {
                    let budget = m - len as u64;
                    for items in self.sequences(elem, len, budget) {
                        out.push(Value::List(items));
                    }
                }
                out.sort();
                out
            }
            _ => Vec::new(),
        };
        self.cache.insert((ty.clone(), m), out.clone());
        out
    }

    /// Sequences of `len` values of `ty` whose magnitudes sum to `total`.
    fn sequences(&mut self, ty: &MiniType, len: usize, total: u64) -> Vec<Vec<Value>> {
        if len == 0 {
            return if total == 0 { vec![Vec::new()] } else { Vec::new() };
        }
        let mut out = Vec::new();
        for m in 0..=total.min(self.max_magnitude(ty)) {
            let heads = self.of(ty, m);
            if heads.is_empty() {
                continue;
            }
            let tails = self.sequences(ty, len - 1, total - m);
            for h in &heads {
                for t in &tails {
                    let mut s = Vec::with_capacity(len);
                    s.push(h.clone());
                    s.extend(t.iter().cloned());
                    out.push(s);
                }
            }
        }
        out
    }
}

/// Bounded-exhaustive verifier. The points satisfying the path condition
/// are materialized once, ordered by total magnitude and then
/// lexicographically, so the first counterexample is deterministic.
pub struct Verifier {
    points: Vec<Env>,
    truncated: bool,
}

impl Verifier {
    pub fn new(problem: &SynthesisProblem, bounds: Bounds) -> Self {
        let mut values = Values {
            bounds,
            cache: HashMap::new(),
        };
        let types: Vec<&MiniType> = problem.inputs.iter().map(|(_, t)| t).collect();
        let max_total: u64 = types.iter().map(|t| values.max_magnitude(t)).sum();
        let mut points = Vec::new();
        let mut scanned = 0usize;
        let mut truncated = false;
        'levels: for m in 0..=max_total {
            let mut level = tuples(&mut values, &types, m);
            level.sort();
            for tuple in level {
                if scanned == bounds.max_points {
                    truncated = true;
                    break 'levels;
                }
                scanned += 1;
                let env: Env = problem
                    .inputs
                    .iter()
                    .map(|(n, _)| n.clone())
                    .zip(tuple)
                    .collect();
                if eval(&problem.pc, &env) == Value::Bool(true) {
                    points.push(env);
                }
            }
        }
        Verifier { points, truncated }
    }

    /// Points satisfying the path condition, in scan order.
    pub fn points(&self) -> &[Env] {
        &self.points
    }

    pub fn verify(&self, problem: &SynthesisProblem, t: &Expr) -> VerifyResult {
        let predicate = problem.predicate();
        for p in &self.points {
            if !problem.holds_with(&predicate, t, p) {
                return VerifyResult::Counterexample(p.clone());
            }
        }
        if self.truncated {
            VerifyResult::Unknown("verification domain exceeds the point budget".into())
        } else {
            VerifyResult::Valid
        }
    }
}

fn tuples(values: &mut Values, types: &[&MiniType], total: u64) -> Vec<Vec<Value>> {
    let Some((first, rest)) = types.split_first() else {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    };
    let mut out = Vec::new();
    for m in 0..=total.min(values.max_magnitude(first)) {
        let heads = values.of(first, m);
        if heads.is_empty() {
            continue;
        }
        let tails = tuples(values, rest, total - m);
        for h in &heads {
            for t in &tails {
                let mut v = Vec::with_capacity(types.len());
                v.push(h.clone());
                v.extend(t.iter().cloned());
                out.push(v);
            }
        }
    }
    out
}
