use std::collections::HashMap;

use super::{GrammarError, Nonterminal, Pcfg};

const TOLERANCE: f64 = 1e-12;
const MAX_ROUNDS: usize = 100_000;

/// Minimum cost of completing each nonterminal, by fixpoint iteration of
/// `h(N) = min_R (cost(R) + Σ h(children of R))` starting from the
/// cheapest terminal rule of each nonterminal (or +∞).
pub fn horizons(g: &Pcfg) -> Result<HashMap<Nonterminal, f64>, GrammarError> {
    let mut h: HashMap<Nonterminal, f64> = g
        .nonterminals()
        .map(|nt| {
            let init = g
                .rules_of(nt)
                .iter()
                .filter(|r| r.children.is_empty())
                .map(|r| r.cost)
                .fold(f64::INFINITY, f64::min);
            (nt.clone(), init)
        })
        .collect();

    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        let next: HashMap<Nonterminal, f64> = g
            .nonterminals()
            .map(|nt| {
                let best = g
                    .rules_of(nt)
                    .iter()
                    .map(|r| {
                        r.cost
                            + r.children
                                .iter()
                                .map(|c| h.get(c).copied().unwrap_or(f64::INFINITY))
                                .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                let old = h[nt];
                if old.is_infinite() != best.is_infinite()
                    || (best.is_finite() && (old - best).abs() > TOLERANCE)
                {
                    changed = true;
                }
                (nt.clone(), best.min(old))
            })
            .collect();
        h = next;
        if !changed {
            if let Some((nt, _)) = h.iter().find(|(_, v)| !v.is_finite()) {
                return Err(GrammarError::NonConvergence(nt.clone()));
            }
            return Ok(h);
        }
    }
    let nt = g.nonterminals().next().cloned().expect("non-empty grammar");
    Err(GrammarError::NonConvergence(nt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{normalize, Rule};
    use crate::lang::{Expr, MiniType};

    #[test]
    fn sole_terminal_rule_is_free() {
        let n = Nonterminal::plain(MiniType::Int);
        let g = normalize(vec![Rule::new("one", n.clone(), Expr::Int(1), 3.0)]).unwrap();
        assert_eq!(horizons(&g).unwrap()[&n], 0.0);
    }
}
