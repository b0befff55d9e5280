//! Bounded unambiguity checking: every tree up to a size bound must be
//! built by a single set of rule applications.

use std::collections::HashMap;
use std::rc::Rc;

use super::{Grammar, RuleId, RuleSet, Symbol};
use crate::ast::{derivations, Application, LeftmostPolicy, ParseTree};

/// Two derivations of `tree` that treat `node` differently.
#[derive(Debug, Clone)]
pub struct AmbiguityWitness {
    pub tree: ParseTree,
    /// Pre-order index into `tree`; `None` is the creation pseudo node.
    pub node: Option<usize>,
    pub rule_a: Option<RuleId>,
    pub rule_b: Option<RuleId>,
    pub sequence_a: Vec<Application>,
    pub sequence_b: Vec<Application>,
}

#[derive(Debug, Clone)]
pub struct AmbiguityReport {
    pub bound: usize,
    pub trees_checked: usize,
    pub trees_derivable: usize,
    pub witness: Option<AmbiguityWitness>,
}

impl AmbiguityReport {
    pub fn is_unambiguous(&self) -> bool {
        self.witness.is_none()
    }

    /// Set when the bound admits no complete tree at all.
    pub fn bound_note(&self) -> Option<String> {
        (self.trees_checked == 0).then(|| format!("no complete tree within bound {}", self.bound))
    }
}

type Memo = HashMap<(Symbol, usize), Rc<Vec<ParseTree>>>;

fn exact(g: &Grammar, sym: &Symbol, size: usize, memo: &mut Memo) -> Rc<Vec<ParseTree>> {
    if let Some(v) = memo.get(&(sym.clone(), size)) {
        return v.clone();
    }
    let mut out = Vec::new();
    if sym.is_terminal() {
        if size == 1 {
            out.push(ParseTree::leaf(sym.clone()));
        }
    } else if size >= 2 {
        for p in g.productions_of(sym) {
            let mut partial: Vec<Vec<ParseTree>> = vec![Vec::new()];
            let mut budgets = vec![size - 1];
            for (i, child) in p.rhs.iter().enumerate() {
                let remaining_children = p.rhs.len() - i - 1;
                let mut next = Vec::new();
                let mut next_budgets = Vec::new();
                for (prefix, &budget) in partial.iter().zip(&budgets) {
                    let max_here = budget.saturating_sub(remaining_children);
                    let lo = if remaining_children == 0 { budget } else { 1 };
                    for k in lo..=max_here {
                        for t in exact(g, child, k, memo).iter() {
                            let mut v = prefix.clone();
                            v.push(t.clone());
                            next.push(v);
                            next_budgets.push(budget - k);
                        }
                    }
                }
                partial = next;
                budgets = next_budgets;
            }
            out.extend(
                partial
                    .into_iter()
                    .map(|children| ParseTree::node(p.lhs.clone(), children)),
            );
        }
    }
    let rc = Rc::new(out);
    memo.insert((sym.clone(), size), rc.clone());
    rc
}

/// All complete trees rooted at the grammar root with at most `max_size`
/// nodes, smallest first.
pub fn enumerate_trees(g: &Grammar, max_size: usize) -> Vec<ParseTree> {
    let mut memo = Memo::new();
    (1..=max_size)
        .flat_map(|n| exact(g, g.root(), n, &mut memo).as_ref().clone())
        .collect()
}

/// Checks that no tree of `g` with at most `size_bound` nodes has two
/// different application sets under `rs`.
pub fn check_unambiguous(rs: &RuleSet, g: &Grammar, size_bound: usize) -> AmbiguityReport {
    assert!(size_bound >= 1, "size bound must be positive");
    let trees = enumerate_trees(g, size_bound);
    let mut report = AmbiguityReport {
        bound: size_bound,
        trees_checked: trees.len(),
        trees_derivable: 0,
        witness: None,
    };
    for tree in trees {
        let (found, _) = derivations(&tree, rs, &LeftmostPolicy, 2);
        if !found.is_empty() {
            report.trees_derivable += 1;
        }
        if let [a, b] = &found[..] {
            let len = tree.size();
            let (pa, pb) = (a.per_node(rs, len), b.per_node(rs, len));
            let diff = (0..len).find(|&t| pa[t] != pb[t]);
            let (node, rule_a, rule_b) = match diff {
                Some(t) => {
                    let only = |x: &[(super::Direction, RuleId)], y: &[(super::Direction, RuleId)]| {
                        x.iter().find(|e| !y.contains(e)).or(x.first()).map(|e| e.1)
                    };
                    (Some(t), only(&pa[t], &pb[t]), only(&pb[t], &pa[t]))
                }
                None => (
                    None,
                    a.applications.first().map(|x| x.rule),
                    b.applications.first().map(|x| x.rule),
                ),
            };
            report.witness = Some(AmbiguityWitness {
                tree,
                node,
                rule_a,
                rule_b,
                sequence_a: a.applications.clone(),
                sequence_b: b.applications.clone(),
            });
            break;
        }
    }
    report
}
