//! Recovering rule-application sequences that build a given tree.
//!
//! The search keeps a partial tree together with an embedding of its nodes
//! into the target tree and only admits steps that keep the embedding
//! consistent. Every mark must eventually be consumed, so fixing a node
//! policy loses no application sets: each set corresponds to exactly one
//! policy-ordered sequence.

use thiserror::Error;

use super::policy::NodePolicy;
use super::{AnnotatedAst, Application, AstError, Focus, ParseTree};
use crate::grammar::{Direction, GroupKey, RewritingRule, RuleSet, RuleTree, Symbol};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DerivationError {
    #[error("tree is not derivable: stuck at node #{node} (`{symbol}`)")]
    Underivable { node: usize, symbol: String },
    #[error(transparent)]
    Apply(#[from] AstError),
}

/// Target tree flattened in pre-order; index 0 is the root.
#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub symbols: Vec<Symbol>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl Target {
    pub fn new(tree: &ParseTree) -> Self {
        fn go(t: &ParseTree, parent: Option<usize>, out: &mut Target) -> usize {
            let idx = out.symbols.len();
            out.symbols.push(t.symbol.clone());
            out.parent.push(parent);
            out.children.push(Vec::new());
            for c in &t.children {
                let ci = go(c, Some(idx), out);
                out.children[idx].push(ci);
            }
            idx
        }
        let mut out = Target {
            symbols: Vec::new(),
            parent: Vec::new(),
            children: Vec::new(),
        };
        go(tree, None, &mut out);
        out
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    fn index_in_parent(&self, t: usize) -> Option<usize> {
        let p = self.parent[t]?;
        self.children[p].iter().position(|&c| c == t)
    }
}

/// A complete derivation of a target tree.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub applications: Vec<Application>,
    pub ast: AnnotatedAst,
    /// Target pre-order index of every node id of `ast`.
    pub embedding: Vec<usize>,
    /// Target index of the node a creation rule produced.
    pub created_at: usize,
}

impl Derivation {
    /// Per target node, the (direction, rule) pairs applied to it.
    pub(crate) fn per_node(&self, rs: &RuleSet, target_len: usize) -> Vec<Vec<(Direction, usize)>> {
        let mut out = vec![Vec::new(); target_len];
        for app in &self.applications {
            if let Some(n) = app.node {
                let dir = rs.rule(app.rule).pattern.as_ref().map(|p| p.1).expect("node rules have patterns");
                out[self.embedding[n.0]].push((dir, app.rule));
            }
        }
        for v in &mut out {
            v.sort();
        }
        out
    }
}

#[derive(Clone)]
struct Partial {
    ast: AnnotatedAst,
    embedding: Vec<usize>,
    created_at: usize,
}

fn embed(rt: &RuleTree, t: usize, target: &Target, anchor_at: Option<usize>, out: &mut Vec<usize>) -> bool {
    if rt.symbol != target.symbols[t] {
        return false;
    }
    if rt.anchor && anchor_at.is_some_and(|a| a != t) {
        return false;
    }
    out.push(t);
    if rt.children.is_empty() {
        return rt.anchor || rt.annotation.has(Direction::Down) || target.children[t].is_empty();
    }
    if target.children[t].len() != rt.children.len() {
        return false;
    }
    rt.children
        .iter()
        .zip(&target.children[t])
        .all(|(c, &tc)| embed(c, tc, target, anchor_at, out))
}

fn consistent(p: &Partial, target: &Target) -> bool {
    let root = p.ast.root();
    p.ast.nodes().iter().all(|n| {
        let t = p.embedding[n.id.0];
        if n.symbol != target.symbols[t] {
            return false;
        }
        if root == Some(n.id) && !n.annotation.has(Direction::Up) && t != 0 {
            return false;
        }
        if n.children.is_empty() {
            n.annotation.has(Direction::Down) || target.children[t].is_empty()
        } else {
            n.children.len() == target.children[t].len()
                && n.children
                    .iter()
                    .zip(&target.children[t])
                    .all(|(c, &tc)| p.embedding[c.0] == tc)
        }
    })
}

fn successors(p: &Partial, focus: Focus, rule: &RewritingRule, target: &Target) -> Vec<Partial> {
    let mut out = Vec::new();
    match focus {
        Focus::Create => {
            for t in 0..target.len() {
                let mut tmap = Vec::new();
                if !embed(&rule.replacement, t, target, None, &mut tmap) {
                    continue;
                }
                let Ok(applied) = p.ast.apply_rule(None, rule) else {
                    return out;
                };
                let mut embedding = vec![usize::MAX; applied.ast.len()];
                for (id, ti) in applied.positions.iter().zip(&tmap) {
                    embedding[id.0] = *ti;
                }
                let next = Partial {
                    ast: applied.ast,
                    embedding,
                    created_at: t,
                };
                if consistent(&next, target) {
                    out.push(next);
                }
            }
        }
        Focus::Node(n, _) => {
            let Ok(applied) = p.ast.apply_rule(Some(n), rule) else {
                return out;
            };
            let Some(path) = rule.replacement.anchor_path() else {
                return out;
            };
            let anchor_t = p.embedding[n.0];
            let mut t = anchor_t;
            for &idx in path.iter().rev() {
                if target.index_in_parent(t) != Some(idx) {
                    return out;
                }
                t = target.parent[t].expect("index_in_parent implies a parent");
            }
            let mut tmap = Vec::new();
            if !embed(&rule.replacement, t, target, Some(anchor_t), &mut tmap) {
                return out;
            }
            let mut embedding = p.embedding.clone();
            embedding.resize(applied.ast.len(), usize::MAX);
            for (id, ti) in applied.positions.iter().zip(&tmap) {
                embedding[id.0] = *ti;
            }
            let next = Partial {
                ast: applied.ast,
                embedding,
                created_at: p.created_at,
            };
            if consistent(&next, target) {
                out.push(next);
            }
        }
    }
    out
}

fn group_of(ast: &AnnotatedAst, focus: Focus) -> GroupKey {
    match focus {
        Focus::Create => GroupKey::Creation,
        Focus::Node(n, dir) => GroupKey::Pattern(ast.node(n).symbol.clone(), dir),
    }
}

struct Search<'a> {
    target: Target,
    rs: &'a RuleSet,
    policy: &'a dyn NodePolicy,
    cap: usize,
    found: Vec<Derivation>,
    stuck: (usize, usize),
}

impl Search<'_> {
    fn dfs(&mut self, p: &Partial, apps: &mut Vec<Application>) {
        if self.found.len() >= self.cap || apps.len() > 4 * self.target.len() + 4 {
            return;
        }
        let Some(focus) = self.policy.select(&p.ast) else {
            self.found.push(Derivation {
                applications: apps.clone(),
                ast: p.ast.clone(),
                embedding: p.embedding.clone(),
                created_at: p.created_at,
            });
            return;
        };
        let node = match focus {
            Focus::Create => None,
            Focus::Node(n, _) => Some(n),
        };
        let mut progressed = false;
        for &rid in self.rs.group(&group_of(&p.ast, focus)) {
            for next in successors(p, focus, self.rs.rule(rid), &self.target) {
                progressed = true;
                apps.push(Application { node, rule: rid });
                self.dfs(&next, apps);
                apps.pop();
                if self.found.len() >= self.cap {
                    return;
                }
            }
        }
        if !progressed && apps.len() >= self.stuck.0 {
            let t = node.map_or(0, |n| p.embedding[n.0]);
            self.stuck = (apps.len(), t);
        }
    }
}

/// Up to `cap` derivations of `tree`, in rule-id order under `policy`.
pub(crate) fn derivations(
    tree: &ParseTree,
    rs: &RuleSet,
    policy: &dyn NodePolicy,
    cap: usize,
) -> (Vec<Derivation>, (usize, usize)) {
    let mut search = Search {
        target: Target::new(tree),
        rs,
        policy,
        cap,
        found: Vec::new(),
        stuck: (0, 0),
    };
    let start = Partial {
        ast: AnnotatedAst::new(),
        embedding: Vec::new(),
        created_at: 0,
    };
    search.dfs(&start, &mut Vec::new());
    (search.found, search.stuck)
}

/// Up to `cap` derivations of `tree` under `policy`, in rule-id order.
pub fn reconstruct_all(
    tree: &ParseTree,
    rs: &RuleSet,
    policy: &dyn NodePolicy,
    cap: usize,
) -> Result<Vec<Derivation>, DerivationError> {
    let (found, (_, stuck)) = derivations(tree, rs, policy, cap.max(1));
    if found.is_empty() {
        let target = Target::new(tree);
        return Err(DerivationError::Underivable {
            node: stuck,
            symbol: target.symbols[stuck].to_string(),
        });
    }
    Ok(found)
}

/// The application sequence that builds `tree` with nodes chosen by
/// `policy`. Replaying it from the empty tree reproduces `tree`.
pub fn reconstruct_applications(
    tree: &ParseTree,
    rs: &RuleSet,
    policy: &dyn NodePolicy,
) -> Result<Derivation, DerivationError> {
    Ok(reconstruct_all(tree, rs, policy, 1)?.remove(0))
}

/// Applies `applications` in order starting from the empty tree.
pub fn replay(rs: &RuleSet, applications: &[Application]) -> Result<AnnotatedAst, AstError> {
    let mut ast = AnnotatedAst::new();
    for app in applications {
        ast = ast.apply_rule(app.node, rs.rule(app.rule))?.ast;
    }
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::NodeId;
    use crate::ast::policy::{LeftmostPolicy, RightmostPolicy};
    use crate::grammar::{
        derive_bottom_up_rules, derive_creation_rules, derive_top_down_rules, load_grammar,
        CreationMode, Grammar,
    };

    fn grammar() -> Grammar {
        load_grammar(r#"E -> E "> 12" | E "> 0" | E "+" E | "hours" | "value""#).unwrap()
    }

    fn td_root(g: &Grammar) -> RuleSet {
        RuleSet::union([
            &derive_creation_rules(g, &[CreationMode::Root]),
            &derive_top_down_rules(g),
        ])
    }

    #[test]
    fn reconstructs_hours_gt_12() {
        let g = grammar();
        let rs = td_root(&g);
        let tree = ParseTree::parse(r#"(E (E "hours") "> 12")"#).unwrap();
        let d = reconstruct_applications(&tree, &rs, &LeftmostPolicy).unwrap();
        let labels: Vec<_> = d.applications.iter().map(|a| rs.rule(a.rule).label.as_str()).collect();
        assert_eq!(labels, ["root", "td0", "td3"]);
        assert_eq!(d.applications[0].node, None);
        assert_eq!(d.applications[1].node, Some(NodeId(0)));
        assert_eq!(d.applications[2].node, Some(NodeId(1)));
        let replayed = replay(&rs, &d.applications).unwrap();
        assert_eq!(replayed.to_parse_tree().unwrap(), tree);
    }

    #[test]
    fn single_terminal_tree_takes_two_steps() {
        let g = load_grammar(r#"E -> "hours""#).unwrap();
        let rs = td_root(&g);
        let tree = ParseTree::parse(r#"(E "hours")"#).unwrap();
        let d = reconstruct_applications(&tree, &rs, &LeftmostPolicy).unwrap();
        assert_eq!(d.applications.len(), 2);
    }

    #[test]
    fn foreign_production_is_underivable() {
        let g = grammar();
        let rs = td_root(&g);
        let tree = ParseTree::parse(r#"(E (E "hours") "< 3")"#).unwrap();
        let err = reconstruct_applications(&tree, &rs, &LeftmostPolicy).unwrap_err();
        assert_eq!(
            err,
            DerivationError::Underivable {
                node: 0,
                symbol: "E".into()
            }
        );
    }

    #[test]
    fn bottom_up_derivation_with_leaf_creation() {
        let g = grammar();
        let rs = RuleSet::union([
            &derive_top_down_rules(&g),
            &derive_bottom_up_rules(&g).filtered(|r| r.label != "bu2.0"),
            &derive_creation_rules(&g, &[CreationMode::Leaf]).filtered(|r| r.label == "leaf:value"),
        ]);
        let tree = ParseTree::parse(r#"(E (E "hours") "+" (E "value"))"#).unwrap();
        for policy in [&LeftmostPolicy as &dyn NodePolicy, &RightmostPolicy] {
            let d = reconstruct_applications(&tree, &rs, policy).unwrap();
            let labels: Vec<_> = d
                .applications
                .iter()
                .map(|a| rs.rule(a.rule).label.clone())
                .collect();
            assert_eq!(labels.len(), 5, "{labels:?}");
            assert_eq!(labels[0], "leaf:value");
            assert_eq!(replay(&rs, &d.applications).unwrap().to_parse_tree().unwrap(), tree);
        }
    }
}
