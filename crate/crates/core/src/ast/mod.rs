//! Annotated partial ASTs and rule application.

mod derive;
mod policy;
mod sexpr;

pub(crate) use derive::derivations;
pub use derive::{reconstruct_all, reconstruct_applications, replay, Derivation, DerivationError};
pub use policy::{LeftmostPolicy, NodePolicy, RightmostPolicy, ShuffledPolicy};
pub use sexpr::{ParseTree, SexprError};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Direction, RewritingRule, RuleId, RuleKind, RuleTree, Symbol};

/// Pending-expansion mark of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Annotation {
    #[default]
    None,
    D,
    U,
    UD,
}

impl Annotation {
    pub fn has(self, dir: Direction) -> bool {
        matches!(
            (self, dir),
            (Annotation::D | Annotation::UD, Direction::Down)
                | (Annotation::U | Annotation::UD, Direction::Up)
        )
    }

    fn from_flags(down: bool, up: bool) -> Self {
        match (down, up) {
            (false, false) => Annotation::None,
            (true, false) => Annotation::D,
            (false, true) => Annotation::U,
            (true, true) => Annotation::UD,
        }
    }

    pub fn without(self, dir: Direction) -> Self {
        Self::from_flags(
            self.has(Direction::Down) && dir != Direction::Down,
            self.has(Direction::Up) && dir != Direction::Up,
        )
    }

    pub fn union(self, other: Annotation) -> Self {
        Self::from_flags(
            self.has(Direction::Down) || other.has(Direction::Down),
            self.has(Direction::Up) || other.has(Direction::Up),
        )
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Annotation::None => "",
            Annotation::D => "D",
            Annotation::U => "U",
            Annotation::UD => "UD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub id: NodeId,
    pub symbol: Symbol,
    pub annotation: Annotation,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Rule whose application created this node.
    pub origin: Option<RuleId>,
}

/// What the next search step expands: the pseudo node of an empty tree, or
/// a real node in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Focus {
    Create,
    Node(NodeId, Direction),
}

/// One step of a derivation: `(n_i, r_i)`. `node` is absent for creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Application {
    pub node: Option<NodeId>,
    pub rule: RuleId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AstError {
    #[error("rule {rule} does not match node {node}")]
    PatternMismatch { node: NodeId, rule: RuleId },
    #[error("creation rule {0} applied to a non-empty tree")]
    CreationOnNonEmpty(RuleId),
    #[error("rule {0} needs a target node")]
    MissingTarget(RuleId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("tree is incomplete")]
    Incomplete,
}

/// A partial program. Nodes are never removed, so ids index `nodes`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotatedAst {
    nodes: Vec<AstNode>,
    root: Option<NodeId>,
}

/// Result of a rule application: the new tree and the node ids given to
/// the replacement's positions (pre-order).
#[derive(Debug, Clone)]
pub struct Applied {
    pub ast: AnnotatedAst,
    pub positions: Vec<NodeId>,
}

impl AnnotatedAst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id.0]
    }

    pub fn get(&self, id: NodeId) -> Option<&AstNode> {
        self.nodes.get(id.0)
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    /// Node ids in pre-order (left-to-right, top-down).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.root.into_iter().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id.0].children.iter().rev());
        }
        out
    }

    /// Index of `id` among its parent's children.
    pub fn child_index(&self, id: NodeId) -> Option<usize> {
        let parent = self.nodes[id.0].parent?;
        self.nodes[parent.0].children.iter().position(|&c| c == id)
    }

    fn push_node(
        &mut self,
        tree: &RuleTree,
        parent: Option<NodeId>,
        origin: RuleId,
        anchor_target: Option<NodeId>,
        positions: &mut Vec<NodeId>,
    ) -> NodeId {
        let id = match (tree.anchor, anchor_target) {
            (true, Some(target)) => {
                let node = &mut self.nodes[target.0];
                node.parent = parent;
                target
            }
            _ => {
                let id = NodeId(self.nodes.len());
                self.nodes.push(AstNode {
                    id,
                    symbol: tree.symbol.clone(),
                    annotation: tree.annotation,
                    parent,
                    children: Vec::new(),
                    origin: Some(origin),
                });
                id
            }
        };
        positions.push(id);
        for child in &tree.children {
            let c = self.push_node(child, Some(id), origin, anchor_target, positions);
            self.nodes[id.0].children.push(c);
        }
        id
    }

    /// Applies `rule` at `target` and returns the new tree; `self` is left
    /// untouched.
    pub fn apply_rule(
        &self,
        target: Option<NodeId>,
        rule: &RewritingRule,
    ) -> Result<Applied, AstError> {
        let mut ast = self.clone();
        let mut positions = Vec::with_capacity(rule.replacement.size());
        let Some((symbol, dir)) = &rule.pattern else {
            if !self.is_empty() || target.is_some() {
                return Err(AstError::CreationOnNonEmpty(rule.id));
            }
            let root = ast.push_node(&rule.replacement, None, rule.id, None, &mut positions);
            ast.root = Some(root);
            return Ok(Applied { ast, positions });
        };
        let target = target.ok_or(AstError::MissingTarget(rule.id))?;
        let node = self.get(target).ok_or(AstError::UnknownNode(target))?;
        let mismatch = AstError::PatternMismatch {
            node: target,
            rule: rule.id,
        };
        if &node.symbol != symbol || !node.annotation.has(*dir) {
            return Err(mismatch);
        }
        let anchor = rule
            .replacement
            .preorder()
            .into_iter()
            .find(|t| t.anchor)
            .ok_or(AstError::PatternMismatch {
                node: target,
                rule: rule.id,
            })?;
        if anchor.symbol != node.symbol {
            return Err(mismatch);
        }
        let new_annotation = node.annotation.without(*dir).union(anchor.annotation);
        if rule.replacement.anchor {
            // In-place rewrite: the matched node keeps its id and parent and
            // may only gain children if it has none.
            if !anchor.children.is_empty() && !node.children.is_empty() {
                return Err(mismatch);
            }
            let parent = node.parent;
            ast.nodes[target.0].annotation = new_annotation;
            ast.push_node(&rule.replacement, parent, rule.id, Some(target), &mut positions);
        } else {
            // Upward rewrite: the replacement grows above the current root
            // and the anchor keeps its existing subtree.
            if node.parent.is_some() || !anchor.children.is_empty() {
                return Err(mismatch);
            }
            ast.nodes[target.0].annotation = new_annotation;
            let root = ast.push_node(&rule.replacement, None, rule.id, Some(target), &mut positions);
            ast.root = Some(root);
        }
        debug_assert!(rule.kind != RuleKind::Creation);
        Ok(Applied { ast, positions })
    }

    /// Annotated nodes in pre-order.
    pub fn expandable_nodes(&self) -> Vec<(NodeId, Annotation)> {
        self.preorder()
            .into_iter()
            .map(|id| (id, self.nodes[id.0].annotation))
            .filter(|(_, a)| *a != Annotation::None)
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        !self.is_empty() && self.nodes.iter().all(|n| n.annotation == Annotation::None)
    }

    /// Terminal leaves joined by single spaces.
    pub fn render(&self) -> Result<String, AstError> {
        if !self.is_complete() {
            return Err(AstError::Incomplete);
        }
        let leaves: Vec<&str> = self
            .preorder()
            .into_iter()
            .map(|id| &self.nodes[id.0])
            .filter(|n| n.symbol.is_terminal())
            .map(|n| n.symbol.name())
            .collect();
        Ok(leaves.join(" "))
    }

    /// Debug S-expression, annotations as `^D`/`^U`/`^UD` suffixes.
    pub fn to_sexpr(&self) -> String {
        fn go(ast: &AnnotatedAst, id: NodeId, out: &mut String) {
            let n = ast.node(id);
            if !n.children.is_empty() {
                out.push('(');
            }
            out.push_str(&n.symbol.to_string());
            if n.annotation != Annotation::None {
                out.push('^');
                out.push_str(&n.annotation.to_string());
            }
            for &c in &n.children {
                out.push(' ');
                go(ast, c, out);
            }
            if !n.children.is_empty() {
                out.push(')');
            }
        }
        let mut out = String::new();
        if let Some(r) = self.root {
            go(self, r, &mut out);
        }
        out
    }

    /// The tree shape without annotations or ids.
    pub fn to_parse_tree(&self) -> Option<ParseTree> {
        fn go(ast: &AnnotatedAst, id: NodeId) -> ParseTree {
            let n = ast.node(id);
            ParseTree {
                symbol: n.symbol.clone(),
                children: n.children.iter().map(|&c| go(ast, c)).collect(),
            }
        }
        self.root.map(|r| go(self, r))
    }
}

impl fmt::Display for AnnotatedAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{
        derive_bottom_up_rules, derive_creation_rules, derive_top_down_rules, load_grammar,
        CreationMode, Grammar,
    };

    fn grammar() -> Grammar {
        load_grammar(r#"E -> E "> 12" | E "> 0" | E "+" E | "hours" | "value""#).unwrap()
    }

    fn created(g: &Grammar, mode: CreationMode, label: &str) -> AnnotatedAst {
        let rs = derive_creation_rules(g, &[mode]);
        let rule = rs.by_label(label).unwrap();
        AnnotatedAst::new().apply_rule(None, rule).unwrap().ast
    }

    #[test]
    fn annotation_algebra() {
        assert_eq!(Annotation::UD.without(Direction::Up), Annotation::D);
        assert_eq!(Annotation::D.without(Direction::Down), Annotation::None);
        assert_eq!(Annotation::U.union(Annotation::D), Annotation::UD);
        assert!(!Annotation::None.has(Direction::Down));
    }

    #[test]
    fn top_down_completion_in_one_step() {
        let g = grammar();
        let td = derive_top_down_rules(&g);
        let root = created(&g, CreationMode::Root, "root");
        let applied = root.apply_rule(Some(NodeId(0)), td.by_label("td3").unwrap()).unwrap();
        assert_eq!(applied.ast.len(), 2);
        assert!(applied.ast.is_complete());
        assert_eq!(applied.ast.to_sexpr(), r#"(E "hours")"#);
        assert_eq!(applied.positions, [NodeId(0), NodeId(1)]);
        // input untouched
        assert_eq!(root.to_sexpr(), "E^D");
    }

    #[test]
    fn bottom_up_wraps_leaf() {
        let g = grammar();
        let bu = derive_bottom_up_rules(&g);
        let leaf = created(&g, CreationMode::Leaf, "leaf:hours");
        assert_eq!(leaf.to_sexpr(), r#""hours"^U"#);
        let applied = leaf.apply_rule(Some(NodeId(0)), bu.by_label("bu3.0").unwrap()).unwrap();
        assert_eq!(applied.ast.to_sexpr(), r#"(E^U "hours")"#);
        assert_eq!(applied.ast.root(), Some(NodeId(1)));
        assert_eq!(applied.ast.node(NodeId(0)).parent, Some(NodeId(1)));
        assert_eq!(applied.positions, [NodeId(1), NodeId(0)]);
    }

    #[test]
    fn hours_gt_12_from_root_creation() {
        let g = grammar();
        let td = derive_top_down_rules(&g);
        let t = created(&g, CreationMode::Root, "root");
        let t = t.apply_rule(Some(NodeId(0)), td.by_label("td0").unwrap()).unwrap().ast;
        assert_eq!(t.to_sexpr(), r#"(E E^D "> 12")"#);
        assert_eq!(t.expandable_nodes(), [(NodeId(1), Annotation::D)]);
        let t = t.apply_rule(Some(NodeId(1)), td.by_label("td3").unwrap()).unwrap().ast;
        assert!(t.is_complete());
        assert_eq!(t.render().unwrap(), "hours > 12");
        assert_eq!(t.to_sexpr(), r#"(E (E "hours") "> 12")"#);
    }

    #[test]
    fn apply_errors() {
        let g = grammar();
        let td = derive_top_down_rules(&g);
        let bu = derive_bottom_up_rules(&g);
        let root_rule = derive_creation_rules(&g, &[CreationMode::Root]);
        let t = created(&g, CreationMode::Root, "root");
        assert_eq!(
            t.apply_rule(Some(NodeId(0)), bu.by_label("fin").unwrap()).unwrap_err(),
            AstError::PatternMismatch {
                node: NodeId(0),
                rule: bu.by_label("fin").unwrap().id
            }
        );
        assert!(matches!(
            t.apply_rule(None, root_rule.rule(0)),
            Err(AstError::CreationOnNonEmpty(_))
        ));
        assert!(matches!(
            t.apply_rule(Some(NodeId(7)), td.rule(0)),
            Err(AstError::UnknownNode(NodeId(7)))
        ));
    }

    #[test]
    fn middle_creation_expands_both_ways() {
        let g = grammar();
        let td = derive_top_down_rules(&g);
        let bu = derive_bottom_up_rules(&g);
        let t = created(&g, CreationMode::Middle, "mid:E");
        assert_eq!(t.to_sexpr(), "E^UD");
        let t = t.apply_rule(Some(NodeId(0)), bu.by_label("bu0.0").unwrap()).unwrap().ast;
        assert_eq!(t.to_sexpr(), r#"(E^U E^D "> 12")"#);
        let t = t.apply_rule(Some(NodeId(0)), td.by_label("td4").unwrap()).unwrap().ast;
        let t = t.apply_rule(Some(NodeId(1)), bu.by_label("fin").unwrap()).unwrap().ast;
        assert_eq!(t.render().unwrap(), "value > 12");
    }

    #[test]
    fn empty_and_complete_predicates() {
        let empty = AnnotatedAst::new();
        assert!(!empty.is_complete());
        assert!(empty.expandable_nodes().is_empty());
        assert_eq!(empty.render(), Err(AstError::Incomplete));
        let g = grammar();
        let single = created(&g, CreationMode::Root, "root");
        assert!(!single.is_complete());
    }
}
