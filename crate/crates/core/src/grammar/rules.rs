use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Grammar, Symbol, TypeAtom};
use crate::ast::Annotation;

pub type RuleId = usize;

/// Expansion direction of an annotated node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Down,
    Up,
}

impl Direction {
    pub fn annotation(self) -> Annotation {
        match self {
            Direction::Down => Annotation::D,
            Direction::Up => Annotation::U,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    TopDown,
    BottomUp,
    Creation,
}

/// Rules sharing a left-hand side form a group; creation rules share the
/// pseudo left-hand side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupKey {
    Creation,
    Pattern(Symbol, Direction),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Creation => f.write_str("*"),
            GroupKey::Pattern(s, d) => write!(f, "{s}^{}", d.annotation()),
        }
    }
}

/// Replacement tree of a rewriting rule. The anchored node stands for the
/// node matched by the rule's pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTree {
    pub symbol: Symbol,
    pub annotation: Annotation,
    pub anchor: bool,
    pub children: Vec<RuleTree>,
}

impl RuleTree {
    pub fn leaf(symbol: Symbol, annotation: Annotation) -> Self {
        RuleTree {
            symbol,
            annotation,
            anchor: false,
            children: Vec::new(),
        }
    }

    pub fn anchored(mut self) -> Self {
        self.anchor = true;
        self
    }

    pub fn with_children(mut self, children: Vec<RuleTree>) -> Self {
        self.children = children;
        self
    }

    /// Nodes in pre-order; positions used by type schemas index this list.
    pub fn preorder(&self) -> Vec<&RuleTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(t.children.iter().rev());
        }
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(RuleTree::size).sum::<usize>()
    }

    pub fn anchor_count(&self) -> usize {
        self.preorder().iter().filter(|t| t.anchor).count()
    }

    /// Child-index path from this node to the anchor.
    pub fn anchor_path(&self) -> Option<Vec<usize>> {
        if self.anchor {
            return Some(Vec::new());
        }
        self.children.iter().enumerate().find_map(|(i, c)| {
            c.anchor_path().map(|mut p| {
                p.insert(0, i);
                p
            })
        })
    }
}

impl fmt::Display for RuleTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol)?;
        if self.anchor {
            f.write_str("_0")?;
        }
        if self.annotation != Annotation::None {
            write!(f, "^{}", self.annotation)?;
        }
        if !self.children.is_empty() {
            f.write_str(" ->")?;
            for c in &self.children {
                if c.children.is_empty() {
                    write!(f, " {c}")?;
                } else {
                    write!(f, " ({c})")?;
                }
            }
        }
        Ok(())
    }
}

/// `T[position] = atom`, positions in the replacement's pre-order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub position: usize,
    pub atom: TypeAtom,
}

/// What a rule stands for outside the grammar; used by feature extraction.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RulePayload {
    #[default]
    None,
    Variable(String),
    Template(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewritingRule {
    pub id: RuleId,
    pub kind: RuleKind,
    pub pattern: Option<(Symbol, Direction)>,
    pub replacement: RuleTree,
    pub schema: Vec<SchemaEntry>,
    /// Stable name used by models; survives re-numbering of ids.
    pub label: String,
    pub payload: RulePayload,
}

impl RewritingRule {
    pub fn group(&self) -> GroupKey {
        match &self.pattern {
            None => GroupKey::Creation,
            Some((s, d)) => GroupKey::Pattern(s.clone(), *d),
        }
    }
}

impl fmt::Display for RewritingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((s, d)) = &self.pattern {
            write!(f, "{s}_0^{} ", d.annotation())?;
        }
        write!(f, "=> {}", self.replacement)
    }
}

/// A set of rewriting rules with ids `0..len` grouped by left-hand side.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    rules: Vec<RewritingRule>,
    groups: BTreeMap<GroupKey, Vec<RuleId>>,
}

impl RuleSet {
    /// Collects rules, renumbering ids in iteration order.
    pub fn from_rules(rules: impl IntoIterator<Item = RewritingRule>) -> Self {
        let mut set = RuleSet::default();
        for mut r in rules {
            r.id = set.rules.len();
            set.groups.entry(r.group()).or_default().push(r.id);
            set.rules.push(r);
        }
        set
    }

    /// Concatenation of several sets, renumbered.
    pub fn union<'a>(sets: impl IntoIterator<Item = &'a RuleSet>) -> Self {
        Self::from_rules(sets.into_iter().flat_map(|s| s.rules.iter().cloned()))
    }

    pub fn rules(&self) -> &[RewritingRule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &RewritingRule {
        &self.rules[id]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn groups(&self) -> &BTreeMap<GroupKey, Vec<RuleId>> {
        &self.groups
    }

    pub fn group(&self, key: &GroupKey) -> &[RuleId] {
        self.groups.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn by_label(&self, label: &str) -> Option<&RewritingRule> {
        self.rules.iter().find(|r| r.label == label)
    }

    /// Drops rules for which `keep` is false and renumbers.
    pub fn filtered(&self, mut keep: impl FnMut(&RewritingRule) -> bool) -> Self {
        Self::from_rules(self.rules.iter().filter(|r| keep(r)).cloned())
    }
}

fn child_annotation(s: &Symbol) -> Annotation {
    if s.is_terminal() {
        Annotation::None
    } else {
        Annotation::D
    }
}

fn schema_of(types: &[Option<TypeAtom>]) -> Vec<SchemaEntry> {
    types
        .iter()
        .enumerate()
        .filter_map(|(position, atom)| {
            atom.clone().map(|atom| SchemaEntry { position, atom })
        })
        .collect()
}

/// One top-down rule per production: `lhs_0^D => lhs_0 -> rhs`.
pub fn derive_top_down_rules(g: &Grammar) -> RuleSet {
    RuleSet::from_rules(g.productions().iter().enumerate().map(|(i, p)| {
        let children = p
            .rhs
            .iter()
            .map(|s| RuleTree::leaf(s.clone(), child_annotation(s)))
            .collect();
        RewritingRule {
            id: 0,
            kind: RuleKind::TopDown,
            pattern: Some((p.lhs.clone(), Direction::Down)),
            replacement: RuleTree::leaf(p.lhs.clone(), Annotation::None)
                .anchored()
                .with_children(children),
            schema: schema_of(&p.types),
            label: format!("td{i}"),
            payload: RulePayload::None,
        }
    }))
}

/// One bottom-up rule per right-hand-side occurrence, plus the rule that
/// finishes upward expansion at the root.
pub fn derive_bottom_up_rules(g: &Grammar) -> RuleSet {
    let mut rules = Vec::new();
    for (i, p) in g.productions().iter().enumerate() {
        for (pos, sym) in p.rhs.iter().enumerate() {
            let children = p
                .rhs
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    if j == pos {
                        RuleTree::leaf(s.clone(), Annotation::None).anchored()
                    } else {
                        RuleTree::leaf(s.clone(), child_annotation(s))
                    }
                })
                .collect();
            rules.push(RewritingRule {
                id: 0,
                kind: RuleKind::BottomUp,
                pattern: Some((sym.clone(), Direction::Up)),
                replacement: RuleTree::leaf(p.lhs.clone(), Annotation::U).with_children(children),
                schema: schema_of(&p.types),
                label: format!("bu{i}.{pos}"),
                payload: RulePayload::None,
            });
        }
    }
    rules.push(RewritingRule {
        id: 0,
        kind: RuleKind::BottomUp,
        pattern: Some((g.root().clone(), Direction::Up)),
        replacement: RuleTree::leaf(g.root().clone(), Annotation::None).anchored(),
        schema: Vec::new(),
        label: "fin".into(),
        payload: RulePayload::None,
    });
    RuleSet::from_rules(rules)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CreationMode {
    Root,
    Leaf,
    Middle,
}

/// Creation rules for the requested modes, in the order Root, Leaf, Middle.
pub fn derive_creation_rules(g: &Grammar, modes: &[CreationMode]) -> RuleSet {
    let creation = |symbol: Symbol, annotation: Annotation, label: String| RewritingRule {
        id: 0,
        kind: RuleKind::Creation,
        pattern: None,
        replacement: RuleTree::leaf(symbol, annotation),
        schema: Vec::new(),
        label,
        payload: RulePayload::None,
    };
    let mut rules = Vec::new();
    if modes.contains(&CreationMode::Root) {
        rules.push(creation(g.root().clone(), Annotation::D, "root".into()));
    }
    if modes.contains(&CreationMode::Leaf) {
        for t in g.terminals() {
            rules.push(creation(t.clone(), Annotation::U, format!("leaf:{}", t.name())));
        }
    }
    if modes.contains(&CreationMode::Middle) {
        for n in g.non_terminals() {
            rules.push(creation(n.clone(), Annotation::UD, format!("mid:{}", n.name())));
        }
    }
    RuleSet::from_rules(rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;

    fn five() -> Grammar {
        load_grammar(r#"E -> E "> 12" | E "> 0" | E "+" E | "hours" | "value""#).unwrap()
    }

    #[test]
    fn top_down_rule_shapes() {
        let rs = derive_top_down_rules(&five());
        assert_eq!(rs.len(), 5);
        assert_eq!(rs.groups().len(), 1);
        let key = GroupKey::Pattern(Symbol::non_terminal("E"), Direction::Down);
        assert_eq!(rs.group(&key), &[0, 1, 2, 3, 4]);
        assert_eq!(rs.rule(2).to_string(), r#"E_0^D => E_0 -> E^D "+" E^D"#);
        assert_eq!(rs.rule(3).to_string(), r#"E_0^D => E_0 -> "hours""#);
        assert!(rs.rules().iter().all(|r| r.replacement.anchor_count() == 1));
    }

    #[test]
    fn bottom_up_rule_shapes() {
        let rs = derive_bottom_up_rules(&five());
        // 2 + 2 + 3 + 1 + 1 right-hand-side positions, plus finishing.
        assert_eq!(rs.len(), 10);
        let plus: Vec<String> = rs
            .rules()
            .iter()
            .filter(|r| r.label == "bu2.0" || r.label == "bu2.2")
            .map(|r| r.to_string())
            .collect();
        assert_eq!(
            plus,
            [
                r#"E_0^U => E^U -> E_0 "+" E^D"#,
                r#"E_0^U => E^U -> E^D "+" E_0"#
            ]
        );
        assert_eq!(
            rs.by_label("bu3.0").unwrap().to_string(),
            r#""hours"_0^U => E^U -> "hours"_0"#
        );
        assert_eq!(rs.by_label("fin").unwrap().to_string(), "E_0^U => E_0");
        assert!(rs.rules().iter().all(|r| r.replacement.anchor_count() == 1));
    }

    #[test]
    fn creation_rules_by_mode() {
        let g = five();
        let root = derive_creation_rules(&g, &[CreationMode::Root]);
        assert_eq!(root.len(), 1);
        assert_eq!(root.rule(0).to_string(), "=> E^D");
        let leaf = derive_creation_rules(&g, &[CreationMode::Leaf]);
        let shown: Vec<_> = leaf.rules().iter().map(|r| r.to_string()).collect();
        assert!(shown.contains(&r#"=> "hours"^U"#.to_string()));
        assert!(shown.contains(&r#"=> "value"^U"#.to_string()));
        let mid = derive_creation_rules(&g, &[CreationMode::Middle]);
        assert_eq!(mid.rule(0).to_string(), "=> E^UD");
        assert!(derive_creation_rules(&g, &[]).is_empty());
        assert!(leaf.rules().iter().all(|r| r.replacement.anchor_count() == 0));
    }

    #[test]
    fn union_renumbers_and_regroups() {
        let g = five();
        let all = RuleSet::union([
            &derive_top_down_rules(&g),
            &derive_bottom_up_rules(&g),
            &derive_creation_rules(&g, &[CreationMode::Root]),
        ]);
        assert_eq!(all.len(), 16);
        for (i, r) in all.rules().iter().enumerate() {
            assert_eq!(r.id, i);
            assert!(all.group(&r.group()).contains(&i));
        }
        let total: usize = all.groups().values().map(Vec::len).sum();
        assert_eq!(total, all.len());
    }
}
