use std::collections::HashMap;
use std::fmt;
use std::ops::Add;

use super::{is_variable_reference, SolverState, TypeName};
use crate::ast::{AnnotatedAst, Annotation, NodeId};
use crate::grammar::{Direction, GroupKey, RewritingRule, RuleSet, Symbol, TypeAtom};
use crate::models::Context;

/// A node count or `Infinite` when no completion exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Size {
    Finite(usize),
    Infinite,
}

impl Size {
    pub fn finite(self) -> Option<usize> {
        match self {
            Size::Finite(n) => Some(n),
            Size::Infinite => None,
        }
    }

    pub fn within(self, limit: usize) -> bool {
        matches!(self, Size::Finite(n) if n <= limit)
    }

    fn minus_one(self) -> Size {
        match self {
            Size::Finite(n) => Size::Finite(n.saturating_sub(1)),
            Size::Infinite => Size::Infinite,
        }
    }
}

impl Add for Size {
    type Output = Size;
    fn add(self, rhs: Size) -> Size {
        match (self, rhs) {
            (Size::Finite(a), Size::Finite(b)) => Size::Finite(a + b),
            _ => Size::Infinite,
        }
    }
}

impl std::iter::Sum for Size {
    fn sum<I: Iterator<Item = Size>>(iter: I) -> Size {
        iter.fold(Size::Finite(0), Add::add)
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Size::Finite(n) => write!(f, "{n}"),
            Size::Infinite => f.write_str("inf"),
        }
    }
}

/// Least completion sizes of annotated symbols, ignoring types.
#[derive(Debug, Clone, Default)]
pub struct SizeBounds {
    table: HashMap<(Symbol, Direction), Size>,
}

impl SizeBounds {
    fn directed(&self, sym: &Symbol, dir: Direction) -> Size {
        self.table.get(&(sym.clone(), dir)).copied().unwrap_or(Size::Infinite)
    }

    /// Bound for `sym` carrying `ann`; unmarked nodes count one.
    pub fn of(&self, sym: &Symbol, ann: Annotation) -> Size {
        match ann {
            Annotation::None => Size::Finite(1),
            Annotation::D => self.directed(sym, Direction::Down),
            Annotation::U => self.directed(sym, Direction::Up),
            Annotation::UD => {
                (self.directed(sym, Direction::Up) + self.directed(sym, Direction::Down)).minus_one()
            }
        }
    }

    /// Lower bound on the size of any completion of `ast`.
    pub fn tree(&self, ast: &AnnotatedAst) -> Size {
        ast.nodes().iter().map(|n| self.of(&n.symbol, n.annotation)).sum()
    }

    /// Table rows sorted by symbol and direction.
    pub fn entries(&self) -> Vec<(Symbol, Direction, Size)> {
        let mut v: Vec<_> = self.table.iter().map(|((s, d), z)| (s.clone(), *d, *z)).collect();
        v.sort_by(|a, b| (a.0.name(), a.1).cmp(&(b.0.name(), b.1)));
        v
    }
}

fn pattern_keys(rs: &RuleSet) -> Vec<(Symbol, Direction)> {
    rs.groups()
        .keys()
        .filter_map(|k| match k {
            GroupKey::Pattern(s, d) => Some((s.clone(), *d)),
            GroupKey::Creation => None,
        })
        .collect()
}

/// Least fixpoint of size(N^d) = min over rules of the summed bounds of
/// the replacement's nodes.
pub fn compute_size_bounds(rs: &RuleSet) -> SizeBounds {
    let keys = pattern_keys(rs);
    let mut bounds = SizeBounds {
        table: keys.iter().map(|k| (k.clone(), Size::Infinite)).collect(),
    };
    loop {
        let mut changed = false;
        for (sym, dir) in &keys {
            let best = rs
                .group(&GroupKey::Pattern(sym.clone(), *dir))
                .iter()
                .map(|&r| {
                    rs.rule(r)
                        .replacement
                        .preorder()
                        .into_iter()
                        .map(|n| bounds.of(&n.symbol, n.annotation))
                        .sum::<Size>()
                })
                .min()
                .unwrap_or(Size::Infinite);
            if best < bounds.directed(sym, *dir) {
                bounds.table.insert((sym.clone(), *dir), best);
                changed = true;
            }
        }
        if !changed {
            return bounds;
        }
    }
}

/// A typed table row: symbol, direction, and the bound per type name.
pub type TypedRow = (Symbol, Direction, Vec<(String, Size)>);

/// Least completion sizes per type: the entry for (N, d, t) is the smallest
/// well-typed completion of N^d whose node has type t. The last type slot
/// stands for any type not named by the rules or the context.
#[derive(Debug, Clone)]
pub struct TypedBounds {
    ctx: Context,
    types: Vec<TypeName>,
    table: HashMap<(Symbol, Direction), Vec<Size>>,
}

impl TypedBounds {
    pub fn new(rs: &RuleSet, ctx: &Context) -> Self {
        let mut types: Vec<TypeName> = Vec::new();
        let mut add = |t: &TypeName| {
            if !types.contains(t) {
                types.push(t.clone());
            }
        };
        add(&ctx.result_type);
        for v in &ctx.variables {
            add(&v.type_name);
        }
        for r in rs.rules() {
            for e in &r.schema {
                if let TypeAtom::Const(t) = &e.atom {
                    add(t);
                }
            }
        }
        let mut tb = TypedBounds {
            ctx: ctx.clone(),
            types,
            table: HashMap::new(),
        };
        let keys = pattern_keys(rs);
        let n = tb.type_count();
        loop {
            let mut changed = false;
            for (sym, dir) in &keys {
                let rules = rs.group(&GroupKey::Pattern(sym.clone(), *dir));
                let row: Vec<Size> = (0..n)
                    .map(|t| {
                        rules
                            .iter()
                            .map(|&r| tb.rule_cost(rs.rule(r), t))
                            .min()
                            .unwrap_or(Size::Infinite)
                    })
                    .collect();
                let old = tb.table.get(&(sym.clone(), *dir));
                if old != Some(&row) {
                    let improved = match old {
                        None => row.iter().any(|s| *s != Size::Infinite),
                        Some(o) => row.iter().zip(o).any(|(a, b)| a < b),
                    };
                    tb.table.insert((sym.clone(), *dir), row);
                    changed |= improved;
                }
            }
            if !changed {
                return tb;
            }
        }
    }

    pub fn context(&self) -> &Context {
        &self.ctx
    }

    fn type_count(&self) -> usize {
        self.types.len() + 1
    }

    fn type_index(&self, t: &TypeName) -> usize {
        self.types.iter().position(|x| x == t).unwrap_or(self.types.len())
    }

    fn admissible(&self, sym: &Symbol, t: usize) -> bool {
        if !sym.is_terminal() || !is_variable_reference(sym.name()) {
            return true;
        }
        self.ctx
            .variable(sym.name())
            .is_some_and(|v| self.type_index(&v.type_name) == t)
    }

    fn directed(&self, sym: &Symbol, dir: Direction, t: usize) -> Size {
        self.table
            .get(&(sym.clone(), dir))
            .map_or(Size::Infinite, |row| row[t])
    }

    /// Bound for `sym^ann` at type slot `t`.
    fn node_cost(&self, sym: &Symbol, ann: Annotation, t: usize) -> Size {
        if !self.admissible(sym, t) {
            return Size::Infinite;
        }
        match ann {
            Annotation::None => Size::Finite(1),
            Annotation::D => self.directed(sym, Direction::Down, t),
            Annotation::U => self.directed(sym, Direction::Up, t),
            Annotation::UD => {
                (self.directed(sym, Direction::Up, t) + self.directed(sym, Direction::Down, t))
                    .minus_one()
            }
        }
    }

    /// Cheapest class assignment for a group of nodes sharing one type.
    fn class_cost<'a>(
        &self,
        members: impl Iterator<Item = (&'a Symbol, Annotation)> + Clone,
        forced: Option<usize>,
    ) -> Size {
        let at = |t: usize| members.clone().map(|(s, a)| self.node_cost(s, a, t)).sum::<Size>();
        match forced {
            Some(t) => at(t),
            None => (0..self.type_count()).map(at).min().unwrap_or(Size::Infinite),
        }
    }

    fn rule_cost(&self, rule: &RewritingRule, t: usize) -> Size {
        let nodes = rule.replacement.preorder();
        let mut parent: Vec<usize> = (0..nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut forced: Vec<Option<usize>> = vec![None; nodes.len()];
        let force = |p: &mut Vec<usize>, forced: &mut Vec<Option<usize>>, i: usize, t: usize| {
            let r = find(p, i);
            match forced[r] {
                Some(x) => x == t,
                None => {
                    forced[r] = Some(t);
                    true
                }
            }
        };
        let mut ok = true;
        for e in &rule.schema {
            if e.position >= nodes.len() {
                return Size::Infinite;
            }
            match &e.atom {
                TypeAtom::Const(c) => {
                    ok &= force(&mut parent, &mut forced, e.position, self.type_index(c));
                }
                TypeAtom::Same(q) => {
                    if *q >= nodes.len() {
                        return Size::Infinite;
                    }
                    let (a, b) = (find(&mut parent, e.position), find(&mut parent, *q));
                    if a != b {
                        parent[a] = b;
                        if let Some(x) = forced[a] {
                            ok &= force(&mut parent, &mut forced, b, x);
                        }
                    }
                }
            }
        }
        if let Some(anchor) = nodes.iter().position(|n| n.anchor) {
            ok &= force(&mut parent, &mut forced, anchor, t);
        }
        // upward rules act on the tree root; once it stops growing it has the result type
        let upward = matches!(rule.pattern, Some((_, Direction::Up)));
        if upward && !nodes[0].annotation.has(Direction::Up) {
            let rt = self.type_index(&self.ctx.result_type);
            ok &= force(&mut parent, &mut forced, 0, rt);
        }
        if !ok {
            return Size::Infinite;
        }
        let classes: Vec<usize> = (0..nodes.len()).map(|i| find(&mut parent, i)).collect();
        let mut roots = classes.clone();
        roots.sort_unstable();
        roots.dedup();
        roots
            .into_iter()
            .map(|c| {
                let members = nodes
                    .iter()
                    .zip(&classes)
                    .filter(move |(_, k)| **k == c)
                    .map(|(n, _)| (&n.symbol, n.annotation));
                self.class_cost(members, forced[c])
            })
            .sum()
    }

    /// Smallest well-typed completion of `ast` consistent with `solver`.
    pub fn tree(&self, ast: &AnnotatedAst, solver: &SolverState) -> Size {
        let mut classes: HashMap<usize, Vec<NodeId>> = HashMap::new();
        for n in ast.nodes() {
            classes.entry(solver.class_of(n.id)).or_default().push(n.id);
        }
        classes
            .values()
            .map(|ids| {
                let forced = solver.binding(ids[0]).map(|t| self.type_index(t));
                let members = ids.iter().map(|&id| {
                    let n = ast.node(id);
                    (&n.symbol, n.annotation)
                });
                self.class_cost(members, forced)
            })
            .sum()
    }

    /// Per-type rows for display, keyed like [`SizeBounds::entries`].
    pub fn entries(&self) -> Vec<TypedRow> {
        let names: Vec<String> = self
            .types
            .iter()
            .map(ToString::to_string)
            .chain(["?".to_string()])
            .collect();
        let mut v: Vec<_> = self
            .table
            .iter()
            .map(|((s, d), row)| {
                (s.clone(), *d, names.iter().cloned().zip(row.iter().copied()).collect())
            })
            .collect();
        v.sort_by(|a: &TypedRow, b| (a.0.name(), a.1).cmp(&(b.0.name(), b.1)));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::tests::{hours_ctx, typed_grammar};
    use crate::grammar::{derive_bottom_up_rules, derive_creation_rules, derive_top_down_rules, load_grammar, CreationMode};

    #[test]
    fn running_example_bounds() {
        let g = load_grammar(r#"E -> E "> 12" | E "> 0" | E "+" E | "hours" | "value""#).unwrap();
        let e = Symbol::non_terminal("E");
        let td = compute_size_bounds(&derive_top_down_rules(&g));
        assert_eq!(td.of(&e, Annotation::D), Size::Finite(2));
        let all = RuleSet::union([&derive_top_down_rules(&g), &derive_bottom_up_rules(&g)]);
        let b = compute_size_bounds(&all);
        // the finishing rule alone completes an upward root
        assert_eq!(b.of(&e, Annotation::U), Size::Finite(1));
        assert_eq!(b.of(&e, Annotation::UD), Size::Finite(2));
        assert_eq!(b.of(&Symbol::terminal("hours"), Annotation::U), Size::Finite(2));
    }

    #[test]
    fn non_terminating_symbol_is_infinite() {
        let g = load_grammar("S -> A \"x\" | \"y\"\nA -> A \"z\"\n").unwrap();
        let b = compute_size_bounds(&derive_top_down_rules(&g));
        assert_eq!(b.of(&Symbol::non_terminal("A"), Annotation::D), Size::Infinite);
        assert_eq!(b.of(&Symbol::non_terminal("S"), Annotation::D), Size::Finite(2));
    }

    #[test]
    fn typed_bounds_respect_result_type() {
        let g = typed_grammar();
        let rs = RuleSet::union([
            &derive_top_down_rules(&g),
            &derive_bottom_up_rules(&g),
            &derive_creation_rules(&g, &[CreationMode::Root, CreationMode::Leaf]),
        ]);
        let tb = TypedBounds::new(&rs, &hours_ctx());
        let hours = Symbol::terminal("hours");
        let int = tb.type_index(&"Int".into());
        let boolean = tb.type_index(&"Boolean".into());
        // hours^U must be wrapped by a comparison before it can finish
        assert_eq!(tb.node_cost(&hours, Annotation::U, int), Size::Finite(4));
        assert_eq!(tb.node_cost(&hours, Annotation::U, boolean), Size::Infinite);
        let e = Symbol::non_terminal("E");
        assert_eq!(tb.node_cost(&e, Annotation::D, boolean), Size::Finite(4));
        assert_eq!(tb.node_cost(&e, Annotation::D, int), Size::Finite(2));
    }
}
