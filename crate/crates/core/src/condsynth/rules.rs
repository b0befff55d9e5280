//! The two-level condition grammar: `E` expands to a template whose
//! placeholders `V1..Vk` each hold one variable. Trees grow bottom-up from
//! the variable in `V1`.

use super::template::{Slot, Template};
use super::CondError;
use crate::ast::{Annotation, AnnotatedAst, ParseTree};
use crate::grammar::{
    Direction, Grammar, Production, RewritingRule, RuleKind, RulePayload, RuleSet, RuleTree,
    SchemaEntry, Symbol, TypeAtom,
};
use crate::models::Context;
use crate::search::Renderer;

pub const EXPR: &str = "E";
pub const CONST_LABEL: &str = "const";

pub fn placeholder(i: usize) -> Symbol {
    Symbol::non_terminal(&format!("V{i}"))
}

/// 1-based placeholder index of a `V{i}` symbol.
pub fn placeholder_index(s: &Symbol) -> Option<usize> {
    if s.is_terminal() {
        return None;
    }
    s.name().strip_prefix('V')?.parse().ok()
}

pub fn creation_label(var: &str) -> String {
    format!("new:{var}")
}

pub fn variable_label(var: &str) -> String {
    format!("var:{var}")
}

pub fn template_label(id: usize) -> String {
    format!("tpl:{id}")
}

fn checked(templates: &[Template], ctx: &Context) -> Result<usize, CondError> {
    if templates.is_empty() {
        return Err(CondError::NoTemplates);
    }
    if ctx.variables.is_empty() {
        return Err(CondError::NoVariables);
    }
    Ok(templates.iter().map(|t| t.arity).max().unwrap_or(0))
}

fn const_type(t: &crate::constraints::TypeName) -> Option<TypeAtom> {
    Some(TypeAtom::Const(t.clone()))
}

pub fn build_cond_grammar(templates: &[Template], ctx: &Context) -> Result<Grammar, CondError> {
    let arity = checked(templates, ctx)?;
    let e = Symbol::non_terminal(EXPR);
    let mut prods = Vec::new();
    for t in templates {
        let rhs: Vec<Symbol> = t
            .skeleton
            .iter()
            .map(|s| match s {
                Slot::Text(x) => Symbol::terminal(x),
                Slot::Hole(i) => placeholder(*i),
            })
            .collect();
        let mut p = Production::new(e.clone(), rhs);
        p.types[0] = const_type(&t.result_type);
        for (k, s) in t.skeleton.iter().enumerate() {
            if let Slot::Hole(i) = s {
                p.types[k + 1] = const_type(&t.placeholder_types[i - 1]);
            }
        }
        prods.push(p);
    }
    for i in 1..=arity {
        for v in &ctx.variables {
            prods.push(
                Production::new(placeholder(i), vec![Symbol::terminal(&v.name)])
                    .with_type(0, TypeAtom::Same(1)),
            );
        }
    }
    Grammar::new(prods).map_err(|e| CondError::Grammar(e.to_string()))
}

fn same_as_child() -> Vec<SchemaEntry> {
    vec![SchemaEntry {
        position: 0,
        atom: TypeAtom::Same(1),
    }]
}

fn bound_leaf(sym: Symbol, ann: Annotation, var: &str) -> RuleTree {
    RuleTree::leaf(sym, ann).with_children(vec![RuleTree::leaf(Symbol::terminal(var), Annotation::None)])
}

fn expression_rule(t: &Template) -> RewritingRule {
    let e = Symbol::non_terminal(EXPR);
    let mut schema = vec![SchemaEntry {
        position: 0,
        atom: TypeAtom::Const(t.result_type.clone()),
    }];
    let children = t
        .skeleton
        .iter()
        .enumerate()
        .map(|(k, s)| match s {
            Slot::Text(x) => RuleTree::leaf(Symbol::terminal(x), Annotation::None),
            Slot::Hole(i) => {
                schema.push(SchemaEntry {
                    position: k + 1,
                    atom: TypeAtom::Const(t.placeholder_types[i - 1].clone()),
                });
                if *i == 1 {
                    RuleTree::leaf(placeholder(1), Annotation::None).anchored()
                } else {
                    RuleTree::leaf(placeholder(*i), Annotation::D)
                }
            }
        })
        .collect();
    let (kind, pattern, replacement) = if t.arity == 0 {
        (
            RuleKind::TopDown,
            (e.clone(), Direction::Down),
            RuleTree::leaf(e, Annotation::None).anchored().with_children(children),
        )
    } else {
        (
            RuleKind::BottomUp,
            (placeholder(1), Direction::Up),
            RuleTree::leaf(e, Annotation::None).with_children(children),
        )
    };
    RewritingRule {
        id: 0,
        kind,
        pattern: Some(pattern),
        replacement,
        schema,
        label: template_label(t.id),
        payload: RulePayload::Template(t.id),
    }
}

/// Creation rules `=> V1^U -> "x"` per variable (and `=> E^D` when a
/// constant template exists), one expression rule per template, and
/// `Vi^D => Vi -> "x"` per placeholder index above 1 and variable.
pub fn build_cond_ruleset(templates: &[Template], ctx: &Context) -> Result<RuleSet, CondError> {
    let arity = checked(templates, ctx)?;
    let mut rules = Vec::new();
    for v in &ctx.variables {
        rules.push(RewritingRule {
            id: 0,
            kind: RuleKind::Creation,
            pattern: None,
            replacement: bound_leaf(placeholder(1), Annotation::U, &v.name),
            schema: same_as_child(),
            label: creation_label(&v.name),
            payload: RulePayload::Variable(v.name.clone()),
        });
    }
    if templates.iter().any(|t| t.arity == 0) {
        rules.push(RewritingRule {
            id: 0,
            kind: RuleKind::Creation,
            pattern: None,
            replacement: RuleTree::leaf(Symbol::non_terminal(EXPR), Annotation::D),
            schema: Vec::new(),
            label: CONST_LABEL.into(),
            payload: RulePayload::None,
        });
    }
    rules.extend(templates.iter().map(expression_rule));
    for i in 2..=arity {
        for v in &ctx.variables {
            rules.push(RewritingRule {
                id: 0,
                kind: RuleKind::TopDown,
                pattern: Some((placeholder(i), Direction::Down)),
                replacement: bound_leaf(placeholder(i), Annotation::None, &v.name).anchored(),
                schema: same_as_child(),
                label: variable_label(&v.name),
                payload: RulePayload::Variable(v.name.clone()),
            });
        }
    }
    Ok(RuleSet::from_rules(rules))
}

/// The grammar tree of `template` filled with `vars`.
pub fn cond_tree(template: &Template, vars: &[&str]) -> ParseTree {
    let children = template
        .skeleton
        .iter()
        .map(|s| match s {
            Slot::Text(x) => ParseTree::leaf(Symbol::terminal(x)),
            Slot::Hole(i) => ParseTree::node(
                placeholder(*i),
                vec![ParseTree::leaf(Symbol::terminal(vars[i - 1]))],
            ),
        })
        .collect();
    ParseTree::node(Symbol::non_terminal(EXPR), children)
}

/// Terminal texts concatenated; skeleton text carries its own spacing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConcatRenderer;

impl Renderer for ConcatRenderer {
    fn render(&self, ast: &AnnotatedAst) -> Option<String> {
        if !ast.is_complete() {
            return None;
        }
        Some(
            ast.preorder()
                .into_iter()
                .map(|id| ast.node(id))
                .filter(|n| n.symbol.is_terminal())
                .map(|n| n.symbol.name())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{reconstruct_applications, replay, LeftmostPolicy};
    use crate::condsynth::template::mine_templates;
    use crate::grammar::check_unambiguous;
    use crate::models::VariableInfo;

    fn setup(conds: &[&str]) -> (Context, Vec<Template>) {
        let ctx = Context::simple(
            vec![
                VariableInfo::new("hours", "Int"),
                VariableInfo::new("c", "Object[]"),
                VariableInfo::new("d", "Int"),
            ],
            "Boolean",
        );
        let t = mine_templates(conds.iter().map(|c| (&ctx, *c))).unwrap();
        (ctx, t)
    }

    fn order(conds: &[&str], target: &str) -> Vec<String> {
        let (ctx, t) = setup(conds);
        let rs = build_cond_ruleset(&t, &ctx).unwrap();
        let a = crate::condsynth::template::abstract_condition(&ctx, target).unwrap();
        let tpl = crate::condsynth::template::find_template(&t, &a.key).unwrap();
        let vars: Vec<&str> = a.variables.iter().map(String::as_str).collect();
        let tree = cond_tree(tpl, &vars);
        let d = reconstruct_applications(&tree, &rs, &LeftmostPolicy).unwrap();
        let ast = replay(&rs, &d.applications).unwrap();
        assert_eq!(ConcatRenderer.render(&ast).unwrap(), a.canonical);
        d.applications.iter().map(|a| rs.rule(a.rule).label.clone()).collect()
    }

    #[test]
    fn derivation_orders() {
        assert_eq!(order(&["hours > 12"], "hours > 12"), ["new:hours", "tpl:0"]);
        assert_eq!(
            order(&["hours > 12", "c[d] == null"], "c[d] == null"),
            ["new:c", "tpl:1", "var:d"]
        );
        assert_eq!(order(&["true", "hours > 0"], "true"), ["const", "tpl:0"]);
    }

    #[test]
    fn ruleset_shape() {
        let (ctx, t) = setup(&["hours > 12", "c[d] == null"]);
        let rs = build_cond_ruleset(&t, &ctx).unwrap();
        // 3 creations, 2 templates, 3 variables for V2
        assert_eq!(rs.len(), 8);
        assert_eq!(
            rs.by_label("tpl:1").unwrap().to_string(),
            r#"V1_0^U => E -> V1_0 "[" V2^D "] == null""#
        );
        assert_eq!(rs.by_label("new:c").unwrap().to_string(), r#"=> V1^U -> "c""#);
        assert!(build_cond_ruleset(&[], &ctx).is_err());
    }

    #[test]
    fn certified_unambiguous() {
        let (ctx, t) = setup(&["hours > 12", "c[d] == null", "d < hours", "true"]);
        let g = build_cond_grammar(&t, &ctx).unwrap();
        let rs = build_cond_ruleset(&t, &ctx).unwrap();
        let report = check_unambiguous(&rs, &g, 2 * 2 + 3);
        assert!(report.is_unambiguous(), "{:?}", report.witness);
        assert!(report.trees_derivable > 0);
    }
}
