use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{
    reconstruct_all, AnnotatedAst, Application, DerivationError, Focus, NodePolicy, ParseTree,
};
use crate::constraints::{Pruner, PushOutcome, SolverState};
use crate::grammar::{GroupKey, RuleId, RuleSet};

use super::{Context, FeatureKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

/// One rule choice seen while replaying a corpus expression: `chosen`
/// among the rules of `group` that survived pruning.
#[derive(Debug, Clone)]
pub struct TrainingStep {
    pub ast: AnnotatedAst,
    pub focus: Focus,
    pub group: GroupKey,
    pub chosen: RuleId,
    pub feasible: Vec<RuleId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    pub item: usize,
    pub step: usize,
    pub group: GroupKey,
    pub parent_label: Option<String>,
    pub rule: RuleId,
    pub label: String,
    pub polarity: Polarity,
    pub kind: Option<FeatureKind>,
    pub features: Vec<f64>,
}

/// Untyped derivations tried before giving up on a tree.
pub const MAX_DERIVATIONS: usize = 64;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Underivable(#[from] DerivationError),
    #[error("step {step}: rule {label} is pruned in its own derivation")]
    Pruned { step: usize, label: String },
}

fn replay_steps(
    applications: &[Application],
    rs: &RuleSet,
    policy: &dyn NodePolicy,
    pruner: &Pruner,
) -> Result<Vec<TrainingStep>, ReplayError> {
    let mut ast = AnnotatedAst::new();
    let mut solver = SolverState::new();
    let mut out = Vec::new();
    for (i, app) in applications.iter().enumerate() {
        let pruned = || ReplayError::Pruned {
            step: i,
            label: rs.rule(app.rule).label.clone(),
        };
        let focus = policy.select(&ast).ok_or_else(pruned)?;
        let group = match focus {
            Focus::Create => GroupKey::Creation,
            Focus::Node(id, dir) => GroupKey::Pattern(ast.node(id).symbol.clone(), dir),
        };
        let (steps, _) = pruner.feasible_rules(rs, &ast, focus, rs.group(&group), &mut solver);
        let chosen = steps.iter().position(|s| s.rule == app.rule).ok_or_else(pruned)?;
        let feasible = steps.iter().map(|s| s.rule).collect();
        let step = steps.into_iter().nth(chosen).expect("position found");
        out.push(TrainingStep {
            ast: ast.clone(),
            focus,
            group,
            chosen: app.rule,
            feasible,
        });
        if solver.push(&step.constraints) == PushOutcome::Unsat {
            return Err(pruned());
        }
        solver.commit();
        ast = step.ast;
    }
    Ok(out)
}

/// Replays the derivation of `tree` under `policy`, recording the feasible
/// rules at every step. When several untyped derivations exist (rules that
/// differ only in their type schemas), the first one whose every step
/// survives pruning is used.
pub fn training_steps(
    tree: &ParseTree,
    rs: &RuleSet,
    policy: &dyn NodePolicy,
    pruner: &Pruner,
) -> Result<Vec<TrainingStep>, ReplayError> {
    let mut last = None;
    for d in reconstruct_all(tree, rs, policy, MAX_DERIVATIONS)? {
        match replay_steps(&d.applications, rs, policy, pruner) {
            Ok(steps) => return Ok(steps),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one derivation"))
}

/// Builds feature vectors for a candidate rule at a step.
pub trait Featurizer: Sync {
    fn features(
        &self,
        ctx: &Context,
        rs: &RuleSet,
        ast: &AnnotatedAst,
        focus: Focus,
        rule: RuleId,
    ) -> Option<(FeatureKind, Vec<f64>)>;
}

/// For count-based models.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFeatures;

impl Featurizer for NoFeatures {
    fn features(&self, _: &Context, _: &RuleSet, _: &AnnotatedAst, _: Focus, _: RuleId) -> Option<(FeatureKind, Vec<f64>)> {
        None
    }
}

/// Counts recorded while instances are produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionAudit {
    pub items: usize,
    pub steps: usize,
    pub positives: usize,
    pub negatives: usize,
    /// (item, step) -> number of feasible rules in the group.
    pub feasible: BTreeMap<(usize, usize), usize>,
}

impl ExtractionAudit {
    /// Regroups `instances` and checks one positive and
    /// (feasible − 1) negatives per step.
    pub fn verify(&self, instances: &[TrainingInstance]) -> Result<(), String> {
        let mut seen: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        for i in instances {
            let e = seen.entry((i.item, i.step)).or_default();
            match i.polarity {
                Polarity::Positive => e.0 += 1,
                Polarity::Negative => e.1 += 1,
            }
        }
        if seen.len() != self.feasible.len() {
            return Err(format!("{} steps recorded, {} with instances", self.feasible.len(), seen.len()));
        }
        for (key, &n) in &self.feasible {
            let (pos, neg) = seen.get(key).copied().unwrap_or_default();
            if pos != 1 || neg + 1 != n {
                return Err(format!(
                    "item {} step {}: {pos} positives, {neg} negatives, {n} feasible",
                    key.0, key.1
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub instances: Vec<TrainingInstance>,
    pub audit: ExtractionAudit,
    pub warnings: Vec<String>,
}

/// One positive instance per applied rule and one negative per feasible
/// sibling. Items whose derivation fails are skipped with a warning.
pub fn extract_training_set<'a>(
    items: impl IntoIterator<Item = (&'a Context, &'a ParseTree, &'a RuleSet)>,
    policy: &dyn NodePolicy,
    limit: usize,
    featurizer: &dyn Featurizer,
) -> TrainingSet {
    let mut set = TrainingSet::default();
    for (item, (ctx, tree, rs)) in items.into_iter().enumerate() {
        set.audit.items += 1;
        let pruner = Pruner::new(rs, ctx, limit);
        let steps = match training_steps(tree, rs, policy, &pruner) {
            Ok(s) => s,
            Err(e) => {
                set.warnings.push(format!("item {item} ({}): {e}", tree.render()));
                continue;
            }
        };
        for (k, st) in steps.iter().enumerate() {
            set.audit.steps += 1;
            set.audit.feasible.insert((item, k), st.feasible.len());
            let parent_label = match st.focus {
                Focus::Create => None,
                Focus::Node(id, _) => st.ast.node(id).origin.map(|r| rs.rule(r).label.clone()),
            };
            for &r in &st.feasible {
                let polarity = if r == st.chosen {
                    set.audit.positives += 1;
                    Polarity::Positive
                } else {
                    set.audit.negatives += 1;
                    Polarity::Negative
                };
                let (kind, features) = match featurizer.features(ctx, rs, &st.ast, st.focus, r) {
                    Some((k, f)) => (Some(k), f),
                    None => (None, Vec::new()),
                };
                set.instances.push(TrainingInstance {
                    item,
                    step: k,
                    group: st.group.clone(),
                    parent_label: parent_label.clone(),
                    rule: r,
                    label: rs.rule(r).label.clone(),
                    polarity,
                    kind,
                    features,
                });
            }
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::LeftmostPolicy;
    use crate::constraints::tests::{hours_ctx, td_rules, typed_grammar};

    #[test]
    fn hours_gt_12_instances() {
        let g = typed_grammar();
        let rs = td_rules(&g);
        let ctx = hours_ctx();
        let tree = ParseTree::parse(r#"(E (E "hours") "> 12")"#).unwrap();
        let set = extract_training_set([(&ctx, &tree, &rs)], &LeftmostPolicy, 30, &NoFeatures);
        assert!(set.warnings.is_empty(), "{:?}", set.warnings);
        let pos: Vec<_> = set
            .instances
            .iter()
            .filter(|i| i.polarity == Polarity::Positive)
            .map(|i| i.label.as_str())
            .collect();
        assert_eq!(pos, ["root", "td0", "td3"]);
        // root step: the comparisons; leaf step: hours, value and the sum
        assert_eq!(set.audit.feasible.values().copied().collect::<Vec<_>>(), [1, 2, 3]);
        set.audit.verify(&set.instances).unwrap();
    }

    #[test]
    fn empty_and_foreign() {
        let g = typed_grammar();
        let rs = td_rules(&g);
        let set = extract_training_set([], &LeftmostPolicy, 30, &NoFeatures);
        assert!(set.instances.is_empty());
        let ctx = hours_ctx();
        let tree = ParseTree::parse(r#"(E "nope")"#).unwrap();
        let set = extract_training_set([(&ctx, &tree, &rs)], &LeftmostPolicy, 30, &NoFeatures);
        assert!(set.instances.is_empty());
        assert_eq!(set.warnings.len(), 1);
    }
}
