//! Conditional rule probabilities P(rule | context, partial tree, node).

mod context;
mod features;
mod logistic;
mod names;
mod training;

pub use context::{
    classify_type, ClassInfo, Context, ContextError, MethodInfo, TypeClass, UsageCounts,
    VariableInfo, MAX_DEF_SITES, TOKEN_WINDOW,
};
pub use features::{FeatureError, FeatureExtractor, FeatureKind, FeaturePayload, VOCAB_CAP};
pub use logistic::{BinaryLogistic, LogisticOptions, MultinomialLogistic};
pub use names::{
    bigram_index, bigram_label, encode_name_2gram, fit_name_pca, pca_fit, pca_fit_dense, Pca,
    PcaError, PcaOptions, SparseVec, BIGRAM_DIMS, MAX_NAME_DIMS,
};
pub use training::{
    extract_training_set, training_steps, ExtractionAudit, Featurizer, NoFeatures, Polarity, ReplayError, MAX_DERIVATIONS,
    TrainingInstance, TrainingSet, TrainingStep,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::{AnnotatedAst, Focus};
use crate::grammar::{GroupKey, RuleId, RuleSet};

/// One prediction request: which of `candidates` expands `focus`.
#[derive(Clone, Copy)]
pub struct Query<'a> {
    pub ctx: &'a Context,
    pub rules: &'a RuleSet,
    pub ast: &'a AnnotatedAst,
    pub focus: Focus,
    pub candidates: &'a [RuleId],
}

impl Query<'_> {
    pub fn group(&self) -> GroupKey {
        match self.focus {
            Focus::Create => GroupKey::Creation,
            Focus::Node(id, dir) => GroupKey::Pattern(self.ast.node(id).symbol.clone(), dir),
        }
    }

    /// Label of the rule that introduced the focused node.
    pub fn parent_label(&self) -> Option<&str> {
        match self.focus {
            Focus::Create => None,
            Focus::Node(id, _) => self
                .ast
                .node(id)
                .origin
                .map(|r| self.rules.rule(r).label.as_str()),
        }
    }

    pub fn label(&self, i: usize) -> &str {
        &self.rules.rule(self.candidates[i]).label
    }
}

pub trait ProbabilityModel: Send + Sync {
    /// One probability per candidate, in order.
    fn predict(&self, q: &Query<'_>) -> Vec<f64>;
}

impl<M: ProbabilityModel + ?Sized> ProbabilityModel for &M {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        (**self).predict(q)
    }
}

impl<M: ProbabilityModel + ?Sized> ProbabilityModel for Box<M> {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        (**self).predict(q)
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformModel;

impl ProbabilityModel for UniformModel {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        uniform(q.candidates.len())
    }
}

/// Fixed scores keyed by (parent label, rule label), returned as given.
/// Rows that do not cover every candidate fall back to uniform.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableModel {
    pub rows: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Row key for steps whose node has no parent rule.
pub const NO_PARENT: &str = "*";

impl TableModel {
    pub fn with(mut self, parent: &str, label: &str, p: f64) -> Self {
        self.rows.entry(parent.to_string()).or_default().insert(label.to_string(), p);
        self
    }
}

impl ProbabilityModel for TableModel {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        let row = self.rows.get(q.parent_label().unwrap_or(NO_PARENT));
        let found: Option<Vec<f64>> = row.and_then(|row| {
            (0..q.candidates.len()).map(|i| row.get(q.label(i)).copied()).collect()
        });
        found.unwrap_or_else(|| uniform(q.candidates.len()))
    }
}

/// Laplace-smoothed rule frequencies per (group, parent label), backing off
/// to the group's marginal counts when the pair was never seen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyModel {
    pub alpha: f64,
    /// group -> parent label -> rule label -> count
    pub counts: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
}

impl FrequencyModel {
    pub fn new() -> Self {
        FrequencyModel {
            alpha: 1.0,
            counts: BTreeMap::new(),
        }
    }

    pub fn observe(&mut self, group: &GroupKey, parent: Option<&str>, label: &str) {
        *self
            .counts
            .entry(group.to_string())
            .or_default()
            .entry(parent.unwrap_or(NO_PARENT).to_string())
            .or_default()
            .entry(label.to_string())
            .or_insert(0) += 1;
    }

    /// Counts positive instances.
    pub fn train(instances: &[TrainingInstance]) -> Self {
        let mut m = Self::new();
        for i in instances.iter().filter(|i| i.polarity == Polarity::Positive) {
            m.observe(&i.group, i.parent_label.as_deref(), &i.label);
        }
        m
    }
}

impl ProbabilityModel for FrequencyModel {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        let n = q.candidates.len();
        let Some(by_parent) = self.counts.get(&q.group().to_string()) else {
            return uniform(n);
        };
        let marginal;
        let table = match by_parent.get(q.parent_label().unwrap_or(NO_PARENT)) {
            Some(t) => t,
            None => {
                let mut m: BTreeMap<String, u64> = BTreeMap::new();
                for t in by_parent.values() {
                    for (k, c) in t {
                        *m.entry(k.clone()).or_insert(0) += c;
                    }
                }
                marginal = m;
                &marginal
            }
        };
        let counts: Vec<f64> = (0..n)
            .map(|i| table.get(q.label(i)).copied().unwrap_or(0) as f64)
            .collect();
        let total: f64 = counts.iter().sum::<f64>() + self.alpha * n as f64;
        counts.iter().map(|c| (c + self.alpha) / total).collect()
    }
}

/// Deterministic pseudo-random scores that depend only on the focused
/// node's group, its parent label and the candidate label. Useful as an
/// arbitrary but node-local model in tests.
#[derive(Debug, Clone, Copy)]
pub struct HashModel {
    pub seed: u64,
}

fn fnv(seed: u64, parts: &[&str]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for p in parts {
        for b in p.bytes().chain([0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h ^ (h >> 29)
}

impl ProbabilityModel for HashModel {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        let group = q.group().to_string();
        let parent = q.parent_label().unwrap_or(NO_PARENT);
        let w: Vec<f64> = (0..q.candidates.len())
            .map(|i| {
                let h = fnv(self.seed, &[&group, parent, q.label(i)]);
                0.05 + (h % 10_000) as f64 / 10_000.0
            })
            .collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::AnnotatedAst;
    use crate::grammar::{derive_creation_rules, load_grammar, CreationMode, RuleSet};

    fn leaf_rules() -> RuleSet {
        let g = load_grammar(r#"E -> "a" | "b" | "c" | "d""#).unwrap();
        derive_creation_rules(&g, &[CreationMode::Leaf])
    }

    fn query<'a>(ctx: &'a Context, rs: &'a RuleSet, ast: &'a AnnotatedAst, c: &'a [RuleId]) -> Query<'a> {
        Query {
            ctx,
            rules: rs,
            ast,
            focus: Focus::Create,
            candidates: c,
        }
    }

    #[test]
    fn laplace_arithmetic() {
        let rs = leaf_rules();
        let ctx = Context::simple(vec![], "Boolean");
        let ast = AnnotatedAst::new();
        let mut m = FrequencyModel::new();
        for _ in 0..6 {
            m.observe(&GroupKey::Creation, None, "leaf:a");
        }
        for _ in 0..2 {
            m.observe(&GroupKey::Creation, None, "leaf:b");
        }
        let p = m.predict(&query(&ctx, &rs, &ast, &[0, 1]));
        assert!((p[0] - 0.7).abs() < 1e-12 && (p[1] - 0.3).abs() < 1e-12);
        let p = m.predict(&query(&ctx, &rs, &ast, &[0]));
        assert_eq!(p, [1.0]);
        let p = FrequencyModel::new().predict(&query(&ctx, &rs, &ast, &[0, 1, 2, 3]));
        assert_eq!(p, [0.25; 4]);
    }

    #[test]
    fn hash_model_is_normalized() {
        let rs = leaf_rules();
        let ctx = Context::simple(vec![], "Boolean");
        let ast = AnnotatedAst::new();
        let p = HashModel { seed: 7 }.predict(&query(&ctx, &rs, &ast, &[0, 1, 2, 3]));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn table_model_returns_raw_rows() {
        let rs = leaf_rules();
        let ctx = Context::simple(vec![], "Boolean");
        let ast = AnnotatedAst::new();
        let m = TableModel::default().with(NO_PARENT, "leaf:a", 0.3).with(NO_PARENT, "leaf:b", 0.6);
        assert_eq!(m.predict(&query(&ctx, &rs, &ast, &[0, 1])), [0.3, 0.6]);
        assert_eq!(m.predict(&query(&ctx, &rs, &ast, &[0, 2])), [0.5, 0.5]);
    }
}
