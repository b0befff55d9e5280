use serde::{Deserialize, Serialize};

use super::rules::{build_cond_ruleset, cond_tree, placeholder, placeholder_index};
use super::template::{abstract_condition, find_template, Template};
use super::{CondError, CorpusRecord};
use crate::ast::{AnnotatedAst, Focus, LeftmostPolicy, NodeId, ParseTree};
use crate::grammar::{RuleId, RuleKind, RulePayload, RuleSet};
use crate::models::{
    extract_training_set, BinaryLogistic, Context, ExtractionAudit, FeatureExtractor, FeatureKind,
    FeaturePayload, Featurizer, FrequencyModel, LogisticOptions, MultinomialLogistic, NoFeatures,
    PcaOptions, Polarity, ProbabilityModel, Query, VariableInfo,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Uniform,
    Frequency,
    Logistic,
}

/// The variable held by a placeholder node.
fn bound_variable<'c>(ctx: &'c Context, ast: &AnnotatedAst, v: NodeId) -> Option<&'c VariableInfo> {
    let leaf = ast.node(v).children.first()?;
    ctx.variable(ast.node(*leaf).symbol.name())
}

/// The variable in placeholder `i` among the children of `e`.
fn sibling_variable<'c>(ctx: &'c Context, ast: &AnnotatedAst, e: NodeId, i: usize) -> Option<&'c VariableInfo> {
    let sym = placeholder(i);
    let v = ast.node(e).children.iter().find(|c| ast.node(**c).symbol == sym)?;
    bound_variable(ctx, ast, *v)
}

/// Feature vectors for condition rules, routed by rule kind.
pub struct CondFeaturizer<'a> {
    pub fx: &'a FeatureExtractor,
}

impl CondFeaturizer<'_> {
    fn padded(&self, ctx: &Context, kind: FeatureKind) -> Vec<f64> {
        let mut out = self.fx.context_features(ctx);
        out.resize(self.fx.len(kind), 0.0);
        out
    }
}

impl Featurizer for CondFeaturizer<'_> {
    fn features(
        &self,
        ctx: &Context,
        rs: &RuleSet,
        ast: &AnnotatedAst,
        focus: Focus,
        rule: RuleId,
    ) -> Option<(FeatureKind, Vec<f64>)> {
        let r = rs.rule(rule);
        let var = |name: &str| ctx.variable(name);
        let out = match (&r.payload, focus) {
            (RulePayload::Variable(name), Focus::Create) => {
                let f = self.fx.extract(FeatureKind::Creation, ctx, FeaturePayload::Candidate(var(name)?));
                (FeatureKind::Creation, f.ok()?)
            }
            (_, Focus::Create) => (FeatureKind::Creation, self.padded(ctx, FeatureKind::Creation)),
            (RulePayload::Template(_), Focus::Node(n, _)) => match bound_variable(ctx, ast, n) {
                Some(v) if r.kind == RuleKind::BottomUp => {
                    let f = self.fx.extract(FeatureKind::Expression, ctx, FeaturePayload::Anchor(v));
                    (FeatureKind::Expression, f.ok()?)
                }
                _ => (FeatureKind::Expression, self.padded(ctx, FeatureKind::Expression)),
            },
            (RulePayload::Variable(name), Focus::Node(n, _)) => {
                let position = placeholder_index(&ast.node(n).symbol)?;
                let previous = ast
                    .node(n)
                    .parent
                    .and_then(|e| sibling_variable(ctx, ast, e, position - 1));
                let f = self.fx.extract(
                    FeatureKind::Variable,
                    ctx,
                    FeaturePayload::Placeholder {
                        candidate: var(name)?,
                        previous,
                        position,
                    },
                );
                (FeatureKind::Variable, f.ok()?)
            }
            _ => return None,
        };
        Some(out)
    }
}

/// The three learned choices of condition synthesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticCond {
    pub features: FeatureExtractor,
    pub creation: BinaryLogistic,
    pub expression: MultinomialLogistic,
    pub variable: BinaryLogistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CondModel {
    Uniform,
    Frequency(FrequencyModel),
    Logistic(Box<LogisticCond>),
}

impl CondModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            CondModel::Uniform => ModelKind::Uniform,
            CondModel::Frequency(_) => ModelKind::Frequency,
            CondModel::Logistic(_) => ModelKind::Logistic,
        }
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

impl ProbabilityModel for CondModel {
    fn predict(&self, q: &Query<'_>) -> Vec<f64> {
        let n = q.candidates.len();
        match self {
            CondModel::Uniform => uniform(n),
            CondModel::Frequency(m) => m.predict(q),
            CondModel::Logistic(m) => {
                let fz = CondFeaturizer { fx: &m.features };
                let feats: Option<Vec<(FeatureKind, Vec<f64>)>> = q
                    .candidates
                    .iter()
                    .map(|&r| fz.features(q.ctx, q.rules, q.ast, q.focus, r))
                    .collect();
                let Some(feats) = feats else {
                    return uniform(n);
                };
                match feats.first().map(|f| f.0) {
                    Some(FeatureKind::Expression) => {
                        let labels: Vec<&str> = (0..n).map(|i| q.label(i)).collect();
                        m.expression.distribution(&feats[0].1, &labels)
                    }
                    Some(FeatureKind::Creation) => {
                        let xs: Vec<Vec<f64>> = feats.into_iter().map(|f| f.1).collect();
                        m.creation.distribution(&xs)
                    }
                    Some(FeatureKind::Variable) => {
                        let xs: Vec<Vec<f64>> = feats.into_iter().map(|f| f.1).collect();
                        m.variable.distribution(&xs)
                    }
                    None => Vec::new(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub pca_dims: usize,
    pub limit: usize,
    pub seed: u64,
    pub logistic: LogisticOptions,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::Frequency,
            pca_dims: 20,
            limit: 30,
            seed: 0,
            logistic: LogisticOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub templates: Vec<Template>,
    pub model: CondModel,
    pub audit: ExtractionAudit,
    pub warnings: Vec<String>,
}

/// Grammar trees of training items, with their rule sets.
pub(crate) fn training_trees(
    items: &[CorpusRecord],
    templates: &[Template],
) -> Result<Vec<(ParseTree, RuleSet)>, CondError> {
    items
        .iter()
        .map(|it| {
            let a = abstract_condition(&it.context, &it.condition)?;
            let t = find_template(templates, &a.key).ok_or(CondError::UnknownTemplate(a.canonical))?;
            let vars: Vec<&str> = a.variables.iter().map(String::as_str).collect();
            Ok((cond_tree(t, &vars), build_cond_ruleset(templates, &it.context)?))
        })
        .collect()
}

/// Mines templates from `items` and fits the requested model on them.
pub fn train_cond(items: &[CorpusRecord], cfg: &TrainConfig) -> Result<Trained, CondError> {
    if items.is_empty() {
        return Err(CondError::EmptyCorpus);
    }
    let templates = super::template::mine_templates(
        items.iter().map(|i| (&i.context, i.condition.as_str())),
    )?;
    let trees = training_trees(items, &templates)?;
    let triples = || {
        items
            .iter()
            .zip(&trees)
            .map(|(it, (t, rs))| (&it.context, t, rs))
    };
    let (model, set) = match cfg.model {
        ModelKind::Uniform => {
            let set = extract_training_set(triples(), &LeftmostPolicy, cfg.limit, &NoFeatures);
            (CondModel::Uniform, set)
        }
        ModelKind::Frequency => {
            let set = extract_training_set(triples(), &LeftmostPolicy, cfg.limit, &NoFeatures);
            (CondModel::Frequency(FrequencyModel::train(&set.instances)), set)
        }
        ModelKind::Logistic => {
            let contexts: Vec<&Context> = items.iter().map(|i| &i.context).collect();
            let pca = PcaOptions {
                dims: cfg.pca_dims,
                seed: cfg.seed,
                ..Default::default()
            };
            let fx = FeatureExtractor::fit(&contexts, &pca);
            let set = extract_training_set(
                triples(),
                &LeftmostPolicy,
                cfg.limit,
                &CondFeaturizer { fx: &fx },
            );
            let opts = LogisticOptions {
                seed: cfg.seed,
                ..cfg.logistic
            };
            let binary = |kind: FeatureKind| -> Vec<(Vec<f64>, bool)> {
                set.instances
                    .iter()
                    .filter(|i| i.kind == Some(kind))
                    .map(|i| (i.features.clone(), i.polarity == Polarity::Positive))
                    .collect()
            };
            let multi: Vec<(Vec<f64>, String)> = set
                .instances
                .iter()
                .filter(|i| i.kind == Some(FeatureKind::Expression) && i.polarity == Polarity::Positive)
                .map(|i| (i.features.clone(), i.label.clone()))
                .collect();
            let m = LogisticCond {
                creation: BinaryLogistic::train(&binary(FeatureKind::Creation), &opts),
                expression: MultinomialLogistic::train(&multi, &opts),
                variable: BinaryLogistic::train(&binary(FeatureKind::Variable), &opts),
                features: fx,
            };
            (CondModel::Logistic(Box::new(m)), set)
        }
    };
    set.audit.verify(&set.instances).map_err(CondError::Audit)?;
    Ok(Trained {
        templates,
        model,
        audit: set.audit,
        warnings: set.warnings,
    })
}
