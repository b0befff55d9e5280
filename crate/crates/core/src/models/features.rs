use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::context::{classify_type, Context, TypeClass, VariableInfo};
use super::names::{fit_name_pca, Pca, PcaOptions, MAX_NAME_DIMS};

/// Largest token vocabulary kept; rarer tokens share the unknown slot.
pub const VOCAB_CAP: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    Creation,
    Expression,
    Variable,
}

/// What a feature vector describes besides the context.
#[derive(Debug, Clone, Copy)]
pub enum FeaturePayload<'a> {
    /// A candidate variable for creation or downward expansion.
    Candidate(&'a VariableInfo),
    /// The variable an expression will be built around.
    Anchor(&'a VariableInfo),
    /// A candidate for the placeholder at `position` (1-based), after
    /// `previous` filled the one before it.
    Placeholder {
        candidate: &'a VariableInfo,
        previous: Option<&'a VariableInfo>,
        position: usize,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("{kind:?} features need a different payload")]
    SchemaMismatch { kind: FeatureKind },
}

/// Turns contexts and variables into fixed-length vectors. Holds the name
/// PCA and the token vocabulary fitted on training contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub pca: Pca,
    pub vocab: Vec<String>,
}

fn log1p(x: u32) -> f64 {
    (x as f64).ln_1p()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn one_hot(class: TypeClass) -> [f64; 6] {
    let mut v = [0.0; 6];
    v[class.index()] = 1.0;
    v
}

impl FeatureExtractor {
    pub fn fit(contexts: &[&Context], pca: &PcaOptions) -> Self {
        let names: Vec<&str> = contexts
            .iter()
            .flat_map(|c| c.variables.iter().map(|v| v.name.as_str()))
            .collect();
        let pca = fit_name_pca(names, pca).unwrap_or_else(|_| Pca {
            dims: pca.dims.min(MAX_NAME_DIMS),
            mean: Vec::new(),
            components: Vec::new(),
            variances: Vec::new(),
        });
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in contexts {
            for t in c.tokens_before.iter().chain(&c.tokens_after) {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(_, n)| *n >= 2).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(VOCAB_CAP);
        let mut vocab: Vec<String> = ranked.into_iter().map(|(t, _)| t.to_string()).collect();
        vocab.sort();
        FeatureExtractor { pca, vocab }
    }

    fn token_bag(&self, tokens: &[String], out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + self.vocab.len() + 1, 0.0);
        for t in tokens {
            let slot = self.vocab.binary_search(t).unwrap_or(self.vocab.len());
            out[start + slot] += 1.0;
        }
        out.push(flag(!tokens.is_empty()));
    }

    pub fn context_len(&self) -> usize {
        4 + 3 + 1 + 6 + 2 * (self.vocab.len() + 2)
    }

    pub fn context_features(&self, ctx: &Context) -> Vec<f64> {
        let ci = &ctx.class_info;
        let mi = &ctx.method_info;
        let mut out = vec![
            log1p(ci.inheritance_depth),
            log1p(ci.class_length),
            log1p(ci.method_count),
            (ci.field_names.len() as f64).ln_1p(),
            log1p(mi.body_lines),
            mi.modifiers.len() as f64,
            mi.parameters.len() as f64,
            flag(mi.modifiers.iter().any(|m| m == "static")),
        ];
        out.extend(one_hot(classify_type(mi.return_type.as_str())));
        self.token_bag(&ctx.tokens_before, &mut out);
        self.token_bag(&ctx.tokens_after, &mut out);
        debug_assert_eq!(out.len(), self.context_len());
        out
    }

    pub fn variable_len(&self) -> usize {
        6 + 4 + 2 + 3 + self.pca.dims + 5
    }

    pub fn variable_features(&self, ctx: &Context, v: &VariableInfo) -> Vec<f64> {
        let lname = v.name.to_lowercase();
        let mut out = Vec::with_capacity(self.variable_len());
        out.extend(one_hot(v.class()));
        out.extend([
            flag(v.is_final),
            flag(v.is_static),
            flag(v.is_loop_index),
            flag(v.init_value.is_some()),
            (v.decl_distance as f64).ln_1p(),
            v.def_sites.len() as f64,
            log1p(v.usage_counts.in_method),
            log1p(v.usage_counts.in_class),
            log1p(v.usage_counts.in_project),
        ]);
        out.extend(self.pca.name_vector(&v.name));
        out.extend([
            flag(lname.len() > 1 && v.type_name.as_str().to_lowercase().contains(&lname)),
            flag(lname.len() > 1 && ctx.method_info.name.to_lowercase().contains(&lname)),
            flag(ctx.class_info.field_names.contains(&v.name)),
            flag(ctx.method_info.parameters.contains(&v.name)),
            ctx.tokens_before.iter().filter(|t| **t == v.name).count() as f64,
        ]);
        debug_assert_eq!(out.len(), self.variable_len());
        out
    }

    pub fn len(&self, kind: FeatureKind) -> usize {
        match kind {
            FeatureKind::Creation | FeatureKind::Expression => {
                self.context_len() + self.variable_len()
            }
            FeatureKind::Variable => self.context_len() + 2 * self.variable_len() + 4,
        }
    }

    pub fn extract(
        &self,
        kind: FeatureKind,
        ctx: &Context,
        payload: FeaturePayload<'_>,
    ) -> Result<Vec<f64>, FeatureError> {
        let mut out = self.context_features(ctx);
        match (kind, payload) {
            (FeatureKind::Creation, FeaturePayload::Candidate(v))
            | (FeatureKind::Expression, FeaturePayload::Anchor(v)) => {
                out.extend(self.variable_features(ctx, v));
            }
            (
                FeatureKind::Variable,
                FeaturePayload::Placeholder {
                    candidate,
                    previous,
                    position,
                },
            ) => {
                out.extend(self.variable_features(ctx, candidate));
                match previous {
                    Some(p) => out.extend(self.variable_features(ctx, p)),
                    None => out.resize(out.len() + self.variable_len(), 0.0),
                }
                out.extend([
                    flag(previous.is_some()),
                    position as f64,
                    flag(previous.is_some_and(|p| p.name == candidate.name)),
                    flag(previous.is_some_and(|p| p.type_name == candidate.type_name)),
                ]);
            }
            _ => return Err(FeatureError::SchemaMismatch { kind }),
        }
        debug_assert_eq!(out.len(), self.len(kind));
        Ok(out)
    }
}
