//! Condition synthesis: mine templates from a corpus, build the two-level
//! condition grammar with bottom-up rules, learn rule models, and predict
//! top-k conditions for a context.

mod bundle;
mod corpus;
mod eval;
pub mod lang;
mod model;
mod rules;
mod synthetic;
mod template;

pub use bundle::{AuditSummary, Bundle, BundleError, BUNDLE_FORMAT, BUNDLE_VERSION};
pub use corpus::{ingest, ingest_str, read, sha256_hex, to_jsonl, CorpusRecord, IngestError};
pub use eval::{
    evaluate_topk, split_indices, synthesize_condition, EvalConfig, EvalReport, SynthConfig,
};
pub use lang::{canonical, parse_expr, split_logic_ops, ParseError};
pub use model::{train_cond, CondFeaturizer, CondModel, LogisticCond, ModelKind, TrainConfig, Trained};
pub use rules::{
    build_cond_grammar, build_cond_ruleset, cond_tree, creation_label, placeholder,
    placeholder_index, template_label, variable_label, ConcatRenderer, CONST_LABEL, EXPR,
};
pub use synthetic::generate_corpus;
pub use template::{abstract_condition, find_template, mine_templates, Abstracted, Slot, Template, TemplateKey};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CondError {
    #[error("cannot parse `{text}`: {error}")]
    Parse { text: String, error: ParseError },
    #[error("`{0}` contains a logical operator")]
    NotAtomic(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("no expression templates")]
    NoTemplates,
    #[error("context declares no variables")]
    NoVariables,
    #[error("no mined template matches `{0}`")]
    UnknownTemplate(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus has {0} items, at least 10 are needed")]
    CorpusTooSmall(usize),
    #[error("condition grammar: {0}")]
    Grammar(String),
    #[error("training audit failed: {0}")]
    Audit(String),
}
