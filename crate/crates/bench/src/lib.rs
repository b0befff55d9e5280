//! Fixtures shared by the benchmarks.

pub use progest_core as core;

use progest_core::condsynth::{generate_corpus, ingest_str, to_jsonl, train_cond, CorpusRecord, ModelKind, Trained, TrainConfig};
use progest_core::grammar::{derive_creation_rules, derive_top_down_rules, CreationMode};
use progest_core::{load_grammar, Context, RuleSet, VariableInfo};

pub const HOURS: &str =
    "E -> E:Int \"> 12\" :: Boolean | E:Int \"> 0\" :: Boolean | E \"+\" E :: Int | \"hours\" :: $1 | \"value\" :: $1";

pub const ARITH: &str = "S -> A \"=\" A | A \"<\" A\nA -> \"1\" | \"x\" | A \"*\" A | A \"+\" A | \"(\" A \")\"";

/// Top-down rules plus root creation for `text`.
pub fn top_down(text: &str) -> RuleSet {
    let g = load_grammar(text).expect("fixture grammar");
    RuleSet::union([&derive_creation_rules(&g, &[CreationMode::Root]), &derive_top_down_rules(&g)])
}

pub fn hours_context() -> Context {
    Context::simple(
        vec![VariableInfo::new("hours", "Int"), VariableInfo::new("value", "Int"), VariableInfo::new("x", "Int")],
        "Boolean",
    )
}

/// Synthetic records after ingest, which splits compound conditions.
pub fn corpus(n: usize) -> Vec<CorpusRecord> {
    ingest_str(&to_jsonl(&generate_corpus(n, 13))).expect("synthetic corpus ingests")
}

pub fn trained(items: &[CorpusRecord], model: ModelKind) -> Trained {
    let cfg = TrainConfig {
        model,
        ..Default::default()
    };
    train_cond(items, &cfg).expect("synthetic corpus trains")
}
