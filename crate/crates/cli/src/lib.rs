//! Command surface of the `progest` binary: train, predict, eval, check and
//! gen-corpus. Each command writes its report to the given writer and
//! returns a [`Failure`] whose exit code scripts can rely on.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use progest_core::condsynth::{
    evaluate_topk, generate_corpus, ingest, read, sha256_hex, synthesize_condition, to_jsonl,
    Bundle, EvalConfig, EvalReport, ModelKind, SynthConfig, TrainConfig,
};
use progest_core::constraints::compute_size_bounds;
use progest_core::grammar::{
    check_unambiguous, derive_bottom_up_rules, derive_creation_rules, derive_top_down_rules,
    CreationMode,
};
use progest_core::{load_grammar, Context, RuleSet};

pub const MAX_PCA_DIMS: usize = 20;

/// Exit status 1 for domain failures, 2 for usage and I/O errors.
#[derive(Debug)]
pub enum Failure {
    Domain(String),
    Usage(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Domain(m) | Failure::Usage(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn domain(e: impl fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "progest", version, about = "Probabilistic condition synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine templates from a corpus and write a model bundle.
    Train(TrainArgs),
    /// Rank conditions for a context with a trained bundle.
    Predict(PredictArgs),
    /// Held-out precision@1/10/50 over seeded random splits.
    Eval(EvalArgs),
    /// Unambiguity verdict and size-bound table for a grammar file.
    Check(CheckArgs),
    /// Write the seeded synthetic corpus as JSON lines.
    GenCorpus(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Uniform,
    Frequency,
    Logistic,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Uniform => ModelKind::Uniform,
            ModelArg::Frequency => ModelKind::Frequency,
            ModelArg::Logistic => ModelKind::Logistic,
        }
    }
}

/// Search knobs shared by train, predict and eval.
#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Beam width after the creation step.
    #[arg(long)]
    pub beam: Option<usize>,
    /// Beam width after every later step.
    #[arg(long)]
    pub beam2: Option<usize>,
    /// Largest program size in nodes.
    #[arg(long = "size-limit")]
    pub size_limit: Option<usize>,
    /// Keep candidates matching the anti-patterns.
    #[arg(long = "no-anti-patterns")]
    pub no_anti_patterns: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output path of the bundle.
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    pub model: ModelArg,
    #[arg(long = "pca-dims", default_value_t = MAX_PCA_DIMS)]
    pub pca_dims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Default number of candidates stored in the bundle.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// JSON file holding the context of the hole.
    #[arg(long)]
    pub context: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of the corpus held out per repeat.
    #[arg(long, default_value_t = 0.1)]
    pub split: f64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long = "pca-dims", default_value_t = MAX_PCA_DIMS)]
    pub pca_dims: usize,
    /// Candidates ranked per test item; hits are counted up to rank 50.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Also write the report as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Exit with status 1 when precision@10 falls below this value.
    #[arg(long)]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RulesArg {
    /// Top-down rules with root creation.
    TopDown,
    /// Top-down and bottom-up rules with root and leaf creation.
    Full,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub grammar: PathBuf,
    /// Largest tree size enumerated.
    #[arg(long, default_value_t = 9)]
    pub bound: usize,
    #[arg(long, value_enum, default_value = "top-down")]
    pub rules: RulesArg,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of source records before compound conditions are split.
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub model: ModelKind,
    pub pca_dims: usize,
    pub seed: u64,
    pub split_ratio: f64,
    pub repeats: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        let s = &self.synth;
        if s.widths.0 == 0 || s.widths.1 == 0 {
            return Err(usage("beam widths must be positive"));
        }
        if s.limit == 0 {
            return Err(usage("--size-limit must be positive"));
        }
        if self.pca_dims == 0 || self.pca_dims > MAX_PCA_DIMS {
            return Err(usage(format!("--pca-dims must be in 1..={MAX_PCA_DIMS}")));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(usage("--split must lie strictly between 0 and 1"));
        }
        if self.repeats == 0 {
            return Err(usage("--repeats must be positive"));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        let mut t = TrainConfig {
            model: self.model,
            pca_dims: self.pca_dims,
            limit: self.synth.limit,
            seed: self.seed,
            ..Default::default()
        };
        t.logistic.seed = self.seed;
        t
    }
}

impl SearchArgs {
    fn apply(&self, mut s: SynthConfig) -> SynthConfig {
        if let Some(b) = self.beam {
            s.widths.0 = b;
        }
        if let Some(b) = self.beam2 {
            s.widths.1 = b;
        }
        if let Some(l) = self.size_limit {
            s.limit = l;
        }
        if self.no_anti_patterns {
            s.anti_patterns = false;
        }
        s
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(usage)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Check(a) => cmd_check(&a, out),
        Command::GenCorpus(a) => cmd_gen_corpus(&a, out),
    }
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut synth = a.search.apply(SynthConfig::default());
    if let Some(k) = a.k {
        synth.k = k;
    }
    let cfg = RunConfig {
        synth,
        model: a.model.into(),
        pca_dims: a.pca_dims,
        seed: a.seed,
        split_ratio: 0.1,
        repeats: 1,
    };
    cfg.validate()?;
    let text = read(&a.corpus).map_err(usage)?;
    let records = ingest(&a.corpus).map_err(usage)?;
    let bundle = Bundle::train(&records, sha256_hex(text.as_bytes()), cfg.train_config(), cfg.synth.clone())
        .map_err(domain)?;
    write_file(&a.bundle, &bundle.to_json())?;
    write_out(
        out,
        &format!(
            "trained {} model on {} items: {} templates, {} steps, {} positives, {} negatives, {} skipped\n",
            model_name(cfg.model),
            records.len(),
            bundle.templates.len(),
            bundle.audit.steps,
            bundle.audit.positives,
            bundle.audit.negatives,
            bundle.audit.skipped,
        ),
    )
}

pub fn load_bundle(path: &Path) -> Result<Bundle, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Bundle::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn load_context(path: &Path) -> Result<Context, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut ctx: Context =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    ctx.normalize().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(ctx)
}

pub fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let bundle = load_bundle(&a.bundle)?;
    let ctx = load_context(&a.context)?;
    let mut synth = a.search.apply(bundle.synth.clone());
    if let Some(k) = a.k {
        synth.k = k;
    }
    if synth.widths.0 == 0 || synth.widths.1 == 0 || synth.limit == 0 {
        return Err(usage("beam widths and --size-limit must be positive"));
    }
    if synth.k == 0 {
        return Ok(());
    }
    let outcome = synthesize_condition(&ctx, &bundle.templates, &bundle.model, &synth).map_err(domain)?;
    if outcome.candidates.is_empty() {
        let r = &outcome.report;
        return Err(domain(format!(
            "no candidates ({} constraint-pruned, {} size-pruned, {} anti-pattern)",
            r.constraint_pruned, r.size_pruned, r.anti_pattern_pruned
        )));
    }
    let mut text = String::new();
    for (i, c) in outcome.candidates.iter().enumerate() {
        text.push_str(&format!("{}\t{:.6}\t{}\n", i + 1, c.probability, c.rendered));
    }
    write_out(out, &text)
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Uniform => "uniform",
        ModelKind::Frequency => "frequency",
        ModelKind::Logistic => "logistic",
    }
}

pub fn render_report(r: &EvalReport) -> String {
    format!(
        "model: {}\nseed: {}\nsplit: {}\nrepeats: {}\ntested: {}\nunreachable: {}\n\
         precision@1: {:.4} ({} hits)\nprecision@10: {:.4} ({} hits)\nprecision@50: {:.4} ({} hits)\n",
        model_name(r.model),
        r.seed,
        r.split_ratio,
        r.repeats,
        r.tested,
        r.unreachable,
        r.top1,
        r.solved_at_1,
        r.top10,
        r.solved_at_10,
        r.top50,
        r.solved_at_50,
    )
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut synth = a.search.apply(SynthConfig::default());
    synth.k = a.k;
    let cfg = RunConfig {
        synth,
        model: a.model.into(),
        pca_dims: a.pca_dims,
        seed: a.seed,
        split_ratio: a.split,
        repeats: a.repeats,
    };
    cfg.validate()?;
    if a.k == 0 {
        return Err(usage("--k must be positive"));
    }
    let records = ingest(&a.corpus).map_err(usage)?;
    let eval = EvalConfig {
        split_ratio: cfg.split_ratio,
        seed: cfg.seed,
        repeats: cfg.repeats,
        train: cfg.train_config(),
        synth: cfg.synth.clone(),
    };
    let report = evaluate_topk(&records, &eval, cfg.model).map_err(domain)?;
    write_out(out, &render_report(&report))?;
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        w.serialize(&report).map_err(usage)?;
        w.flush().map_err(usage)?;
    }
    match a.floor {
        Some(f) if report.top10 < f => Err(domain(format!(
            "precision@10 {:.4} is below the floor {f}",
            report.top10
        ))),
        _ => Ok(()),
    }
}

pub fn check_rules(g: &progest_core::Grammar, rules: RulesArg) -> RuleSet {
    match rules {
        RulesArg::TopDown => RuleSet::union([
            &derive_creation_rules(g, &[CreationMode::Root]),
            &derive_top_down_rules(g),
        ]),
        RulesArg::Full => RuleSet::union([
            &derive_creation_rules(g, &[CreationMode::Root, CreationMode::Leaf]),
            &derive_top_down_rules(g),
            &derive_bottom_up_rules(g),
        ]),
    }
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if a.bound == 0 {
        return Err(usage("--bound must be positive"));
    }
    let text = std::fs::read_to_string(&a.grammar)
        .map_err(|e| usage(format!("{}: {e}", a.grammar.display())))?;
    let g = load_grammar(&text).map_err(|e| usage(format!("{}: {e}", a.grammar.display())))?;
    let rs = check_rules(&g, a.rules);
    let report = check_unambiguous(&rs, &g, a.bound);

    let mut s = String::new();
    match &report.witness {
        None => {
            s.push_str(&format!("unambiguous (bound {})\n", a.bound));
            if let Some(note) = report.bound_note() {
                s.push_str(&format!("note: {note}\n"));
            }
        }
        Some(w) => {
            s.push_str(&format!("ambiguous (bound {})\n", a.bound));
            s.push_str(&format!("tree: {}\n", w.tree.render()));
            s.push_str(&format!("sexpr: {}\n", w.tree));
            let label = |r: Option<usize>| r.map_or("-".to_string(), |r| rs.rule(r).label.clone());
            let node = w.node.map_or("creation".to_string(), |n| format!("node {n}"));
            s.push_str(&format!("differs at {node}: {} vs {}\n", label(w.rule_a), label(w.rule_b)));
            for (name, seq) in [("a", &w.sequence_a), ("b", &w.sequence_b)] {
                let labels: Vec<String> = seq.iter().map(|x| rs.rule(x.rule).label.clone()).collect();
                s.push_str(&format!("derivation {name}: {}\n", labels.join(" ")));
            }
        }
    }
    s.push_str(&format!(
        "trees within bound: {}, derivable before stopping: {}\n",
        report.trees_checked, report.trees_derivable
    ));
    s.push_str("symbol\tmin size\n");
    for (sym, dir, size) in compute_size_bounds(&rs).entries() {
        s.push_str(&format!("{}^{}\t{size}\n", sym.name(), dir.annotation()));
    }
    write_out(out, &s)?;
    if report.is_unambiguous() {
        Ok(())
    } else {
        Err(domain("rule set is ambiguous"))
    }
}

pub fn cmd_gen_corpus(a: &GenArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = to_jsonl(&generate_corpus(a.n, a.seed));
    match &a.out {
        Some(p) => write_file(p, &text),
        None => write_out(out, &text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RunConfig {
        RunConfig {
            synth: SynthConfig::default(),
            model: ModelKind::Logistic,
            pca_dims: 20,
            seed: 3,
            split_ratio: 0.1,
            repeats: 1,
        }
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        let bad = [
            RunConfig { pca_dims: 21, ..config() },
            RunConfig { pca_dims: 0, ..config() },
            RunConfig { split_ratio: 1.0, ..config() },
            RunConfig { repeats: 0, ..config() },
            RunConfig {
                synth: SynthConfig { widths: (0, 5), ..Default::default() },
                ..config()
            },
        ];
        for c in bad {
            assert_eq!(c.validate().unwrap_err().exit_code(), 2, "{c:?}");
        }
    }

    #[test]
    fn seed_reaches_both_trainers() {
        let t = config().train_config();
        assert_eq!((t.seed, t.logistic.seed), (3, 3));
        assert_eq!(t.limit, 30);
    }

    #[test]
    fn search_overrides() {
        let args = SearchArgs {
            beam: Some(2),
            beam2: None,
            size_limit: Some(12),
            no_anti_patterns: true,
        };
        let s = args.apply(SynthConfig::default());
        assert_eq!((s.widths, s.limit, s.anti_patterns), ((2, 200), 12, false));
    }
}
