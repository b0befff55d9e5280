use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{train_cond, CondModel, ModelKind, TrainConfig};
use super::rules::{build_cond_ruleset, ConcatRenderer};
use super::template::{abstract_condition, find_template, Template};
use super::{CondError, CorpusRecord};
use crate::ast::LeftmostPolicy;
use crate::models::{Context, ProbabilityModel};
use crate::search::{beam_search, AntiPattern, SearchConfig, SearchOutcome, SearchProblem, WidthSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub k: usize,
    /// Width after the creation step, then after every later step.
    pub widths: (usize, usize),
    pub limit: usize,
    pub anti_patterns: bool,
    pub step_cap: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            k: 10,
            widths: (5, 200),
            limit: 30,
            anti_patterns: true,
            step_cap: 100_000,
        }
    }
}

impl SynthConfig {
    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            widths: WidthSchedule(vec![self.widths.0, self.widths.1]),
            per_state: None,
            limit: self.limit,
            k: self.k,
            filters: if self.anti_patterns {
                vec![AntiPattern::VarNotNull]
            } else {
                Vec::new()
            },
            step_cap: self.step_cap,
        }
    }
}

/// Top-k conditions for `ctx`.
pub fn synthesize_condition(
    ctx: &Context,
    templates: &[Template],
    model: &dyn ProbabilityModel,
    cfg: &SynthConfig,
) -> Result<SearchOutcome, CondError> {
    let rs = build_cond_ruleset(templates, ctx)?;
    let problem = SearchProblem {
        rules: &rs,
        ctx,
        model,
        policy: &LeftmostPolicy,
        renderer: &ConcatRenderer,
    };
    Ok(beam_search(&problem, &cfg.search_config()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub split_ratio: f64,
    pub seed: u64,
    pub repeats: usize,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            split_ratio: 0.1,
            seed: 0,
            repeats: 1,
            train: TrainConfig::default(),
            synth: SynthConfig {
                k: 50,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub top1: f64,
    pub top10: f64,
    pub top50: f64,
    pub tested: usize,
    pub solved_at_1: usize,
    pub solved_at_10: usize,
    pub solved_at_50: usize,
    /// Test conditions whose template never occurs in training.
    pub unreachable: usize,
    pub seed: u64,
    pub split_ratio: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    tested: usize,
    hits: [usize; 3],
    unreachable: usize,
}

/// Indices of the test side of repeat `r`.
pub fn split_indices(n: usize, ratio: f64, seed: u64, r: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
    idx.shuffle(&mut rng);
    let tests = ((n as f64 * ratio).ceil() as usize).clamp(1, n.saturating_sub(1).max(1));
    let train = idx.split_off(tests);
    (idx, train)
}

/// Rank (1-based) of the held-out condition among the candidates.
fn rank_of(item: &CorpusRecord, templates: &[Template], model: &CondModel, cfg: &SynthConfig) -> Result<Option<usize>, CondError> {
    let a = abstract_condition(&item.context, &item.condition)?;
    if find_template(templates, &a.key).is_none() {
        return Ok(None);
    }
    let out = synthesize_condition(&item.context, templates, model, cfg)?;
    Ok(out.candidates.iter().position(|c| c.rendered == a.canonical).map(|p| p + 1))
}

fn run_repeat(corpus: &[CorpusRecord], cfg: &EvalConfig, kind: ModelKind, r: usize) -> Result<Tally, CondError> {
    let (test, train) = split_indices(corpus.len(), cfg.split_ratio, cfg.seed, r);
    let train_items: Vec<CorpusRecord> = train.iter().map(|&i| corpus[i].clone()).collect();
    let tc = TrainConfig {
        model: kind,
        seed: cfg.seed,
        ..cfg.train.clone()
    };
    let trained = train_cond(&train_items, &tc)?;
    let ranks: Vec<Result<(bool, Option<usize>), CondError>> = test
        .par_iter()
        .map(|&i| {
            let item = &corpus[i];
            let a = abstract_condition(&item.context, &item.condition)?;
            let reachable = find_template(&trained.templates, &a.key).is_some();
            Ok((reachable, rank_of(item, &trained.templates, &trained.model, &cfg.synth)?))
        })
        .collect();
    let mut t = Tally::default();
    for res in ranks {
        let (reachable, rank) = res?;
        t.tested += 1;
        if !reachable {
            t.unreachable += 1;
        }
        if let Some(rank) = rank {
            for (slot, cut) in [1, 10, 50].into_iter().enumerate() {
                if rank <= cut {
                    t.hits[slot] += 1;
                }
            }
        }
    }
    Ok(t)
}

/// Held-out top-k precision averaged over seeded random splits.
pub fn evaluate_topk(corpus: &[CorpusRecord], cfg: &EvalConfig, kind: ModelKind) -> Result<EvalReport, CondError> {
    if corpus.len() < 10 {
        return Err(CondError::CorpusTooSmall(corpus.len()));
    }
    let repeats = cfg.repeats.max(1);
    let tallies: Vec<Tally> = (0..repeats)
        .into_par_iter()
        .map(|r| run_repeat(corpus, cfg, kind, r))
        .collect::<Result<_, _>>()?;
    let mut prec = [0.0; 3];
    let mut total = Tally::default();
    for t in &tallies {
        for (s, &hits) in t.hits.iter().enumerate() {
            prec[s] += hits as f64 / t.tested as f64 / repeats as f64;
            total.hits[s] += hits;
        }
        total.tested += t.tested;
        total.unreachable += t.unreachable;
    }
    Ok(EvalReport {
        model: kind,
        top1: prec[0],
        top10: prec[1],
        top50: prec[2],
        tested: total.tested,
        solved_at_1: total.hits[0],
        solved_at_10: total.hits[1],
        solved_at_50: total.hits[2],
        unreachable: total.unreachable,
        seed: cfg.seed,
        split_ratio: cfg.split_ratio,
        repeats,
    })
}
