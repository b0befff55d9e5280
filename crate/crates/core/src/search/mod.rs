//! Beam search over rule applications, the exhaustive oracle, and exact
//! program probabilities.

mod antipattern;

pub use antipattern::{anti_pattern_check, AntiPattern};

use std::cmp::Ordering;

use rayon::prelude::*;
use thiserror::Error;

use crate::ast::{AnnotatedAst, Application, Focus, LeftmostPolicy, NodePolicy, ParseTree};
use crate::constraints::{PruneCounts, Pruner, PushOutcome, SolverState};
use crate::grammar::{GroupKey, RuleId, RuleSet};
use crate::models::{training_steps, Context, ProbabilityModel, Query, ReplayError};

/// Leftmost pending mark, upward first.
pub fn policy_leftmost(ast: &AnnotatedAst) -> Option<Focus> {
    LeftmostPolicy.select(ast)
}

/// Turns a complete tree into program text.
pub trait Renderer: Sync {
    fn render(&self, ast: &AnnotatedAst) -> Option<String>;
}

/// Terminal texts joined by single spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpacedRenderer;

impl Renderer for SpacedRenderer {
    fn render(&self, ast: &AnnotatedAst) -> Option<String> {
        ast.render().ok()
    }
}

/// Everything a search needs besides its tuning knobs.
#[derive(Clone, Copy)]
pub struct SearchProblem<'a> {
    pub rules: &'a RuleSet,
    pub ctx: &'a Context,
    pub model: &'a dyn ProbabilityModel,
    pub policy: &'a dyn NodePolicy,
    pub renderer: &'a dyn Renderer,
}

impl<'a> SearchProblem<'a> {
    pub fn new(rules: &'a RuleSet, ctx: &'a Context, model: &'a dyn ProbabilityModel) -> Self {
        SearchProblem {
            rules,
            ctx,
            model,
            policy: &LeftmostPolicy,
            renderer: &SpacedRenderer,
        }
    }
}

/// Beam widths per step index; the last entry repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthSchedule(pub Vec<usize>);

impl WidthSchedule {
    pub fn uniform(w: usize) -> Self {
        WidthSchedule(vec![w])
    }

    /// Effectively unbounded.
    pub fn saturating() -> Self {
        WidthSchedule(vec![usize::MAX])
    }

    pub fn at(&self, step: usize) -> usize {
        self.0.get(step).or(self.0.last()).copied().unwrap_or(1).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub widths: WidthSchedule,
    /// Best rules kept per state before the global cut; `None` uses the
    /// step's width.
    pub per_state: Option<usize>,
    pub limit: usize,
    pub k: usize,
    pub filters: Vec<AntiPattern>,
    /// Maximum number of state expansions.
    pub step_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            widths: WidthSchedule::uniform(5),
            per_state: None,
            limit: 30,
            k: 10,
            filters: Vec::new(),
            step_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub ast: AnnotatedAst,
    pub log_prob: f64,
    pub probability: f64,
    pub rendered: String,
    pub applications: Vec<Application>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneReport {
    pub constraint_pruned: usize,
    pub size_pruned: usize,
    pub inapplicable: usize,
    pub zero_probability: usize,
    pub anti_pattern_pruned: usize,
    pub beam_truncated: usize,
    pub expansions: usize,
    pub capped: bool,
}

impl PruneReport {
    fn add(&mut self, c: PruneCounts) {
        self.constraint_pruned += c.constraint;
        self.size_pruned += c.size;
        self.inapplicable += c.inapplicable;
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchOutcome {
    pub candidates: Vec<Candidate>,
    pub report: PruneReport,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search space exceeds the cap of {0} states")]
    Overflow(usize),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

#[derive(Clone)]
struct State {
    ast: AnnotatedAst,
    log_prob: f64,
    solver: SolverState,
    steps: Vec<Application>,
    key: String,
}

fn rule_trail(a: &[Application]) -> impl Iterator<Item = RuleId> + '_ {
    a.iter().map(|x| x.rule)
}

/// Higher probability first, then smaller key, then smaller rule ids.
fn rank(a: (f64, &str, &[Application]), b: (f64, &str, &[Application])) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.cmp(b.1))
        .then_with(|| rule_trail(a.2).cmp(rule_trail(b.2)))
}

fn by_rank(a: &State, b: &State) -> Ordering {
    rank((a.log_prob, &a.key, &a.steps), (b.log_prob, &b.key, &b.steps))
}

fn group_of(ast: &AnnotatedAst, focus: Focus) -> GroupKey {
    match focus {
        Focus::Create => GroupKey::Creation,
        Focus::Node(id, dir) => GroupKey::Pattern(ast.node(id).symbol.clone(), dir),
    }
}

/// Scored successors of one state, in rank order.
fn expand(p: &SearchProblem<'_>, pruner: &Pruner, s: &State) -> (Vec<State>, PruneCounts, usize) {
    let Some(focus) = p.policy.select(&s.ast) else {
        return (Vec::new(), PruneCounts::default(), 0);
    };
    let group = group_of(&s.ast, focus);
    let mut solver = s.solver.clone();
    let (steps, counts) =
        pruner.feasible_rules(p.rules, &s.ast, focus, p.rules.group(&group), &mut solver);
    if steps.is_empty() {
        return (Vec::new(), counts, 0);
    }
    let ids: Vec<RuleId> = steps.iter().map(|x| x.rule).collect();
    let probs = p.model.predict(&Query {
        ctx: p.ctx,
        rules: p.rules,
        ast: &s.ast,
        focus,
        candidates: &ids,
    });
    let mut zero = 0;
    let mut out = Vec::with_capacity(steps.len());
    let node = match focus {
        Focus::Create => None,
        Focus::Node(id, _) => Some(id),
    };
    for (st, pr) in steps.into_iter().zip(probs) {
        if pr <= 0.0 || pr.is_nan() {
            zero += 1;
            continue;
        }
        let mut solver = s.solver.clone();
        if solver.push(&st.constraints) == PushOutcome::Unsat {
            continue;
        }
        solver.commit();
        let mut trail = s.steps.clone();
        trail.push(Application { node, rule: st.rule });
        out.push(State {
            key: st.ast.to_sexpr(),
            ast: st.ast,
            log_prob: s.log_prob + pr.ln(),
            solver,
            steps: trail,
        });
    }
    out.sort_by(by_rank);
    (out, counts, zero)
}

fn finish(p: &SearchProblem<'_>, s: State, filters: &[AntiPattern]) -> Option<Candidate> {
    let rendered = p.renderer.render(&s.ast)?;
    if !anti_pattern_check(&rendered, filters) {
        return None;
    }
    Some(Candidate {
        probability: s.log_prob.exp(),
        log_prob: s.log_prob,
        rendered,
        ast: s.ast,
        applications: s.steps,
    })
}

fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| {
        rank(
            (a.log_prob, &a.rendered, &a.applications),
            (b.log_prob, &b.rendered, &b.applications),
        )
    });
}

fn initial() -> State {
    let ast = AnnotatedAst::new();
    State {
        key: ast.to_sexpr(),
        ast,
        log_prob: 0.0,
        solver: SolverState::new(),
        steps: Vec::new(),
    }
}

/// Width-bounded best-first search. Completed trees leave the beam and
/// compete only in the final ranking.
pub fn beam_search(p: &SearchProblem<'_>, cfg: &SearchConfig) -> SearchOutcome {
    let pruner = Pruner::new(p.rules, p.ctx, cfg.limit);
    let mut report = PruneReport::default();
    let mut finished = Vec::new();
    let mut beam = vec![initial()];
    let mut step = 0;
    while !beam.is_empty() {
        if report.expansions + beam.len() > cfg.step_cap {
            report.capped = true;
            break;
        }
        report.expansions += beam.len();
        let width = cfg.widths.at(step);
        let per_state = cfg.per_state.unwrap_or(width);
        let expanded: Vec<_> = beam.par_iter().map(|s| expand(p, &pruner, s)).collect();
        let mut pool = Vec::new();
        for (mut children, counts, zero) in expanded {
            report.add(counts);
            report.zero_probability += zero;
            if children.len() > per_state {
                report.beam_truncated += children.len() - per_state;
                children.truncate(per_state);
            }
            pool.extend(children);
        }
        pool.sort_by(by_rank);
        if pool.len() > width {
            report.beam_truncated += pool.len() - width;
            pool.truncate(width);
        }
        beam = Vec::new();
        for s in pool {
            if s.ast.is_complete() {
                match finish(p, s, &cfg.filters) {
                    Some(c) => finished.push(c),
                    None => report.anti_pattern_pruned += 1,
                }
            } else {
                beam.push(s);
            }
        }
        step += 1;
    }
    sort_candidates(&mut finished);
    finished.truncate(cfg.k);
    SearchOutcome {
        candidates: finished,
        report,
    }
}

/// Scores every complete program within `limit` and returns the best `k`.
pub fn exhaustive_search(
    p: &SearchProblem<'_>,
    limit: usize,
    k: usize,
    filters: &[AntiPattern],
    cap: usize,
) -> Result<Vec<Candidate>, SearchError> {
    let pruner = Pruner::new(p.rules, p.ctx, limit);
    let mut stack = vec![initial()];
    let mut visited = 0usize;
    let mut done = Vec::new();
    while let Some(s) = stack.pop() {
        visited += 1;
        if visited > cap {
            return Err(SearchError::Overflow(cap));
        }
        if s.ast.is_complete() {
            done.extend(finish(p, s, filters));
            continue;
        }
        let (children, _, _) = expand(p, &pruner, &s);
        stack.extend(children.into_iter().rev());
    }
    sort_candidates(&mut done);
    done.truncate(k);
    Ok(done)
}

/// Natural log of the product of the model's probabilities along the
/// derivation of `tree` chosen by the problem's policy.
pub fn program_log_probability(
    p: &SearchProblem<'_>,
    tree: &ParseTree,
    limit: usize,
) -> Result<f64, SearchError> {
    let pruner = Pruner::new(p.rules, p.ctx, limit);
    let steps = training_steps(tree, p.rules, p.policy, &pruner)?;
    let mut total = 0.0;
    for st in &steps {
        let at = st.feasible.iter().position(|&r| r == st.chosen).expect("chosen is feasible");
        let probs = p.model.predict(&Query {
            ctx: p.ctx,
            rules: p.rules,
            ast: &st.ast,
            focus: st.focus,
            candidates: &st.feasible,
        });
        total += probs[at].ln();
    }
    Ok(total)
}

pub fn program_probability(
    p: &SearchProblem<'_>,
    tree: &ParseTree,
    limit: usize,
) -> Result<f64, SearchError> {
    program_log_probability(p, tree, limit).map(f64::exp)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::constraints::tests::{hours_ctx, td_rules, typed_grammar};
    use crate::models::{TableModel, NO_PARENT};

    /// The stub scores from the running example.
    pub(crate) fn stub_model() -> TableModel {
        TableModel::default()
            .with(NO_PARENT, "root", 1.0)
            .with("root", "td0", 0.3)
            .with("root", "td1", 0.6)
            .with("td0", "td3", 0.8)
            .with("td0", "td4", 0.1)
            .with("td0", "td2", 0.05)
            .with("td1", "td3", 0.1)
            .with("td1", "td4", 0.2)
            .with("td1", "td2", 0.05)
    }

    fn run(widths: usize, k: usize) -> Vec<(String, f64)> {
        let g = typed_grammar();
        let rs = td_rules(&g);
        let ctx = hours_ctx();
        let model = stub_model();
        let p = SearchProblem::new(&rs, &ctx, &model);
        let cfg = SearchConfig {
            widths: WidthSchedule::uniform(widths),
            k,
            ..Default::default()
        };
        beam_search(&p, &cfg)
            .candidates
            .into_iter()
            .map(|c| (c.rendered, c.probability))
            .collect()
    }

    #[test]
    fn width_two_finds_hours() {
        let got = run(2, 2);
        assert_eq!(got[0].0, "hours > 12");
        assert!((got[0].1 - 0.24).abs() < 1e-12);
        assert_eq!(got[1].0, "value > 0");
        assert!((got[1].1 - 0.12).abs() < 1e-12);
    }

    #[test]
    fn greedy_is_trapped() {
        let got = run(1, 1);
        assert_eq!(got[0].0, "value > 0");
    }

    #[test]
    fn program_probabilities() {
        let g = typed_grammar();
        let rs = td_rules(&g);
        let ctx = hours_ctx();
        let model = stub_model();
        let p = SearchProblem::new(&rs, &ctx, &model);
        let t = ParseTree::parse(r#"(E (E "value") "> 0")"#).unwrap();
        assert!((program_probability(&p, &t, 30).unwrap() - 0.12).abs() < 1e-12);
        let t = ParseTree::parse(r#"(E (E "hours") "> 12")"#).unwrap();
        assert!((program_probability(&p, &t, 30).unwrap() - 0.24).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_agrees_and_caps() {
        let g = typed_grammar();
        let rs = td_rules(&g);
        let ctx = hours_ctx();
        let model = stub_model();
        let p = SearchProblem::new(&rs, &ctx, &model);
        let top = exhaustive_search(&p, 5, 1, &[], 1_000_000).unwrap();
        assert_eq!(top[0].rendered, "hours > 12");
        assert!((top[0].probability - 0.24).abs() < 1e-12);
        assert!(matches!(
            exhaustive_search(&p, 30, 1, &[], 10),
            Err(SearchError::Overflow(10))
        ));
    }

    #[test]
    fn single_program_grammar() {
        let g = crate::grammar::load_grammar("S -> \"true\" :: Boolean").unwrap();
        let rs = td_rules(&g);
        let ctx = Context::simple(vec![], "Boolean");
        let model = crate::models::UniformModel;
        let p = SearchProblem::new(&rs, &ctx, &model);
        let t = ParseTree::parse(r#"(S "true")"#).unwrap();
        assert_eq!(program_probability(&p, &t, 30).unwrap(), 1.0);
        let out = beam_search(&p, &SearchConfig::default());
        assert_eq!(out.candidates.len(), 1);
        assert_eq!(out.candidates[0].probability, 1.0);
    }

    #[test]
    fn width_schedule_repeats_last() {
        let w = WidthSchedule(vec![5, 200]);
        assert_eq!((w.at(0), w.at(1), w.at(7)), (5, 200, 200));
    }
}
