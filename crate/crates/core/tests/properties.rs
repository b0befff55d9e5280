use proptest::prelude::*;

use progest_core::ast::{ParseTree, ShuffledPolicy};
use progest_core::constraints::{compute_size_bounds, Size};
use progest_core::grammar::{derive_creation_rules, derive_top_down_rules, CreationMode};
use progest_core::models::HashModel;
use progest_core::search::{program_log_probability, WidthSchedule};
use progest_core::*;

const GRAMMARS: &[&str] = &[
    r#"E -> E "> 12" | E "> 0" | E "+" E | "hours" | "value""#,
    "S -> \"a\" S \"b\" | \"c\" | S S",
    "S -> A \"=\" A | \"0\"\nA -> \"1\" | A \"*\" A | \"(\" S \")\"",
    "E -> E:Int \"> 0\" :: Boolean | E \"+\" E :: $1 | \"!\" E:Boolean :: Boolean | \"a\" :: $1 | \"b\" :: $1",
];

fn ctx() -> Context {
    Context::simple(
        vec![VariableInfo::new("a", "Int"), VariableInfo::new("b", "Boolean")],
        "Boolean",
    )
}

fn rules(text: &str) -> (Grammar, RuleSet) {
    let g = load_grammar(text).unwrap();
    let rs = RuleSet::union([&derive_creation_rules(&g, &[CreationMode::Root]), &derive_top_down_rules(&g)]);
    (g, rs)
}

fn everything(p: &SearchProblem<'_>, limit: usize) -> Vec<Candidate> {
    exhaustive_search(p, limit, usize::MAX, &[], 1_000_000).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_form_a_subdistribution(g in 0..GRAMMARS.len(), seed: u64, limit in 4usize..9) {
        let (_, rs) = rules(GRAMMARS[g]);
        let (c, model) = (ctx(), HashModel { seed });
        let all = everything(&SearchProblem::new(&rs, &c, &model), limit);
        let total: f64 = all.iter().map(|c| c.probability).sum();
        prop_assert!(total <= 1.0 + 1e-9, "total {total}");
        for w in all.windows(2) {
            prop_assert!(w[0].log_prob >= w[1].log_prob);
        }
    }

    #[test]
    fn replay_matches_search_score(g in 0..GRAMMARS.len(), seed: u64, order: u64) {
        let (_, rs) = rules(GRAMMARS[g]);
        let (c, model) = (ctx(), HashModel { seed });
        let p = SearchProblem::new(&rs, &c, &model);
        let shuffled = ShuffledPolicy { seed: order };
        let q = SearchProblem { policy: &shuffled, ..p };
        for cand in everything(&p, 7).iter().take(20) {
            let tree = cand.ast.to_parse_tree().unwrap();
            let a = program_log_probability(&p, &tree, 7).unwrap();
            let b = program_log_probability(&q, &tree, 7).unwrap();
            prop_assert!((a - cand.log_prob).abs() <= 1e-9);
            prop_assert!((a - b).abs() <= 1e-9, "{tree}: {a} vs {b}");
        }
    }

    #[test]
    fn saturated_beam_is_exhaustive(g in 0..GRAMMARS.len(), seed: u64, k in 1usize..15) {
        let (_, rs) = rules(GRAMMARS[g]);
        let (c, model) = (ctx(), HashModel { seed });
        let p = SearchProblem::new(&rs, &c, &model);
        let cfg = SearchConfig { widths: WidthSchedule::saturating(), limit: 7, k, step_cap: 1_000_000, ..Default::default() };
        let beam = beam_search(&p, &cfg).candidates;
        let top = exhaustive_search(&p, 7, k, &[], 1_000_000).unwrap();
        prop_assert_eq!(beam, top);
    }

    #[test]
    fn narrow_beams_return_a_subset(g in 0..GRAMMARS.len(), seed: u64, w in 1usize..4) {
        let (_, rs) = rules(GRAMMARS[g]);
        let (c, model) = (ctx(), HashModel { seed });
        let p = SearchProblem::new(&rs, &c, &model);
        let cfg = SearchConfig { widths: WidthSchedule::uniform(w), limit: 7, k: 50, ..Default::default() };
        let all = everything(&p, 7);
        for cand in beam_search(&p, &cfg).candidates {
            prop_assert!(all.iter().any(|a| a.ast == cand.ast && a.log_prob == cand.log_prob));
        }
    }

    #[test]
    fn programs_respect_size_bounds(g in 0..GRAMMARS.len(), seed: u64, limit in 3usize..9) {
        let (grammar, rs) = rules(GRAMMARS[g]);
        let (c, model) = (ctx(), HashModel { seed });
        let least = compute_size_bounds(&rs).of(grammar.root(), Annotation::D);
        for cand in everything(&SearchProblem::new(&rs, &c, &model), limit) {
            let tree = cand.ast.to_parse_tree().unwrap();
            prop_assert!(tree.size() <= limit);
            prop_assert!(Size::Finite(tree.size()) >= least);
            prop_assert_eq!(ParseTree::parse(&tree.to_string()).unwrap(), tree);
        }
    }
}
