//! Seeded generator for a Java-flavoured condition corpus. Conditions are
//! drawn from per-type patterns whose weights depend on variable names,
//! and the variable a condition tests is made salient in its context
//! (recent use, short declaration distance, mentions in nearby tokens).

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::CorpusRecord;
use crate::constraints::TypeName;
use crate::models::{ClassInfo, Context, MethodInfo, UsageCounts, VariableInfo};

struct Pool {
    ty: &'static str,
    weight: f64,
    anchor: f64,
    names: &'static [&'static str],
}

const POOLS: &[Pool] = &[
    Pool {
        ty: "int",
        weight: 3.0,
        anchor: 1.0,
        names: &[
            "i", "n", "len", "count", "size", "j", "index", "max", "k", "offset", "pos", "start",
            "end", "total", "limit", "min", "width", "height", "depth", "capacity", "idx", "num",
        ],
    },
    Pool {
        ty: "String",
        weight: 2.0,
        anchor: 1.0,
        names: &[
            "name", "key", "s", "text", "value", "str", "prefix", "path", "line", "suffix",
            "message", "label", "id",
        ],
    },
    Pool {
        ty: "List",
        weight: 1.5,
        anchor: 1.2,
        names: &[
            "list", "items", "children", "elements", "values", "entries", "nodes", "results",
            "queue", "args",
        ],
    },
    Pool {
        ty: "int[]",
        weight: 0.8,
        anchor: 0.8,
        names: &["arr", "data", "counts", "buffer", "scores", "array"],
    },
    Pool {
        ty: "Object[]",
        weight: 0.6,
        anchor: 0.8,
        names: &["objs", "table", "elems", "slots", "cells", "row"],
    },
    Pool {
        ty: "boolean",
        weight: 1.2,
        anchor: 1.5,
        names: &[
            "flag", "done", "found", "valid", "enabled", "changed", "ok", "first", "empty", "ready",
        ],
    },
    Pool {
        ty: "Object",
        weight: 1.5,
        anchor: 1.2,
        names: &[
            "obj", "node", "parent", "next", "current", "target", "other", "entry", "root", "owner",
        ],
    },
    Pool {
        ty: "Map",
        weight: 0.6,
        anchor: 0.8,
        names: &["map", "cache", "lookup", "props", "env", "registry"],
    },
];

const INDEX_LIKE: &[&str] = &["i", "j", "k", "index", "idx", "pos", "start", "offset"];
const SIZE_LIKE: &[&str] = &["n", "len", "size", "count", "total", "capacity", "limit", "max", "num"];

#[derive(Clone, Copy)]
enum Bias {
    None,
    Index(f64),
    Size(f64),
}

struct Pattern {
    anchor: &'static str,
    other: Option<&'static str>,
    text: &'static str,
    weight: f64,
    bias: Bias,
}

const fn p(anchor: &'static str, other: Option<&'static str>, text: &'static str, weight: f64, bias: Bias) -> Pattern {
    Pattern {
        anchor,
        other,
        text,
        weight,
        bias,
    }
}

const INT: Option<&str> = Some("int");

const PATTERNS: &[Pattern] = &[
    p("int", None, "$0 > 0", 2.0, Bias::Size(3.0)),
    p("int", None, "$0 == 0", 1.5, Bias::Size(2.0)),
    p("int", None, "$0 < 0", 0.7, Bias::None),
    p("int", None, "$0 >= 0", 0.7, Bias::Index(2.0)),
    p("int", INT, "$0 < $1", 2.0, Bias::Index(3.0)),
    p("int", INT, "$0 >= $1", 1.0, Bias::Index(2.0)),
    p("int", INT, "$0 <= $1", 0.6, Bias::None),
    p("int", INT, "$0 == $1", 0.6, Bias::None),
    p("int", None, "$0 > 1", 0.4, Bias::Size(2.0)),
    p("int", None, "$0 % 2 == 0", 0.3, Bias::None),
    p("int", INT, "$0 + 1 < $1", 0.3, Bias::Index(2.0)),
    p("int", Some("List"), "$0 < $1.size()", 1.2, Bias::Index(2.0)),
    p("int", Some("int[]"), "$0 < $1.length", 1.0, Bias::Index(2.0)),
    p("int", Some("Object[]"), "$0 >= $1.length", 0.5, Bias::Index(2.0)),
    p("String", None, "$0 == null", 2.0, Bias::None),
    p("String", None, "$0.isEmpty()", 2.0, Bias::None),
    p("String", None, "$0.length() == 0", 0.8, Bias::None),
    p("String", Some("String"), "$0.equals($1)", 1.0, Bias::None),
    p("String", Some("String"), "$0.startsWith($1)", 0.5, Bias::None),
    p("String", INT, "$0.length() > $1", 0.4, Bias::None),
    p("List", None, "$0.isEmpty()", 3.0, Bias::None),
    p("List", None, "$0 == null", 1.5, Bias::None),
    p("List", None, "$0.size() > 0", 0.8, Bias::None),
    p("List", Some("Object"), "$0.contains($1)", 0.8, Bias::None),
    p("List", INT, "$0.size() == $1", 0.4, Bias::None),
    p("int[]", None, "$0 == null", 1.5, Bias::None),
    p("int[]", None, "$0.length == 0", 1.5, Bias::None),
    p("int[]", INT, "$0[$1] > 0", 1.0, Bias::None),
    p("int[]", INT, "$0[$1] == 0", 0.7, Bias::None),
    p("Object[]", None, "$0 == null", 1.0, Bias::None),
    p("Object[]", None, "$0.length == 0", 1.0, Bias::None),
    p("Object[]", INT, "$0[$1] == null", 2.0, Bias::None),
    p("boolean", None, "$0", 4.0, Bias::None),
    p("boolean", None, "$0 == false", 0.3, Bias::None),
    p("Object", None, "$0 == null", 4.0, Bias::None),
    p("Object", Some("Object"), "$0 == $1", 1.0, Bias::None),
    p("Object", Some("Object"), "$0.equals($1)", 1.0, Bias::None),
    p("Map", None, "$0.isEmpty()", 1.0, Bias::None),
    p("Map", Some("String"), "$0.containsKey($1)", 2.0, Bias::None),
    p("Map", Some("String"), "$0.get($1) == null", 1.5, Bias::None),
    p("Map", None, "$0 == null", 1.0, Bias::None),
];

const CLASSES: &[&str] = &["Parser", "Buffer", "TreeWalker", "Registry", "Matrix", "Scheduler"];
const METHODS: &[&str] = &["process", "update", "find", "validate", "apply", "visit", "load", "merge"];
const FILLER: &[&str] = &["{", "}", ";", "=", "return", "int", "for", "(", ")", "+", "++", "new", "."];

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T], weight: impl Fn(&T) -> f64) -> Option<&'a T> {
    let w: Vec<f64> = items.iter().map(weight).collect();
    let dist = WeightedIndex::new(&w).ok()?;
    Some(&items[dist.sample(rng)])
}

fn name_rank_weight(pool: &Pool, name: &str) -> f64 {
    let rank = pool.names.iter().position(|n| *n == name).unwrap_or(0);
    1.0 / (1.0 + 0.15 * rank as f64)
}

fn pattern_weight(pat: &Pattern, anchor: &str) -> f64 {
    pat.weight
        * match pat.bias {
            Bias::Index(f) if INDEX_LIKE.contains(&anchor) => f,
            Bias::Size(f) if SIZE_LIKE.contains(&anchor) => f,
            _ => 1.0,
        }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn variables(rng: &mut ChaCha8Rng) -> Vec<(usize, String)> {
    let n = rng.gen_range(3..=8);
    let mut out: Vec<(usize, String)> = Vec::new();
    while out.len() < n {
        let pool = WeightedIndex::new(POOLS.iter().map(|p| p.weight)).expect("positive weights");
        let pi = pool.sample(rng);
        let name = POOLS[pi]
            .names
            .choose_weighted(rng, |n| name_rank_weight(&POOLS[pi], n))
            .expect("names");
        if !out.iter().any(|(_, m)| m == name) {
            out.push((pi, name.to_string()));
        }
    }
    out
}

/// One atomic condition over `vars`, with the index of its anchor.
fn condition(rng: &mut ChaCha8Rng, vars: &[(usize, String)]) -> Option<(usize, String)> {
    let (ai, (pi, anchor)) = pick(rng, &vars.iter().enumerate().collect::<Vec<_>>(), |(_, (pi, n))| {
        POOLS[*pi].anchor * name_rank_weight(&POOLS[*pi], n)
    })
    .copied()?;
    let ty = POOLS[*pi].ty;
    let usable: Vec<&Pattern> = PATTERNS
        .iter()
        .filter(|p| p.anchor == ty)
        .filter(|p| {
            p.other.is_none_or(|o| vars.iter().any(|(qi, m)| POOLS[*qi].ty == o && m != anchor))
        })
        .collect();
    let pat = pick(rng, &usable, |p| pattern_weight(p, anchor))?;
    let mut text = pat.text.replace("$0", anchor);
    if let Some(o) = pat.other {
        let others: Vec<&String> = vars
            .iter()
            .filter(|(qi, m)| POOLS[*qi].ty == o && m != anchor)
            .map(|(_, m)| m)
            .collect();
        let other = pick(rng, &others, |m| {
            if SIZE_LIKE.contains(&m.as_str()) {
                3.0
            } else {
                1.0
            }
        })?;
        text = text.replace("$1", other);
    }
    Some((ai, text))
}

fn context(rng: &mut ChaCha8Rng, vars: &[(usize, String)], anchors: &[usize]) -> Context {
    let mut infos = Vec::new();
    for (i, (pi, name)) in vars.iter().enumerate() {
        let hot = anchors.contains(&i);
        let mut v = VariableInfo::new(name, POOLS[*pi].ty);
        v.is_loop_index = POOLS[*pi].ty == "int" && INDEX_LIKE.contains(&name.as_str()) && rng.gen_bool(0.5);
        v.is_final = rng.gen_bool(0.2);
        v.decl_distance = if hot { rng.gen_range(1..6) } else { rng.gen_range(1..25) };
        v.usage_counts = UsageCounts {
            in_method: if hot { rng.gen_range(3..9) } else { rng.gen_range(0..5) },
            in_class: rng.gen_range(0..12),
            in_project: rng.gen_range(0..40),
        };
        if rng.gen_bool(0.3) {
            v.init_value = Some(if POOLS[*pi].ty == "int" { "0".into() } else { "null".into() });
        }
        v.def_sites = (0..rng.gen_range(0..3)).map(|k| format!("L{}", 10 + k * 7)).collect();
        infos.push(v);
    }
    let anchor = &vars[anchors[0]].1;
    let mut before: Vec<String> = (0..rng.gen_range(3..8))
        .map(|_| FILLER.choose(rng).expect("filler").to_string())
        .collect();
    if rng.gen_bool(0.6) {
        let at = rng.gen_range(0..=before.len());
        before.insert(at, anchor.clone());
    }
    before.extend([if rng.gen_bool(0.8) { "if" } else { "while" }.to_string(), "(".into()]);
    let after: Vec<String> = [")", "{", "return"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..rng.gen_range(0..5)).map(|_| FILLER.choose(rng).expect("filler").to_string()))
        .collect();
    let params: Vec<String> = vars.iter().take(rng.gen_range(0..=3.min(vars.len()))).map(|v| v.1.clone()).collect();
    let fields: Vec<String> = vars.iter().skip(params.len()).filter(|_| rng.gen_bool(0.3)).map(|v| v.1.clone()).collect();
    let method = if rng.gen_bool(0.3) {
        format!("check{}", capitalize(anchor))
    } else {
        METHODS.choose(rng).expect("methods").to_string()
    };
    Context {
        variables: infos,
        result_type: TypeName::new("Boolean"),
        class_info: ClassInfo {
            package: "org.example".into(),
            class_name: CLASSES.choose(rng).expect("classes").to_string(),
            field_types: fields.iter().map(|_| "Object".to_string()).collect(),
            field_names: fields,
            inheritance_depth: rng.gen_range(0..4),
            class_length: rng.gen_range(40..900),
            method_count: rng.gen_range(2..40),
        },
        method_info: MethodInfo {
            name: method,
            return_type: TypeName::new(["void", "boolean", "int", "String"].choose(rng).expect("types")),
            modifiers: if rng.gen_bool(0.2) {
                vec!["private".into(), "static".into()]
            } else {
                vec!["public".into()]
            },
            body_lines: rng.gen_range(3..80),
            parameters: params,
        },
        tokens_before: before,
        tokens_after: after,
    }
}

/// `n` records; about one in five joins two operands with `&&`/`||` or
/// negates its condition.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let vars = variables(&mut rng);
        let Some((a, first)) = condition(&mut rng, &vars) else {
            continue;
        };
        let roll: f64 = rng.gen();
        let (cond, anchors) = if roll < 0.12 {
            match condition(&mut rng, &vars) {
                Some((b, second)) => {
                    let op = if rng.gen_bool(0.7) { "&&" } else { "||" };
                    (format!("{first} {op} {second}"), vec![a, b])
                }
                None => (first, vec![a]),
            }
        } else if roll < 0.2 {
            if first.contains(' ') {
                (format!("!({first})"), vec![a])
            } else {
                (format!("!{first}"), vec![a])
            }
        } else if roll < 0.205 {
            ("true".to_string(), vec![a])
        } else {
            (first, vec![a])
        };
        let ctx = context(&mut rng, &vars, &anchors);
        out.push(CorpusRecord {
            id: format!("c{:04}", out.len() + 1),
            context: ctx,
            condition: cond,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condsynth::corpus::{ingest_str, to_jsonl};

    #[test]
    fn deterministic_and_valid() {
        let a = generate_corpus(200, 7);
        assert_eq!(a, generate_corpus(200, 7));
        assert_ne!(a, generate_corpus(200, 8));
        let recs = ingest_str(&to_jsonl(&a)).unwrap();
        assert!(recs.len() > 200);
        assert!(recs.iter().any(|r| r.id.ends_with("#2")));
    }
}
