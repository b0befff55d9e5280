//! Probabilistic program estimation over rewriting rules: grammars and their
//! rule sets, annotated trees, type constraints, learned rule models, beam
//! search, and a condition-synthesis instantiation.

pub mod ast;
pub mod constraints;
pub mod grammar;
pub mod models;
pub mod search;
pub mod condsynth;

pub use ast::{AnnotatedAst, Annotation, LeftmostPolicy, NodeId, NodePolicy, ParseTree};
pub use constraints::{Pruner, SolverState, TypeName};
pub use grammar::{load_grammar, Grammar, RuleSet};
pub use models::{Context, ProbabilityModel, VariableInfo};
pub use search::{beam_search, exhaustive_search, program_probability, Candidate, SearchConfig, SearchProblem};
