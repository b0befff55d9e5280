//! Type-equality constraints, their incremental solver, and size bounds.
//!
//! Every AST node carries a type variable. Rules contribute equalities
//! through their type schemas and the context pins variable leaves and the
//! finished root.

mod bounds;
mod feasibility;
mod solver;

pub use bounds::{compute_size_bounds, Size, SizeBounds, TypedBounds};
pub use feasibility::{FeasibleStep, PruneCounts, PruneReason, Pruner};
pub use solver::{PushOutcome, SolverState};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{AnnotatedAst, NodeId};
use crate::grammar::{Direction, RewritingRule, TypeAtom};
use crate::models::Context;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeName(Arc<str>);

impl TypeName {
    pub fn new(name: &str) -> Self {
        TypeName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for TypeName {
    fn from(s: &str) -> Self {
        TypeName::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeConstraint {
    VarEqVar(NodeId, NodeId),
    VarEqConst(NodeId, TypeName),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("rule {rule} schema references position {position}, replacement has {len}")]
    NoSuchPosition {
        rule: usize,
        position: usize,
        len: usize,
    },
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
}

/// Instantiates a rule's type schema at the node ids its application
/// produced (`positions`, pre-order over the replacement).
pub fn constraints_of_application(
    rule: &RewritingRule,
    positions: &[NodeId],
) -> Result<Vec<TypeConstraint>, ConstraintError> {
    let at = |position: usize| {
        positions
            .get(position)
            .copied()
            .ok_or(ConstraintError::NoSuchPosition {
                rule: rule.id,
                position,
                len: positions.len(),
            })
    };
    rule.schema
        .iter()
        .map(|e| {
            let node = at(e.position)?;
            Ok(match &e.atom {
                TypeAtom::Const(t) => TypeConstraint::VarEqConst(node, t.clone()),
                TypeAtom::Same(other) => TypeConstraint::VarEqVar(node, at(*other)?),
            })
        })
        .collect()
}

const RESERVED: &[&str] = &["null", "true", "false", "this", "super"];

/// Terminal text that names a variable: a bare identifier that is not a
/// literal keyword.
pub fn is_variable_reference(text: &str) -> bool {
    let mut chars = text.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_alphabetic() || first == '_' || first == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
        && !RESERVED.contains(&text)
}

fn leaf_constraint(
    ctx: &Context,
    ast: &AnnotatedAst,
    id: NodeId,
) -> Result<Option<TypeConstraint>, ConstraintError> {
    let node = ast.node(id);
    if !node.symbol.is_terminal() || !is_variable_reference(node.symbol.name()) {
        return Ok(None);
    }
    let var = ctx
        .variable(node.symbol.name())
        .ok_or_else(|| ConstraintError::UndeclaredVariable(node.symbol.name().to_string()))?;
    Ok(Some(TypeConstraint::VarEqConst(id, var.type_name.clone())))
}

fn root_constraint(ctx: &Context, ast: &AnnotatedAst) -> Option<TypeConstraint> {
    let root = ast.root()?;
    (!ast.node(root).annotation.has(Direction::Up))
        .then(|| TypeConstraint::VarEqConst(root, ctx.result_type.clone()))
}

/// Declared types of variable leaves, and the expected result type of the
/// root once it can no longer grow upward.
pub fn constraints_of_context(
    ctx: &Context,
    ast: &AnnotatedAst,
) -> Result<Vec<TypeConstraint>, ConstraintError> {
    let mut out = Vec::new();
    for id in ast.preorder() {
        out.extend(leaf_constraint(ctx, ast, id)?);
    }
    out.extend(root_constraint(ctx, ast));
    Ok(out)
}

/// Context constraints restricted to `nodes` plus the root.
pub(crate) fn context_constraints_for(
    ctx: &Context,
    ast: &AnnotatedAst,
    nodes: &[NodeId],
) -> Result<Vec<TypeConstraint>, ConstraintError> {
    let mut out = Vec::new();
    for &id in nodes {
        out.extend(leaf_constraint(ctx, ast, id)?);
    }
    out.extend(root_constraint(ctx, ast));
    Ok(out)
}
