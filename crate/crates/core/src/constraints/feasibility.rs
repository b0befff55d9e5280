use super::{
    compute_size_bounds, constraints_of_application, context_constraints_for, PushOutcome, Size,
    SizeBounds, SolverState, TypeConstraint, TypedBounds,
};
use crate::ast::{AnnotatedAst, Focus, NodeId};
use crate::grammar::{RuleId, RuleSet};
use crate::models::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneReason {
    /// The rule's pattern does not match the focused node.
    Inapplicable,
    /// No well-typed completion exists.
    Constraint,
    /// Every completion exceeds the size limit.
    Size,
}

/// A surviving application, ready to be committed to a beam state.
#[derive(Debug, Clone)]
pub struct FeasibleStep {
    pub rule: RuleId,
    pub ast: AnnotatedAst,
    pub positions: Vec<NodeId>,
    pub constraints: Vec<TypeConstraint>,
}

/// Decides which rules can still lead to a well-typed complete tree within
/// the size limit.
#[derive(Debug, Clone)]
pub struct Pruner {
    untyped: SizeBounds,
    typed: TypedBounds,
    limit: usize,
}

impl Pruner {
    pub fn new(rs: &RuleSet, ctx: &Context, limit: usize) -> Self {
        Pruner {
            untyped: compute_size_bounds(rs),
            typed: TypedBounds::new(rs, ctx),
            limit,
        }
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn size_bounds(&self) -> &SizeBounds {
        &self.untyped
    }

    pub fn typed_bounds(&self) -> &TypedBounds {
        &self.typed
    }

    pub fn context(&self) -> &Context {
        self.typed.context()
    }

    /// Constraints a freshly created or extended tree must satisfy.
    pub fn step_constraints(
        &self,
        rs: &RuleSet,
        rule: RuleId,
        ast: &AnnotatedAst,
        positions: &[NodeId],
    ) -> Result<Vec<TypeConstraint>, PruneReason> {
        let mut cs = constraints_of_application(rs.rule(rule), positions)
            .map_err(|_| PruneReason::Inapplicable)?;
        cs.extend(
            context_constraints_for(self.context(), ast, positions)
                .map_err(|_| PruneReason::Constraint)?,
        );
        Ok(cs)
    }

    /// Tries `rule` at `target`; `solver` is left as it was.
    pub fn check(
        &self,
        rs: &RuleSet,
        ast: &AnnotatedAst,
        target: Option<NodeId>,
        rule: RuleId,
        solver: &mut SolverState,
    ) -> Result<FeasibleStep, PruneReason> {
        let applied = ast
            .apply_rule(target, rs.rule(rule))
            .map_err(|_| PruneReason::Inapplicable)?;
        let constraints = self.step_constraints(rs, rule, &applied.ast, &applied.positions)?;
        if !self.untyped.tree(&applied.ast).within(self.limit) {
            // an untyped overrun can still hide a type clash; report the clash first
            let sat = solver.push(&constraints);
            if sat == PushOutcome::Sat {
                solver.pop();
            }
            return Err(if sat == PushOutcome::Unsat {
                PruneReason::Constraint
            } else {
                PruneReason::Size
            });
        }
        if solver.push(&constraints) == PushOutcome::Unsat {
            return Err(PruneReason::Constraint);
        }
        let typed = self.typed.tree(&applied.ast, solver);
        solver.pop();
        match typed {
            Size::Infinite => Err(PruneReason::Constraint),
            s if !s.within(self.limit) => Err(PruneReason::Size),
            _ => Ok(FeasibleStep {
                rule,
                ast: applied.ast,
                positions: applied.positions,
                constraints,
            }),
        }
    }

    /// Surviving steps among `candidates` at `focus`, plus prune counts.
    pub fn feasible_rules(
        &self,
        rs: &RuleSet,
        ast: &AnnotatedAst,
        focus: Focus,
        candidates: &[RuleId],
        solver: &mut SolverState,
    ) -> (Vec<FeasibleStep>, PruneCounts) {
        let target = match focus {
            Focus::Create => None,
            Focus::Node(id, _) => Some(id),
        };
        let mut counts = PruneCounts::default();
        let mut out = Vec::new();
        for &r in candidates {
            match self.check(rs, ast, target, r, solver) {
                Ok(step) => out.push(step),
                Err(PruneReason::Constraint) => counts.constraint += 1,
                Err(PruneReason::Size) => counts.size += 1,
                Err(PruneReason::Inapplicable) => counts.inapplicable += 1,
            }
        }
        (out, counts)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneCounts {
    pub constraint: usize,
    pub size: usize,
    pub inapplicable: usize,
}
