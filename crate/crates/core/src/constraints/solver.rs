use super::{TypeConstraint, TypeName};
use crate::ast::NodeId;

/// Union-find over node type variables with an optional type per class.
/// Every successful `push` leaves a checkpoint that `pop` rolls back to.
#[derive(Debug, Clone, Default)]
pub struct SolverState {
    parent: Vec<usize>,
    rank: Vec<u8>,
    binding: Vec<Option<TypeName>>,
    trail: Vec<Undo>,
    checkpoints: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Undo {
    Grow(usize),
    Link {
        child: usize,
        root: usize,
        rank: u8,
        binding: Option<TypeName>,
    },
    Bind(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushOutcome {
    Sat,
    Unsat,
}

impl SolverState {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, v: usize) {
        if v >= self.parent.len() {
            self.trail.push(Undo::Grow(self.parent.len()));
            let start = self.parent.len();
            self.parent.extend(start..=v);
            self.rank.resize(v + 1, 0);
            self.binding.resize(v + 1, None);
        }
    }

    fn root_of(&self, mut v: usize) -> usize {
        if v >= self.parent.len() {
            return v;
        }
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    /// Class representative of a node's type variable.
    pub fn class_of(&self, node: NodeId) -> usize {
        self.root_of(node.0)
    }

    pub fn binding(&self, node: NodeId) -> Option<&TypeName> {
        let r = self.root_of(node.0);
        self.binding.get(r).and_then(Option::as_ref)
    }

    pub fn same_class(&self, a: NodeId, b: NodeId) -> bool {
        self.root_of(a.0) == self.root_of(b.0)
    }

    /// Number of open checkpoints.
    pub fn depth(&self) -> usize {
        self.checkpoints.len()
    }

    fn bind(&mut self, v: usize, t: &TypeName) -> bool {
        self.ensure(v);
        let r = self.root_of(v);
        match &self.binding[r] {
            Some(existing) => existing == t,
            None => {
                self.trail.push(Undo::Bind(r));
                self.binding[r] = Some(t.clone());
                true
            }
        }
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        self.ensure(a.max(b));
        let (ra, rb) = (self.root_of(a), self.root_of(b));
        if ra == rb {
            return true;
        }
        if let (Some(x), Some(y)) = (&self.binding[ra], &self.binding[rb]) {
            if x != y {
                return false;
            }
        }
        let (child, root) = if self.rank[ra] < self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.trail.push(Undo::Link {
            child,
            root,
            rank: self.rank[root],
            binding: self.binding[root].clone(),
        });
        self.parent[child] = root;
        if self.rank[child] == self.rank[root] {
            self.rank[root] += 1;
        }
        if self.binding[root].is_none() {
            self.binding[root] = self.binding[child].clone();
        }
        true
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail above mark") {
                Undo::Grow(len) => {
                    self.parent.truncate(len);
                    self.rank.truncate(len);
                    self.binding.truncate(len);
                }
                Undo::Link {
                    child,
                    root,
                    rank,
                    binding,
                } => {
                    self.parent[child] = child;
                    self.rank[root] = rank;
                    self.binding[root] = binding;
                }
                Undo::Bind(r) => self.binding[r] = None,
            }
        }
    }

    /// Adds `constraints` atomically. On `Unsat` nothing changes.
    pub fn push(&mut self, constraints: &[TypeConstraint]) -> PushOutcome {
        let mark = self.trail.len();
        let ok = constraints.iter().all(|c| match c {
            TypeConstraint::VarEqVar(a, b) => self.union(a.0, b.0),
            TypeConstraint::VarEqConst(a, t) => self.bind(a.0, t),
        });
        if ok {
            self.checkpoints.push(mark);
            PushOutcome::Sat
        } else {
            self.undo_to(mark);
            PushOutcome::Unsat
        }
    }

    /// Rolls back the most recent successful push.
    pub fn pop(&mut self) -> bool {
        match self.checkpoints.pop() {
            Some(mark) => {
                self.undo_to(mark);
                true
            }
            None => false,
        }
    }

    /// Drops checkpoints while keeping their constraints.
    pub fn commit(&mut self) {
        self.checkpoints.clear();
        self.trail.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TypeConstraint::*;

    fn n(i: usize) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn boolean_root_against_int_leaf_is_unsat() {
        let mut s = SolverState::new();
        assert_eq!(s.push(&[VarEqConst(n(1), "Boolean".into())]), PushOutcome::Sat);
        assert_eq!(
            s.push(&[VarEqVar(n(1), n(2)), VarEqConst(n(2), "Int".into())]),
            PushOutcome::Unsat
        );
        assert_eq!(s.depth(), 1);
        assert_eq!(s.binding(n(1)).map(TypeName::as_str), Some("Boolean"));
        assert!(!s.same_class(n(1), n(2)));
    }

    #[test]
    fn equal_vars_share_binding() {
        let mut s = SolverState::new();
        assert_eq!(s.push(&[VarEqVar(n(0), n(1))]), PushOutcome::Sat);
        assert_eq!(s.push(&[VarEqConst(n(1), "Int".into())]), PushOutcome::Sat);
        assert_eq!(s.binding(n(0)).map(TypeName::as_str), Some("Int"));
        assert!(s.pop());
        assert_eq!(s.binding(n(0)), None);
        assert!(s.same_class(n(0), n(1)));
    }

    #[test]
    fn empty_push_is_identity() {
        let mut s = SolverState::new();
        s.push(&[VarEqConst(n(3), "Int".into())]);
        let before = format!("{:?}", (s.binding(n(3)), s.class_of(n(3))));
        assert_eq!(s.push(&[]), PushOutcome::Sat);
        assert_eq!(format!("{:?}", (s.binding(n(3)), s.class_of(n(3)))), before);
    }

    fn constraint() -> impl Strategy<Value = TypeConstraint> {
        prop_oneof![
            (0usize..8, 0usize..8).prop_map(|(a, b)| VarEqVar(n(a), n(b))),
            (0usize..8, 0usize..3)
                .prop_map(|(a, t)| VarEqConst(n(a), ["A", "B", "C"][t].into())),
        ]
    }

    fn answers(s: &SolverState, probes: &[Vec<TypeConstraint>]) -> Vec<PushOutcome> {
        probes.iter().map(|p| s.clone().push(p)).collect()
    }

    proptest! {
        #[test]
        fn push_pop_restores_observations(
            base in prop::collection::vec(prop::collection::vec(constraint(), 0..4), 0..4),
            extra in prop::collection::vec(constraint(), 0..6),
            probes in prop::collection::vec(prop::collection::vec(constraint(), 1..4), 1..6),
        ) {
            let mut s = SolverState::new();
            for b in &base {
                s.push(b);
            }
            let before = answers(&s, &probes);
            if s.push(&extra) == PushOutcome::Sat {
                s.pop();
            }
            prop_assert_eq!(answers(&s, &probes), before);
        }

        #[test]
        fn adding_constraints_never_restores_sat(
            cs in prop::collection::vec(constraint(), 0..10),
            more in prop::collection::vec(constraint(), 0..5),
        ) {
            let mut a = SolverState::new();
            if a.push(&cs) == PushOutcome::Unsat {
                let mut all = cs.clone();
                all.extend(more);
                prop_assert_eq!(SolverState::new().push(&all), PushOutcome::Unsat);
            }
        }
    }
}
