use super::{Annotation, AnnotatedAst, Focus};
use crate::grammar::Direction;

/// Chooses which pending node the next step expands. Policies must not
/// consult the probability models, so the same policy can drive training
/// extraction and search.
pub trait NodePolicy: Sync {
    /// `None` once the tree is complete.
    fn select(&self, ast: &AnnotatedAst) -> Option<Focus>;
}

/// Left-to-right, top-down; a `UD` node expands upward first.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeftmostPolicy;

impl NodePolicy for LeftmostPolicy {
    fn select(&self, ast: &AnnotatedAst) -> Option<Focus> {
        if ast.is_empty() {
            return Some(Focus::Create);
        }
        let (id, ann) = *ast.expandable_nodes().first()?;
        let dir = if ann.has(Direction::Up) {
            Direction::Up
        } else {
            Direction::Down
        };
        Some(Focus::Node(id, dir))
    }
}

/// A deterministic but scrambled order: the choice is a hash of the seed
/// and the tree's pending marks.
#[derive(Debug, Clone, Copy)]
pub struct ShuffledPolicy {
    pub seed: u64,
}

fn mix(mut h: u64, v: u64) -> u64 {
    h ^= v.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

impl NodePolicy for ShuffledPolicy {
    fn select(&self, ast: &AnnotatedAst) -> Option<Focus> {
        if ast.is_empty() {
            return Some(Focus::Create);
        }
        let mut options = Vec::new();
        for (id, ann) in ast.expandable_nodes() {
            for dir in [Direction::Up, Direction::Down] {
                if ann.has(dir) {
                    options.push(Focus::Node(id, dir));
                }
            }
        }
        if options.is_empty() {
            return None;
        }
        let mut h = mix(self.seed, ast.len() as u64);
        for f in &options {
            if let Focus::Node(id, dir) = f {
                h = mix(h, (id.0 as u64) << 1 | (*dir == Direction::Up) as u64);
            }
        }
        Some(options[(h % options.len() as u64) as usize])
    }
}

/// Prefers the last pending mark in pre-order.
#[derive(Debug, Clone, Copy, Default)]
pub struct RightmostPolicy;

impl NodePolicy for RightmostPolicy {
    fn select(&self, ast: &AnnotatedAst) -> Option<Focus> {
        if ast.is_empty() {
            return Some(Focus::Create);
        }
        let (id, ann) = *ast.expandable_nodes().last()?;
        let dir = if ann == Annotation::UD || ann == Annotation::D {
            Direction::Down
        } else {
            Direction::Up
        };
        Some(Focus::Node(id, dir))
    }
}
