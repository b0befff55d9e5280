use serde::{Deserialize, Serialize};

use crate::constraints::is_variable_reference;

/// Renderings that look plausible but are usually wrong repairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AntiPattern {
    /// `<var> != null` for a bare variable.
    VarNotNull,
    /// An exact rendering.
    Exact(String),
}

impl AntiPattern {
    pub fn matches(&self, rendered: &str) -> bool {
        match self {
            AntiPattern::VarNotNull => rendered
                .strip_suffix(" != null")
                .is_some_and(is_variable_reference),
            AntiPattern::Exact(s) => s == rendered,
        }
    }
}

/// True when no pattern matches.
pub fn anti_pattern_check(rendered: &str, patterns: &[AntiPattern]) -> bool {
    !patterns.iter().any(|p| p.matches(rendered))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pattern() {
        let d = [AntiPattern::VarNotNull];
        assert!(!anti_pattern_check("obj != null", &d));
        assert!(anti_pattern_check("obj == null", &d));
        assert!(anti_pattern_check("a > b", &d));
        assert!(anti_pattern_check("a.b != null", &d));
        assert!(anti_pattern_check("c[d] != null", &d));
        assert!(anti_pattern_check("obj != null", &[]));
    }
}
