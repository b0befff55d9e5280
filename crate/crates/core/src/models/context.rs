use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::TypeName;

/// Window size on each side of the hole.
pub const TOKEN_WINDOW: usize = 10;
/// Number of definition sites kept per variable.
pub const MAX_DEF_SITES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeClass {
    IntegerLike,
    FloatLike,
    ArrayLike,
    CollectionLike,
    StringLike,
    Other,
}

impl TypeClass {
    pub const ALL: [TypeClass; 6] = [
        TypeClass::IntegerLike,
        TypeClass::FloatLike,
        TypeClass::ArrayLike,
        TypeClass::CollectionLike,
        TypeClass::StringLike,
        TypeClass::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

const INTEGER: &[&str] = &[
    "byte", "short", "int", "long", "char", "Byte", "Short", "Integer", "Long", "Character",
    "BigInteger", "AtomicInteger", "AtomicLong", "Int",
];
const FLOAT: &[&str] = &["float", "double", "Float", "Double", "BigDecimal"];
const COLLECTION: &[&str] = &[
    "Collection", "List", "ArrayList", "LinkedList", "Set", "HashSet", "TreeSet", "LinkedHashSet",
    "SortedSet", "Map", "HashMap", "TreeMap", "LinkedHashMap", "SortedMap", "Queue", "Deque",
    "ArrayDeque", "PriorityQueue", "Stack", "Vector", "Iterable",
];
const STRING: &[&str] = &["String", "StringBuilder", "StringBuffer", "CharSequence"];

/// The fixed classification table: generic arguments are ignored and any
/// type ending in `[]` is an array.
pub fn classify_type(type_name: &str) -> TypeClass {
    let t = type_name.trim();
    if t.ends_with("[]") {
        return TypeClass::ArrayLike;
    }
    let base = t.split('<').next().unwrap_or(t).trim();
    let base = base.rsplit('.').next().unwrap_or(base);
    if INTEGER.contains(&base) {
        TypeClass::IntegerLike
    } else if FLOAT.contains(&base) {
        TypeClass::FloatLike
    } else if COLLECTION.contains(&base) {
        TypeClass::CollectionLike
    } else if STRING.contains(&base) {
        TypeClass::StringLike
    } else {
        TypeClass::Other
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageCounts {
    #[serde(default)]
    pub in_method: u32,
    #[serde(default)]
    pub in_class: u32,
    #[serde(default)]
    pub in_project: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub name: String,
    pub type_name: TypeName,
    /// Derived from `type_name` when absent from the input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_class: Option<TypeClass>,
    #[serde(default)]
    pub is_final: bool,
    #[serde(default)]
    pub is_static: bool,
    #[serde(default)]
    pub is_loop_index: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_value: Option<String>,
    #[serde(default)]
    pub decl_distance: u32,
    #[serde(default)]
    pub def_sites: Vec<String>,
    #[serde(default)]
    pub usage_counts: UsageCounts,
}

impl VariableInfo {
    pub fn new(name: &str, type_name: &str) -> Self {
        VariableInfo {
            name: name.to_string(),
            type_name: TypeName::new(type_name),
            type_class: Some(classify_type(type_name)),
            is_final: false,
            is_static: false,
            is_loop_index: false,
            init_value: None,
            decl_distance: 0,
            def_sites: Vec::new(),
            usage_counts: UsageCounts::default(),
        }
    }

    pub fn class(&self) -> TypeClass {
        self.type_class
            .unwrap_or_else(|| classify_type(self.type_name.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    #[serde(default)]
    pub package: String,
    #[serde(default)]
    pub class_name: String,
    #[serde(default)]
    pub field_names: Vec<String>,
    #[serde(default)]
    pub field_types: Vec<String>,
    #[serde(default)]
    pub inheritance_depth: u32,
    #[serde(default)]
    pub class_length: u32,
    #[serde(default)]
    pub method_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodInfo {
    #[serde(default)]
    pub name: String,
    #[serde(default = "void")]
    pub return_type: TypeName,
    #[serde(default)]
    pub modifiers: Vec<String>,
    #[serde(default)]
    pub body_lines: u32,
    #[serde(default)]
    pub parameters: Vec<String>,
}

fn void() -> TypeName {
    TypeName::new("void")
}

impl Default for MethodInfo {
    fn default() -> Self {
        MethodInfo {
            name: String::new(),
            return_type: void(),
            modifiers: Vec::new(),
            body_lines: 0,
            parameters: Vec::new(),
        }
    }
}

fn boolean() -> TypeName {
    TypeName::new("Boolean")
}

/// Everything known about the hole being filled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub variables: Vec<VariableInfo>,
    #[serde(default = "boolean")]
    pub result_type: TypeName,
    #[serde(default)]
    pub class_info: ClassInfo,
    #[serde(default)]
    pub method_info: MethodInfo,
    #[serde(default)]
    pub tokens_before: Vec<String>,
    #[serde(default)]
    pub tokens_after: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("variable `{name}` declared as {type_name} but classified {given:?}, expected {expected:?}")]
    TypeClassMismatch {
        name: String,
        type_name: String,
        given: TypeClass,
        expected: TypeClass,
    },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
}

impl Context {
    pub fn simple(variables: Vec<VariableInfo>, result_type: &str) -> Self {
        Context {
            variables,
            result_type: TypeName::new(result_type),
            class_info: ClassInfo::default(),
            method_info: MethodInfo::default(),
            tokens_before: Vec::new(),
            tokens_after: Vec::new(),
        }
    }

    pub fn variable(&self, name: &str) -> Option<&VariableInfo> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Checks the classification table, fills missing type classes, trims
    /// token windows and definition sites.
    pub fn normalize(&mut self) -> Result<(), ContextError> {
        for v in self.variables.iter_mut() {
            let expected = classify_type(v.type_name.as_str());
            match v.type_class {
                Some(given) if given != expected => {
                    return Err(ContextError::TypeClassMismatch {
                        name: v.name.clone(),
                        type_name: v.type_name.to_string(),
                        given,
                        expected,
                    })
                }
                _ => v.type_class = Some(expected),
            }
            v.def_sites.truncate(MAX_DEF_SITES);
        }
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].iter().any(|w| w.name == v.name) {
                return Err(ContextError::DuplicateVariable(v.name.clone()));
            }
        }
        let keep = self.tokens_before.len().saturating_sub(TOKEN_WINDOW);
        self.tokens_before.drain(..keep);
        self.tokens_after.truncate(TOKEN_WINDOW);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_table() {
        assert_eq!(classify_type("int"), TypeClass::IntegerLike);
        assert_eq!(classify_type("long"), TypeClass::IntegerLike);
        assert_eq!(classify_type("double"), TypeClass::FloatLike);
        assert_eq!(classify_type("int[]"), TypeClass::ArrayLike);
        assert_eq!(classify_type("HashMap<String, Integer>"), TypeClass::CollectionLike);
        assert_eq!(classify_type("java.util.List<Foo>"), TypeClass::CollectionLike);
        assert_eq!(classify_type("String"), TypeClass::StringLike);
        assert_eq!(classify_type("Object"), TypeClass::Other);
        assert_eq!(classify_type("boolean"), TypeClass::Other);
    }

    #[test]
    fn minimal_json_context() {
        let ctx: Context =
            serde_json::from_str(r#"{"variables":[{"name":"hours","type_name":"int"}]}"#).unwrap();
        assert_eq!(ctx.result_type.as_str(), "Boolean");
        assert_eq!(ctx.variables[0].class(), TypeClass::IntegerLike);
    }

    #[test]
    fn normalize_checks_table_and_windows() {
        let mut ctx = Context::simple(vec![VariableInfo::new("s", "String")], "Boolean");
        ctx.tokens_before = (0..15).map(|i| i.to_string()).collect();
        ctx.variables[0].def_sites = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        ctx.normalize().unwrap();
        assert_eq!(ctx.tokens_before.first().map(String::as_str), Some("5"));
        assert_eq!(ctx.variables[0].def_sites.len(), 3);
        ctx.variables[0].type_class = Some(TypeClass::FloatLike);
        assert!(matches!(ctx.normalize(), Err(ContextError::TypeClassMismatch { .. })));
    }
}
